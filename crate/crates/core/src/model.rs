//! Problem specifications, control schedules and the ideal-gate phase model.
//!
//! # Conventions
//!
//! Computational `|1>` is spin-down, `|0>` spin-up; site occupation is
//! `n = (1 - sigma_z)/2`, so `|1>` means an occupied fermionic site after
//! Jordan-Wigner. A bond of exchange strength `w` contributes hopping
//! `+2 w` between its two sites in the single-particle matrix, which gives
//! the uniform bus a dispersion `4 J cos k` (bandwidth `8 J`). A local
//! field `dE` on a site enters the single-particle diagonal as `+dE`
//! (positive fields penalize occupation); in spin language this is the term
//! `dE (1 - sigma_z)/2`, an energy splitting `dE` between `|0>` and `|1>`.
//!
//! Phases are reported in `(-pi, pi]` and compared modulo `2 pi`. The
//! bus-state parity integer `p` is always supplied by the engine that
//! prepared the bus (the number of occupied orbitals), never recomputed
//! from `N`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::{C64, CMat};

/// Static geometry and couplings of the qubit-bus-qubit chain.
///
/// Sites are indexed `0..total`. The default geometry is qubit A at `0`,
/// bus at `1..=N`, qubit B at `N+1`. Nonzero `extra_left`/`extra_right`
/// prepend/append outer lattice segments (for the cut experiments), shifting
/// the qubits inward; outer bonds carry the bus exchange `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    /// Bus length N (number of chain sites between the qubits).
    pub n_bus: usize,
    /// Exchange energy J of the bus (energy unit of the problem).
    pub j: f64,
    /// Boundary coupling J0 between each qubit and its bus end.
    pub j0: f64,
    /// Anisotropy lambda multiplying the ZZ part of every bond.
    pub lambda: f64,
    /// Outer lattice segment length to the left of qubit A.
    pub extra_left: usize,
    /// Outer lattice segment length to the right of qubit B.
    pub extra_right: usize,
    /// Static local fields `(site, dE)` used by the cut experiments.
    pub cut_fields: Vec<(usize, f64)>,
}

impl ChainSpec {
    /// Default gate geometry: `N`-site bus, couplings `j`, `j0`, no outer
    /// segments, no fields.
    pub fn new(n_bus: usize, j: f64, j0: f64) -> Self {
        ChainSpec {
            n_bus,
            j,
            j0,
            lambda: 0.0,
            extra_left: 0,
            extra_right: 0,
            cut_fields: Vec::new(),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_outer(mut self, left: usize, right: usize) -> Self {
        self.extra_left = left;
        self.extra_right = right;
        self
    }

    pub fn with_cut_fields(mut self, fields: Vec<(usize, f64)>) -> Self {
        self.cut_fields = fields;
        self
    }

    pub fn total_sites(&self) -> usize {
        self.extra_left + 1 + self.n_bus + 1 + self.extra_right
    }
}

/// Derived index layout of a validated [`ChainSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub total: usize,
    pub qubit_a: usize,
    pub qubit_b: usize,
    pub bus: Range<usize>,
    pub outer_left: Range<usize>,
    pub outer_right: Range<usize>,
}

impl Layout {
    /// Innermost outer-segment sites (adjacent to the qubits) where the cut
    /// fields act; `None` for a segment of length zero.
    pub fn cut_sites(&self) -> (Option<usize>, Option<usize>) {
        let left = (!self.outer_left.is_empty()).then(|| self.outer_left.end - 1);
        let right = (!self.outer_right.is_empty()).then(|| self.outer_right.start);
        (left, right)
    }
}

/// Check all [`ChainSpec`] invariants and derive the site layout.
///
/// Every violated invariant is reported, not just the first.
pub fn validate_spec(spec: &ChainSpec) -> Result<Layout> {
    let mut violations = Vec::new();
    if spec.n_bus < 1 {
        violations.push("n_bus >= 1".to_string());
    }
    if !(spec.j > 0.0) {
        violations.push(format!("j > 0 (got {})", spec.j));
    }
    if !(spec.j0 >= 0.0) {
        violations.push(format!("j0 >= 0 (got {})", spec.j0));
    }
    if !spec.lambda.is_finite() {
        violations.push("lambda finite".to_string());
    }

    let a = spec.extra_left;
    let b = spec.extra_left + spec.n_bus + 1;
    let total = spec.total_sites();
    let layout = Layout {
        total,
        qubit_a: a,
        qubit_b: b,
        bus: a + 1..b,
        outer_left: 0..spec.extra_left,
        outer_right: b + 1..total,
    };

    // Cut fields must sit on the outer-segment sites bordering the qubits.
    let (cut_l, cut_r) = layout.cut_sites();
    for &(site, de) in &spec.cut_fields {
        if Some(site) != cut_l && Some(site) != cut_r {
            violations.push(format!(
                "cut-field site {site} is not an outer boundary site (expected {cut_l:?} or {cut_r:?})"
            ));
        }
        if !de.is_finite() {
            violations.push(format!("cut-field strength at site {site} not finite"));
        }
    }

    if violations.is_empty() {
        Ok(layout)
    } else {
        Err(Error::InvalidSpec(violations.join("; ")))
    }
}

/// Near-optimal boundary coupling `1.05 J N^(-1/6)`.
pub fn optimal_coupling_estimate(n: usize, j: f64) -> f64 {
    1.05 * j * (n as f64).powf(-1.0 / 6.0)
}

/// Arrival-time estimate `(0.25 N + 0.52 N^(1/3))/J`.
pub fn transfer_time_estimate(n: usize, j: f64) -> f64 {
    let n = n as f64;
    (0.25 * n + 0.52 * n.powf(1.0 / 3.0)) / j
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Signed distance between two angles modulo `2 pi`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// The ideal mirror-inverting gate `G|ab> = exp(i phi_ab)|ba>`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealGate {
    /// Transfer phase `alpha_N = pi (N+1)/2`, wrapped.
    pub alpha_n: f64,
    /// Parity exponent of the prepared bus state.
    pub parity_p: i64,
    /// Phases `[phi_00, phi_01, phi_10, phi_11]`, wrapped into `(-pi, pi]`.
    pub phases: [f64; 4],
}

/// Phase model of the gate for a bus of length `n` with parity exponent `p`.
///
/// `phi_00 = 0`, `phi_01 = phi_10 = (p+1) pi - alpha_N`,
/// `phi_11 = pi - 2 alpha_N`, with `alpha_N = pi (N+1)/2`.
pub fn ideal_gate(n: usize, parity_p: i64) -> IdealGate {
    let alpha = PI * (n as f64 + 1.0) / 2.0;
    let phi_sw = (parity_p as f64 + 1.0) * PI - alpha;
    let phi_11 = PI - 2.0 * alpha;
    IdealGate {
        alpha_n: wrap_angle(alpha),
        parity_p,
        phases: [0.0, wrap_angle(phi_sw), wrap_angle(phi_sw), wrap_angle(phi_11)],
    }
}

impl IdealGate {
    /// Gate with explicitly given `alpha` (used for phase-model studies).
    pub fn from_alpha(alpha: f64, parity_p: i64) -> Self {
        let phi_sw = (parity_p as f64 + 1.0) * PI - alpha;
        IdealGate {
            alpha_n: wrap_angle(alpha),
            parity_p,
            phases: [
                0.0,
                wrap_angle(phi_sw),
                wrap_angle(phi_sw),
                wrap_angle(PI - 2.0 * alpha),
            ],
        }
    }

    /// 4x4 unitary in the computational basis `|ab>` (A is the most
    /// significant bit): `G[ba, ab] = exp(i phi_ab)`.
    pub fn matrix(&self) -> CMat {
        let mut g = CMat::zeros(4, 4);
        for a in 0..2usize {
            for b in 0..2usize {
                let input = 2 * a + b;
                let output = 2 * b + a;
                g[(output, input)] = C64::from_polar(1.0, self.phases[input]);
            }
        }
        g
    }
}

/// Piecewise-linear function of time with constant extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    /// Knots `(t, value)` sorted by strictly increasing `t`.
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidSpec("profile needs at least one knot".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSpec("profile knots must have distinct times".into()));
        }
        Ok(PiecewiseLinear { knots })
    }

    /// Constant profile: the degenerate single knot at `t = 0` (a sudden
    /// quench to `value`).
    pub fn constant(value: f64) -> Self {
        PiecewiseLinear { knots: vec![(0.0, value)] }
    }

    /// Linear ramp from `v0` at `t0` to `v1` at `t1`, constant outside.
    pub fn ramp(t0: f64, v0: f64, t1: f64, v1: f64) -> Self {
        PiecewiseLinear { knots: vec![(t0, v0), (t1, v1)] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|&(tk, _)| tk <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// True if the profile is constant on `[t0, t1]`.
    pub fn is_constant_on(&self, t0: f64, t1: f64) -> bool {
        let v = self.eval(t0);
        self.eval(t1) == v
            && self
                .knots
                .iter()
                .filter(|&&(tk, _)| tk > t0 && tk < t1)
                .all(|&(_, vk)| vk == v)
    }

    /// Knot times strictly inside `(t0, t1)`.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.knots
            .iter()
            .map(|&(tk, _)| tk)
            .filter(|&tk| tk > t0 && tk < t1)
            .collect()
    }
}

/// Time profiles for the boundary coupling and the local cut fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    /// J0(t); a sudden quench is `PiecewiseLinear::constant`.
    pub j0_profile: PiecewiseLinear,
    /// Per-site field profiles dE(t).
    pub field_profiles: BTreeMap<usize, PiecewiseLinear>,
    /// Total evolution length the schedule is meant for.
    pub horizon: f64,
}

impl ControlSchedule {
    /// Sudden switch-on of `j0`, fields taken from the spec's static
    /// `cut_fields`.
    pub fn sudden(spec: &ChainSpec, horizon: f64) -> Self {
        let field_profiles = spec
            .cut_fields
            .iter()
            .map(|&(s, de)| (s, PiecewiseLinear::constant(de)))
            .collect();
        ControlSchedule {
            j0_profile: PiecewiseLinear::constant(spec.j0),
            field_profiles,
            horizon,
        }
    }

    /// Linear switch-on of J0 from 0 to `j0` over `[0, tau]`.
    pub fn gradual(spec: &ChainSpec, tau: f64, horizon: f64) -> Self {
        let mut s = Self::sudden(spec, horizon);
        s.j0_profile = if tau > 0.0 {
            PiecewiseLinear::ramp(0.0, 0.0, tau, spec.j0)
        } else {
            PiecewiseLinear::constant(spec.j0)
        };
        s
    }

    pub fn j0_at(&self, t: f64) -> f64 {
        self.j0_profile.eval(t)
    }

    pub fn field_at(&self, site: usize, t: f64) -> f64 {
        self.field_profiles.get(&site).map_or(0.0, |p| p.eval(t))
    }

    /// True if every profile is constant on `[t0, t1]`.
    pub fn is_static_on(&self, t0: f64, t1: f64) -> bool {
        self.j0_profile.is_constant_on(t0, t1)
            && self.field_profiles.values().all(|p| p.is_constant_on(t0, t1))
    }

    /// Ordered knot times of any profile strictly inside `(t0, t1)`.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut ts = self.j0_profile.breakpoints_in(t0, t1);
        for p in self.field_profiles.values() {
            ts.extend(p.breakpoints_in(t0, t1));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_layout() {
        let spec = ChainSpec::new(8, 1.0, 0.742);
        let l = validate_spec(&spec).unwrap();
        assert_eq!(l.total, 10);
        assert_eq!(l.qubit_a, 0);
        assert_eq!(l.qubit_b, 9);
        assert_eq!(l.bus, 1..9);
        assert!(l.outer_left.is_empty() && l.outer_right.is_empty());
    }

    #[test]
    fn rejects_empty_bus() {
        let err = validate_spec(&ChainSpec::new(0, 1.0, 0.5)).unwrap_err();
        assert!(err.to_string().contains("n_bus >= 1"));
    }

    #[test]
    fn outer_segment_layout() {
        let spec = ChainSpec::new(16, 1.0, 0.66).with_outer(5, 5);
        let l = validate_spec(&spec).unwrap();
        assert_eq!(l.total, 28);
        assert_eq!(l.qubit_a, 5);
        assert_eq!(l.qubit_b, 22);
        assert_eq!(l.cut_sites(), (Some(4), Some(23)));
    }

    #[test]
    fn cut_field_site_must_border_qubits() {
        let spec = ChainSpec::new(16, 1.0, 0.66)
            .with_outer(4, 4)
            .with_cut_fields(vec![(2, 30.0)]);
        assert!(validate_spec(&spec).is_err());
        let ok = ChainSpec::new(16, 1.0, 0.66)
            .with_outer(4, 4)
            .with_cut_fields(vec![(3, 30.0), (22, 30.0)]);
        assert!(validate_spec(&ok).is_ok());
    }

    #[test]
    fn coupling_estimate_values() {
        assert!((optimal_coupling_estimate(100, 1.0) - 0.4874).abs() < 5e-4);
        assert!((optimal_coupling_estimate(8, 1.0) - 0.7424).abs() < 5e-4);
        assert!((optimal_coupling_estimate(1, 1.0) - 1.05).abs() < 1e-12);
    }

    #[test]
    fn transfer_time_values() {
        assert!((transfer_time_estimate(100, 1.0) - 27.41).abs() < 5e-3);
        assert!((transfer_time_estimate(8, 1.0) - 3.04).abs() < 5e-3);
        assert!((transfer_time_estimate(16, 1.0) - 5.31).abs() < 5e-3);
    }

    #[test]
    fn estimates_monotone_in_n() {
        for n in 1..200 {
            assert!(optimal_coupling_estimate(n + 1, 1.0) < optimal_coupling_estimate(n, 1.0));
            assert!(transfer_time_estimate(n + 1, 1.0) > transfer_time_estimate(n, 1.0));
        }
    }

    #[test]
    fn gate_phases_even_n() {
        // N = 100, p even: alpha = pi/2 mod 2pi, phi_10 = pi/2, phi_11 = 0.
        let g = ideal_gate(100, 50);
        assert!(angle_distance(g.alpha_n, PI / 2.0) < 1e-9);
        assert!(angle_distance(g.phases[2], PI / 2.0) < 1e-9);
        assert!(angle_distance(g.phases[3], 0.0) < 1e-9);
        let g8 = ideal_gate(8, 4);
        assert!(angle_distance(g8.alpha_n, PI / 2.0) < 1e-9);
        assert!(angle_distance(g8.phases[2], PI / 2.0) < 1e-9);
        assert!(angle_distance(g8.phases[3], 0.0) < 1e-9);
    }

    #[test]
    fn gate_swap_symmetry() {
        for n in 1..40 {
            for p in from_fn_parities() {
                let g = ideal_gate(n, p);
                assert_eq!(g.phases[1], g.phases[2], "phi_01 = phi_10 exactly");
            }
        }
    }

    fn from_fn_parities() -> [i64; 4] {
        [0, 1, 2, 7]
    }

    #[test]
    fn gate_matrix_unitary() {
        for (n, p) in [(1usize, 0i64), (8, 4), (13, 1), (100, 50), (37, 3)] {
            let g = ideal_gate(n, p).matrix();
            let gram = g.adjoint() * &g;
            let eye = CMat::identity(4, 4);
            let dev = (&gram - &eye).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-12, "G not unitary for n={n} p={p}: {dev:e}");
        }
    }

    #[test]
    fn piecewise_linear_eval() {
        let p = PiecewiseLinear::ramp(0.0, 0.0, 2.0, 4.0);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(3.0), 4.0);
        assert!(p.is_constant_on(2.0, 10.0));
        assert!(!p.is_constant_on(0.0, 1.0));

        let c = PiecewiseLinear::constant(0.5);
        assert_eq!(c.eval(-3.0), 0.5);
        assert_eq!(c.eval(7.0), 0.5);
        assert!(c.is_constant_on(-1.0, 100.0));
    }

    #[test]
    fn wrap_angle_range() {
        for k in -10..10 {
            let t = 0.3 + 2.0 * PI * k as f64;
            assert!((wrap_angle(t) - 0.3).abs() < 1e-9);
        }
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }
}
