//! Single-particle (hopping-matrix) layer of the free-fermion engine.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::model::{validate_spec, ChainSpec, ControlSchedule};
use crate::{C64, CMat, RMat, RVec};

/// Convergence tolerance for time-stepped propagators (max-norm change on
/// step halving).
pub const STEP_TOL: f64 = 1e-9;

/// Real symmetric hopping matrix of the fermionized chain at a given time.
///
/// Off-diagonal entries are `+2 w` for a bond of exchange `w`; diagonal
/// entries are the local field values.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    pub matrix: RMat,
}

impl SingleParticleHamiltonian {
    pub fn sites(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assemble the hopping matrix from a validated spec and the control values
/// at time `t`.
pub fn build_single_particle(
    spec: &ChainSpec,
    schedule: &ControlSchedule,
    t: f64,
) -> Result<SingleParticleHamiltonian> {
    let layout = validate_spec(spec)?;
    let n = layout.total;
    let j0 = schedule.j0_at(t);
    let mut h = RMat::zeros(n, n);
    for s in 0..n - 1 {
        let boundary = s == layout.qubit_a || s + 1 == layout.qubit_b;
        let w = if boundary { j0 } else { spec.j };
        h[(s, s + 1)] = 2.0 * w;
        h[(s + 1, s)] = 2.0 * w;
    }
    for s in 0..n {
        h[(s, s)] = schedule.field_at(s, t);
    }
    Ok(SingleParticleHamiltonian { matrix: h })
}

/// Eigendecomposition of a hopping matrix: `h = modes * diag(omegas) * modes^T`,
/// eigenvalues ascending, eigenvector columns orthonormal.
#[derive(Debug, Clone)]
pub struct SingleParticleEigensystem {
    pub omegas: RVec,
    pub modes: RMat,
}

pub fn eigensystem(h: &SingleParticleHamiltonian) -> SingleParticleEigensystem {
    let eig = SymmetricEigen::new(h.matrix.clone());
    let n = h.sites();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let omegas = RVec::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut modes = RMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        modes.set_column(col, &eig.eigenvectors.column(k));
    }
    SingleParticleEigensystem { omegas, modes }
}

/// Propagator for a time segment on which the chain is static.
#[derive(Debug, Clone)]
pub struct StaticPropagator {
    eig: SingleParticleEigensystem,
}

impl StaticPropagator {
    pub fn new(h: &SingleParticleHamiltonian) -> Self {
        StaticPropagator { eig: eigensystem(h) }
    }

    pub fn from_eigensystem(eig: SingleParticleEigensystem) -> Self {
        StaticPropagator { eig }
    }

    pub fn eigensystem(&self) -> &SingleParticleEigensystem {
        &self.eig
    }

    /// `exp(-i h dt)` as a dense complex matrix.
    pub fn matrix(&self, dt: f64) -> CMat {
        let n = self.eig.omegas.len();
        let modes_c = self.eig.modes.map(|x| C64::new(x, 0.0));
        let mut phased = modes_c.clone();
        for k in 0..n {
            let phase = C64::from_polar(1.0, -self.eig.omegas[k] * dt);
            for r in 0..n {
                phased[(r, k)] *= phase;
            }
        }
        phased * modes_c.transpose()
    }

    /// Apply `exp(-i h dt)` to a block of orbital columns.
    pub fn apply(&self, orbitals: &CMat, dt: f64) -> CMat {
        let n = self.eig.omegas.len();
        let mut w = self.eig.modes.transpose().map(|x| C64::new(x, 0.0)) * orbitals;
        for k in 0..n {
            let phase = C64::from_polar(1.0, -self.eig.omegas[k] * dt);
            for c in 0..w.ncols() {
                w[(k, c)] *= phase;
            }
        }
        self.eig.modes.map(|x| C64::new(x, 0.0)) * w
    }

    /// Matrix element `exp(-i h t)[row, col]`.
    pub fn element(&self, row: usize, col: usize, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.eig.omegas.len() {
            acc += C64::from_polar(
                self.eig.modes[(row, k)] * self.eig.modes[(col, k)],
                -self.eig.omegas[k] * t,
            );
        }
        acc
    }
}

/// End-to-end transmission amplitude `exp(-i h t)[B, A]` for a static chain
/// with boundary coupling `j0`.
pub fn transfer_amplitude(spec: &ChainSpec, j0: f64, t: f64) -> Result<C64> {
    let mut s = spec.clone();
    s.j0 = j0;
    let layout = validate_spec(&s)?;
    let schedule = ControlSchedule::sudden(&s, t);
    let h = build_single_particle(&s, &schedule, 0.0)?;
    let prop = StaticPropagator::new(&h);
    Ok(prop.element(layout.qubit_b, layout.qubit_a, t))
}

/// Full single-particle propagator `U(t1, t0)` for an arbitrary schedule.
///
/// Static stretches use one eigendecomposition; ramped stretches use
/// midpoint-exponential steps, halving the step until the propagator changes
/// by less than `STEP_TOL` in max norm.
pub fn schedule_propagator(
    spec: &ChainSpec,
    schedule: &ControlSchedule,
    t0: f64,
    t1: f64,
) -> Result<CMat> {
    if t1 < t0 {
        return Err(Error::InvalidSpec(format!("propagation needs t1 >= t0 (got {t0} > {t1})")));
    }
    let layout = validate_spec(spec)?;
    let n = layout.total;
    if t1 == t0 {
        return Ok(CMat::identity(n, n));
    }
    let mut cuts = vec![t0];
    cuts.extend(schedule.breakpoints_in(t0, t1));
    cuts.push(t1);

    let mut u = CMat::identity(n, n);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg = if schedule.is_static_on(a, b) {
            let h = build_single_particle(spec, schedule, 0.5 * (a + b))?;
            StaticPropagator::new(&h).matrix(b - a)
        } else {
            ramp_propagator(spec, schedule, a, b)?
        };
        u = seg * u;
    }
    Ok(u)
}

/// Midpoint-exponential stepping over `[a, b]` with step halving.
fn ramp_propagator(spec: &ChainSpec, schedule: &ControlSchedule, a: f64, b: f64) -> Result<CMat> {
    let base_dt = 0.01 / spec.j;
    let mut steps = ((b - a) / base_dt).ceil().max(1.0) as usize;
    let mut prev = stepped_propagator(spec, schedule, a, b, steps)?;
    for _ in 0..8 {
        steps *= 2;
        let next = stepped_propagator(spec, schedule, a, b, steps)?;
        let dev = (&next - &prev).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev < STEP_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Convergence {
        what: "ramp propagator step halving",
        detail: format!("no convergence below {STEP_TOL:.1e} on [{a}, {b}]"),
    })
}

fn stepped_propagator(
    spec: &ChainSpec,
    schedule: &ControlSchedule,
    a: f64,
    b: f64,
    steps: usize,
) -> Result<CMat> {
    let n = spec.total_sites();
    let dt = (b - a) / steps as f64;
    let mut u = CMat::identity(n, n);
    for k in 0..steps {
        let tm = a + (k as f64 + 0.5) * dt;
        let h = build_single_particle(spec, schedule, tm)?;
        u = StaticPropagator::new(&h).matrix(dt) * u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PiecewiseLinear;

    fn unit_spec(n: usize, j0: f64) -> ChainSpec {
        ChainSpec::new(n, 1.0, j0)
    }

    #[test]
    fn tridiagonal_structure() {
        let spec = unit_spec(2, 1.0);
        let schedule = ControlSchedule::sudden(&spec, 1.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        assert_eq!(h.sites(), 4);
        for s in 0..3 {
            assert_eq!(h.matrix[(s, s + 1)], 2.0);
            assert_eq!(h.matrix[(s + 1, s)], 2.0);
        }
        assert_eq!(h.matrix[(0, 2)], 0.0);
        assert_eq!(h.matrix.diagonal().amax(), 0.0);
    }

    #[test]
    fn switched_off_coupling_decouples_qubits() {
        let spec = unit_spec(2, 0.0);
        let schedule = ControlSchedule::sudden(&spec, 1.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        assert_eq!(h.matrix.row(0).amax(), 0.0);
        assert_eq!(h.matrix.row(3).amax(), 0.0);
        assert_eq!(h.matrix[(1, 2)], 2.0);
    }

    #[test]
    fn cut_field_lands_on_diagonal() {
        let spec = unit_spec(8, 0.74)
            .with_outer(2, 2)
            .with_cut_fields(vec![(1, 30.0), (12, 30.0)]);
        let schedule = ControlSchedule::sudden(&spec, 1.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        assert_eq!(h.matrix[(1, 1)], 30.0);
        assert_eq!(h.matrix[(12, 12)], 30.0);
        assert_eq!(h.matrix[(0, 0)], 0.0);
    }

    #[test]
    fn eigensystem_reconstructs_and_is_orthonormal() {
        let spec = unit_spec(8, 0.74);
        let schedule = ControlSchedule::sudden(&spec, 1.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        let eig = eigensystem(&h);
        let rebuilt = &eig.modes * RMat::from_diagonal(&eig.omegas) * eig.modes.transpose();
        let dev = (&rebuilt - &h.matrix).amax();
        assert!(dev < 1e-10, "reconstruction residual {dev:e}");
        let gram = eig.modes.transpose() * &eig.modes;
        let dev = (&gram - RMat::identity(10, 10)).amax();
        assert!(dev < 1e-12, "orthonormality residual {dev:e}");
    }

    #[test]
    fn uniform_bus_bandwidth_is_8j() {
        // Dispersion 4J cos k under the +2w hopping convention.
        let spec = unit_spec(64, 1.0);
        let schedule = ControlSchedule::sudden(&spec, 1.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        let bus = h.matrix.view((1, 1), (64, 64)).into_owned();
        let eig = SymmetricEigen::new(bus);
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        assert!(lo > -4.0 && lo < -3.9);
        assert!(hi < 4.0 && hi > 3.9);
    }

    #[test]
    fn three_site_transfer_closed_form() {
        // N=1 bus with J0=J: eigenvalues {0, +-2 sqrt(2) J} and
        // U[2,0](t) = (cos(2 sqrt(2) J t) - 1)/2.
        let spec = unit_spec(1, 1.0);
        let schedule = ControlSchedule::sudden(&spec, 10.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        let eig = eigensystem(&h);
        let s8 = 8.0_f64.sqrt();
        assert!((eig.omegas[0] + s8).abs() < 1e-12);
        assert!(eig.omegas[1].abs() < 1e-12);
        assert!((eig.omegas[2] - s8).abs() < 1e-12);
        for &t in &[0.3, 0.9, 1.7, std::f64::consts::PI / s8] {
            let expect = C64::new(((s8 * t).cos() - 1.0) / 2.0, 0.0);
            let got = transfer_amplitude(&spec, 1.0, t).unwrap();
            assert!((got - expect).norm() < 1e-12, "t={t}: {got} vs {expect}");
        }
        // Full transfer at t = pi / (2 sqrt(2) J), with amplitude -1.
        let tstar = std::f64::consts::PI / s8;
        let amp = transfer_amplitude(&spec, 1.0, tstar).unwrap();
        assert!((amp.norm() - 1.0).abs() < 1e-12);
        assert!((amp - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn transfer_amplitude_zero_time_and_mirror() {
        let spec = unit_spec(6, 0.8);
        let amp0 = transfer_amplitude(&spec, 0.8, 0.0).unwrap();
        assert!(amp0.norm() < 1e-14);
        // Mirror symmetry: U[B,A] = U[A,B] for the reflection-symmetric chain.
        let schedule = ControlSchedule::sudden(&spec, 5.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        let prop = StaticPropagator::new(&h);
        let ba = prop.element(7, 0, 3.1);
        let ab = prop.element(0, 7, 3.1);
        assert!((ba - ab).norm() < 1e-12);
    }

    #[test]
    fn propagator_unitary_at_long_times() {
        let spec = unit_spec(10, 0.61);
        let schedule = ControlSchedule::sudden(&spec, 50.0);
        let h = build_single_particle(&spec, &schedule, 0.0).unwrap();
        let u = StaticPropagator::new(&h).matrix(50.0);
        let gram = u.adjoint() * &u;
        let dev = (&gram - CMat::identity(12, 12)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "unitarity deviation {dev:e}");
    }

    #[test]
    fn ramp_propagator_matches_static_when_profile_flat() {
        let spec = unit_spec(4, 0.9);
        let schedule = ControlSchedule::sudden(&spec, 2.0);
        let u_static = schedule_propagator(&spec, &schedule, 0.0, 2.0).unwrap();
        let u_stepped = stepped_propagator(&spec, &schedule, 0.0, 2.0, 200).unwrap();
        let dev = (&u_static - &u_stepped).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "static vs stepped deviation {dev:e}");
    }

    #[test]
    fn ramp_propagator_converges() {
        let mut spec = unit_spec(4, 0.9);
        spec.j0 = 0.9;
        let mut schedule = ControlSchedule::sudden(&spec, 3.0);
        schedule.j0_profile = PiecewiseLinear::ramp(0.0, 0.0, 1.5, 0.9);
        let u = schedule_propagator(&spec, &schedule, 0.0, 3.0).unwrap();
        let n = spec.total_sites();
        let gram = u.adjoint() * &u;
        let dev = (&gram - CMat::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "ramp unitarity deviation {dev:e}");
    }
}
