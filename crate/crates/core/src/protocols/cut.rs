//! Adiabatic cutting and gluing of the lattice around the bus, and the
//! post-cut gate with the outer segments retained in the dynamics.
//!
//! The cut/glue dynamics happens on the contiguous lattice (outer-left +
//! bus + outer-right, the qubit sites excluded): local fields on the two
//! outer sites bordering the qubits are ramped up, which drives the bus
//! block into its own ground state while energetically splitting it from
//! the rest. The post-cut gate then runs on the full chain with the fields
//! held, so leakage through the detuned sites is part of the dynamics.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::ffq;
use crate::maps::average_gate_fidelity_matrix;
use crate::mbq;
use crate::model::{
    ideal_gate, transfer_time_estimate, validate_spec, ChainSpec, ControlSchedule, Layout,
    PiecewiseLinear,
};
use crate::protocols::engine::{EngineKind, GateContext};
use crate::{C64, CMat, RMat};

#[derive(Debug, Clone)]
pub struct CutOptions {
    /// Peak field reached by the cut ramp.
    pub delta_e_max: f64,
    /// Duration of the cut ramp; the glue ramp mirrors it.
    pub ramp_duration: f64,
    /// Sample points per phase for the fidelity series.
    pub samples: usize,
    pub engine: EngineKind,
    /// Run a gate after the cut, fields held at the peak value.
    pub post_cut_gate: bool,
    pub cap: usize,
}

impl Default for CutOptions {
    fn default() -> Self {
        CutOptions {
            delta_e_max: 30.0,
            ramp_duration: 100.0,
            samples: 100,
            engine: EngineKind::Auto,
            post_cut_gate: false,
            cap: mbq::SITE_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PostCutGate {
    pub delta_e: f64,
    pub f_gate_tstar: f64,
    pub parity_p: i64,
}

#[derive(Debug, Clone)]
pub struct CutRunResult {
    /// Sample times over both phases (cut on `[0, T]`, glue on `[T, 2T]`).
    pub times: Vec<f64>,
    /// Field value at each sample time.
    pub field: Vec<f64>,
    /// Bus-block ground-state fidelity series.
    pub f_bus_cut: Vec<f64>,
    /// Whole-lattice ground-state fidelity series.
    pub f_glue: Vec<f64>,
    pub post_cut: Option<PostCutGate>,
}

struct ReducedGeometry {
    sites: usize,
    bus: std::ops::Range<usize>,
    cut_left: usize,
    cut_right: usize,
}

fn reduced_geometry(spec: &ChainSpec, layout: &Layout) -> Result<ReducedGeometry> {
    if spec.extra_left == 0 || spec.extra_right == 0 {
        return Err(Error::InvalidSpec(
            "cut experiments need outer segments on both sides".into(),
        ));
    }
    let sites = layout.total - 2;
    let bus = spec.extra_left..spec.extra_left + spec.n_bus;
    Ok(ReducedGeometry { sites, bus: bus.clone(), cut_left: bus.start - 1, cut_right: bus.end })
}

/// Cut the lattice by ramping the boundary fields to `delta_e_max`, then
/// glue it back, tracking bus-block and whole-lattice fidelities.
pub fn run_cut_glue(spec: &ChainSpec, opts: &CutOptions) -> Result<CutRunResult> {
    let layout = validate_spec(spec)?;
    let geo = reduced_geometry(spec, &layout)?;
    let engine = opts.engine.resolve_for_cut(spec, geo.sites, opts.cap)?;
    match engine {
        EngineKind::Ffq => run_cut_glue_ffq(spec, &layout, &geo, opts),
        EngineKind::Mbq => run_cut_glue_mbq(spec, &layout, &geo, opts),
        EngineKind::Auto => unreachable!(),
    }
}

impl EngineKind {
    fn resolve_for_cut(self, spec: &ChainSpec, lattice_sites: usize, cap: usize) -> Result<Self> {
        match self {
            EngineKind::Auto => {
                if spec.lambda == 0.0 {
                    Ok(EngineKind::Ffq)
                } else if lattice_sites + 2 <= cap {
                    Ok(EngineKind::Mbq)
                } else {
                    Err(Error::SizeCap { total: lattice_sites + 2, cap })
                }
            }
            EngineKind::Ffq if spec.lambda != 0.0 => {
                Err(Error::InvalidSpec("ffq requires lambda = 0".into()))
            }
            EngineKind::Mbq if lattice_sites + 2 > cap => {
                Err(Error::SizeCap { total: lattice_sites + 2, cap })
            }
            other => Ok(other),
        }
    }
}

fn ramp_profile(opts: &CutOptions) -> PiecewiseLinear {
    PiecewiseLinear::new(vec![
        (0.0, 0.0),
        (opts.ramp_duration, opts.delta_e_max),
        (2.0 * opts.ramp_duration, 0.0),
    ])
    .expect("valid ramp profile")
}

fn sample_grid(opts: &CutOptions) -> Vec<f64> {
    let per_phase = opts.samples.max(2);
    let total = 2 * per_phase;
    (0..=total)
        .map(|k| 2.0 * opts.ramp_duration * k as f64 / total as f64)
        .collect()
}

// ---------------------------------------------------------------- ffq ----

fn lattice_hamiltonian(geo: &ReducedGeometry, j: f64, field: f64) -> RMat {
    let m = geo.sites;
    let mut h = RMat::zeros(m, m);
    for s in 0..m - 1 {
        h[(s, s + 1)] = 2.0 * j;
        h[(s + 1, s)] = 2.0 * j;
    }
    h[(geo.cut_left, geo.cut_left)] = field;
    h[(geo.cut_right, geo.cut_right)] = field;
    h
}

fn run_cut_glue_ffq(
    spec: &ChainSpec,
    layout: &Layout,
    geo: &ReducedGeometry,
    opts: &CutOptions,
) -> Result<CutRunResult> {
    let profile = ramp_profile(opts);
    let grid = sample_grid(opts);

    // Whole-lattice ground state at zero field.
    let h0 = lattice_hamiltonian(geo, spec.j, 0.0);
    let eig0 = SymmetricEigen::new(h0);
    let occupied: Vec<usize> = {
        let mut order: Vec<usize> = (0..geo.sites).collect();
        order.sort_by(|&a, &b| eig0.eigenvalues[a].total_cmp(&eig0.eigenvalues[b]));
        let negatives: Vec<usize> = order
            .iter()
            .cloned()
            .filter(|&k| eig0.eigenvalues[k] < -1e-9 * spec.j)
            .collect();
        if 2 * negatives.len() != geo.sites {
            return Err(Error::ZeroMode { n: geo.sites });
        }
        negatives
    };
    let gs0 = {
        let mut m = CMat::zeros(geo.sites, occupied.len());
        for (c, &k) in occupied.iter().enumerate() {
            for r in 0..geo.sites {
                m[(r, c)] = C64::new(eig0.eigenvectors[(r, k)], 0.0);
            }
        }
        m
    };

    // Bus-block target (constant: the fields sit outside the bus).
    let n = spec.n_bus;
    let (bus_modes, bus_filled) = {
        let mut block = RMat::zeros(n, n);
        for s in 0..n - 1 {
            block[(s, s + 1)] = 2.0 * spec.j;
            block[(s + 1, s)] = 2.0 * spec.j;
        }
        let eig = SymmetricEigen::new(block);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut modes = RMat::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            modes.set_column(c, &eig.eigenvectors.column(k));
        }
        let filled = order.iter().filter(|&&k| eig.eigenvalues[k] < 0.0).count();
        (modes, filled)
    };

    // Two-pass ramp integration with step halving on the final state.
    let mut dt = 0.01 / spec.j;
    let mut pass = march_ffq(geo, spec.j, &profile, &grid, &gs0, dt)?;
    for _ in 0..6 {
        dt *= 0.5;
        let finer = march_ffq(geo, spec.j, &profile, &grid, &gs0, dt)?;
        let dev = (&finer.final_orbitals - &pass.final_orbitals)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        pass = finer;
        if dev < ffq::STEP_TOL {
            break;
        }
    }

    let mut f_bus_cut = Vec::with_capacity(grid.len());
    let mut f_glue = Vec::with_capacity(grid.len());
    for orbitals in &pass.samples {
        f_bus_cut.push(ffq::block_ground_fidelity(
            orbitals,
            geo.bus.clone(),
            &bus_modes,
            bus_filled,
        ));
        f_glue.push(ffq::whole_chain_overlap(&gs0, orbitals));
    }

    let post_cut = if opts.post_cut_gate {
        let cut_state = &pass.samples[grid.len() / 2];
        Some(post_cut_gate_ffq(spec, layout, geo, cut_state, opts)?)
    } else {
        None
    };

    Ok(CutRunResult {
        field: grid.iter().map(|&t| profile.eval(t)).collect(),
        times: grid,
        f_bus_cut,
        f_glue,
        post_cut,
    })
}

struct FfqMarch {
    samples: Vec<CMat>,
    final_orbitals: CMat,
}

fn march_ffq(
    geo: &ReducedGeometry,
    j: f64,
    profile: &PiecewiseLinear,
    grid: &[f64],
    gs0: &CMat,
    dt: f64,
) -> Result<FfqMarch> {
    let mut orbitals = gs0.clone();
    let mut t_now = 0.0;
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        if t > t_now {
            let steps = ((t - t_now) / dt).ceil().max(1.0) as usize;
            let sub = (t - t_now) / steps as f64;
            for k in 0..steps {
                let tm = t_now + (k as f64 + 0.5) * sub;
                let h = lattice_hamiltonian(geo, j, profile.eval(tm));
                let prop =
                    ffq::StaticPropagator::new(&ffq::SingleParticleHamiltonian { matrix: h });
                orbitals = prop.apply(&orbitals, sub);
            }
            t_now = t;
        }
        samples.push(orbitals.clone());
    }
    Ok(FfqMarch { final_orbitals: orbitals, samples })
}

fn post_cut_gate_ffq(
    spec: &ChainSpec,
    layout: &Layout,
    geo: &ReducedGeometry,
    cut_state: &CMat,
    opts: &CutOptions,
) -> Result<PostCutGate> {
    // Embed the reduced lattice orbitals into the full chain.
    let m = cut_state.ncols();
    let mut embedded = CMat::zeros(layout.total, m);
    for r in 0..geo.sites {
        let full = if r < layout.qubit_a {
            r
        } else if r < geo.bus.end {
            r + 1
        } else {
            r + 2
        };
        for c in 0..m {
            embedded[(full, c)] = cut_state[(r, c)];
        }
    }
    let parity_p = ffq::window_occupation(&embedded, layout.bus.clone()).round() as i64;

    let (cut_l, cut_r) = layout.cut_sites();
    let mut gate_spec = spec.clone();
    gate_spec.cut_fields = vec![
        (cut_l.expect("outer segment"), opts.delta_e_max),
        (cut_r.expect("outer segment"), opts.delta_e_max),
    ];
    let tstar = transfer_time_estimate(spec.n_bus, spec.j);
    let schedule = ControlSchedule::sudden(&gate_spec, tstar);
    let lattice = ffq::BusState {
        layout: layout.clone(),
        orbitals: embedded,
        parity_p,
        energy: f64::NAN,
    };
    let ctx = GateContext::with_ffq_lattice(&gate_spec, schedule, lattice)?;
    let g = ideal_gate(spec.n_bus, parity_p).matrix();
    let map = ctx.maps_at(&[tstar])?.remove(0);
    Ok(PostCutGate {
        delta_e: opts.delta_e_max,
        f_gate_tstar: average_gate_fidelity_matrix(&map, &g),
        parity_p,
    })
}

// ---------------------------------------------------------------- mbq ----

fn mbq_lattice_hamiltonian(geo: &ReducedGeometry, spec: &ChainSpec, field: f64) -> mbq::ManyBodyHamiltonian {
    let m = geo.sites;
    let couplings = vec![(spec.j, spec.lambda * spec.j); m - 1];
    let mut fields = vec![0.0; m];
    fields[geo.cut_left] = field;
    fields[geo.cut_right] = field;
    mbq::ManyBodyHamiltonian::chain(m, &couplings, &fields)
}

fn run_cut_glue_mbq(
    spec: &ChainSpec,
    layout: &Layout,
    geo: &ReducedGeometry,
    opts: &CutOptions,
) -> Result<CutRunResult> {
    let profile = ramp_profile(opts);
    let grid = sample_grid(opts);

    let (gs0, _) = mbq::ground_state(&mbq_lattice_hamiltonian(geo, spec, 0.0))?;
    let (bus_gs, _) = mbq::ground_state(&mbq::bus_block_hamiltonian(spec))?;

    let krylov_opts = mbq::KrylovOptions::default();
    let mut state = gs0.clone();
    let mut t_now = 0.0;
    let mut f_bus_cut = Vec::with_capacity(grid.len());
    let mut f_glue = Vec::with_capacity(grid.len());
    let mut cut_state: Option<mbq::DenseState> = None;
    for (gi, &t) in grid.iter().enumerate() {
        if t > t_now {
            let mut v = state.amplitudes.clone();
            mbq::evolve_ramped_generic(
                &mut v,
                |tm| mbq_lattice_hamiltonian(geo, spec, profile.eval(tm)),
                t_now,
                t,
                spec.j,
                &krylov_opts,
            )?;
            state = mbq::DenseState::new(geo.sites, v);
            t_now = t;
        }
        f_bus_cut.push(mbq::bus_window_fidelity(&state, &bus_gs, geo.bus.clone()));
        f_glue.push(gs0.dot(&state).norm_sqr());
        if gi == grid.len() / 2 {
            cut_state = Some(state.clone());
        }
    }

    let post_cut = if opts.post_cut_gate {
        let lattice = cut_state.expect("midpoint sample");
        let parity_mask = {
            let t = geo.sites;
            let mut mask = 0usize;
            for s in geo.bus.clone() {
                mask |= 1 << (t - 1 - s);
            }
            mask
        };
        let parity_p = if lattice.parity_expectation(parity_mask) > 0.0 { 0 } else { 1 };
        let (cut_l, cut_r) = layout.cut_sites();
        let mut gate_spec = spec.clone();
        gate_spec.cut_fields = vec![
            (cut_l.expect("outer segment"), opts.delta_e_max),
            (cut_r.expect("outer segment"), opts.delta_e_max),
        ];
        let tstar = transfer_time_estimate(spec.n_bus, spec.j);
        let schedule = ControlSchedule::sudden(&gate_spec, tstar);
        let ctx =
            GateContext::with_mbq_lattice(&gate_spec, schedule, lattice, bus_gs, parity_p)?;
        let g = ideal_gate(spec.n_bus, parity_p).matrix();
        let map = ctx.maps_at(&[tstar])?.remove(0);
        Some(PostCutGate {
            delta_e: opts.delta_e_max,
            f_gate_tstar: average_gate_fidelity_matrix(&map, &g),
            parity_p,
        })
    } else {
        None
    };

    Ok(CutRunResult {
        field: grid.iter().map(|&t| profile.eval(t)).collect(),
        times: grid,
        f_bus_cut,
        f_glue,
        post_cut,
    })
}
