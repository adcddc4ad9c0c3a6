//! Many-body states of the free-fermion engine: Slater-determinant
//! superpositions over the two-qubit configurations, state preparation,
//! propagation and reduced observables.

use std::ops::Range;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::ffq::single_particle::{
    build_single_particle, schedule_propagator, StaticPropagator,
};
use crate::ffq::slater::{apply_gauge, SlaterDeterminant};
use crate::ffq::words::{qubit_transition_words, sd_matrix_element, word_product};
use crate::model::{validate_spec, ChainSpec, ControlSchedule, Layout};
use crate::{C64, CMat, RMat};

/// Relative threshold (in units of J) below which a single-particle level
/// counts as the odd-chain zero mode.
const ZERO_MODE_TOL: f64 = 1e-9;

/// What to do with the zero-energy orbital of an odd-length uniform bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Refuse to build the state (default: all experiments use even N).
    Reject,
    /// Occupy the zero mode (parity `p` gains one).
    Occupy,
    /// Leave the zero mode empty.
    Empty,
}

/// A fermionic product factor on the non-qubit sites: bus (or bus plus
/// outer lattice) orbitals embedded in the full chain, with the parity
/// integer and energy of the factor.
#[derive(Debug, Clone)]
pub struct BusState {
    pub layout: Layout,
    /// total_sites x m orbital matrix; rows at the qubit sites are zero.
    pub orbitals: CMat,
    /// Occupied-orbital count of the bus window (the gate's parity integer).
    pub parity_p: i64,
    pub energy: f64,
}

impl BusState {
    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }
}

/// Ground state of the decoupled bus: all negative-energy modes of the
/// uniform `N`-site block filled. Odd `N` is rejected (zero mode).
pub fn bus_ground_state(spec: &ChainSpec) -> Result<BusState> {
    bus_ground_state_with(spec, ZeroModePolicy::Reject)
}

pub fn bus_ground_state_with(spec: &ChainSpec, policy: ZeroModePolicy) -> Result<BusState> {
    let layout = validate_spec(spec)?;
    let n = spec.n_bus;
    let mut block = RMat::zeros(n, n);
    for s in 0..n.saturating_sub(1) {
        block[(s, s + 1)] = 2.0 * spec.j;
        block[(s + 1, s)] = 2.0 * spec.j;
    }
    let (orbitals, occupied, energy) = fill_negative_modes(&block, spec.j, policy)?;
    let mut embedded = CMat::zeros(layout.total, occupied);
    embedded
        .view_mut((layout.bus.start, 0), (n, occupied))
        .copy_from(&orbitals.map(|x| C64::new(x, 0.0)));
    Ok(BusState { layout, orbitals: embedded, parity_p: occupied as i64, energy })
}

/// Ground state of the contiguous lattice (outer segments plus bus, the
/// qubit sites excluded) with optional static fields, embedded in the full
/// chain. Used by the cut experiments.
pub fn lattice_ground_state(spec: &ChainSpec, fields: &[(usize, f64)]) -> Result<BusState> {
    let layout = validate_spec(spec)?;
    let lattice_sites: Vec<usize> = (0..layout.total)
        .filter(|&s| s != layout.qubit_a && s != layout.qubit_b)
        .collect();
    let m = lattice_sites.len();
    let mut block = RMat::zeros(m, m);
    for r in 0..m - 1 {
        block[(r, r + 1)] = 2.0 * spec.j;
        block[(r + 1, r)] = 2.0 * spec.j;
    }
    for &(site, de) in fields {
        if let Some(r) = lattice_sites.iter().position(|&s| s == site) {
            block[(r, r)] += de;
        }
    }
    let (orbitals, occupied, energy) = fill_negative_modes(&block, spec.j, ZeroModePolicy::Reject)?;
    let mut embedded = CMat::zeros(layout.total, occupied);
    for (r, &s) in lattice_sites.iter().enumerate() {
        for c in 0..occupied {
            embedded[(s, c)] = C64::new(orbitals[(r, c)], 0.0);
        }
    }
    let p = window_occupation(&embedded, layout.bus.clone()).round() as i64;
    Ok(BusState { layout, orbitals: embedded, parity_p: p, energy })
}

fn fill_negative_modes(
    block: &RMat,
    j: f64,
    policy: ZeroModePolicy,
) -> Result<(RMat, usize, f64)> {
    let n = block.nrows();
    let eig = SymmetricEigen::new(block.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let tol = ZERO_MODE_TOL * j;
    let mut occupied_modes = Vec::new();
    let mut energy = 0.0;
    for &k in &order {
        let w = eig.eigenvalues[k];
        if w < -tol {
            occupied_modes.push(k);
            energy += w;
        } else if w.abs() <= tol {
            match policy {
                ZeroModePolicy::Reject => return Err(Error::ZeroMode { n }),
                ZeroModePolicy::Occupy => occupied_modes.push(k),
                ZeroModePolicy::Empty => {}
            }
        }
    }
    let mut orbitals = RMat::zeros(n, occupied_modes.len());
    for (c, &k) in occupied_modes.iter().enumerate() {
        orbitals.set_column(c, &eig.eigenvectors.column(k));
    }
    Ok((orbitals, occupied_modes.len(), energy))
}

/// Mean fermion number inside a site window.
pub fn window_occupation(orbitals: &CMat, window: Range<usize>) -> f64 {
    let mut acc = 0.0;
    for s in window {
        for c in 0..orbitals.ncols() {
            acc += orbitals[(s, c)].norm_sqr();
        }
    }
    acc
}

/// Superposition of one Slater determinant per two-qubit configuration.
///
/// Terms are indexed by `ab` (A is the most significant bit). Zero-amplitude
/// terms still carry the correctly shaped determinant so the map layer can
/// use them by linearity.
#[derive(Debug, Clone)]
pub struct FermionicSuperposition {
    pub layout: Layout,
    pub amplitudes: [C64; 4],
    pub dets: [SlaterDeterminant; 4],
    pub parity_p: i64,
}

impl FermionicSuperposition {
    /// Total norm `sum |c_ab|^2 <SD_ab|SD_ab>`.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..4 {
            let c2 = self.amplitudes[k].norm_sqr();
            if c2 > 0.0 {
                acc += c2 * self.dets[k].overlap(&self.dets[k]).re;
            }
        }
        acc
    }
}

/// Build the configuration determinant `|a>_A (x) |lattice> (x) |b>_B`.
///
/// Qubit excitations are delta orbitals; the lattice orbitals acquire the
/// Jordan-Wigner string gauge of each applied qubit raising operator (rows
/// below A for `a`, rows above B for `b`), so the determinant equals the
/// exact tensor-product state in the site-ordered convention.
fn configuration_determinant(layout: &Layout, lattice: &CMat, a: bool, b: bool) -> SlaterDeterminant {
    let total = layout.total;
    let mask: Vec<bool> = (0..total)
        .map(|s| (a && s < layout.qubit_a) ^ (b && s > layout.qubit_b))
        .collect();
    let gauged = if mask.iter().any(|&m| m) { apply_gauge(lattice, &mask) } else { lattice.clone() };
    let m = gauged.ncols();
    let cols = m + a as usize + b as usize;
    let mut orb = CMat::zeros(total, cols);
    let mut c = 0;
    if a {
        orb[(layout.qubit_a, c)] = C64::new(1.0, 0.0);
        c += 1;
    }
    orb.view_mut((0, c), (total, m)).copy_from(&gauged);
    c += m;
    if b {
        orb[(layout.qubit_b, c)] = C64::new(1.0, 0.0);
    }
    SlaterDeterminant::new(orb)
}

/// Initial state with two-qubit amplitudes `c` over a shared lattice factor.
pub fn init_state(c: [C64; 4], lattice: &BusState) -> Result<FermionicSuperposition> {
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonNormalized(norm));
    }
    let dets = [
        configuration_determinant(&lattice.layout, &lattice.orbitals, false, false),
        configuration_determinant(&lattice.layout, &lattice.orbitals, false, true),
        configuration_determinant(&lattice.layout, &lattice.orbitals, true, false),
        configuration_determinant(&lattice.layout, &lattice.orbitals, true, true),
    ];
    Ok(FermionicSuperposition {
        layout: lattice.layout.clone(),
        amplitudes: c,
        dets,
        parity_p: lattice.parity_p,
    })
}

/// Propagate every determinant of the superposition from `t0` to `t1`.
pub fn propagate_orbitals(
    state: &FermionicSuperposition,
    spec: &ChainSpec,
    schedule: &ControlSchedule,
    t0: f64,
    t1: f64,
) -> Result<FermionicSuperposition> {
    let mut out = state.clone();
    if t1 == t0 {
        return Ok(out);
    }
    if schedule.is_static_on(t0, t1) {
        let h = build_single_particle(spec, schedule, 0.5 * (t0 + t1))?;
        let prop = StaticPropagator::new(&h);
        for det in &mut out.dets {
            det.orbitals = prop.apply(&det.orbitals, t1 - t0);
        }
    } else {
        let u = schedule_propagator(spec, schedule, t0, t1)?;
        for det in &mut out.dets {
            det.orbitals = &u * &det.orbitals;
        }
    }
    // Drift control: restore column orthonormality, folding the determinant
    // factor into the amplitude.
    for k in 0..4 {
        if out.dets[k].orthonormality_defect() > 1e-10 {
            let factor = out.dets[k].reorthonormalize();
            out.amplitudes[k] *= factor;
        }
    }
    Ok(out)
}

/// Transition tensor between the four configuration determinants:
/// `tensor[l][k][(i, j)] = <SD_l| ferm(|j><i|_A (x) |j><i|_B) |SD_k>`.
///
/// This is the channel tensor of the run (`eps_{ij,kl}` with bus traced
/// out); every input's reduced density matrix is a bilinear contraction of
/// it, so the heavy determinant work is shared across tomography inputs.
pub fn config_transition_tensor(
    layout: &Layout,
    dets: &[SlaterDeterminant; 4],
) -> Result<[[CMat; 4]; 4]> {
    let total = layout.total;
    let (sa, sb) = (layout.qubit_a, layout.qubit_b);
    let mut tensor: [[CMat; 4]; 4] =
        std::array::from_fn(|_| std::array::from_fn(|_| CMat::zeros(4, 4)));
    for i in 0..4usize {
        for j in 0..4usize {
            let (ia, ib) = ((i >> 1) as u8 & 1, i as u8 & 1);
            let (ja, jb) = ((j >> 1) as u8 & 1, j as u8 & 1);
            // <i|rho|j> needs <Psi| (|j><i|_A (x) |j><i|_B) |Psi>.
            let words = word_product(
                &qubit_transition_words(total, sa, ja, ia),
                &qubit_transition_words(total, sb, jb, ib),
            );
            for (l, det_l) in dets.iter().enumerate() {
                for (k, det_k) in dets.iter().enumerate() {
                    let mut elem = C64::new(0.0, 0.0);
                    for w in &words {
                        elem += sd_matrix_element(det_l, w, det_k)?;
                    }
                    tensor[l][k][(i, j)] = elem;
                }
            }
        }
    }
    Ok(tensor)
}

/// Contract the transition tensor with input amplitudes:
/// `rho[i,j] = sum_{l,k} conj(c_l) c_k tensor[l][k][(i,j)]`.
pub fn contract_rdm(tensor: &[[CMat; 4]; 4], c: &[C64; 4]) -> CMat {
    let mut rho = CMat::zeros(4, 4);
    for (l, cl) in c.iter().enumerate() {
        if cl.norm_sqr() == 0.0 {
            continue;
        }
        for (k, ck) in c.iter().enumerate() {
            if ck.norm_sqr() == 0.0 {
                continue;
            }
            let w = cl.conj() * ck;
            for i in 0..4 {
                for j in 0..4 {
                    rho[(i, j)] += w * tensor[l][k][(i, j)];
                }
            }
        }
    }
    rho
}

/// Two-qubit reduced density matrix `<i|rho|j>` in the computational basis.
pub fn two_qubit_rdm(state: &FermionicSuperposition) -> Result<CMat> {
    let tensor = config_transition_tensor(&state.layout, &state.dets)?;
    Ok(contract_rdm(&tensor, &state.amplitudes))
}

/// Fidelity of the bus factor with a reference state:
/// `F_M = sum_q |sum_ab c_ab <ref (x) q | SD_ab>|^2` over the four qubit
/// configurations `q`, each overlap a plain determinant.
pub fn bus_fidelity(state: &FermionicSuperposition, reference: &BusState) -> f64 {
    let mut f = 0.0;
    for q in 0..4usize {
        let (qa, qb) = (q >> 1 == 1, q & 1 == 1);
        let ref_det = configuration_determinant(&reference.layout, &reference.orbitals, qa, qb);
        let mut amp = C64::new(0.0, 0.0);
        for k in 0..4 {
            if state.amplitudes[k].norm_sqr() == 0.0 {
                continue;
            }
            amp += state.amplitudes[k] * ref_det.overlap(&state.dets[k]);
        }
        f += amp.norm_sqr();
    }
    f
}

/// Fidelity `<phi|rho_win|phi>` of the reduced state on a site window with
/// the ground state of a block Hamiltonian, for a single-determinant state.
///
/// `block_modes` is the full orthonormal eigenbasis of the window block
/// (columns ascending in energy), of which the first `occupied` columns are
/// filled in the target. Evaluated by Wick's theorem as one determinant of
/// the window correlation matrix rotated into the mode basis.
pub fn block_ground_fidelity(
    orbitals: &CMat,
    window: Range<usize>,
    block_modes: &RMat,
    occupied: usize,
) -> f64 {
    let win: Vec<usize> = window.collect();
    let w = win.len();
    let phi_win = {
        let mut m = CMat::zeros(w, orbitals.ncols());
        for (r, &s) in win.iter().enumerate() {
            for c in 0..orbitals.ncols() {
                m[(r, c)] = orbitals[(s, c)];
            }
        }
        m
    };
    let corr = &phi_win * phi_win.adjoint();
    let modes_c = block_modes.map(|x| C64::new(x, 0.0));
    let corr_f = modes_c.adjoint() * corr * &modes_c;
    let mut mat = CMat::zeros(w, w);
    for r in 0..w {
        for c in 0..w {
            mat[(r, c)] = if r < occupied {
                corr_f[(r, c)]
            } else {
                let delta = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                delta - corr_f[(r, c)]
            };
        }
    }
    mat.determinant().re.clamp(0.0, 1.0)
}

/// Squared overlap of two single-determinant states on the whole chain.
pub fn whole_chain_overlap(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 0.0;
    }
    SlaterDeterminant::new(a.clone()).overlap(&SlaterDeterminant::new(b.clone())).norm_sqr()
}
