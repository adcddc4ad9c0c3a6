//! Full state vectors of the dense engine and their reduced observables.

use crate::error::{Error, Result};
use crate::model::Layout;
use crate::{C64, CMat};

/// Complex amplitude vector over the `2^n_sites` spin basis.
///
/// Site 0 is the most significant bit; bit value 1 is `|1>` (occupied).
#[derive(Debug, Clone)]
pub struct DenseState {
    pub n_sites: usize,
    pub amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn new(n_sites: usize, amplitudes: Vec<C64>) -> Self {
        assert_eq!(amplitudes.len(), 1usize << n_sites);
        DenseState { n_sites, amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DenseState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.amplitudes {
                *z /= n;
            }
        }
    }

    /// Expectation of the total magnetization `sum_s sigma_z^s`.
    pub fn magnetization(&self) -> f64 {
        let n = self.n_sites as f64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, z)| z.norm_sqr() * (n - 2.0 * (b as u64).count_ones() as f64))
            .sum()
    }

    /// Expectation of `prod_{s in window} (-sigma_z^s)` for a contiguous
    /// site window given as a bit mask.
    pub fn parity_expectation(&self, site_mask: usize) -> f64 {
        let total_masked = (site_mask as u64).count_ones();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, z)| {
                let occ = ((b & site_mask) as u64).count_ones();
                let sign = if (total_masked - occ) % 2 == 0 { 1.0 } else { -1.0 };
                z.norm_sqr() * sign
            })
            .sum()
    }
}

/// Basis state from a configuration word (site 0 = most significant bit).
pub fn basis_state(n_sites: usize, config: usize) -> DenseState {
    let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_sites];
    amplitudes[config] = C64::new(1.0, 0.0);
    DenseState { n_sites, amplitudes }
}

fn qubit_shifts(layout: &Layout) -> (usize, usize) {
    let t = layout.total;
    (t - 1 - layout.qubit_a, t - 1 - layout.qubit_b)
}

/// Insert the two qubit bits into a lattice-only configuration.
///
/// `lattice_bits` indexes the `total - 2` non-qubit sites in site order.
fn splice_config(layout: &Layout, lattice_bits: usize, a: usize, b: usize) -> usize {
    let t = layout.total;
    let m = t - 2;
    let mut full = 0usize;
    let mut lat_pos = 0usize;
    for site in 0..t {
        let bit = if site == layout.qubit_a {
            a
        } else if site == layout.qubit_b {
            b
        } else {
            lat_pos += 1;
            (lattice_bits >> (m - lat_pos)) & 1
        };
        full |= bit << (t - 1 - site);
    }
    full
}

/// `sum_ab c_ab |a>_A (x) |lattice> (x) |b>_B` on the full chain.
pub fn init_dense(c: [C64; 4], lattice: &DenseState, layout: &Layout) -> Result<DenseState> {
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonNormalized(norm));
    }
    assert_eq!(lattice.n_sites, layout.total - 2, "lattice factor covers the non-qubit sites");
    let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << layout.total];
    for (l, amp) in lattice.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        for (k, ck) in c.iter().enumerate() {
            if ck.norm_sqr() == 0.0 {
                continue;
            }
            let full = splice_config(layout, l, k >> 1, k & 1);
            amplitudes[full] += ck * amp;
        }
    }
    Ok(DenseState { n_sites: layout.total, amplitudes })
}

/// Partial trace onto the two qubits: 4x4 matrix `<i|rho|j>`.
pub fn reduced_two_qubit(state: &DenseState, layout: &Layout) -> CMat {
    let (sa, sb) = qubit_shifts(layout);
    let mut rho = CMat::zeros(4, 4);
    for (b, z) in state.amplitudes.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let i = ((b >> sa) & 1) * 2 + ((b >> sb) & 1);
        let base = b & !((1 << sa) | (1 << sb));
        for j in 0..4usize {
            let bj = base | ((j >> 1) << sa) | ((j & 1) << sb);
            rho[(i, j)] += z * state.amplitudes[bj].conj();
        }
    }
    rho
}

/// `<ref| rho_bus |ref>`: overlap fidelity of the bus reduced state with a
/// bus-only reference state (dimension `2^N`).
pub fn bus_overlap_fidelity(state: &DenseState, reference: &DenseState, layout: &Layout) -> f64 {
    bus_window_fidelity(state, reference, layout.bus.clone())
}

/// Same, with the bus given as an explicit contiguous site window.
pub fn bus_window_fidelity(
    state: &DenseState,
    reference: &DenseState,
    window: std::ops::Range<usize>,
) -> f64 {
    let t = state.n_sites;
    let n = window.len();
    assert_eq!(reference.n_sites, n);
    let low_width = t - window.end;
    let low_mask = (1usize << low_width) - 1;
    let bus_mask = (1usize << n) - 1;
    let env_dim = 1usize << (t - n);
    let mut acc = vec![C64::new(0.0, 0.0); env_dim];
    for (b, z) in state.amplitudes.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let m = (b >> low_width) & bus_mask;
        let e = ((b >> (low_width + n)) << low_width) | (b & low_mask);
        acc[e] += reference.amplitudes[m].conj() * z;
    }
    acc.iter().map(|z| z.norm_sqr()).sum()
}
