//! Restarted Lanczos ground-state solver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mbq::dense_state::DenseState;
use crate::mbq::hamiltonian::ManyBodyHamiltonian;
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension per restart.
    pub krylov_dim: usize,
    /// Residual target `|H x - E x|`.
    pub tolerance: f64,
    /// Maximum number of restarts.
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { krylov_dim: 40, tolerance: 1e-10, max_restarts: 400 }
    }
}

/// Lowest eigenpair of the Hamiltonian.
///
/// Starts from a fixed pseudo-random vector (runs are reproducible), builds
/// a fully reorthogonalized Lanczos basis and restarts from the Ritz vector
/// until the residual drops below tolerance.
pub fn ground_state(h: &ManyBodyHamiltonian) -> Result<(DenseState, f64)> {
    ground_state_with(h, LanczosOptions::default())
}

pub fn ground_state_with(
    h: &ManyBodyHamiltonian,
    opts: LanczosOptions,
) -> Result<(DenseState, f64)> {
    let dim = h.dim();
    let mut x = seed_vector(dim);
    normalize(&mut x);
    let mut energy = 0.0;

    for _ in 0..opts.max_restarts {
        let (ritz, e) = lanczos_pass(h, &x, opts.krylov_dim.min(dim));
        x = ritz;
        energy = e;
        let residual = residual_norm(h, &x, energy);
        if residual < opts.tolerance {
            let mut state = DenseState::new(h.n_sites(), x);
            state.normalize();
            return Ok((state, energy));
        }
    }
    Err(Error::Convergence {
        what: "Lanczos ground state",
        detail: format!(
            "residual above {:.1e} after {} restarts (E = {energy})",
            opts.tolerance, opts.max_restarts
        ),
    })
}

fn lanczos_pass(h: &ManyBodyHamiltonian, start: &[C64], m: usize) -> (Vec<C64>, f64) {
    let dim = h.dim();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);

    let mut v = start.to_vec();
    normalize(&mut v);
    basis.push(v);

    for j in 0..m {
        let mut w = h.apply_alloc(&basis[j]);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        axpy(&mut w, -C64::new(alpha, 0.0), &basis[j]);
        if j > 0 {
            let beta_prev = betas[j - 1];
            axpy(&mut w, -C64::new(beta_prev, 0.0), &basis[j - 1]);
        }
        // Full reorthogonalization (twice against the whole basis).
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let beta = norm(&w);
        if beta < 1e-13 || j + 1 == m {
            break;
        }
        betas.push(beta);
        scale(&mut w, 1.0 / beta);
        basis.push(w);
    }

    let k = alphas.len().min(basis.len());
    let mut tri = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(tri);
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut ritz = vec![C64::new(0.0, 0.0); dim];
    for (i, b) in basis.iter().take(k).enumerate() {
        let c = C64::new(eig.eigenvectors[(i, best)], 0.0);
        axpy(&mut ritz, c, b);
    }
    normalize(&mut ritz);
    (ritz, eig.eigenvalues[best])
}

fn residual_norm(h: &ManyBodyHamiltonian, x: &[C64], e: f64) -> f64 {
    let mut r = h.apply_alloc(x);
    axpy(&mut r, -C64::new(e, 0.0), x);
    norm(&r)
}

fn seed_vector(dim: usize) -> Vec<C64> {
    // splitmix64 stream; fixed seed so reruns are bit-identical.
    let mut s = 0x5eed_cafe_f00d_u64;
    let mut next = move || {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z as f64 / u64::MAX as f64) - 0.5
    };
    (0..dim).map(|_| C64::new(next(), next())).collect()
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yk, xk) in y.iter_mut().zip(x) {
        *yk += a * xk;
    }
}

pub(crate) fn scale(y: &mut [C64], s: f64) {
    for yk in y.iter_mut() {
        *yk *= s;
    }
}

fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        scale(v, 1.0 / n);
    }
}
