//! Slater determinants as orbital matrices.

use crate::{C64, CMat};

/// Antisymmetrized product state of single-particle orbitals.
///
/// `orbitals` is sites x particles; the represented state is the ordered
/// product of the column creation operators applied to the vacuum. Columns
/// stay orthonormal to ~1e-10 under propagation and are re-orthonormalized
/// periodically during stepped evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterDeterminant {
    pub orbitals: CMat,
}

impl SlaterDeterminant {
    pub fn new(orbitals: CMat) -> Self {
        SlaterDeterminant { orbitals }
    }

    pub fn sites(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }

    /// `<self|other>` = det of the column-overlap matrix; zero when particle
    /// numbers differ.
    pub fn overlap(&self, other: &SlaterDeterminant) -> C64 {
        if self.particles() != other.particles() {
            return C64::new(0.0, 0.0);
        }
        det(&(self.orbitals.adjoint() * &other.orbitals))
    }

    /// Replace the orbitals by an orthonormal set spanning the same space,
    /// returning the determinant factor the state picked up (to be absorbed
    /// into the superposition amplitude).
    pub fn reorthonormalize(&mut self) -> C64 {
        if self.particles() == 0 {
            return C64::new(1.0, 0.0);
        }
        let qr = self.orbitals.clone().qr();
        let r = qr.r();
        let factor = (0..r.nrows().min(r.ncols())).map(|k| r[(k, k)]).product();
        self.orbitals = qr.q();
        factor
    }

    /// Max deviation of the column Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.particles();
        if m == 0 {
            return 0.0;
        }
        let gram = self.orbitals.adjoint() * &self.orbitals;
        let mut dev: f64 = 0.0;
        for r in 0..m {
            for c in 0..m {
                let expect = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((gram[(r, c)] - expect).norm());
            }
        }
        dev
    }
}

/// Determinant with the 0x0 convention `det([]) = 1`.
pub(crate) fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        C64::new(1.0, 0.0)
    } else {
        m.determinant()
    }
}

/// Flip the sign of the orbital rows selected by `mask`.
pub fn apply_gauge(orbitals: &CMat, mask: &[bool]) -> CMat {
    let mut out = orbitals.clone();
    for (row, &flip) in mask.iter().enumerate() {
        if flip {
            for c in 0..out.ncols() {
                out[(row, c)] = -out[(row, c)];
            }
        }
    }
    out
}

/// Unit column at `site`.
pub(crate) fn delta_column(sites: usize, site: usize) -> CMat {
    let mut col = CMat::zeros(sites, 1);
    col[(site, 0)] = C64::new(1.0, 0.0);
    col
}

/// Concatenate delta columns (in order) followed by the orbital block.
pub(crate) fn augment(prepends: &[usize], orbitals: &CMat) -> CMat {
    let sites = orbitals.nrows();
    let extra = prepends.len();
    let mut out = CMat::zeros(sites, extra + orbitals.ncols());
    for (k, &site) in prepends.iter().enumerate() {
        out[(site, k)] = C64::new(1.0, 0.0);
    }
    out.view_mut((0, extra), (sites, orbitals.ncols())).copy_from(orbitals);
    out
}
