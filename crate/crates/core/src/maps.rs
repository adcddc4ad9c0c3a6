//! Two-qubit process maps, average gate fidelity and entanglement measures.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::model::IdealGate;
use crate::{C64, CMat};

/// Tolerance on trace preservation beyond which map assembly aborts.
pub const TP_ABORT: f64 = 1e-6;
/// Most negative admissible Choi eigenvalue.
pub const CP_FLOOR: f64 = -1e-8;

/// The two-qubit channel tensor `eps[i][j][k][l] = <i| E[|k><l|] |j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap {
    pub tensor: [[[[C64; 4]; 4]; 4]; 4],
    /// Time the map was sampled at.
    pub time: f64,
    /// Engine and scenario the map came from.
    pub provenance: String,
}

impl ProcessMap {
    pub fn identity() -> Self {
        let mut tensor = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                tensor[i][j][i][j] = C64::new(1.0, 0.0);
            }
        }
        ProcessMap { tensor, time: 0.0, provenance: "identity".into() }
    }

    /// Fully depolarizing channel `E[rho] = tr(rho) I/4`.
    pub fn depolarizing() -> Self {
        let mut tensor = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                tensor[i][i][k][k] = C64::new(0.25, 0.0);
            }
        }
        ProcessMap { tensor, time: 0.0, provenance: "depolarizing".into() }
    }

    /// Apply the channel to a density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..4 {
                    for l in 0..4 {
                        acc += self.tensor[i][j][k][l] * rho[(k, l)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Channel composition `self after other`.
    pub fn compose(&self, other: &ProcessMap) -> ProcessMap {
        let mut tensor = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let mut acc = C64::new(0.0, 0.0);
                        for m in 0..4 {
                            for n in 0..4 {
                                acc += self.tensor[i][j][m][n] * other.tensor[m][n][k][l];
                            }
                        }
                        tensor[i][j][k][l] = acc;
                    }
                }
            }
        }
        ProcessMap {
            tensor,
            time: self.time + other.time,
            provenance: format!("({}) o ({})", self.provenance, other.provenance),
        }
    }

    /// Choi matrix `C[(i,k),(j,l)] = eps_{ij,kl}` (16 x 16, Hermitian for a
    /// Hermiticity-preserving map).
    pub fn choi(&self) -> CMat {
        let mut c = CMat::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        c[(4 * i + k, 4 * j + l)] = self.tensor[i][j][k][l];
                    }
                }
            }
        }
        c
    }

    /// Max |eps_{ij,kl} - conj(eps_{ji,lk})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let d = self.tensor[i][j][k][l] - self.tensor[j][i][l][k].conj();
                        dev = dev.max(d.norm());
                    }
                }
            }
        }
        dev
    }

    /// Max |sum_i eps_{ii,kl} - delta_kl|.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for k in 0..4 {
            for l in 0..4 {
                let mut tr = C64::new(0.0, 0.0);
                for i in 0..4 {
                    tr += self.tensor[i][i][k][l];
                }
                let expect = if k == l { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((tr - expect).norm());
            }
        }
        dev
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        let choi = self.choi();
        // Symmetrize against roundoff before the Hermitian solve.
        let herm = (choi.clone() + choi.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Abort-on-violation checks: trace preservation within [`TP_ABORT`] and
    /// Choi eigenvalues above [`CP_FLOOR`].
    pub fn validate(&self) -> Result<()> {
        let tp = self.trace_preservation_defect();
        if tp > TP_ABORT {
            return Err(Error::TracePreservation(tp));
        }
        let cp = self.choi_min_eigenvalue();
        if cp < CP_FLOOR {
            return Err(Error::CompletePositivity(cp));
        }
        Ok(())
    }
}

/// Channel of a 4x4 unitary: `eps_{ij,kl} = U_ik conj(U_jl)`.
pub fn unitary_channel(u: &CMat) -> Result<ProcessMap> {
    let gram = u.adjoint() * u;
    let dev = (&gram - CMat::identity(4, 4)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::InvalidSpec(format!("unitary_channel input not unitary ({dev:e})")));
    }
    let mut tensor = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    tensor[i][j][k][l] = u[(i, k)] * u[(j, l)].conj();
                }
            }
        }
    }
    Ok(ProcessMap { tensor, time: 0.0, provenance: "unitary".into() })
}

/// One pure tomography input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyInput {
    pub amplitudes: [C64; 4],
}

/// The 16 pure input states of linear process tomography: the four basis
/// projectors, then `(|k>+|l>)/sqrt2` and `(|k>+i|l>)/sqrt2` for each pair
/// `k < l`.
pub fn tomography_inputs() -> Vec<TomographyInput> {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i_unit = C64::new(0.0, 1.0);
    let mut states = Vec::with_capacity(16);
    for k in 0..4 {
        let mut c = [zero; 4];
        c[k] = one;
        states.push(TomographyInput { amplitudes: c });
    }
    for k in 0..4 {
        for l in (k + 1)..4 {
            let mut u = [zero; 4];
            u[k] = s;
            u[l] = s;
            states.push(TomographyInput { amplitudes: u });
            let mut v = [zero; 4];
            v[k] = s;
            v[l] = s * i_unit;
            states.push(TomographyInput { amplitudes: v });
        }
    }
    states
}

/// Rebuild the channel tensor from the 16 evolved outputs of
/// [`tomography_inputs`], in order, via the linearity identity
/// `E[|k><l|] = E(u) + i E(v) - (1+i)/2 (E(P_k) + E(P_l))`.
pub fn assemble_process_map(outputs: &[CMat], time: f64, provenance: &str) -> Result<ProcessMap> {
    assert_eq!(outputs.len(), 16, "one output per tomography input");
    let mut tensor = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
    let half = C64::new(0.5, 0.0);
    let i_unit = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);

    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                tensor[i][j][k][k] = outputs[k][(i, j)];
            }
        }
    }
    let mut pair = 0usize;
    for k in 0..4 {
        for l in (k + 1)..4 {
            let eu = &outputs[4 + 2 * pair];
            let ev = &outputs[5 + 2 * pair];
            for i in 0..4 {
                for j in 0..4 {
                    let basis = outputs[k][(i, j)] + outputs[l][(i, j)];
                    let e_kl = eu[(i, j)] + i_unit * ev[(i, j)] - half * (one + i_unit) * basis;
                    let e_lk = eu[(i, j)] - i_unit * ev[(i, j)] - half * (one - i_unit) * basis;
                    tensor[i][j][k][l] = e_kl;
                    tensor[i][j][l][k] = e_lk;
                }
            }
            pair += 1;
        }
    }
    let map = ProcessMap { tensor, time, provenance: provenance.to_string() };
    map.validate()?;
    Ok(map)
}

/// Average gate fidelity against an arbitrary 4x4 target unitary:
/// `F_G = (sum_{ijkl} conj(G_ik) eps_{ij,kl} G_jl + 4) / 20`.
pub fn average_gate_fidelity_matrix(map: &ProcessMap, g: &CMat) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    acc += g[(i, k)].conj() * map.tensor[i][j][k][l] * g[(j, l)];
                }
            }
        }
    }
    (acc.re + 4.0) / 20.0
}

/// Average gate fidelity against the ideal mirror gate.
pub fn average_gate_fidelity(map: &ProcessMap, gate: &IdealGate) -> f64 {
    average_gate_fidelity_matrix(map, &gate.matrix())
}

/// Two-qubit concurrence of a density matrix.
///
/// The Wootters lambdas are the singular values of
/// `sqrt(rho) (sy(x)sy) conj(sqrt(rho))`. That formula has square-root
/// sensitivity at pure states, so near-pure inputs switch to the exact
/// pure-state expression on the dominant eigenvector.
pub fn concurrence(rho: &CMat) -> f64 {
    let yy = spin_flip_matrix();
    let herm = (rho.clone() + rho.adjoint()) * C64::new(0.5, 0.0);
    let purity = (&herm * &herm).trace().re;
    let eig = SymmetricEigen::new(herm);
    if purity > 1.0 - 1e-9 {
        let mut top = 0;
        for k in 1..4 {
            if eig.eigenvalues[k] > eig.eigenvalues[top] {
                top = k;
            }
        }
        let psi = eig.eigenvectors.column(top);
        // C = |psi^T (sy(x)sy) psi| = 2 |a00 a11 - a01 a10|.
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += psi[i] * yy[(i, j)] * psi[j];
            }
        }
        return acc.norm().min(1.0);
    }
    let sqrt_rho = {
        let n = 4;
        let mut out = CMat::zeros(n, n);
        for k in 0..n {
            let w = eig.eigenvalues[k].max(0.0).sqrt();
            if w == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += v[r] * v[c].conj() * w;
                }
            }
        }
        out
    };
    let b = &sqrt_rho * &yy * sqrt_rho.map(|z| z.conj());
    let svd = b.svd(false, false);
    let mut lambdas: Vec<f64> = svd.singular_values.iter().cloned().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

fn spin_flip_matrix() -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m
}

/// Density matrix of a pure two-qubit state.
pub fn pure_density(amplitudes: &[C64; 4]) -> CMat {
    let mut rho = CMat::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            rho[(i, j)] = amplitudes[i] * amplitudes[j].conj();
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ideal_gate, IdealGate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plus_plus() -> [C64; 4] {
        [C64::new(0.5, 0.0); 4]
    }

    #[test]
    fn tomography_states_are_normalized() {
        let inputs = tomography_inputs();
        assert_eq!(inputs.len(), 16);
        for inp in &inputs {
            let n: f64 = inp.amplitudes.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_evolution_reconstructs_identity_channel() {
        let outputs: Vec<CMat> =
            tomography_inputs().iter().map(|inp| pure_density(&inp.amplitudes)).collect();
        let map = assemble_process_map(&outputs, 0.0, "test").unwrap();
        let id = ProcessMap::identity();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        assert!((map.tensor[i][j][k][l] - id.tensor[i][j][k][l]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn unitary_evolution_reconstructs_unitary_channel() {
        let g = ideal_gate(8, 4).matrix();
        let outputs: Vec<CMat> = tomography_inputs()
            .iter()
            .map(|inp| {
                let psi = nalgebra::DVector::from_iterator(4, inp.amplitudes.iter().cloned());
                let out = &g * psi;
                let mut rho = CMat::zeros(4, 4);
                for i in 0..4 {
                    for j in 0..4 {
                        rho[(i, j)] = out[i] * out[j].conj();
                    }
                }
                rho
            })
            .collect();
        let map = assemble_process_map(&outputs, 0.0, "test").unwrap();
        let expect = unitary_channel(&g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        assert!(
                            (map.tensor[i][j][k][l] - expect.tensor[i][j][k][l]).norm() < 1e-12
                        );
                    }
                }
            }
        }
        assert!((average_gate_fidelity_matrix(&map, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_average_fidelity_is_quarter() {
        let map = ProcessMap::depolarizing();
        let g = ideal_gate(8, 4);
        assert!((average_gate_fidelity(&map, &g) - 0.25).abs() < 1e-12);
        map.validate().unwrap();
    }

    #[test]
    fn identity_channel_against_swap_phase_gate_gives_two_fifths() {
        // G with phases (0, pi/2, pi/2, 0): |Tr G|^2 = 4, F = (4+4)/20.
        let g = IdealGate {
            alpha_n: std::f64::consts::FRAC_PI_2,
            parity_p: 0,
            phases: [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 0.0],
        };
        let f = average_gate_fidelity(&ProcessMap::identity(), &g);
        assert!((f - 0.4).abs() < 1e-12, "F = {f}");
    }

    #[test]
    fn unitary_channel_composition_and_choi_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng);
        let v = random_unitary(&mut rng);
        let uv = &u * &v;
        let composed = unitary_channel(&u).unwrap().compose(&unitary_channel(&v).unwrap());
        let direct = unitary_channel(&uv).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        assert!(
                            (composed.tensor[i][j][k][l] - direct.tensor[i][j][k][l]).norm()
                                < 1e-12
                        );
                    }
                }
            }
        }
        // Choi of a unitary channel: rank one with eigenvalue 4.
        let choi = direct.choi();
        let herm = (choi.clone() + choi.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        assert!((vals[0] - 4.0).abs() < 1e-10);
        assert!(vals[1].abs() < 1e-10);
    }

    #[test]
    fn closed_form_fidelity_for_unitary_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ideal_gate(16, 8).matrix();
        for _ in 0..20 {
            let v = random_unitary(&mut rng);
            let f = average_gate_fidelity_matrix(&unitary_channel(&v).unwrap(), &g);
            let tr = (g.adjoint() * &v).trace();
            let expect = (tr.norm_sqr() + 4.0) / 20.0;
            assert!((f - expect).abs() < 1e-12, "{f} vs {expect}");
        }
    }

    #[test]
    fn concurrence_of_bell_and_product_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell =
            [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
        assert!((concurrence(&pure_density(&bell)) - 1.0).abs() < 1e-10);
        let product =
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(concurrence(&pure_density(&product)) < 1e-10);
        let plus = plus_plus();
        assert!(concurrence(&pure_density(&plus)) < 1e-10);
    }

    #[test]
    fn werner_state_concurrence() {
        // rho = p |Bell><Bell| + (1-p) I/4 has C = max(0, (3p-1)/2).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell =
            [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
        for p in [0.2, 1.0 / 3.0, 0.5, 0.8] {
            let rho = pure_density(&bell) * C64::new(p, 0.0)
                + CMat::identity(4, 4) * C64::new((1.0 - p) / 4.0, 0.0);
            let expect = (1.5 * p - 0.5).max(0.0);
            let c = concurrence(&rho);
            assert!((c - expect).abs() < 1e-9, "p={p}: C={c} vs {expect}");
        }
    }

    #[test]
    fn ideal_gate_entangles_plus_plus_for_any_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let alpha = rng.gen::<f64>() * 20.0 - 10.0;
            let p = rng.gen_range(0..4);
            let g = IdealGate::from_alpha(alpha, p).matrix();
            let psi = nalgebra::DVector::from_iterator(4, plus_plus().iter().cloned());
            let out = &g * psi;
            let mut amps = [C64::new(0.0, 0.0); 4];
            for k in 0..4 {
                amps[k] = out[k];
            }
            let c = concurrence(&pure_density(&amps));
            assert!((c - 1.0).abs() < 1e-12, "alpha={alpha}: C = {c}");
        }
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> CMat {
        let mut m = CMat::zeros(4, 4);
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let qr = m.qr();
        let mut q = qr.q();
        let r = qr.r();
        // Fix the phase freedom so columns are Haar-ish distributed.
        for k in 0..4 {
            let d = r[(k, k)];
            if d.norm() > 0.0 {
                let phase = d / d.norm();
                for row in 0..4 {
                    q[(row, k)] *= phase;
                }
            }
        }
        q
    }
}
