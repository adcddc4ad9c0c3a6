//! Engine dispatch: one prepared context that both engines implement,
//! producing process maps and bus fidelities at requested times.

use crate::error::{Error, Result};
use crate::exec;
use crate::ffq;
use crate::maps::{assemble_process_map, pure_density, tomography_inputs, ProcessMap};
use crate::mbq;
use crate::model::{validate_spec, ChainSpec, ControlSchedule, Layout};
use crate::{C64, CMat};

/// Engine selection. `Auto` picks the free-fermion engine whenever
/// `lambda = 0` and falls back to the dense engine otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Auto,
    Ffq,
    Mbq,
}

impl EngineKind {
    pub fn resolve(self, spec: &ChainSpec, cap: usize) -> Result<EngineKind> {
        match self {
            EngineKind::Auto => {
                if spec.lambda == 0.0 {
                    Ok(EngineKind::Ffq)
                } else if spec.total_sites() <= cap {
                    Ok(EngineKind::Mbq)
                } else {
                    Err(Error::SizeCap { total: spec.total_sites(), cap })
                }
            }
            EngineKind::Ffq => {
                if spec.lambda != 0.0 {
                    Err(Error::InvalidSpec("ffq requires lambda = 0".into()))
                } else {
                    Ok(EngineKind::Ffq)
                }
            }
            EngineKind::Mbq => {
                if spec.total_sites() <= cap {
                    Ok(EngineKind::Mbq)
                } else {
                    Err(Error::SizeCap { total: spec.total_sites(), cap })
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Auto => "auto",
            EngineKind::Ffq => "ffq",
            EngineKind::Mbq => "mbq",
        }
    }
}

enum Prepared {
    Ffq { lattice: ffq::BusState },
    Mbq { lattice: mbq::DenseState, reference: mbq::DenseState },
}

/// A spec+schedule with the bus (or lattice) factor prepared for one engine.
pub struct GateContext {
    pub spec: ChainSpec,
    pub schedule: ControlSchedule,
    pub layout: Layout,
    pub engine: EngineKind,
    pub parity_p: i64,
    prepared: Prepared,
}

impl GateContext {
    /// Bus in its ground state, fields from the spec, sudden or scheduled J0.
    pub fn new(
        spec: &ChainSpec,
        schedule: ControlSchedule,
        engine: EngineKind,
        cap: usize,
    ) -> Result<Self> {
        let layout = validate_spec(spec)?;
        let engine = engine.resolve(spec, cap)?;
        let prepared = match engine {
            EngineKind::Ffq => {
                let lattice = if spec.extra_left + spec.extra_right > 0 {
                    ffq::lattice_ground_state(spec, &spec.cut_fields)?
                } else {
                    ffq::bus_ground_state(spec)?
                };
                Prepared::Ffq { lattice }
            }
            EngineKind::Mbq => {
                if spec.extra_left + spec.extra_right > 0 {
                    return Err(Error::InvalidSpec(
                        "dense gate runs with outer segments go through run_cut_glue".into(),
                    ));
                }
                let h = mbq::bus_block_hamiltonian(spec);
                let (reference, _) = mbq::ground_state(&h)?;
                Prepared::Mbq { lattice: reference.clone(), reference }
            }
            EngineKind::Auto => unreachable!(),
        };
        let parity_p = match &prepared {
            Prepared::Ffq { lattice } => lattice.parity_p,
            Prepared::Mbq { lattice, .. } => {
                let mask = (1usize << spec.n_bus) - 1;
                if lattice.parity_expectation(mask) > 0.0 {
                    0
                } else {
                    1
                }
            }
        };
        Ok(GateContext {
            spec: spec.clone(),
            schedule,
            layout,
            engine,
            parity_p,
            prepared,
        })
    }

    /// Gate context over an explicitly prepared free-fermion lattice factor
    /// (post-cut runs).
    pub fn with_ffq_lattice(
        spec: &ChainSpec,
        schedule: ControlSchedule,
        lattice: ffq::BusState,
    ) -> Result<Self> {
        let layout = validate_spec(spec)?;
        if spec.lambda != 0.0 {
            return Err(Error::InvalidSpec("ffq requires lambda = 0".into()));
        }
        Ok(GateContext {
            spec: spec.clone(),
            schedule,
            layout,
            engine: EngineKind::Ffq,
            parity_p: lattice.parity_p,
            prepared: Prepared::Ffq { lattice },
        })
    }

    /// Gate context over an explicitly prepared dense lattice factor
    /// (post-cut runs on the dense engine). `reference` is the bus-only
    /// state that `F_M` is scored against.
    pub fn with_mbq_lattice(
        spec: &ChainSpec,
        schedule: ControlSchedule,
        lattice: mbq::DenseState,
        reference: mbq::DenseState,
        parity_p: i64,
    ) -> Result<Self> {
        let layout = validate_spec(spec)?;
        Ok(GateContext {
            spec: spec.clone(),
            schedule,
            layout,
            engine: EngineKind::Mbq,
            parity_p,
            prepared: Prepared::Mbq { lattice, reference },
        })
    }

    /// Process maps at the given times, by linear tomography from 16 pure
    /// input evolutions.
    pub fn maps_at(&self, times: &[f64]) -> Result<Vec<ProcessMap>> {
        match &self.prepared {
            Prepared::Ffq { lattice } => self.ffq_maps(lattice, times),
            Prepared::Mbq { lattice, .. } => self.mbq_maps(lattice, times),
        }
    }

    /// Bus fidelity `F_M(t)` of the maximally mixed two-qubit input (the
    /// average of the four basis-input evolutions).
    pub fn bus_fidelities_at(&self, times: &[f64]) -> Result<Vec<f64>> {
        match &self.prepared {
            Prepared::Ffq { lattice } => {
                let dets = self.ffq_dets_at(lattice, times)?;
                Ok(exec::map_collect(dets, |d4| {
                    let mut acc = 0.0;
                    for k in 0..4usize {
                        let mut c = [C64::new(0.0, 0.0); 4];
                        c[k] = C64::new(1.0, 0.0);
                        let st = ffq::FermionicSuperposition {
                            layout: self.layout.clone(),
                            amplitudes: c,
                            dets: d4.clone(),
                            parity_p: self.parity_p,
                        };
                        acc += ffq::bus_fidelity(&st, lattice);
                    }
                    acc / 4.0
                }))
            }
            Prepared::Mbq { lattice, reference } => {
                let jobs: Vec<usize> = (0..4).collect();
                let per_basis: Vec<Vec<f64>> = exec::map_collect(jobs, |k| {
                    let mut c = [C64::new(0.0, 0.0); 4];
                    c[k] = C64::new(1.0, 0.0);
                    self.mbq_series(lattice, c, times, |st| {
                        mbq::bus_overlap_fidelity(st, reference, &self.layout)
                    })
                    .expect("basis evolution")
                });
                Ok((0..times.len())
                    .map(|ti| per_basis.iter().map(|row| row[ti]).sum::<f64>() / 4.0)
                    .collect())
            }
        }
    }

    /// The four evolved configuration determinants at each time.
    fn ffq_dets_at(
        &self,
        lattice: &ffq::BusState,
        times: &[f64],
    ) -> Result<Vec<[ffq::SlaterDeterminant; 4]>> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let base = ffq::init_state([C64::new(0.5, 0.0); 4], lattice)?;

        let mut out: Vec<Option<[ffq::SlaterDeterminant; 4]>> = vec![None; times.len()];
        let mut current = base;
        let mut t_now = 0.0;
        for &idx in &order {
            let t = times[idx];
            if t < t_now {
                return Err(Error::InvalidSpec("times must be nonnegative".into()));
            }
            current = ffq::propagate_orbitals(&current, &self.spec, &self.schedule, t_now, t)?;
            t_now = t;
            out[idx] = Some(current.dets.clone());
        }
        Ok(out.into_iter().map(|d| d.unwrap()).collect())
    }

    fn ffq_maps(&self, lattice: &ffq::BusState, times: &[f64]) -> Result<Vec<ProcessMap>> {
        let dets = self.ffq_dets_at(lattice, times)?;
        let inputs = tomography_inputs();
        let engine_name = self.engine.name();
        let jobs: Vec<(usize, [ffq::SlaterDeterminant; 4])> =
            dets.into_iter().enumerate().collect();
        let results = exec::map_collect(jobs, |(ti, d4)| {
            // The determinant work is shared: all 16 tomography inputs are
            // contractions of one transition tensor.
            let tensor = ffq::config_transition_tensor(&self.layout, &d4)?;
            let outputs: Vec<CMat> = inputs
                .iter()
                .map(|inp| ffq::contract_rdm(&tensor, &inp.amplitudes))
                .collect();
            assemble_process_map(
                &outputs,
                times[ti],
                &format!("{engine_name} N={} J0={}", self.spec.n_bus, self.spec.j0),
            )
        });
        results.into_iter().collect()
    }

    fn mbq_maps(&self, lattice: &mbq::DenseState, times: &[f64]) -> Result<Vec<ProcessMap>> {
        let inputs = tomography_inputs();
        let engine_name = self.engine.name();
        let per_input: Vec<Result<Vec<CMat>>> = exec::map_collect(inputs.clone(), |inp| {
            self.mbq_series(lattice, inp.amplitudes, times, |st| {
                mbq::reduced_two_qubit(st, &self.layout)
            })
        });
        let per_input: Vec<Vec<CMat>> = per_input.into_iter().collect::<Result<_>>()?;
        (0..times.len())
            .map(|ti| {
                let outputs: Vec<CMat> =
                    (0..16).map(|ii| per_input[ii][ti].clone()).collect();
                assemble_process_map(
                    &outputs,
                    times[ti],
                    &format!(
                        "{engine_name} N={} J0={} lambda={}",
                        self.spec.n_bus, self.spec.j0, self.spec.lambda
                    ),
                )
            })
            .collect()
    }

    /// Evolve one dense input through sorted times, sampling `f`.
    fn mbq_series<T>(
        &self,
        lattice: &mbq::DenseState,
        c: [C64; 4],
        times: &[f64],
        f: impl Fn(&mbq::DenseState) -> T,
    ) -> Result<Vec<T>> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out: Vec<Option<T>> = Vec::new();
        out.resize_with(times.len(), || None);
        let mut state = mbq::init_dense(c, lattice, &self.layout)?;
        let mut t_now = 0.0;
        for &idx in &order {
            state = mbq::evolve(&state, &self.spec, &self.schedule, t_now, times[idx])?;
            t_now = times[idx];
            out[idx] = Some(f(&state));
        }
        Ok(out.into_iter().map(|v| v.unwrap()).collect())
    }

    /// Identity-evolution sanity value: the process map at `t = 0` is the
    /// identity channel by construction.
    pub fn identity_map(&self) -> Result<ProcessMap> {
        Ok(self.maps_at(&[0.0])?.remove(0))
    }
}

/// Density matrix convenience for tests and callers.
pub fn input_density(c: &[C64; 4]) -> CMat {
    pure_density(c)
}
