//! Anisotropy sweep on the dense engine.

use crate::error::Result;
use crate::exec;
use crate::maps::average_gate_fidelity_matrix;
use crate::model::{ideal_gate, transfer_time_estimate, ChainSpec, ControlSchedule};
use crate::protocols::engine::{EngineKind, GateContext};

/// `F_G(t*)` for each anisotropy value; both the bus and the boundary
/// bonds carry `lambda`.
pub fn sweep_lambda(
    spec: &ChainSpec,
    lambdas: &[f64],
    engine: EngineKind,
    cap: usize,
) -> Result<Vec<(f64, f64)>> {
    let tstar = transfer_time_estimate(spec.n_bus, spec.j);
    let jobs: Vec<f64> = lambdas.to_vec();
    let results = exec::map_collect(jobs, |lambda| -> Result<(f64, f64)> {
        let s = spec.clone().with_lambda(lambda);
        let schedule = ControlSchedule::sudden(&s, tstar);
        let ctx = GateContext::new(&s, schedule, engine, cap)?;
        let g = ideal_gate(s.n_bus, ctx.parity_p).matrix();
        let map = ctx.maps_at(&[tstar])?.remove(0);
        Ok((lambda, average_gate_fidelity_matrix(&map, &g)))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::optimal_coupling_estimate;

    #[test]
    fn lambda_zero_matches_ffq() {
        let spec = ChainSpec::new(4, 1.0, optimal_coupling_estimate(4, 1.0));
        let dense = sweep_lambda(&spec, &[0.0], EngineKind::Mbq, 24).unwrap()[0].1;
        let free = sweep_lambda(&spec, &[0.0], EngineKind::Ffq, 24).unwrap()[0].1;
        assert!((dense - free).abs() < 1e-9, "{dense} vs {free}");
    }

    #[test]
    fn tiny_lambda_is_continuous() {
        let spec = ChainSpec::new(4, 1.0, optimal_coupling_estimate(4, 1.0));
        let rows =
            sweep_lambda(&spec, &[-1e-3, 0.0, 1e-3], EngineKind::Mbq, 24).unwrap();
        assert!((rows[0].1 - rows[1].1).abs() < 1e-3);
        assert!((rows[2].1 - rows[1].1).abs() < 1e-3);
    }
}
