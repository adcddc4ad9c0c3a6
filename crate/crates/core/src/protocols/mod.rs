//! The paper's experiments end-to-end: gate runs, repeated bus use, gradual
//! switching, adiabatic cut/glue, parameter optimization and scaling fits.

mod cut;
mod engine;
mod gate;
mod optimize;
mod sweep;

pub use cut::{run_cut_glue, CutOptions, CutRunResult, PostCutGate};
pub use engine::{EngineKind, GateContext};
pub use gate::{
    run_gate, run_gradual, run_repeated, GateRunResult, RepeatInterpretation, RepeatRow,
};
pub use optimize::{fit_scaling, optimize, optimize_in_box, Optimum, ScalingFit};
pub use sweep::sweep_lambda;
