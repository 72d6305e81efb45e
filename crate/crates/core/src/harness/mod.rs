//! Experiments: data collection, receding-horizon runs, parameter sweeps,
//! self-checks and CSV/SVG output.
//!
//! Everything here works in `f64`.

pub mod closed_loop;
pub mod collect;
pub mod config;
pub mod report;
pub mod sweep;
pub mod verify;

pub use closed_loop::{
    run_receding_horizon, Bootstrap, ControlProblem, Controller, LoopConfig, OnFailure, PlantSetup, RunLog, StepRecord,
};
pub use collect::{collect_data, record, CollectConfig, InputGen, RawData};
pub use config::ExperimentConfig;
pub use sweep::{run_blocks, run_config, sweep, AxisValue, SweepAxis, SweepOptions, SweepRow, SweepTable};
pub use verify::{verify, Check, Suite, VerifyReport};
