//! Data-enabled predictive control with Wasserstein distributionally robust
//! costs and CVaR output constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`trajlib`] builds Hankel and Page trajectory matrices and partitions
//!   recorded data into past/future blocks.
//! * [`plant`] simulates LTI systems and provides the model-based MPC baseline.
//! * [`ambiguity`] handles empirical distributions, Wasserstein distances,
//!   CVaR and the radius formula, plus a brute-force worst-case oracle.
//! * [`robustctl`] assembles the deterministic and robust programs as cone
//!   programs for [`deepc_conic`].
//! * [`harness`] runs receding-horizon experiments and parameter sweeps.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the harness
//! works in `f64`. Aliases for the `f64` instantiation live at the crate root.

pub mod ambiguity;
pub mod harness;
pub mod plant;
pub mod robustctl;
pub mod trajlib;

mod linalg;

pub use deepc_conic::Real;

pub use ambiguity::{AmbiguitySpec, Concentration, EmpiricalDistribution, NormIndex};
pub use plant::{NoiseSpec, SystemModel};
pub use robustctl::{ConstraintSpec, CostSpec, CostTerm, OutputConstraint, RobustSolution};
pub use trajlib::{DataBlocks, Signal, Structure, TrajectoryMatrix};

pub type Signal64 = Signal<f64>;
pub type TrajectoryMatrix64 = TrajectoryMatrix<f64>;
pub type DataBlocks64 = DataBlocks<f64>;
pub type SystemModel64 = SystemModel<f64>;
pub type EmpiricalDistribution64 = EmpiricalDistribution<f64>;
pub type AmbiguitySpec64 = AmbiguitySpec<f64>;
pub type CostSpec64 = CostSpec<f64>;
pub type ConstraintSpec64 = ConstraintSpec<f64>;
pub type RobustSolution64 = RobustSolution<f64>;

#[derive(Debug, thiserror::Error)]
pub enum DeepcError {
    #[error("depth {depth} exceeds signal length {len}")]
    DepthTooLarge { depth: usize, len: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("system is unobservable")]
    Unobservable,
    #[error("initial window of length {len} is shorter than the lag {lag}")]
    WindowTooShort { len: usize, lag: usize },
    #[error("invalid concentration constants: {0}")]
    InvalidConstants(String),
    #[error("squared cost terms are not Lipschitz and cannot be robustified")]
    SquaredTermInRobustMode,
    #[error("support polyhedron is empty")]
    EmptySupport,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Conic(#[from] deepc_conic::ConicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = DeepcError> = std::result::Result<T, E>;
