//! Synthetic censored two-sample data and the simulation studies built on it.

pub mod error;
pub mod model;
pub mod scenario;
pub mod study;

pub use error::{Error, Result};
pub use model::{
    apply_censoring, calibrate_censoring_rate, CensoringModel, LifetimeModel, Segment,
};
pub use scenario::{builtin_scenarios, find_builtin, ScenarioConfig};
pub use study::{run_study, MethodSummary, StudyResult};
