//! Two-sample tests for right-censored survival data.
//!
//! The censored energy-distance and kernel-MMD statistics replace the
//! empirical measure with Kaplan–Meier integral weights and are calibrated by
//! label permutation. The weighted log-rank family and the censored
//! Kolmogorov–Smirnov / Cramér–von Mises statistics are provided alongside
//! them under the same permutation engine.

pub mod classical;
pub mod data;
pub mod error;
pub mod kernels;
pub mod km;
pub mod methods;
pub mod permutation;
pub mod statistics;

pub use data::{order_with_censoring, OrderedSample, PooledSample, SurvivalSample, TwoSampleData};
pub use error::{Error, Result};
pub use kernels::{KernelSpec, SemimetricSpec};
pub use km::{km_survival, km_weights, nelson_aalen, KmWeights, StepCurve};
pub use methods::Method;
pub use permutation::{run_permutation_test, PermutationPlan, TestResult};
