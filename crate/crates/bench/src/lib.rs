//! Benchmark harness for RMES Bayesian optimization: objectives, the BO
//! loop, regret metrics, aggregation, CSV output and the conformance suite.

pub mod aggregate;
pub mod check;
pub mod config;
pub mod error;
pub mod objective;
pub mod output;
pub mod runner;
pub mod scenario;

pub use aggregate::{aggregate, ResultTable};
pub use config::{BenchmarkConfig, HyperparameterPolicy};
pub use error::{BenchError, Result};
pub use objective::{GroundTruth, Objective, ObjectiveKind};
pub use runner::{run_benchmark, run_bo_loop, run_repetition, BlackBox, RunRecord};
