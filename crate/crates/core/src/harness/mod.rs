//! Experiment driver: configuration files, runs, rate fits and the
//! subgradient baseline.

pub mod baseline;
pub mod config;
pub mod experiment;
pub mod rate;

pub use baseline::{project_simplex, subgradient_baseline, BaselineRun};
pub use config::{ExperimentConfig, InstanceSource, SolverKind, StepRule, TopologySource};
pub use experiment::{
    compare, load_instance, load_topology, reference_optimum, regularizer_for, run_experiment, CompareReport,
    CompareRow, ExperimentOutcome, ReferenceSolve, Summary,
};
pub use rate::{fit_rate, iterations_to, RateReport};
