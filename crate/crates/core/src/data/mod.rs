//! Benchmark dataset generation and dataset files.

mod file;
mod solver;

pub use file::{
    read_dataset, read_dataset_str, write_dataset, write_dataset_string, DatasetFileError,
    SCHEMA_VERSION,
};
pub use solver::{
    preset, solve, Boundary, Problem, Scheme, SolverConfig, SolverError, StepLimit, UnknownProblem,
    DISPERSIVE_C,
};
