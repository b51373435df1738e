//! Benchmark problems, experiment driver and table output.

mod experiment;
mod problem;
mod table;

pub use experiment::{run_experiment, Experiment, ExperimentConfig, Outcome, Report};
pub use problem::{
    constant_coefficients, example_constant, example_layered, example_random, outward_normal, relative_l2_error, Example, ProblemSpec, Speed, WaveSum,
};
pub use table::{emit_table, percent_cell, pnum_cell, sweep, TableLayout};
