//! Replay, experiments and comparisons.

mod compare;
mod experiment;
mod replay;

pub use compare::{compare, relative_reduction, write_plot_csv, CompareSummary, PLOT_HEADER};
pub use experiment::{
    compute_mse, run_experiment, run_experiment_to_dir, run_with_link, stuck_intervals, twin_config_for, Experiment,
    ExperimentError, ExperimentResult, MseError,
};
pub use replay::{read_replay_csv, replay, replay_header, write_replay_csv, ReplayError, ReplayReport, ReplayRow};
