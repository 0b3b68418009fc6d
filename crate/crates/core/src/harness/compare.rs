use std::path::Path;

use serde::Serialize;

use super::experiment::{append_summary, run_experiment_to_dir, ExperimentError, ExperimentResult};
use crate::sim::{Mode, Scenario};
use crate::twin::TwinConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub scenario: String,
    pub seed: u64,
    pub mse_default: f64,
    pub mse_augmented: f64,
    /// `(default − augmented) / default`; 0 when the default run is exact.
    pub reduction: f64,
}

impl CompareSummary {
    pub fn new(default: &ExperimentResult, augmented: &ExperimentResult) -> Self {
        CompareSummary {
            scenario: default.scenario.clone(),
            seed: default.seed,
            mse_default: default.mse,
            mse_augmented: augmented.mse,
            reduction: relative_reduction(default.mse, augmented.mse),
        }
    }

    pub fn table(&self) -> String {
        format!(
            "mode       mse\ndefault    {:.6}\naugmented  {:.6}\nreduction  {:.1}%\n",
            self.mse_default,
            self.mse_augmented,
            self.reduction * 100.0
        )
    }
}

pub fn relative_reduction(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        (before - after) / before
    } else {
        0.0
    }
}

pub const PLOT_HEADER: [&str; 5] = ["t", "mode", "expected", "actual", "corrected"];

pub fn write_plot_csv(path: &Path, runs: &[&ExperimentResult]) -> Result<(), ExperimentError> {
    let out = |e: csv::Error| ExperimentError::Output { path: path.display().to_string(), msg: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(out)?;
    w.write_record(PLOT_HEADER).map_err(out)?;
    for run in runs {
        for r in &run.ticks {
            w.write_record([
                r.t.to_string(),
                run.mode.name().to_string(),
                r.expected_speed.to_string(),
                r.actual_speed.to_string(),
                r.corrected.to_string(),
            ])
            .map_err(out)?;
        }
    }
    w.flush().map_err(|e| out(e.into()))
}

/// Both modes, same seed, one after the other; writes each run's outputs,
/// `plot.csv`, and a comparison record in `summary.jsonl`.
pub fn compare(scenario: &Scenario, seed: u64, twin: &TwinConfig, out: &Path) -> Result<CompareSummary, ExperimentError> {
    let d = run_experiment_to_dir(scenario, Mode::Default, seed, twin, out)?;
    let a = run_experiment_to_dir(scenario, Mode::Augmented, seed, twin, out)?;
    write_plot_csv(&out.join("plot.csv"), &[&d, &a])?;
    let summary = CompareSummary::new(&d, &a);
    let mut rec = serde_json::to_value(&summary).expect("summary serializes");
    rec["record"] = "compare".into();
    append_summary(out, &rec.to_string())?;
    Ok(summary)
}
