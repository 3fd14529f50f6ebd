//! Experiment harness for the deconvolution solvers: seeded degradation of
//! an image suite, batch solving, CSV reports and paired ablations.

pub mod ablation;
pub mod plan;
pub mod run;
pub mod suite;
pub mod tunefile;

pub use ablation::{run_ablation, AblationName, AblationOptions, AblationReport, Verdict};
pub use plan::{ExperimentPlan, SolverEntry};
pub use run::{read_csv, run_plan, write_csv, PlanOutcome, ResultRow, CSV_HEADER};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PDECONV_OUTPUT_DIR";

pub fn default_output_dir() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(Into::into).unwrap_or_else(|| "results".into())
}
