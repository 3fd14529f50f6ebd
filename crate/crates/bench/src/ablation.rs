//! Paired experiments that switch one ingredient on or off.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use pdeconv::solvers::SolverKind;
use pdeconv::synth::DegradationSpec;
use pdeconv::tune::{tune_schedule, tuned_config, GridAxis, KernelClass, Objective, TuneResult, TuneSpec, ValidationItem};
use pdeconv::Config;

use crate::plan::{ExperimentPlan, SolverEntry};
use crate::run::{run_plan, solver_means, write_csv, ResultRow};
use crate::suite::{list_images, load_images, run_seed, suite_dir, suite_kernel, DEFAULT_SEED};

/// Differences smaller than this are reported as no effect.
pub const NO_EFFECT_DB: f64 = 0.05;
pub const TUNE_BUDGET: usize = 60;
pub const TUNE_PPP: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AblationName {
    Iterations,
    FeatureSpace,
    Vst,
    TunedParams,
    WienerPresence,
}

impl AblationName {
    pub const ALL: [AblationName; 5] =
        [Self::Iterations, Self::FeatureSpace, Self::Vst, Self::TunedParams, Self::WienerPresence];
}

impl FromStr for AblationName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "iterations" => Self::Iterations,
            "feature_space" => Self::FeatureSpace,
            "vst" => Self::Vst,
            "tuned_params" => Self::TunedParams,
            "wiener_presence" => Self::WienerPresence,
            other => bail!("unknown ablation `{other}`"),
        })
    }
}

impl fmt::Display for AblationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Iterations => "iterations",
            Self::FeatureSpace => "feature_space",
            Self::Vst => "vst",
            Self::TunedParams => "tuned_params",
            Self::WienerPresence => "wiener_presence",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Degraded,
    NoEffect,
}

impl Verdict {
    pub fn from_delta(delta_db: f64) -> Self {
        if delta_db > NO_EFFECT_DB {
            Self::Improved
        } else if delta_db < -NO_EFFECT_DB {
            Self::Degraded
        } else {
            Self::NoEffect
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Improved => "improved",
            Self::Degraded => "degraded",
            Self::NoEffect => "no_effect",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub solver_id: String,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug)]
pub struct AblationReport {
    pub name: AblationName,
    /// Baseline first, treatment last.
    pub arms: Vec<Arm>,
    pub rows: Vec<ResultRow>,
    /// Only for `tuned_params`.
    pub tuning: Option<TuneResult>,
}

impl AblationReport {
    pub fn baseline(&self) -> &Arm {
        &self.arms[0]
    }

    pub fn treatment(&self) -> &Arm {
        &self.arms[self.arms.len() - 1]
    }

    /// Mean PSNR of the treatment minus the baseline.
    pub fn delta_db(&self) -> f64 {
        self.treatment().psnr_db - self.baseline().psnr_db
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_delta(self.delta_db())
    }

    /// Mean over paired runs of `|PSNR(a) − PSNR(b)|`.
    pub fn mean_abs_delta(&self, a: &str, b: &str) -> f64 {
        let mut by_cell: BTreeMap<(String, KernelClass, usize, u64), [Option<f64>; 2]> = BTreeMap::new();
        for r in &self.rows {
            let slot = if r.solver_id == a {
                0
            } else if r.solver_id == b {
                1
            } else {
                continue;
            };
            by_cell.entry((r.image_id.clone(), r.kernel_class, r.kernel_index, r.ppp.to_bits())).or_default()[slot] =
                Some(r.psnr_db);
        }
        let diffs: Vec<f64> = by_cell.values().filter_map(|v| Some((v[0]? - v[1]?).abs())).collect();
        diffs.iter().sum::<f64>() / diffs.len().max(1) as f64
    }

    /// Writes `ablation_<name>.csv` (one line per arm), the per-run rows and
    /// the tuned configuration when there is one.
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut w = csv::Writer::from_path(dir.join(format!("ablation_{}.csv", self.name)))?;
        w.write_record(["ablation", "solver_id", "mean_psnr_db", "mean_ssim", "delta_db", "verdict"])?;
        for arm in &self.arms {
            w.write_record([
                self.name.to_string(),
                arm.solver_id.clone(),
                arm.psnr_db.to_string(),
                arm.ssim.to_string(),
                (arm.psnr_db - self.baseline().psnr_db).to_string(),
                Verdict::from_delta(arm.psnr_db - self.baseline().psnr_db).to_string(),
            ])?;
        }
        w.flush()?;
        write_csv(&self.rows, fs::File::create(dir.join(format!("ablation_{}_runs.csv", self.name)))?)?;
        if let Some(t) = &self.tuning {
            tuned_config(SolverKind::Fio, t).save(dir.join("tuned_fio.cfg"))?;
        }
        Ok(())
    }
}

impl fmt::Display for AblationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ablation {}", self.name)?;
        for arm in &self.arms {
            writeln!(f, "  {:<12} psnr_db={:.3} ssim={:.4}", arm.solver_id, arm.psnr_db, arm.ssim)?;
        }
        write!(f, "  delta_db={:+.3} verdict={}", self.delta_db(), self.verdict())
    }
}

#[derive(Clone, Debug)]
pub struct AblationOptions {
    /// Suite images, in a fixed order; `tuned_params` splits them by index.
    pub images: Vec<PathBuf>,
    pub seed: u64,
    pub threads: usize,
}

impl AblationOptions {
    pub fn standard() -> Result<Self> {
        Ok(Self { images: list_images(&suite_dir())?, seed: DEFAULT_SEED, threads: 0 })
    }
}

fn fio(id: &str, keys: &[(&str, &str)]) -> SolverEntry {
    let mut c = Config::new();
    for (k, v) in keys {
        c.set(*k, v);
    }
    SolverEntry::new(id, SolverKind::Fio, c)
}

fn medium_plan(opts: &AblationOptions, ppp: Vec<f64>, solvers: Vec<SolverEntry>) -> ExperimentPlan {
    ExperimentPlan {
        images: opts.images.clone(),
        kernel_classes: vec![KernelClass::Medium],
        kernels_per_class: crate::suite::KERNELS_PER_CLASS,
        ppp_levels: ppp,
        solvers,
        seed: opts.seed,
        output_dir: None,
        save_images: false,
        record_timing: false,
        threads: opts.threads,
    }
}

/// Grid searched by the `tuned_params` ablation; it contains the heuristic
/// values, so the search can only match or beat them on validation data.
pub fn tuning_grid() -> Vec<GridAxis> {
    vec![
        GridAxis::new("denoiser.strength", vec![0.5, 0.75, 1.0, 1.25, 1.5]).expect("non-empty"),
        GridAxis::new("fio.lambda", vec![1.5, 2.0, 2.5, 3.0, 4.0]).expect("non-empty"),
        GridAxis::new("fio.mu_scale", vec![0.3, 0.4, 0.5, 0.6, 0.7]).expect("non-empty"),
    ]
}

/// Tunes FIO on the odd-indexed images (first medium kernel) and returns
/// the held-out even-indexed images.
pub fn tune_on_validation(opts: &AblationOptions) -> Result<(TuneResult, Vec<PathBuf>)> {
    let (val_paths, test_paths): (Vec<_>, Vec<_>) = opts.images.iter().cloned().enumerate().partition(|(i, _)| i % 2 == 1);
    let val_paths: Vec<PathBuf> = val_paths.into_iter().map(|(_, p)| p).collect();
    let test_paths: Vec<PathBuf> = test_paths.into_iter().map(|(_, p)| p).collect();
    if val_paths.is_empty() || test_paths.is_empty() {
        bail!("tuning needs at least two images");
    }
    let kernel = suite_kernel(KernelClass::Medium, 0)?;
    let validation = load_images(&val_paths)?
        .into_iter()
        .map(|s| {
            let seed = run_seed(opts.seed, &s.id, KernelClass::Medium, 0, TUNE_PPP);
            Ok(ValidationItem { clean: s.image, degradation: DegradationSpec::new(kernel.clone(), TUNE_PPP, seed)? })
        })
        .collect::<Result<Vec<_>>>()?;
    // start the search from the heuristic schedule
    let mut base = Config::new();
    base.set("denoiser.strength", 1.0);
    base.set("fio.lambda", KernelClass::Medium.prior_weight());
    base.set("fio.mu_scale", pdeconv::tune::DEFAULT_MU_SCALE);
    let spec = TuneSpec { objective: Objective::Psnr, grid: tuning_grid(), budget: TUNE_BUDGET, validation, base };
    Ok((tune_schedule(SolverKind::Fio, &spec)?, test_paths))
}

pub fn run_ablation(name: AblationName, opts: &AblationOptions) -> Result<AblationReport> {
    let (plan, tuning) = match name {
        AblationName::Iterations => {
            let arms = [1, 2, 4, 8].map(|k| fio(&format!("fio_k{k}"), &[("fio.iters", &k.to_string())]));
            (medium_plan(opts, vec![30.0], arms.to_vec()), None)
        }
        AblationName::FeatureSpace => {
            let arms = vec![fio("fio_identity", &[("fio.bank", "identity")]), fio("fio_deriv3", &[("fio.bank", "deriv3")])];
            (medium_plan(opts, vec![10.0], arms), None)
        }
        AblationName::Vst => {
            let plain = Config::parse("vstp.vst = false\n")?;
            let arms = vec![
                SolverEntry::new("vstp_plain", SolverKind::Vstp, plain),
                SolverEntry::new("vstp_vst", SolverKind::Vstp, Config::new()),
            ];
            (medium_plan(opts, vec![10.0, 30.0, 50.0], arms), None)
        }
        AblationName::WienerPresence => {
            let arms = vec![SolverEntry::default_for(SolverKind::TvOnly), SolverEntry::default_for(SolverKind::WienerTv)];
            (medium_plan(opts, vec![10.0], arms), None)
        }
        AblationName::TunedParams => {
            let (tuned, test_images) = tune_on_validation(opts)?;
            let arms = vec![
                SolverEntry::new("fio_heuristic", SolverKind::Fio, Config::new()),
                SolverEntry::new("fio_tuned", SolverKind::Fio, tuned.best.clone()),
            ];
            let mut plan = medium_plan(opts, vec![TUNE_PPP], arms);
            plan.images = test_images;
            (plan, Some(tuned))
        }
    };
    let outcome = run_plan(&plan)?;
    if let Some((path, why)) = outcome.skipped.first() {
        bail!("could not read {}: {why}", path.display());
    }
    let means = solver_means(&outcome.rows);
    let arms = plan
        .solvers
        .iter()
        .map(|s| {
            let (psnr_db, ssim) = means[&s.id];
            Arm { solver_id: s.id.clone(), psnr_db, ssim }
        })
        .collect();
    Ok(AblationReport { name, arms, rows: outcome.rows, tuning })
}
