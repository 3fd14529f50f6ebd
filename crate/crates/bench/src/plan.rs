//! Experiment plans in the same `key = value` format as solver configs.
//!
//! ```text
//! images = data/suite            # files or directories, relative to the plan
//! kernel_classes = small, medium
//! kernels_per_class = 3
//! ppp = 10, 30, 50
//! seed = 20
//! solvers = fio, fio_d, vstp
//! fio_d.kind = fio               # defaults to the id itself
//! fio_d.fio.bank = deriv3        # everything else under the id is solver config
//! fio_d.config = tuned.cfg       # optional base config file
//! output_dir = results/run1
//! save_images = true
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pdeconv::solvers::SolverKind;
use pdeconv::tune::KernelClass;
use pdeconv::Config;

use crate::suite::{list_images, suite_dir, DEFAULT_SEED, KERNELS_PER_CLASS};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverEntry {
    pub id: String,
    pub kind: SolverKind,
    pub config: Config,
}

impl SolverEntry {
    pub fn new(id: impl Into<String>, kind: SolverKind, config: Config) -> Self {
        Self { id: id.into(), kind, config }
    }

    pub fn default_for(kind: SolverKind) -> Self {
        Self::new(kind.to_string(), kind, Config::new())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub images: Vec<PathBuf>,
    pub kernel_classes: Vec<KernelClass>,
    pub kernels_per_class: usize,
    pub ppp_levels: Vec<f64>,
    pub solvers: Vec<SolverEntry>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Write every restored image as PFM under `output_dir/restored`.
    pub save_images: bool,
    /// Measure wall time per solve; off by default so reports stay
    /// byte-identical across runs.
    pub record_timing: bool,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

impl ExperimentPlan {
    /// Bundled suite, all kernel classes, the three standard photon levels.
    pub fn standard(solvers: Vec<SolverEntry>) -> Result<Self> {
        Ok(Self {
            images: list_images(&suite_dir())?,
            kernel_classes: KernelClass::ALL.to_vec(),
            kernels_per_class: KERNELS_PER_CLASS,
            ppp_levels: vec![10.0, 30.0, 50.0],
            solvers,
            seed: DEFAULT_SEED,
            output_dir: None,
            save_images: false,
            record_timing: false,
            threads: 0,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Config::load(path).with_context(|| format!("reading plan {}", path.display()))?;
        Self::from_config(&cfg, path.parent().unwrap_or(Path::new(".")))
    }

    /// Relative paths are resolved against `base`.
    pub fn from_config(cfg: &Config, base: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut images = Vec::new();
        match cfg.get("images") {
            None => images = list_images(&suite_dir())?,
            Some(raw) => {
                for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let p = resolve(item);
                    if p.is_dir() {
                        images.extend(list_images(&p)?);
                    } else {
                        images.push(p);
                    }
                }
            }
        }

        let kernel_classes = match cfg.parse_list::<String>("kernel_classes")? {
            Some(names) => names.iter().map(|n| n.parse()).collect::<pdeconv::Result<Vec<KernelClass>>>()?,
            None => KernelClass::ALL.to_vec(),
        };
        let ppp_levels = cfg.parse_list("ppp")?.unwrap_or_else(|| vec![10.0, 30.0, 50.0]);

        let ids: Vec<String> = match cfg.parse_list::<String>("solvers")? {
            Some(ids) => ids,
            None => vec!["fio".into()],
        };
        let mut solvers = Vec::new();
        for id in ids {
            ensure!(
                !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
                "solver id `{id}` must be alphanumeric"
            );
            let section = cfg.section(&id);
            let kind: SolverKind = section.get("kind").unwrap_or(&id).parse()?;
            let mut config = match section.get("config") {
                Some(p) => Config::load(resolve(p)).with_context(|| format!("config for solver `{id}`"))?,
                None => Config::new(),
            };
            for (k, v) in section.entries() {
                if k != "kind" && k != "config" {
                    config.set(k.clone(), v);
                }
            }
            solvers.push(SolverEntry { id, kind, config });
        }

        let plan = Self {
            images,
            kernel_classes,
            kernels_per_class: cfg.parse_or("kernels_per_class", KERNELS_PER_CLASS)?,
            ppp_levels,
            solvers,
            seed: cfg.parse_or("seed", DEFAULT_SEED)?,
            output_dir: cfg.get("output_dir").map(resolve),
            save_images: cfg.parse_or("save_images", false)?,
            record_timing: cfg.parse_or("record_timing", false)?,
            threads: cfg.parse_or("threads", 0)?,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.images.is_empty(), "plan has no images");
        ensure!(!self.kernel_classes.is_empty(), "plan has no kernel classes");
        ensure!(self.kernels_per_class > 0, "kernels_per_class must be positive");
        ensure!(!self.ppp_levels.is_empty(), "plan has no photon levels");
        ensure!(!self.solvers.is_empty(), "plan has no solvers");
        if let Some(p) = self.ppp_levels.iter().find(|p| **p <= 0.0 || !p.is_finite()) {
            bail!("photon level {p} must be positive");
        }
        let mut ids: Vec<&str> = self.solvers.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("solver id `{}` appears twice", w[0]);
        }
        Ok(())
    }

    /// Number of result rows a complete run produces.
    pub fn run_count(&self) -> usize {
        self.images.len() * self.kernel_classes.len() * self.kernels_per_class * self.ppp_levels.len() * self.solvers.len()
    }
}
