//! Tuning jobs described in `key = value` files.
//!
//! ```text
//! solver = fio
//! objective = psnr                 # or l1
//! budget = 60
//! images = ../data/suite           # files or directories
//! kernel_class = medium
//! kernel_index = 0
//! ppp = 30
//! seed = 20
//! grid.fio.lambda = 1.5, 2, 2.5, 3
//! grid.fio.mu_scale = logspace(0.1, 1, 5)
//! base.fio.iters = 8               # fixed solver keys
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pdeconv::config::parse_list;
use pdeconv::solvers::SolverKind;
use pdeconv::synth::DegradationSpec;
use pdeconv::tune::{GridAxis, KernelClass, TuneSpec, ValidationItem};
use pdeconv::Config;

use crate::suite::{list_images, load_images, run_seed, suite_dir, suite_kernel, DEFAULT_SEED};

fn parse_axis(key: &str, raw: &str) -> Result<GridAxis> {
    if let Some(args) = raw.strip_prefix("logspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<f64> = parse_list(args).with_context(|| format!("bad logspace for `{key}`"))?;
        let [lo, hi, n] = parts[..] else {
            bail!("logspace for `{key}` needs (lo, hi, n)");
        };
        if n.fract() != 0.0 || n < 1.0 {
            bail!("logspace count for `{key}` must be a positive integer");
        }
        return Ok(GridAxis::log_space(key, lo, hi, n as usize)?);
    }
    let values = parse_list(raw).with_context(|| format!("bad grid values for `{key}`"))?;
    Ok(GridAxis::new(key, values)?)
}

pub fn load_tune_spec(path: &Path) -> Result<(SolverKind, TuneSpec)> {
    let cfg = Config::load(path).with_context(|| format!("reading {}", path.display()))?;
    tune_spec_from_config(&cfg, path.parent().unwrap_or(Path::new(".")))
}

pub fn tune_spec_from_config(cfg: &Config, base_dir: &Path) -> Result<(SolverKind, TuneSpec)> {
    let solver: SolverKind = cfg.get("solver").unwrap_or("fio").parse()?;
    let grid = cfg.section("grid").entries().iter().map(|(k, v)| parse_axis(k, v)).collect::<Result<Vec<_>>>()?;

    let mut paths: Vec<PathBuf> = Vec::new();
    match cfg.get("images") {
        None => paths = list_images(&suite_dir())?,
        Some(raw) => {
            for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let p = base_dir.join(item);
                if p.is_dir() {
                    paths.extend(list_images(&p)?);
                } else {
                    paths.push(p);
                }
            }
        }
    }
    let class: KernelClass = cfg.get("kernel_class").unwrap_or("medium").parse()?;
    let index = cfg.parse_or("kernel_index", 0usize)?;
    let ppp = cfg.parse_or("ppp", 30.0)?;
    let seed = cfg.parse_or("seed", DEFAULT_SEED)?;
    let kernel = suite_kernel(class, index)?;
    let validation = load_images(&paths)?
        .into_iter()
        .map(|s| {
            let run = run_seed(seed, &s.id, class, index, ppp);
            Ok(ValidationItem { clean: s.image, degradation: DegradationSpec::new(kernel.clone(), ppp, run)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut base = cfg.section("base");
    base.set("tune.kernel_class", class);
    base.set("tune.ppp", ppp);
    let spec = TuneSpec {
        objective: cfg.get("objective").unwrap_or("psnr").parse()?,
        grid,
        budget: cfg.parse_or("budget", 60)?,
        validation,
        base,
    };
    Ok((solver, spec))
}
