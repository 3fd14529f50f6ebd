use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use pdeconv::io::{read_image, write_image};
use pdeconv::solvers::{SolveContext, SolverSpec};
use pdeconv::synth::{degrade, DegradationSpec};
use pdeconv::tune::KernelClass;
use pdeconv::{psnr, ssim, Image, Kernel};
use rayon::prelude::*;

use crate::plan::ExperimentPlan;
use crate::suite::{image_id, run_seed, suite_kernel};

pub const CSV_HEADER: [&str; 9] =
    ["image_id", "kernel_class", "kernel_index", "ppp", "solver_id", "psnr_db", "ssim", "wall_time_ms", "iterations"];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub image_id: String,
    pub kernel_class: KernelClass,
    pub kernel_index: usize,
    pub ppp: f64,
    pub solver_id: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub wall_time_ms: f64,
    pub iterations: usize,
}

impl ResultRow {
    fn sort_key(&self) -> (&str, KernelClass, usize, u64, &str) {
        (&self.image_id, self.kernel_class, self.kernel_index, self.ppp.to_bits(), &self.solver_id)
    }

    /// Name of the restored image written for this row.
    pub fn image_file(&self) -> String {
        format!("{}_{}{}_ppp{}_{}.pfm", self.image_id, self.kernel_class, self.kernel_index, self.ppp, self.solver_id)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanOutcome {
    pub rows: Vec<ResultRow>,
    /// Inputs that could not be read, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

struct Cell<'a> {
    image_id: &'a str,
    clean: &'a Image,
    class: KernelClass,
    kernel_index: usize,
    kernel: &'a Kernel,
    ppp: f64,
}

/// Degrades every (image, kernel, ppp) cell once and runs every solver on
/// it. Restored images are scored after rounding to `f32`, the precision
/// they are stored at, so a saved image re-scores to the logged value.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    plan.validate()?;
    let mut skipped = Vec::new();
    let mut images = Vec::new();
    for path in &plan.images {
        match read_image::<f64>(path) {
            Ok(img) if img.min_value() >= 0.0 && img.max_value() <= 1.0 => images.push((image_id(path), img)),
            Ok(_) => skipped.push((path.clone(), "pixel values outside [0, 1]".to_string())),
            Err(e) => skipped.push((path.clone(), e.to_string())),
        }
    }
    let mut kernels = Vec::new();
    for &class in &plan.kernel_classes {
        for index in 0..plan.kernels_per_class {
            kernels.push((class, index, suite_kernel(class, index)?));
        }
    }
    let mut cells = Vec::new();
    for (id, clean) in &images {
        for (class, index, kernel) in &kernels {
            for &ppp in &plan.ppp_levels {
                cells.push(Cell { image_id: id, clean, class: *class, kernel_index: *index, kernel, ppp });
            }
        }
    }

    let restored_dir = match (&plan.output_dir, plan.save_images) {
        (Some(dir), true) => {
            let d = dir.join("restored");
            std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
            Some(d)
        }
        _ => None,
    };
    let work = || -> Result<Vec<ResultRow>> {
        let nested =
            cells.par_iter().map(|cell| run_cell(plan, cell, restored_dir.as_deref())).collect::<Result<Vec<_>>>()?;
        Ok(nested.into_iter().flatten().collect())
    };
    let mut rows = if plan.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(plan.threads).build()?.install(work)?
    } else {
        work()?
    };
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(PlanOutcome { rows, skipped })
}

fn run_cell(plan: &ExperimentPlan, cell: &Cell<'_>, restored_dir: Option<&Path>) -> Result<Vec<ResultRow>> {
    let seed = run_seed(plan.seed, cell.image_id, cell.class, cell.kernel_index, cell.ppp);
    let obs = degrade(cell.clean, &DegradationSpec::new(cell.kernel.clone(), cell.ppp, seed)?)?;
    let y = obs.normalized();
    let ctx = SolveContext { ppp: cell.ppp, alpha: obs.alpha };
    let mut rows = Vec::with_capacity(plan.solvers.len());
    for entry in &plan.solvers {
        let spec = SolverSpec::from_config(entry.kind, &entry.config, cell.ppp, cell.kernel.size())
            .with_context(|| format!("configuring solver `{}`", entry.id))?;
        let start = Instant::now();
        let estimate = spec
            .solve(&y, cell.kernel, ctx, Some(cell.clean))
            .with_context(|| format!("solver `{}` on {}", entry.id, cell.image_id))?
            .quantize_f32();
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let row = ResultRow {
            image_id: cell.image_id.to_string(),
            kernel_class: cell.class,
            kernel_index: cell.kernel_index,
            ppp: cell.ppp,
            solver_id: entry.id.clone(),
            psnr_db: psnr(cell.clean, &estimate)?,
            ssim: ssim(cell.clean, &estimate)?,
            wall_time_ms: if plan.record_timing { elapsed } else { 0.0 },
            iterations: spec.iterations(),
        };
        if let Some(dir) = restored_dir {
            write_image(dir.join(row.image_file()), &estimate.cast::<f32>())?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.kernel_class.to_string(),
            r.kernel_index.to_string(),
            r.ppp.to_string(),
            r.solver_id.clone(),
            r.psnr_db.to_string(),
            r.ssim.to_string(),
            format!("{:.3}", r.wall_time_ms),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        bail!("unexpected CSV header");
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).context("short CSV record");
        rows.push(ResultRow {
            image_id: field(0)?.to_string(),
            kernel_class: field(1)?.parse()?,
            kernel_index: field(2)?.parse()?,
            ppp: field(3)?.parse()?,
            solver_id: field(4)?.to_string(),
            psnr_db: field(5)?.parse()?,
            ssim: field(6)?.parse()?,
            wall_time_ms: field(7)?.parse()?,
            iterations: field(8)?.parse()?,
        });
    }
    Ok(rows)
}

/// Mean PSNR and SSIM per solver id.
pub fn solver_means(rows: &[ResultRow]) -> BTreeMap<String, (f64, f64)> {
    grouped_means(rows, |r| r.solver_id.clone())
}

/// Mean PSNR and SSIM grouped by an arbitrary key.
pub fn grouped_means<K: Ord>(rows: &[ResultRow], key: impl Fn(&ResultRow) -> K) -> BTreeMap<K, (f64, f64)> {
    let mut acc: BTreeMap<K, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry(key(r)).or_default();
        e.0 += r.psnr_db;
        e.1 += r.ssim;
        e.2 += 1;
    }
    acc.into_iter().map(|(k, (p, s, n))| (k, (p / n as f64, s / n as f64))).collect()
}
