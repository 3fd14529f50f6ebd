use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pdeconv::io::{read_image, read_kernel, write_image, write_kernel};
use pdeconv::solvers::{SolveContext, SolverKind, SolverSpec};
use pdeconv::synth::{degrade, DegradationSpec};
use pdeconv::tune::{tune_schedule, tuned_config, KernelClass};
use pdeconv::{Config, Image, Kernel, QualityReport};
use pdeconv_bench::ablation::{run_ablation, AblationName, AblationOptions};
use pdeconv_bench::run::{run_plan, solver_means, write_csv};
use pdeconv_bench::suite::suite_kernel;
use pdeconv_bench::tunefile::load_tune_spec;
use pdeconv_bench::{default_output_dir, ExperimentPlan};

#[derive(Parser)]
#[command(name = "pdeconv", version, about = "Poisson image deconvolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur a clean image and sample Poisson counts.
    Simulate(SimulateArgs),
    /// Restore an image from photon counts.
    Deconv(DeconvArgs),
    /// Run an experiment plan and write a CSV report.
    Bench(BenchArgs),
    /// Search solver hyperparameters on a validation set.
    Tune(TuneArgs),
    /// Compare two images.
    Metrics { reference: PathBuf, estimate: PathBuf },
    /// Run a paired ablation (or `all`).
    Ablate(AblateArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel text file; overrides the built-in suite kernels.
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long, default_value = "medium")]
    kernel_class: KernelClass,
    #[arg(long, default_value_t = 0)]
    kernel_index: usize,
}

impl KernelArgs {
    fn load(&self) -> Result<Kernel> {
        match &self.kernel {
            Some(p) => read_kernel(p).with_context(|| format!("reading kernel {}", p.display())),
            None => suite_kernel(self.kernel_class, self.kernel_index),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Clean image in [0, 1] (PGM or PFM).
    #[arg(long)]
    input: PathBuf,
    /// Photon counts, written as PFM; the photon scale goes to `<output>.alpha`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    ppp: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Also write the kernel used.
    #[arg(long)]
    kernel_out: Option<PathBuf>,
}

#[derive(Args)]
struct DeconvArgs {
    /// Photon counts (PFM or PGM).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Photon scale; read from `<input>.alpha` when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Solver config file (`key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    iters: Option<usize>,
    /// Explicit penalty schedule, comma separated.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    bank: Option<String>,
    /// Clean image to score the result against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Overrides the plan's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Tuned config destination; defaults to `<output dir>/tuned_<solver>.cfg`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// iterations, feature_space, vst, tuned_params, wiener_presence or all.
    name: String,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".alpha");
    s.into()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let clean: Image = read_image(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let kernel = a.kernel.load()?;
    let obs = degrade(&clean, &DegradationSpec::new(kernel.clone(), a.ppp, a.seed)?)?;
    write_image(&a.output, &obs.counts.cast::<f32>())?;
    let mut meta = Config::new();
    meta.set("alpha", obs.alpha);
    meta.set("ppp", a.ppp);
    meta.set("seed", a.seed);
    meta.save(sidecar(&a.output))?;
    if let Some(p) = &a.kernel_out {
        write_kernel(p, &kernel)?;
    }
    println!("alpha={:?} mean_count={:?}", obs.alpha, obs.counts.mean());
    Ok(())
}

fn deconv(a: DeconvArgs) -> Result<()> {
    let counts: Image = read_image(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let kernel = a.kernel.load()?;
    let meta = match fs::read_to_string(sidecar(&a.input)) {
        Ok(text) => Config::parse(&text)?,
        Err(_) => Config::new(),
    };
    let alpha = match a.alpha.or(meta.parse_opt("alpha")?) {
        Some(v) => v,
        None => bail!("no --alpha given and no sidecar next to {}", a.input.display()),
    };
    if alpha <= 0.0 || !alpha.is_finite() {
        bail!("alpha must be positive");
    }
    let ppp = meta.parse_opt("ppp")?.unwrap_or_else(|| counts.mean());

    let mut cfg = match &a.config {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::new(),
    };
    if let Some(k) = a.iters {
        cfg.set("fio.iters", k);
        cfg.set("vstp.iters", k);
    }
    if let Some(mu) = &a.mu {
        cfg.set("fio.mu", mu);
    }
    if let Some(l) = a.lambda {
        cfg.set("fio.lambda", l);
    }
    if let Some(b) = &a.bank {
        cfg.set("fio.bank", b);
    }
    let kind = match a.solver {
        Some(k) => k,
        None => cfg.get("solver").unwrap_or("fio").parse()?,
    };
    let reference: Option<Image> = a.reference.as_ref().map(read_image).transpose()?;
    let spec = SolverSpec::from_config(kind, &cfg, ppp, kernel.size())?;
    let y = counts.scale(1.0 / alpha);
    let estimate = spec.solve(&y, &kernel, SolveContext { ppp, alpha }, reference.as_ref())?.quantize_f32();
    write_image(&a.output, &estimate.cast::<f32>())?;
    if let Some(r) = &reference {
        let q = QualityReport::compute(r, &estimate)?;
        println!("psnr_db={:?} ssim={:?}", q.psnr_db, q.ssim);
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let mut plan = ExperimentPlan::load(&a.plan)?;
    if let Some(d) = a.output_dir {
        plan.output_dir = Some(d);
    }
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(t) = a.threads {
        plan.threads = t;
    }
    let dir = plan.output_dir.clone().unwrap_or_else(default_output_dir);
    plan.output_dir = Some(dir.clone());
    let outcome = run_plan(&plan)?;
    fs::create_dir_all(&dir)?;
    let csv_path = dir.join("results.csv");
    write_csv(&outcome.rows, fs::File::create(&csv_path)?)?;
    for (id, (p, s)) in solver_means(&outcome.rows) {
        println!("{id:<16} psnr_db={p:.3} ssim={s:.4}");
    }
    println!("{} rows -> {}", outcome.rows.len(), csv_path.display());
    if outcome.skipped.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (p, why) in &outcome.skipped {
            eprintln!("skipped {}: {why}", p.display());
        }
        eprintln!("{} input(s) skipped", outcome.skipped.len());
        Ok(ExitCode::FAILURE)
    }
}

fn tune(a: TuneArgs) -> Result<()> {
    let (solver, spec) = load_tune_spec(&a.spec)?;
    let result = tune_schedule(solver, &spec)?;
    let out = a.output.unwrap_or_else(|| default_output_dir().join(format!("tuned_{solver}.cfg")));
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    tuned_config(solver, &result).save(&out)?;
    println!("{} evaluations, best objective {:?} -> {}", result.trace.len(), result.best_objective, out.display());
    Ok(())
}

fn metrics(reference: &Path, estimate: &Path) -> Result<()> {
    let a: Image = read_image(reference).with_context(|| format!("reading {}", reference.display()))?;
    let b: Image = read_image(estimate).with_context(|| format!("reading {}", estimate.display()))?;
    let q = QualityReport::compute(&a, &b)?;
    println!("psnr_db={:?} ssim={:?}", q.psnr_db, q.ssim);
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let names = if a.name == "all" { AblationName::ALL.to_vec() } else { vec![a.name.parse()?] };
    let mut opts = AblationOptions::standard()?;
    if let Some(s) = a.seed {
        opts.seed = s;
    }
    if let Some(t) = a.threads {
        opts.threads = t;
    }
    let dir = a.output_dir.unwrap_or_else(default_output_dir);
    for name in names {
        let report = run_ablation(name, &opts)?;
        report.write(&dir)?;
        println!("{report}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| ExitCode::SUCCESS),
        Command::Deconv(a) => deconv(a).map(|_| ExitCode::SUCCESS),
        Command::Bench(a) => bench(a),
        Command::Tune(a) => tune(a).map(|_| ExitCode::SUCCESS),
        Command::Metrics { reference, estimate } => metrics(&reference, &estimate).map(|_| ExitCode::SUCCESS),
        Command::Ablate(a) => ablate(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
