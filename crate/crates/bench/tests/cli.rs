use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdeconv::io::read_image;
use pdeconv::synth::{degrade, DegradationSpec};
use pdeconv::tune::KernelClass;
use pdeconv::{psnr, Image};
use pdeconv_bench::run::{read_csv, run_plan};
use pdeconv_bench::suite::{list_images, run_seed, suite_dir, suite_kernel};
use pdeconv_bench::{ExperimentPlan, SolverEntry};

fn pdeconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdeconv")).args(args).output().expect("spawn pdeconv")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn sample() -> PathBuf {
    list_images(&suite_dir()).unwrap()[0].clone()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in `{line}`"))
        .parse()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metrics_of_identical_images() {
    let out = stdout(&pdeconv(&["metrics", s(&sample()), s(&sample())]));
    assert_eq!(out.trim(), "psnr_db=100.0 ssim=1.0");
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pfm");
    let b = dir.path().join("b.pfm");
    for p in [&a, &b] {
        stdout(&pdeconv(&["simulate", "--input", s(&sample()), "--output", s(p), "--ppp", "10", "--seed", "7"]));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(dir.path().join("a.pfm.alpha")).unwrap(), fs::read(dir.path().join("b.pfm.alpha")).unwrap());
    let counts: Image = read_image(&a).unwrap();
    assert!(counts.data().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
}

#[test]
fn deconv_report_matches_metrics_on_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("y.pfm");
    let restored = dir.path().join("x.pfm");
    stdout(&pdeconv(&["simulate", "--input", s(&sample()), "--output", s(&counts), "--ppp", "30", "--seed", "3"]));
    let printed = stdout(&pdeconv(&[
        "deconv",
        "--input",
        s(&counts),
        "--output",
        s(&restored),
        "--solver",
        "fio",
        "--iters",
        "8",
        "--reference",
        s(&sample()),
    ]));
    let measured = stdout(&pdeconv(&["metrics", s(&sample()), s(&restored)]));
    assert!((field(&printed, "psnr_db") - field(&measured, "psnr_db")).abs() < 1e-9);
    assert!((field(&printed, "ssim") - field(&measured, "ssim")).abs() < 1e-9);
    assert!(field(&printed, "psnr_db") > 18.0);
}

#[test]
fn deconv_accepts_schedule_flags() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("y.pfm");
    stdout(&pdeconv(&[
        "simulate",
        "--input",
        s(&sample()),
        "--output",
        s(&counts),
        "--ppp",
        "10",
        "--kernel-class",
        "small",
    ]));
    let out = dir.path().join("x.pfm");
    stdout(&pdeconv(&[
        "deconv",
        "--input",
        s(&counts),
        "--output",
        s(&out),
        "--kernel-class",
        "small",
        "--mu",
        "1,2,4",
        "--lambda",
        "3",
        "--bank",
        "deriv3",
    ]));
    let x: Image = read_image(&out).unwrap();
    assert_eq!(x.shape(), (128, 128));
}

#[test]
fn bad_flags_exit_two_and_failures_exit_one() {
    let usage = pdeconv(&["metrics"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(pdeconv(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pdeconv(&["deconv", "--input", "x.pfm", "--output", "y.pfm", "--solver", "admm"]).status.code(), Some(2));
    let missing = pdeconv(&["metrics", "/nonexistent/a.pgm", "/nonexistent/b.pgm"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
    assert_eq!(pdeconv(&["ablate", "secret6"]).status.code(), Some(1));
}

fn small_plan(dir: &Path, solvers: Vec<SolverEntry>) -> ExperimentPlan {
    let mut plan = ExperimentPlan::standard(solvers).unwrap();
    plan.images = vec![sample()];
    plan.kernel_classes = vec![KernelClass::Small];
    plan.kernels_per_class = 1;
    plan.ppp_levels = vec![10.0, 30.0];
    plan.output_dir = Some(dir.to_path_buf());
    plan.save_images = true;
    plan
}

#[test]
fn identity_rows_score_the_normalized_observation() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(dir.path(), vec![SolverEntry::default_for(pdeconv::solvers::SolverKind::Identity)]);
    let outcome = run_plan(&plan).unwrap();
    assert_eq!(outcome.rows.len(), 2);
    let clean: Image = read_image(sample()).unwrap();
    let id = pdeconv_bench::suite::image_id(&sample());
    for row in &outcome.rows {
        let seed = run_seed(plan.seed, &id, KernelClass::Small, 0, row.ppp);
        let spec = DegradationSpec::new(suite_kernel(KernelClass::Small, 0).unwrap(), row.ppp, seed).unwrap();
        let y = degrade(&clean, &spec).unwrap().normalized().quantize_f32();
        assert_eq!(row.psnr_db, psnr(&clean, &y).unwrap());
        assert_eq!(row.iterations, 0);
    }
}

#[test]
fn saved_images_rescore_to_logged_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(
        dir.path(),
        vec![
            SolverEntry::default_for(pdeconv::solvers::SolverKind::Fio),
            SolverEntry::default_for(pdeconv::solvers::SolverKind::Vstp),
        ],
    );
    let outcome = run_plan(&plan).unwrap();
    let mut csv = Vec::new();
    pdeconv_bench::write_csv(&outcome.rows, &mut csv).unwrap();
    let rows = read_csv(csv.as_slice()).unwrap();
    assert_eq!(rows, outcome.rows);
    let clean: Image = read_image(sample()).unwrap();
    for row in &rows {
        let restored: Image = read_image(dir.path().join("restored").join(row.image_file())).unwrap();
        assert!((psnr(&clean, &restored).unwrap() - row.psnr_db).abs() < 1e-9);
    }
    assert!(String::from_utf8(csv)
        .unwrap()
        .starts_with("image_id,kernel_class,kernel_index,ppp,solver_id,psnr_db,ssim,wall_time_ms,iterations\n"));
}

#[test]
fn adding_a_solver_leaves_other_rows_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let wiener = SolverEntry::default_for(pdeconv::solvers::SolverKind::Wiener);
    let tv = SolverEntry::default_for(pdeconv::solvers::SolverKind::TvOnly);
    let mut one = small_plan(dir.path(), vec![wiener.clone()]);
    one.save_images = false;
    let mut two = one.clone();
    two.solvers.push(tv);
    let a = run_plan(&one).unwrap().rows;
    let b: Vec<_> = run_plan(&two).unwrap().rows.into_iter().filter(|r| r.solver_id == "wiener").collect();
    assert_eq!(a, b);
}

#[test]
fn bench_skips_unreadable_inputs_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.pgm");
    fs::write(&bad, b"P5\n4 4\n255\nxx").unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(
        &plan,
        format!(
            "images = {}, broken.pgm\nkernel_classes = small\nkernels_per_class = 1\nppp = 10\nsolvers = wiener\n",
            s(&sample())
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = pdeconv(&["bench", "--plan", s(&plan), "--output-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.pgm"));
    let rows = read_csv(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn bench_uses_output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(
        &plan,
        format!("images = {}\nkernel_classes = small\nkernels_per_class = 1\nppp = 10\nsolvers = identity\n", s(&sample())),
    )
    .unwrap();
    let env_dir = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_pdeconv"))
        .args(["bench", "--plan", s(&plan)])
        .env(pdeconv_bench::OUTPUT_DIR_ENV, &env_dir)
        .output()
        .unwrap();
    stdout(&o);
    assert!(env_dir.join("results.csv").exists());
}

#[test]
fn tune_writes_a_reloadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tune.cfg");
    fs::write(
        &spec,
        format!(
            "solver = wiener\nimages = {}\nkernel_class = small\nppp = 10\nbudget = 3\ngrid.wiener.lambda = 0.01, 0.05, 0.2\n",
            s(&sample())
        ),
    )
    .unwrap();
    let out = dir.path().join("tuned.cfg");
    let printed = stdout(&pdeconv(&["tune", "--spec", s(&spec), "--output", s(&out)]));
    assert!(printed.starts_with("3 evaluations"));
    let cfg = pdeconv::Config::load(&out).unwrap();
    assert_eq!(cfg.get("solver"), Some("wiener"));
    let lambda: f64 = cfg.parse_opt("wiener.lambda").unwrap().unwrap();
    assert!([0.01, 0.05, 0.2].contains(&lambda));

    fs::write(&spec, fs::read_to_string(&spec).unwrap().replace("budget = 3", "budget = 2")).unwrap();
    assert_eq!(pdeconv(&["tune", "--spec", s(&spec), "--output", s(&out)]).status.code(), Some(1));
}
