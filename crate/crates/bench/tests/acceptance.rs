//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pdeconv::denoise::DenoiserSpec;
use pdeconv::metrics::mse;
use pdeconv::solvers::{feature_aggregate, solve_fio, FilterBank, FioConfig, HqsSchedule, Stencil};
use pdeconv::spectral::{hqs_data_step, inversion_module, precompute_kernel, wiener};
use pdeconv::synth::{make_gaussian_kernel, sample_poisson};
use pdeconv::transforms::anscombe;
use pdeconv::{Image, Kernel};
use pdeconv_bench::ablation::{run_ablation, AblationName, AblationOptions};
use pdeconv_bench::run::{grouped_means, read_csv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---- dense circulant oracles ----

fn circulant(taps: &[f64], rows: usize, cols: usize, anchor: (usize, usize), h: usize, w: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h * w, h * w);
    for r in 0..h {
        for c in 0..w {
            for i in 0..rows {
                for j in 0..cols {
                    let sr = (r + h + anchor.0 - i) % h;
                    let sc = (c + w + anchor.1 - j) % w;
                    m[(r * w + c, sr * w + sc)] += taps[i * cols + j];
                }
            }
        }
    }
    m
}

fn stencil_matrix(s: &Stencil, n: usize) -> DMatrix<f64> {
    circulant(&s.taps, s.rows, s.cols, s.anchor, n, n)
}

fn max_err(a: &Image, b: &DVector<f64>) -> f64 {
    a.data().iter().zip(b.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn spectral_oracles() -> Outcome {
    const N: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 4];
    let eye = DMatrix::<f64>::identity(N * N, N * N);
    let bank = FilterBank::deriv3();
    let fm: Vec<DMatrix<f64>> = bank.stencils().iter().map(|s| stencil_matrix(s, N)).collect();
    let mut gram = DMatrix::zeros(N * N, N * N);
    for f in &fm {
        gram += f.transpose() * f;
    }
    let gram_lu = gram.lu();
    for _ in 0..25 {
        let kernel = Kernel::normalized(3, (0..9).map(|_| rng.random::<f64>() + 0.05).collect()).unwrap();
        let mut img = || Image::from_fn(N, N, |_, _| rng.random::<f64>());
        let (y, prev) = (img(), img());
        let z: Vec<Image> = (0..3).map(|_| img()).collect();
        let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
        let mu = 10f64.powf(rng.random_range(-1.0..2.0));

        let hm = circulant(kernel.taps(), 3, 3, (1, 1), N, N);
        let hk = precompute_kernel(&kernel, N, N).unwrap();
        let ht = hm.transpose();
        let yv = DVector::from_column_slice(y.data());
        let pv = DVector::from_column_slice(prev.data());

        let w = (&ht * &hm + &eye * lambda).lu().solve(&(&ht * &yv)).unwrap();
        worst[0] = worst[0].max(max_err(&wiener(&y, &hk, lambda).unwrap(), &w));

        let s = (&eye + &ht * &hm * mu).lu().solve(&(&pv + &ht * &yv * mu)).unwrap();
        worst[1] = worst[1].max(max_err(&hqs_data_step(&prev, &y, &hk, mu).unwrap(), &s));

        let rho = 1.0 / mu;
        let v = (&ht * &hm + &eye * rho).lu().solve(&(&ht * &yv + &pv * rho)).unwrap();
        worst[2] = worst[2].max(max_err(&inversion_module(&y, &prev, &hk, rho).unwrap(), &v));

        let mut rhs = DVector::zeros(N * N);
        for (f, zi) in fm.iter().zip(&z) {
            rhs += f.transpose() * DVector::from_column_slice(zi.data());
        }
        let a = gram_lu.solve(&rhs).unwrap();
        worst[3] = worst[3].max(max_err(&feature_aggregate(&z, &bank).unwrap(), &a));
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max < 1e-8,
        format!(
            "max abs err wiener {:.1e}, hqs_data_step {:.1e}, inversion_module {:.1e}, feature_aggregate {:.1e} (tol 1e-8)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn exact_inversion() -> Outcome {
    let kernel: Kernel = make_gaussian_kernel(5, 0.5, 0.5, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Image::from_fn(128, 128, |_, _| rng.random::<f64>());
    let hk = precompute_kernel(&kernel, 128, 128).unwrap();
    let y = hk.blur(&x).unwrap();
    let w_rmse = mse(&x, &wiener(&y, &hk, 0.0).unwrap()).unwrap().sqrt();
    let cfg = FioConfig::new(HqsSchedule::geometric(8, 100.0, 2.0, 1.0).unwrap(), DenoiserSpec::identity());
    let f_rmse = mse(&x, &solve_fio(&y, &kernel, &FilterBank::identity(), &cfg).unwrap()).unwrap().sqrt();
    outcome(
        w_rmse < 1e-8 && f_rmse < 1e-3,
        format!("wiener(λ=0) rmse {w_rmse:.1e} (tol 1e-8), fio K=8 rmse {f_rmse:.1e} (tol 1e-3)"),
    )
}

fn poisson_statistics() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, lambda) in [1.0, 10.0, 30.0, 100.0].into_iter().enumerate() {
        let draws = sample_poisson(&Image::filled(100, 1000, lambda), 300 + i as u64).unwrap();
        let n = draws.len() as f64;
        let mean = draws.mean();
        let var = draws.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let ok = (mean - lambda).abs() <= 0.05 * lambda && (var - lambda).abs() <= 0.05 * lambda;
        let mut part = format!("λ={lambda}: mean {mean:.3} var {var:.3}");
        let mut ok_std = true;
        if lambda >= 10.0 {
            let t = anscombe(&draws).unwrap();
            let tm = t.mean();
            let sd = (t.data().iter().map(|v| (v - tm).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            ok_std = (0.9..=1.1).contains(&sd);
            part += &format!(" vst std {sd:.3}");
        }
        pass &= ok && ok_std;
        parts.push(part);
    }
    outcome(pass, parts.join("; "))
}

fn options() -> AblationOptions {
    AblationOptions::standard().expect("bundled suite")
}

fn iterations() -> Outcome {
    let r = run_ablation(AblationName::Iterations, &options()).unwrap();
    let p: Vec<f64> = r.arms.iter().map(|a| a.psnr_db).collect();
    let monotone = p.windows(2).all(|w| w[1] >= w[0]);
    let gain = r.delta_db();
    outcome(
        monotone && gain > 0.3,
        format!(
            "K=1/2/4/8 mean psnr {:.3}/{:.3}/{:.3}/{:.3} dB, K8−K1 {gain:+.3} dB (need > 0.3, non-decreasing)",
            p[0], p[1], p[2], p[3]
        ),
    )
}

fn feature_space() -> Outcome {
    let r = run_ablation(AblationName::FeatureSpace, &options()).unwrap();
    let d = r.delta_db();
    outcome(
        d >= 0.0,
        format!(
            "identity {:.4} dB, deriv3 {:.4} dB, difference {d:+.2e} dB (need ≥ 0)",
            r.baseline().psnr_db,
            r.treatment().psnr_db
        ),
    )
}

fn vst() -> Outcome {
    let r = run_ablation(AblationName::Vst, &options()).unwrap();
    let gap = r.mean_abs_delta("vstp_vst", "vstp_plain");
    let by_ppp = grouped_means(&r.rows, |row| (row.ppp as u64, row.solver_id.clone()));
    let levels: Vec<String> = [10u64, 30, 50]
        .iter()
        .map(|&p| format!("{p}: {:.3}/{:.3}", by_ppp[&(p, "vstp_vst".into())].0, by_ppp[&(p, "vstp_plain".into())].0))
        .collect();
    outcome(
        gap < 0.2,
        format!(
            "mean |Δpsnr| {gap:.3} dB (need < 0.2), mean Δ {:+.3} dB; with/without VST by ppp {}",
            r.delta_db(),
            levels.join(", ")
        ),
    )
}

fn tuning() -> Outcome {
    let r = run_ablation(AblationName::TunedParams, &options()).unwrap();
    let t = r.tuning.as_ref().unwrap();
    let arg = t.argbest(pdeconv::tune::Objective::Psnr);
    let entry = &t.trace[arg];
    let best_matches = entry.objective == t.best_objective
        && entry.values.iter().all(|(k, v)| t.best.parse_opt::<f64>(k).unwrap() == Some(*v))
        && t.trace.iter().all(|e| e.objective <= t.best_objective);
    let d = r.delta_db();
    outcome(
        d >= -0.05 && best_matches,
        format!(
            "heuristic {:.3} dB, tuned {:.3} dB, Δ {d:+.3} dB (need ≥ −0.05); {} evaluations, best = trace argmax: {best_matches}",
            r.baseline().psnr_db,
            r.treatment().psnr_db,
            t.trace.len()
        ),
    )
}

fn wiener_presence() -> Outcome {
    let r = run_ablation(AblationName::WienerPresence, &options()).unwrap();
    let d = r.delta_db();
    outcome(
        d >= 1.0,
        format!(
            "tv-only {:.3} dB, wiener+tv {:.3} dB, gain {d:+.3} dB (need ≥ 1)",
            r.baseline().psnr_db,
            r.treatment().psnr_db
        ),
    )
}

const BENCH_SOLVERS: [&str; 5] = ["fio", "vstp", "let", "wiener_tv", "wiener"];

fn write_plan(dir: &Path) -> std::path::PathBuf {
    let plan = dir.join("plan.cfg");
    let text = format!(
        "images = {}\nkernel_classes = small, medium, large\nppp = 10, 30, 50\nseed = 20\nsolvers = {}\nsave_images = true\n",
        pdeconv_bench::suite::suite_dir().display(),
        BENCH_SOLVERS.join(", ")
    );
    std::fs::write(&plan, text).unwrap();
    plan
}

fn bench_run(plan: &Path, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_pdeconv"))
        .arg("bench")
        .arg("--plan")
        .arg(plan)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("spawn pdeconv");
    assert!(status.status.success(), "bench failed: {}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("results.csv")).unwrap()
}

fn ppp_monotonicity(csv: &[u8]) -> Outcome {
    let rows = read_csv(csv).unwrap();
    let means = grouped_means(&rows, |r| (r.solver_id.clone(), r.ppp as u64));
    let mut pass = rows.len() == 10 * 9 * 3 * BENCH_SOLVERS.len();
    let mut parts = Vec::new();
    for s in BENCH_SOLVERS {
        let p: Vec<f64> = [10u64, 30, 50].iter().map(|&l| means[&(s.to_string(), l)].0).collect();
        pass &= p[0] < p[1] && p[1] < p[2];
        parts.push(format!("{s} {:.2}/{:.2}/{:.2}", p[0], p[1], p[2]));
    }
    outcome(pass, format!("{} rows; mean psnr at ppp 10/30/50: {}", rows.len(), parts.join(", ")))
}

fn determinism(dir: &Path, plan: &Path, first: &[u8]) -> Outcome {
    let second_dir = dir.join("second");
    let second = bench_run(plan, &second_dir);
    let mut images_equal = true;
    let mut count = 0;
    for entry in std::fs::read_dir(dir.join("first").join("restored")).unwrap() {
        let p = entry.unwrap().path();
        let other = second_dir.join("restored").join(p.file_name().unwrap());
        images_equal &= std::fs::read(&p).ok() == std::fs::read(&other).ok();
        count += 1;
    }
    outcome(
        first == second.as_slice() && images_equal,
        format!(
            "CSV {} bytes identical: {}; {count} restored PFMs identical: {images_equal}",
            first.len(),
            first == second.as_slice()
        ),
    )
}

fn main() -> ExitCode {
    // the shared bench run feeds criteria 9 and 10
    let tmp = tempfile::tempdir().unwrap();
    let plan = write_plan(tmp.path());
    let mut first: Vec<u8> = Vec::new();

    type Check<'a> = Box<dyn FnMut() -> Outcome + 'a>;
    let checks: Vec<(u32, &str, Option<u64>, Check)> = vec![
        (1, "spectral oracle equivalence", Some(10), Box::new(spectral_oracles)),
        (2, "exact inversion", Some(5), Box::new(exact_inversion)),
        (3, "Poisson statistics", Some(30), Box::new(poisson_statistics)),
        (4, "more iterations help", Some(300), Box::new(iterations)),
        (5, "feature space", Some(300), Box::new(feature_space)),
        (6, "VST unneeded", Some(300), Box::new(vst)),
        (7, "tuned parameters", Some(900), Box::new(tuning)),
        (8, "Wiener presence", Some(180), Box::new(wiener_presence)),
        (
            9,
            "PSNR increases with ppp",
            Some(600),
            Box::new(|| {
                first = bench_run(&plan, &tmp.path().join("first"));
                ppp_monotonicity(&first)
            }),
        ),
    ];
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Option<u64>, elapsed: Duration, o: Outcome| {
        let in_time = limit.is_none_or(|l| elapsed <= Duration::from_secs(l));
        let pass = o.pass && in_time;
        if !pass {
            failures += 1;
        }
        let limit = limit.map_or(String::new(), |l| format!(", limit {l} s"));
        println!(
            "{} criterion {id:>2} {name}: {} [{:.1} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    };
    for (id, name, limit, mut check) in checks {
        let start = Instant::now();
        let o = check();
        report(id, name, limit, start.elapsed(), o);
    }
    let start = Instant::now();
    let o = determinism(tmp.path(), &plan, &first);
    report(10, "determinism", None, start.elapsed(), o);

    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
