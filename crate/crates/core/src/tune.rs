//! Validation-set search over solver hyperparameters, and the hand-set
//! schedule it is compared against.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::config::Config;
use crate::error::{config_err, Error, Result};
use crate::image::ImageGrid;
use crate::metrics::{mae, psnr};
use crate::solvers::{HqsSchedule, SolveContext, SolverKind, SolverSpec};
use crate::synth::{degrade, DegradationSpec};

/// Final penalty of the heuristic ramp, per photon: `μ^K = 0.5 · ppp`.
pub const DEFAULT_MU_SCALE: f64 = 0.5;
pub const DEFAULT_RATIO: f64 = 2.0;

/// Blur size classes of the evaluation protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelClass {
    Small,
    Medium,
    Large,
}

impl KernelClass {
    pub const ALL: [KernelClass; 3] = [Self::Small, Self::Medium, Self::Large];

    pub fn size(self) -> usize {
        match self {
            Self::Small => 9,
            Self::Medium => 27,
            Self::Large => 45,
        }
    }

    /// Nearest class for an arbitrary kernel size.
    pub fn for_size(size: usize) -> Self {
        if size <= 18 {
            Self::Small
        } else if size <= 36 {
            Self::Medium
        } else {
            Self::Large
        }
    }

    pub fn prior_weight(self) -> f64 {
        match self {
            Self::Small => 3.0,
            Self::Medium => 2.5,
            Self::Large => 2.0,
        }
    }
}

impl FromStr for KernelClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Self::Small),
            "medium" => Ok(Self::Medium),
            "large" => Ok(Self::Large),
            other => config_err(format!("unknown kernel class `{other}`")),
        }
    }
}

impl fmt::Display for KernelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        })
    }
}

/// Geometric ramp `μ^k = μ₀·2^(k−1)` ending at `μ^K = 0.5·ppp`, so `μ₀` is
/// proportional to the photon level; `λ` is fixed per kernel class.
pub fn heuristic_schedule(iterations: usize, ppp: f64, kernel_size: usize) -> Result<HqsSchedule> {
    if iterations == 0 {
        return config_err("schedule needs at least one iteration");
    }
    if !(ppp > 0.0) || !ppp.is_finite() {
        return config_err(format!("ppp must be positive, got {ppp}"));
    }
    let mu0 = DEFAULT_MU_SCALE * ppp / DEFAULT_RATIO.powi(iterations as i32 - 1);
    HqsSchedule::geometric(iterations, mu0, DEFAULT_RATIO, KernelClass::for_size(kernel_size).prior_weight())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// Mean PSNR, maximized.
    #[default]
    Psnr,
    /// Mean absolute error, minimized.
    L1,
}

impl Objective {
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Self::Psnr => a > b,
            Self::L1 => a < b,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psnr" => Ok(Self::Psnr),
            "l1" => Ok(Self::L1),
            other => config_err(format!("unknown objective `{other}`")),
        }
    }
}

/// Candidate values for one configuration key.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(key: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let key = key.into();
        if values.is_empty() {
            return config_err(format!("grid for `{key}` is empty"));
        }
        Ok(Self { key, values })
    }

    /// `n` log-spaced values from `lo` to `hi` inclusive.
    pub fn log_space(key: impl Into<String>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return config_err(format!("bad log range [{lo}, {hi}] with {n} points"));
        }
        let values = if n == 1 {
            vec![lo]
        } else {
            let step = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| lo * (step * i as f64).exp()).collect()
        };
        Self::new(key, values)
    }
}

/// One clean validation image and how to degrade it.
#[derive(Clone, Debug)]
pub struct ValidationItem {
    pub clean: ImageGrid<f64>,
    pub degradation: DegradationSpec<f64>,
}

#[derive(Clone, Debug)]
pub struct TuneSpec {
    pub objective: Objective,
    pub grid: Vec<GridAxis>,
    pub budget: usize,
    pub validation: Vec<ValidationItem>,
    /// Starting configuration; grid keys are overwritten during the search.
    pub base: Config,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    /// Grid values, in sorted key order.
    pub values: Vec<(String, f64)>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult {
    pub best: Config,
    pub best_objective: f64,
    pub trace: Vec<TraceEntry>,
}

impl TuneResult {
    /// Index of the best trace entry (first one on ties).
    pub fn argbest(&self, objective: Objective) -> usize {
        let mut best = 0;
        for (i, e) in self.trace.iter().enumerate() {
            if objective.better(e.objective, self.trace[best].objective) {
                best = i;
            }
        }
        best
    }
}

struct Prepared {
    clean: ImageGrid<f64>,
    y: ImageGrid<f64>,
    kernel: crate::image::BlurKernel<f64>,
    ctx: SolveContext,
}

/// Mean objective of `cfg` over the prepared validation set.
fn evaluate(kind: SolverKind, cfg: &Config, items: &[Prepared], objective: Objective) -> Result<f64> {
    let mut total = 0.0;
    for it in items {
        let solver = SolverSpec::from_config(kind, cfg, it.ctx.ppp, it.kernel.size())?;
        let est = solver.solve(&it.y, &it.kernel, it.ctx, Some(&it.clean))?;
        total += match objective {
            Objective::Psnr => psnr(&it.clean, &est)?,
            Objective::L1 => mae(&it.clean, &est)?,
        };
    }
    Ok(total / items.len() as f64)
}

/// Coordinate descent over the grid: keys are visited in sorted order, each
/// is set to its best grid value with the others held, and passes repeat
/// until one brings no improvement or the budget runs out. Evaluations are
/// cached, so revisiting a configuration is free.
pub fn tune_schedule(solver: SolverKind, spec: &TuneSpec) -> Result<TuneResult> {
    if spec.validation.is_empty() {
        return config_err("validation set is empty");
    }
    if spec.grid.is_empty() {
        return config_err("tuning grid is empty");
    }
    let mut grid = spec.grid.clone();
    grid.sort_by(|a, b| a.key.cmp(&b.key));
    if grid.windows(2).any(|w| w[0].key == w[1].key) {
        return config_err("duplicate key in tuning grid");
    }
    let pass: usize = grid.iter().map(|a| a.values.len()).sum();
    if spec.budget < pass {
        return Err(Error::Budget(format!("budget {} is below one coordinate pass ({pass} evaluations)", spec.budget)));
    }

    let items = spec
        .validation
        .iter()
        .map(|v| {
            let obs = degrade(&v.clean, &v.degradation)?;
            Ok(Prepared {
                clean: v.clean.clone(),
                y: obs.normalized(),
                kernel: v.degradation.kernel.clone(),
                ctx: SolveContext { ppp: v.degradation.ppp, alpha: obs.alpha },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // current position as grid indices; starts at each key's base value when
    // it is on the grid, else at the first grid value
    let mut pos: Vec<usize> = grid
        .iter()
        .map(|a| {
            let base: Option<f64> = spec.base.parse_opt(&a.key).ok().flatten();
            base.and_then(|b| a.values.iter().position(|&v| v == b)).unwrap_or(0)
        })
        .collect();
    let config_at = |pos: &[usize]| {
        let mut c = spec.base.clone();
        for (a, &i) in grid.iter().zip(pos) {
            c.set(a.key.clone(), a.values[i]);
        }
        c
    };

    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut trace = Vec::new();
    let mut best: Option<(Vec<usize>, f64)> = None;
    'search: loop {
        let mut improved = false;
        for axis in 0..grid.len() {
            let mut axis_best: Option<(usize, f64)> = None;
            for i in 0..grid[axis].values.len() {
                let mut cand = pos.clone();
                cand[axis] = i;
                let value = match cache.get(&cand) {
                    Some(&v) => v,
                    None => {
                        if trace.len() >= spec.budget {
                            break 'search;
                        }
                        let v = evaluate(solver, &config_at(&cand), &items, spec.objective)?;
                        trace.push(TraceEntry {
                            values: grid.iter().zip(&cand).map(|(a, &j)| (a.key.clone(), a.values[j])).collect(),
                            objective: v,
                        });
                        cache.insert(cand.clone(), v);
                        v
                    }
                };
                if axis_best.is_none_or(|(_, b)| spec.objective.better(value, b)) {
                    axis_best = Some((i, value));
                }
                if best.as_ref().is_none_or(|(_, b)| spec.objective.better(value, *b)) {
                    best = Some((cand, value));
                    improved = true;
                }
            }
            if let Some((i, _)) = axis_best {
                pos[axis] = i;
            }
        }
        if !improved {
            break;
        }
    }
    let (best_pos, best_objective) = best.expect("budget covers at least one pass");
    Ok(TuneResult { best: config_at(&best_pos), best_objective, trace })
}

/// Writes the solver and grid keys of a tuned configuration. Floats use
/// shortest round-trip formatting, so reloading is bit-exact.
pub fn tuned_config(solver: SolverKind, result: &TuneResult) -> Config {
    let mut c = result.best.clone();
    c.set("solver", solver);
    c.set("objective", result.best_objective);
    c
}
