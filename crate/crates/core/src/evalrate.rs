//! Errors against a ground-truth density and log-log rate fits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{check_budget, Error, Result};
use crate::graph::{maximal_cliques, DEFAULT_CLIQUE_CEILING};
use crate::histfactor::fit::{fit_full_histogram, fit_product_histogram, FitOptions};
use crate::histfactor::{default_weight_cap, DEFAULT_REFINEMENT_BUDGET};
use crate::math::{ceil, checked_pow, ln, lower_median, midpoints, odometer_step, powf, sqrt};
use crate::neuralnet::{
    schedule, to_density, train, ArchitectureSchedule, CliqueNetModel, DensityMode,
    ScheduleOverrides, TrainConfig,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::synth::{GibbsConfig, TruthSpec};

/// Ceiling on quadrature points per error evaluation.
pub const ERROR_QUADRATURE_BUDGET: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorMode {
    /// Midpoint rule with `q` nodes per axis.
    Quadrature { q: usize },
    /// Mean over `k` seeded uniform points.
    Mc { k: usize, seed: u64 },
}

/// Estimate of an integral with its Monte Carlo standard error (zero for
/// quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub stderr: f64,
}

fn integrate<F: FnMut(&[f64]) -> f64>(d: usize, mode: ErrorMode, mut f: F) -> Result<Integral> {
    match mode {
        ErrorMode::Quadrature { q } => {
            if q == 0 {
                return Err(Error::invalid("quadrature needs q >= 1"));
            }
            let count = checked_pow(q, d).unwrap_or(u128::MAX);
            check_budget("error quadrature points", count, ERROR_QUADRATURE_BUDGET, "; use Monte Carlo mode")?;
            let nodes = midpoints(q);
            let mut digits = vec![0usize; d];
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            loop {
                for (xi, &i) in x.iter_mut().zip(&digits) {
                    *xi = nodes[i];
                }
                acc += f(&x);
                if !odometer_step(&mut digits, q) {
                    break;
                }
            }
            Ok(Integral {
                value: acc / count as f64,
                stderr: 0.0,
            })
        }
        ErrorMode::Mc { k, seed } => {
            if k < 2 {
                return Err(Error::invalid("Monte Carlo mode needs k >= 2"));
            }
            let mut rng = rng_from_seed(seed);
            let mut x = vec![0.0; d];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..k {
                x.iter_mut().for_each(|xi| *xi = rng.random::<f64>());
                let v = f(&x);
                sum += v;
                sq += v * v;
            }
            let kf = k as f64;
            let mean = sum / kf;
            let var = ((sq - kf * mean * mean) / (kf - 1.0)).max(0.0);
            Ok(Integral {
                value: mean,
                stderr: sqrt(var / kf),
            })
        }
    }
}

fn check_dims(a: &dyn Density, b: &dyn Density) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "densities have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.dim())
}

/// `∫ |p - p̂|` with its standard error.
pub fn l1_integral(estimate: &dyn Density, truth: &dyn Density, mode: ErrorMode) -> Result<Integral> {
    let d = check_dims(estimate, truth)?;
    integrate(d, mode, |x| (truth.density(x) - estimate.density(x)).abs())
}

/// `∫ (p - p̂)²` with its standard error.
pub fn l2_sq_integral(estimate: &dyn Density, truth: &dyn Density, mode: ErrorMode) -> Result<Integral> {
    let d = check_dims(estimate, truth)?;
    integrate(d, mode, |x| {
        let e = truth.density(x) - estimate.density(x);
        e * e
    })
}

/// `||p - p̂||_1`.
pub fn l1_error(estimate: &dyn Density, truth: &dyn Density, mode: ErrorMode) -> Result<f64> {
    let v = l1_integral(estimate, truth, mode)?.value;
    if !v.is_finite() {
        return Err(Error::Numeric(format!("L1 error evaluated to {v}")));
    }
    Ok(v)
}

/// `||p - p̂||_2`.
pub fn l2_error(estimate: &dyn Density, truth: &dyn Density, mode: ErrorMode) -> Result<f64> {
    let v = l2_sq_integral(estimate, truth, mode)?.value;
    if !v.is_finite() {
        return Err(Error::Numeric(format!("L2 error evaluated to {v}")));
    }
    Ok(sqrt(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `ln error` on `ln n`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.iter().any(|&(n, e)| !(n > 0.0) || !(e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid("slope fit needs positive n and positive finite errors"));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid("slope fit needs at least three distinct n values"));
    }
    let xs: Vec<f64> = points.iter().map(|p| ln(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| ln(p.1)).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = if xs.len() > 2 {
        sqrt(rss / (k - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Product histogram over the truth graph's maximal cliques.
    StructuredHistogram,
    /// Unconstrained histogram on the full grid.
    FullHistogram,
    /// Product of per-clique ReLU nets.
    CliqueNet,
}

impl EstimatorKind {
    pub fn id(self) -> &'static str {
        match self {
            EstimatorKind::StructuredHistogram => "structured-histogram",
            EstimatorKind::FullHistogram => "full-histogram",
            EstimatorKind::CliqueNet => "clique-net",
        }
    }
}

/// Network settings for the clique-net estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetRateConfig {
    pub overrides: ScheduleOverrides,
    pub lr: f64,
    pub steps: usize,
    pub batch: usize,
    /// Output clip `F`; `None` uses the histogram weight cap.
    pub clip: Option<f64>,
}

impl Default for NetRateConfig {
    fn default() -> Self {
        Self {
            overrides: ScheduleOverrides {
                max_depth: Some(2),
                max_width: Some(16),
            },
            lr: 0.01,
            steps: 10_000,
            batch: 64,
            clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub estimator: EstimatorKind,
    pub truth: TruthSpec,
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Multiplier on the bin-count schedule.
    #[serde(default = "one")]
    pub schedule_constant: f64,
    /// Error quadrature uses the smallest multiple of `b` at least this.
    #[serde(default = "default_min_q")]
    pub error_min_q: usize,
    #[serde(default)]
    pub gibbs: GibbsConfig,
    #[serde(default)]
    pub net: NetRateConfig,
}

fn one() -> f64 {
    1.0
}

fn default_min_q() -> usize {
    48
}

/// Schedule actually used for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UsedSchedule {
    Histogram { b: usize, cap: f64, error_q: usize },
    Net { schedule: ArchitectureSchedule, widths: Vec<Vec<usize>>, error_q: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub seed: u64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub schedule: Option<UsedSchedule>,
    pub failure: Option<String>,
}

/// `⌈c n^{1/(k+2)}⌉`, at least 1.
pub fn histogram_resolution(n: usize, k: usize, c: f64) -> usize {
    (ceil(c * powf(n as f64, 1.0 / (k as f64 + 2.0))) as usize).max(1)
}

/// Smallest multiple of `b` that is at least `min_q`.
pub fn error_resolution(b: usize, min_q: usize) -> usize {
    let b = b.max(1);
    b * min_q.div_ceil(b).max(1)
}

fn try_cell(config: &RateConfig, n: usize, seed: u64) -> Result<(f64, f64, UsedSchedule)> {
    let truth = config.truth.build()?;
    if !truth.is_normalized() {
        return Err(Error::invalid("rate experiments need a truth with known normaliser"));
    }
    let d = truth.graph().vertex_count();
    let cliques = maximal_cliques(truth.graph(), DEFAULT_CLIQUE_CEILING)?;
    let r = cliques.max_size();
    let sampled = truth.sample(n, derive_seed(seed, "rate-sample", n as u64), &config.gibbs)?;
    let samples = sampled.samples;
    let cap = default_weight_cap(truth.lipschitz(), d).max(truth.sup_bound());
    match config.estimator {
        EstimatorKind::StructuredHistogram | EstimatorKind::FullHistogram => {
            let structured = config.estimator == EstimatorKind::StructuredHistogram;
            let k = if structured { r } else { d };
            let b = histogram_resolution(n, k, config.schedule_constant);
            let h = if structured {
                let opts = FitOptions::default();
                fit_product_histogram(d, &cliques.cliques, &samples, b, cap, &opts)?
                    .histogram
                    .normalize(DEFAULT_REFINEMENT_BUDGET)?
            } else {
                fit_full_histogram(&samples, b, DEFAULT_REFINEMENT_BUDGET)?
            };
            let q = error_resolution(b, config.error_min_q);
            let mode = ErrorMode::Quadrature { q };
            let l1 = l1_error(&h, &truth, mode)?;
            let l2 = l2_error(&h, &truth, mode)?;
            Ok((l1, l2, UsedSchedule::Histogram { b, cap, error_q: q }))
        }
        EstimatorKind::CliqueNet => {
            let sched = schedule(n, r, config.net.overrides)?;
            let clip = config.net.clip.unwrap_or(cap);
            let model = CliqueNetModel::init(d, &cliques.cliques, &sched, clip, derive_seed(seed, "rate-net", n as u64))?;
            let cfg = TrainConfig {
                seed: derive_seed(seed, "rate-train", n as u64),
                lr: config.net.lr,
                steps: config.net.steps,
                batch: config.net.batch,
                norm_batch: config.net.batch,
                norm_mode: None,
                prune: false,
            };
            let trained = train(&model, &samples, &sched, &cfg)?.model;
            let q = config.error_min_q;
            let mode = ErrorMode::Quadrature { q };
            let raw = to_density(&trained, DensityMode::Raw, q)?;
            let dens = to_density(&trained, DensityMode::ClippedNormalized, q)?;
            let l1 = l1_error(&dens, &truth, mode)?;
            let l2 = l2_error(&raw, &truth, mode)?;
            let widths = cliques.iter().map(|c| sched.widths(c.len())).collect();
            Ok((l1, l2, UsedSchedule::Net { schedule: sched, widths, error_q: q }))
        }
    }
}

/// One `(n, seed)` cell. Failures are recorded, not propagated.
pub fn run_rate_cell(config: &RateConfig, n: usize, seed: u64) -> CellResult {
    match try_cell(config, n, seed) {
        Ok((l1, l2, s)) => CellResult {
            n,
            seed,
            l1: Some(l1),
            l2: Some(l2),
            schedule: Some(s),
            failure: None,
        },
        Err(e) => CellResult {
            n,
            seed,
            l1: None,
            l2: None,
            schedule: None,
            failure: Some(e.to_string()),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub n: usize,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub estimator: String,
    pub config: RateConfig,
    pub d: usize,
    pub r: usize,
    pub cells: Vec<CellResult>,
    pub medians: Vec<MedianRow>,
    pub slope_l1: Option<SlopeFit>,
    pub slope_l2: Option<SlopeFit>,
    /// `-1/(2+r)` for histograms (`-1/(2+d)` for the full grid), `-1/(4+r)` for nets.
    pub predicted_slope: f64,
    pub slope_failure: Option<String>,
}

/// Merges cells (in any order) into a report, sorted by `(n, seed)`.
pub fn assemble_report(config: &RateConfig, mut cells: Vec<CellResult>) -> Result<RateReport> {
    let truth = config.truth.build()?;
    let d = truth.graph().vertex_count();
    let r = maximal_cliques(truth.graph(), DEFAULT_CLIQUE_CEILING)?.max_size();
    cells.sort_by_key(|c| (c.n, c.seed));
    let mut ns: Vec<usize> = cells.iter().map(|c| c.n).collect();
    ns.dedup();
    let medians: Vec<MedianRow> = ns
        .iter()
        .map(|&n| {
            let row: Vec<&CellResult> = cells.iter().filter(|c| c.n == n).collect();
            let l1: Vec<f64> = row.iter().filter_map(|c| c.l1).collect();
            let l2: Vec<f64> = row.iter().filter_map(|c| c.l2).collect();
            MedianRow {
                n,
                l1: (!l1.is_empty()).then(|| lower_median(&l1)),
                l2: (!l2.is_empty()).then(|| lower_median(&l2)),
                succeeded: l1.len(),
                failed: row.len() - l1.len(),
            }
        })
        .collect();
    let fit = |pick: fn(&MedianRow) -> Option<f64>| {
        let pts: Vec<(f64, f64)> = medians
            .iter()
            .filter_map(|m| pick(m).map(|e| (m.n as f64, e)))
            .collect();
        fit_slope(&pts)
    };
    let (slope_l1, slope_l2, slope_failure) = match (fit(|m| m.l1), fit(|m| m.l2)) {
        (Ok(a), Ok(b)) => (Some(a), Some(b), None),
        (Err(e), _) | (_, Err(e)) => (None, None, Some(e.to_string())),
    };
    let predicted_slope = match config.estimator {
        EstimatorKind::StructuredHistogram => -1.0 / (2.0 + r as f64),
        EstimatorKind::FullHistogram => -1.0 / (2.0 + d as f64),
        EstimatorKind::CliqueNet => -1.0 / (4.0 + r as f64),
    };
    Ok(RateReport {
        estimator: config.estimator.id().into(),
        config: config.clone(),
        d,
        r,
        cells,
        medians,
        slope_l1,
        slope_l2,
        predicted_slope,
        slope_failure,
    })
}

/// Every `(n, seed)` cell in sequence.
pub fn run_rate_experiment(config: &RateConfig) -> Result<RateReport> {
    if config.ns.is_empty() || config.seeds.is_empty() {
        return Err(Error::invalid("rate experiment needs at least one n and one seed"));
    }
    let cells = config
        .ns
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .map(|(n, s)| run_rate_cell(config, n, s))
        .collect();
    assemble_report(config, cells)
}
