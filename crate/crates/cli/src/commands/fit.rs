use mrfdens_core::evalrate::histogram_resolution;
use mrfdens_core::graph::maximal_cliques;
use mrfdens_core::histfactor::fit::{fit_full_histogram, fit_product_histogram, FitOptions};
use mrfdens_core::histfactor::{default_weight_cap, HistogramDoc};
use mrfdens_core::neuralnet::{
    schedule, surrogate_loss, train, ArchitectureSchedule, CliqueNetModel, ModelDoc, NormMode, ScheduleOverrides,
    TrainConfig,
};
use mrfdens_core::rng::derive_seed;
use mrfdens_core::scheffe::{estimate_vn, CandidateMode, VnOverrides, VnReport};
use serde::Serialize;

use super::{build_graph, run_config};
use crate::args::{CoverMode, FitHistArgs, FitNnArgs, HistMethod, NormKind};
use crate::error::{CliError, CliResult};
use crate::io;

/// Cap used when none is given: the Lipschitz-1 weight bound.
fn fallback_cap(d: usize) -> f64 {
    default_weight_cap(1.0, d)
}

#[derive(Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
enum HistDetails {
    Product { loss: f64, sweeps: usize },
    Full,
    Vn { report: VnReport },
}

#[derive(Serialize)]
struct HistOutput {
    config: serde_json::Value,
    n: usize,
    d: usize,
    r: usize,
    b: usize,
    cap: Option<f64>,
    cliques: Vec<Vec<usize>>,
    fit: HistDetails,
    histogram: HistogramDoc,
}

pub fn run_hist(a: &FitHistArgs) -> CliResult<()> {
    let g = build_graph(&a.graph)?.graph;
    let samples = io::read_samples(&a.samples)?.with_seed(a.seed);
    let d = g.vertex_count();
    if samples.dim() != d {
        return Err(CliError::usage(format!(
            "samples have {} columns but the graph has {d} vertices",
            samples.dim()
        )));
    }
    let cs = maximal_cliques(&g, a.graph.clique_ceiling)?;
    let r = cs.max_size();
    let n = samples.len();
    let (h, b, cap, fit) = match a.method {
        HistMethod::Product => {
            let b = a.bins.unwrap_or_else(|| histogram_resolution(n, r, a.schedule_constant));
            let cap = a.cap.unwrap_or_else(|| fallback_cap(d));
            let opts = FitOptions {
                refinement_budget: a.refinement_budget,
                ..FitOptions::default()
            };
            let f = fit_product_histogram(d, &cs.cliques, &samples, b, cap, &opts)?;
            let h = f.histogram.normalize(a.refinement_budget)?;
            (h, b, Some(cap), HistDetails::Product {
                loss: f.loss,
                sweeps: f.sweeps,
            })
        }
        HistMethod::Full => {
            let b = a.bins.unwrap_or_else(|| histogram_resolution(n, d, a.schedule_constant));
            (fit_full_histogram(&samples, b, a.refinement_budget)?, b, None, HistDetails::Full)
        }
        HistMethod::Vn => {
            let mode = match a.cover_mode {
                CoverMode::Auto => None,
                CoverMode::Exhaustive => Some(CandidateMode::Exhaustive {
                    budget: a.candidates as u128,
                }),
                CoverMode::Sampled => Some(CandidateMode::Sampled {
                    count: a.candidates,
                    seed: derive_seed(a.seed, "vn-candidates", 0),
                }),
            };
            let est = estimate_vn(
                &g,
                &samples,
                &VnOverrides {
                    b: a.bins,
                    cap: a.cap,
                    cover_eps: a.cover_eps,
                    mode,
                },
            )?;
            let (b, cap) = (est.report.b, est.report.cap);
            (est.density, b, Some(cap), HistDetails::Vn { report: est.report })
        }
    };
    let out = HistOutput {
        config: run_config("fit-hist", a),
        n,
        d,
        r,
        b,
        cap,
        cliques: cs.cliques,
        fit,
        histogram: HistogramDoc::from(&h),
    };
    io::emit(a.out.as_deref(), &io::to_json(&out))
}

#[derive(Serialize)]
struct NnOutput {
    config: serde_json::Value,
    train: TrainConfig,
    n: usize,
    d: usize,
    r: usize,
    schedule: ArchitectureSchedule,
    norm_mode: NormMode,
    /// Surrogate loss on all samples after training, with `norm_mode`.
    final_loss: f64,
    /// Mini-batch losses at up to 101 evenly spaced steps.
    loss_trace: Vec<(usize, f64)>,
    model: ModelDoc,
}

fn resolve_train(a: &FitNnArgs, n: usize) -> CliResult<TrainConfig> {
    if let Some(path) = &a.train_config {
        return io::read_json(path);
    }
    let norm_mode = match a.norm {
        NormKind::Mc => NormMode::Mc {
            n_prime: a.n_prime.unwrap_or(4 * n),
            seed: derive_seed(a.seed, "norm-pool", 0),
        },
        NormKind::Exact => NormMode::Exact { q: a.norm_q },
    };
    Ok(TrainConfig {
        seed: a.seed,
        lr: a.lr,
        steps: a.steps,
        batch: a.batch,
        norm_batch: a.norm_batch,
        norm_mode: Some(norm_mode),
        prune: a.prune,
    })
}

pub fn run_nn(a: &FitNnArgs) -> CliResult<()> {
    let g = build_graph(&a.graph)?.graph;
    let samples = io::read_samples(&a.samples)?;
    let d = g.vertex_count();
    if samples.dim() != d {
        return Err(CliError::usage(format!(
            "samples have {} columns but the graph has {d} vertices",
            samples.dim()
        )));
    }
    let cs = maximal_cliques(&g, a.graph.clique_ceiling)?;
    let r = cs.max_size();
    let n = samples.len();
    let cfg = resolve_train(a, n)?;
    let sched = schedule(
        n,
        r,
        ScheduleOverrides {
            max_depth: Some(a.max_depth),
            max_width: Some(a.max_width),
        },
    )?;
    let clip = a.clip.unwrap_or_else(|| fallback_cap(d));
    let init = CliqueNetModel::init(d, &cs.cliques, &sched, clip, derive_seed(cfg.seed, "net-init", 0))?;
    log::info!("training {} parameters for {} steps", init.param_count(), cfg.steps);
    let outcome = train(&init, &samples, &sched, &cfg)?;
    let final_loss = surrogate_loss(&outcome.model, &samples, outcome.norm_mode)?;
    let stride = (outcome.trace.len() / 100).max(1);
    let mut loss_trace: Vec<(usize, f64)> = outcome.trace.iter().copied().enumerate().step_by(stride).collect();
    if let Some(&last) = outcome.trace.last() {
        let i = outcome.trace.len() - 1;
        if loss_trace.last().map(|p| p.0) != Some(i) {
            loss_trace.push((i, last));
        }
    }
    let out = NnOutput {
        config: run_config("fit-nn", a),
        train: TrainConfig {
            norm_mode: Some(outcome.norm_mode),
            ..cfg
        },
        n,
        d,
        r,
        schedule: sched,
        norm_mode: outcome.norm_mode,
        final_loss,
        loss_trace,
        model: ModelDoc::from(&outcome.model),
    };
    io::emit(a.out.as_deref(), &io::to_json(&out))
}
