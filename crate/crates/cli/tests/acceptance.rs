//! Acceptance suite. Every criterion prints one PASS/FAIL line straight to
//! stdout (so the lines survive output capture) and the test fails if any
//! criterion does. `ACCEPTANCE_ONLY=3,7` runs a subset.

use std::io::Write;
use std::time::Instant;

use mrfdens_core::density::Uniform;
use mrfdens_core::evalrate::{
    assemble_report, l2_error, run_rate_cell, EstimatorKind, ErrorMode, NetRateConfig, RateConfig,
};
use mrfdens_core::graph::{
    clique_size_formula, max_clique_size, maximal_cliques, BoundKind, Family, MrfGraph, DEFAULT_CLIQUE_CEILING,
};
use mrfdens_core::hcfactor::{hc_potentials, max_reconstruction_error, DensityOracle};
use mrfdens_core::histfactor::{
    approx_lipschitz, cover_size, covering_bound_log, default_weight_cap, expected_surrogate_loss,
    lipschitz_l1_bound, quantized_cover, round_to_cover, HistogramFactor, ProductHistogram,
    DEFAULT_REFINEMENT_BUDGET as BUDGET,
};
use mrfdens_core::math::lower_median;
use mrfdens_core::neuralnet::{
    loss_and_grad, matched_width, schedule, to_density, train, CliqueNetModel, DensityMode, ReluNet,
    ScheduleOverrides, TrainConfig, PARAM_BOUND,
};
use mrfdens_core::pixeldiag::{pair_scatter, synthetic_grid_corpus, Condition, Pixel, Selection, SyntheticCorpusSpec};
use mrfdens_core::rng::{component_rng, derive_seed, Rng};
use mrfdens_core::scheffe::{required_samples, scheffe_select, CandidateSet};
use mrfdens_core::synth::{make_chain_density, GibbsConfig, PairPotential, TruthSpec};
use rand::Rng as _;
use rayon::prelude::*;

const MASTER: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

// ---------------------------------------------------------------- 1

/// Exact maximum clique by branch and bound with a greedy colouring bound.
/// Independent of the library's Bron–Kerbosch search.
fn brute_max_clique(g: &MrfGraph) -> usize {
    let d = g.vertex_count();
    assert!(d <= 64);
    let adj: Vec<u64> = (1..=d)
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << (u - 1)))
        .collect();

    fn colour(adj: &[u64], p: u64) -> (Vec<usize>, Vec<usize>) {
        let (mut order, mut colours) = (Vec::new(), Vec::new());
        let mut left = p;
        let mut k = 0;
        while left != 0 {
            k += 1;
            let mut q = left;
            while q != 0 {
                let v = q.trailing_zeros() as usize;
                q &= !(1 << v) & !adj[v];
                left &= !(1 << v);
                order.push(v);
                colours.push(k);
            }
        }
        (order, colours)
    }

    fn expand(adj: &[u64], size: usize, mut p: u64, best: &mut usize) {
        if p == 0 {
            *best = (*best).max(size);
            return;
        }
        let (order, colours) = colour(adj, p);
        for i in (0..order.len()).rev() {
            if size + colours[i] <= *best {
                return;
            }
            let v = order[i];
            expand(adj, size + 1, p & adj[v], best);
            p &= !(1 << v);
        }
    }

    let mut best = 0;
    let all = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    expand(&adj, 0, all, &mut best);
    best
}

fn criterion_1() -> Outcome {
    let mut cases = Vec::new();
    for d in 1..=64 {
        for t in 1..=3 {
            cases.push((Family::Path, vec![d], t));
        }
    }
    for rows in 1..=8 {
        for cols in 1..=8 {
            for t in 1..=3 {
                // the grid formulas assume t < min(rows, cols)
                if t < rows.min(cols) {
                    cases.push((Family::Grid, vec![rows, cols], t));
                    cases.push((Family::GridDiag, vec![rows, cols], t));
                }
            }
        }
    }
    let mut failures = Vec::new();
    for (family, dims, t) in &cases {
        let g = MrfGraph::structured_power(*family, dims, *t).unwrap();
        let brute = brute_max_clique(&g);
        let search = max_clique_size(&g, DEFAULT_CLIQUE_CEILING).unwrap();
        let bound = clique_size_formula(*family, *t, dims).unwrap();
        let ok = search == brute
            && match bound.kind {
                BoundKind::Exact => brute == bound.value,
                BoundKind::UpperBound => brute <= bound.value,
            };
        if !ok {
            failures.push(format!("{family:?} {dims:?} t={t}: brute {brute}, search {search}, formula {}", bound.value));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} (family, dims, t) cases; mismatches: {:?}", cases.len(), failures),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let potentials = [
        PairPotential::cosine(0.5),
        PairPotential::cosine(0.9),
        PairPotential::cosine(-0.7),
        PairPotential::Gaussian { beta: 3.0 },
    ];
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for d in 2..=4 {
        for pot in potentials {
            let p = make_chain_density(d, pot, 256).unwrap();
            let oracle = DensityOracle::new(d, |x: &[f64]| p.eval_exact(x).unwrap_or(f64::NAN));
            let cs = maximal_cliques(p.graph(), DEFAULT_CLIQUE_CEILING).unwrap();
            let tables = hc_potentials(&oracle, &cs, 16).unwrap();
            let err = max_reconstruction_error(&oracle, &tables, 16).unwrap();
            worst = if err.is_nan() { f64::NAN } else { worst.max(err) };
            runs += 1;
        }
    }
    outcome(
        worst < 1e-9,
        format!("{runs} chain densities, d in 2..=4, 16^d grid; max relative error {worst:.3e} (< 1e-9)"),
    )
}

// ---------------------------------------------------------------- 3

const ENUMERATION_LIMIT: u128 = 2_000_000;
const SCAN_LIMIT: u128 = 5_000;

fn factor_l1(a: &HistogramFactor, b: &HistogramFactor) -> f64 {
    ProductHistogram::single(a.clone())
        .l1_distance(&ProductHistogram::single(b.clone()), BUDGET)
        .unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = component_rng(MASTER, "cover", 0);
    let mut problems = Vec::new();
    let (mut configs, mut collected, mut streamed_configs, mut sampled) = (0, 0, 0, 0);
    for b in 1..=3usize {
        for card_v in 1..=2usize {
            for cap in [1.0, 2.0] {
                for eps in [1.0, 0.5, 0.25] {
                    configs += 1;
                    let vars: Vec<usize> = (1..=card_v).collect();
                    let bound = covering_bound_log(b, card_v, cap, eps).unwrap();
                    let size = cover_size(b, card_v, cap, eps).unwrap().unwrap();
                    let levels = (cap / eps).floor() as usize + 1;
                    let members: Option<Vec<HistogramFactor>> = if size <= ENUMERATION_LIMIT {
                        let all: Vec<HistogramFactor> = quantized_cover(card_v, b, vars.clone(), cap, eps, size)
                            .unwrap()
                            .collect();
                        collected += 1;
                        if all.len() as u128 != size {
                            problems.push(format!("b={b} |V|={card_v} C={cap} eps={eps}: enumerated {} != {size}", all.len()));
                        }
                        Some(all)
                    } else {
                        // too many to hold; stream and count
                        let streamed = quantized_cover(card_v, b, vars.clone(), cap, eps, size).unwrap().count() as u128;
                        if streamed != size {
                            problems.push(format!("b={b} |V|={card_v} C={cap} eps={eps}: streamed {streamed} != {size}"));
                        }
                        streamed_configs += 1;
                        None
                    };
                    let count = members.as_ref().map_or(size, |m| m.len() as u128);
                    if (count as f64).ln() > bound {
                        problems.push(format!("b={b} |V|={card_v} C={cap} eps={eps}: ln |cover| > {bound}"));
                    }
                    // family members: any weights in [0, C] on the b-grid
                    for _ in 0..200 {
                        let w: Vec<f64> = (0..b.pow(card_v as u32)).map(|_| rng.random_range(0.0..=cap)).collect();
                        let f = HistogramFactor::new(card_v, vars.clone(), b, cap, w).unwrap();
                        let r = round_to_cover(&f, eps).unwrap();
                        let on_grid = r.weights().iter().all(|&x| {
                            let k = x / eps;
                            k == k.round() && (k as usize) < levels
                        });
                        let dist = factor_l1(&f, &r);
                        let mut ok = on_grid && dist < eps;
                        if let Some(all) = members.as_ref().filter(|_| size <= SCAN_LIMIT) {
                            let nearest = all.iter().map(|m| factor_l1(&f, m)).fold(f64::INFINITY, f64::min);
                            ok &= nearest < eps && nearest <= dist;
                        }
                        if !ok {
                            problems.push(format!("b={b} |V|={card_v} C={cap} eps={eps}: member at L1 {dist} from cover"));
                        }
                        sampled += 1;
                    }
                }
            }
        }
    }
    problems.truncate(5);
    outcome(
        problems.is_empty(),
        format!(
            "{configs} configs, every cover enumerated ({collected} collected, {streamed_configs} streamed); {sampled} sampled members; problems: {problems:?}"
        ),
    )
}

// ---------------------------------------------------------------- 4

/// A Lipschitz function on `[0,1]^k` with its Lipschitz constant (Euclidean
/// metric) and an upper bound on its values.
struct TestFunction {
    f: Box<dyn Fn(&[f64]) -> f64>,
    lipschitz: f64,
    sup: f64,
}

fn random_lipschitz(k: usize, rng: &mut Rng) -> TestFunction {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    match rng.random_range(0..3) {
        0 => {
            let g: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c0 = g.iter().map(|x| (-x).max(0.0)).sum::<f64>() + rng.random_range(0.0..1.0);
            let sup = c0 + g.iter().map(|x| x.max(0.0)).sum::<f64>();
            let lipschitz = norm(&g);
            TestFunction {
                f: Box::new(move |x: &[f64]| c0 + x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()),
                lipschitz,
                sup,
            }
        }
        1 => {
            let centre: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = rng.random_range(0.5..5.0);
            TestFunction {
                f: Box::new(move |x: &[f64]| {
                    s * x.iter().zip(&centre).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()
                }),
                lipschitz: s,
                sup: s * (k as f64).sqrt(),
            }
        }
        _ => {
            let omega: Vec<f64> = (0..k).map(|_| rng.random_range(-12.0..12.0)).collect();
            let amp = rng.random_range(0.2..2.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let lipschitz = amp * norm(&omega);
            TestFunction {
                f: Box::new(move |x: &[f64]| {
                    amp * (1.0 + (x.iter().zip(&omega).map(|(a, w)| a * w).sum::<f64>() + phase).sin())
                }),
                lipschitz,
                sup: 2.0 * amp,
            }
        }
    }
}

/// Midpoint rule with `q` nodes per axis.
fn midpoint_mean(k: usize, q: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut digits = vec![0usize; k];
    let mut x = vec![0.0; k];
    let mut acc = 0.0;
    let total = q.pow(k as u32);
    for _ in 0..total {
        for (xi, &i) in x.iter_mut().zip(&digits) {
            *xi = (i as f64 + 0.5) / q as f64;
        }
        acc += f(&x);
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < q {
                break;
            }
            *dgt = 0;
        }
    }
    acc / total as f64
}

fn criterion_4() -> Outcome {
    let mut rng = component_rng(MASTER, "lipschitz", 0);
    let resolutions = [2usize, 4, 8, 16];
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..50 {
        let k = 1 + i % 2;
        let b = resolutions[(i / 2) % 4];
        let tf = random_lipschitz(k, &mut rng);
        let vars: Vec<usize> = (1..=k).collect();
        let h = approx_lipschitz(&tf.f, tf.sup + 1.0, k, b, vars).unwrap();
        let err = midpoint_mean(k, 10 * b, |x| ((tf.f)(x) - h.value_at(x)).abs());
        let bound = lipschitz_l1_bound(k, tf.lipschitz, b);
        worst_ratio = worst_ratio.max(err / bound);
        if err > bound + 1e-6 {
            failures.push(format!("#{i} |V|={k} b={b}: {err} > {bound}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("50 functions, |V| in {{1,2}}, b in {{2,4,8,16}}; max error/bound {worst_ratio:.3}; failures: {failures:?}"),
    )
}

// ---------------------------------------------------------------- 5

fn random_histogram(d: usize, b: usize, rng: &mut Rng) -> ProductHistogram {
    let cap = 2.0;
    let factors = if d == 2 && rng.random_bool(0.5) {
        (1..=2)
            .map(|v| {
                let w = (0..b).map(|_| rng.random_range(0.05..cap)).collect();
                HistogramFactor::new(2, vec![v], b, cap, w).unwrap()
            })
            .collect()
    } else {
        let w = (0..b.pow(d as u32)).map(|_| rng.random_range(0.05..cap)).collect();
        vec![HistogramFactor::new(d, (1..=d).collect(), b, cap, w).unwrap()]
    };
    ProductHistogram::new(d, b, factors).unwrap().normalize(BUDGET).unwrap()
}

fn criterion_5() -> Outcome {
    let delta = 0.1;
    let trials = 200;
    let results: Vec<(bool, usize, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = component_rng(MASTER, "scheffe", trial);
            let m = rng.random_range(2..=50);
            let d = rng.random_range(1..=2);
            let b = rng.random_range(2..=4);
            let eps = [0.05, 0.1, 0.2][rng.random_range(0..3)];
            let cands: Vec<ProductHistogram> = (0..m).map(|_| random_histogram(d, b, &mut rng)).collect();
            let planted = rng.random_range(0..m);
            let noise = random_histogram(d, b, &mut rng);
            let (p_k, q) = (&cands[planted], &noise);
            let mix = |x: &[f64]| 0.9 * p_k.eval(x).unwrap() + 0.1 * q.eval(x).unwrap();
            let peak = |h: &ProductHistogram| h.cell_values(BUDGET).unwrap().into_iter().fold(0.0, f64::max);
            let cap = peak(p_k).max(peak(q));
            let truth = ProductHistogram::single(approx_lipschitz(mix, cap, d, b, (1..=d).collect()).unwrap())
                .normalize(BUDGET)
                .unwrap();
            let n = required_samples(m, eps, delta).unwrap() as usize;
            let samples = truth.sample(n, derive_seed(MASTER, "scheffe-sample", trial), BUDGET).unwrap();
            let set = CandidateSet::new(cands.clone()).unwrap();
            let sel = scheffe_select(&set, &samples).unwrap();
            let dists: Vec<f64> = cands.iter().map(|c| c.l1_distance(&truth, BUDGET).unwrap()).collect();
            let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
            (dists[sel.winner] > 3.0 * best + 4.0 * eps, n, sel.winner == planted)
        })
        .collect();
    let violations = results.iter().filter(|r| r.0).count();
    let planted = results.iter().filter(|r| r.2).count();
    let rate = violations as f64 / trials as f64;
    let limit = delta / 3.0 + 0.03;
    let max_n = results.iter().map(|r| r.1).max().unwrap_or(0);
    outcome(
        rate <= limit,
        format!(
            "{trials} trials, M <= 50, d <= 2, n up to {max_n}; violation rate {rate:.3} (limit {limit:.4}); planted candidate chosen {planted}/{trials}"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let truth = TruthSpec::Chain {
        d: 3,
        potential: PairPotential::cosine(0.9),
        q: 256,
    };
    let ns: Vec<usize> = (8..=16).map(|k| 1usize << k).collect();
    let seeds: Vec<u64> = (0..20).collect();
    let run = |estimator| {
        let config = RateConfig {
            estimator,
            truth,
            ns: ns.clone(),
            seeds: seeds.clone(),
            schedule_constant: 1.0,
            error_min_q: 48,
            gibbs: GibbsConfig::default(),
            net: NetRateConfig::default(),
        };
        let jobs: Vec<(usize, u64)> = ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
        let cells = jobs.par_iter().map(|&(n, s)| run_rate_cell(&config, n, s)).collect();
        assemble_report(&config, cells).unwrap()
    };
    let structured = run(EstimatorKind::StructuredHistogram);
    let full = run(EstimatorKind::FullHistogram);
    let (Some(s), Some(f)) = (structured.slope_l1, full.slope_l1) else {
        return outcome(
            false,
            format!("slope fit failed: {:?} / {:?}", structured.slope_failure, full.slope_failure),
        );
    };
    let failed: usize = structured.medians.iter().chain(&full.medians).map(|m| m.failed).sum();
    outcome(
        (-0.33..=-0.17).contains(&s.slope) && s.slope < f.slope && failed == 0,
        format!(
            "structured L1 slope {:.4} (window [-0.33, -0.17]), full-histogram slope {:.4}; {failed} failed cells",
            s.slope, f.slope
        ),
    )
}

// ---------------------------------------------------------------- 7

fn gradient_check(config: u64) -> (f64, f64) {
    let mut rng = component_rng(MASTER, "gradcheck", config);
    let d = rng.random_range(2..=4);
    let count = rng.random_range(1..=3);
    let cliques: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            let mut c: Vec<usize> = (1..=d).filter(|_| rng.random_bool(0.6)).collect();
            if c.is_empty() {
                c.push(rng.random_range(1..=d));
            }
            c
        })
        .collect();
    let nets: Vec<ReluNet> = cliques
        .iter()
        .map(|c| {
            let depth = rng.random_range(1..=3);
            let mut widths = vec![c.len()];
            widths.extend((0..depth).map(|_| rng.random_range(2..=6)));
            widths.push(1);
            let mut net = ReluNet::near_constant(widths, &mut rng).unwrap();
            for p in net.params_mut() {
                *p = (*p + rng.random_range(-0.3..0.3)).clamp(-1.0, 1.0);
            }
            net
        })
        .collect();
    let mut model = CliqueNetModel::new(d, cliques, nets, 50.0).unwrap();
    let points = |rng: &mut Rng, k: usize| -> Vec<Vec<f64>> {
        (0..k).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect()
    };
    let xs = points(&mut rng, 8);
    let us = points(&mut rng, 8);
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let ur: Vec<&[f64]> = us.iter().map(Vec::as_slice).collect();
    let (_, grad) = loss_and_grad(&model, &xr, &ur, 1.0 / 8.0);
    let theta = model.flat_params();
    let h = 1e-6;
    let mut fd = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let mut t = theta.clone();
        t[i] = theta[i] + h;
        model.set_flat_params(&t);
        let up = loss_and_grad(&model, &xr, &ur, 1.0 / 8.0).0;
        t[i] = theta[i] - h;
        model.set_flat_params(&t);
        let down = loss_and_grad(&model, &xr, &ur, 1.0 / 8.0).0;
        fd[i] = (up - down) / (2.0 * h);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let scale = norm(&grad).max(norm(&fd));
    (if scale == 0.0 { 0.0 } else { norm(&diff) / scale }, norm(&grad))
}

struct NetRun {
    structured: f64,
    unstructured: f64,
    constant: f64,
    max_param: f64,
}

fn net_comparison(seed: u64) -> NetRun {
    let d = 4;
    let n = 10_000;
    let truth = make_chain_density(d, PairPotential::cosine(0.9), 256).unwrap();
    let samples = truth
        .sample(n, derive_seed(seed, "nn-sample", 0), &GibbsConfig::default())
        .unwrap()
        .samples;
    let cliques = maximal_cliques(truth.graph(), DEFAULT_CLIQUE_CEILING).unwrap();
    let r = cliques.max_size();
    let sched = schedule(
        n,
        r,
        ScheduleOverrides {
            max_depth: Some(2),
            max_width: Some(16),
        },
    )
    .unwrap();
    let clip = default_weight_cap(truth.lipschitz(), d).max(truth.sup_bound());
    let lists: Vec<Vec<usize>> = cliques.iter().cloned().collect();
    let model = CliqueNetModel::init(d, &lists, &sched, clip, derive_seed(seed, "nn-init", 0)).unwrap();
    let width = matched_width(d, 2, model.param_count());
    let mut init_rng = component_rng(seed, "nn-unstructured", 0);
    let flat = ReluNet::near_constant(vec![d, width, width, 1], &mut init_rng).unwrap();
    let baseline = CliqueNetModel::new(d, vec![(1..=d).collect()], vec![flat], clip).unwrap();
    let cfg = TrainConfig {
        seed: derive_seed(seed, "nn-train", 0),
        lr: 0.01,
        steps: 10_000,
        batch: 64,
        norm_batch: 64,
        norm_mode: None,
        prune: false,
    };
    let mode = ErrorMode::Quadrature { q: 24 };
    let fitted = train(&model, &samples, &sched, &cfg).unwrap().model;
    let fitted_flat = train(&baseline, &samples, &sched, &cfg).unwrap().model;
    let err = |m: &CliqueNetModel| l2_error(&to_density(m, DensityMode::Raw, 1).unwrap(), &truth, mode).unwrap();
    NetRun {
        structured: err(&fitted),
        unstructured: err(&fitted_flat),
        constant: l2_error(&Uniform(d), &truth, mode).unwrap(),
        max_param: fitted.max_abs_param().max(fitted_flat.max_abs_param()),
    }
}

/// Aggressive steps on a small sample so the projection is actually active.
fn bound_stress() -> (f64, f64) {
    let truth = make_chain_density(3, PairPotential::cosine(0.9), 256).unwrap();
    let samples = truth.sample(200, 7, &GibbsConfig::default()).unwrap().samples;
    let sched = schedule(200, 2, ScheduleOverrides { max_depth: Some(2), max_width: Some(8) }).unwrap();
    let model = CliqueNetModel::init(3, &[vec![1, 2], vec![2, 3]], &sched, 10.0, 3).unwrap();
    let cfg = TrainConfig {
        seed: 11,
        lr: 0.5,
        steps: 10_000,
        batch: 16,
        norm_batch: 16,
        norm_mode: None,
        prune: false,
    };
    let m = train(&model, &samples, &sched, &cfg).unwrap().model;
    let p = m.flat_params();
    let at_bound = p.iter().filter(|x| x.abs() == PARAM_BOUND).count() as f64 / p.len() as f64;
    (m.max_abs_param(), at_bound)
}

fn criterion_7() -> Outcome {
    let checks: Vec<(f64, f64)> = (0..20).map(gradient_check).collect();
    let worst_grad = checks.iter().map(|c| c.0).fold(0.0, f64::max);
    let min_norm = checks.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let grad_ok = worst_grad < 1e-4 && min_norm > 0.0;

    let (stress_max, at_bound) = bound_stress();
    let runs: Vec<NetRun> = (0..10u64).into_par_iter().map(|s| net_comparison(derive_seed(MASTER, "nn", s))).collect();
    let max_param = runs.iter().map(|r| r.max_param).fold(stress_max, f64::max);
    let bounds_ok = max_param <= PARAM_BOUND;

    let beats_constant = runs.iter().filter(|r| r.structured < r.constant).count();
    let s: Vec<f64> = runs.iter().map(|r| r.structured).collect();
    let u: Vec<f64> = runs.iter().map(|r| r.unstructured).collect();
    let (ms, mu) = (lower_median(&s), lower_median(&u));
    let paired = s.iter().zip(&u).filter(|(a, b)| a < b).count();
    outcome(
        grad_ok && bounds_ok && beats_constant >= 9 && ms < mu,
        format!(
            "gradient rel err max {worst_grad:.2e} over 20 configs; max |param| {max_param} after 1e4 steps \
             ({:.0}% at the bound under lr 0.5); L2 vs constant {:.4}: clique net wins {beats_constant}/10; \
             median L2 clique net {ms:.4} vs unstructured {mu:.4} ({paired}/10 paired wins)",
            100.0 * at_bound,
            runs[0].constant
        ),
    )
}

// ---------------------------------------------------------------- 8, 9

/// A factor tuple on random cliques of `{1..d}` and a second tuple on the
/// same cliques; weights in `[0, cap]`.
fn random_tuples(rng: &mut Rng) -> (Vec<HistogramFactor>, Vec<HistogramFactor>, f64) {
    let d: usize = rng.random_range(1..=3);
    let b: usize = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let cap = rng.random_range(1.0..2.5);
    let mut fs = Vec::new();
    let mut gs = Vec::new();
    for _ in 0..m {
        let mut vars: Vec<usize> = (1..=d).filter(|_| rng.random_bool(0.5)).collect();
        if vars.is_empty() {
            vars.push(rng.random_range(1..=d));
        }
        let cells = b.pow(vars.len() as u32);
        let draw = |rng: &mut Rng| {
            let w = (0..cells).map(|_| rng.random_range(0.0..=cap)).collect();
            HistogramFactor::new(d, vars.clone(), b, cap, w).unwrap()
        };
        fs.push(draw(rng));
        gs.push(draw(rng));
    }
    (fs, gs, cap)
}

fn criterion_8() -> Outcome {
    let mut rng = component_rng(MASTER, "loss-identity", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (fs, gs, _) = random_tuples(&mut rng);
        let (d, b) = (fs[0].dim(), fs[0].resolution());
        let f = ProductHistogram::new(d, b, fs).unwrap();
        let p = ProductHistogram::new(d, b, gs).unwrap();
        // an all-zero p cannot be normalised; use the uniform density then
        let p = p.normalize(BUDGET).unwrap_or_else(|_| ProductHistogram::uniform(d, b).unwrap());
        let lhs = expected_surrogate_loss(&f, &p, BUDGET).unwrap() + p.l2_norm_sq(BUDGET).unwrap();
        let rhs = f.l2_distance_sq(&p, BUDGET).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(worst <= 1e-10, format!("100 pairs; max |loss + ||p||^2 - ||p - f||^2| = {worst:.3e}"))
}

fn criterion_9() -> Outcome {
    let mut rng = component_rng(MASTER, "product-difference", 0);
    let single = |f: &HistogramFactor| ProductHistogram::single(f.clone());
    let (mut sup_fail, mut l1_fail) = (0, 0);
    let (mut sup_ratio, mut l1_ratio): (f64, f64) = (0.0, 0.0);
    // rounding slack on an inequality between sums of exact cell values
    let slack = |rhs: f64| rhs * 1e-12 + 1e-15;
    for _ in 0..100 {
        let (fs, gs, cap) = random_tuples(&mut rng);
        let (d, b) = (fs[0].dim(), fs[0].resolution());
        let k = cap.powi(fs.len() as i32 - 1);
        let pf = ProductHistogram::new(d, b, fs.clone()).unwrap();
        let pg = ProductHistogram::new(d, b, gs.clone()).unwrap();
        let lhs = pf.sup_distance(&pg, BUDGET).unwrap();
        let rhs = k * fs
            .iter()
            .zip(&gs)
            .map(|(f, g)| single(f).sup_distance(&single(g), BUDGET).unwrap())
            .sum::<f64>();
        sup_fail += usize::from(lhs > rhs + slack(rhs));
        sup_ratio = sup_ratio.max(lhs / rhs);
    }
    for _ in 0..100 {
        let (fs, gs, cap) = random_tuples(&mut rng);
        let (d, b) = (fs[0].dim(), fs[0].resolution());
        let k = cap.powi(fs.len() as i32 - 1);
        let pf = ProductHistogram::new(d, b, fs.clone()).unwrap();
        let pg = ProductHistogram::new(d, b, gs.clone()).unwrap();
        let lhs = pf.l1_distance(&pg, BUDGET).unwrap();
        let rhs = k * fs
            .iter()
            .zip(&gs)
            .map(|(f, g)| single(f).l1_distance(&single(g), BUDGET).unwrap())
            .sum::<f64>();
        l1_fail += usize::from(lhs > rhs + slack(rhs));
        l1_ratio = l1_ratio.max(lhs / rhs);
    }
    outcome(
        sup_fail == 0 && l1_fail == 0,
        format!(
            "100 tuples each; sup: {sup_fail} violations (max lhs/rhs {sup_ratio:.3}); L1: {l1_fail} violations (max lhs/rhs {l1_ratio:.3})"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let spec = SyntheticCorpusSpec {
        rows: 16,
        cols: 16,
        images: 500,
        potential: PairPotential::Gaussian { beta: 20.0 },
        gibbs: GibbsConfig {
            burn_in_sweeps: 200,
            thin_sweeps: 5,
            chains: 10,
        },
    };
    let (a, b) = (Pixel(8, 8), Pixel(8, 12));
    let cond = Condition {
        pixel: Pixel(8, 9),
        selection: Selection::Tolerance { tolerance: None },
    };
    let pairs: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let corpus = synthetic_grid_corpus(&spec, derive_seed(MASTER, "corpus", i)).unwrap();
            let u = pair_scatter(&corpus, a, b, None).unwrap().correlation;
            let c = pair_scatter(&corpus, a, b, Some(cond)).unwrap().correlation;
            (u, c)
        })
        .collect();
    let wins = pairs.iter().filter(|(u, c)| c.abs() < u.abs()).count();
    let mean = |f: fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / pairs.len() as f64;
    outcome(
        wins >= 18,
        format!(
            "20 corpora of 500 16x16 images; |conditional| < |unconditional| in {wins}/20 (need 18); mean r {:.3} -> {:.3}",
            mean(|p| p.0),
            mean(|p| p.1)
        ),
    )
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "clique-size formulas", criterion_1),
        (2, "clique-potential reconstruction", criterion_2),
        (3, "quantized cover", criterion_3),
        (4, "Lipschitz approximation", criterion_4),
        (5, "Scheffe guarantee", criterion_5),
        (6, "structured histogram rate slope", criterion_6),
        (7, "clique-net estimator", criterion_7),
        (8, "loss identity", criterion_8),
        (9, "product-difference bounds", criterion_9),
        (10, "pixel diagnostics", criterion_10),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let limits = [10.0, 30.0, f64::INFINITY, f64::INFINITY, 300.0, 1800.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let mut out = run();
        let secs = start.elapsed().as_secs_f64();
        let limit = limits[id as usize - 1];
        if secs > limit {
            out.pass = false;
            out.detail.push_str(&format!("; runtime over the {limit} s limit"));
        }
        let tag = if out.pass { "PASS" } else { "FAIL" };
        line(&format!("[{tag}] criterion {id:>2} {name} ({secs:.1} s): {}", out.detail));
        if !out.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
