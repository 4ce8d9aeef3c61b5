//! Bounded-weight ReLU networks, one per maximal clique, whose product is
//! fitted to the L2 surrogate loss.
//!
//! A net with widths `(w_0, ..., w_{l+1})` computes
//! `W_l σ_{v_l} W_{l-1} ... σ_{v_1} W_0 x` where `σ_v(y) = max(y - v, 0)`
//! componentwise and `w_{l+1} = 1`. Every entry of every `W_i` and `v_i` is
//! kept in `[-1, 1]`. The model output is the product of the nets' outputs,
//! each clipped to `[-F, F]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{check_budget, Error, Result};
use crate::math::{ceil, checked_pow, log2, midpoints, odometer_step, powf, round, sqrt};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::samples::SampleMatrix;

/// Ceiling on quadrature points for exact norms and normalisation.
pub const QUADRATURE_BUDGET: u128 = 20_000_000;

/// Parameter bound enforced after every step.
pub const PARAM_BOUND: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOverrides {
    pub max_depth: Option<usize>,
    pub max_width: Option<usize>,
}

/// Architecture implied by `(n, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSchedule {
    pub n: usize,
    pub r: usize,
    pub eps: f64,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub m: usize,
    /// Sparsity budget `s` per net.
    pub sparsity: u128,
    pub overrides: ScheduleOverrides,
}

/// `N = max(1, round(n^{r/(r+4)}))`, `m = max(1, round((r+1)/(r+4) log2 n))`,
/// `eps = n^{-2/(r+4)}`, `s = ⌊141 (r+2)^{r+3} N (m+6)⌋`.
pub fn schedule(n: usize, r: usize, overrides: ScheduleOverrides) -> Result<ArchitectureSchedule> {
    if n < 2 || r < 1 {
        return Err(Error::invalid(format!("schedule needs n >= 2 and r >= 1, got n={n}, r={r}")));
    }
    let (nf, rf) = (n as f64, r as f64);
    let big_n = (round(powf(nf, rf / (rf + 4.0))) as usize).max(1);
    let m = (round((rf + 1.0) / (rf + 4.0) * log2(nf)) as usize).max(1);
    let eps = powf(nf, -2.0 / (rf + 4.0));
    let s = 141.0 * powf(rf + 2.0, rf + 3.0) * big_n as f64 * (m + 6) as f64;
    let sparsity = if s >= u128::MAX as f64 { u128::MAX } else { s as u128 };
    Ok(ArchitectureSchedule {
        n,
        r,
        eps,
        big_n,
        m,
        sparsity,
        overrides,
    })
}

impl ArchitectureSchedule {
    /// Uncapped hidden-layer count `8 + (m+5)(1 + ⌈log2 k⌉)` for a clique of size `k`.
    pub fn nominal_depth(&self, k: usize) -> usize {
        let lg = if k <= 1 { 0 } else { ceil(log2(k as f64)) as usize };
        8 + (self.m + 5) * (1 + lg)
    }

    /// Uncapped hidden width `6(k+1)N`.
    pub fn nominal_width(&self, k: usize) -> usize {
        6 * (k + 1) * self.big_n
    }

    /// Widths `(k, p, ..., p, 1)` after applying the override caps.
    pub fn widths(&self, k: usize) -> Vec<usize> {
        let depth = self
            .overrides
            .max_depth
            .map_or(self.nominal_depth(k), |c| c.min(self.nominal_depth(k)));
        let width = self
            .overrides
            .max_width
            .map_or(self.nominal_width(k), |c| c.min(self.nominal_width(k)))
            .max(1);
        let mut w = vec![k];
        w.extend(core::iter::repeat(width).take(depth));
        w.push(1);
        w
    }
}

/// One fully connected ReLU network with scalar output. Parameters live in
/// one flat vector: for each layer `i`, `W_i` row-major, followed by the
/// shift `v_{i+1}` when layer `i+1` is hidden.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNet {
    widths: Vec<usize>,
    params: Vec<f64>,
    w_off: Vec<usize>,
    v_off: Vec<usize>,
}

/// Parameter count of a net with these widths.
pub fn param_count(widths: &[usize]) -> usize {
    let layers = widths.len() - 1;
    (0..layers)
        .map(|i| widths[i] * widths[i + 1] + if i + 1 < layers { widths[i + 1] } else { 0 })
        .sum()
}

impl ReluNet {
    /// All-zero net.
    pub fn zeros(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) || *widths.last().unwrap() != 1 {
            return Err(Error::invalid(format!("invalid widths {widths:?}")));
        }
        let layers = widths.len() - 1;
        let (mut w_off, mut v_off) = (Vec::with_capacity(layers), Vec::with_capacity(layers));
        let mut off = 0;
        for i in 0..layers {
            w_off.push(off);
            off += widths[i] * widths[i + 1];
            v_off.push(off);
            if i + 1 < layers {
                off += widths[i + 1];
            }
        }
        Ok(Self {
            widths,
            params: vec![0.0; off],
            w_off,
            v_off,
        })
    }

    /// Net from explicit matrices (row-major) and hidden shifts.
    pub fn from_parts(widths: Vec<usize>, weights: Vec<Vec<f64>>, shifts: Vec<Vec<f64>>) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let layers = net.widths.len() - 1;
        if weights.len() != layers || shifts.len() != layers - 1 {
            return Err(Error::invalid("layer count does not match the widths"));
        }
        for i in 0..layers {
            let n = net.widths[i] * net.widths[i + 1];
            if weights[i].len() != n {
                return Err(Error::invalid(format!("W_{i} must have {n} entries")));
            }
            net.params[net.w_off[i]..net.w_off[i] + n].copy_from_slice(&weights[i]);
            if i + 1 < layers {
                let k = net.widths[i + 1];
                if shifts[i].len() != k {
                    return Err(Error::invalid(format!("v_{} must have {k} entries", i + 1)));
                }
                net.params[net.v_off[i]..net.v_off[i] + k].copy_from_slice(&shifts[i]);
            }
        }
        if net.max_abs() > PARAM_BOUND {
            return Err(Error::invalid("network entries must lie in [-1, 1]"));
        }
        Ok(net)
    }

    /// Starts close to the constant 1: hidden unit 0 of the first layer
    /// outputs `σ_{-1}(0) = 1`, later layers pass it through, and the output
    /// weight on it is 1. Remaining entries are small random values.
    pub fn near_constant(widths: Vec<usize>, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let layers = net.layers();
        for i in 0..layers {
            let (rows, cols) = (net.widths[i + 1], net.widths[i]);
            let scale = if i + 1 == layers { 0.05 } else { (sqrt(6.0 / cols as f64)).min(1.0) };
            let off = net.w_off[i];
            for r in 0..rows {
                for c in 0..cols {
                    net.params[off + r * cols + c] = rng.random_range(-scale..scale);
                }
            }
            if i + 1 < layers {
                for j in 0..rows {
                    net.params[net.v_off[i] + j] = rng.random_range(-0.5..0.5);
                }
                // carrier unit
                for c in 0..cols {
                    net.params[off + c] = 0.0;
                }
                if i == 0 {
                    net.params[net.v_off[i]] = -1.0;
                } else {
                    net.params[off] = 1.0;
                    net.params[net.v_off[i]] = 0.0;
                }
            } else {
                net.params[off] = 1.0;
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    /// Number of weight matrices, `l + 1`.
    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn nonzero_count(&self) -> usize {
        self.params.iter().filter(|&&p| p != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.params.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    /// `W_i` row-major.
    pub fn weight(&self, i: usize) -> &[f64] {
        let n = self.widths[i] * self.widths[i + 1];
        &self.params[self.w_off[i]..self.w_off[i] + n]
    }

    /// Shift of hidden layer `i` (1-based).
    pub fn shift(&self, i: usize) -> &[f64] {
        &self.params[self.v_off[i - 1]..self.v_off[i - 1] + self.widths[i]]
    }

    /// Clamps every entry into `[-1, 1]`.
    pub fn project(&mut self) {
        for p in self.params.iter_mut() {
            *p = p.clamp(-PARAM_BOUND, PARAM_BOUND);
        }
    }

    /// Zeroes all but the `s` largest-magnitude entries.
    pub fn prune_to(&mut self, s: usize) {
        if self.nonzero_count() <= s {
            return;
        }
        let mut order: Vec<usize> = (0..self.params.len()).collect();
        order.sort_by(|&a, &b| self.params[b].abs().total_cmp(&self.params[a].abs()).then(a.cmp(&b)));
        for &i in &order[s..] {
            self.params[i] = 0.0;
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut acts = self.scratch();
        self.forward_cached(x, &mut acts)
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.widths[..self.widths.len() - 1].iter().map(|&w| vec![0.0; w]).collect()
    }

    /// Forward pass keeping each layer's input in `acts`.
    fn forward_cached(&self, x: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].copy_from_slice(x);
        let layers = self.layers();
        for i in 0..layers {
            let (rows, cols) = (self.widths[i + 1], self.widths[i]);
            let w = &self.params[self.w_off[i]..self.w_off[i] + rows * cols];
            if i + 1 == layers {
                return w.iter().zip(&acts[i]).map(|(a, b)| a * b).sum();
            }
            let (head, tail) = acts.split_at_mut(i + 1);
            let (input, out) = (&head[i], &mut tail[0]);
            let v = &self.params[self.v_off[i]..self.v_off[i] + rows];
            for r in 0..rows {
                let z: f64 = w[r * cols..(r + 1) * cols].iter().zip(input).map(|(a, b)| a * b).sum();
                out[r] = (z - v[r]).max(0.0);
            }
        }
        unreachable!("a net has at least one layer")
    }

    /// Adds `g * ∂out/∂θ` into `grad`, using activations from
    /// [`Self::forward_cached`].
    fn backward(&self, acts: &[Vec<f64>], g: f64, grad: &mut [f64], delta: &mut Vec<f64>, next: &mut Vec<f64>) {
        delta.clear();
        delta.push(g);
        for i in (0..self.layers()).rev() {
            let (rows, cols) = (self.widths[i + 1], self.widths[i]);
            let off = self.w_off[i];
            for r in 0..rows {
                let dr = delta[r];
                if dr == 0.0 {
                    continue;
                }
                let gw = &mut grad[off + r * cols..off + (r + 1) * cols];
                for (gc, a) in gw.iter_mut().zip(&acts[i]) {
                    *gc += dr * a;
                }
            }
            if i == 0 {
                break;
            }
            next.clear();
            next.resize(cols, 0.0);
            let w = &self.params[off..off + rows * cols];
            for r in 0..rows {
                let dr = delta[r];
                if dr == 0.0 {
                    continue;
                }
                for (nc, wv) in next.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
                    *nc += wv * dr;
                }
            }
            let voff = self.v_off[i - 1];
            for c in 0..cols {
                if acts[i][c] > 0.0 {
                    grad[voff + c] -= next[c];
                } else {
                    next[c] = 0.0;
                }
            }
            core::mem::swap(delta, next);
        }
    }
}

/// Product of clipped per-clique nets.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueNetModel {
    d: usize,
    cliques: Vec<Vec<usize>>,
    nets: Vec<ReluNet>,
    clip: f64,
    offsets: Vec<usize>,
}

impl CliqueNetModel {
    pub fn new(d: usize, cliques: Vec<Vec<usize>>, nets: Vec<ReluNet>, clip: f64) -> Result<Self> {
        if cliques.len() != nets.len() || cliques.is_empty() {
            return Err(Error::invalid("need one net per clique and at least one clique"));
        }
        for (c, n) in cliques.iter().zip(&nets) {
            if c.is_empty() || c.iter().any(|&v| v == 0 || v > d) {
                return Err(Error::invalid(format!("clique {c:?} is not a subset of 1..={d}")));
            }
            if n.input_width() != c.len() {
                return Err(Error::invalid(format!(
                    "net for clique {c:?} has input width {}",
                    n.input_width()
                )));
            }
        }
        if !(clip > 0.0) {
            return Err(Error::invalid("clip bound must be positive"));
        }
        let mut offsets = Vec::with_capacity(nets.len() + 1);
        let mut acc = 0;
        for n in &nets {
            offsets.push(acc);
            acc += n.param_count();
        }
        offsets.push(acc);
        Ok(Self {
            d,
            cliques,
            nets,
            clip,
            offsets,
        })
    }

    /// Near-constant-one nets shaped by `sched` for every clique.
    pub fn init(
        d: usize,
        cliques: &[Vec<usize>],
        sched: &ArchitectureSchedule,
        clip: f64,
        seed: u64,
    ) -> Result<Self> {
        let nets = cliques
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut rng = rng_from_seed(derive_seed(seed, "net-init", k as u64));
                ReluNet::near_constant(sched.widths(c.len()), &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, cliques.to_vec(), nets, clip)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn nets(&self) -> &[ReluNet] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [ReluNet] {
        &mut self.nets
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn param_count(&self) -> usize {
        self.offsets[self.nets.len()]
    }

    pub fn max_abs_param(&self) -> f64 {
        self.nets.iter().fold(0.0, |m, n| m.max(n.max_abs()))
    }

    /// Parameters of all nets, concatenated.
    pub fn flat_params(&self) -> Vec<f64> {
        self.nets.iter().flat_map(|n| n.params().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        for (k, net) in self.nets.iter_mut().enumerate() {
            let (a, b) = (self.offsets[k], self.offsets[k + 1]);
            net.params_mut().copy_from_slice(&p[a..b]);
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut s = Scratch::new(self);
        self.forward_scratch(x, &mut s)
    }

    fn forward_scratch(&self, x: &[f64], s: &mut Scratch) -> f64 {
        let mut prod = 1.0;
        for (k, (net, c)) in self.nets.iter().zip(&self.cliques).enumerate() {
            s.input.clear();
            s.input.extend(c.iter().map(|&v| x[v - 1]));
            let o = net.forward_cached(&s.input, &mut s.acts[k]);
            s.outputs[k] = o;
            prod *= o.clamp(-self.clip, self.clip);
        }
        prod
    }

    /// Returns `f(x)` and adds `scale * ∇_θ f(x)` into `grad`.
    fn accumulate_grad(&self, x: &[f64], scale: f64, grad: &mut [f64], s: &mut Scratch) -> f64 {
        let f = self.forward_scratch(x, s);
        let k = self.nets.len();
        let clipped: Vec<f64> = s.outputs.iter().map(|o| o.clamp(-self.clip, self.clip)).collect();
        // product of the other factors without dividing
        let mut prefix = 1.0;
        for j in 0..k {
            s.others[j] = prefix;
            prefix *= clipped[j];
        }
        let mut suffix = 1.0;
        for j in (0..k).rev() {
            s.others[j] *= suffix;
            suffix *= clipped[j];
        }
        for j in 0..k {
            let o = s.outputs[j];
            if o.abs() >= self.clip {
                continue;
            }
            let g = scale * s.others[j];
            if g == 0.0 {
                continue;
            }
            let (a, b) = (self.offsets[j], self.offsets[j + 1]);
            self.nets[j].backward(&s.acts[j], g, &mut grad[a..b], &mut s.delta, &mut s.next);
        }
        f
    }

    /// Clamps every parameter into `[-1, 1]`.
    pub fn project(&mut self) {
        self.nets.iter_mut().for_each(ReluNet::project);
    }
}

struct Scratch {
    acts: Vec<Vec<Vec<f64>>>,
    outputs: Vec<f64>,
    others: Vec<f64>,
    input: Vec<f64>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl Scratch {
    fn new(m: &CliqueNetModel) -> Self {
        Self {
            acts: m.nets.iter().map(ReluNet::scratch).collect(),
            outputs: vec![0.0; m.nets.len()],
            others: vec![0.0; m.nets.len()],
            input: Vec::new(),
            delta: Vec::new(),
            next: Vec::new(),
        }
    }
}

/// How `||f||_2^2` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormMode {
    /// Midpoint rule with `q` nodes per axis.
    Exact { q: usize },
    /// Mean of `f²` at `n_prime` seeded uniform points.
    Mc { n_prime: usize, seed: u64 },
}

/// Points and weights of a norm estimate.
pub fn norm_points(d: usize, mode: NormMode) -> Result<(SampleMatrix, f64)> {
    match mode {
        NormMode::Exact { q } => {
            let data = midpoint_grid(d, q)?;
            let count = data.len() / d;
            Ok((SampleMatrix::new(d, data)?, 1.0 / count as f64))
        }
        NormMode::Mc { n_prime, seed } => {
            if n_prime == 0 {
                return Err(Error::invalid("n' must be positive"));
            }
            let s = uniform_points(d, n_prime, seed)?;
            Ok((s, 1.0 / n_prime as f64))
        }
    }
}

/// All points of the `q^d` midpoint grid, row-major.
pub fn midpoint_grid(d: usize, q: usize) -> Result<Vec<f64>> {
    if q == 0 || d == 0 {
        return Err(Error::invalid("quadrature needs q >= 1 and d >= 1"));
    }
    let count = checked_pow(q, d).unwrap_or(u128::MAX);
    check_budget("quadrature points", count, QUADRATURE_BUDGET, "; use Monte Carlo mode")?;
    let nodes = midpoints(q);
    let mut digits = vec![0usize; d];
    let mut out = Vec::with_capacity(count as usize * d);
    loop {
        out.extend(digits.iter().map(|&i| nodes[i]));
        if !odometer_step(&mut digits, q) {
            break;
        }
    }
    Ok(out)
}

/// `n` seeded uniform points in `[0,1]^d`.
pub fn uniform_points(d: usize, n: usize, seed: u64) -> Result<SampleMatrix> {
    let mut rng = rng_from_seed(seed);
    let data = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Ok(SampleMatrix::new(d, data)?.with_seed(seed))
}

fn check_model_samples(model: &CliqueNetModel, samples: &SampleMatrix) -> Result<()> {
    if samples.dim() != model.d {
        return Err(Error::invalid(format!(
            "samples have dimension {}, model {}",
            samples.dim(),
            model.d
        )));
    }
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    Ok(())
}

/// `||f||² - (2/n) Σ f(x_i)` with the norm estimated per `mode`.
pub fn surrogate_loss(model: &CliqueNetModel, samples: &SampleMatrix, mode: NormMode) -> Result<f64> {
    check_model_samples(model, samples)?;
    let (pts, w) = norm_points(model.d, mode)?;
    let mut s = Scratch::new(model);
    let norm: f64 = pts.rows().map(|u| {
            let f = model.forward_scratch(u, &mut s);
            f * f
        }).sum::<f64>() * w;
    let fit: f64 = samples.rows().map(|x| model.forward_scratch(x, &mut s)).sum();
    Ok(norm - 2.0 * fit / samples.len() as f64)
}

/// Loss on explicit norm points (each weighted `norm_weight`) and its
/// gradient with respect to [`CliqueNetModel::flat_params`].
pub fn loss_and_grad(
    model: &CliqueNetModel,
    samples: &[&[f64]],
    norm_pts: &[&[f64]],
    norm_weight: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.param_count()];
    let mut s = Scratch::new(model);
    let mut norm = 0.0;
    for u in norm_pts {
        // value first, then the gradient of f² needs 2 f
        let f = model.forward_scratch(u, &mut s);
        norm += f * f;
        model.accumulate_grad(u, 2.0 * f * norm_weight, &mut grad, &mut s);
    }
    let scale = -2.0 / samples.len() as f64;
    let mut fit = 0.0;
    for x in samples {
        fit += model.accumulate_grad(x, scale, &mut grad, &mut s);
    }
    (norm * norm_weight + scale * fit, grad)
}

/// Full-data surrogate loss and gradient.
pub fn surrogate_loss_grad(
    model: &CliqueNetModel,
    samples: &SampleMatrix,
    mode: NormMode,
) -> Result<(f64, Vec<f64>)> {
    check_model_samples(model, samples)?;
    let (pts, w) = norm_points(model.d, mode)?;
    let xs: Vec<&[f64]> = samples.rows().collect();
    let us: Vec<&[f64]> = pts.rows().collect();
    Ok(loss_and_grad(model, &xs, &us, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub lr: f64,
    pub steps: usize,
    /// Data points per step.
    pub batch: usize,
    /// Norm points per step.
    pub norm_batch: usize,
    /// Pool the norm points are drawn from; `None` means `Mc` with
    /// `n' = 4n`.
    pub norm_mode: Option<NormMode>,
    /// Keep at most `s` nonzero entries per net after every step.
    pub prune: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lr: 0.01,
            steps: 10_000,
            batch: 64,
            norm_batch: 64,
            norm_mode: None,
            prune: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CliqueNetModel,
    /// Mini-batch loss before each step.
    pub trace: Vec<f64>,
    pub norm_mode: NormMode,
}

/// Projected mini-batch SGD on the surrogate loss.
pub fn train(
    model: &CliqueNetModel,
    samples: &SampleMatrix,
    sched: &ArchitectureSchedule,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    check_model_samples(model, samples)?;
    if cfg.batch == 0 || cfg.norm_batch == 0 {
        return Err(Error::invalid("batch sizes must be positive"));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(Error::invalid("learning rate must be finite and non-negative"));
    }
    let norm_mode = cfg.norm_mode.unwrap_or(NormMode::Mc {
        n_prime: 4 * samples.len(),
        seed: derive_seed(cfg.seed, "norm-pool", 0),
    });
    let (pool, _) = norm_points(model.d, norm_mode)?;
    let mut model = model.clone();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, "sgd", 0));
    let mut params = model.flat_params();
    let mut trace = Vec::with_capacity(cfg.steps);
    let keep = usize::try_from(sched.sparsity).unwrap_or(usize::MAX);
    for step in 0..cfg.steps {
        let xs: Vec<&[f64]> = (0..cfg.batch)
            .map(|_| samples.row(rng.random_range(0..samples.len())))
            .collect();
        let us: Vec<&[f64]> = (0..cfg.norm_batch)
            .map(|_| pool.row(rng.random_range(0..pool.len())))
            .collect();
        let (loss, grad) = loss_and_grad(&model, &xs, &us, 1.0 / cfg.norm_batch as f64);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "surrogate loss {loss} at step {step}; max |param| {}",
                model.max_abs_param()
            )));
        }
        trace.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p = (*p - cfg.lr * g).clamp(-PARAM_BOUND, PARAM_BOUND);
        }
        model.set_flat_params(&params);
        if cfg.prune {
            for net in model.nets_mut() {
                net.prune_to(keep);
            }
            params = model.flat_params();
        }
    }
    Ok(TrainOutcome {
        model,
        trace,
        norm_mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    Raw,
    ClippedNormalized,
}

/// A trained model viewed as a density on `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct NetDensity {
    model: CliqueNetModel,
    mode: DensityMode,
    /// `1 / ∫ max(f, 0)`, or `None` when that integral vanishes.
    inv_mass: Option<f64>,
}

impl NetDensity {
    pub fn mode(&self) -> DensityMode {
        self.mode
    }

    pub fn model(&self) -> &CliqueNetModel {
        &self.model
    }
}

impl Density for NetDensity {
    fn dim(&self) -> usize {
        self.model.d
    }

    fn density(&self, x: &[f64]) -> f64 {
        let f = self.model.forward(x);
        match (self.mode, self.inv_mass) {
            (DensityMode::Raw, _) => f,
            (DensityMode::ClippedNormalized, Some(s)) => f.max(0.0) * s,
            (DensityMode::ClippedNormalized, None) => 1.0,
        }
    }
}

/// Wraps `model` as a density; `ClippedNormalized` integrates `max(f, 0)`
/// with a `q`-point midpoint rule per axis.
pub fn to_density(model: &CliqueNetModel, mode: DensityMode, q: usize) -> Result<NetDensity> {
    let inv_mass = match mode {
        DensityMode::Raw => None,
        DensityMode::ClippedNormalized => {
            let pts = midpoint_grid(model.d, q)?;
            let mut s = Scratch::new(model);
            let count = pts.len() / model.d;
            let mass = pts
                .chunks_exact(model.d)
                .map(|x| model.forward_scratch(x, &mut s).max(0.0))
                .sum::<f64>()
                / count as f64;
            if mass > 0.0 {
                Some(1.0 / mass)
            } else {
                None
            }
        }
    };
    Ok(NetDensity {
        model: model.clone(),
        mode,
        inv_mass,
    })
}

/// JSON layout of a model: `{d, cliques, nets: [{widths, weights, shifts}], F}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub d: usize,
    pub cliques: Vec<Vec<usize>>,
    pub nets: Vec<NetDoc>,
    #[serde(rename = "F")]
    pub clip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDoc {
    pub widths: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub shifts: Vec<Vec<f64>>,
}

impl From<&CliqueNetModel> for ModelDoc {
    fn from(m: &CliqueNetModel) -> Self {
        Self {
            d: m.d,
            cliques: m.cliques.clone(),
            nets: m
                .nets
                .iter()
                .map(|n| NetDoc {
                    widths: n.widths.clone(),
                    weights: (0..n.layers()).map(|i| n.weight(i).to_vec()).collect(),
                    shifts: (1..n.layers()).map(|i| n.shift(i).to_vec()).collect(),
                })
                .collect(),
            clip: m.clip,
        }
    }
}

impl TryFrom<ModelDoc> for CliqueNetModel {
    type Error = Error;
    fn try_from(doc: ModelDoc) -> Result<Self> {
        let nets = doc
            .nets
            .into_iter()
            .map(|n| ReluNet::from_parts(n.widths, n.weights, n.shifts))
            .collect::<Result<Vec<_>>>()?;
        CliqueNetModel::new(doc.d, doc.cliques, nets, doc.clip)
    }
}

/// Hidden width giving a single net on `d` inputs with `depth` hidden
/// layers roughly `target` parameters.
pub fn matched_width(d: usize, depth: usize, target: usize) -> usize {
    let mut best = 1;
    let mut best_gap = usize::MAX;
    for w in 1..=4096 {
        let mut widths = vec![d];
        widths.extend(core::iter::repeat(w).take(depth));
        widths.push(1);
        let p = param_count(&widths);
        let gap = p.abs_diff(target);
        if gap < best_gap {
            best = w;
            best_gap = gap;
        }
        if p > target {
            break;
        }
    }
    best
}
