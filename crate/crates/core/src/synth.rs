//! Synthetic Markov ground truths on `[0,1]^d`.
//!
//! A density is a product of one pair potential per graph edge, divided by
//! its normalising constant `Z`. Normalisation uses `q`-point Gauss–Legendre
//! quadrature per axis: a transfer-operator sweep for chains (`O(d q^2)`) and
//! full tensor summation for small grids. Chains are sampled exactly via
//! backward messages and inverse-CDF draws; other graphs use Gibbs sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{check_budget, Error, Result};
use crate::graph::MrfGraph;
use crate::math::{checked_pow, cos, exp, gauss_legendre_unit, odometer_step, sin, sqrt};
use crate::rng::rng_from_seed;
use crate::samples::SampleMatrix;

const PI: f64 = core::f64::consts::PI;

/// Default quadrature resolution for chain normalisation.
pub const DEFAULT_CHAIN_QUADRATURE: usize = 256;
/// Default quadrature resolution for exact grid normalisation.
pub const DEFAULT_GRID_QUADRATURE: usize = 16;
/// Largest vertex count for which grid densities are normalised exactly.
pub const MAX_EXACT_GRID_VERTICES: usize = 6;
/// Ceiling on `q^V` for full tensor summation.
pub const FULL_SUM_BUDGET: u128 = 200_000_000;
/// Uniform nodes per axis used by the inverse-CDF draws.
pub const SAMPLER_NODES: usize = 257;

/// Symmetric positive pair potential `psi(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PairPotential {
    /// `1 + a cos(pi (u - v))`, positive for `|a| < 1`.
    Cosine { a: f64 },
    /// `exp(-beta (u - v)^2)`, `beta >= 0`.
    Gaussian { beta: f64 },
}

impl PairPotential {
    pub fn cosine(a: f64) -> Self {
        PairPotential::Cosine { a }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PairPotential::Cosine { a } if !(a.abs() < 1.0) => Err(Error::invalid(format!(
                "cosine potential needs |a| < 1 for positivity, got a = {a}"
            ))),
            PairPotential::Gaussian { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(Error::invalid(format!("gaussian potential needs beta >= 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, u: f64, v: f64) -> f64 {
        match *self {
            PairPotential::Cosine { a } => 1.0 + a * cos(PI * (u - v)),
            PairPotential::Gaussian { beta } => exp(-beta * (u - v) * (u - v)),
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            PairPotential::Cosine { a } => 1.0 + a.abs(),
            PairPotential::Gaussian { .. } => 1.0,
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            PairPotential::Cosine { a } => 1.0 - a.abs(),
            PairPotential::Gaussian { beta } => exp(-beta),
        }
    }

    /// `sup |d psi / du|` over the unit square.
    pub fn slope_bound(&self) -> f64 {
        match *self {
            PairPotential::Cosine { a } => a.abs() * PI,
            PairPotential::Gaussian { beta } => {
                let s = 1.0 / sqrt(2.0 * beta);
                if s <= 1.0 {
                    sqrt(2.0 * beta) * exp(-0.5)
                } else {
                    2.0 * beta * exp(-beta)
                }
            }
        }
    }

    /// `prod_j psi(y_k, u_j)` at every node `y_k`, written into `out`.
    fn conditional_on_nodes(&self, neighbours: &[f64], nodes: &NodeTable, out: &mut [f64]) {
        match *self {
            PairPotential::Cosine { a } => {
                out.iter_mut().for_each(|o| *o = 1.0);
                for &u in neighbours {
                    let (cu, su) = (a * cos(PI * u), a * sin(PI * u));
                    for (k, o) in out.iter_mut().enumerate() {
                        *o *= 1.0 + cu * nodes.cos[k] + su * nodes.sin[k];
                    }
                }
            }
            PairPotential::Gaussian { beta } => {
                let m = neighbours.len() as f64;
                let s: f64 = neighbours.iter().sum();
                let s2: f64 = neighbours.iter().map(|u| u * u).sum();
                for (k, o) in out.iter_mut().enumerate() {
                    let y = nodes.x[k];
                    *o = exp(-beta * (m * y * y - 2.0 * y * s + s2));
                }
            }
        }
    }
}

/// Uniform nodes on [0, 1] with cached trigonometric values.
#[derive(Debug, Clone)]
struct NodeTable {
    x: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl NodeTable {
    fn new(s: usize) -> Self {
        let x: Vec<f64> = (0..s).map(|k| k as f64 / (s - 1) as f64).collect();
        Self {
            cos: x.iter().map(|&y| cos(PI * y)).collect(),
            sin: x.iter().map(|&y| sin(PI * y)).collect(),
            x,
        }
    }
}

/// Draws from the density on [0, 1] that interpolates `values` linearly
/// between uniform nodes, by exact inversion of its CDF.
pub fn sample_piecewise_linear(values: &[f64], u: f64) -> f64 {
    let s = values.len();
    debug_assert!(s >= 2);
    let total: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    let mut target = u * total;
    let h = 1.0 / (s - 1) as f64;
    for (k, w) in values.windows(2).enumerate() {
        let mass = 0.5 * (w[0] + w[1]);
        if target <= mass || k == s - 2 {
            let r = target.min(mass);
            let (h0, h1) = (w[0], w[1]);
            let slope = h1 - h0;
            let t = if slope.abs() < 1e-12 * (h0 + h1).max(f64::MIN_POSITIVE) {
                if h0 > 0.0 {
                    r / h0
                } else {
                    0.5
                }
            } else {
                (-h0 + sqrt((h0 * h0 + 2.0 * slope * r).max(0.0))) / slope
            };
            return ((k as f64 + t.clamp(0.0, 1.0)) * h).clamp(0.0, 1.0);
        }
        target -= mass;
    }
    1.0
}

/// Serializable description of a ground truth, used by configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthSpec {
    Chain {
        d: usize,
        potential: PairPotential,
        #[serde(default = "default_chain_q")]
        q: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "default_power")]
        t: usize,
        potential: PairPotential,
        #[serde(default = "default_grid_q")]
        q: usize,
    },
}

fn default_chain_q() -> usize {
    DEFAULT_CHAIN_QUADRATURE
}
fn default_grid_q() -> usize {
    DEFAULT_GRID_QUADRATURE
}
fn default_power() -> usize {
    1
}

impl TruthSpec {
    pub fn build(&self) -> Result<GroundTruthDensity> {
        match *self {
            TruthSpec::Chain { d, potential, q } => make_chain_density(d, potential, q),
            TruthSpec::Grid {
                rows,
                cols,
                t,
                potential,
                q,
            } => make_grid_density(rows, cols, t, potential, q),
        }
    }
}

/// Gibbs sampler settings, counted in full systematic-scan sweeps (one
/// sweep is one update of every vertex).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in_sweeps: usize,
    pub thin_sweeps: usize,
    /// Independent chains; draws are split round-robin across them.
    pub chains: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 1000,
            thin_sweeps: 1,
            chains: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SamplingMethod {
    Exact,
    Gibbs {
        burn_in_sweeps: usize,
        thin_sweeps: usize,
        chains: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Sampled {
    pub samples: SampleMatrix,
    pub method: SamplingMethod,
}

/// Product of pair potentials over the edges of a Markov graph.
#[derive(Debug, Clone)]
pub struct GroundTruthDensity {
    spec: TruthSpec,
    graph: MrfGraph,
    /// 0-based edge endpoints.
    edges: Vec<(usize, usize)>,
    potential: PairPotential,
    q: usize,
    z: Option<f64>,
    is_chain: bool,
}

/// Chain density on `L_d`: `p(x) ∝ prod_{i<d} psi(x_i, x_{i+1})`.
pub fn make_chain_density(d: usize, potential: PairPotential, q: usize) -> Result<GroundTruthDensity> {
    potential.validate()?;
    if q == 0 {
        return Err(Error::invalid("quadrature resolution must be positive"));
    }
    let graph = MrfGraph::path(d)?;
    let mut p = GroundTruthDensity::from_graph(
        TruthSpec::Chain { d, potential, q },
        graph,
        potential,
        q,
    );
    p.z = Some(p.chain_partition(q));
    Ok(p)
}

/// Density over the power grid `(L_{rows x cols})^t` with one potential per
/// edge. Normalised exactly when the grid is a path or has at most
/// [`MAX_EXACT_GRID_VERTICES`] vertices; otherwise `Z` is unknown and only
/// unnormalised evaluation and Gibbs sampling are available.
pub fn make_grid_density(
    rows: usize,
    cols: usize,
    t: usize,
    potential: PairPotential,
    q: usize,
) -> Result<GroundTruthDensity> {
    potential.validate()?;
    if q == 0 {
        return Err(Error::invalid("quadrature resolution must be positive"));
    }
    let graph = MrfGraph::grid(rows, cols, false)?.power(t)?;
    let spec = TruthSpec::Grid {
        rows,
        cols,
        t,
        potential,
        q,
    };
    let mut p = GroundTruthDensity::from_graph(spec, graph, potential, q);
    if p.is_chain {
        p.z = Some(p.chain_partition(q));
    } else if rows * cols <= MAX_EXACT_GRID_VERTICES {
        p.z = Some(p.partition_full_sum(q)?);
    }
    Ok(p)
}

impl GroundTruthDensity {
    fn from_graph(spec: TruthSpec, graph: MrfGraph, potential: PairPotential, q: usize) -> Self {
        let edges: Vec<(usize, usize)> = graph.edges().into_iter().map(|(u, v)| (u - 1, v - 1)).collect();
        let d = graph.vertex_count();
        let is_chain = edges.len() + 1 == d && edges.iter().enumerate().all(|(i, &e)| e == (i, i + 1));
        Self {
            spec,
            graph,
            edges,
            potential,
            q,
            z: None,
            is_chain: is_chain || (d == 1),
        }
    }

    pub fn spec(&self) -> &TruthSpec {
        &self.spec
    }
    pub fn graph(&self) -> &MrfGraph {
        &self.graph
    }
    pub fn potential(&self) -> PairPotential {
        self.potential
    }
    pub fn quadrature(&self) -> usize {
        self.q
    }
    pub fn normalizer(&self) -> Option<f64> {
        self.z
    }
    pub fn is_normalized(&self) -> bool {
        self.z.is_some()
    }

    pub fn eval_unnormalized(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(u, v)| self.potential.value(x[u], x[v]))
            .product()
    }

    /// Normalised density value; fails for densities with unknown `Z`.
    pub fn eval_exact(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.graph.vertex_count() {
            return Err(Error::invalid("point dimension mismatch"));
        }
        crate::density::check_unit_cube(x)?;
        match self.z {
            Some(z) => Ok(self.eval_unnormalized(x) / z),
            None => Err(Error::invalid(
                "density is in unnormalized mode; its normalising constant is unknown",
            )),
        }
    }

    /// Transfer-operator contraction along the chain at `q` nodes.
    fn chain_partition(&self, q: usize) -> f64 {
        let d = self.graph.vertex_count();
        let (nodes, weights) = gauss_legendre_unit(q);
        let kernel = self.kernel(&nodes);
        let mut message = vec![1.0; q];
        for _ in 1..d {
            message = (0..q)
                .map(|j| {
                    (0..q)
                        .map(|i| weights[i] * message[i] * kernel[i * q + j])
                        .sum()
                })
                .collect();
        }
        message.iter().zip(&weights).map(|(m, w)| m * w).sum()
    }

    fn kernel(&self, nodes: &[f64]) -> Vec<f64> {
        let q = nodes.len();
        let mut k = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..q {
                k[i * q + j] = self.potential.value(nodes[i], nodes[j]);
            }
        }
        k
    }

    /// `Z` by summing the unnormalised density over the full `q^d`
    /// Gauss–Legendre tensor grid.
    pub fn partition_full_sum(&self, q: usize) -> Result<f64> {
        let d = self.graph.vertex_count();
        let size = checked_pow(q, d).unwrap_or(u128::MAX);
        check_budget("full quadrature grid", size, FULL_SUM_BUDGET, "")?;
        let (nodes, weights) = gauss_legendre_unit(q);
        let kernel = self.kernel(&nodes);
        let mut digits = vec![0usize; d];
        let mut z = 0.0;
        loop {
            let w: f64 = digits.iter().map(|&i| weights[i]).product();
            let v: f64 = self
                .edges
                .iter()
                .map(|&(a, b)| kernel[digits[a] * q + digits[b]])
                .product();
            z += w * v;
            if !odometer_step(&mut digits, q) {
                break;
            }
        }
        Ok(z)
    }

    /// `Z` by variable elimination in vertex order (row by row on grids).
    pub fn partition_elimination(&self, q: usize) -> Result<f64> {
        let d = self.graph.vertex_count();
        let (nodes, weights) = gauss_legendre_unit(q);
        let kernel = self.kernel(&nodes);
        let mut factors: Vec<Table> = self
            .edges
            .iter()
            .map(|&(a, b)| Table {
                vars: vec![a, b],
                values: kernel.clone(),
            })
            .collect();
        for v in 0..d {
            let (touching, rest): (Vec<Table>, Vec<Table>) =
                factors.into_iter().partition(|t| t.vars.contains(&v));
            factors = rest;
            let mut vars: Vec<usize> = touching.iter().flat_map(|t| t.vars.iter().copied()).collect();
            vars.sort_unstable();
            vars.dedup();
            vars.retain(|&u| u != v);
            let size = checked_pow(q, vars.len() + 1).unwrap_or(u128::MAX);
            check_budget("elimination table", size, FULL_SUM_BUDGET, "")?;
            let mut out = vec![0.0; q.pow(vars.len() as u32)];
            let mut digits = vec![0usize; vars.len()];
            let mut assign = vec![0usize; d];
            for slot in out.iter_mut() {
                for (k, &u) in vars.iter().enumerate() {
                    assign[u] = digits[k];
                }
                let mut acc = 0.0;
                for j in 0..q {
                    assign[v] = j;
                    let prod: f64 = touching.iter().map(|t| t.at(&assign, q)).product();
                    acc += weights[j] * prod;
                }
                *slot = acc;
                odometer_step(&mut digits, q);
            }
            factors.push(Table { vars, values: out });
        }
        Ok(factors.iter().map(|t| t.values[0]).product())
    }

    /// Analytic Lipschitz bound for the normalised density (the
    /// unnormalised product when `Z` is unknown): every partial derivative
    /// is at most `deg(i) * slope * max^(m-1) / Z`.
    pub fn lipschitz(&self) -> f64 {
        let m = self.edges.len();
        if m == 0 {
            return 0.0;
        }
        let per_edge = self.potential.slope_bound() * crate::math::powf(self.potential.max_value(), (m - 1) as f64);
        let d = self.graph.vertex_count();
        let sq: f64 = (1..=d)
            .map(|v| {
                let g = self.graph.degree(v) as f64 * per_edge;
                g * g
            })
            .sum();
        sqrt(sq) / self.z.unwrap_or(1.0)
    }

    /// Upper bound on the normalised density.
    pub fn sup_bound(&self) -> f64 {
        crate::math::powf(self.potential.max_value(), self.edges.len() as f64) / self.z.unwrap_or(1.0)
    }

    /// Draws `n` points: exact sequential sampling for chains, Gibbs
    /// sampling with `gibbs` otherwise.
    pub fn sample(&self, n: usize, seed: u64, gibbs: &GibbsConfig) -> Result<Sampled> {
        let d = self.graph.vertex_count();
        let data = if self.is_chain {
            self.sample_chain(n, seed)
        } else {
            self.sample_gibbs(n, seed, gibbs)?
        };
        let method = if self.is_chain {
            SamplingMethod::Exact
        } else {
            SamplingMethod::Gibbs {
                burn_in_sweeps: gibbs.burn_in_sweeps,
                thin_sweeps: gibbs.thin_sweeps,
                chains: gibbs.chains,
            }
        };
        Ok(Sampled {
            samples: SampleMatrix::new(d, data)?.with_seed(seed),
            method,
        })
    }

    fn sample_chain(&self, n: usize, seed: u64) -> Vec<f64> {
        let d = self.graph.vertex_count();
        let q = self.q.max(2);
        let (gl, w) = gauss_legendre_unit(q);
        let nodes = NodeTable::new(SAMPLER_NODES);
        let s = nodes.x.len();
        // beta[i] = backward message into vertex i, at GL nodes and at the
        // uniform sampler nodes.
        let mut beta_gl = vec![vec![1.0; q]; d];
        let mut beta_u = vec![vec![1.0; s]; d];
        for i in (0..d.saturating_sub(1)).rev() {
            let next = &beta_gl[i + 1];
            let at = |x: f64| -> f64 {
                (0..q)
                    .map(|j| w[j] * self.potential.value(x, gl[j]) * next[j])
                    .sum()
            };
            let g: Vec<f64> = gl.iter().map(|&x| at(x)).collect();
            let u: Vec<f64> = nodes.x.iter().map(|&x| at(x)).collect();
            beta_gl[i] = g;
            beta_u[i] = u;
        }
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(n * d);
        let mut cond = vec![0.0; s];
        for _ in 0..n {
            let mut prev = sample_piecewise_linear(&beta_u[0], rng.random());
            out.push(prev);
            for i in 1..d {
                self.potential
                    .conditional_on_nodes(core::slice::from_ref(&prev), &nodes, &mut cond);
                for (c, b) in cond.iter_mut().zip(&beta_u[i]) {
                    *c *= b;
                }
                prev = sample_piecewise_linear(&cond, rng.random());
                out.push(prev);
            }
        }
        out
    }

    fn sample_gibbs(&self, n: usize, seed: u64, cfg: &GibbsConfig) -> Result<Vec<f64>> {
        if cfg.thin_sweeps == 0 || cfg.chains == 0 {
            return Err(Error::invalid("Gibbs thinning and chain count must be positive"));
        }
        let d = self.graph.vertex_count();
        let neighbours: Vec<Vec<usize>> = (1..=d)
            .map(|v| self.graph.neighbors(v).into_iter().map(|u| u - 1).collect())
            .collect();
        let nodes = NodeTable::new(SAMPLER_NODES);
        let mut cond = vec![0.0; nodes.x.len()];
        let mut nb_vals = Vec::new();
        let mut out = vec![0.0; n * d];
        for chain in 0..cfg.chains {
            let mut rng = rng_from_seed(crate::rng::derive_seed(seed, "gibbs", chain as u64));
            let mut state: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let mut sweep = |state: &mut Vec<f64>, rng: &mut crate::rng::Rng| {
                for v in 0..d {
                    nb_vals.clear();
                    nb_vals.extend(neighbours[v].iter().map(|&u| state[u]));
                    self.potential.conditional_on_nodes(&nb_vals, &nodes, &mut cond);
                    state[v] = sample_piecewise_linear(&cond, rng.random());
                }
            };
            for _ in 0..cfg.burn_in_sweeps {
                sweep(&mut state, &mut rng);
            }
            for row in (chain..n).step_by(cfg.chains) {
                for _ in 0..cfg.thin_sweeps {
                    sweep(&mut state, &mut rng);
                }
                out[row * d..(row + 1) * d].copy_from_slice(&state);
            }
        }
        Ok(out)
    }
}

impl Density for GroundTruthDensity {
    fn dim(&self) -> usize {
        self.graph.vertex_count()
    }
    fn density(&self, x: &[f64]) -> f64 {
        self.eval_unnormalized(x) / self.z.unwrap_or(f64::NAN)
    }
}

/// Dense factor over a few quadrature-node indices.
struct Table {
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    fn at(&self, assign: &[usize], q: usize) -> f64 {
        let idx = self.vars.iter().fold(0, |acc, &u| acc * q + assign[u]);
        self.values[idx]
    }
}
