//! Clique-factorized histograms on `[0,1]^d`.
//!
//! A [`HistogramFactor`] is piecewise constant on the `b^{|V|}` cells of a
//! uniform grid over the coordinates in `V`; a [`ProductHistogram`] is the
//! pointwise product of factors sharing `d` and `b`. Every product is
//! constant on the cells of the full `b^d` grid (the common refinement), so
//! integrals and distances are computed exactly by summing over it.
//!
//! Cells are half-open `[(A-1)/b, A/b)` except the last one on each axis,
//! which is closed, so every point of the cube lies in exactly one cell.

mod cover;
pub mod fit;
mod lipschitz;

pub use cover::{
    cover_size, covering_bound_log, quantized_cover, round_to_cover, sample_cover, QuantizedCover,
};
pub use lipschitz::{approx_lipschitz, lipschitz_l1_bound};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::density::{check_unit_cube, Density};
use crate::error::{check_budget, Error, Result};
use crate::math::{checked_pow, odometer_step, sqrt};

/// Default ceiling on `b^d` for exact common-refinement arithmetic.
pub const DEFAULT_REFINEMENT_BUDGET: u128 = 10_000_000;

/// Weight cap implied by a Lipschitz bound on a density over `[0,1]^d`:
/// `1 + L * sqrt(d)`.
pub fn default_weight_cap(lipschitz: f64, d: usize) -> f64 {
    1.0 + lipschitz * sqrt(d as f64)
}

/// 1-based cell coordinates `A`, one per vertex of `V`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellIndex(pub Vec<usize>);

#[inline]
fn axis_cell(x: f64, b: usize) -> usize {
    // 0-based; the last cell is closed.
    let k = (x * b as f64) as usize;
    k.min(b - 1)
}

/// Cell of `x` along the coordinates `vars` (1-based) at resolution `b`.
pub fn locate_cell(x: &[f64], vars: &[usize], b: usize) -> Result<CellIndex> {
    check_unit_cube(x)?;
    if b == 0 {
        return Err(Error::invalid("resolution b must be positive"));
    }
    vars.iter()
        .map(|&v| {
            x.get(v.wrapping_sub(1))
                .map(|&xv| axis_cell(xv, b) + 1)
                .ok_or_else(|| Error::invalid(format!("vertex {v} is outside the point's dimension")))
        })
        .collect::<Result<Vec<_>>>()
        .map(CellIndex)
}

fn validate_vars(d: usize, vars: &[usize]) -> Result<()> {
    if vars.is_empty() {
        return Err(Error::invalid("a factor needs at least one vertex"));
    }
    if vars.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("factor vertex set must be strictly increasing"));
    }
    if vars[0] == 0 || *vars.last().unwrap() > d {
        return Err(Error::invalid(format!("factor vertex set {vars:?} is not inside 1..={d}")));
    }
    Ok(())
}

/// A member of the histogram family on the coordinates `V`: weights in
/// `[0, C]` on the `b^{|V|}` cells, stored row-major over `A` (the first
/// coordinate of `V` varies slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFactor {
    d: usize,
    vars: Vec<usize>,
    b: usize,
    cap: f64,
    weights: Vec<f64>,
}

impl HistogramFactor {
    pub fn new(d: usize, vars: Vec<usize>, b: usize, cap: f64, weights: Vec<f64>) -> Result<Self> {
        validate_vars(d, &vars)?;
        if b == 0 {
            return Err(Error::invalid("resolution b must be positive"));
        }
        if !(cap.is_finite() && cap >= 0.0) {
            return Err(Error::invalid("weight cap must be finite and non-negative"));
        }
        let cells = checked_pow(b, vars.len())
            .filter(|&c| c <= usize::MAX as u128)
            .ok_or_else(|| Error::invalid("factor has too many cells"))? as usize;
        if weights.len() != cells {
            return Err(Error::invalid(format!(
                "factor on {} vertices at b={b} needs {cells} weights, got {}",
                vars.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=cap).contains(*w)) {
            return Err(Error::invalid(format!("weight {w} is outside [0, {cap}]")));
        }
        Ok(Self {
            d,
            vars,
            b,
            cap,
            weights,
        })
    }

    /// Factor with every weight equal to `value`.
    pub fn constant(d: usize, vars: Vec<usize>, b: usize, cap: f64, value: f64) -> Result<Self> {
        validate_vars(d, &vars)?;
        let cells = checked_pow(b, vars.len()).ok_or_else(|| Error::invalid("too many cells"))?;
        Self::new(d, vars, b, cap, vec![value; cells as usize])
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }
    pub fn resolution(&self) -> usize {
        self.b
    }
    pub fn cap(&self) -> f64 {
        self.cap
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn cell_count(&self) -> usize {
        self.weights.len()
    }

    /// Flat weight index of a 1-based cell index.
    pub fn flat_index(&self, cell: &CellIndex) -> usize {
        cell.0
            .iter()
            .fold(0, |acc, &a| acc * self.b + (a - 1))
    }

    /// Weight of the cell containing `x`. No domain check.
    #[inline]
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let idx = self
            .vars
            .iter()
            .fold(0, |acc, &v| acc * self.b + axis_cell(x[v - 1], self.b));
        self.weights[idx]
    }

    /// Replaces the weights, keeping vertex set and resolution. The cap is
    /// raised when a weight exceeds it.
    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Self {
        let max = weights.iter().copied().fold(0.0, f64::max);
        Self {
            d: self.d,
            vars: self.vars.clone(),
            b: self.b,
            cap: self.cap.max(max),
            weights,
        }
    }

    /// Strides mapping a full-grid odometer digit vector onto this factor's
    /// flat index.
    fn strides(&self) -> Vec<(usize, usize)> {
        let k = self.vars.len();
        self.vars
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - 1, self.b.pow((k - 1 - i) as u32)))
            .collect()
    }
}

/// Pointwise product of histogram factors sharing `d` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductHistogram {
    d: usize,
    b: usize,
    factors: Vec<HistogramFactor>,
}

impl ProductHistogram {
    pub fn new(d: usize, b: usize, factors: Vec<HistogramFactor>) -> Result<Self> {
        if d == 0 || b == 0 {
            return Err(Error::invalid("d and b must be positive"));
        }
        if factors.is_empty() {
            return Err(Error::invalid("a product histogram needs at least one factor"));
        }
        if let Some(f) = factors.iter().find(|f| f.d != d || f.b != b) {
            return Err(Error::invalid(format!(
                "factor on {:?} has (d, b) = ({}, {}), expected ({d}, {b})",
                f.vars, f.d, f.b
            )));
        }
        Ok(Self { d, b, factors })
    }

    /// Uniform density on `[0,1]^d` with a single factor on all coordinates
    /// of resolution `b`.
    pub fn uniform(d: usize, b: usize) -> Result<Self> {
        let f = HistogramFactor::constant(d, (1..=d).collect(), b, 1.0, 1.0)?;
        Self::new(d, b, vec![f])
    }

    /// Product of constant-one factors, one per clique.
    pub fn ones(d: usize, b: usize, cliques: &[Vec<usize>], cap: f64) -> Result<Self> {
        let factors = cliques
            .iter()
            .map(|c| HistogramFactor::constant(d, c.clone(), b, cap.max(1.0), 1.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, b, factors)
    }

    pub fn single(factor: HistogramFactor) -> Self {
        Self {
            d: factor.d,
            b: factor.b,
            factors: vec![factor],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn resolution(&self) -> usize {
        self.b
    }
    pub fn factors(&self) -> &[HistogramFactor] {
        &self.factors
    }
    pub(crate) fn factors_mut(&mut self) -> &mut [HistogramFactor] {
        &mut self.factors
    }

    /// Value at `x`, rejecting points outside the unit cube.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::invalid("point dimension mismatch"));
        }
        check_unit_cube(x)?;
        Ok(self.value_unchecked(x))
    }

    #[inline]
    fn value_unchecked(&self, x: &[f64]) -> f64 {
        self.factors.iter().map(|f| f.value_at(x)).product()
    }

    /// Number of cells of the common refinement, `b^d`, if it fits.
    pub fn refinement_cells(&self) -> Option<u128> {
        checked_pow(self.b, self.d)
    }

    fn check_refinement(&self, budget: u128) -> Result<usize> {
        let cells = self.refinement_cells().unwrap_or(u128::MAX);
        check_budget(
            "common refinement cells",
            cells,
            budget,
            "; use Monte Carlo error estimation instead",
        )?;
        Ok(cells as usize)
    }

    /// Products of the given factors on every refinement cell, row-major
    /// over the full `d`-dimensional cell index.
    fn table_of(&self, which: impl Fn(usize) -> bool, budget: u128) -> Result<Vec<f64>> {
        let cells = self.check_refinement(budget)?;
        let strides: Vec<Vec<(usize, usize)>> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| which(*i))
            .map(|(_, f)| f.strides())
            .collect();
        let chosen: Vec<&HistogramFactor> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| which(*i))
            .map(|(_, f)| f)
            .collect();
        let mut out = Vec::with_capacity(cells);
        let mut digits = vec![0usize; self.d];
        loop {
            let mut v = 1.0;
            for (f, st) in chosen.iter().zip(&strides) {
                let idx: usize = st.iter().map(|&(axis, s)| digits[axis] * s).sum();
                v *= f.weights[idx];
            }
            out.push(v);
            if !odometer_step(&mut digits, self.b) {
                break;
            }
        }
        Ok(out)
    }

    /// Constant value of the product on each refinement cell.
    pub fn cell_values(&self, budget: u128) -> Result<Vec<f64>> {
        self.table_of(|_| true, budget)
    }

    /// Product of all factors except `skip`, per refinement cell.
    pub(crate) fn cell_values_without(&self, skip: usize, budget: u128) -> Result<Vec<f64>> {
        self.table_of(|i| i != skip, budget)
    }

    /// Volume of one refinement cell, `b^{-d}`.
    pub fn cell_volume(&self) -> f64 {
        crate::math::powf(self.b as f64, -(self.d as f64))
    }

    /// Flat refinement-cell index of `x` (no domain check).
    pub fn refinement_index(&self, x: &[f64]) -> usize {
        x.iter().fold(0, |acc, &xi| acc * self.b + axis_cell(xi, self.b))
    }

    /// Exact integral over the unit cube.
    pub fn mass(&self, budget: u128) -> Result<f64> {
        Ok(self.cell_values(budget)?.iter().sum::<f64>() * self.cell_volume())
    }

    /// Exact `||h||_2^2`.
    pub fn l2_norm_sq(&self, budget: u128) -> Result<f64> {
        Ok(self.cell_values(budget)?.iter().map(|v| v * v).sum::<f64>() * self.cell_volume())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.b != other.b {
            return Err(Error::invalid(format!(
                "histograms differ in (d, b): ({}, {}) vs ({}, {})",
                self.d, self.b, other.d, other.b
            )));
        }
        Ok(())
    }

    /// Exact `||self - other||_1`.
    pub fn l1_distance(&self, other: &Self, budget: u128) -> Result<f64> {
        self.check_compatible(other)?;
        let a = self.cell_values(budget)?;
        let b = other.cell_values(budget)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() * self.cell_volume())
    }

    /// Exact `||self - other||_2^2`.
    pub fn l2_distance_sq(&self, other: &Self, budget: u128) -> Result<f64> {
        self.check_compatible(other)?;
        let a = self.cell_values(budget)?;
        let b = other.cell_values(budget)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * self.cell_volume())
    }

    /// Exact `∫ self * other`.
    pub fn inner_product(&self, other: &Self, budget: u128) -> Result<f64> {
        self.check_compatible(other)?;
        let a = self.cell_values(budget)?;
        let b = other.cell_values(budget)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() * self.cell_volume())
    }

    /// Exact `sup |self - other|` over cells.
    pub fn sup_distance(&self, other: &Self, budget: u128) -> Result<f64> {
        self.check_compatible(other)?;
        let a = self.cell_values(budget)?;
        let b = other.cell_values(budget)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// `f / ||f||_1`, with the zero function mapped to the uniform density.
    /// The scale is applied to the first factor only, so the clique
    /// structure is kept; that factor's cap is raised when needed.
    pub fn normalize(&self, budget: u128) -> Result<Self> {
        let mass = self.mass(budget)?;
        let mut out = self.clone();
        if mass == 0.0 {
            for f in out.factors.iter_mut() {
                let ones = vec![1.0; f.weights.len()];
                *f = f.with_weights(ones);
            }
            return Ok(out);
        }
        if !mass.is_finite() {
            return Err(Error::Numeric(format!("histogram mass is {mass}")));
        }
        let first = &out.factors[0];
        let scaled = first.weights.iter().map(|w| w / mass).collect();
        out.factors[0] = first.with_weights(scaled);
        Ok(out)
    }

    /// Whether the product vanishes on every refinement cell.
    pub fn is_zero(&self, budget: u128) -> Result<bool> {
        Ok(self.cell_values(budget)?.iter().all(|&v| v == 0.0))
    }

    /// `n` iid draws from the histogram read as an (unnormalised) density:
    /// a refinement cell with probability proportional to its value, then a
    /// uniform point inside it.
    pub fn sample(&self, n: usize, seed: u64, budget: u128) -> Result<crate::SampleMatrix> {
        use rand::Rng as _;
        let values = self.cell_values(budget)?;
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for v in &values {
            acc += v;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Numeric(format!("cannot sample a histogram of mass {acc}")));
        }
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut data = Vec::with_capacity(n * self.d);
        let mut digits = vec![0usize; self.d];
        for _ in 0..n {
            let u = rng.random::<f64>() * acc;
            let mut cell = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
            // skip zero-mass cells that a boundary draw could land on
            while values[cell] == 0.0 && cell + 1 < values.len() {
                cell += 1;
            }
            for slot in digits.iter_mut().rev() {
                *slot = cell % self.b;
                cell /= self.b;
            }
            for &k in &digits {
                let x = (k as f64 + rng.random::<f64>()) / self.b as f64;
                data.push(x.min(1.0));
            }
        }
        Ok(crate::SampleMatrix::new(self.d, data)?.with_seed(seed))
    }
}

impl Density for ProductHistogram {
    fn dim(&self) -> usize {
        self.d
    }
    fn density(&self, x: &[f64]) -> f64 {
        self.value_unchecked(x)
    }
}

/// Surrogate loss `||h||_2^2 - (2/n) sum_i h(x_i)`, with the norm computed
/// exactly on the common refinement.
pub fn surrogate_loss(h: &ProductHistogram, samples: &crate::SampleMatrix, budget: u128) -> Result<f64> {
    if samples.dim() != h.dim() {
        return Err(Error::invalid("sample dimension does not match the histogram"));
    }
    let norm = h.l2_norm_sq(budget)?;
    let n = samples.len() as f64;
    let fit: f64 = samples.rows().map(|x| h.density(x)).sum();
    Ok(norm - 2.0 * fit / n)
}

/// Population version `||h||_2^2 - 2 ∫ p h` of the surrogate loss, for a
/// piecewise-constant `p` on the same refinement.
pub fn expected_surrogate_loss(h: &ProductHistogram, p: &ProductHistogram, budget: u128) -> Result<f64> {
    Ok(h.l2_norm_sq(budget)? - 2.0 * h.inner_product(p, budget)?)
}

/// JSON layout of a product histogram: `{d, b, factors: [{V, C, weights}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDoc {
    pub d: usize,
    pub b: usize,
    pub factors: Vec<FactorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDoc {
    #[serde(rename = "V")]
    pub vars: Vec<usize>,
    #[serde(rename = "C")]
    pub cap: f64,
    pub weights: Vec<f64>,
}

impl From<&ProductHistogram> for HistogramDoc {
    fn from(h: &ProductHistogram) -> Self {
        Self {
            d: h.d,
            b: h.b,
            factors: h
                .factors
                .iter()
                .map(|f| FactorDoc {
                    vars: f.vars.clone(),
                    cap: f.cap,
                    weights: f.weights.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<HistogramDoc> for ProductHistogram {
    type Error = Error;
    fn try_from(doc: HistogramDoc) -> Result<Self> {
        let factors = doc
            .factors
            .into_iter()
            .map(|f| HistogramFactor::new(doc.d, f.vars, doc.b, f.cap, f.weights))
            .collect::<Result<Vec<_>>>()?;
        ProductHistogram::new(doc.d, doc.b, factors)
    }
}
