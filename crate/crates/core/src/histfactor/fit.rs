//! Empirical risk minimisation of the L2 surrogate loss
//! `||h||_2^2 - (2/n) sum_i h(x_i)` over histogram families.
//!
//! With a single factor on all coordinates the loss decouples per cell and
//! the minimiser is the ordinary density histogram. Under a product
//! constraint the loss is quadratic in each factor separately, so block
//! coordinate descent updates one factor at a time in closed form.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{HistogramFactor, ProductHistogram, DEFAULT_REFINEMENT_BUDGET};
use crate::error::{Error, Result};
use crate::samples::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_sweeps: usize,
    /// Stop once the relative loss change of a sweep drops below this.
    pub tolerance: f64,
    pub refinement_budget: u128,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            tolerance: 1e-8,
            refinement_budget: DEFAULT_REFINEMENT_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductFit {
    /// The unnormalised minimiser.
    pub histogram: ProductHistogram,
    pub loss: f64,
    pub sweeps: usize,
}

fn check_samples(d: usize, samples: &SampleMatrix) -> Result<()> {
    if samples.dim() != d {
        return Err(Error::invalid("sample dimension does not match the model"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("cannot fit a histogram to zero samples"));
    }
    Ok(())
}

/// Unconstrained histogram on the full `b^d` grid:
/// `w = count / (n * b^{-d})`.
pub fn fit_full_histogram(samples: &SampleMatrix, b: usize, budget: u128) -> Result<ProductHistogram> {
    let d = samples.dim();
    check_samples(d, samples)?;
    let template = ProductHistogram::uniform(d, b)?;
    let cells = template.check_refinement(budget)?;
    let mut counts = vec![0.0; cells];
    for x in samples.rows() {
        counts[template.refinement_index(x)] += 1.0;
    }
    let scale = cells as f64 / samples.len() as f64;
    let weights: Vec<f64> = counts.into_iter().map(|c| c * scale).collect();
    let factor = template.factors()[0].with_weights(weights);
    Ok(ProductHistogram::single(factor))
}

/// Product-constrained ERM by block coordinate descent. Factors start at
/// one (clamped to the cap) and each update sets a factor's cell weight to
/// `clamp(S_A / Q_A, 0, cap)`, where `S_A` is the empirical mean of the
/// other factors over samples in slab `A` and `Q_A` the integral of their
/// square over that slab.
pub fn fit_product_histogram(
    d: usize,
    cliques: &[Vec<usize>],
    samples: &SampleMatrix,
    b: usize,
    cap: f64,
    opts: &FitOptions,
) -> Result<ProductFit> {
    check_samples(d, samples)?;
    if !(cap > 0.0) {
        return Err(Error::invalid("weight cap must be positive"));
    }
    let init = 1.0f64.min(cap);
    let factors = cliques
        .iter()
        .map(|c| HistogramFactor::constant(d, c.clone(), b, cap, init))
        .collect::<Result<Vec<_>>>()?;
    let mut h = ProductHistogram::new(d, b, factors)?;
    let cells = h.check_refinement(opts.refinement_budget)?;
    let n = samples.len() as f64;
    let vol = h.cell_volume();

    let mut counts = vec![0.0; cells];
    for x in samples.rows() {
        counts[h.refinement_index(x)] += 1.0;
    }
    let occupied: Vec<usize> = (0..cells).filter(|&c| counts[c] > 0.0).collect();

    // Projection of every refinement cell onto each factor's flat index.
    let projections: Vec<Vec<usize>> = h
        .factors()
        .iter()
        .map(|f| {
            let strides = f.strides();
            let mut digits = vec![0usize; d];
            let mut out = Vec::with_capacity(cells);
            loop {
                out.push(strides.iter().map(|&(axis, s)| digits[axis] * s).sum());
                if !crate::math::odometer_step(&mut digits, b) {
                    break;
                }
            }
            out
        })
        .collect();

    let loss_of = |h: &ProductHistogram| -> Result<f64> {
        let v = h.cell_values(opts.refinement_budget)?;
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>() * vol;
        let fit: f64 = occupied.iter().map(|&c| counts[c] * v[c]).sum();
        Ok(norm - 2.0 * fit / n)
    };

    let mut loss = loss_of(&h)?;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for k in 0..h.factors().len() {
            let others = h.cell_values_without(k, opts.refinement_budget)?;
            let proj = &projections[k];
            let fcells = h.factors()[k].cell_count();
            let mut quad = vec![0.0; fcells];
            let mut lin = vec![0.0; fcells];
            for (c, &o) in others.iter().enumerate() {
                quad[proj[c]] += o * o * vol;
            }
            for &c in &occupied {
                lin[proj[c]] += counts[c] * others[c] / n;
            }
            let old = h.factors()[k].weights().to_vec();
            let weights: Vec<f64> = old
                .iter()
                .zip(quad.iter().zip(&lin))
                .map(|(&w, (&q, &s))| if q > 0.0 { (s / q).clamp(0.0, cap) } else { w })
                .collect();
            let updated = h.factors()[k].with_weights(weights);
            h.factors_mut()[k] = updated;
        }
        let new_loss = loss_of(&h)?;
        if !new_loss.is_finite() {
            return Err(Error::Numeric(alloc::format!(
                "surrogate loss became {new_loss} after sweep {sweeps}"
            )));
        }
        let change = (loss - new_loss).abs() / loss.abs().max(f64::MIN_POSITIVE);
        loss = new_loss;
        if change < opts.tolerance {
            break;
        }
    }
    Ok(ProductFit {
        histogram: h,
        loss,
        sweeps,
    })
}
