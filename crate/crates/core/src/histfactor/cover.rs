//! Quantized covers of a histogram family: every weight restricted to the
//! grid `{0, eps, 2 eps, ..., floor(C/eps) eps}`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::HistogramFactor;
use crate::error::{check_budget, Error, Result};
use crate::math::{checked_pow, floor, ln};
use crate::rng::rng_from_seed;

fn check_cover_params(cap: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(alloc::format!("cover resolution must satisfy 0 < eps <= 1, got {eps}")));
    }
    if !(cap >= 1.0 && cap.is_finite()) {
        return Err(Error::invalid(alloc::format!("weight cap must satisfy C >= 1, got {cap}")));
    }
    Ok(())
}

fn levels(cap: f64, eps: f64) -> usize {
    // Guard against C/eps landing just below an integer.
    floor(cap / eps + 1e-9) as usize + 1
}

/// Natural log of the covering-number bound `(2C/eps)^(b^|V|)`.
pub fn covering_bound_log(b: usize, card_v: usize, cap: f64, eps: f64) -> Result<f64> {
    check_cover_params(cap, eps)?;
    let cells = crate::math::powf(b as f64, card_v as f64);
    Ok(cells * ln(2.0 * cap / eps))
}

/// Exact size `(1 + floor(C/eps))^(b^|V|)` of the quantized cover, or
/// `None` if it overflows `u128`.
pub fn cover_size(b: usize, card_v: usize, cap: f64, eps: f64) -> Result<Option<u128>> {
    check_cover_params(cap, eps)?;
    let cells = match checked_pow(b, card_v) {
        Some(c) if c <= usize::MAX as u128 => c as usize,
        _ => return Ok(None),
    };
    Ok(checked_pow(levels(cap, eps), cells))
}

/// Lazy enumeration of the quantized cover.
#[derive(Debug, Clone)]
pub struct QuantizedCover {
    template: HistogramFactor,
    eps: f64,
    levels: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for QuantizedCover {
    type Item = HistogramFactor;

    fn next(&mut self) -> Option<HistogramFactor> {
        if self.done {
            return None;
        }
        let weights = self.digits.iter().map(|&k| k as f64 * self.eps).collect();
        let item = self.template.with_weights(weights);
        self.done = !crate::math::odometer_step(&mut self.digits, self.levels);
        Some(item)
    }
}

/// Every factor on `vars` whose weights lie on the `eps` grid below `cap`.
/// Fails when the cover has more than `budget` members.
pub fn quantized_cover(
    d: usize,
    b: usize,
    vars: Vec<usize>,
    cap: f64,
    eps: f64,
    budget: u128,
) -> Result<QuantizedCover> {
    check_cover_params(cap, eps)?;
    let template = HistogramFactor::constant(d, vars, b, cap, 0.0)?;
    let size = cover_size(b, template.vars().len(), cap, eps)?.unwrap_or(u128::MAX);
    check_budget(
        "quantized cover size",
        size,
        budget,
        "; use sample_cover for a random subset",
    )?;
    let cells = template.cell_count();
    Ok(QuantizedCover {
        template,
        eps,
        levels: levels(cap, eps),
        digits: vec![0; cells],
        done: false,
    })
}

/// `k` members of the quantized cover drawn uniformly with replacement.
pub fn sample_cover(
    d: usize,
    b: usize,
    vars: Vec<usize>,
    cap: f64,
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<HistogramFactor>> {
    check_cover_params(cap, eps)?;
    let template = HistogramFactor::constant(d, vars, b, cap, 0.0)?;
    let lv = levels(cap, eps);
    let mut rng = rng_from_seed(seed);
    Ok((0..k)
        .map(|_| {
            let w = (0..template.cell_count())
                .map(|_| rng.random_range(0..lv) as f64 * eps)
                .collect();
            template.with_weights(w)
        })
        .collect())
}

/// Rounds every weight down to the cover grid. The result is a cover
/// member whose exact L1 distance to `factor` is below `eps`.
pub fn round_to_cover(factor: &HistogramFactor, eps: f64) -> Result<HistogramFactor> {
    check_cover_params(factor.cap(), eps)?;
    let top = (levels(factor.cap(), eps) - 1) as f64;
    let w = factor
        .weights()
        .iter()
        .map(|&w| floor(w / eps).min(top) * eps)
        .collect();
    Ok(factor.with_weights(w))
}
