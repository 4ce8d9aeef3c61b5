use alloc::vec;
use alloc::vec::Vec;

use super::HistogramFactor;
use crate::error::{Error, Result};
use crate::math::{odometer_step, sqrt};

/// Histogram factor whose weight on each cell is `f` at the cell centroid.
/// `f` is a function of the `|V|` coordinates in `vars` and must take values
/// in `[0, cap]` there.
pub fn approx_lipschitz<F>(f: F, cap: f64, d: usize, b: usize, vars: Vec<usize>) -> Result<HistogramFactor>
where
    F: Fn(&[f64]) -> f64,
{
    let k = vars.len();
    if b == 0 || k == 0 {
        return Err(Error::invalid("resolution and vertex set must be non-empty"));
    }
    let mut weights = Vec::with_capacity(b.pow(k as u32));
    let mut digits = vec![0usize; k];
    let mut centroid = vec![0.0; k];
    loop {
        for (c, &a) in centroid.iter_mut().zip(&digits) {
            *c = (a as f64 + 0.5) / b as f64;
        }
        let v = f(&centroid);
        if !(0.0..=cap).contains(&v) {
            return Err(Error::invalid(alloc::format!(
                "function value {v} at centroid {centroid:?} is outside [0, {cap}]"
            )));
        }
        weights.push(v);
        if !odometer_step(&mut digits, b) {
            break;
        }
    }
    HistogramFactor::new(d, vars, b, cap, weights)
}

/// L1 approximation guarantee `sqrt(|V|) L / (2b)` of the centroid factor.
pub fn lipschitz_l1_bound(card_v: usize, lipschitz: f64, b: usize) -> f64 {
    sqrt(card_v as f64) * lipschitz / (2.0 * b as f64)
}
