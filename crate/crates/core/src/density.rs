//! Pointwise evaluation of functions on the unit cube.

use crate::error::{Error, Result};

/// A real-valued function on `[0,1]^d`, usually (but not necessarily) a
/// probability density.
pub trait Density {
    fn dim(&self) -> usize;

    /// Value at `x`; `x.len() == self.dim()` and every coordinate lies in
    /// `[0, 1]`. Implementations may assume both.
    fn density(&self, x: &[f64]) -> f64;
}

impl<D: Density + ?Sized> Density for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn density(&self, x: &[f64]) -> f64 {
        (**self).density(x)
    }
}

/// Adapts a closure to [`Density`].
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnDensity<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Density for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The constant-one density on `[0,1]^d`.
#[derive(Debug, Clone, Copy)]
pub struct Uniform(pub usize);

impl Density for Uniform {
    fn dim(&self) -> usize {
        self.0
    }
    fn density(&self, _x: &[f64]) -> f64 {
        1.0
    }
}

/// Rejects points with a coordinate outside `[0, 1]` (NaN included).
pub fn check_unit_cube(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::OutOfDomain {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}
