//! Float helpers for `no_std` builds, Gauss–Legendre rules and small
//! multi-index utilities shared across modules.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Nodes and weights of the `q`-point Gauss–Legendre rule mapped to [0, 1].
pub fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let n = q as f64;
    for i in 0..q.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_q.
        let mut z = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, z);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - z);
        nodes[q - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(q: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = q as f64;
    let d = n * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Midpoints of a uniform `q`-cell partition of [0, 1].
pub fn midpoints(q: usize) -> Vec<f64> {
    (0..q).map(|i| (i as f64 + 0.5) / q as f64).collect()
}

/// Advances a row-major odometer where every digit ranges over `0..base`.
/// Returns `false` once it wraps around to all zeros.
#[inline]
pub fn odometer_step(digits: &mut [usize], base: usize) -> bool {
    for digit in digits.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

/// `base^exp` as `u128`, or `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

/// Arithmetic mean. Empty slices give NaN.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Lower median (the `(n-1)/2`-th order statistic).
pub fn lower_median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Pearson correlation. Returns 0 when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return 0.0;
    }
    let mx = mean(&xs[..n]);
    let my = mean(&ys[..n]);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / sqrt(sxx * syy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for q in [1usize, 2, 3, 5, 8, 16, 64, 256] {
            let (x, w) = gauss_legendre_unit(q);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13, "q={q}");
            let deg = (2 * q - 1).min(12);
            let integral: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * powf(*x, deg as f64))
                .sum();
            assert!((integral - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "q={q}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn gauss_legendre_cosine() {
        let (x, w) = gauss_legendre_unit(32);
        let integral: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| w * cos(core::f64::consts::PI * x))
            .sum();
        assert!(integral.abs() < 1e-14);
    }

    #[test]
    fn odometer_visits_every_index_once() {
        let mut digits = [0usize; 3];
        let mut count = 1;
        while odometer_step(&mut digits, 4) {
            count += 1;
        }
        assert_eq!(count, 64);
        assert_eq!(digits, [0, 0, 0]);
    }

    #[test]
    fn medians_and_correlation() {
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), 2.0);
        assert_eq!(lower_median(&[5.0, 1.0, 3.0]), 3.0);
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&xs, &xs) - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &neg) + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&xs, &[1.0; 4]), 0.0);
    }
}
