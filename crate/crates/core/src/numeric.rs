//! Small numeric kernels shared by the analysis modules: exact-integer
//! logarithms, least-squares lines, Richardson tables and Gauss-Legendre
//! quadrature.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Natural logarithm of an exact integer, valid far beyond the f64 range.
pub fn big_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * LN_2
}

/// `num / den` in floating point, computed without overflowing either operand.
pub fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    let bits = num.bits().max(den.bits());
    if bits <= 1000 {
        return num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY);
    }
    let shift = bits - 128;
    let n = (num >> shift).to_f64().unwrap_or(0.0);
    let d = (den >> shift).to_f64().unwrap_or(0.0);
    n / d
}

/// Saturating conversion; `inf` above the f64 range.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    pub rms_residual: f64,
    pub r_squared: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::GridTooShort {
            got: n.min(ys.len()),
            min: 2,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let scale = xs.iter().map(|x| x * x).sum::<f64>() / nf;
    if !(sxx > 1e-12 * scale * nf) {
        return Err(Error::IllConditionedFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let dof = if n > 2 { (n - 2) as f64 } else { 1.0 };
    let sigma2 = ssr / dof;
    let slope_stderr = (sigma2 / sxx).sqrt();
    let intercept_stderr = (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(LineFit {
        intercept,
        slope,
        intercept_stderr,
        slope_stderr,
        rms_residual: (ssr / nf).sqrt(),
        r_squared,
    })
}

/// Richardson extrapolation for samples taken at step sizes h, h/2, h/4, ...
/// assuming an error expansion in integer powers of h.
#[derive(Debug, Clone)]
pub struct Richardson {
    order: usize,
    prev_row: Vec<f64>,
}

impl Richardson {
    pub fn new(order: usize) -> Self {
        Richardson {
            order,
            prev_row: Vec::new(),
        }
    }

    /// Feed the next sample (step halved relative to the previous one) and
    /// return the highest-order extrapolant available.
    pub fn push(&mut self, value: f64) -> f64 {
        let mut row = Vec::with_capacity(self.order + 1);
        row.push(value);
        for i in 1..=self.order.min(self.prev_row.len()) {
            let factor = (1u64 << i) as f64 - 1.0;
            let v = row[i - 1] + (row[i - 1] - self.prev_row[i - 1]) / factor;
            row.push(v);
        }
        let best = *row.last().unwrap();
        self.prev_row = row;
        best
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over `[a, b]` split into `panels` pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let panel: f64 = nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum();
        total += panel * half;
    }
    total
}

/// Relative spread `(max - min) / |mean|` of a sample set.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return if max == min { 0.0 } else { f64::INFINITY };
    }
    (max - min) / mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn big_ln_matches_float_for_small_and_shifted_for_large() {
        let x = BigUint::from(123_456_789u64);
        assert!((big_ln(&x) - 123_456_789f64.ln()).abs() < 1e-12);
        // 3^1000: ln = 1000 ln 3
        let big = num_traits::pow(BigUint::from(3u32), 1000);
        let want = 1000.0 * 3f64.ln();
        assert!((big_ln(&big) - want).abs() / want < 1e-14);
    }

    #[test]
    fn big_ratio_handles_huge_operands() {
        let a = num_traits::pow(BigUint::from(3u32), 2000);
        let b = &a * BigUint::from(4u32);
        assert!((big_ratio(&a, &b) - 0.25).abs() < 1e-15);
        assert_eq!(big_ratio(&BigUint::one(), &BigUint::from(8u32)), 0.125);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn line_fit_rejects_degenerate_design() {
        assert_eq!(
            fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::IllConditionedFit)
        );
    }

    #[test]
    fn richardson_removes_polynomial_error() {
        // f(h) = 1 + h + h^2 + h^3 sampled at h = 1/8, 1/16, ...
        let mut r = Richardson::new(3);
        let mut last = 0.0;
        for j in 3..8 {
            let h = 0.5f64.powi(j);
            last = r.push(1.0 + h + h * h + h * h * h);
        }
        assert!((last - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10);
        let v = integrate(|x| x.powi(19) + 3.0 * x * x, 0.0, 2.0, 1, &rule);
        let want = 2f64.powi(20) / 20.0 + 8.0;
        assert!((v - want).abs() / want < 1e-13);
        let e = integrate(|x| (-x).exp(), 0.0, 40.0, 40, &rule);
        assert!((e - (1.0 - (-40f64).exp())).abs() < 1e-14);
    }
}
