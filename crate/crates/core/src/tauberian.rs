//! Partition function `Z_L(beta) = sum_k m_k e^{-beta lambda_k}`, mean
//! energy, regular-variation index and the Karamata consistency check
//! `N_L(x) ~ Z_L(1/x) / Gamma(gamma + 1)`.

use serde::{Deserialize, Serialize};

use crate::dixmier::CompensatedSum;
use crate::error::{Error, Result};
use crate::numeric::{big_to_f64, fit_line, gauss_legendre, integrate};
use crate::special::gamma;
use crate::spectrum::{DistinctSpectrum, SmoothLaw};

/// Block budget before a non-closing sum is declared not nuclear.
pub const NUCLEAR_BLOCK_BUDGET: u64 = 10_000_000;
const PARTIAL_SUM_CEILING: f64 = 1e250;
const MIN_RATE_BLOCKS: u64 = 32;
/// Smooth laws switch to Euler-Maclaurin once `beta lambda'(n)` is this small.
const EM_SLOPE: f64 = 1e-3;
const EM_MIN_INDEX: u64 = 64;
/// Widening applied to locally fitted growth exponents in tail majorants.
const GROWTH_SAFETY: f64 = 1.5;
const RATE_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSums {
    /// `sum m e^{-beta lambda}`
    pub z: f64,
    /// `sum m lambda e^{-beta lambda}`
    pub weighted: f64,
    pub blocks: u64,
    /// Estimated bound on the truncated remainder of `z`.
    pub tail_bound: f64,
}

/// `Z_L(beta)`, truncated once the tail majorant drops below `tol * Z`.
pub fn partition(spec: &DistinctSpectrum, beta: f64, tol: f64) -> Result<f64> {
    Ok(partition_sums(spec, beta, tol)?.z)
}

/// `<L>_beta = Tr(L e^{-beta L}) / Tr(e^{-beta L})`.
pub fn mean_energy(spec: &DistinctSpectrum, beta: f64, tol: f64) -> Result<f64> {
    let sums = partition_sums(spec, beta, tol)?;
    Ok(sums.weighted / sums.z)
}

/// Both partition sums with relative tail tolerance `tol`.
pub fn partition_sums(spec: &DistinctSpectrum, beta: f64, tol: f64) -> Result<PartitionSums> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::OutOfRange {
            what: "beta",
            detail: format!("beta must be finite and > 0, got {beta}"),
        });
    }
    let law = spec.structure().law.filter(|_| spec.is_unit_unbounded());
    if law == Some(SmoothLaw::Linear) {
        // sum_{n >= 1} q^n = q / (1 - q), sum n q^n = q / (1 - q)^2
        let q = (-beta).exp();
        let one_minus_q = -(-beta).exp_m1();
        return Ok(PartitionSums {
            z: q / one_minus_q,
            weighted: q / (one_minus_q * one_minus_q),
            blocks: 0,
            tail_bound: 0.0,
        });
    }

    let mut z = CompensatedSum::default();
    let mut w = CompensatedSum::default();
    let mut blocks = 0u64;
    let mut cumulated = 0.0f64;
    // (lambda, M) at block indices 2^j
    let mut checkpoints: Vec<(f64, f64)> = Vec::new();
    let mut tail_bound = f64::INFINITY;

    for item in spec.light_blocks() {
        let (lambda, m) = item?;
        blocks += 1;
        cumulated += m;
        let decay = (-beta * lambda).exp();
        z.add(m * decay);
        w.add(m * lambda * decay);
        if blocks.is_power_of_two() {
            checkpoints.push((lambda, cumulated));
        }

        if let Some(law) = law {
            let next = (blocks + 1) as f64;
            let slope = 1.0 / law.index_density(law.eigenvalue(next));
            if blocks + 1 >= EM_MIN_INDEX && beta * slope <= EM_SLOPE {
                let (tz, tw) = euler_maclaurin_tail(law, beta, blocks + 1);
                z.add(tz);
                w.add(tw);
                return Ok(PartitionSums {
                    z: z.value(),
                    weighted: w.value(),
                    blocks,
                    tail_bound: 0.0,
                });
            }
        }

        if z.value() > PARTIAL_SUM_CEILING || !z.value().is_finite() {
            return Err(Error::NotNuclear { beta });
        }
        if blocks < MIN_RATE_BLOCKS || (blocks > 4096 && !blocks.is_multiple_of(64)) {
            continue;
        }
        // reference checkpoint c with blocks / c in [2, 4)
        let j = (blocks / 2).ilog2() as usize;
        let (l_c, m_c) = checkpoints[j];
        let (l_p, m_p) = checkpoints[j - 1];
        if !(lambda > l_c && l_c > l_p) {
            continue;
        }
        let log_growth = (cumulated / m_c).ln();
        let rate = log_growth / (lambda - l_c);
        let previous_rate = (m_c / m_p).ln() / (l_c - l_p);
        if law.is_none() && rate >= beta && rate >= 0.9 * previous_rate {
            return Err(Error::NotNuclear { beta });
        }
        let y = beta * lambda;
        let power = GROWTH_SAFETY * log_growth / (lambda / l_c).ln() + 1.0;
        let exp_rate = RATE_SAFETY * rate;
        let mut bound_z = f64::INFINITY;
        let mut bound_w = f64::INFINITY;
        if y > power + 1.0 {
            bound_z = cumulated * (-y).exp() * power / (y - power);
            bound_w = lambda * cumulated * (-y).exp() * (power + 1.0) / (y - power - 1.0);
        }
        if beta > exp_rate {
            let base = cumulated * (-y).exp();
            bound_z = bound_z.min(base * exp_rate / (beta - exp_rate));
            let weighted_exp = base * (lambda * exp_rate / (beta - exp_rate) + beta / (beta - exp_rate).powi(2));
            bound_w = bound_w.min(weighted_exp);
        }
        tail_bound = bound_z;
        if bound_z <= tol * z.value() && bound_w <= tol * w.value() {
            return Ok(PartitionSums {
                z: z.value(),
                weighted: w.value(),
                blocks,
                tail_bound,
            });
        }
        if blocks >= NUCLEAR_BLOCK_BUDGET {
            return Err(Error::NotNuclear { beta });
        }
    }
    if spec.structure().unbounded && blocks >= NUCLEAR_BLOCK_BUDGET {
        return Err(Error::NotNuclear { beta });
    }
    if tail_bound.is_infinite() {
        tail_bound = 0.0;
    }
    Ok(PartitionSums {
        z: z.value(),
        weighted: w.value(),
        blocks,
        tail_bound: if spec.structure().unbounded { tail_bound } else { 0.0 },
    })
}

/// `sum_{n >= n0} h(n)` for `h = e^{-beta lambda(n)}` and `h = lambda e^{-beta lambda(n)}`
/// as `int_{n0}^inf h + h(n0)/2 - h'(n0)/12`, the integral taken in the
/// eigenvalue variable `u = lambda(n)`.
fn euler_maclaurin_tail(law: SmoothLaw, beta: f64, n0: u64) -> (f64, f64) {
    let u0 = law.eigenvalue(n0 as f64);
    let h0 = (-beta * u0).exp();
    let slope = 1.0 / law.index_density(u0);
    let rule = gauss_legendre(16);
    // int_{u0}^inf e^{-beta u} x'(u) du = e^{-beta u0} / beta int_0^inf e^{-t} x'(u0 + t / beta) dt
    let scale = h0 / beta;
    let iz = scale * integrate(|t| (-t).exp() * law.index_density(u0 + t / beta), 0.0, 64.0, 32, &rule);
    let iw = scale
        * integrate(
            |t| {
                let u = u0 + t / beta;
                (-t).exp() * u * law.index_density(u)
            },
            0.0,
            64.0,
            32,
            &rule,
        );
    let dz = -beta * slope * h0;
    let dw = slope * (1.0 - beta * u0) * h0;
    (iz + 0.5 * h0 - dz / 12.0, iw + 0.5 * u0 * h0 - dw / 12.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvIndex {
    pub gamma_hat: f64,
    pub gamma_stderr: f64,
    pub r_squared: f64,
    /// Goodness of the log-log fit, `R^2 > 0.999`.
    pub regularly_varying: bool,
    pub fit_points: usize,
}

pub const RV_R_SQUARED: f64 = 0.999;
const PARTITION_TOL: f64 = 1e-10;

/// Default grid `10^{-1 - j/4}`, `j = 0..=8`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=8).map(|j| 10f64.powf(-1.0 - j as f64 / 4.0)).collect()
}

pub fn default_x_grid() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

fn check_beta_grid(betas: &[f64]) -> Result<()> {
    if betas.len() < 3 {
        return Err(Error::GridTooShort {
            got: betas.len(),
            min: 3,
        });
    }
    if betas.iter().any(|b| !(*b > 0.0)) || betas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid(
            "beta_grid",
            "beta grid must be positive and strictly decreasing",
        ));
    }
    Ok(())
}

/// `gamma_hat = -slope` of `Log Z` against `Log beta` over the smallest decade
/// of a decreasing grid.
pub fn rv_index(spec: &DistinctSpectrum, betas: &[f64]) -> Result<RvIndex> {
    check_beta_grid(betas)?;
    let smallest = betas[betas.len() - 1];
    let mut selected: Vec<f64> = betas
        .iter()
        .copied()
        .filter(|&b| b <= 10.0 * smallest * (1.0 + 1e-12))
        .collect();
    if selected.len() < 3 {
        selected = betas.to_vec();
    }
    let mut xs = Vec::with_capacity(selected.len());
    let mut ys = Vec::with_capacity(selected.len());
    for &b in &selected {
        xs.push(b.ln());
        ys.push(partition(spec, b, PARTITION_TOL)?.ln());
    }
    let fit = fit_line(&xs, &ys)?;
    Ok(RvIndex {
        gamma_hat: -fit.slope,
        gamma_stderr: fit.slope_stderr,
        r_squared: fit.r_squared,
        regularly_varying: fit.r_squared > RV_R_SQUARED,
        fit_points: selected.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauberSample {
    pub x: f64,
    pub counting: f64,
    pub partition: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberReport {
    pub gamma_hat: f64,
    pub gamma_stderr: f64,
    pub r_squared: f64,
    pub regularly_varying: bool,
    /// `max_x |N_L(x) Gamma(gamma_hat + 1) / Z_L(1/x) - 1|`
    pub tauber_max_deviation: f64,
    pub samples: Vec<TauberSample>,
    pub beta_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub nuclear: bool,
}

/// Karamata check of exact counts against the partition function at `beta = 1/x`.
pub fn tauber_check(spec: &DistinctSpectrum, x_grid: &[f64], beta_grid: &[f64]) -> Result<TauberReport> {
    if x_grid.is_empty() || x_grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("x_grid", "x grid must be nonempty, positive and finite"));
    }
    let rv = rv_index(spec, beta_grid)?;
    let g = gamma(rv.gamma_hat + 1.0);
    let mut samples = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let counting = big_to_f64(&spec.counting(x)?);
        let z = partition(spec, 1.0 / x, PARTITION_TOL)?;
        samples.push(TauberSample {
            x,
            counting,
            partition: z,
            deviation: (counting * g / z - 1.0).abs(),
        });
    }
    let tauber_max_deviation = samples.iter().map(|s| s.deviation).fold(0.0, f64::max);
    Ok(TauberReport {
        gamma_hat: rv.gamma_hat,
        gamma_stderr: rv.gamma_stderr,
        r_squared: rv.r_squared,
        regularly_varying: rv.regularly_varying,
        tauber_max_deviation,
        samples,
        beta_grid: beta_grid.to_vec(),
        x_grid: x_grid.to_vec(),
        nuclear: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSample {
    pub beta: f64,
    pub z: f64,
    pub energy: f64,
}

/// `(beta, Z, <L>)` along a grid.
pub fn partition_scan(spec: &DistinctSpectrum, betas: &[f64], tol: f64) -> Result<Vec<PartitionSample>> {
    betas
        .iter()
        .map(|&beta| {
            let s = partition_sums(spec, beta, tol)?;
            Ok(PartitionSample {
                beta,
                z: s.z,
                energy: s.weighted / s.z,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    #[test]
    fn single_term_partition() {
        let spec = generate(&GeneratorSpec::Explicit { pairs: vec![(1.0, 1)] }).unwrap();
        assert!((partition(&spec, 1.0, 1e-12).unwrap() - (-1f64).exp()).abs() < 1e-16);
        let spec = generate(&GeneratorSpec::Explicit { pairs: vec![(2.0, 5)] }).unwrap();
        assert!((mean_energy(&spec, 0.3, 1e-12).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn free_group_is_not_nuclear() {
        let spec = generate(&GeneratorSpec::FreeGroup { p: 2 }).unwrap();
        assert_eq!(partition(&spec, 1.0, 1e-10), Err(Error::NotNuclear { beta: 1.0 }));
        assert_eq!(mean_energy(&spec, 0.5, 1e-10), Err(Error::NotNuclear { beta: 0.5 }));
    }

    #[test]
    fn free_group_converges_above_critical_beta() {
        // sum 4 3^{k-1} e^{-beta k} = 4 e^{-beta} / (1 - 3 e^{-beta})
        let spec = generate(&GeneratorSpec::FreeGroup { p: 2 }).unwrap();
        let beta: f64 = 1.5;
        let want = 4.0 * (-beta).exp() / (1.0 - 3.0 * (-beta).exp());
        let got = partition(&spec, beta, 1e-12).unwrap();
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn naturals_closed_form() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        let beta: f64 = 0.01;
        let want = 1.0 / beta.exp_m1();
        assert!((partition(&spec, beta, 1e-12).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn grid_validation() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        assert_eq!(
            rv_index(&spec, &[0.1, 0.01]),
            Err(Error::GridTooShort { got: 2, min: 3 })
        );
        assert!(matches!(
            rv_index(&spec, &[0.01, 0.1, 0.001]),
            Err(Error::InvalidSpec { .. })
        ));
    }
}
