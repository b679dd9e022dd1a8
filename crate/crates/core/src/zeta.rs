//! The zeta function `zeta_L(s) = sum_k m_k M_k^{-s}` of the spectral weight:
//! certified evaluation for `Re(s) > 1`, residue extrapolation at `s = 1`,
//! finite-sample checks of the meromorphic-extension criteria, and the
//! closed-form continuation for free-group spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{big_ln, fit_line, Richardson};
use crate::special::hurwitz_zeta_em;
use crate::spectrum::DistinctSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub s: Complex64,
    pub value: Complex64,
    /// Bound on the modulus of the truncated remainder.
    pub tail_bound: f64,
    pub terms_used: u64,
}

pub const DEFAULT_BLOCK_BUDGET: u64 = 10_000_000;
const EM_ORDER: usize = 10;
const EM_MAX_DIRECT: usize = 1 << 20;

/// `zeta_L(s)` to within `tol`, for `Re(s) > 1`.
pub fn zeta_eval(spec: &DistinctSpectrum, s: Complex64, tol: f64) -> Result<ZetaValue> {
    zeta_eval_with_budget(spec, s, tol, DEFAULT_BLOCK_BUDGET)
}

pub fn zeta_eval_with_budget(spec: &DistinctSpectrum, s: Complex64, tol: f64, block_budget: u64) -> Result<ZetaValue> {
    if !(s.re > 1.0) {
        return Err(Error::Divergent { s });
    }
    if spec.is_unit_unbounded() {
        // M_k = k: the series is the Riemann zeta function itself, so the
        // tail after `direct` terms is handled by Euler-Maclaurin.
        let mut direct = 64;
        loop {
            let (value, bound) = hurwitz_zeta_em(s, 1.0, direct, EM_ORDER);
            if bound <= tol {
                return Ok(ZetaValue {
                    s,
                    value,
                    tail_bound: bound,
                    terms_used: direct as u64,
                });
            }
            if direct >= EM_MAX_DIRECT {
                return Err(Error::TolUnreachable {
                    tol,
                    blocks: direct as u64,
                    tail_bound: bound,
                });
            }
            direct *= 4;
        }
    }
    let sigma = s.re;
    let mut value = Complex64::new(0.0, 0.0);
    let mut compensation = Complex64::new(0.0, 0.0);
    let mut blocks = 0u64;
    let mut tail_bound = f64::INFINITY;
    for p in spec.points() {
        let p = match p {
            Ok(p) => p,
            Err(Error::SieveLimitExceeded { .. }) => break,
            Err(e) => return Err(e),
        };
        blocks += 1;
        let ln_m = big_ln(&p.multiplicity);
        let ln_cum = big_ln(&p.cumulated);
        let term = (ln_m - s * ln_cum).exp();
        // Kahan step, componentwise
        let y = term - compensation;
        let t = value + y;
        compensation = (t - value) - y;
        value = t;
        // sum_{n > N} mu_n^sigma <= sum_{n > N} n^-sigma <= N^{1-sigma} / (sigma - 1)
        tail_bound = ((1.0 - sigma) * ln_cum).exp() / (sigma - 1.0);
        if tail_bound <= tol {
            return Ok(ZetaValue {
                s,
                value,
                tail_bound,
                terms_used: blocks,
            });
        }
        if blocks >= block_budget {
            return Err(Error::TolUnreachable {
                tol,
                blocks,
                tail_bound,
            });
        }
    }
    if spec.structure().unbounded {
        return Err(Error::TolUnreachable {
            tol,
            blocks,
            tail_bound,
        });
    }
    // finite spectrum: the sum is complete
    Ok(ZetaValue {
        s,
        value,
        tail_bound: 0.0,
        terms_used: blocks,
    })
}

/// Riemann zeta for `Re(s) > 0`, `s != 1`, by Euler-Maclaurin; accurate to
/// 1e-12 on `0 < Re(s) <= 4`, `|Im(s)| <= 10`.
pub fn riemann_zeta_ref(s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::PoleAt { s });
    }
    if !(s.re > 0.0) {
        return Err(Error::OutOfRange {
            what: "s",
            detail: format!("Re(s) must be > 0, got {s}"),
        });
    }
    let direct = 32 + 2 * s.im.abs().ceil() as usize;
    Ok(hurwitz_zeta_em(s, 1.0, direct, 12).0)
}

pub const RESIDUE_FIRST_J: i32 = 3;
pub const RESIDUE_LAST_J: i32 = 20;
pub const RESIDUE_ORDER: usize = 3;

/// `lim_{s -> 1+} g(s)` by order-3 Richardson extrapolation over
/// `s_j = 1 + 2^-j`, `j = 3..=20`; converged after two successive
/// agreements within `tol`.
pub fn extrapolate_to_one(mut g: impl FnMut(f64) -> Result<f64>, tol: f64) -> Result<f64> {
    let mut table = Richardson::new(RESIDUE_ORDER);
    let mut previous: Option<f64> = None;
    let mut agreements = 0;
    let mut last = f64::NAN;
    let mut points = 0;
    for j in RESIDUE_FIRST_J..=RESIDUE_LAST_J {
        let h = 0.5f64.powi(j);
        last = table.push(g(h)?);
        points += 1;
        if let Some(p) = previous {
            if (last - p).abs() < tol && points > RESIDUE_ORDER {
                agreements += 1;
                if agreements >= 2 {
                    return Ok(last);
                }
            } else {
                agreements = 0;
            }
        }
        previous = Some(last);
    }
    Err(Error::NoConvergence {
        last_estimate: last,
        points,
    })
}

/// `lim_{s -> 1+} (s - 1) zeta_L(s)`.
pub fn residue_estimate(spec: &DistinctSpectrum, tol: f64) -> Result<f64> {
    extrapolate_to_one(
        |h| {
            let s = Complex64::new(1.0 + h, 0.0);
            let z = zeta_eval(spec, s, tol * 1e-2 / h)?;
            Ok(h * z.value.re)
        },
        tol,
    )
}

/// Residue of the free-group zeta function through its continuation.
pub fn free_group_residue(p: u64, tol: f64) -> Result<f64> {
    extrapolate_to_one(
        |h| {
            let v = free_group_zeta(p, Complex64::new(1.0 + h, 0.0), tol * 1e-2 / h)?;
            Ok(h * v.re)
        },
        tol,
    )
}

/// The closed-form residue `(2p - 2) / ((2p - 1) Log(2p - 1))`.
pub fn free_group_residue_exact(p: u64) -> f64 {
    let q = (2 * p - 1) as f64;
    (q - 1.0) / (q * q.ln())
}

/// `e^z - 1` without cancellation for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return z.exp() - 1.0;
    }
    let half_sin = (0.5 * z.im).sin();
    let cos_m1 = -2.0 * half_sin * half_sin;
    Complex64::new(z.re.exp_m1() * z.im.cos() + cos_m1, z.re.exp() * z.im.sin())
}

/// `|1 - (1 - eps)^s|`.
pub fn unit_power_defect(eps: f64, s: Complex64) -> f64 {
    expm1(s * (-eps).ln_1p()).norm()
}

/// `|s| Log(1 / (1 - eps))`, an upper bound for [`unit_power_defect`] when
/// `eps` lies in `[0, 1)` and `Re(s) >= 0`.
pub fn unit_power_defect_bound(eps: f64, s: Complex64) -> f64 {
    -s.norm() * (-eps).ln_1p()
}

const FREE_GROUP_MAX_TERMS: u64 = 10_000_000;

/// Continuation of the free-group zeta function to `Re(s) > 0`:
/// `phi(s) (Z_1(s) - Z_2(s))` with
/// `phi(s) = (2p)^{1-s} (2p-2)^s / (2p-1)`,
/// `Z_1(s) = q^{1-s} / (1 - q^{1-s})` and
/// `Z_2(s) = sum_k q^{k(1-s)} (1 - (1 - q^{-k})^{-s})`, `q = 2p - 1`.
pub fn free_group_zeta(p: u64, s: Complex64, tol: f64) -> Result<Complex64> {
    if p < 2 {
        return Err(Error::invalid("p", format!("p must be an integer >= 2, got {p}")));
    }
    if !(s.re > 0.0) {
        return Err(Error::OutOfRange {
            what: "s",
            detail: format!("the continuation needs Re(s) > 0, got {s}"),
        });
    }
    let q = (2 * p - 1) as f64;
    let ln_q = q.ln();
    // poles where (1 - s) Log q is a multiple of 2 pi i
    let winding = (Complex64::new(1.0, 0.0) - s) * ln_q / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    if (winding - Complex64::new(winding.re.round(), 0.0)).norm() < 1e-12 {
        return Err(Error::PoleAt { s });
    }
    let one_minus_s = Complex64::new(1.0, 0.0) - s;
    let phi = (one_minus_s * (2.0 * p as f64).ln() + s * (2.0 * p as f64 - 2.0).ln()).exp() / q;
    let x = (one_minus_s * ln_q).exp();
    let z1 = -x / expm1(one_minus_s * ln_q);

    // |1 - (1 - e)^{-s}| = |1 - e|^{-sigma} |(1 - e)^s - 1| <= (1 - e)^{-sigma} |s| e / (1 - e)
    // by the unit-power bound, so with e = q^-k the k-th term of Z_2 is at most
    // |s| q^{-k sigma} (q / (q - 1))^{sigma + 1}.
    let sigma = s.re;
    let constant = s.norm() * (q / (q - 1.0)).powf(sigma + 1.0);
    let ratio = q.powf(-sigma);
    let phi_norm = phi.norm();
    let mut z2 = Complex64::new(0.0, 0.0);
    for k in 1..=FREE_GROUP_MAX_TERMS {
        let kf = k as f64;
        let eps = (-kf * ln_q).exp();
        let defect = -expm1(-s * (-eps).ln_1p());
        z2 += (kf * one_minus_s * ln_q).exp() * defect;
        let tail = constant * ratio.powf(kf + 1.0) / (1.0 - ratio);
        if phi_norm * tail <= tol {
            return Ok(phi * (z1 - z2));
        }
    }
    Err(Error::TolUnreachable {
        tol,
        blocks: FREE_GROUP_MAX_TERMS,
        tail_bound: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesEvidence {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCheck {
    pub alpha: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub blocks: u64,
    /// `sum_{k <= K} m_k^2 / M_k^2`.
    pub sum_relmult_sq_partial: f64,
    /// Decay exponent of `(m_k / M_k)^2` in k over the second half.
    pub relmult_sq_decay: f64,
    pub sum_relmult_sq_trend: SeriesEvidence,
    /// Slope of `Log m_k` against `Log M_k` over the second half.
    pub alpha_slope: f64,
    /// The slope clamped to `[0, 1]`; `None` when it exceeds 1 (undefined).
    pub alpha_fit: Option<f64>,
    pub alpha_criterion_holds: Vec<AlphaCheck>,
    /// Exponent of the jump envelope `max m_k` against `M_k`, the size of
    /// `N_L - phi` for the counting interpolant `phi`.
    pub remainder_exponent: Option<f64>,
}

pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0];
const MIN_CRITERIA_BLOCKS: u64 = 20;
const ENVELOPE_CHUNKS: usize = 10;

/// Finite-sample diagnostics for the meromorphic-extension criteria.
pub fn criteria_check(spec: &DistinctSpectrum, blocks: u64, alphas: &[f64]) -> Result<CriteriaReport> {
    if blocks < MIN_CRITERIA_BLOCKS {
        return Err(Error::OutOfRange {
            what: "K",
            detail: format!("criteria need at least {MIN_CRITERIA_BLOCKS} blocks, got {blocks}"),
        });
    }
    let mut ln_m = Vec::with_capacity(blocks as usize);
    let mut ln_cum = Vec::with_capacity(blocks as usize);
    let mut partial = 0.0;
    for p in spec.points().take(blocks as usize) {
        let p = match p {
            Ok(p) => p,
            Err(Error::SieveLimitExceeded { .. }) => break,
            Err(e) => return Err(e),
        };
        let r = p.relative_multiplicity();
        partial += r * r;
        ln_m.push(big_ln(&p.multiplicity));
        ln_cum.push(big_ln(&p.cumulated));
    }
    if (ln_m.len() as u64) < blocks {
        return Err(Error::InsufficientBlocks {
            needed: blocks,
            available: ln_m.len() as u64,
        });
    }
    let half = blocks as usize / 2;

    let ln_k: Vec<f64> = (half + 1..=blocks as usize).map(|k| (k as f64).ln()).collect();
    let ln_sq: Vec<f64> = (half..blocks as usize).map(|i| 2.0 * (ln_m[i] - ln_cum[i])).collect();
    let relmult_sq_decay = match fit_line(&ln_k, &ln_sq) {
        Ok(fit) => -fit.slope,
        Err(Error::IllConditionedFit) => 0.0,
        Err(e) => return Err(e),
    };
    let sum_relmult_sq_trend = if relmult_sq_decay > 1.05 {
        SeriesEvidence::Converging
    } else if relmult_sq_decay < 0.95 {
        SeriesEvidence::Diverging
    } else {
        SeriesEvidence::Inconclusive
    };

    let alpha_slope = fit_line(&ln_cum[half..], &ln_m[half..])?.slope;
    let alpha_fit = if alpha_slope > 1.05 {
        None
    } else {
        Some(alpha_slope.clamp(0.0, 1.0))
    };

    // m_k = O(M_k^alpha): the running sup of Log m_k - alpha Log M_k must
    // not grow between the two quarters of the second half.
    let quarter = half / 2;
    let alpha_criterion_holds = alphas
        .iter()
        .map(|&alpha| {
            let r = |i: usize| ln_m[i] - alpha * ln_cum[i];
            let early = (half..half + quarter).map(r).fold(f64::NEG_INFINITY, f64::max);
            let late = (half + quarter..blocks as usize)
                .map(r)
                .fold(f64::NEG_INFINITY, f64::max);
            AlphaCheck {
                alpha,
                holds: late - early <= 1.1f64.ln(),
            }
        })
        .collect();

    let chunk = (blocks as usize - half).div_ceil(ENVELOPE_CHUNKS).max(1);
    let mut env_x = Vec::new();
    let mut env_y = Vec::new();
    for start in (half..blocks as usize).step_by(chunk) {
        let end = (start + chunk).min(blocks as usize);
        let (i, &m) = ln_m[start..end]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("chunk is nonempty");
        env_x.push(ln_cum[start + i]);
        env_y.push(m);
    }
    let remainder_exponent = fit_line(&env_x, &env_y).ok().map(|f| f.slope);

    Ok(CriteriaReport {
        blocks,
        sum_relmult_sq_partial: partial,
        relmult_sq_decay,
        sum_relmult_sq_trend,
        alpha_slope,
        alpha_fit,
        alpha_criterion_holds,
        remainder_exponent,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn divergent_below_abscissa() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        assert_eq!(
            zeta_eval(&spec, c(0.9), 1e-8).unwrap_err(),
            Error::Divergent { s: c(0.9) }
        );
    }

    #[test]
    fn pole_of_the_reference_and_the_continuation() {
        assert_eq!(riemann_zeta_ref(c(1.0)).unwrap_err(), Error::PoleAt { s: c(1.0) });
        assert_eq!(
            free_group_zeta(2, c(1.0), 1e-10).unwrap_err(),
            Error::PoleAt { s: c(1.0) }
        );
        let s = Complex64::new(1.0, 2.0 * std::f64::consts::PI / 3f64.ln());
        assert_eq!(free_group_zeta(2, s, 1e-10).unwrap_err(), Error::PoleAt { s });
    }

    #[test]
    fn reference_zeta_values() {
        // mpmath.zeta at 50 digits
        let cases = [
            (c(2.0), Complex64::new(1.64493406684822644, 0.0)),
            (c(3.0), Complex64::new(1.20205690315959429, 0.0)),
            (
                Complex64::new(0.5, 3.0),
                Complex64::new(0.532736670974232884, -0.078896513425833383),
            ),
        ];
        for (s, want) in cases {
            let got = riemann_zeta_ref(s).unwrap();
            assert!((got - want).norm() < 1e-12, "{s}: {got} vs {want}");
        }
    }

    #[test]
    fn finite_spectrum_sum_is_exact() {
        // blocks (1,1), (2,3): 1 * 1^-2 + 3 * 4^-2
        let spec = generate(&GeneratorSpec::Explicit {
            pairs: vec![(1.0, 1), (2.0, 3)],
        })
        .unwrap();
        let z = zeta_eval(&spec, c(2.0), 1e-12).unwrap();
        assert!((z.value.re - (1.0 + 3.0 / 16.0)).abs() < 1e-15);
        assert_eq!(z.tail_bound, 0.0);
    }

    #[test]
    fn criteria_need_twenty_blocks() {
        let spec = generate(&GeneratorSpec::Explicit {
            pairs: vec![(1.0, 1), (2.0, 1)],
        })
        .unwrap();
        assert_eq!(
            criteria_check(&spec, 20, &DEFAULT_ALPHAS).unwrap_err(),
            Error::InsufficientBlocks {
                needed: 20,
                available: 2
            }
        );
    }

    #[test]
    fn unit_power_defect_small_eps() {
        // 1 - (1 - e)^s ~ s e for tiny e
        let s = Complex64::new(2.0, 1.0);
        let d = unit_power_defect(1e-12, s);
        assert!((d - s.norm() * 1e-12).abs() < 1e-22);
    }
}
