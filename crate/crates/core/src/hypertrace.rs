//! Spectral hypotheses behind the existence of hypertraces, and their
//! quantitative content on finite truncations: commutator trace norms via
//! the chain rule and weighted traces against `phi(L)^{-s}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{big_ratio, fit_line};
use crate::special::hurwitz_zeta_em;
use crate::spectrum::{DistinctSpectrum, SpectralPoint, Window, AC_RELMULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    HypothesesHold,
    HypothesesFail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypertraceVerdict {
    pub blocks: u64,
    pub window: Window,
    pub asympt_continuous: Evidence,
    /// Max of `m_k / M_k` over the last tenth of the window.
    pub relmult_tail: f64,
    pub gap_condition: Evidence,
    /// `(m_k / M_k) / (lambda_{k+1} - lambda_k)`, subsampled over the window.
    pub gap_sequence: Vec<f64>,
    pub gap_sequence_max: f64,
    /// Sup over the window of `(M_{k+1} - M_k) / ((lambda_{k+1} - lambda_k) M_k)`.
    pub phi_logderiv_tail: f64,
    pub gaps_bounded_below: bool,
    pub gap_inf: f64,
    pub overall: Overall,
}

pub const GAP_THRESHOLD: f64 = 0.02;
pub const PHI_LOGDERIV_THRESHOLD: f64 = 0.02;
const MIN_BLOCKS: u64 = 20;
// log-log slope of the gaps below which they are taken to shrink to 0
const GAP_DECAY_TOLERANCE: f64 = -0.1;
const GAP_SAMPLES: usize = 200;

/// Tail-window evidence for asymptotic continuity, the gap condition and
/// the log-derivative condition on the counting interpolant.
pub fn check_hypotheses(spec: &DistinctSpectrum, blocks: u64) -> Result<HypertraceVerdict> {
    if blocks < MIN_BLOCKS {
        return Err(Error::OutOfRange {
            what: "K",
            detail: format!("hypothesis checks need at least {MIN_BLOCKS} blocks, got {blocks}"),
        });
    }
    let window = Window::default_for(blocks);
    let mut relmult = Vec::with_capacity(window.length as usize);
    let mut gap_seq = Vec::with_capacity(window.length as usize);
    let mut logderiv = Vec::with_capacity(window.length as usize);
    let mut gaps = Vec::with_capacity(window.length as usize);
    let mut previous: Option<SpectralPoint> = None;
    let mut seen = 0u64;
    // block K + 1 is needed for the last gap
    for p in spec.points().take(blocks as usize + 1) {
        let p = p?;
        seen = p.k;
        if let Some(prev) = previous.take() {
            if prev.k > window.burn_in {
                let gap = p.eigenvalue - prev.eigenvalue;
                let r = prev.relative_multiplicity();
                relmult.push(r);
                gaps.push(gap);
                gap_seq.push(r / gap);
                logderiv.push(big_ratio(&p.multiplicity, &prev.cumulated) / gap);
            }
        }
        previous = Some(p);
    }
    if seen < blocks + 1 {
        return Err(Error::InsufficientBlocks {
            needed: blocks + 1,
            available: seen,
        });
    }

    let tenth = (relmult.len() / 10).max(1);
    let last = &relmult[relmult.len() - tenth..];
    let relmult_tail = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let relmult_tail_min = last.iter().cloned().fold(f64::INFINITY, f64::min);
    let ks: Vec<f64> = (0..relmult.len())
        .map(|i| (window.burn_in + 1 + i as u64) as f64)
        .collect();
    let relmult_max = relmult.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let relmult_slope = fit_line(&ks, &relmult).map(|f| f.slope).unwrap_or(0.0);
    let asympt_continuous = if relmult_max < AC_RELMULT_THRESHOLD && relmult_slope <= 0.0 {
        Evidence::Holds
    } else if relmult_tail_min >= AC_RELMULT_THRESHOLD {
        Evidence::Fails
    } else {
        Evidence::Inconclusive
    };

    let gap_sequence_max = gap_seq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_k: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ln_gap: Vec<f64> = gap_seq.iter().map(|g| g.ln()).collect();
    let gap_trend = fit_line(&ln_k, &ln_gap).map(|f| f.slope).unwrap_or(0.0);
    let gap_tail_min = gap_seq[gap_seq.len() - tenth..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let gap_condition = if gap_sequence_max < GAP_THRESHOLD && gap_trend <= 0.0 {
        Evidence::Holds
    } else if gap_tail_min >= AC_RELMULT_THRESHOLD {
        Evidence::Fails
    } else {
        Evidence::Inconclusive
    };

    let phi_logderiv_tail = logderiv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gap_inf = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let ln_gaps: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let gap_decay = fit_line(&ln_k, &ln_gaps).map(|f| f.slope).unwrap_or(0.0);
    let gaps_bounded_below = gap_inf > 0.0 && gap_decay > GAP_DECAY_TOLERANCE;

    let overall = if asympt_continuous == Evidence::Holds
        && (gap_condition == Evidence::Holds || phi_logderiv_tail < PHI_LOGDERIV_THRESHOLD)
    {
        Overall::HypothesesHold
    } else if asympt_continuous == Evidence::Fails {
        Overall::HypothesesFail
    } else {
        Overall::Inconclusive
    };

    let stride = gap_seq.len().div_ceil(GAP_SAMPLES).max(1);
    let gap_sequence = gap_seq.iter().step_by(stride).copied().collect();
    Ok(HypertraceVerdict {
        blocks,
        window,
        asympt_continuous,
        relmult_tail,
        gap_condition,
        gap_sequence,
        gap_sequence_max,
        phi_logderiv_tail,
        gaps_bounded_below,
        gap_inf,
        overall,
    })
}

/// A finite section of a bounded operator in the eigenbasis `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub label: String,
    pub entries: DMatrix<Complex64>,
    /// Constant value of the diagonal beyond the truncation, when known.
    pub diagonal_tail: Option<Complex64>,
}

/// JSON description of a [`TruncatedOperator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum OperatorSpec {
    Builtin {
        label: String,
        #[serde(default)]
        dimension: Option<usize>,
        #[serde(default)]
        power: Option<usize>,
    },
    Dense {
        dense: Vec<Vec<f64>>,
    },
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl TruncatedOperator {
    /// `S^k` with `S e_n = e_{n+1}`, on `level + k` basis vectors so that
    /// `level` entries of the k-th subdiagonal are nonzero.
    pub fn shift_power(level: usize, k: usize) -> Self {
        let dim = level + k;
        let mut entries = DMatrix::from_element(dim, dim, zero());
        for j in 0..level {
            entries[(j + k, j)] = one();
        }
        TruncatedOperator {
            label: if k == 1 { "shift".into() } else { format!("shift^{k}") },
            entries,
            diagonal_tail: Some(if k == 0 { one() } else { zero() }),
        }
    }

    pub fn shift(level: usize) -> Self {
        Self::shift_power(level, 1)
    }

    pub fn identity(dim: usize) -> Self {
        TruncatedOperator {
            label: "identity".into(),
            entries: DMatrix::identity(dim, dim),
            diagonal_tail: Some(one()),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        TruncatedOperator {
            label: "diagonal".into(),
            entries: DMatrix::from_fn(
                n,
                n,
                |i, j| if i == j { Complex64::new(values[i], 0.0) } else { zero() },
            ),
            diagonal_tail: None,
        }
    }

    pub fn dense(entries: DMatrix<Complex64>) -> Self {
        TruncatedOperator {
            label: "dense".into(),
            entries,
            diagonal_tail: None,
        }
    }

    pub fn from_spec(spec: &OperatorSpec, default_dimension: usize) -> Result<Self> {
        match spec {
            OperatorSpec::Builtin {
                label,
                dimension,
                power,
            } => {
                let n = dimension.unwrap_or(default_dimension);
                match label.as_str() {
                    "shift" => Ok(Self::shift_power(n, power.unwrap_or(1))),
                    "identity" => Ok(Self::identity(n)),
                    other => Err(Error::invalid("label", format!("unknown operator label {other:?}"))),
                }
            }
            OperatorSpec::Dense { dense } => {
                let n = dense.len();
                if n == 0 || dense.iter().any(|row| row.len() != n) {
                    return Err(Error::DimensionMismatch {
                        detail: "dense operator must be a nonempty square matrix".into(),
                    });
                }
                Ok(Self::dense(DMatrix::from_fn(n, n, |i, j| {
                    Complex64::new(dense[i][j], 0.0)
                })))
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiChoice {
    /// `phi(lambda_k) = M_k`
    CountingInterpolant,
    Identity,
}

/// Eigenvalues of a multiplicity-one prefix of length `n`.
fn unit_prefix(spec: &DistinctSpectrum, n: usize) -> Result<Vec<SpectralPoint>> {
    let points = spec.prefix(n as u64)?;
    if let Some(p) = points.iter().find(|p| p.multiplicity != 1u32.into()) {
        return Err(Error::MultiplicityUnsupported { k: p.k });
    }
    Ok(points)
}

fn phi_values(points: &[SpectralPoint], phi: PhiChoice) -> Vec<f64> {
    points
        .iter()
        .map(|p| match phi {
            PhiChoice::CountingInterpolant => p.k as f64,
            PhiChoice::Identity => p.eigenvalue,
        })
        .collect()
}

/// Matrix of `f(L) a - a f(L)` from the chain rule: entry `(k, l)` is
/// `(f_k - f_l) a_{kl}`.
pub fn chain_rule_commutator(f: &[f64], a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() != f.len() {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "operator is {}x{}, spectrum prefix has {}",
                a.nrows(),
                a.ncols(),
                f.len()
            ),
        });
    }
    Ok(DMatrix::from_fn(a.nrows(), a.ncols(), |k, l| a[(k, l)] * (f[k] - f[l])))
}

pub const DENSE_SVD_LIMIT: usize = 2000;

/// Sum of singular values. Matrices with at most one nonzero per row and
/// column are handled exactly; others go through a dense SVD.
pub fn trace_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    let mut row_used = vec![false; m.nrows()];
    let mut col_used = vec![false; m.ncols()];
    let mut monomial = true;
    let mut total = 0.0;
    'scan: for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != zero() {
                if row_used[i] || col_used[j] {
                    monomial = false;
                    break 'scan;
                }
                row_used[i] = true;
                col_used[j] = true;
                total += v.norm();
            }
        }
    }
    if monomial {
        return Ok(total);
    }
    if m.nrows().max(m.ncols()) > DENSE_SVD_LIMIT {
        return Err(Error::OutOfRange {
            what: "dimension",
            detail: format!("dense SVD is limited to {DENSE_SVD_LIMIT}, got {}", m.nrows()),
        });
    }
    Ok(m.clone().singular_values().iter().sum())
}

/// `Tr |[a, phi(L)^{-s}]|` on the truncation.
pub fn commutator_trace_norm(spec: &DistinctSpectrum, a: &TruncatedOperator, s: f64, phi: PhiChoice) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::OutOfRange {
            what: "s",
            detail: format!("s must exceed 1, got {s}"),
        });
    }
    let points = unit_prefix(spec, a.dimension())?;
    let f: Vec<f64> = phi_values(&points, phi).iter().map(|x| x.powf(-s)).collect();
    trace_norm(&chain_rule_commutator(&f, &a.entries)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedTrace {
    pub s: f64,
    pub truncation: usize,
    pub value: Complex64,
    /// `(s - 1) * value`
    pub scaled: Complex64,
    /// Bound on the diagonal contribution beyond the truncation.
    pub tail_bound: f64,
}

/// `sum_{m,n <= N} a_{nm} [phi(L)^{-s}]_{mn}` with `phi` the counting
/// interpolant. Only the diagonal of `a` meets the diagonal weight; a known
/// constant diagonal beyond N is summed in closed form.
pub fn weighted_trace(
    spec: &DistinctSpectrum,
    a: &TruncatedOperator,
    s: f64,
    truncation: usize,
) -> Result<WeightedTrace> {
    if !(s > 1.0) {
        return Err(Error::OutOfRange {
            what: "s",
            detail: format!("s must exceed 1, got {s}"),
        });
    }
    if truncation == 0 || truncation > a.dimension() {
        return Err(Error::DimensionMismatch {
            detail: format!("truncation {truncation} outside 1..={}", a.dimension()),
        });
    }
    let points = unit_prefix(spec, truncation)?;
    let weights = phi_values(&points, PhiChoice::CountingInterpolant);
    let mut value = zero();
    let mut diag_max = 0.0f64;
    for (n, w) in weights.iter().enumerate() {
        let d = a.entries[(n, n)];
        diag_max = diag_max.max(d.norm());
        if d != zero() {
            value += d * w.powf(-s);
        }
    }
    let tail_bound = match a.diagonal_tail {
        Some(d) if d == zero() => 0.0,
        Some(d) => {
            // phi(lambda_n) = n beyond the truncation: a Hurwitz tail
            let (tail, bound) = hurwitz_zeta_em(Complex64::new(s, 0.0), truncation as f64 + 1.0, 16, 10);
            value += d * tail;
            bound * d.norm()
        }
        None if diag_max == 0.0 => 0.0,
        None => diag_max * (truncation as f64).powf(1.0 - s) / (s - 1.0),
    };
    Ok(WeightedTrace {
        s,
        truncation,
        value,
        scaled: value * (s - 1.0),
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    #[test]
    fn shift_commutator_telescopes() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        let a = TruncatedOperator::shift(1000);
        let v = commutator_trace_norm(&spec, &a, 1.5, PhiChoice::Identity).unwrap();
        assert!((v - (1.0 - 1001f64.powf(-1.5))).abs() < 1e-12);
    }

    #[test]
    fn identity_and_diagonal_commute() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        let id = TruncatedOperator::identity(50);
        assert_eq!(
            commutator_trace_norm(&spec, &id, 1.5, PhiChoice::CountingInterpolant).unwrap(),
            0.0
        );
        let d = TruncatedOperator::diagonal(&(0..50).map(|i| (i as f64).sin()).collect::<Vec<_>>());
        assert_eq!(commutator_trace_norm(&spec, &d, 2.0, PhiChoice::Identity).unwrap(), 0.0);
    }

    #[test]
    fn multiplicities_are_rejected() {
        let spec = generate(&GeneratorSpec::FreeGroup { p: 2 }).unwrap();
        assert_eq!(
            commutator_trace_norm(&spec, &TruncatedOperator::shift(5), 1.5, PhiChoice::Identity),
            Err(Error::MultiplicityUnsupported { k: 1 })
        );
    }

    #[test]
    fn identity_weighted_trace_is_zeta() {
        let spec = generate(&GeneratorSpec::Naturals).unwrap();
        let w = weighted_trace(&spec, &TruncatedOperator::identity(20), 2.0, 20).unwrap();
        assert!((w.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
    }

    #[test]
    fn dense_trace_norm_of_a_rank_one_matrix() {
        // u v^T has the single singular value |u| |v|
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0, 0.0];
        let m = DMatrix::from_fn(3, 3, |i, j| Complex64::new(u[i] * v[j], 0.0));
        assert!((trace_norm(&m).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn operator_specs_parse() {
        let s: OperatorSpec = serde_json::from_str(r#"{"label": "shift"}"#).unwrap();
        assert_eq!(TruncatedOperator::from_spec(&s, 10).unwrap().dimension(), 11);
        let d: OperatorSpec = serde_json::from_str(r#"{"dense": [[0, 1], [0, 0]]}"#).unwrap();
        assert_eq!(TruncatedOperator::from_spec(&d, 10).unwrap().dimension(), 2);
        let bad: OperatorSpec = serde_json::from_str(r#"{"label": "rotation"}"#).unwrap();
        assert!(TruncatedOperator::from_spec(&bad, 10).is_err());
    }
}
