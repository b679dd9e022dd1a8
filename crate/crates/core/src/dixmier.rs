//! Dixmier-trace estimates for the spectral weight.
//!
//! `S_N = (1 / Log N) sum_{n <= N} mu_n` is evaluated block-wise: a full block
//! k contributes `m_k / M_k`, a partial one `(N - M_{k-1}) / M_k`. Estimates
//! come from fitting `S_N` along a schedule of N values.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::geometric_dixmier_value;
use crate::numeric::{big_ln, big_ratio, big_to_f64, fit_line, relative_spread};
use crate::special::harmonic;
use crate::spectrum::{DistinctSpectrum, GrowthClass};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sum_{n <= N} mu_n` for each N of an ascending list, in one forward pass.
pub fn weight_partial_sums(spec: &DistinctSpectrum, ns: &[BigUint]) -> Result<Vec<f64>> {
    if ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("schedule", "N values must be ascending"));
    }
    if spec.is_unit_unbounded() {
        return Ok(ns.iter().map(|n| harmonic(big_to_f64(n))).collect());
    }
    let mut out = Vec::with_capacity(ns.len());
    let mut targets = ns.iter().peekable();
    let mut acc = CompensatedSum::default();
    let mut blocks = 0u64;
    let mut cumulated = BigUint::zero();
    let mut points = spec.points();
    while let Some(&n) = targets.peek() {
        if n <= &cumulated {
            out.push(acc.value());
            targets.next();
            continue;
        }
        let p = match points.next() {
            Some(Ok(p)) => p,
            Some(Err(Error::SieveLimitExceeded { .. })) | None => {
                return Err(Error::InsufficientBlocks {
                    needed: blocks + 1,
                    available: blocks,
                })
            }
            Some(Err(e)) => return Err(e),
        };
        blocks += 1;
        let previous = std::mem::replace(&mut cumulated, p.cumulated.clone());
        while let Some(&n) = targets.peek() {
            if n >= &p.cumulated {
                break;
            }
            let partial = n - &previous;
            let mut inside = acc;
            inside.add(big_ratio(&partial, &p.cumulated));
            out.push(inside.value());
            targets.next();
        }
        acc.add(p.relative_multiplicity());
    }
    Ok(out)
}

/// `S_N = (1 / Log N) sum_{n <= N} mu_n`, for `N >= 2`.
pub fn log_partial_sum(spec: &DistinctSpectrum, n: impl Into<BigUint>) -> Result<f64> {
    let n = n.into();
    if n < BigUint::from(2u32) {
        return Err(Error::OutOfRange {
            what: "N",
            detail: format!("log partial sums need N >= 2, got {n}"),
        });
    }
    let sum = weight_partial_sums(spec, std::slice::from_ref(&n))?[0];
    Ok(sum / big_ln(&n))
}

/// Logarithmic Cesaro mean `(1 / Log t) int_1^t f(s) ds / s` of samples on an
/// increasing grid, with `f` held at its first sample on `[1, t_0]` and the
/// trapezoidal rule in `Log t` between samples.
pub fn cesaro_mean(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if samples.iter().any(|&(t, _)| !(t >= 2.0)) {
        return Err(Error::OutOfRange {
            what: "Cesaro grid",
            detail: "grid points must be >= 2".into(),
        });
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(t, f)| (t.ln(), f)).collect();
    let smoothed = cesaro_log(&logs)?;
    Ok(samples.iter().zip(smoothed).map(|(&(t, _), c)| (t, c)).collect())
}

/// Same as [`cesaro_mean`] with the grid given as `u = Log t`.
pub(crate) fn cesaro_log(samples: &[(f64, f64)]) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::GridTooShort {
            got: samples.len(),
            min: 3,
        });
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("grid", "Cesaro grid must be strictly increasing"));
    }
    let (u0, f0) = samples[0];
    let mut integral = f0 * u0;
    let mut out = Vec::with_capacity(samples.len());
    out.push(f0);
    for w in samples.windows(2) {
        integral += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        out.push(integral / w[1].0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Explicit N values.
    Points { n: Vec<u64> },
    /// `N_j = floor(4 * 10^(j/2))`, `j = 0..=16`, truncated to what the
    /// spectrum (or the block budget) provides.
    Default,
    /// `N = M_k` for `k = first..=last`.
    BlockEnds { first: u64, last: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `S_N = a + b / Log N`
    #[default]
    ConstPlusInvLog,
    ConstOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DixmierOptions {
    pub model: Model,
    /// Upper bound on blocks walked when truncating the default schedule.
    pub block_budget: u64,
    /// Blocks used for the growth classification behind the prediction.
    pub growth_blocks: u64,
    /// Bound `C` on the log-derivative of the counting interpolant, when
    /// known; yields a lower-bound prediction `e^{-C}`.
    pub log_derivative_bound: Option<f64>,
}

impl Default for DixmierOptions {
    fn default() -> Self {
        DixmierOptions {
            model: Model::ConstPlusInvLog,
            block_budget: 2_000_000,
            growth_blocks: 2000,
            log_derivative_bound: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    MeasurableUnit,
    MeasurableValue { value: f64 },
    Inconclusive,
    OscillationDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Unit,
    Geometric,
    LowerBoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: PredictionKind,
    /// Predicted value, or the lower bound for `LowerBoundOnly`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierSample {
    /// Exact N, in decimal.
    pub n: String,
    pub s_n: f64,
    pub cesaro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub schedule: Schedule,
    pub points: usize,
    pub fit_points: usize,
    pub log10_n_first: f64,
    pub log10_n_last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierEstimate {
    pub value: f64,
    pub value_stderr: f64,
    pub model: Model,
    /// RMS residual of the model fit.
    pub model_residual: f64,
    /// Relative spread of two-point extrapolants over the last third.
    pub tail_spread: f64,
    /// Relative spread of Cesaro-smoothed samples over the last decade of N.
    pub cesaro_spread: f64,
    pub verdict: Verdict,
    pub prediction: Option<Prediction>,
    pub schedule: ScheduleSummary,
    pub samples: Vec<DixmierSample>,
}

pub const MIN_SCHEDULE_POINTS: usize = 6;
pub const MIN_SCHEDULE_DECADES: f64 = 3.0;
const FIT_FLOOR: u32 = 100;
const RESIDUAL_RTOL: f64 = 1e-3;
const TAIL_SPREAD: f64 = 0.01;
const OSCILLATION_SPREAD: f64 = 0.05;
const UNIT_TOL: f64 = 0.01;

/// The N values a schedule resolves to on `spec`, ascending and `>= 2`.
pub fn resolve_schedule(spec: &DistinctSpectrum, schedule: &Schedule, block_budget: u64) -> Result<Vec<BigUint>> {
    let two = BigUint::from(2u32);
    let mut ns: Vec<BigUint> = match schedule {
        Schedule::Points { n } => n.iter().map(|&n| BigUint::from(n)).collect(),
        Schedule::Default => {
            let all = (0..=16u32).map(|j| (BigUint::from(16u32) * BigUint::from(10u32).pow(j)).sqrt());
            if spec.is_unit_unbounded() {
                all.collect()
            } else {
                let all: Vec<BigUint> = all.collect();
                let reach = reachable_count(spec, block_budget, all.last().expect("nonempty"))?;
                all.into_iter().filter(|n| n <= &reach).collect()
            }
        }
        Schedule::BlockEnds { first, last } => {
            if first > last || *first == 0 {
                return Err(Error::invalid(
                    "schedule",
                    "block range must satisfy 1 <= first <= last",
                ));
            }
            let mut out = Vec::new();
            for p in spec.points().take(*last as usize) {
                let p = p?;
                if p.k >= *first {
                    out.push(p.cumulated);
                }
            }
            if (out.len() as u64) < last - first + 1 {
                return Err(Error::InsufficientBlocks {
                    needed: *last,
                    available: first - 1 + out.len() as u64,
                });
            }
            out
        }
    };
    ns.retain(|n| n >= &two);
    ns.sort();
    ns.dedup();
    Ok(ns)
}

/// `M_K` for the last block reachable within the budget, or the first one
/// at or past `enough`.
fn reachable_count(spec: &DistinctSpectrum, budget: u64, enough: &BigUint) -> Result<BigUint> {
    let mut reach = BigUint::zero();
    for p in spec.points().take(budget as usize) {
        match p {
            Ok(p) if &p.cumulated >= enough => return Ok(p.cumulated),
            Ok(p) => reach = p.cumulated,
            Err(Error::SieveLimitExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(reach)
}

/// Fit `S_N` along the schedule and classify measurability.
pub fn estimate_trace(
    spec: &DistinctSpectrum,
    schedule: &Schedule,
    options: &DixmierOptions,
) -> Result<DixmierEstimate> {
    let ns = resolve_schedule(spec, schedule, options.block_budget)?;
    if ns.len() < MIN_SCHEDULE_POINTS {
        return Err(Error::GridTooShort {
            got: ns.len(),
            min: MIN_SCHEDULE_POINTS,
        });
    }
    let logs: Vec<f64> = ns.iter().map(big_ln).collect();
    let span = (logs[logs.len() - 1] - logs[0]) / std::f64::consts::LN_10;
    if span < MIN_SCHEDULE_DECADES {
        return Err(Error::OutOfRange {
            what: "schedule",
            detail: format!("N spans {span:.2} decades, at least {MIN_SCHEDULE_DECADES} required"),
        });
    }
    let sums = weight_partial_sums(spec, &ns)?;
    let s: Vec<f64> = sums.iter().zip(&logs).map(|(sum, l)| sum / l).collect();

    let floor = BigUint::from(FIT_FLOOR);
    let mut first_fit = ns.iter().position(|n| n >= &floor).unwrap_or(ns.len());
    if ns.len() - first_fit < MIN_SCHEDULE_POINTS {
        first_fit = 0;
    }
    let xs: Vec<f64> = logs[first_fit..].iter().map(|l| 1.0 / l).collect();
    let ys = &s[first_fit..];
    let (value, value_stderr, model_residual) = match options.model {
        Model::ConstPlusInvLog => {
            let fit = fit_line(&xs, ys)?;
            (fit.intercept, fit.intercept_stderr, fit.rms_residual)
        }
        Model::ConstOnly => {
            let n = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / n;
            let rms = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
            (mean, rms / n.sqrt(), rms)
        }
    };

    let third = ys.len().div_ceil(3).max(2);
    let tail_values: Vec<f64> = match options.model {
        Model::ConstPlusInvLog => {
            let xt = &xs[xs.len() - third..];
            let yt = &ys[ys.len() - third..];
            xt.windows(2)
                .zip(yt.windows(2))
                .map(|(x, y)| y[0] - x[0] * (y[1] - y[0]) / (x[1] - x[0]))
                .collect()
        }
        Model::ConstOnly => ys[ys.len() - third..].to_vec(),
    };
    let tail_spread = relative_spread(&tail_values);

    let cesaro = cesaro_log(&logs.iter().copied().zip(s.iter().copied()).collect::<Vec<_>>())?;
    let last_decade = logs[logs.len() - 1] - std::f64::consts::LN_10;
    let recent: Vec<f64> = logs
        .iter()
        .zip(&cesaro)
        .filter(|(l, _)| **l >= last_decade)
        .map(|(_, c)| *c)
        .collect();
    let cesaro_spread = relative_spread(&recent);

    let verdict = if model_residual < RESIDUAL_RTOL * value.abs() && tail_spread < TAIL_SPREAD {
        if (value - 1.0).abs() <= UNIT_TOL {
            Verdict::MeasurableUnit
        } else {
            Verdict::MeasurableValue { value }
        }
    } else if cesaro_spread > OSCILLATION_SPREAD {
        Verdict::OscillationDetected
    } else {
        Verdict::Inconclusive
    };

    let prediction = predict(spec, options);
    let samples = ns
        .iter()
        .zip(s.iter().zip(&cesaro))
        .map(|(n, (&s_n, &c))| DixmierSample {
            n: n.to_string(),
            s_n,
            cesaro: c,
        })
        .collect();
    Ok(DixmierEstimate {
        value,
        value_stderr,
        model: options.model,
        model_residual,
        tail_spread,
        cesaro_spread,
        verdict,
        prediction,
        schedule: ScheduleSummary {
            schedule: schedule.clone(),
            points: ns.len(),
            fit_points: ys.len(),
            log10_n_first: logs[0] / std::f64::consts::LN_10,
            log10_n_last: logs[logs.len() - 1] / std::f64::consts::LN_10,
        },
        samples,
    })
}

/// Closed-form prediction supported by the growth classification.
pub fn predict(spec: &DistinctSpectrum, options: &DixmierOptions) -> Option<Prediction> {
    let blocks = spec.available_blocks(options.growth_blocks);
    let growth = spec.growth_diagnostics(blocks, None).ok();
    match growth.map(|g| g.classification) {
        Some(GrowthClass::AsymptoticallyContinuous) => Some(Prediction {
            kind: PredictionKind::Unit,
            value: 1.0,
        }),
        Some(GrowthClass::GeometricGrowth { c }) => Some(Prediction {
            kind: PredictionKind::Geometric,
            value: geometric_dixmier_value(c),
        }),
        _ => options.log_derivative_bound.map(|c| Prediction {
            kind: PredictionKind::LowerBoundOnly,
            value: (-c).exp(),
        }),
    }
}

/// Dixmier value from block-end samples `N = M_k`, extrapolated linearly in
/// `1 / k` over the last `tail` blocks of the first `blocks`.
pub fn block_extrapolation(spec: &DistinctSpectrum, blocks: u64, tail: u64) -> Result<f64> {
    if tail < 2 || tail > blocks {
        return Err(Error::invalid("tail", "need 2 <= tail <= blocks"));
    }
    let ends = resolve_schedule(
        spec,
        &Schedule::BlockEnds {
            first: blocks - tail + 1,
            last: blocks,
        },
        blocks,
    )?;
    let sums = weight_partial_sums(spec, &ends)?;
    let ks: Vec<f64> = (blocks - tail + 1..=blocks).map(|k| 1.0 / k as f64).collect();
    let s: Vec<f64> = sums.iter().zip(&ends).map(|(sum, n)| sum / big_ln(n)).collect();
    if ks.len() != s.len() {
        return Err(Error::invalid("schedule", "block ends must be >= 2"));
    }
    Ok(fit_line(&ks, &s)?.intercept)
}

/// `H_N / Log N`, the upper envelope of every `S_N`.
pub fn harmonic_envelope(n: &BigUint) -> f64 {
    if n.is_one() {
        return f64::INFINITY;
    }
    harmonic(n.to_f64().unwrap_or(f64::INFINITY)) / big_ln(n)
}
