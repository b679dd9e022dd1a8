//! Canonical representation of a discrete spectrum off its kernel, and the
//! elementary quantities derived from it: counting function, left limits,
//! cumulated and relative multiplicities, eigenvalues of the spectral weight,
//! growth diagnostics and the piecewise-affine counting interpolant.
//!
//! A [`DistinctSpectrum`] is a re-iterable stream of `(eigenvalue,
//! multiplicity)` blocks with strictly increasing positive eigenvalues. The
//! zero eigenvalue is never represented. Cumulated multiplicities are exact
//! big integers; floating-point ratios are derived from them on demand.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{big_ratio, big_to_f64, fit_line};

/// One distinct eigenvalue with its multiplicity, as emitted by a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBlock {
    pub eigenvalue: f64,
    pub multiplicity: BigUint,
}

impl RawBlock {
    pub fn new(eigenvalue: f64, multiplicity: impl Into<BigUint>) -> Self {
        RawBlock {
            eigenvalue,
            multiplicity: multiplicity.into(),
        }
    }
}

/// Block `k` of a spectrum: eigenvalue, multiplicity `m_k` and cumulated
/// multiplicity `M_k = m_1 + ... + m_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub k: u64,
    pub eigenvalue: f64,
    pub multiplicity: BigUint,
    pub cumulated: BigUint,
}

impl SpectralPoint {
    /// `M_{k-1}`.
    pub fn previous_cumulated(&self) -> BigUint {
        &self.cumulated - &self.multiplicity
    }

    /// Relative multiplicity `m_k / M_k`.
    pub fn relative_multiplicity(&self) -> f64 {
        big_ratio(&self.multiplicity, &self.cumulated)
    }
}

pub type BlockIter<'a> = Box<dyn Iterator<Item = Result<RawBlock>> + Send + 'a>;
pub type LightIter<'a> = Box<dyn Iterator<Item = Result<(f64, f64)>> + Send + 'a>;

/// A deterministic producer of spectral blocks.
///
/// Every call to [`BlockSource::blocks`] starts a fresh cursor; two calls
/// must yield identical sequences.
pub trait BlockSource: Send + Sync + fmt::Debug {
    fn blocks(&self) -> BlockIter<'_>;

    /// `(eigenvalue, multiplicity as f64)` pairs, for consumers that never
    /// need exact multiplicities. Sources with unit multiplicities override
    /// this to skip big-integer bookkeeping.
    fn light_blocks(&self) -> LightIter<'_> {
        Box::new(
            self.blocks()
                .map(|b| b.map(|b| (b.eigenvalue, big_to_f64(&b.multiplicity)))),
        )
    }
}

/// Closed-form eigenvalue law `lambda(n)` of a unit-multiplicity family,
/// extended to real `n`. Used to accelerate sums over far tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SmoothLaw {
    /// `lambda(n) = n`
    Linear,
    /// `lambda(n) = (n / c)^(1 / gamma)`
    Power { c: f64, gamma: f64 },
    /// `n = x Log(x) / pi`
    LogWeyl,
}

impl SmoothLaw {
    /// Eigenvalue at (real) index `n`.
    pub fn eigenvalue(&self, n: f64) -> f64 {
        match *self {
            SmoothLaw::Linear => n,
            SmoothLaw::Power { c, gamma } => power_law_eigenvalue(n, c, gamma),
            SmoothLaw::LogWeyl => log_weyl_eigenvalue(n),
        }
    }

    /// Derivative of the inverse law, `dn/dlambda` at eigenvalue `u`.
    pub fn index_density(&self, u: f64) -> f64 {
        match *self {
            SmoothLaw::Linear => 1.0,
            SmoothLaw::Power { c, gamma } => c * gamma * u.powf(gamma - 1.0),
            SmoothLaw::LogWeyl => (u.ln() + 1.0) / std::f64::consts::PI,
        }
    }
}

pub(crate) fn power_law_eigenvalue(n: f64, c: f64, gamma: f64) -> f64 {
    let x = n / c;
    if gamma == 1.0 {
        x
    } else if gamma == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / gamma)
    }
}

/// Solves `n = x Log(x) / pi` for `x >= 1` by bisection to relative 1e-12.
pub(crate) fn log_weyl_eigenvalue(n: f64) -> f64 {
    let target = n * std::f64::consts::PI;
    let f = |x: f64| x * x.ln();
    let mut lo = 1.0;
    let mut hi = 2.0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo) > 1e-12 * lo {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Structural facts a generator knows about its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Structure {
    /// Every block has multiplicity one, so `M_k = k`.
    pub unit_multiplicity: bool,
    /// The underlying spectrum is infinite. A stream may still stop early
    /// (a prime sieve at its limit) and reports that as an error item.
    pub unbounded: bool,
    pub law: Option<SmoothLaw>,
}

/// Reference values attached by generators; used by reports and tests only.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KnownConstants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dixmier_value: Option<f64>,
}

/// A discrete spectrum off its kernel.
#[derive(Clone)]
pub struct DistinctSpectrum {
    name: String,
    parameters: BTreeMap<String, serde_json::Value>,
    known: KnownConstants,
    structure: Structure,
    source: Arc<dyn BlockSource>,
}

impl fmt::Debug for DistinctSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistinctSpectrum")
            .field("name", &self.name)
            .field("parameters", &self.parameters)
            .field("structure", &self.structure)
            .finish()
    }
}

/// Burn-in and length of a tail window, in blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub burn_in: u64,
    pub length: u64,
}

impl Window {
    /// `K0 = max(10, K/2)`, `W = K - K0`.
    pub fn default_for(blocks: u64) -> Self {
        let burn_in = (blocks / 2).max(10);
        Window {
            burn_in,
            length: blocks.saturating_sub(burn_in),
        }
    }

    pub fn end(&self) -> u64 {
        self.burn_in + self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthClass {
    AsymptoticallyContinuous,
    GeometricGrowth { c: f64 },
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDiagnostics {
    /// `M_k / M_{k-1}` over the window.
    pub ratio_samples: Vec<f64>,
    /// `m_k / M_k` over the window.
    pub relmult_samples: Vec<f64>,
    pub tail_limsup_ratio: f64,
    pub tail_limsup_relmult: f64,
    pub classification: GrowthClass,
    pub window: Window,
}

pub(crate) const AC_RELMULT_THRESHOLD: f64 = 0.05;
pub(crate) const GEOMETRIC_SPREAD: f64 = 0.01;
pub(crate) const GEOMETRIC_MIN_RATIO: f64 = 1.05;

impl DistinctSpectrum {
    pub fn new(name: impl Into<String>, source: Arc<dyn BlockSource>) -> Self {
        DistinctSpectrum {
            name: name.into(),
            parameters: BTreeMap::new(),
            known: KnownConstants::default(),
            structure: Structure::default(),
            source,
        }
    }

    pub fn with_parameter(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn with_known(mut self, known: KnownConstants) -> Self {
        self.known = known;
        self
    }

    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = structure;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.parameters
    }

    pub fn known(&self) -> &KnownConstants {
        &self.known
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Unit multiplicities on an infinite spectrum: `M_k = k` for every k.
    pub fn is_unit_unbounded(&self) -> bool {
        self.structure.unit_multiplicity && self.structure.unbounded
    }

    pub fn raw_blocks(&self) -> BlockIter<'_> {
        self.source.blocks()
    }

    pub fn light_blocks(&self) -> LightIter<'_> {
        self.source.light_blocks()
    }

    /// Fresh cursor over the spectral points.
    pub fn points(&self) -> Points<'_> {
        Points {
            inner: self.source.blocks(),
            k: 0,
            cumulated: BigUint::zero(),
            last_eigenvalue: 0.0,
            failed: false,
        }
    }

    /// The first `count` points, or `InsufficientBlocks`.
    pub fn prefix(&self, count: u64) -> Result<Vec<SpectralPoint>> {
        let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
        for p in self.points().take(count as usize) {
            out.push(p?);
        }
        if (out.len() as u64) < count {
            return Err(Error::InsufficientBlocks {
                needed: count,
                available: out.len() as u64,
            });
        }
        Ok(out)
    }

    /// `N(x)`: number of eigenvalues in `(0, x]`, with multiplicity.
    pub fn counting(&self, x: f64) -> Result<BigUint> {
        if let Some(n) = self.law_count(x, |lambda| lambda <= x) {
            return Ok(n);
        }
        self.count_while(x, |lambda| lambda <= x)
    }

    /// Left limit `N^-(x) = lim_{d -> 0+} N(x - d)`.
    pub fn counting_left(&self, x: f64) -> Result<BigUint> {
        if let Some(n) = self.law_count(x, |lambda| lambda < x) {
            return Ok(n);
        }
        self.count_while(x, |lambda| lambda < x)
    }

    /// Count of a unit-multiplicity law spectrum without walking it: the
    /// largest n with `keep(lambda(n))`, found from the inverse law.
    fn law_count(&self, x: f64, keep: impl Fn(f64) -> bool) -> Option<BigUint> {
        let law = self.structure.law.filter(|_| self.is_unit_unbounded())?;
        if !(x >= 0.0) {
            return Some(BigUint::zero());
        }
        let guess = match law {
            SmoothLaw::Linear => x,
            SmoothLaw::Power { c, gamma } => c * x.powf(gamma),
            SmoothLaw::LogWeyl if x <= 1.0 => 0.0,
            SmoothLaw::LogWeyl => x * x.ln() / std::f64::consts::PI,
        };
        if !(guess < 9.0e15) {
            return None;
        }
        let mut n = guess.floor() as u64;
        while keep(law.eigenvalue((n + 1) as f64)) {
            n += 1;
        }
        while n > 0 && !keep(law.eigenvalue(n as f64)) {
            n -= 1;
        }
        Some(BigUint::from(n))
    }

    fn count_while(&self, x: f64, keep: impl Fn(f64) -> bool) -> Result<BigUint> {
        let mut total = BigUint::zero();
        for block in self.raw_blocks() {
            let block = match block {
                Ok(b) => b,
                // every prime up to the sieve limit has been seen
                Err(Error::SieveLimitExceeded { limit }) if x <= limit as f64 => break,
                Err(e) => return Err(e),
            };
            if !keep(block.eigenvalue) {
                break;
            }
            total += block.multiplicity;
        }
        Ok(total)
    }

    /// `mu_n` of the spectral weight: exactly `1 / M_k` for `M_{k-1} < n <= M_k`.
    pub fn weight_eigenvalue(&self, n: impl Into<BigUint>) -> Result<Ratio<BigUint>> {
        let n = n.into();
        if n.is_zero() {
            return Err(Error::OutOfRange {
                what: "weight index",
                detail: "n must be >= 1".into(),
            });
        }
        if self.is_unit_unbounded() {
            return Ok(Ratio::new(BigUint::one(), n));
        }
        let point = self.block_containing(&n)?;
        Ok(Ratio::new(BigUint::one(), point.cumulated))
    }

    /// The block `k` with `M_{k-1} < n <= M_k`.
    pub fn block_containing(&self, n: &BigUint) -> Result<SpectralPoint> {
        let mut seen = 0u64;
        for p in self.points() {
            let p = match p {
                Ok(p) => p,
                Err(Error::SieveLimitExceeded { .. }) => break,
                Err(e) => return Err(e),
            };
            seen += 1;
            if &p.cumulated >= n {
                return Ok(p);
            }
        }
        Err(Error::OutOfRange {
            what: "weight index",
            detail: format!("n = {n} exceeds the {seen}-block spectrum"),
        })
    }

    /// Continuous piecewise-affine `phi` with `phi(lambda_k) = M_k`.
    pub fn interpolant_at(&self, x: f64) -> Result<f64> {
        let mut prev: Option<(f64, f64)> = None;
        for p in self.points() {
            let p = p?;
            let m = big_to_f64(&p.cumulated);
            match prev {
                None if x < p.eigenvalue => {
                    return Err(Error::OutOfRange {
                        what: "interpolant argument",
                        detail: format!("x = {x} lies below the first eigenvalue {}", p.eigenvalue),
                    })
                }
                Some((lo, m_lo)) if x < p.eigenvalue => {
                    let t = (x - lo) / (p.eigenvalue - lo);
                    return Ok(m_lo + t * (m - m_lo));
                }
                _ if x == p.eigenvalue => return Ok(m),
                _ => prev = Some((p.eigenvalue, m)),
            }
        }
        Err(Error::OutOfRange {
            what: "interpolant argument",
            detail: format!("x = {x} lies beyond the generated range"),
        })
    }

    /// Tail statistics of `M_k/M_{k-1}` and `m_k/M_k` over a window of the
    /// first `blocks` blocks, and the resulting growth classification.
    pub fn growth_diagnostics(&self, blocks: u64, window: Option<Window>) -> Result<GrowthDiagnostics> {
        let window = window.unwrap_or_else(|| Window::default_for(blocks));
        let needed = window.end().max(1);
        if window.length == 0 || blocks < window.end() {
            return Err(Error::InsufficientBlocks {
                needed,
                available: blocks,
            });
        }
        let mut ratio_samples = Vec::with_capacity(window.length as usize);
        let mut relmult_samples = Vec::with_capacity(window.length as usize);
        let mut available = 0u64;
        for p in self.points().take(needed as usize) {
            let p = p?;
            available = p.k;
            if p.k <= window.burn_in {
                continue;
            }
            relmult_samples.push(p.relative_multiplicity());
            if p.k >= 2 {
                ratio_samples.push(big_ratio(&p.cumulated, &p.previous_cumulated()));
            }
        }
        if available < needed {
            return Err(Error::InsufficientBlocks { needed, available });
        }

        let tail = |v: &[f64]| -> f64 {
            let n = (v.len() / 10).max(1).min(v.len());
            v[v.len() - n..].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let tail_limsup_relmult = tail(&relmult_samples);
        let tail_limsup_ratio = if ratio_samples.is_empty() {
            f64::NAN
        } else {
            tail(&ratio_samples)
        };

        let classification = classify(&ratio_samples, &relmult_samples, window.burn_in);
        Ok(GrowthDiagnostics {
            ratio_samples,
            relmult_samples,
            tail_limsup_ratio,
            tail_limsup_relmult,
            classification,
            window,
        })
    }

    /// Hex SHA-256 over the first `blocks` blocks (eigenvalue bits and
    /// big-endian multiplicity bytes).
    pub fn prefix_digest(&self, blocks: u64) -> Result<String> {
        let mut hasher = Sha256::new();
        for b in self.raw_blocks().take(blocks as usize) {
            let b = match b {
                Ok(b) => b,
                Err(Error::SieveLimitExceeded { .. }) => break,
                Err(e) => return Err(e),
            };
            hasher.update(b.eigenvalue.to_bits().to_be_bytes());
            hasher.update(b.multiplicity.to_bytes_be());
        }
        Ok(hex::encode(hasher.finalize()))
    }

    /// Number of blocks available, counting at most `cap`.
    pub fn available_blocks(&self, cap: u64) -> u64 {
        self.light_blocks().take(cap as usize).take_while(|b| b.is_ok()).count() as u64
    }
}

fn classify(ratios: &[f64], relmult: &[f64], burn_in: u64) -> GrowthClass {
    let max_relmult = relmult.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_relmult < AC_RELMULT_THRESHOLD {
        let ks: Vec<f64> = (0..relmult.len()).map(|i| (burn_in + 1 + i as u64) as f64).collect();
        let nonincreasing = match fit_line(&ks, relmult) {
            Ok(fit) => fit.slope <= 0.0,
            // A single sample, or constant data, has no upward trend.
            Err(_) => true,
        };
        if nonincreasing {
            return GrowthClass::AsymptoticallyContinuous;
        }
    }
    if !ratios.is_empty() {
        let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios.iter().map(|r| (r - c).abs()).fold(0.0, f64::max) / c;
        if spread < GEOMETRIC_SPREAD && c > GEOMETRIC_MIN_RATIO {
            return GrowthClass::GeometricGrowth { c };
        }
    }
    GrowthClass::Irregular
}

/// Cursor produced by [`DistinctSpectrum::points`]. Checks the block
/// invariants as it goes.
pub struct Points<'a> {
    inner: BlockIter<'a>,
    k: u64,
    cumulated: BigUint,
    last_eigenvalue: f64,
    failed: bool,
}

impl Iterator for Points<'_> {
    type Item = Result<SpectralPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let block = match self.inner.next()? {
            Ok(b) => b,
            Err(e) => {
                self.failed = true;
                return Some(Err(e));
            }
        };
        if !(block.eigenvalue > self.last_eigenvalue) || block.multiplicity.is_zero() || !block.eigenvalue.is_finite() {
            self.failed = true;
            return Some(Err(Error::invalid(
                "blocks",
                format!(
                    "block {} breaks the stream invariants (eigenvalue {} after {}, multiplicity {})",
                    self.k + 1,
                    block.eigenvalue,
                    self.last_eigenvalue,
                    block.multiplicity
                ),
            )));
        }
        self.k += 1;
        self.last_eigenvalue = block.eigenvalue;
        self.cumulated += &block.multiplicity;
        Some(Ok(SpectralPoint {
            k: self.k,
            eigenvalue: block.eigenvalue,
            multiplicity: block.multiplicity,
            cumulated: self.cumulated.clone(),
        }))
    }
}

/// Convert an exact count to `u64` when it fits.
pub fn count_to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}
