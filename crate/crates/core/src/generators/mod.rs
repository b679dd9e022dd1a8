//! Declarative spectrum generators.
//!
//! A [`GeneratorSpec`] is the JSON-facing description of a family; the
//! [`generate`] factory turns it into a [`DistinctSpectrum`] whose block
//! stream can be iterated any number of times.

mod primes;
mod torus;

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{
    BlockIter, BlockSource, DistinctSpectrum, KnownConstants, LightIter, RawBlock, SmoothLaw, Structure,
};

pub use primes::PrimeSieve;

pub const DEFAULT_SIEVE_LIMIT: u64 = 10_000_000;

/// Relative tolerance under which two floating eigenvalues are merged.
pub const MERGE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `(eigenvalue, multiplicity)` pairs in any order; zero modes dropped.
    Explicit {
        pairs: Vec<(f64, u64)>,
    },
    Naturals,
    Primes {
        #[serde(default = "default_sieve_limit")]
        limit: u64,
    },
    FreeGroup {
        p: u64,
    },
    Torus2,
    WeylPower {
        c: f64,
        gamma: f64,
    },
    LogWeyl,
    FractalLaw {
        c: f64,
        d_s: f64,
    },
    Geometric {
        c: f64,
    },
    /// Cumulated dimensions `[M_1, M_2, ...]` of a filtration.
    Filtration {
        dims: Vec<u64>,
    },
}

fn default_sieve_limit() -> u64 {
    DEFAULT_SIEVE_LIMIT
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Explicit { .. } => "explicit",
            GeneratorSpec::Naturals => "naturals",
            GeneratorSpec::Primes { .. } => "primes",
            GeneratorSpec::FreeGroup { .. } => "free_group",
            GeneratorSpec::Torus2 => "torus2",
            GeneratorSpec::WeylPower { .. } => "weyl_power",
            GeneratorSpec::LogWeyl => "log_weyl",
            GeneratorSpec::FractalLaw { .. } => "fractal_law",
            GeneratorSpec::Geometric { .. } => "geometric",
            GeneratorSpec::Filtration { .. } => "filtration",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::Explicit { pairs } => {
                for (i, &(lambda, m)) in pairs.iter().enumerate() {
                    if !lambda.is_finite() || lambda < 0.0 {
                        return Err(Error::invalid(
                            format!("pairs[{i}]"),
                            format!("eigenvalue must be finite and >= 0, got {lambda}"),
                        ));
                    }
                    if m == 0 {
                        return Err(Error::invalid(format!("pairs[{i}]"), "multiplicity must be >= 1"));
                    }
                }
                if !pairs.iter().any(|&(l, _)| l > 0.0) {
                    return Err(Error::invalid("pairs", "no positive eigenvalue"));
                }
            }
            GeneratorSpec::Primes { limit } if *limit < 2 => {
                return Err(Error::invalid("limit", "sieve limit must be >= 2"));
            }
            GeneratorSpec::FreeGroup { p } if *p < 2 => {
                return Err(Error::invalid("p", format!("p must be an integer >= 2, got {p}")));
            }
            GeneratorSpec::WeylPower { c, gamma } => {
                positive("c", *c)?;
                positive("gamma", *gamma)?;
            }
            GeneratorSpec::FractalLaw { c, d_s } => {
                positive("c", *c)?;
                positive("d_s", *d_s)?;
            }
            GeneratorSpec::Geometric { c } => {
                if !(c.is_finite() && *c > 1.0) {
                    return Err(Error::invalid("c", format!("c must be > 1, got {c}")));
                }
            }
            GeneratorSpec::Filtration { dims } => {
                if dims.is_empty() {
                    return Err(Error::invalid("dims", "empty filtration"));
                }
                if dims[0] == 0 {
                    return Err(Error::invalid("dims[0]", "dimensions must be positive"));
                }
                if let Some(i) = dims.windows(2).position(|w| w[1] <= w[0]) {
                    return Err(Error::invalid(
                        format!("dims[{}]", i + 1),
                        "dimensions must be strictly increasing",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// `(c - 1) / (c Log c)`, the Dixmier value of a spectrum whose cumulated
/// multiplicities grow geometrically with ratio `c`.
pub fn geometric_dixmier_value(c: f64) -> f64 {
    (c - 1.0) / (c * c.ln())
}

/// Build the spectrum described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<DistinctSpectrum> {
    spec.validate()?;
    let unit_law = |law: Option<SmoothLaw>| Structure {
        unit_multiplicity: true,
        unbounded: true,
        law,
    };
    let ac = KnownConstants {
        growth_ratio: Some(1.0),
        dixmier_value: Some(1.0),
    };
    let spectrum = match spec {
        GeneratorSpec::Explicit { pairs } => {
            let blocks = merge_explicit(pairs);
            let unit = blocks.iter().all(|b| b.multiplicity.is_one());
            DistinctSpectrum::new("explicit", Arc::new(ExplicitSource { blocks })).with_structure(Structure {
                unit_multiplicity: unit,
                unbounded: false,
                law: None,
            })
        }
        GeneratorSpec::Naturals => DistinctSpectrum::new("naturals", Arc::new(Naturals))
            .with_structure(unit_law(Some(SmoothLaw::Linear)))
            .with_known(ac),
        GeneratorSpec::Primes { limit } => DistinctSpectrum::new("primes", Arc::new(PrimeSieve::new(*limit)))
            .with_structure(Structure {
                unit_multiplicity: true,
                unbounded: true,
                law: None,
            })
            .with_known(ac),
        GeneratorSpec::FreeGroup { p } => {
            let c = (2 * p - 1) as f64;
            DistinctSpectrum::new("free_group", Arc::new(FreeGroup { p: *p }))
                .with_structure(Structure {
                    unit_multiplicity: false,
                    unbounded: true,
                    law: None,
                })
                .with_known(KnownConstants {
                    growth_ratio: Some(c),
                    dixmier_value: Some(geometric_dixmier_value(c)),
                })
        }
        GeneratorSpec::Torus2 => DistinctSpectrum::new("torus2", Arc::new(torus::Torus2))
            .with_structure(Structure {
                unit_multiplicity: false,
                unbounded: true,
                law: None,
            })
            .with_known(ac),
        GeneratorSpec::WeylPower { c, gamma } => power_spectrum("weyl_power", *c, *gamma),
        GeneratorSpec::FractalLaw { c, d_s } => power_spectrum("fractal_law", *c, d_s / 2.0),
        GeneratorSpec::LogWeyl => DistinctSpectrum::new(
            "log_weyl",
            Arc::new(LawSource {
                law: SmoothLaw::LogWeyl,
            }),
        )
        .with_structure(unit_law(Some(SmoothLaw::LogWeyl)))
        .with_known(ac),
        GeneratorSpec::Geometric { c } => DistinctSpectrum::new("geometric", Arc::new(Geometric { c: *c }))
            .with_structure(Structure {
                unit_multiplicity: false,
                unbounded: true,
                law: None,
            })
            .with_known(KnownConstants {
                growth_ratio: Some(*c),
                dixmier_value: Some(geometric_dixmier_value(*c)),
            }),
        GeneratorSpec::Filtration { dims } => {
            let mut prev = 0u64;
            let blocks = dims
                .iter()
                .enumerate()
                .map(|(k, &d)| {
                    let b = RawBlock::new((k + 1) as f64, d - prev);
                    prev = d;
                    b
                })
                .collect();
            DistinctSpectrum::new("filtration", Arc::new(ExplicitSource { blocks }))
        }
    };
    let echo = serde_json::to_value(spec).expect("generator specs serialize");
    let mut spectrum = spectrum;
    if let serde_json::Value::Object(map) = echo {
        for (k, v) in map {
            if k != "kind" {
                spectrum = spectrum.with_parameter(&k, v);
            }
        }
    }
    Ok(spectrum)
}

fn power_spectrum(name: &str, c: f64, gamma: f64) -> DistinctSpectrum {
    let law = SmoothLaw::Power { c, gamma };
    DistinctSpectrum::new(name, Arc::new(LawSource { law }))
        .with_structure(Structure {
            unit_multiplicity: true,
            unbounded: true,
            law: Some(law),
        })
        .with_known(KnownConstants {
            growth_ratio: Some(1.0),
            dixmier_value: Some(1.0),
        })
}

/// Sort, drop zero modes and merge eigenvalues equal within [`MERGE_RTOL`].
fn merge_explicit(pairs: &[(f64, u64)]) -> Vec<RawBlock> {
    let mut sorted: Vec<(f64, u64)> = pairs.iter().copied().filter(|&(l, _)| l > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<RawBlock> = Vec::with_capacity(sorted.len());
    for (lambda, m) in sorted {
        match out.last_mut() {
            Some(last) if lambda - last.eigenvalue <= MERGE_RTOL * last.eigenvalue => {
                last.multiplicity += BigUint::from(m);
            }
            _ => out.push(RawBlock::new(lambda, m)),
        }
    }
    out
}

#[derive(Debug)]
struct ExplicitSource {
    blocks: Vec<RawBlock>,
}

impl BlockSource for ExplicitSource {
    fn blocks(&self) -> BlockIter<'_> {
        Box::new(self.blocks.iter().cloned().map(Ok))
    }
}

#[derive(Debug)]
struct Naturals;

impl BlockSource for Naturals {
    fn blocks(&self) -> BlockIter<'_> {
        Box::new((1u64..).map(|k| Ok(RawBlock::new(k as f64, 1u32))))
    }

    fn light_blocks(&self) -> LightIter<'_> {
        Box::new((1u64..).map(|k| Ok((k as f64, 1.0))))
    }
}

#[derive(Debug)]
struct FreeGroup {
    p: u64,
}

impl BlockSource for FreeGroup {
    fn blocks(&self) -> BlockIter<'_> {
        let q = BigUint::from(2 * self.p - 1);
        let mut m = BigUint::from(2 * self.p);
        let mut k = 0u64;
        Box::new(std::iter::from_fn(move || {
            k += 1;
            let block = RawBlock {
                eigenvalue: k as f64,
                multiplicity: m.clone(),
            };
            m *= &q;
            Some(Ok(block))
        }))
    }
}

/// Unit-multiplicity stream `lambda_n = law(n)`, merging float ties.
#[derive(Debug)]
struct LawSource {
    law: SmoothLaw,
}

impl BlockSource for LawSource {
    fn blocks(&self) -> BlockIter<'_> {
        let mut n = 0u64;
        let mut pending: Option<RawBlock> = None;
        Box::new(std::iter::from_fn(move || loop {
            n += 1;
            let lambda = self.law.eigenvalue(n as f64);
            match pending.take() {
                None => pending = Some(RawBlock::new(lambda, 1u32)),
                Some(mut b) if lambda - b.eigenvalue <= MERGE_RTOL * b.eigenvalue => {
                    b.multiplicity += 1u32;
                    pending = Some(b);
                }
                Some(b) => {
                    pending = Some(RawBlock::new(lambda, 1u32));
                    return Some(Ok(b));
                }
            }
        }))
    }

    fn light_blocks(&self) -> LightIter<'_> {
        Box::new(self.blocks().map(|b| {
            b.map(|b| {
                let m = if b.multiplicity.is_one() {
                    1.0
                } else {
                    crate::numeric::big_to_f64(&b.multiplicity)
                };
                (b.eigenvalue, m)
            })
        }))
    }
}

/// `lambda_k = k`, `M_1 = max(2, round c)`, `M_k = max(M_{k-1} + 1, round(c M_{k-1}))`.
#[derive(Debug)]
struct Geometric {
    c: f64,
}

/// `round(c * m)` (halves away from zero), exact for any f64 `c`.
fn scale_round(c: f64, m: &BigUint) -> BigUint {
    let (mantissa, exponent, _) = c.integer_decode();
    let product = m * BigUint::from(mantissa);
    if exponent >= 0 {
        product << exponent as u64
    } else {
        let shift = (-exponent) as u64;
        (product + (BigUint::one() << (shift - 1))) >> shift
    }
}

impl BlockSource for Geometric {
    fn blocks(&self) -> BlockIter<'_> {
        let c = self.c;
        let mut k = 0u64;
        let mut cumulated = BigUint::zero();
        Box::new(std::iter::from_fn(move || {
            k += 1;
            let next = if k == 1 {
                scale_round(c, &BigUint::one()).max(BigUint::from(2u32))
            } else {
                scale_round(c, &cumulated).max(&cumulated + 1u32)
            };
            let m = &next - &cumulated;
            cumulated = next;
            Some(Ok(RawBlock {
                eigenvalue: k as f64,
                multiplicity: m,
            }))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(spec: &GeneratorSpec, n: u64) -> Vec<(f64, u64, u64)> {
        use num_traits::ToPrimitive;
        generate(spec)
            .unwrap()
            .prefix(n)
            .unwrap()
            .into_iter()
            .map(|p| {
                (
                    p.eigenvalue,
                    p.multiplicity.to_u64().unwrap(),
                    p.cumulated.to_u64().unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn free_group_first_blocks() {
        assert_eq!(
            triples(&GeneratorSpec::FreeGroup { p: 2 }, 3),
            vec![(1.0, 4, 4), (2.0, 12, 16), (3.0, 36, 52)]
        );
    }

    #[test]
    fn explicit_passes_through_and_merges() {
        let spec = GeneratorSpec::Explicit { pairs: vec![(2.0, 3)] };
        assert_eq!(triples(&spec, 1), vec![(2.0, 3, 3)]);
        let spec = GeneratorSpec::Explicit {
            pairs: vec![(3.0, 1), (0.0, 7), (1.0, 2), (3.0 * (1.0 + 1e-14), 4)],
        };
        assert_eq!(triples(&spec, 2), vec![(1.0, 2, 2), (3.0, 5, 7)]);
    }

    #[test]
    fn geometric_rounding_is_exact() {
        // c = 2: M_k = 2^k
        let t = triples(&GeneratorSpec::Geometric { c: 2.0 }, 5);
        let ms: Vec<u64> = t.iter().map(|x| x.2).collect();
        assert_eq!(ms, vec![2, 4, 8, 16, 32]);
        // c = 1.5: 2, 3, round(4.5) = 5, round(7.5) = 8, 12
        let t = triples(&GeneratorSpec::Geometric { c: 1.5 }, 5);
        let ms: Vec<u64> = t.iter().map(|x| x.2).collect();
        assert_eq!(ms, vec![2, 3, 5, 8, 12]);
        // c = 1.1 would stall at round(1.1 * 2) = 2 without the +1 guard
        let t = triples(&GeneratorSpec::Geometric { c: 1.1 }, 3);
        let ms: Vec<u64> = t.iter().map(|x| x.2).collect();
        assert_eq!(ms, vec![2, 3, 4]);
    }

    #[test]
    fn filtration_uses_dims_as_cumulated() {
        let t = triples(&GeneratorSpec::Filtration { dims: vec![1, 3, 7] }, 3);
        assert_eq!(t, vec![(1.0, 1, 1), (2.0, 2, 3), (3.0, 4, 7)]);
    }

    #[test]
    fn weyl_power_sqrt_law() {
        let t = triples(&GeneratorSpec::WeylPower { c: 1.0, gamma: 2.0 }, 4);
        assert_eq!(t[3], (2.0, 1, 4));
    }

    #[test]
    fn log_weyl_solves_inverse_law() {
        let spec = generate(&GeneratorSpec::LogWeyl).unwrap();
        for p in spec.prefix(500).unwrap() {
            let x = p.eigenvalue;
            let n = x * x.ln() / std::f64::consts::PI;
            assert!((n - p.k as f64).abs() < 1e-9 * p.k as f64, "k = {} gives {n}", p.k);
        }
    }

    #[test]
    fn spec_json_rejects_unknown_keys_and_kinds() {
        let ok: GeneratorSpec = serde_json::from_str(r#"{"kind": "free_group", "p": 2}"#).unwrap();
        assert_eq!(ok, GeneratorSpec::FreeGroup { p: 2 });
        let ok: GeneratorSpec =
            serde_json::from_str(r#"{"kind": "explicit", "pairs": [[1.0, 4], [2.0, 12]]}"#).unwrap();
        assert_eq!(
            ok,
            GeneratorSpec::Explicit {
                pairs: vec![(1.0, 4), (2.0, 12)]
            }
        );
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"kind": "free_group", "p": 2, "q": 1}"#).is_err());
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"kind": "mystery"}"#).is_err());
        let primes: GeneratorSpec = serde_json::from_str(r#"{"kind": "primes"}"#).unwrap();
        assert_eq!(
            primes,
            GeneratorSpec::Primes {
                limit: DEFAULT_SIEVE_LIMIT
            }
        );
    }

    #[test]
    fn invalid_parameters_name_their_field() {
        let cases = [
            (GeneratorSpec::FreeGroup { p: 1 }, "p"),
            (GeneratorSpec::WeylPower { c: -1.0, gamma: 2.0 }, "c"),
            (GeneratorSpec::Geometric { c: 1.0 }, "c"),
            (GeneratorSpec::Filtration { dims: vec![1, 3, 3] }, "dims[2]"),
        ];
        for (spec, field) in cases {
            match generate(&spec) {
                Err(Error::InvalidSpec { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{spec:?}: {other:?}"),
            }
        }
    }
}
