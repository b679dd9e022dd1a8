//! Declarative analysis runs: a JSON config in, an [`AnalysisReport`] out,
//! plus CSV/JSON series for plotting.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dixmier::{estimate_trace, DixmierEstimate, DixmierOptions, DixmierSample, Model, Schedule};
use crate::error::{Error, Result};
use crate::generators::{generate, GeneratorSpec};
use crate::hypertrace::{check_hypotheses, HypertraceVerdict};
use crate::spectrum::{DistinctSpectrum, GrowthDiagnostics};
use crate::tauberian::{default_beta_grid, default_x_grid, tauber_check, PartitionSample, TauberReport};
use crate::zeta::{
    criteria_check, free_group_residue, residue_estimate, zeta_eval_with_budget, CriteriaReport, ZetaValue,
    DEFAULT_ALPHAS,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Growth,
    Dixmier,
    Zeta,
    Criteria,
    Tauber,
    Hypertrace,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::Growth,
        Section::Dixmier,
        Section::Zeta,
        Section::Criteria,
        Section::Tauber,
        Section::Hypertrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Section::Growth => "growth",
            Section::Dixmier => "dixmier",
            Section::Zeta => "zeta",
            Section::Criteria => "criteria",
            Section::Tauber => "tauber",
            Section::Hypertrace => "hypertrace",
        }
    }
}

/// `"all"` or a list of section names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    Keyword(String),
    List(Vec<Section>),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DixmierConfig {
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_zeta_tol")]
    pub tol: f64,
    #[serde(default = "default_residue_tol")]
    pub residue_tol: f64,
    #[serde(default = "default_zeta_budget")]
    pub block_budget: u64,
}

fn default_s_grid() -> Vec<f64> {
    vec![2.0, 2.5, 3.0, 4.0]
}
fn default_zeta_tol() -> f64 {
    1e-6
}
fn default_residue_tol() -> f64 {
    1e-8
}
fn default_zeta_budget() -> u64 {
    1_000_000
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig {
            s_grid: default_s_grid(),
            tol: default_zeta_tol(),
            residue_tol: default_residue_tol(),
            block_budget: default_zeta_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauberConfig {
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Vec<f64>,
}

impl Default for TauberConfig {
    fn default() -> Self {
        TauberConfig {
            x_grid: default_x_grid(),
            beta_grid: default_beta_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksConfig {
    pub growth: u64,
    pub criteria: u64,
    pub hypertrace: u64,
    pub digest: u64,
}

impl Default for BlocksConfig {
    fn default() -> Self {
        BlocksConfig {
            growth: 2000,
            criteria: 200,
            hypertrace: 50_000,
            digest: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub spec: GeneratorSpec,
    #[serde(default)]
    pub analyses: Selection,
    #[serde(default)]
    pub dixmier: DixmierConfig,
    #[serde(default)]
    pub zeta: ZetaConfig,
    #[serde(default)]
    pub tauber: TauberConfig,
    #[serde(default)]
    pub blocks: BlocksConfig,
}

impl AnalysisConfig {
    pub fn new(spec: GeneratorSpec) -> Self {
        AnalysisConfig {
            spec,
            analyses: Selection::default(),
            dixmier: DixmierConfig::default(),
            zeta: ZetaConfig::default(),
            tauber: TauberConfig::default(),
            blocks: BlocksConfig::default(),
        }
    }

    pub fn sections(&self) -> Result<Vec<Section>> {
        match &self.analyses {
            Selection::Keyword(k) if k == "all" => Ok(Section::ALL.to_vec()),
            Selection::Keyword(k) => Err(Error::Config {
                location: "analyses".into(),
                message: format!("expected \"all\" or a list of sections, got {k:?}"),
            }),
            Selection::List(list) => {
                let mut v = list.clone();
                v.sort();
                v.dedup();
                Ok(v)
            }
        }
    }
}

/// Parse a config, reporting the JSON path and position of the first problem.
pub fn parse_config(text: &str) -> Result<AnalysisConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: AnalysisConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config {
            location: format!("{path} (line {}, column {})", inner.line(), inner.column()),
            message: inner.to_string(),
        }
    })?;
    config.spec.validate().map_err(|e| match e {
        Error::InvalidSpec { field, message } => Error::Config {
            location: format!("spec.{field}"),
            message,
        },
        other => other,
    })?;
    config.sections()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEcho {
    pub generator: GeneratorSpec,
    pub name: String,
    pub digest: String,
    pub digest_blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSection {
    pub residue: f64,
    pub samples: Vec<ZetaValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TauberOutcome {
    Computed(TauberReport),
    NotNuclear { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossChecks {
    /// `dixmier.value - zeta.residue`, when both succeeded.
    pub dixmier_vs_zeta_residue_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionError {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for SectionError {
    fn from(e: &Error) -> Self {
        SectionError {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub schema: u32,
    pub specweight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub spectrum: SpectrumEcho,
    pub growth: Option<GrowthDiagnostics>,
    pub dixmier: Option<DixmierEstimate>,
    pub zeta: Option<ZetaSection>,
    pub criteria: Option<CriteriaReport>,
    pub tauber: Option<TauberOutcome>,
    pub hypertrace: Option<HypertraceVerdict>,
    pub cross_checks: CrossChecks,
    pub errors: BTreeMap<Section, SectionError>,
    pub versions: Versions,
    /// Wall time per section, in milliseconds.
    pub timing_ms: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn failed_sections(&self) -> Vec<Section> {
        self.errors.keys().copied().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn run_zeta(spec: &DistinctSpectrum, generator: &GeneratorSpec, cfg: &ZetaConfig) -> Result<ZetaSection> {
    let samples = cfg
        .s_grid
        .iter()
        .map(|&s| zeta_eval_with_budget(spec, Complex64::new(s, 0.0), cfg.tol, cfg.block_budget))
        .collect::<Result<Vec<_>>>()?;
    let residue = if let GeneratorSpec::FreeGroup { p } = generator {
        free_group_residue(*p, cfg.residue_tol)?
    } else if !spec.structure().unbounded {
        0.0
    } else if spec.is_unit_unbounded() {
        residue_estimate(spec, cfg.residue_tol)?
    } else {
        return Err(Error::OutOfRange {
            what: "residue",
            detail: format!("no certified residue route for {}", spec.name()),
        });
    };
    Ok(ZetaSection { residue, samples })
}

fn run_tauber(spec: &DistinctSpectrum, cfg: &TauberConfig) -> Result<TauberOutcome> {
    match tauber_check(spec, &cfg.x_grid, &cfg.beta_grid) {
        Ok(r) => Ok(TauberOutcome::Computed(r)),
        Err(Error::NotNuclear { beta }) => Ok(TauberOutcome::NotNuclear { beta }),
        Err(e) => Err(e),
    }
}

/// Runs every enabled section concurrently. Section failures are recorded
/// in `errors`; only an invalid generator spec fails the whole call.
pub fn run_analyze(config: &AnalysisConfig) -> Result<AnalysisReport> {
    let sections = config.sections()?;
    let spec = generate(&config.spec).map_err(|e| match e {
        Error::InvalidSpec { field, message } => Error::Config {
            location: format!("spec.{field}"),
            message,
        },
        other => other,
    })?;
    let enabled = |s: Section| sections.contains(&s);
    let blocks = &config.blocks;

    let (digest_blocks, digest) = {
        let n = spec.available_blocks(blocks.digest);
        (n, spec.prefix_digest(n)?)
    };

    let mut growth = None;
    let mut dixmier = None;
    let mut zeta = None;
    let mut criteria = None;
    let mut tauber = None;
    let mut hypertrace = None;
    rayon::scope(|scope| {
        let spec = &spec;
        if enabled(Section::Growth) {
            scope.spawn(|_| {
                growth = Some(timed(|| {
                    let k = spec.available_blocks(blocks.growth);
                    spec.growth_diagnostics(k, None)
                }))
            });
        }
        if enabled(Section::Dixmier) {
            scope.spawn(|_| {
                dixmier = Some(timed(|| {
                    let schedule = config.dixmier.schedule.clone().unwrap_or(Schedule::Default);
                    let options = DixmierOptions {
                        model: config.dixmier.model,
                        ..DixmierOptions::default()
                    };
                    estimate_trace(spec, &schedule, &options)
                }))
            });
        }
        if enabled(Section::Zeta) {
            scope.spawn(|_| zeta = Some(timed(|| run_zeta(spec, &config.spec, &config.zeta))));
        }
        if enabled(Section::Criteria) {
            scope.spawn(|_| {
                criteria = Some(timed(|| {
                    let k = spec.available_blocks(blocks.criteria);
                    criteria_check(spec, k, &DEFAULT_ALPHAS)
                }))
            });
        }
        if enabled(Section::Tauber) {
            scope.spawn(|_| tauber = Some(timed(|| run_tauber(spec, &config.tauber))));
        }
        if enabled(Section::Hypertrace) {
            scope.spawn(|_| {
                hypertrace = Some(timed(|| {
                    // one block beyond K is needed for the last gap
                    let k = spec.available_blocks(blocks.hypertrace + 1).saturating_sub(1);
                    check_hypotheses(spec, k)
                }))
            });
        }
    });

    let mut errors = BTreeMap::new();
    let mut timing_ms = BTreeMap::new();
    fn settle<T>(
        section: Section,
        slot: Option<(Result<T>, f64)>,
        errors: &mut BTreeMap<Section, SectionError>,
        timing: &mut BTreeMap<String, f64>,
    ) -> Option<T> {
        let (result, ms) = slot?;
        timing.insert(section.name().into(), ms);
        result.map_err(|e| errors.insert(section, SectionError::from(&e))).ok()
    }
    let growth = settle(Section::Growth, growth, &mut errors, &mut timing_ms);
    let dixmier = settle(Section::Dixmier, dixmier, &mut errors, &mut timing_ms);
    let zeta = settle(Section::Zeta, zeta, &mut errors, &mut timing_ms);
    let criteria = settle(Section::Criteria, criteria, &mut errors, &mut timing_ms);
    let tauber = settle(Section::Tauber, tauber, &mut errors, &mut timing_ms);
    let hypertrace = settle(Section::Hypertrace, hypertrace, &mut errors, &mut timing_ms);

    let delta = match (&dixmier, &zeta) {
        (Some(d), Some(z)) => Some(d.value - z.residue),
        _ => None,
    };
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        spectrum: SpectrumEcho {
            generator: config.spec.clone(),
            name: spec.name().into(),
            digest,
            digest_blocks,
        },
        growth,
        dixmier,
        zeta,
        criteria,
        tauber,
        hypertrace,
        cross_checks: CrossChecks {
            dixmier_vs_zeta_residue_delta: delta,
        },
        errors,
        versions: Versions {
            schema: SCHEMA_VERSION,
            specweight: env!("CARGO_PKG_VERSION").into(),
        },
        timing_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    Csv,
    Json,
}

/// Plot-ready series with fixed columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    /// `N, S_N, cesaro`
    Dixmier(Vec<DixmierSample>),
    /// `s, re, im, tail_bound`
    Zeta(Vec<ZetaValue>),
    /// `beta, Z, energy`
    Partition(Vec<PartitionSample>),
}

impl Series {
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            Series::Dixmier(_) => &["N", "S_N", "cesaro"],
            Series::Zeta(_) => &["s", "re", "im", "tail_bound"],
            Series::Partition(_) => &["beta", "Z", "energy"],
        }
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        match self {
            Series::Dixmier(v) => v
                .iter()
                .map(|d| vec![d.n.clone(), d.s_n.to_string(), d.cesaro.to_string()])
                .collect(),
            Series::Zeta(v) => v
                .iter()
                .map(|z| {
                    vec![
                        z.s.re.to_string(),
                        z.value.re.to_string(),
                        z.value.im.to_string(),
                        z.tail_bound.to_string(),
                    ]
                })
                .collect(),
            Series::Partition(v) => v
                .iter()
                .map(|p| vec![p.beta.to_string(), p.z.to_string(), p.energy.to_string()])
                .collect(),
        }
    }

    fn json_rows(&self) -> serde_json::Value {
        let header = self.header();
        let rows = match self {
            Series::Dixmier(v) => v
                .iter()
                .map(|d| serde_json::json!([d.n, d.s_n, d.cesaro]))
                .collect::<Vec<_>>(),
            Series::Zeta(v) => v
                .iter()
                .map(|z| serde_json::json!([z.s.re, z.value.re, z.value.im, z.tail_bound]))
                .collect(),
            Series::Partition(v) => v.iter().map(|p| serde_json::json!([p.beta, p.z, p.energy])).collect(),
        };
        let objects = rows
            .into_iter()
            .map(|row| {
                let serde_json::Value::Array(cells) = row else {
                    unreachable!()
                };
                header
                    .iter()
                    .map(|h| h.to_string())
                    .zip(cells)
                    .collect::<serde_json::Map<_, _>>()
            })
            .collect::<Vec<_>>();
        serde_json::Value::from(objects)
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes a series to any sink.
pub fn write_series(series: &Series, mut sink: impl std::io::Write, format: SeriesFormat) -> std::io::Result<()> {
    match format {
        SeriesFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(series.header())?;
            for row in series.rows() {
                w.write_record(&row)?;
            }
            w.flush()
        }
        SeriesFormat::Json => {
            let text = serde_json::to_string_pretty(&series.json_rows()).expect("series serializes");
            writeln!(sink, "{text}")
        }
    }
}

pub fn emit_series(series: &Series, path: &Path, format: SeriesFormat) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut sink = std::io::BufWriter::new(file);
    write_series(series, &mut sink, format).map_err(|e| io_error(path, e))?;
    std::io::Write::flush(&mut sink).map_err(|e| io_error(path, e))
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json() + "\n").map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kind_is_a_config_error() {
        let err = parse_config(r#"{"spec": {"kind": "hyperbolic"}}"#).unwrap_err();
        match err {
            Error::Config { location, .. } => assert!(location.starts_with("spec"), "{location}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_field_is_located() {
        let err = parse_config(r#"{"spec": {"kind": "geometric", "c": 0.5}}"#).unwrap_err();
        assert!(
            matches!(err, Error::Config { ref location, .. } if location == "spec.c"),
            "{err:?}"
        );
    }

    #[test]
    fn sections_parse() {
        let c = parse_config(r#"{"spec": {"kind": "naturals"}, "analyses": ["zeta", "growth", "zeta"]}"#).unwrap();
        assert_eq!(c.sections().unwrap(), vec![Section::Growth, Section::Zeta]);
        assert!(parse_config(r#"{"spec": {"kind": "naturals"}, "analyses": "some"}"#).is_err());
    }

    #[test]
    fn series_headers_are_stable() {
        assert_eq!(Series::Zeta(vec![]).header(), ["s", "re", "im", "tail_bound"]);
        assert_eq!(Series::Partition(vec![]).header(), ["beta", "Z", "energy"]);
        assert_eq!(Series::Dixmier(vec![]).header(), ["N", "S_N", "cesaro"]);
    }
}
