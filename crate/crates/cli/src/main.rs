use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use specweight_core::dixmier::{estimate_trace, DixmierOptions};
use specweight_core::hypertrace::check_hypotheses;
use specweight_core::report::{
    emit_series, parse_config, run_analyze, write_report, write_series, Series, SeriesFormat,
};
use specweight_core::tauberian::{default_beta_grid, default_x_grid, partition_scan, tauber_check};
use specweight_core::zeta::zeta_eval;
use specweight_core::{generate, AnalysisConfig, Complex64, DistinctSpectrum, GeneratorSpec, Schedule};

#[derive(Parser)]
#[command(
    name = "specweight",
    version,
    about = "Spectral weights from eigenvalue/multiplicity data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled analysis and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Dixmier partial sums along a schedule.
    Dixmier(DixmierArgs),
    /// Zeta function values along a real s grid.
    Zeta(ZetaArgs),
    /// Partition function scan and Tauberian check.
    Tauber(TauberArgs),
    /// Check the spectral hypotheses on a block prefix.
    Hypertrace(HypertraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for SeriesFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => SeriesFormat::Csv,
            Format::Json => SeriesFormat::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Generator spec: a file path or inline JSON.
    #[arg(long)]
    spec: String,
    /// Output path; series and reports go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Generator spec: a file path or inline JSON.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    spec: Option<String>,
    /// Full analysis config: a file path or inline JSON.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    s_grid: Option<String>,
    #[arg(long)]
    beta_grid: Option<String>,
    /// Blocks for the hypothesis checks.
    #[arg(long)]
    blocks: Option<u64>,
}

#[derive(Args)]
struct DixmierArgs {
    #[command(flatten)]
    common: Common,
    /// `default`, `blocks:FIRST:LAST`, a comma list of N, or schedule JSON.
    #[arg(long, default_value = "default")]
    schedule: String,
}

#[derive(Args)]
struct ZetaArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list or `start:stop:step`.
    #[arg(long, default_value = "1.1:2.0:0.1")]
    s_grid: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct TauberArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list or `start:stop:step`.
    #[arg(long)]
    beta_grid: Option<String>,
}

#[derive(Args)]
struct HypertraceArgs {
    /// Generator spec: a file path or inline JSON.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    blocks: u64,
}

fn read_json_arg(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

/// Parses a generator spec through the config parser so errors carry a location.
fn parse_spec(arg: &str) -> Result<GeneratorSpec> {
    let text = read_json_arg(arg)?;
    Ok(parse_config(&format!("{{\"spec\": {text}}}"))?.spec)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [start, stop, step] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (start, stop, step) = (start?, stop?, step?);
        if step.is_nan() || step <= 0.0 || stop < start {
            bail!("grid {text:?}: need start <= stop and step > 0");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // strip accumulated binary noise so 1.1:2.0:0.1 yields 1.2, not 1.2000000000000002
        return Ok((0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("grid value {p:?}")))
        .collect()
}

fn parse_schedule(text: &str) -> Result<Schedule> {
    let t = text.trim();
    if t == "default" {
        return Ok(Schedule::Default);
    }
    if t.starts_with('{') {
        return Ok(serde_json::from_str(t)?);
    }
    if let Some(rest) = t.strip_prefix("blocks:") {
        let (first, last) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("expected blocks:FIRST:LAST"))?;
        return Ok(Schedule::BlockEnds {
            first: first.parse()?,
            last: last.parse()?,
        });
    }
    let n = t
        .split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("schedule value {p:?}")))
        .collect::<Result<_>>()?;
    Ok(Schedule::Points { n })
}

fn emit(series: Series, common: &Common) -> Result<()> {
    match &common.out {
        Some(path) => emit_series(&series, path, common.format.into())?,
        None => write_series(&series, std::io::stdout().lock(), common.format.into())?,
    }
    Ok(())
}

fn spectrum(common: &Common) -> Result<DistinctSpectrum> {
    Ok(generate(&parse_spec(&common.spec)?)?)
}

fn analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let mut config = match (&args.config, &args.spec) {
        (Some(c), _) => parse_config(&read_json_arg(c)?)?,
        (None, Some(s)) => AnalysisConfig::new(parse_spec(s)?),
        (None, None) => bail!("either --spec or --config is required"),
    };
    if let Some(s) = &args.schedule {
        config.dixmier.schedule = Some(parse_schedule(s)?);
    }
    if let Some(g) = &args.s_grid {
        config.zeta.s_grid = parse_grid(g)?;
    }
    if let Some(g) = &args.beta_grid {
        config.tauber.beta_grid = parse_grid(g)?;
    }
    if let Some(k) = args.blocks {
        config.blocks.hypertrace = k;
    }
    let report = run_analyze(&config)?;
    match &args.out {
        Some(path) => write_report(&report, path)?,
        None => println!("{}", report.to_json()),
    }
    let failed = report.failed_sections();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (section, err) in &report.errors {
            eprintln!("section {} failed: {}", section.name(), err.message);
        }
        Ok(ExitCode::from(2))
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(args) => return analyze(&args),
        Command::Dixmier(args) => {
            let spec = spectrum(&args.common)?;
            let est = estimate_trace(&spec, &parse_schedule(&args.schedule)?, &DixmierOptions::default())?;
            eprintln!("dixmier estimate {} ({:?})", est.value, est.verdict);
            emit(Series::Dixmier(est.samples), &args.common)?;
        }
        Command::Zeta(args) => {
            let spec = spectrum(&args.common)?;
            let values = parse_grid(&args.s_grid)?
                .into_iter()
                .map(|s| zeta_eval(&spec, Complex64::new(s, 0.0), args.tol))
                .collect::<Result<Vec<_>, _>>()?;
            emit(Series::Zeta(values), &args.common)?;
        }
        Command::Tauber(args) => {
            let spec = spectrum(&args.common)?;
            let betas = match &args.beta_grid {
                Some(g) => parse_grid(g)?,
                None => default_beta_grid(),
            };
            let samples = partition_scan(&spec, &betas, 1e-10)?;
            match tauber_check(&spec, &default_x_grid(), &betas) {
                Ok(r) => eprintln!(
                    "rv index {:.5} (r^2 {:.6}), max Tauberian deviation {:.3e}",
                    r.gamma_hat, r.r_squared, r.tauber_max_deviation
                ),
                Err(e) => eprintln!("tauberian check: {e}"),
            }
            emit(Series::Partition(samples), &args.common)?;
        }
        Command::Hypertrace(args) => {
            let spec = generate(&parse_spec(&args.spec)?)?;
            let text = serde_json::to_string_pretty(&check_hypotheses(&spec, args.blocks)?)?;
            match &args.out {
                Some(path) => {
                    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
                }
                None => println!("{text}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SPECWEIGHT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: SPECWEIGHT_THREADS ignored: {e}");
        }
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
