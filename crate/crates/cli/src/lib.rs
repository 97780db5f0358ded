//! Argument handling and subcommands for the `butterfly` binary.
//!
//! Settings resolve as command-line flags, then the config file (`--config`
//! or `BUTTERFLY_CONFIG`), then built-in defaults.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use butterfly_core::gaplabel::{self, Verification};
use butterfly_core::render::{self, EpsDocument, Polyline};
use butterfly_core::spectrum::{self, SpectrumCache};
use butterfly_core::{GapLabel, Rational, Wing};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

pub const CONFIG_ENV: &str = "BUTTERFLY_CONFIG";

/// Exit status: success or verification PASS.
pub const EXIT_OK: u8 = 0;
/// Exit status: verification FAIL.
pub const EXIT_FAIL: u8 = 1;
/// Exit status: bad arguments or config.
pub const EXIT_USAGE: u8 = 2;
/// Exit status: computation or I/O failure.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "butterfly", version, about = "Hofstadter butterfly spectra, gap labels and wing figures")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band edges for every rational with denominator <= qmax in the window.
    Spectrum,
    /// One labelled wing.
    Wing(LabelArgs),
    /// All wings with tmin <= t <= tmax, plus their reflections.
    Butterfly,
    /// Compare detected and predicted discontinuities; exit 1 on FAIL.
    Verify,
    /// Butterfly (or one wing) restricted to the window, stretched to full height.
    Zoom(OptionalLabelArgs),
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Inverse slope t (nonzero).
    #[arg(short, long, allow_hyphen_values = true)]
    pub t: i64,
    /// Offset s.
    #[arg(short, long, allow_hyphen_values = true)]
    pub s: i64,
}

#[derive(Debug, Args)]
pub struct OptionalLabelArgs {
    #[arg(short, long, allow_hyphen_values = true, requires = "s")]
    pub t: Option<i64>,
    #[arg(short, long, allow_hyphen_values = true, requires = "t")]
    pub s: Option<i64>,
}

/// Flags that override the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Flat key=value config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long = "qmax", global = true)]
    pub q_max: Option<i64>,
    #[arg(long, global = true)]
    pub tmin: Option<i64>,
    #[arg(long, global = true)]
    pub tmax: Option<i64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Frequency window, e.g. `--window 1/4 1/3`.
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"], value_parser = parse_rational)]
    pub window: Option<Vec<Rational>>,
    /// Skip reflected labels and mirrored curves.
    #[arg(long, global = true)]
    pub no_mirror: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse().map_err(|e: butterfly_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Eps,
    Svg,
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Eps => "eps",
            Format::Svg => "svg",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub q_max: i64,
    pub t_min: i64,
    pub t_max: i64,
    pub lambda: f64,
    pub threshold: f64,
    /// `None` lets each subcommand pick its natural format.
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub window: (Rational, Rational),
    pub mirror: bool,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q_max: 50,
            t_min: 1,
            t_max: 5,
            lambda: spectrum::DEFAULT_LAMBDA,
            threshold: gaplabel::DEFAULT_THRESHOLD,
            format: None,
            out: None,
            window: (Rational::ZERO, Rational::ONE),
            mirror: true,
            jobs: None,
        }
    }
}

/// A problem with the arguments or config; maps to [`EXIT_USAGE`].
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

impl RunConfig {
    /// Applies a config file body on top of `self`. Keys: `qmax`, `tmin`,
    /// `tmax`, `lambda`, `threshold`, `format`, `out`, `window` (`lo hi`),
    /// `no_mirror`, `jobs`. `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), UsageError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| usage(format!("config line {}: {msg}", idx + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
                v.parse().map_err(|_| format!("cannot parse {v:?}"))
            }
            match key {
                "qmax" => self.q_max = num(value).map_err(at)?,
                "tmin" => self.t_min = num(value).map_err(at)?,
                "tmax" => self.t_max = num(value).map_err(at)?,
                "lambda" => self.lambda = num(value).map_err(at)?,
                "threshold" => self.threshold = num(value).map_err(at)?,
                "format" => {
                    self.format =
                        Some(Format::from_str(value, true).map_err(|_| at(format!("unknown format {value:?}")))?)
                }
                "out" => self.out = Some(PathBuf::from(value)),
                "window" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [lo, hi] = parts[..] else {
                        return Err(at("window needs two values".into()));
                    };
                    self.window = (parse_rational(lo).map_err(at)?, parse_rational(hi).map_err(at)?);
                }
                "no_mirror" => self.mirror = !num::<bool>(value).map_err(at)?,
                "jobs" => self.jobs = Some(num(value).map_err(at)?),
                _ => return Err(at(format!("unknown key {key:?}"))),
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.q_max {
            self.q_max = v;
        }
        if let Some(v) = o.tmin {
            self.t_min = v;
        }
        if let Some(v) = o.tmax {
            self.t_max = v;
        }
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
        if let Some(v) = o.threshold {
            self.threshold = v;
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some(w) = &o.window {
            self.window = (w[0], w[1]);
        }
        if o.no_mirror {
            self.mirror = false;
        }
        if o.jobs.is_some() {
            self.jobs = o.jobs;
        }
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.q_max < 1 {
            return Err(usage(format!("qmax must be at least 1, got {}", self.q_max)));
        }
        if self.t_min < 1 || self.t_min > self.t_max {
            return Err(usage(format!("need 1 <= tmin <= tmax, got {}..{}", self.t_min, self.t_max)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(usage(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(usage(format!("threshold must be positive, got {}", self.threshold)));
        }
        if self.window.0 >= self.window.1 {
            return Err(usage(format!("window needs lo < hi, got {} {}", self.window.0, self.window.1)));
        }
        if self.jobs == Some(0) {
            return Err(usage("jobs must be at least 1"));
        }
        Ok(())
    }

    /// Defaults, then the config file, then flags; validated.
    pub fn resolve(o: &Overrides) -> Result<Self, UsageError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &o.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        cfg.apply_overrides(o);
        cfg.validate()?;
        Ok(cfg)
    }

    fn format_for(&self, command: &str, default: Format, allowed: &[Format]) -> Result<Format, UsageError> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(usage(format!("format {f} is not supported by {command}")))
        }
    }

    fn labels(&self) -> Vec<GapLabel> {
        (self.t_min..=self.t_max)
            .flat_map(GapLabel::with_slope)
            .flat_map(|l| if self.mirror { vec![l, l.reflect()] } else { vec![l] })
            .collect()
    }

    fn document(&self, polylines: Vec<Polyline>) -> EpsDocument {
        EpsDocument { x_extent: 2.0 + self.lambda, polylines, ..Default::default() }
    }
}

/// What a finished command reports back to `main`.
#[derive(Debug)]
pub enum Outcome {
    Done,
    Verified(bool),
}

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Runtime(anyhow::Error),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<butterfly_core::Error> for CliError {
    fn from(e: butterfly_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Resolves the config and runs `cli.command` on a pool of `jobs` threads.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .context("cannot start worker pool")?;
    pool.install(|| execute(&cli.command, &cfg))
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cache = SpectrumCache::new();
    match command {
        Command::Spectrum => {
            let format = cfg.format_for("spectrum", Format::Csv, &[Format::Csv, Format::Json])?;
            let thetas = spectrum::farey_enumerate(cfg.q_max, cfg.window.0, cfg.window.1);
            let spectra =
                thetas.par_iter().map(|&t| cache.edges(t, cfg.lambda)).collect::<butterfly_core::Result<Vec<_>>>()?;
            let mut buf = Vec::new();
            if format == Format::Csv {
                spectrum::write_edges_csv(&mut buf, &spectra).context("formatting edges")?;
            } else {
                let rows: Vec<_> = spectra
                    .iter()
                    .map(|s| serde_json::json!({ "theta": s.theta, "lambda": s.lambda, "edges": s.edges() }))
                    .collect();
                buf = to_json(&rows)?;
            }
            write_output(cfg.out.as_deref(), &buf)?;
        }
        Command::Wing(args) => {
            let format = cfg.format_for("wing", Format::Csv, &[Format::Csv, Format::Json, Format::Eps, Format::Svg])?;
            let label = GapLabel::new(args.t, args.s).map_err(|e| usage(e.to_string()))?;
            let wing = gaplabel::build_wing(label, cfg.q_max, cfg.lambda, &cache).map_err(as_usage_if_qmax)?;
            let polylines = || {
                render::wings_to_polylines_with(std::slice::from_ref(&wing), render::DEFAULT_THETA_SCALE, cfg.mirror)
            };
            let buf = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    gaplabel::write_wings_csv(&mut buf, std::slice::from_ref(&wing)).context("formatting wing")?;
                    buf
                }
                Format::Json => to_json(&wing)?,
                f => figure(f, &cfg.document(polylines()))?,
            };
            write_output(cfg.out.as_deref(), &buf)?;
        }
        Command::Butterfly => {
            let format =
                cfg.format_for("butterfly", Format::Eps, &[Format::Eps, Format::Svg, Format::Csv, Format::Json])?;
            let wings = build_wings(&cfg.labels(), cfg, &cache)?;
            let buf = match format {
                Format::Json => to_json(&wings)?,
                f => {
                    let lines = render::wings_to_polylines_with(&wings, render::DEFAULT_THETA_SCALE, cfg.mirror);
                    figure(f, &cfg.document(lines))?
                }
            };
            write_output(cfg.out.as_deref(), &buf)?;
        }
        Command::Zoom(args) => {
            let format = cfg.format_for("zoom", Format::Eps, &[Format::Eps, Format::Svg, Format::Csv])?;
            let labels = match (args.t, args.s) {
                (Some(t), Some(s)) => {
                    let l = GapLabel::new(t, s).map_err(|e| usage(e.to_string()))?;
                    if cfg.mirror {
                        vec![l, l.reflect()]
                    } else {
                        vec![l]
                    }
                }
                _ => cfg.labels(),
            };
            let (lo, hi) = cfg.window;
            let wings: Vec<Wing> = build_wings(&labels, cfg, &cache)?.iter().map(|w| w.clipped(lo, hi)).collect();
            let lines =
                render::window_to_polylines(&wings, render::DEFAULT_THETA_SCALE, lo.to_f64(), hi.to_f64(), cfg.mirror);
            if lines.is_empty() {
                eprintln!("warning: no wing points with denominator <= {} in window [{lo}, {hi}]", cfg.q_max);
            }
            write_output(cfg.out.as_deref(), &figure(format, &cfg.document(lines))?)?;
        }
        Command::Verify => {
            cfg.format_for("verify", Format::Json, &[Format::Json])?;
            let report = gaplabel::verify_labels(cfg.t_min, cfg.t_max, cfg.q_max, cfg.lambda, cfg.threshold, &cache)
                .map_err(as_usage_if_qmax)?;
            write_output(cfg.out.as_deref(), &to_json(&report)?)?;
            summarize(&report);
            return Ok(Outcome::Verified(report.passed));
        }
    }
    Ok(Outcome::Done)
}

// A too-small qmax is a configuration problem, not a numerical failure.
fn as_usage_if_qmax(e: butterfly_core::Error) -> CliError {
    match e {
        butterfly_core::Error::InvalidArgument(msg) if msg.contains("q_max") => CliError::Usage(usage(msg)),
        other => other.into(),
    }
}

fn build_wings(labels: &[GapLabel], cfg: &RunConfig, cache: &SpectrumCache) -> Result<Vec<Wing>, CliError> {
    labels
        .par_iter()
        .map(|&l| gaplabel::build_wing(l, cfg.q_max, cfg.lambda, cache))
        .collect::<butterfly_core::Result<Vec<_>>>()
        .map_err(as_usage_if_qmax)
}

fn figure(format: Format, doc: &EpsDocument) -> Result<Vec<u8>, CliError> {
    Ok(match format {
        Format::Eps => render::emit_eps(doc)?,
        Format::Svg => render::emit_svg(doc)?,
        Format::Csv => render::emit_csv(&doc.polylines)?,
        Format::Json => unreachable!("json figures are handled by the caller"),
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value).context("serializing JSON")?;
    buf.push(b'\n');
    Ok(buf)
}

fn summarize(v: &Verification) {
    let failed: Vec<String> = v.reports.iter().filter(|r| !r.passed()).map(|r| r.label.to_string()).collect();
    if failed.is_empty() {
        eprintln!("PASS: {} labels, q_max = {}, lambda = {}", v.reports.len(), v.q_max, v.lambda);
    } else {
        eprintln!("FAIL: labels {}", failed.join(" "));
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).context("writing to standard output")
        }
    }
}
