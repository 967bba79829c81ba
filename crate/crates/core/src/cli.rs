//! Command-line front end.
//!
//! ```text
//! okid-era [--config run.toml] identify --data F --p INT --s INT --rank POLICY --out M.json
//! okid-era [--config run.toml] analyze  --models M1.json,M2.json --reference F --freqs lo:hi:n --out report.json
//! okid-era [--config run.toml] simulate --model M.json --input F --out Y.csv
//! okid-era [--config run.toml] bench    --manifest MF.json --out DIR
//! ```
//!
//! Settings may come from a TOML file with one table per command; flags
//! override file values. Relative paths in the file are resolved against
//! the file's directory.
//!
//! | exit code | meaning |
//! |-----------|---------|
//! | 0 | success |
//! | 2 | file system error (missing or unwritable file) |
//! | 3 | malformed input (CSV, JSON) |
//! | 4 | numerical failure (rank, stability, frequency range, divergence) |
//! | 5 | invalid configuration, arguments or dimensions |
//!
//! Failures print one JSON object `{"error": {"kind", "message", "exit_code"}}`
//! on stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    compare_models, log_grid, rank_by_avg_error, reports_to_csv, AnalysisReport,
};
use crate::bench::{run_manifest, BenchManifest};
use crate::era::RankPolicy;
use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json};
use crate::lti::{simulate_from_rest, StateSpaceModel};
use crate::okid::{default_horizon, okid_era, OkidEraConfig};
use crate::signals::{load_nominal, load_timeseries, timeseries_to_csv, ChannelSpec, TimeSeries};

/// Config-file format version; must equal the tool's major version.
pub const CONFIG_VERSION: u32 = 1;
/// Version tag written into analysis reports.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "okid-era",
    version,
    about = "OKID-ERA system identification toolkit"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Identify a state-space model from input/output data.
    Identify(IdentifyArgs),
    /// Score models against a reference trajectory.
    Analyze(AnalyzeArgs),
    /// Simulate a model from rest on the inputs of a CSV file.
    Simulate(SimulateArgs),
    /// Run a benchmark manifest into an output directory.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyArgs {
    /// Input/output CSV (`t,u:<name>...,y:<name>...`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Observer Markov horizon p.
    #[arg(long)]
    pub p: Option<usize>,
    /// Hankel block rows s (default 2p).
    #[arg(long)]
    pub s: Option<usize>,
    /// Rank policy: `r=N`, `energy=τ` or `gap`.
    #[arg(long)]
    pub rank: Option<RankPolicy>,
    /// Expected order, used for the default p = max(10, 5n).
    #[arg(long)]
    pub order_hint: Option<usize>,
    /// Comma-separated input channel names (default: all `u:` columns).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub inputs: Vec<String>,
    /// Comma-separated output channel names (default: all `y:` columns).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub outputs: Vec<String>,
    /// Drop the first p equations (no zero-padding of the regressor).
    #[arg(long)]
    #[serde(default)]
    pub discard_initial: bool,
    /// Model JSON path; diagnostics go to `<stem>.diagnostics.json` beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    /// Comma-separated model JSON files.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub models: Vec<PathBuf>,
    /// Reference CSV.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Nominal-value JSON (default: `<reference stem>.nominal.json`).
    #[arg(long)]
    pub nominal: Option<PathBuf>,
    /// Frequency grid `lo:hi:n` in rad/s (default: 200 points up to Nyquist).
    #[arg(long)]
    pub freqs: Option<String>,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional long-format CSV export of the reports.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV whose `u:` columns drive the model.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parsed TOML run configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub identify: IdentifyArgs,
    #[serde(default)]
    pub analyze: AnalyzeArgs,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub bench: BenchArgs,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "{}: config version {} does not match tool version {CONFIG_VERSION}",
                path.display(),
                cfg.version
            )));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut self.identify.data);
        fix(&mut self.identify.out);
        for m in &mut self.analyze.models {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        fix(&mut self.analyze.reference);
        fix(&mut self.analyze.nominal);
        fix(&mut self.analyze.out);
        fix(&mut self.analyze.csv);
        fix(&mut self.simulate.model);
        fix(&mut self.simulate.input);
        fix(&mut self.simulate.out);
        fix(&mut self.bench.manifest);
        fix(&mut self.bench.out);
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required setting `--{flag}`")))
}

fn or_list<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl IdentifyArgs {
    fn merged(self, file: IdentifyArgs) -> Self {
        Self {
            data: self.data.or(file.data),
            p: self.p.or(file.p),
            s: self.s.or(file.s),
            rank: self.rank.or(file.rank),
            order_hint: self.order_hint.or(file.order_hint),
            inputs: or_list(self.inputs, file.inputs),
            outputs: or_list(self.outputs, file.outputs),
            discard_initial: self.discard_initial || file.discard_initial,
            out: self.out.or(file.out),
        }
    }
}

impl AnalyzeArgs {
    fn merged(self, file: AnalyzeArgs) -> Self {
        Self {
            models: or_list(self.models, file.models),
            reference: self.reference.or(file.reference),
            nominal: self.nominal.or(file.nominal),
            freqs: self.freqs.or(file.freqs),
            out: self.out.or(file.out),
            csv: self.csv.or(file.csv),
        }
    }
}

impl SimulateArgs {
    fn merged(self, file: SimulateArgs) -> Self {
        Self {
            model: self.model.or(file.model),
            input: self.input.or(file.input),
            out: self.out.or(file.out),
        }
    }
}

impl BenchArgs {
    fn merged(self, file: BenchArgs) -> Self {
        Self {
            manifest: self.manifest.or(file.manifest),
            out: self.out.or(file.out),
        }
    }
}

/// Sibling path with `.json` replaced by `.<suffix>.json`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.json"))
}

/// Parses a `lo:hi:n` frequency grid.
pub fn parse_freqs(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::Config(format!("frequency grid `{spec}` must be `lo:hi:n`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    log_grid(lo, hi, n)
}

#[derive(Serialize)]
struct IdentifyDiagnostics<'a> {
    data: String,
    #[serde(flatten)]
    diagnostics: &'a crate::okid::Diagnostics,
}

pub fn cmd_identify(args: IdentifyArgs) -> Result<StateSpaceModel> {
    let data_path = require(args.data, "data")?;
    let out = require(args.out, "out")?;
    let spec = ChannelSpec {
        inputs: args.inputs,
        outputs: args.outputs,
    };
    let data = load_timeseries(&data_path, &spec)?;
    let p = args.p.unwrap_or_else(|| default_horizon(args.order_hint));
    let mut config = OkidEraConfig::new(p, args.s, args.rank.unwrap_or_default());
    config.discard_initial = args.discard_initial;
    let id = okid_era(&data, &config)?;
    write_json(&out, &id.model)?;
    write_json(
        &sidecar(&out, "diagnostics"),
        &IdentifyDiagnostics {
            data: file_label(&data_path),
            diagnostics: &id.diagnostics,
        },
    )?;
    Ok(id.model)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn model_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_analyze(args: AnalyzeArgs) -> Result<AnalysisReport> {
    if args.models.is_empty() {
        return Err(Error::Config("missing required setting `--models`".into()));
    }
    let reference_path = require(args.reference, "reference")?;
    let out = require(args.out, "out")?;
    let freqs = args.freqs.as_deref().map(parse_freqs).transpose()?;

    let reference = load_timeseries(&reference_path, &ChannelSpec::all())?;
    let nominal_path = args
        .nominal
        .unwrap_or_else(|| sidecar(&reference_path.with_extension("json"), "nominal"));
    let reference = load_nominal(&nominal_path, reference)?;

    let mut models = Vec::with_capacity(args.models.len());
    for path in &args.models {
        let model: StateSpaceModel = read_json(path)?;
        let mut id = model_id(path);
        if models
            .iter()
            .any(|(existing, _): &(String, _)| *existing == id)
        {
            id = path.display().to_string();
        }
        models.push((id, model));
    }
    let data_id = file_label(&reference_path);
    let reports = compare_models(&models, &reference, &data_id, freqs.as_deref())?;
    let report = AnalysisReport {
        version: REPORT_VERSION,
        data_id,
        ranking: rank_by_avg_error(&reports),
        reports,
    };
    write_json(&out, &report)?;
    if let Some(csv) = args.csv {
        write_atomic(&csv, reports_to_csv(&report.reports).as_bytes())?;
    }
    Ok(report)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<TimeSeries> {
    let model_path = require(args.model, "model")?;
    let input_path = require(args.input, "input")?;
    let out = require(args.out, "out")?;
    let model: StateSpaceModel = read_json(&model_path)?;
    let spec = ChannelSpec {
        inputs: model
            .input_names()
            .map(<[String]>::to_vec)
            .unwrap_or_default(),
        outputs: Vec::new(),
    };
    let input = load_timeseries(&input_path, &spec)?;
    if input.n_inputs() != model.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} inputs, {} has {} `u:` columns",
            model.n_inputs(),
            input_path.display(),
            input.n_inputs()
        )));
    }
    let y = simulate_from_rest(&model, input.inputs())?;
    let output_names = model
        .output_names()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (1..=model.n_outputs()).map(|i| format!("y{i}")).collect());
    let ts = TimeSeries::new(input.sample_period(), input.inputs().clone(), y)?
        .with_names(input.input_names().to_vec(), output_names)?
        .with_start_time(input.start_time());
    write_atomic(&out, timeseries_to_csv(&ts).as_bytes())?;
    Ok(ts)
}

pub fn cmd_bench(args: BenchArgs) -> Result<crate::bench::BenchSummary> {
    let manifest_path = require(args.manifest, "manifest")?;
    let out = require(args.out, "out")?;
    let manifest: BenchManifest = read_json(&manifest_path)?;
    run_manifest(&manifest, &out)
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig {
            version: CONFIG_VERSION,
            ..RunConfig::default()
        },
    };
    match cli.command {
        Command::Identify(a) => cmd_identify(a.merged(file.identify)).map(|_| ()),
        Command::Analyze(a) => cmd_analyze(a.merged(file.analyze)).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(a.merged(file.simulate)).map(|_| ()),
        Command::Bench(a) => cmd_bench(a.merged(file.bench)).map(|_| ()),
    }
}

/// Structured error document printed on stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        }
    })
    .to_string()
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                Error::Config(String::new()).exit_code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(err)) => {
            eprintln!("{}", error_json(&err));
            err.exit_code()
        }
        Err(_) => {
            let err = Error::Numerical("internal error".into());
            eprintln!("{}", error_json(&err));
            err.exit_code()
        }
    }
}
