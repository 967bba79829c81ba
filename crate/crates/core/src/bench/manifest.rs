//! Manifest-driven benchmark runs.
//!
//! A manifest names a plant template, a list of seeds and noise levels,
//! and the identification settings. Each `(seed, noise level)` pair gets
//! its own directory with the ground truth, the data, the identified
//! model and an analysis report. Everything except `run_info.json` is a
//! pure function of the manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::experiment::{markov_from_impulse, output_rms, output_std, run_experiment, Excitation};
use super::plant::{generate_plant, PlantSpec, Stability};
use crate::analysis::{compare_models, log_grid, rank_by_avg_error, AnalysisReport, Real};
use crate::era::{era_realize_with_diagnostics, RankPolicy};
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_json};
use crate::linalg::{eigenvalues, match_eigenvalues};
use crate::lti::{markov_from_model, StateSpaceModel};
use crate::okid::{default_block_rows, default_horizon, okid_era, OkidEraConfig};
use crate::signals::{save_nominal, timeseries_to_csv, NoiseSpec, TimeSeries};

pub const MANIFEST_VERSION: u32 = 1;
/// Name of the only output that is allowed to differ between runs.
pub const RUN_INFO_FILE: &str = "run_info.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantTemplate {
    pub order: usize,
    pub inputs: usize,
    pub outputs: usize,
    #[serde(default = "stable")]
    pub stability: Stability,
    #[serde(default = "one_ten")]
    pub timescale_spread: f64,
    #[serde(default = "one")]
    pub conditioning_target: f64,
}

fn stable() -> Stability {
    Stability::Stable
}
fn one_ten() -> f64 {
    10.0
}
fn one() -> f64 {
    1.0
}
fn noiseless() -> Vec<f64> {
    vec![0.0]
}

impl PlantTemplate {
    pub fn with_seed(&self, seed: u64) -> PlantSpec {
        PlantSpec {
            order: self.order,
            inputs: self.inputs,
            outputs: self.outputs,
            stability: self.stability,
            timescale_spread: self.timescale_spread,
            conditioning_target: self.conditioning_target,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    Impulse,
    #[default]
    Prbs,
    Gaussian,
}

/// Log-spaced frequency grid `lo..=hi` with `n` points, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub version: u32,
    pub plant: PlantTemplate,
    pub seeds: Vec<u64>,
    /// Output noise standard deviation relative to each clean channel's std.
    #[serde(default = "noiseless")]
    pub noise_levels: Vec<f64>,
    #[serde(default)]
    pub excitation: ExcitationKind,
    pub length: usize,
    /// OKID horizon; defaults from the plant order.
    #[serde(default)]
    pub p: Option<usize>,
    /// Hankel block rows; defaults to `2p`.
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub rank: RankPolicy,
    #[serde(default)]
    pub freqs: Option<FreqGrid>,
}

impl BenchManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("manifest lists no seeds".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::Config("manifest lists no noise levels".into()));
        }
        if let Some(v) = self
            .noise_levels
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Config(format!(
                "noise level {v} must be finite and ≥ 0"
            )));
        }
        if self.p == Some(0) || self.s == Some(0) {
            return Err(Error::Config("p and s must be ≥ 1".into()));
        }
        self.rank.validated()?;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.p
            .unwrap_or_else(|| default_horizon(Some(self.plant.order)))
    }

    pub fn block_rows(&self) -> usize {
        self.s.unwrap_or_else(|| default_block_rows(self.horizon()))
    }
}

/// Identification settings and outcome for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDiagnostics {
    /// `"okid_era"` for persistent excitation, `"era"` for impulse data.
    pub method: String,
    pub p: Option<usize>,
    pub s: usize,
    pub r: usize,
    pub residual: Option<f64>,
    pub singular_values: Vec<f64>,
    pub discarded_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: String,
    pub seed: u64,
    pub noise_level: f64,
    /// Set when the run failed; the metrics below are then absent.
    pub error: Option<String>,
    pub identified_order: Option<usize>,
    pub eigen_error: Option<Real>,
    pub unmatched_eigenvalues: Option<usize>,
    /// Relative Frobenius error of `Y_1..Y_2s` against the truth.
    pub markov_error: Option<Real>,
    pub truth_static_condition: Option<Real>,
    pub truth_max_condition: Option<Real>,
    pub identified_max_condition: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweepPoint {
    pub noise_level: f64,
    pub runs: usize,
    pub median_eigen_error: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub version: u32,
    pub runs: Vec<RunSummary>,
    pub noise_sweep: Vec<NoiseSweepPoint>,
}

#[derive(Serialize)]
struct RunInfo {
    tool_version: &'static str,
    started_unix: u64,
    finished_unix: u64,
}

fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

fn excitation(kind: ExcitationKind, seed: u64) -> Excitation {
    let s = derive_seed(seed, 1);
    match kind {
        ExcitationKind::Impulse => Excitation::Impulse,
        ExcitationKind::Prbs => Excitation::Prbs { seed: s },
        ExcitationKind::Gaussian => Excitation::Gaussian { seed: s },
    }
}

fn run_dir_name(seed: u64, noise_index: usize, levels: usize) -> String {
    if levels == 1 {
        format!("seed{seed}")
    } else {
        format!("seed{seed}_noise{noise_index}")
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn identify(
    manifest: &BenchManifest,
    data: &[TimeSeries],
) -> Result<(StateSpaceModel, crate::lti::MarkovSequence, RunDiagnostics)> {
    let s = manifest.block_rows();
    if manifest.excitation == ExcitationKind::Impulse {
        let markov = markov_from_impulse(data, 2 * s + 2)?;
        let (model, era) = era_realize_with_diagnostics(&markov, Some(s), manifest.rank)?;
        let diag = RunDiagnostics {
            method: "era".into(),
            p: None,
            s,
            r: era.rank,
            residual: None,
            singular_values: era.singular_values,
            discarded_energy: era.discarded_energy,
        };
        Ok((model, markov, diag))
    } else {
        let p = manifest.horizon();
        let id = okid_era(&data[0], &OkidEraConfig::new(p, Some(s), manifest.rank))?;
        let diag = RunDiagnostics {
            method: "okid_era".into(),
            p: Some(p),
            s,
            r: id.diagnostics.r,
            residual: Some(id.diagnostics.residual),
            singular_values: id.diagnostics.singular_values,
            discarded_energy: id.diagnostics.discarded_energy,
        };
        Ok((id.model, id.markov, diag))
    }
}

fn run_one(
    manifest: &BenchManifest,
    seed: u64,
    noise_index: usize,
    dir: &Path,
    summary: &mut RunSummary,
) -> Result<()> {
    let level = manifest.noise_levels[noise_index];
    let plant = generate_plant(&manifest.plant.with_seed(seed))?;
    let truth = &plant.model;
    let q = truth.n_outputs();
    let exc = excitation(manifest.excitation, seed);
    let clean = run_experiment(truth, &exc, manifest.length, &NoiseSpec::none(q))?;

    let clean_std = output_std(&clean[0]);
    let noise = NoiseSpec::gaussian(
        clean_std.iter().map(|s| s * level).collect(),
        derive_seed(seed, 2 + noise_index as u64),
    )?;
    let noisy = run_experiment(truth, &exc, manifest.length, &noise)?;
    let nominal: Vec<f64> = output_rms(&clean[0])
        .into_iter()
        .map(|v| if v > 0.0 { v } else { 1.0 })
        .collect();
    let reference = noisy[0].clone().with_nominal(nominal)?;

    write_json(&dir.join("plant.json"), truth)?;
    for (j, ts) in noisy.iter().enumerate() {
        let name = if noisy.len() == 1 {
            "data.csv".to_string()
        } else {
            format!("data_{}.csv", j + 1)
        };
        write_atomic(&dir.join(name), timeseries_to_csv(ts).as_bytes())?;
    }
    save_nominal(&reference, &dir.join("data.nominal.json"))?;

    let (model, markov, diag) = identify(manifest, &noisy)?;
    write_json(&dir.join("model.json"), &model)?;
    write_json(&dir.join("diagnostics.json"), &diag)?;

    let grid = match manifest.freqs {
        Some(g) => Some(log_grid(g.lo, g.hi, g.n)?),
        None => None,
    };
    let models = vec![
        ("truth".to_string(), truth.clone()),
        ("identified".to_string(), model.clone()),
    ];
    let reports = compare_models(&models, &reference, "data.csv", grid.as_deref())?;
    let report = AnalysisReport {
        version: 1,
        data_id: "data.csv".into(),
        ranking: rank_by_avg_error(&reports),
        reports,
    };
    write_json(&dir.join("report.json"), &report)?;

    let matched = match_eigenvalues(&plant.poles, &eigenvalues(model.a()));
    let s = diag.s;
    let truth_markov = markov_from_model(truth, 2 * s + 1)?;
    summary.identified_order = Some(diag.r);
    summary.eigen_error = Some(Real(matched.max_error));
    summary.unmatched_eigenvalues = Some(matched.unmatched);
    summary.markov_error = Some(Real(markov.relative_error(&truth_markov, 1..2 * s + 1)));
    summary.truth_static_condition = Some(Real(plant.static_condition));
    summary.truth_max_condition = Some(Real(report.reports[0].max_condition()));
    summary.identified_max_condition = Some(Real(report.reports[1].max_condition()));
    Ok(())
}

/// Runs every `(seed, noise level)` pair of `manifest` into `out_dir`.
///
/// A failing run is recorded in the summary with its error and does not
/// stop the others; manifest and I/O errors abort.
pub fn run_manifest(manifest: &BenchManifest, out_dir: &Path) -> Result<BenchSummary> {
    manifest.validate()?;
    let started = unix_now();
    write_json(&out_dir.join("manifest.json"), manifest)?;
    let levels = manifest.noise_levels.len();
    let mut runs = Vec::new();
    for &seed in &manifest.seeds {
        for i in 0..levels {
            let name = run_dir_name(seed, i, levels);
            let dir: PathBuf = out_dir.join(&name);
            let mut summary = RunSummary {
                run: name,
                seed,
                noise_level: manifest.noise_levels[i],
                error: None,
                identified_order: None,
                eigen_error: None,
                unmatched_eigenvalues: None,
                markov_error: None,
                truth_static_condition: None,
                truth_max_condition: None,
                identified_max_condition: None,
            };
            match run_one(manifest, seed, i, &dir, &mut summary) {
                Ok(()) => {}
                Err(e @ Error::Io { .. }) => return Err(e),
                Err(e) => summary.error = Some(format!("{}: {e}", e.kind())),
            }
            runs.push(summary);
        }
    }
    let noise_sweep = manifest
        .noise_levels
        .iter()
        .map(|&level| {
            let mut errs: Vec<f64> = runs
                .iter()
                .filter(|r| r.noise_level == level)
                .filter_map(|r| r.eigen_error.map(|e| e.0))
                .collect();
            NoiseSweepPoint {
                noise_level: level,
                runs: errs.len(),
                median_eigen_error: median(&mut errs).map(Real),
            }
        })
        .collect();
    let summary = BenchSummary {
        version: MANIFEST_VERSION,
        runs,
        noise_sweep,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_json(
        &out_dir.join(RUN_INFO_FILE),
        &RunInfo {
            tool_version: env!("CARGO_PKG_VERSION"),
            started_unix: started,
            finished_unix: unix_now(),
        },
    )?;
    Ok(summary)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
