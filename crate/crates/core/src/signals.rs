//! Sampled multichannel signals: the [`TimeSeries`] data model, CSV
//! ingestion, impulse experiments and output-noise injection.
//!
//! CSV layout: a mandatory header whose first column is `t` (seconds),
//! followed by input columns prefixed `u:` and output columns prefixed `y:`.
//! Every channel must live on one uniform time grid; missing values are
//! rejected. Nominal output values come from a JSON sidecar of the form
//! `{"nominal": {"y:<name>": <real>, ...}}`.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json};

/// Relative tolerance on sample spacing accepted at ingestion.
pub const SAMPLING_TOLERANCE: f64 = 1e-9;

/// Uniformly sampled input/output record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_period: f64,
    start_time: f64,
    inputs: DMatrix<f64>,
    outputs: DMatrix<f64>,
    input_names: Vec<String>,
    output_names: Vec<String>,
    nominal_values: Option<Vec<f64>>,
}

impl TimeSeries {
    /// Builds a series with default channel names `u1..`, `y1..`.
    pub fn new(sample_period: f64, inputs: DMatrix<f64>, outputs: DMatrix<f64>) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if inputs.nrows() != outputs.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "inputs have {} samples, outputs {}",
                inputs.nrows(),
                outputs.nrows()
            )));
        }
        let input_names = (1..=inputs.ncols()).map(|i| format!("u{i}")).collect();
        let output_names = (1..=outputs.ncols()).map(|i| format!("y{i}")).collect();
        Ok(Self {
            sample_period,
            start_time: 0.0,
            inputs,
            outputs,
            input_names,
            output_names,
            nominal_values: None,
        })
    }

    pub fn with_names(mut self, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        if inputs.len() != self.inputs.ncols() || outputs.len() != self.outputs.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} input / {} output names for {}×{} channels",
                inputs.len(),
                outputs.len(),
                self.inputs.ncols(),
                self.outputs.ncols()
            )));
        }
        self.input_names = inputs;
        self.output_names = outputs;
        Ok(self)
    }

    pub fn with_start_time(mut self, t0: f64) -> Self {
        self.start_time = t0;
        self
    }

    /// Attaches per-output nominal values. Zero entries are allowed here;
    /// they are rejected only where relative errors are requested.
    pub fn with_nominal(mut self, nominal: Vec<f64>) -> Result<Self> {
        if nominal.len() != self.outputs.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} nominal values for {} outputs",
                nominal.len(),
                self.outputs.ncols()
            )));
        }
        self.nominal_values = Some(nominal);
        Ok(self)
    }

    /// Replaces the outputs, keeping names when the channel count matches.
    pub fn with_outputs(mut self, outputs: DMatrix<f64>) -> Result<Self> {
        if outputs.nrows() != self.inputs.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "outputs have {} samples, inputs {}",
                outputs.nrows(),
                self.inputs.nrows()
            )));
        }
        if outputs.ncols() != self.outputs.ncols() {
            self.output_names = (1..=outputs.ncols()).map(|i| format!("y{i}")).collect();
            self.nominal_values = None;
        }
        self.outputs = outputs;
        Ok(self)
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn nominal_values(&self) -> Option<&[f64]> {
        self.nominal_values.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 * self.sample_period
    }
}

/// Which channels to pull out of a CSV file. Empty lists select every
/// column with the matching prefix, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl ChannelSpec {
    pub fn all() -> Self {
        Self::default()
    }
}

fn strip_prefix<'a>(column: &'a str, prefix: &str) -> Option<&'a str> {
    column.strip_prefix(prefix)
}

/// Reads a CSV time series, selecting channels per `spec`.
pub fn load_timeseries(path: &Path, spec: &ChannelSpec) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timeseries(&text, path, spec)
}

fn parse_timeseries(text: &str, path: &Path, spec: &ChannelSpec) -> Result<TimeSeries> {
    let p = || path.to_path_buf();
    if text.trim().is_empty() {
        return Err(Error::EmptyFile { path: p() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: p(),
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::MissingChannel {
            path: p(),
            column: "t".into(),
        });
    }

    let select = |prefix: &str, wanted: &[String]| -> Result<Vec<(usize, String)>> {
        if wanted.is_empty() {
            return Ok(header
                .iter()
                .enumerate()
                .filter_map(|(i, h)| strip_prefix(h, prefix).map(|n| (i, n.to_owned())))
                .collect());
        }
        wanted
            .iter()
            .map(|name| {
                let column = format!("{prefix}{name}");
                header
                    .iter()
                    .position(|h| *h == column)
                    .map(|i| (i, name.clone()))
                    .ok_or_else(|| Error::MissingChannel { path: p(), column })
            })
            .collect()
    };
    let in_cols = select("u:", &spec.inputs)?;
    let out_cols = select("y:", &spec.outputs)?;

    let mut times = Vec::new();
    let mut u_rows: Vec<f64> = Vec::new();
    let mut y_rows: Vec<f64> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = idx + 2;
        let record = record.map_err(|e| Error::Parse {
            path: p(),
            row: line,
            message: e.to_string(),
        })?;
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            if raw.is_empty() {
                return Err(Error::MissingValue {
                    path: p(),
                    row: line,
                    column: header[col].clone(),
                });
            }
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                path: p(),
                row: line,
                message: format!("`{raw}` in column `{}` is not a number", header[col]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::MissingValue {
                    path: p(),
                    row: line,
                    column: header[col].clone(),
                })
            }
        };
        times.push(field(0)?);
        for &(c, _) in &in_cols {
            u_rows.push(field(c)?);
        }
        for &(c, _) in &out_cols {
            y_rows.push(field(c)?);
        }
    }

    let n = times.len();
    if n == 0 {
        return Err(Error::EmptyFile { path: p() });
    }
    if n < 2 {
        return Err(Error::Parse {
            path: p(),
            row: 2,
            message: "at least two samples are needed to fix the sample period".into(),
        });
    }
    let t0 = times[0];
    let dt = (times[n - 1] - t0) / (n - 1) as f64;
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if !(dt > 0.0) || (t - expected).abs() > SAMPLING_TOLERANCE * dt.abs() {
            return Err(Error::NonUniformSampling {
                path: p(),
                row: k + 2,
                time: t,
                expected,
            });
        }
    }

    let inputs = DMatrix::from_row_slice(n, in_cols.len(), &u_rows);
    let outputs = DMatrix::from_row_slice(n, out_cols.len(), &y_rows);
    TimeSeries::new(dt, inputs, outputs)?
        .with_names(
            in_cols.into_iter().map(|(_, n)| n).collect(),
            out_cols.into_iter().map(|(_, n)| n).collect(),
        )
        .map(|ts| ts.with_start_time(t0))
}

/// Shortest round-trip text; exponent form for very small or large magnitudes.
fn push_number(out: &mut String, v: f64) {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        let _ = write!(out, "{v:e}");
    } else {
        let _ = write!(out, "{v}");
    }
}

/// CSV text for a series. Values use the shortest round-trip formatting,
/// so `load(save(ts))` reproduces the matrices bit for bit.
pub fn timeseries_to_csv(ts: &TimeSeries) -> String {
    let mut out = String::from("t");
    for name in ts.input_names() {
        let _ = write!(out, ",u:{name}");
    }
    for name in ts.output_names() {
        let _ = write!(out, ",y:{name}");
    }
    out.push('\n');
    for k in 0..ts.len() {
        push_number(&mut out, ts.time(k));
        for &v in ts.inputs().row(k).iter().chain(ts.outputs().row(k).iter()) {
            out.push(',');
            push_number(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn save_timeseries(ts: &TimeSeries, path: &Path) -> Result<()> {
    write_atomic(path, timeseries_to_csv(ts).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NominalFile {
    nominal: IndexMap<String, f64>,
}

/// Reads a nominal-value sidecar and attaches it to `ts`.
pub fn load_nominal(path: &Path, ts: TimeSeries) -> Result<TimeSeries> {
    let file: NominalFile = read_json(path)?;
    let values = ts
        .output_names()
        .iter()
        .map(|name| {
            let key = format!("y:{name}");
            file.nominal
                .get(&key)
                .copied()
                .ok_or_else(|| Error::MissingChannel {
                    path: path.to_path_buf(),
                    column: key,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    ts.with_nominal(values)
}

pub fn save_nominal(ts: &TimeSeries, path: &Path) -> Result<()> {
    let values = ts
        .nominal_values()
        .ok_or_else(|| Error::InvalidParameter("series has no nominal values".into()))?;
    let nominal = ts
        .output_names()
        .iter()
        .zip(values)
        .map(|(n, &v)| (format!("y:{n}"), v))
        .collect();
    write_json(path, &NominalFile { nominal })
}

/// One single-channel impulse experiment per input: experiment `j` applies
/// the `j`-th column of the identity at `k = 0` and zero afterwards.
/// Outputs are zero-width, to be filled in by simulation.
pub fn make_impulse(m: usize, length: usize, dt: f64) -> Result<Vec<TimeSeries>> {
    if m < 1 || length < 2 {
        return Err(Error::BadDimension(format!(
            "impulse needs m ≥ 1 and length ≥ 2, got m = {m}, length = {length}"
        )));
    }
    (0..m)
        .map(|j| {
            let mut u = DMatrix::zeros(length, m);
            u[(0, j)] = 1.0;
            TimeSeries::new(dt, u, DMatrix::zeros(length, 0))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    Gaussian,
}

/// Sensor-noise model applied to outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    /// Standard deviation per output channel.
    pub std: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(std: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: NoiseKind::Gaussian,
            std,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none(q: usize) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            std: vec![0.0; q],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.std.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            Some(s) => Err(Error::InvalidParameter(format!(
                "noise standard deviation must be finite and ≥ 0, got {s}"
            ))),
            None => Ok(()),
        }
    }
}

/// Adds i.i.d. noise to the outputs. Inputs are untouched; channels with
/// σ = 0 are copied exactly.
pub fn add_noise(ts: &TimeSeries, spec: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    if spec.std.len() != ts.n_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "noise spec has {} channels, series has {} outputs",
            spec.std.len(),
            ts.n_outputs()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut outputs = ts.outputs().clone();
    for k in 0..outputs.nrows() {
        for (j, &sigma) in spec.std.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            if sigma > 0.0 {
                outputs[(k, j)] += sigma * z;
            }
        }
    }
    let mut noisy = ts.clone();
    noisy.outputs = outputs;
    Ok(noisy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<TimeSeries> {
        parse_timeseries(text, Path::new("mem.csv"), &ChannelSpec::all())
    }

    #[test]
    fn minimal_file() {
        let ts = parse("t,u:a,y:b\n0,1,0\n1,0,1\n2,0,0.5\n").unwrap();
        assert_eq!((ts.len(), ts.n_inputs(), ts.n_outputs()), (3, 1, 1));
        assert_eq!(ts.sample_period(), 1.0);
        assert_eq!(ts.input_names(), ["a"]);
        assert_eq!(ts.outputs()[(2, 0)], 0.5);
    }

    #[test]
    fn non_uniform_time_column() {
        let err = parse("t,u:a,y:b\n0,1,0\n1,0,1\n2.5,0,0.5\n").unwrap_err();
        match err {
            Error::NonUniformSampling { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_and_header_only() {
        assert!(matches!(parse(""), Err(Error::EmptyFile { .. })));
        assert!(matches!(parse("t,u:a,y:b\n"), Err(Error::EmptyFile { .. })));
    }

    #[test]
    fn missing_channel_is_named() {
        let spec = ChannelSpec {
            inputs: vec!["a".into()],
            outputs: vec!["zz".into()],
        };
        let err =
            parse_timeseries("t,u:a,y:b\n0,1,0\n1,0,1\n", Path::new("f.csv"), &spec).unwrap_err();
        match err {
            Error::MissingChannel { column, .. } => assert_eq!(column, "y:zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_value_rejected() {
        let err = parse("t,u:a,y:b\n0,1,0\n1,,1\n").unwrap_err();
        match err {
            Error::MissingValue { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "u:a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let err = parse("t,u:a,y:b\n0,1,0\n1,x,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }));
        let err = parse("t,u:a,y:b\n0,1,0\n1,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn impulse_shapes() {
        let e = make_impulse(1, 3, 1.0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].inputs().as_slice(), &[1.0, 0.0, 0.0]);

        let e = make_impulse(2, 2, 1.0).unwrap();
        assert_eq!(
            e[0].inputs(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(
            e[1].inputs(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        );

        let e = make_impulse(3, 100, 0.1).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|x| x.len() == 100 && x.sample_period() == 0.1));
        let nonzero: usize = e
            .iter()
            .map(|x| x.inputs().iter().filter(|v| **v != 0.0).count())
            .sum();
        assert_eq!(nonzero, 3);

        assert!(matches!(
            make_impulse(0, 3, 1.0),
            Err(Error::BadDimension(_))
        ));
        assert!(matches!(
            make_impulse(1, 1, 1.0),
            Err(Error::BadDimension(_))
        ));
    }

    fn ramp(n: usize, q: usize) -> TimeSeries {
        let y = DMatrix::from_fn(n, q, |i, j| (i * (j + 1)) as f64 * 0.01);
        TimeSeries::new(1.0, DMatrix::from_element(n, 1, 1.0), y).unwrap()
    }

    #[test]
    fn zero_noise_is_identity_and_seed_is_deterministic() {
        let ts = ramp(50, 2);
        assert_eq!(add_noise(&ts, &NoiseSpec::none(2)).unwrap(), ts);
        let spec = NoiseSpec::gaussian(vec![0.3, 0.0], 7).unwrap();
        let a = add_noise(&ts, &spec).unwrap();
        let b = add_noise(&ts, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inputs(), ts.inputs());
        assert_eq!(a.outputs().column(1), ts.outputs().column(1));
        assert_ne!(a.outputs().column(0), ts.outputs().column(0));
    }

    #[test]
    fn noise_sample_std_matches() {
        let ts = ramp(100_000, 1);
        let noisy = add_noise(&ts, &NoiseSpec::gaussian(vec![0.1], 11).unwrap()).unwrap();
        let d: Vec<f64> = (noisy.outputs() - ts.outputs()).iter().copied().collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() <= 0.005, "std = {}", var.sqrt());
    }

    #[test]
    fn noise_dimension_and_sign_checks() {
        let ts = ramp(5, 2);
        assert!(matches!(
            add_noise(&ts, &NoiseSpec::none(3)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(NoiseSpec::gaussian(vec![-1.0], 0).is_err());
    }

    #[test]
    fn nominal_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ts = ramp(4, 2).with_nominal(vec![2.0, -3.5]).unwrap();
        let path = dir.path().join("nom.json");
        save_nominal(&ts, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"y:y1\": 2.0"));
        let bare = ramp(4, 2);
        let back = load_nominal(&path, bare).unwrap();
        assert_eq!(back.nominal_values(), Some(&[2.0, -3.5][..]));
    }
}
