//! Per-model quality reports against a reference trajectory.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::frequency::{condition_sweep, default_grid, poles, CondPoint};
use super::metrics::{max_abs_relative_errors, relative_errors};
use super::zeros::transmission_zeros;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::lti::{simulate_from_rest, StateSpaceModel};
use crate::signals::TimeSeries;

/// A real number that survives JSON when non-finite (`"inf"`, `"-inf"`, `"nan"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("unexpected `{other}`"))),
            },
        }
    }
}

fn pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    pub data_id: String,
    pub dt: f64,
    /// Signed time-averaged relative deviation per output channel.
    pub avg_errors: IndexMap<String, Real>,
    /// Signed maximum relative deviation per output channel.
    pub max_errors: IndexMap<String, Real>,
    /// Absolute-value variant of `max_errors`.
    pub max_abs_errors: IndexMap<String, Real>,
    pub poles: Vec<[f64; 2]>,
    pub pole_magnitudes: Vec<f64>,
    pub unstable_count: usize,
    pub marginal_count: usize,
    pub zeros: Vec<[f64; 2]>,
    /// False when the system pencil is degenerate and zeros are undefined.
    pub zeros_defined: bool,
    pub infinite_zero_count: usize,
    pub cond_sweep: Vec<CondPoint>,
}

impl ModelReport {
    /// Mean of `|avg_errors|` over channels.
    pub fn mean_abs_avg_error(&self) -> f64 {
        let n = self.avg_errors.len().max(1) as f64;
        self.avg_errors.values().map(|v| v.0.abs()).sum::<f64>() / n
    }

    pub fn max_condition(&self) -> f64 {
        self.cond_sweep.iter().map(|p| p.cond).fold(0.0, f64::max)
    }
}

/// Analysis of a single model; `freqs` defaults to [`default_grid`].
pub fn model_report(
    model_id: &str,
    model: &StateSpaceModel,
    reference: &TimeSeries,
    data_id: &str,
    freqs: Option<&[f64]>,
) -> Result<ModelReport> {
    if model.n_inputs() != reference.n_inputs() || model.n_outputs() != reference.n_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "model `{model_id}` is {}×{} (q×m), reference data is {}×{}",
            model.n_outputs(),
            model.n_inputs(),
            reference.n_outputs(),
            reference.n_inputs()
        )));
    }
    let nominal = reference
        .nominal_values()
        .ok_or_else(|| Error::Config(format!("reference `{data_id}` has no nominal values")))?;
    let y_lin = simulate_from_rest(model, reference.inputs())?;
    let rel = relative_errors(&y_lin, reference.outputs(), nominal)?;
    let abs = max_abs_relative_errors(&y_lin, reference.outputs(), nominal)?;
    let keyed = |v: &[f64]| -> IndexMap<String, Real> {
        reference
            .output_names()
            .iter()
            .cloned()
            .zip(v.iter().map(|x| Real(*x)))
            .collect()
    };

    let pole_map = poles(model);
    let (zeros, zeros_defined, infinite_zero_count) = match transmission_zeros(model) {
        Ok(z) => (z.zeros, true, z.infinite_count),
        Err(Error::DegeneratePencil) => (Vec::new(), false, 0),
        Err(e) => return Err(e),
    };
    let grid;
    let freqs = match freqs {
        Some(f) => f,
        None => {
            grid = default_grid(model.dt());
            &grid
        }
    };
    Ok(ModelReport {
        model_id: model_id.to_owned(),
        data_id: data_id.to_owned(),
        dt: model.dt(),
        avg_errors: keyed(&rel.avg),
        max_errors: keyed(&rel.max),
        max_abs_errors: keyed(&abs),
        pole_magnitudes: pole_map.poles.iter().map(|z| z.norm()).collect(),
        poles: pairs(&pole_map.poles),
        unstable_count: pole_map.unstable_count,
        marginal_count: pole_map.marginal_count,
        zeros: pairs(&zeros),
        zeros_defined,
        infinite_zero_count,
        cond_sweep: condition_sweep(model, freqs)?,
    })
}

/// Simulates every model on the reference inputs from rest and reports
/// each one. Output order follows `models`.
pub fn compare_models(
    models: &[(String, StateSpaceModel)],
    reference: &TimeSeries,
    data_id: &str,
    freqs: Option<&[f64]>,
) -> Result<Vec<ModelReport>> {
    models
        .iter()
        .map(|(id, m)| model_report(id, m, reference, data_id, freqs))
        .collect()
}

/// Model ids ordered by mean `|avg_errors|`, best first; ties keep input order.
pub fn rank_by_avg_error(reports: &[ModelReport]) -> Vec<String> {
    let mut idx: Vec<usize> = (0..reports.len()).collect();
    idx.sort_by(|&a, &b| {
        reports[a]
            .mean_abs_avg_error()
            .total_cmp(&reports[b].mean_abs_avg_error())
    });
    idx.into_iter()
        .map(|i| reports[i].model_id.clone())
        .collect()
}

/// Top-level analysis document written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: u32,
    pub data_id: String,
    pub ranking: Vec<String>,
    pub reports: Vec<ModelReport>,
}

fn csv_value(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Long-format table for plotting: `model_id,quantity,key,x,y`.
pub fn reports_to_csv(reports: &[ModelReport]) -> String {
    let mut out = String::from("model_id,quantity,key,x,y\n");
    for r in reports {
        let id = &r.model_id;
        for (k, v) in &r.avg_errors {
            let _ = writeln!(out, "{id},avg_error,{k},{},", csv_value(v.0));
        }
        for (k, v) in &r.max_errors {
            let _ = writeln!(out, "{id},max_error,{k},{},", csv_value(v.0));
        }
        for (i, [re, im]) in r.poles.iter().enumerate() {
            let _ = writeln!(out, "{id},pole,{i},{re},{im}");
        }
        for (i, [re, im]) in r.zeros.iter().enumerate() {
            let _ = writeln!(out, "{id},zero,{i},{re},{im}");
        }
        for (i, p) in r.cond_sweep.iter().enumerate() {
            let _ = writeln!(out, "{id},cond,{i},{},{}", p.omega, csv_value(p.cond));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn first_order(a: f64) -> StateSpaceModel {
        let m = |v| DMatrix::from_element(1, 1, v);
        StateSpaceModel::new(m(a), m(1.0), m(1.0), m(0.0), 1.0).unwrap()
    }

    fn reference(model: &StateSpaceModel) -> TimeSeries {
        let u = DMatrix::from_fn(50, 1, |i, _| ((i * 7) % 5) as f64 - 2.0);
        let y = simulate_from_rest(model, &u).unwrap();
        TimeSeries::new(1.0, u, y)
            .unwrap()
            .with_nominal(vec![2.0])
            .unwrap()
    }

    #[test]
    fn self_reference_has_zero_error() {
        let m = first_order(0.5);
        let r = model_report("m", &m, &reference(&m), "d", None).unwrap();
        assert_eq!(r.avg_errors["y1"].0, 0.0);
        assert_eq!(r.max_errors["y1"].0, 0.0);
        assert_eq!(r.cond_sweep.len(), 200);
        assert!(r.zeros_defined && r.zeros.is_empty());
    }

    #[test]
    fn truth_ranks_first() {
        let truth = first_order(0.5);
        let other = first_order(0.7);
        let data = reference(&truth);
        let reports = compare_models(
            &[("other".into(), other), ("truth".into(), truth)],
            &data,
            "d",
            Some(&[0.1, 1.0]),
        )
        .unwrap();
        assert_eq!(rank_by_avg_error(&reports), ["truth", "other"]);
        let csv = reports_to_csv(&reports);
        assert!(csv.starts_with("model_id,quantity,key,x,y\n"));
        assert!(csv.contains("truth,cond,1,1,1\n"));
    }

    #[test]
    fn json_round_trip() {
        let m = first_order(0.5);
        let r = model_report("m", &m, &reference(&m), "d", Some(&[0.5])).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: ModelReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn missing_nominal_and_shape_errors() {
        let m = first_order(0.5);
        let u = DMatrix::zeros(5, 1);
        let bare = TimeSeries::new(1.0, u.clone(), DMatrix::zeros(5, 1)).unwrap();
        assert!(matches!(
            model_report("m", &m, &bare, "d", None),
            Err(Error::Config(_))
        ));
        let wide = TimeSeries::new(1.0, u, DMatrix::zeros(5, 2)).unwrap();
        assert!(matches!(
            model_report("m", &m, &wide, "d", None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn real_non_finite_json() {
        let v = vec![Real(1.5), Real(f64::INFINITY), Real(f64::NEG_INFINITY)];
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"[1.5,"inf","-inf"]"#);
        let back: Vec<Real> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
