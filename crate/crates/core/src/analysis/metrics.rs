//! Output error metrics normalized by nominal values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-channel relative errors of a linear-model trajectory against a
/// reference trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeErrors {
    /// `mean_i (y_l − y_ref) / y_nom`, signed.
    pub avg: Vec<f64>,
    /// `max_i (y_l − y_ref) / y_nom`, signed (no absolute value).
    pub max: Vec<f64>,
}

fn check(linear_y: &DMatrix<f64>, reference_y: &DMatrix<f64>, nominal: &[f64]) -> Result<()> {
    if linear_y.shape() != reference_y.shape() {
        return Err(Error::ShapeMismatch(format!(
            "trajectories are {:?} and {:?}",
            linear_y.shape(),
            reference_y.shape()
        )));
    }
    if nominal.len() != linear_y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} nominal values for {} channels",
            nominal.len(),
            linear_y.ncols()
        )));
    }
    if linear_y.nrows() == 0 {
        return Err(Error::ShapeMismatch("trajectories are empty".into()));
    }
    if let Some(channel) = nominal.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroNominal { channel });
    }
    Ok(())
}

/// Time-averaged and maximum deviation per channel, both divided by the
/// channel's nominal value. Rows are samples, columns channels.
pub fn relative_errors(
    linear_y: &DMatrix<f64>,
    reference_y: &DMatrix<f64>,
    nominal: &[f64],
) -> Result<RelativeErrors> {
    check(linear_y, reference_y, nominal)?;
    let n = linear_y.nrows() as f64;
    let mut avg = Vec::with_capacity(nominal.len());
    let mut max = Vec::with_capacity(nominal.len());
    for (j, &nom) in nominal.iter().enumerate() {
        let dev = linear_y.column(j) - reference_y.column(j);
        avg.push(dev.sum() / n / nom);
        max.push(
            dev.iter()
                .map(|d| d / nom)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Ok(RelativeErrors { avg, max })
}

/// Absolute-value variant: `max_i |y_l − y_ref| / |y_nom|`. Reported
/// alongside the signed metrics, never in place of them.
pub fn max_abs_relative_errors(
    linear_y: &DMatrix<f64>,
    reference_y: &DMatrix<f64>,
    nominal: &[f64],
) -> Result<Vec<f64>> {
    check(linear_y, reference_y, nominal)?;
    Ok(nominal
        .iter()
        .enumerate()
        .map(|(j, &nom)| {
            (linear_y.column(j) - reference_y.column(j))
                .iter()
                .map(|d| (d / nom).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}
