//! Poles, condition-number sweeps and zero-order-hold discretization.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::lti::StateSpaceModel;

/// Poles within this distance of the unit circle count as marginal.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PoleMap {
    /// Eigenvalues of `A` with multiplicity, by magnitude (desc) then angle.
    pub poles: Vec<C64>,
    /// Poles strictly outside the unit circle.
    pub unstable_count: usize,
    /// Poles on the unit circle (within [`MARGINAL_TOL`]).
    pub marginal_count: usize,
}

pub fn poles(model: &StateSpaceModel) -> PoleMap {
    let mut poles = linalg::eigenvalues(model.a());
    linalg::sort_complex(&mut poles);
    let marginal_count = poles
        .iter()
        .filter(|z| (z.norm() - 1.0).abs() <= MARGINAL_TOL)
        .count();
    let unstable_count = poles
        .iter()
        .filter(|z| z.norm() > 1.0 + MARGINAL_TOL)
        .count();
    PoleMap {
        poles,
        unstable_count,
        marginal_count,
    }
}

/// Condition number of `G(e^{iω dt})`; `+∞` when `G` is singular there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondPoint {
    pub omega: f64,
    pub cond: f64,
}

/// Nyquist frequency `π / dt` in rad/s.
pub fn nyquist(dt: f64) -> f64 {
    PI / dt
}

/// `n` log-spaced frequencies in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "frequency grid {lo}:{hi}:{n} is not a positive increasing range"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// 200 log-spaced points in `[1e-4, π/dt]`.
pub fn default_grid(dt: f64) -> Vec<f64> {
    let hi = nyquist(dt);
    log_grid(1e-4_f64.min(hi), hi, 200).expect("valid default grid")
}

pub fn condition_sweep(model: &StateSpaceModel, freqs: &[f64]) -> Result<Vec<CondPoint>> {
    let ny = nyquist(model.dt());
    if let Some(&omega) = freqs
        .iter()
        .find(|&&w| !(w > 0.0 && w <= ny * (1.0 + 1e-12)))
    {
        return Err(Error::FrequencyOutOfRange { omega, nyquist: ny });
    }
    let k = model.n_inputs().min(model.n_outputs());
    Ok(freqs
        .iter()
        .map(|&omega| {
            let z = Complex::from_polar(1.0, omega * model.dt());
            let cond = match model.transfer_at(z) {
                Some(g) if k > 0 => {
                    let sv = linalg::complex_singular_values(&g);
                    let ratio = sv[0] / sv[k - 1];
                    if sv[k - 1] == 0.0 || !ratio.is_finite() {
                        f64::INFINITY
                    } else {
                        ratio
                    }
                }
                _ => f64::INFINITY,
            };
            CondPoint { omega, cond }
        })
        .collect())
}

/// Zero-order-hold discretization via the exponential of
/// `[[Ac, Bc], [0, 0]]·dt`.
pub fn discretize_zoh(
    ac: &DMatrix<f64>,
    bc: &DMatrix<f64>,
    cc: &DMatrix<f64>,
    dc: &DMatrix<f64>,
    dt: f64,
) -> Result<StateSpaceModel> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample period must be positive, got {dt}"
        )));
    }
    let n = ac.nrows();
    let m = bc.ncols();
    if ac.ncols() != n || bc.nrows() != n {
        return Err(Error::DimensionMismatch(
            "Ac must be square and match Bc".into(),
        ));
    }
    let (a, b) = if n == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, m))
    } else {
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
        let e = aug.exp();
        (
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, m)).into_owned(),
        )
    };
    StateSpaceModel::new(a, b, cc.clone(), dc.clone(), dt)
}

/// Serializes finite values as numbers and `+∞` as the string `"inf"`.
pub(crate) mod cond_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected `{s}`"))),
        }
    }
}

impl Serialize for CondPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        struct Cond(f64);
        impl Serialize for Cond {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                cond_serde::serialize(&self.0, s)
            }
        }
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.omega)?;
        t.serialize_element(&Cond(self.cond))?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for CondPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Cond(#[serde(with = "cond_serde")] f64);
        let (omega, Cond(cond)) = <(f64, Cond)>::deserialize(d)?;
        Ok(CondPoint { omega, cond })
    }
}
