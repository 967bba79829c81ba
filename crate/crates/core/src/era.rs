//! Eigensystem Realization Algorithm.
//!
//! Markov blocks `Y_1..Y_M` are stacked into the block-Hankel matrix `H`
//! (block `(i, j)` is `Y_{i+j−1}`) and its one-step shift `H′` (block
//! `(i, j)` is `Y_{i+j}`). A truncated SVD `H ≈ U_r Σ_r V_rᵀ` then yields
//!
//! ```text
//! A_r = Σ_r^{-1/2} U_rᵀ H′ V_r Σ_r^{-1/2}
//! B_r = first m columns of Σ_r^{1/2} V_rᵀ
//! C_r = first q rows of U_r Σ_r^{1/2}
//! D   = Y_0
//! ```
//!
//! The realization is balanced with respect to the finite Hankel
//! Gramians, and close to balanced for the infinite-horizon ones once the
//! Markov data has decayed.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lti::{MarkovSequence, StateSpaceModel};

/// Singular values below `GUARD · σ₁` never enter the realization.
pub const SINGULAR_VALUE_GUARD: f64 = 1e-12;

/// Default energy threshold, `1 − 1e−8`.
pub const DEFAULT_ENERGY: f64 = 1.0 - 1e-8;

/// How the truncation index `r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// Keep exactly `r` singular values.
    Fixed(usize),
    /// Smallest `r` whose retained squared-singular-value energy reaches `τ`.
    Energy(f64),
    /// Cut at the largest ratio `σ_i / σ_{i+1}`.
    Gap,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy::Energy(DEFAULT_ENERGY)
    }
}

impl fmt::Display for RankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankPolicy::Fixed(r) => write!(f, "r={r}"),
            RankPolicy::Energy(t) => write!(f, "energy={t}"),
            RankPolicy::Gap => f.write_str("gap"),
        }
    }
}

impl FromStr for RankPolicy {
    type Err = Error;

    /// Parses `r=N`, `energy=τ` or `gap`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!("rank policy `{s}` (expected r=N, energy=τ or gap)"))
        };
        let s = s.trim();
        if s == "gap" {
            return Ok(RankPolicy::Gap);
        }
        let (key, value) = s.split_once('=').ok_or_else(bad)?;
        match key.trim() {
            "r" => {
                let r: usize = value.trim().parse().map_err(|_| bad())?;
                RankPolicy::Fixed(r).validated()
            }
            "energy" => {
                let tau: f64 = value.trim().parse().map_err(|_| bad())?;
                RankPolicy::Energy(tau).validated()
            }
            _ => Err(bad()),
        }
    }
}

impl RankPolicy {
    pub fn validated(self) -> Result<Self> {
        match self {
            RankPolicy::Fixed(0) => Err(Error::InvalidParameter("fixed rank must be ≥ 1".into())),
            RankPolicy::Energy(t) if !(t > 0.0 && t < 1.0) => Err(Error::InvalidParameter(
                format!("energy threshold must lie in (0, 1), got {t}"),
            )),
            p => Ok(p),
        }
    }
}

impl Serialize for RankPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RankPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hankel matrix and its shifted companion.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    pub h: DMatrix<f64>,
    pub h_shift: DMatrix<f64>,
    pub block_rows: usize,
    pub block_cols: usize,
    pub n_outputs: usize,
    pub n_inputs: usize,
    pub dt: f64,
}

/// Assembles `H` and `H′` with `s` block rows and `M − s` block columns.
///
/// `Y_0` is not part of either matrix. The Hankel matrix must be at least
/// as wide as it is tall in blocks, so `M ≥ 2s`.
pub fn build_hankel(markov: &MarkovSequence, s: usize) -> Result<HankelPair> {
    let m_max = markov.horizon();
    if s == 0 {
        return Err(Error::InvalidParameter(
            "block-row count s must be ≥ 1".into(),
        ));
    }
    if m_max < 2 * s {
        return Err(Error::InsufficientData(format!(
            "s = {s} needs Markov blocks up to Y_{}, have up to Y_{m_max}",
            2 * s
        )));
    }
    let cols = m_max - s;
    let (q, m) = (markov.n_outputs(), markov.n_inputs());
    let blocks = markov.blocks();
    let mut h = DMatrix::zeros(s * q, cols * m);
    let mut h_shift = DMatrix::zeros(s * q, cols * m);
    for i in 0..s {
        for j in 0..cols {
            h.view_mut((i * q, j * m), (q, m))
                .copy_from(&blocks[i + j + 1]);
            h_shift
                .view_mut((i * q, j * m), (q, m))
                .copy_from(&blocks[i + j + 2]);
        }
    }
    Ok(HankelPair {
        h,
        h_shift,
        block_rows: s,
        block_cols: cols,
        n_outputs: q,
        n_inputs: m,
        dt: markov.dt(),
    })
}

/// Truncated SVD `H ≈ U_r Σ_r V_rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTruncation {
    /// Left singular vectors, one column per retained value.
    pub u_r: DMatrix<f64>,
    /// Retained singular values, descending and positive.
    pub s_r: Vec<f64>,
    /// Right singular vectors, one column per retained value.
    pub v_r: DMatrix<f64>,
    pub r: usize,
    /// Full singular-value spectrum of `H`.
    pub spectrum: Vec<f64>,
    /// `Σ_{i>r} σ_i² / Σ_i σ_i²`.
    pub discarded_energy: f64,
}

fn choose_rank(spectrum: &[f64], policy: RankPolicy, min_dim: usize) -> Result<usize> {
    let s1 = spectrum[0];
    let guarded = spectrum
        .iter()
        .filter(|&&s| s > SINGULAR_VALUE_GUARD * s1)
        .count();
    let r = match policy.validated()? {
        RankPolicy::Fixed(r) => {
            if r > min_dim {
                return Err(Error::RankPolicyUnsatisfiable(format!(
                    "r = {r} exceeds the smaller Hankel dimension {min_dim}"
                )));
            }
            r
        }
        RankPolicy::Energy(tau) => {
            let total: f64 = spectrum.iter().map(|s| s * s).sum();
            let mut acc = 0.0;
            let mut r = spectrum.len();
            for (i, s) in spectrum.iter().enumerate() {
                acc += s * s;
                if acc >= tau * total {
                    r = i + 1;
                    break;
                }
            }
            r
        }
        RankPolicy::Gap => {
            let mut best = (f64::NEG_INFINITY, 1);
            for i in 0..spectrum.len().saturating_sub(1) {
                let ratio = spectrum[i] / spectrum[i + 1];
                let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
                if ratio > best.0 {
                    best = (ratio, i + 1);
                }
            }
            best.1
        }
    };
    Ok(r.min(guarded).max(1))
}

pub fn truncate_svd(h: &DMatrix<f64>, policy: RankPolicy) -> Result<SvdTruncation> {
    if h.is_empty() || h.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let min_dim = h.nrows().min(h.ncols());
    let svd = h.clone().svd(true, true);
    let spectrum: Vec<f64> = svd.singular_values.iter().copied().collect();
    let r = choose_rank(&spectrum, policy, min_dim)?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let total: f64 = spectrum.iter().map(|s| s * s).sum();
    let discarded: f64 = spectrum[r..].iter().map(|s| s * s).sum();
    Ok(SvdTruncation {
        u_r: u.columns(0, r).into_owned(),
        s_r: spectrum[..r].to_vec(),
        v_r: v_t.rows(0, r).transpose(),
        r,
        discarded_energy: discarded / total,
        spectrum,
    })
}

impl SvdTruncation {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.s_r));
        &self.u_r * s * self.v_r.transpose()
    }
}

/// Realization diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EraDiagnostics {
    pub block_rows: usize,
    pub block_cols: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub discarded_energy: f64,
}

/// ERA realization of the given order policy. `s` defaults to `⌊M/2⌋`.
pub fn era_realize(
    markov: &MarkovSequence,
    s: Option<usize>,
    policy: RankPolicy,
) -> Result<StateSpaceModel> {
    era_realize_with_diagnostics(markov, s, policy).map(|(m, _)| m)
}

pub fn era_realize_with_diagnostics(
    markov: &MarkovSequence,
    s: Option<usize>,
    policy: RankPolicy,
) -> Result<(StateSpaceModel, EraDiagnostics)> {
    let s = s.unwrap_or(markov.horizon() / 2);
    let pair = build_hankel(markov, s)?;
    let trunc = truncate_svd(&pair.h, policy)?;
    let (q, m) = (pair.n_outputs, pair.n_inputs);

    let inv_sqrt: Vec<f64> = trunc.s_r.iter().map(|v| 1.0 / v.sqrt()).collect();
    let sqrt: Vec<f64> = trunc.s_r.iter().map(|v| v.sqrt()).collect();

    // Σ^{-1/2} Uᵀ H′ V Σ^{-1/2}
    let mut a = trunc.u_r.transpose() * &pair.h_shift * &trunc.v_r;
    for i in 0..trunc.r {
        for j in 0..trunc.r {
            a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    // Σ^{1/2} Vᵀ, first m columns
    let mut b = trunc.v_r.rows(0, m).transpose();
    for i in 0..trunc.r {
        b.row_mut(i).scale_mut(sqrt[i]);
    }
    // U Σ^{1/2}, first q rows
    let mut c = trunc.u_r.rows(0, q).into_owned();
    for j in 0..trunc.r {
        c.column_mut(j).scale_mut(sqrt[j]);
    }
    let d = markov.blocks()[0].clone();
    let model = StateSpaceModel::new(a, b, c, d, markov.dt())?;
    let diag = EraDiagnostics {
        block_rows: pair.block_rows,
        block_cols: pair.block_cols,
        rank: trunc.r,
        singular_values: trunc.spectrum,
        discarded_energy: trunc.discarded_energy,
    };
    Ok((model, diag))
}
