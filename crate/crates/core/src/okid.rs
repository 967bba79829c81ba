//! Observer/Kalman filter identification.
//!
//! The observer form `x̂[k+1] = Ā x̂[k] + B̄ [u[k]; y[k]]` with `Ā = A − KC`
//! and `B̄ = [B − KD, K]` turns any input/output record into a linear
//! regression on a finite window of past data:
//!
//! ```text
//! y[k] = D u[k] + Σ_{i=1..p} Ȳ_i [u[k−i]; y[k−i]]
//! ```
//!
//! The observer Markov parameters `Ȳ_i = C Ā^{i−1} B̄` are solved by least
//! squares, then the system Markov parameters are recovered with
//!
//! ```text
//! Y_0 = D
//! Y_k = Ȳ_k⁽¹⁾ + Σ_{i=1..k} Ȳ_i⁽²⁾ Y_{k−i}     (k ≤ p)
//! Y_k =          Σ_{i=1..p} Ȳ_i⁽²⁾ Y_{k−i}     (k > p)
//! ```
//!
//! The observer gain itself is never formed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::era::{era_realize_with_diagnostics, RankPolicy};
use crate::error::{Error, Result};
use crate::lti::{MarkovSequence, StateSpaceModel};
use crate::signals::TimeSeries;

/// Relative singular-value cutoff of the least-squares pseudo-inverse.
pub const LEAST_SQUARES_RCOND: f64 = 1e-10;

/// `max(10, 5·⌈order⌉)`, or 10 without an order hint.
pub fn default_horizon(order_hint: Option<usize>) -> usize {
    order_hint.map_or(10, |n| (5 * n).max(10))
}

/// Block rows used by [`okid_era`] when none are given.
pub fn default_block_rows(horizon: usize) -> usize {
    2 * horizon
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverMarkovSequence {
    d_hat: DMatrix<f64>,
    blocks: Vec<DMatrix<f64>>,
    n_inputs: usize,
    dt: f64,
    residual: f64,
    data_singular_values: Vec<f64>,
}

impl ObserverMarkovSequence {
    /// Builds a sequence from explicit blocks; each block is `q × (m+q)`.
    pub fn new(d_hat: DMatrix<f64>, blocks: Vec<DMatrix<f64>>, dt: f64) -> Result<Self> {
        let (q, m) = d_hat.shape();
        if blocks.is_empty() {
            return Err(Error::InvalidParameter(
                "observer horizon p must be ≥ 1".into(),
            ));
        }
        if let Some(k) = blocks.iter().position(|b| b.shape() != (q, m + q)) {
            return Err(Error::DimensionMismatch(format!(
                "observer block {} is {:?}, expected {:?}",
                k + 1,
                blocks[k].shape(),
                (q, m + q)
            )));
        }
        Ok(Self {
            d_hat,
            blocks,
            n_inputs: m,
            dt,
            residual: 0.0,
            data_singular_values: Vec::new(),
        })
    }

    pub fn d_hat(&self) -> &DMatrix<f64> {
        &self.d_hat
    }
    pub fn horizon(&self) -> usize {
        self.blocks.len()
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// `Ȳ_k`, `1 ≤ k ≤ p`.
    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k - 1]
    }
    /// Input partition `Ȳ_k⁽¹⁾` (q × m).
    pub fn input_part(&self, k: usize) -> DMatrix<f64> {
        self.block(k).columns(0, self.n_inputs).into_owned()
    }
    /// Output partition `Ȳ_k⁽²⁾` (q × q).
    pub fn output_part(&self, k: usize) -> DMatrix<f64> {
        let q = self.d_hat.nrows();
        self.block(k).columns(self.n_inputs, q).into_owned()
    }
    /// `‖Y − ΘV‖_F` of the fit.
    pub fn residual(&self) -> f64 {
        self.residual
    }
    /// Singular values of the regression data matrix.
    pub fn data_singular_values(&self) -> &[f64] {
        &self.data_singular_values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OkidOptions {
    pub horizon: usize,
    /// Drop the first `p` samples instead of zero-padding the pre-record past.
    pub discard_initial: bool,
}

impl OkidOptions {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            discard_initial: false,
        }
    }
}

pub fn estimate_observer_markov(data: &TimeSeries, p: usize) -> Result<ObserverMarkovSequence> {
    estimate_observer_markov_with(data, OkidOptions::new(p))
}

pub fn estimate_observer_markov_with(
    data: &TimeSeries,
    opts: OkidOptions,
) -> Result<ObserverMarkovSequence> {
    let p = opts.horizon;
    if p == 0 {
        return Err(Error::InvalidParameter(
            "observer horizon p must be ≥ 1".into(),
        ));
    }
    let (n, m, q) = (data.len(), data.n_inputs(), data.n_outputs());
    if m == 0 || q == 0 {
        return Err(Error::BadDimension(format!(
            "identification needs inputs and outputs, got m = {m}, q = {q}"
        )));
    }
    let width = m + p * (m + q);
    let first = if opts.discard_initial { p } else { 0 };
    let rows = n.saturating_sub(first);
    if n <= width || rows <= width {
        return Err(Error::TooFewSamples {
            have: n,
            need: width + first,
        });
    }
    let u = data.inputs();
    let y = data.outputs();
    if u.iter().all(|v| *v == 0.0) {
        return Err(Error::RankDeficientData("input is identically zero".into()));
    }

    // Regressor row for sample k: [u_k, v_{k−1}, …, v_{k−p}], v_j = [u_j, y_j].
    let mut phi = DMatrix::zeros(rows, width);
    let mut target = DMatrix::zeros(rows, q);
    for (row, k) in (first..n).enumerate() {
        for c in 0..m {
            phi[(row, c)] = u[(k, c)];
        }
        for i in 1..=p.min(k) {
            let base = m + (i - 1) * (m + q);
            let j = k - i;
            for c in 0..m {
                phi[(row, base + c)] = u[(j, c)];
            }
            for c in 0..q {
                phi[(row, base + m + c)] = y[(j, c)];
            }
        }
        for c in 0..q {
            target[(row, c)] = y[(k, c)];
        }
    }

    // Φ = QR, then Θᵀ = R⁺ Qᵀ Yᵀ with an SVD-based pseudo-inverse of R.
    let qr = phi.clone().qr();
    let (qm, r) = (qr.q(), qr.r());
    let (r_pinv, sv) = crate::linalg::pseudo_inverse(&r, LEAST_SQUARES_RCOND);
    if sv.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::RankDeficientData(
            "regression matrix has no usable rank".into(),
        ));
    }
    let theta_t = r_pinv * (qm.transpose() * &target);
    let residual = (&target - &phi * &theta_t).norm();
    let theta = theta_t.transpose();

    let d_hat = theta.columns(0, m).into_owned();
    let blocks = (0..p)
        .map(|i| theta.columns(m + i * (m + q), m + q).into_owned())
        .collect();
    let mut obs = ObserverMarkovSequence::new(d_hat, blocks, data.sample_period())?;
    obs.residual = residual;
    obs.data_singular_values = sv;
    Ok(obs)
}

/// System Markov parameters `Y_0..Y_{count−1}` from observer parameters.
pub fn reconstruct_markov(obs: &ObserverMarkovSequence, count: usize) -> Result<MarkovSequence> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "Markov block count must be ≥ 1".into(),
        ));
    }
    let p = obs.horizon();
    let y2: Vec<DMatrix<f64>> = (1..=p).map(|i| obs.output_part(i)).collect();
    let mut ys: Vec<DMatrix<f64>> = Vec::with_capacity(count);
    ys.push(obs.d_hat().clone());
    for k in 1..count {
        let mut yk = if k <= p {
            obs.input_part(k)
        } else {
            DMatrix::zeros(obs.d_hat.nrows(), obs.n_inputs)
        };
        for i in 1..=k.min(p) {
            yk += &y2[i - 1] * &ys[k - i];
        }
        ys.push(yk);
    }
    MarkovSequence::new(ys, obs.dt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OkidEraConfig {
    pub horizon: usize,
    /// Hankel block rows; [`default_block_rows`] when `None`.
    pub block_rows: Option<usize>,
    pub policy: RankPolicy,
    pub discard_initial: bool,
}

impl OkidEraConfig {
    pub fn new(horizon: usize, block_rows: Option<usize>, policy: RankPolicy) -> Self {
        Self {
            horizon,
            block_rows,
            policy,
            discard_initial: false,
        }
    }
}

/// Identification diagnostics, serialized into the CLI report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub residual: f64,
    pub singular_values: Vec<f64>,
    pub discarded_energy: f64,
    pub p: usize,
    pub s: usize,
    pub r: usize,
    pub markov_blocks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub model: StateSpaceModel,
    pub markov: MarkovSequence,
    pub diagnostics: Diagnostics,
}

/// OKID followed by ERA on `M = 2s + 1` reconstructed Markov parameters.
pub fn okid_era(data: &TimeSeries, config: &OkidEraConfig) -> Result<Identification> {
    let s = config
        .block_rows
        .unwrap_or_else(|| default_block_rows(config.horizon));
    if s == 0 {
        return Err(Error::InvalidParameter(
            "block-row count s must be ≥ 1".into(),
        ));
    }
    let obs = estimate_observer_markov_with(
        data,
        OkidOptions {
            horizon: config.horizon,
            discard_initial: config.discard_initial,
        },
    )?;
    let markov = reconstruct_markov(&obs, 2 * s + 2)?;
    let (model, era) = era_realize_with_diagnostics(&markov, Some(s), config.policy)?;
    let model =
        model.with_channel_names(data.input_names().to_vec(), data.output_names().to_vec())?;
    Ok(Identification {
        model,
        diagnostics: Diagnostics {
            residual: obs.residual(),
            singular_values: era.singular_values,
            discarded_energy: era.discarded_energy,
            p: config.horizon,
            s,
            r: era.rank,
            markov_blocks: markov.len(),
        },
        markov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{markov_from_model, simulate_from_rest};
    use rand::{Rng, SeedableRng};

    fn first_order() -> StateSpaceModel {
        let m = |v| DMatrix::from_element(1, 1, v);
        StateSpaceModel::new(m(0.5), m(1.0), m(1.0), m(0.0), 1.0).unwrap()
    }

    fn random_input(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
    }

    #[test]
    fn siso_markov_recovered() {
        let model = first_order();
        let u = random_input(200, 1, 3);
        let y = simulate_from_rest(&model, &u).unwrap();
        let data = TimeSeries::new(1.0, u, y).unwrap();
        let obs = estimate_observer_markov(&data, 5).unwrap();
        let mk = reconstruct_markov(&obs, 12).unwrap();
        let truth = markov_from_model(&model, 12).unwrap();
        for (a, b) in mk.blocks().iter().zip(truth.blocks()) {
            assert!((a - b).norm() < 1e-8);
        }
        assert!(obs.residual() < 1e-9);
    }

    #[test]
    fn zero_output_gives_zero_parameters() {
        let u = random_input(100, 2, 5);
        let data = TimeSeries::new(1.0, u, DMatrix::zeros(100, 1)).unwrap();
        let obs = estimate_observer_markov(&data, 3).unwrap();
        assert!(obs.d_hat().iter().all(|v| *v == 0.0));
        assert!((1..=3).all(|k| obs.block(k).iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn zero_input_is_rank_deficient() {
        let data = TimeSeries::new(1.0, DMatrix::zeros(100, 1), DMatrix::zeros(100, 1)).unwrap();
        assert!(matches!(
            estimate_observer_markov(&data, 3),
            Err(Error::RankDeficientData(_))
        ));
    }

    #[test]
    fn too_few_samples() {
        // p(m+q)+m = 5·4+2 = 22
        let data = TimeSeries::new(1.0, random_input(22, 2, 1), DMatrix::zeros(22, 2)).unwrap();
        assert!(matches!(
            estimate_observer_markov(&data, 5),
            Err(Error::TooFewSamples { have: 22, need: 22 })
        ));
    }

    #[test]
    fn reconstruction_hand_cases() {
        let z = |r, c| DMatrix::<f64>::zeros(r, c);
        let obs = ObserverMarkovSequence::new(z(1, 1), vec![z(1, 2); 3], 1.0).unwrap();
        let mk = reconstruct_markov(&obs, 6).unwrap();
        assert!(mk.blocks().iter().all(|b| b[0] == 0.0));

        let obs = ObserverMarkovSequence::new(
            z(1, 1),
            vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.0])],
            1.0,
        )
        .unwrap();
        let mk = reconstruct_markov(&obs, 5).unwrap();
        let v: Vec<f64> = mk.blocks().iter().map(|b| b[0]).collect();
        assert_eq!(v, [0.0, 1.0, 0.0, 0.0, 0.0]);

        // Ȳ⁽¹⁾_1 = 1, Ȳ⁽²⁾_1 = 0.5: Y_k = 0.5^{k−1}
        let obs = ObserverMarkovSequence::new(
            z(1, 1),
            vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.5])],
            1.0,
        )
        .unwrap();
        let v: Vec<f64> = reconstruct_markov(&obs, 4)
            .unwrap()
            .blocks()
            .iter()
            .map(|b| b[0])
            .collect();
        assert_eq!(v, [0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn discard_option_matches_on_noiseless_data() {
        let model = first_order();
        let u = random_input(300, 1, 9);
        let y = simulate_from_rest(&model, &u).unwrap();
        let data = TimeSeries::new(1.0, u, y).unwrap();
        let opts = OkidOptions {
            horizon: 4,
            discard_initial: true,
        };
        let obs = estimate_observer_markov_with(&data, opts).unwrap();
        let mk = reconstruct_markov(&obs, 8).unwrap();
        assert!((mk.blocks()[3][0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn okid_era_first_order() {
        let model = first_order();
        let u = random_input(400, 1, 2);
        let y = simulate_from_rest(&model, &u).unwrap();
        let data = TimeSeries::new(1.0, u, y).unwrap();
        let id = okid_era(
            &data,
            &OkidEraConfig::new(5, Some(6), RankPolicy::default()),
        )
        .unwrap();
        assert_eq!(id.diagnostics.r, 1);
        assert_eq!(id.diagnostics.markov_blocks, 14);
        assert!((id.model.a()[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn defaults() {
        assert_eq!(default_horizon(None), 10);
        assert_eq!(default_horizon(Some(1)), 10);
        assert_eq!(default_horizon(Some(3)), 15);
        assert_eq!(default_block_rows(10), 20);
    }
}
