//! Synthetic ground-truth plants.
//!
//! Poles are placed per mode (real pole or complex pair) with
//! `|ln ρ|` spread log-uniformly between the fastest mode (ρ = 0.2) and a
//! slowest mode `timescale_spread` times slower. Unstable plants flip the
//! slowest real modes outside the unit circle. The modal form is hidden
//! behind a random well-conditioned similarity, and `C` is reshaped so
//! the static gain `C (I − A)⁻¹ B` has the requested condition number.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::lti::StateSpaceModel;

/// `|ln ρ|` of the fastest mode (ρ = 0.2).
const FASTEST_LOG_RATE: f64 = 1.609_437_912_434_100_3;
/// Minimum distance between any two generated poles.
const MIN_POLE_SEPARATION: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    /// Number of eigenvalues outside the unit circle.
    Unstable(usize),
}

impl Stability {
    pub fn unstable_count(&self) -> usize {
        match self {
            Stability::Stable => 0,
            Stability::Unstable(k) => *k,
        }
    }
}

fn default_spread() -> f64 {
    10.0
}

fn default_conditioning() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub order: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub stability: Stability,
    /// Ratio of slowest to fastest mode time constant.
    #[serde(default = "default_spread")]
    pub timescale_spread: f64,
    /// Target condition number of the static gain.
    #[serde(default = "default_conditioning")]
    pub conditioning_target: f64,
    pub seed: u64,
}

impl PlantSpec {
    pub fn stable(order: usize, inputs: usize, outputs: usize, seed: u64) -> Self {
        Self {
            order,
            inputs,
            outputs,
            stability: Stability::Stable,
            timescale_spread: default_spread(),
            conditioning_target: default_conditioning(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.order == 0 || self.inputs == 0 || self.outputs == 0 {
            return bad("order, inputs and outputs must all be ≥ 1".into());
        }
        if self.stability.unstable_count() > self.order {
            return bad(format!(
                "{} unstable poles requested for order {}",
                self.stability.unstable_count(),
                self.order
            ));
        }
        if !(self.timescale_spread >= 1.0 && self.timescale_spread.is_finite()) {
            return bad(format!(
                "timescale spread {} must be ≥ 1",
                self.timescale_spread
            ));
        }
        if !(self.conditioning_target >= 1.0 && self.conditioning_target.is_finite()) {
            return bad(format!(
                "conditioning target {} must be ≥ 1",
                self.conditioning_target
            ));
        }
        if self.order == 1 && self.timescale_spread > 1.0 {
            return bad("a first-order plant has a single time constant; spread must be 1".into());
        }
        Ok(())
    }
}

/// A generated plant with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPlant {
    pub model: StateSpaceModel,
    pub spec: PlantSpec,
    /// Eigenvalues as placed, before the similarity transform.
    pub poles: Vec<C64>,
    /// Achieved static-gain condition number.
    pub static_condition: f64,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Real {
        log_rate: f64,
        unstable: bool,
        negative: bool,
    },
    Pair {
        log_rate: f64,
        angle: f64,
    },
}

impl Mode {
    fn poles(&self) -> Vec<C64> {
        match *self {
            Mode::Real {
                log_rate,
                unstable,
                negative,
            } => {
                let rho = if unstable {
                    log_rate.exp()
                } else {
                    (-log_rate).exp()
                };
                vec![C64::new(if negative { -rho } else { rho }, 0.0)]
            }
            Mode::Pair { log_rate, angle } => {
                let z = C64::from_polar((-log_rate).exp(), angle);
                vec![z, z.conj()]
            }
        }
    }
}

fn sample_modes(spec: &PlantSpec, rng: &mut ChaCha8Rng) -> Vec<Mode> {
    let n = spec.order;
    let k = spec.stability.unstable_count();
    // Unstable poles are real; the rest are split into pairs and reals.
    let mut kinds: Vec<bool> = Vec::new(); // true = complex pair
    let mut remaining = n - k;
    while remaining > 0 {
        if remaining >= 2 && rng.random_bool(0.5) {
            kinds.push(true);
            remaining -= 2;
        } else {
            kinds.push(false);
            remaining -= 1;
        }
    }
    let total_modes = k + kinds.len();
    if spec.timescale_spread > 1.0 && total_modes < 2 {
        // A single complex pair cannot carry two time constants.
        kinds = vec![false, false];
    }
    let count = k + kinds.len();
    let slow = FASTEST_LOG_RATE / spec.timescale_spread;
    let mut rates: Vec<f64> = (0..count)
        .map(|i| match i {
            0 => slow,
            1 => FASTEST_LOG_RATE,
            _ => (slow.ln() + rng.random::<f64>() * (FASTEST_LOG_RATE.ln() - slow.ln())).exp(),
        })
        .collect();
    if count == 1 {
        rates[0] = FASTEST_LOG_RATE;
    }
    rates.sort_by(|a, b| a.total_cmp(b));

    // Slowest rates go to the unstable modes.
    let mut modes = Vec::with_capacity(count);
    for &log_rate in rates.iter().take(k) {
        modes.push(Mode::Real {
            log_rate,
            unstable: true,
            negative: false,
        });
    }
    let mut rest: Vec<f64> = rates[k..].to_vec();
    // Shuffle which stable rates become pairs, deterministically.
    for i in (1..rest.len()).rev() {
        let j = rng.random_range(0..=i);
        rest.swap(i, j);
    }
    for (&pair, &log_rate) in kinds.iter().zip(rest.iter()) {
        modes.push(if pair {
            Mode::Pair {
                log_rate,
                angle: rng.random_range(0.2..(0.85 * PI)),
            }
        } else {
            Mode::Real {
                log_rate,
                unstable: false,
                negative: rng.random_bool(0.25),
            }
        });
    }
    modes
}

fn well_separated(poles: &[C64]) -> bool {
    for i in 0..poles.len() {
        for j in 0..i {
            // Conjugate partners of a pair are separated by construction of the angle.
            if (poles[i] - poles[j]).norm() < MIN_POLE_SEPARATION {
                return false;
            }
        }
    }
    true
}

fn modal_matrix(modes: &[Mode], n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut i = 0;
    for mode in modes {
        match *mode {
            Mode::Real { .. } => {
                a[(i, i)] = mode.poles()[0].re;
                i += 1;
            }
            Mode::Pair { .. } => {
                let z = mode.poles()[0];
                a[(i, i)] = z.re;
                a[(i, i + 1)] = -z.im;
                a[(i + 1, i)] = z.im;
                a[(i + 1, i + 1)] = z.re;
                i += 2;
            }
        }
    }
    a
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn static_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let x = (DMatrix::identity(n, n) - a)
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("plant has a pole at z = 1".into()))?;
    Ok(c * x)
}

fn condition(g: &DMatrix<f64>) -> f64 {
    let sv = g.clone().svd(false, false).singular_values;
    let k = sv.len();
    if k == 0 {
        return 1.0;
    }
    let (mx, mn) = (sv.max(), sv.min());
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

pub fn generate_plant(spec: &PlantSpec) -> Result<GeneratedPlant> {
    spec.validate()?;
    let (n, m, q) = (spec.order, spec.inputs, spec.outputs);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut modes = sample_modes(spec, &mut rng);
    let mut poles: Vec<C64> = modes.iter().flat_map(Mode::poles).collect();
    let mut attempts = 0;
    while !well_separated(&poles) {
        attempts += 1;
        if attempts > 200 {
            return Err(Error::InfeasibleSpec(
                "could not place well-separated poles for this order and spread".into(),
            ));
        }
        modes = sample_modes(spec, &mut rng);
        poles = modes.iter().flat_map(Mode::poles).collect();
    }

    let modal = modal_matrix(&modes, n);
    // T = Q·diag(d): orthogonal times a mild scaling.
    let q_mat = normal_matrix(n, n, &mut rng).qr().q();
    let d = DVector::from_fn(n, |_, _| 2f64.powf(rng.random_range(-1.0..1.0)));
    let t = q_mat * DMatrix::from_diagonal(&d);
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("similarity transform is singular".into()))?;
    let a = &t * modal * t_inv;
    let b = normal_matrix(n, m, &mut rng);
    let mut c = normal_matrix(q, n, &mut rng);

    // The static gain has rank at most n; only its nonzero directions are shaped.
    let k = m.min(q).min(n);
    if k >= 2 {
        let g0 = static_gain(&a, &b, &c)?;
        let svd = g0.svd(true, false);
        let u = svd.u.expect("u requested").columns(0, k).into_owned();
        let s = svd.singular_values;
        if s.iter().take(k).any(|v| *v <= 0.0) {
            return Err(Error::Numerical("static gain is rank deficient".into()));
        }
        // Desired σ_i = σ_1 · κ^{−i/(k−1)}
        let mut scale = DMatrix::zeros(k, k);
        for i in 0..k {
            let target = s[0] * spec.conditioning_target.powf(-(i as f64) / (k - 1) as f64);
            scale[(i, i)] = target / s[i] - 1.0;
        }
        c += &u * scale * u.transpose() * &c;
    }
    let static_condition = condition(&static_gain(&a, &b, &c)?);
    let model = StateSpaceModel::new(a, b, c, DMatrix::zeros(q, m), 1.0)?;
    linalg::sort_complex(&mut poles);
    Ok(GeneratedPlant {
        model,
        spec: spec.clone(),
        poles,
        static_condition,
    })
}
