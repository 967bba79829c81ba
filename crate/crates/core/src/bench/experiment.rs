//! Experiments on generated plants.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::prbs::prbs_matrix;
use crate::error::{Error, Result};
use crate::lti::{simulate_from_rest, MarkovSequence, StateSpaceModel};
use crate::signals::{add_noise, make_impulse, NoiseSpec, TimeSeries};

/// Outputs beyond this magnitude abort the experiment.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Excitation {
    /// One unit impulse experiment per input channel.
    Impulse,
    /// One unit step experiment per input channel.
    Step,
    /// ±1 maximal-length sequence on every input.
    Prbs { seed: u64 },
    /// Unit-variance white Gaussian input on every input.
    Gaussian { seed: u64 },
}

impl Excitation {
    /// Number of series the experiment produces for an `m`-input plant.
    pub fn series_count(&self, m: usize) -> usize {
        match self {
            Excitation::Impulse | Excitation::Step => m,
            _ => 1,
        }
    }
}

fn input_series(
    excitation: &Excitation,
    m: usize,
    length: usize,
    dt: f64,
) -> Result<Vec<TimeSeries>> {
    let empty = || DMatrix::zeros(length, 0);
    match *excitation {
        Excitation::Impulse => make_impulse(m, length, dt),
        Excitation::Step => (0..m)
            .map(|j| {
                let mut u = DMatrix::zeros(length, m);
                u.column_mut(j).fill(1.0);
                TimeSeries::new(dt, u, empty())
            })
            .collect(),
        Excitation::Prbs { seed } => Ok(vec![TimeSeries::new(
            dt,
            prbs_matrix(length, m, seed),
            empty(),
        )?]),
        Excitation::Gaussian { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = DMatrix::from_fn(length, m, |_, _| StandardNormal.sample(&mut rng));
            Ok(vec![TimeSeries::new(dt, u, empty())?])
        }
    }
}

/// Simulates `plant` from rest under `excitation` and adds `noise`.
///
/// Multi-series excitations (impulse, step) draw noise for series `j` from
/// seed `noise.seed + j`. Fails with [`Error::HorizonTooLong`] if any
/// output leaves `±DIVERGENCE_LIMIT` or becomes non-finite.
pub fn run_experiment(
    plant: &StateSpaceModel,
    excitation: &Excitation,
    length: usize,
    noise: &NoiseSpec,
) -> Result<Vec<TimeSeries>> {
    if length < 2 {
        return Err(Error::InvalidParameter(format!(
            "experiment length must be ≥ 2, got {length}"
        )));
    }
    noise.validate()?;
    let series = input_series(excitation, plant.n_inputs(), length, plant.dt())?;
    series
        .into_iter()
        .enumerate()
        .map(|(j, ts)| {
            let y = simulate_from_rest(plant, ts.inputs())?;
            for k in 0..y.nrows() {
                if y.row(k)
                    .iter()
                    .any(|v| !v.is_finite() || v.abs() >= DIVERGENCE_LIMIT)
                {
                    return Err(Error::HorizonTooLong { step: k });
                }
            }
            let clean = ts.with_outputs(y)?;
            let spec = NoiseSpec {
                seed: noise.seed.wrapping_add(j as u64),
                ..noise.clone()
            };
            add_noise(&clean, &spec)
        })
        .collect()
}

/// Per-channel output standard deviation of a series (population form).
pub fn output_std(ts: &TimeSeries) -> Vec<f64> {
    let y = ts.outputs();
    let n = y.nrows() as f64;
    (0..y.ncols())
        .map(|j| {
            let mean = y.column(j).sum() / n;
            (y.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

/// Per-channel output root-mean-square value.
pub fn output_rms(ts: &TimeSeries) -> Vec<f64> {
    let y = ts.outputs();
    let n = y.nrows() as f64;
    (0..y.ncols())
        .map(|j| (y.column(j).norm_squared() / n).sqrt())
        .collect()
}

fn check_unit_experiments(
    series: &[TimeSeries],
    count: usize,
    step: bool,
) -> Result<(usize, usize)> {
    let m = series.len();
    if m == 0 {
        return Err(Error::InsufficientData("no experiments supplied".into()));
    }
    let q = series[0].n_outputs();
    for (j, ts) in series.iter().enumerate() {
        if ts.n_inputs() != m || ts.n_outputs() != q {
            return Err(Error::DimensionMismatch(format!(
                "experiment {j} has {} inputs and {} outputs, expected {m} and {q}",
                ts.n_inputs(),
                ts.n_outputs()
            )));
        }
        if ts.len() < count {
            return Err(Error::TooFewSamples {
                have: ts.len(),
                need: count,
            });
        }
        let ok = (0..count).all(|k| {
            (0..m).all(|i| {
                let expect = if i != j {
                    0.0
                } else if step || k == 0 {
                    1.0
                } else {
                    0.0
                };
                ts.inputs()[(k, i)] == expect
            })
        });
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "experiment {j} is not a unit {} on input {}",
                if step { "step" } else { "impulse" },
                j + 1
            )));
        }
    }
    Ok((m, q))
}

/// Markov parameters read directly from `m` unit-impulse experiments:
/// column `j` of `Y_k` is the output of experiment `j` at step `k`.
pub fn markov_from_impulse(series: &[TimeSeries], count: usize) -> Result<MarkovSequence> {
    let (m, q) = check_unit_experiments(series, count, false)?;
    let blocks = (0..count)
        .map(|k| DMatrix::from_fn(q, m, |i, j| series[j].outputs()[(k, i)]))
        .collect();
    MarkovSequence::new(blocks, series[0].sample_period())
}

/// Markov parameters from first differences of `m` unit-step experiments,
/// `Y_k = s_k − s_{k−1}` with `s_{−1} = 0`.
pub fn markov_from_step(series: &[TimeSeries], count: usize) -> Result<MarkovSequence> {
    let (m, q) = check_unit_experiments(series, count, true)?;
    let blocks = (0..count)
        .map(|k| {
            DMatrix::from_fn(q, m, |i, j| {
                let y = series[j].outputs();
                y[(k, i)] - if k == 0 { 0.0 } else { y[(k - 1, i)] }
            })
        })
        .collect();
    MarkovSequence::new(blocks, series[0].sample_period())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_plant, PlantSpec};
    use crate::lti::markov_from_model;

    fn plant() -> StateSpaceModel {
        generate_plant(&PlantSpec::stable(4, 2, 3, 11))
            .unwrap()
            .model
    }

    #[test]
    fn impulse_and_step_recover_markov() {
        let p = plant();
        let truth = markov_from_model(&p, 30).unwrap();
        let imp = run_experiment(&p, &Excitation::Impulse, 40, &NoiseSpec::none(3)).unwrap();
        let stp = run_experiment(&p, &Excitation::Step, 40, &NoiseSpec::none(3)).unwrap();
        assert_eq!(imp.len(), 2);
        let a = markov_from_impulse(&imp, 30).unwrap();
        let b = markov_from_step(&stp, 30).unwrap();
        assert!(a.relative_error(&truth, 0..30) < 1e-12);
        assert!(b.relative_error(&truth, 1..30) < 1e-10);
    }

    #[test]
    fn rejects_non_unit_experiments() {
        let p = plant();
        let prbs =
            run_experiment(&p, &Excitation::Prbs { seed: 1 }, 40, &NoiseSpec::none(3)).unwrap();
        assert!(markov_from_impulse(&prbs, 10).is_err());
        let stp = run_experiment(&p, &Excitation::Step, 40, &NoiseSpec::none(3)).unwrap();
        assert!(markov_from_impulse(&stp, 10).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut spec = PlantSpec::stable(2, 1, 1, 4);
        spec.stability = super::super::Stability::Unstable(1);
        let p = generate_plant(&spec).unwrap().model;
        let err = run_experiment(&p, &Excitation::Step, 100_000, &NoiseSpec::none(1)).unwrap_err();
        assert!(matches!(err, Error::HorizonTooLong { .. }));
    }

    #[test]
    fn noise_is_seeded() {
        let p = plant();
        let noise = NoiseSpec::gaussian(vec![0.1; 3], 5).unwrap();
        let e = Excitation::Gaussian { seed: 2 };
        let a = run_experiment(&p, &e, 100, &noise).unwrap();
        assert_eq!(a, run_experiment(&p, &e, 100, &noise).unwrap());
        let clean = run_experiment(&p, &e, 100, &NoiseSpec::none(3)).unwrap();
        assert_ne!(a[0].outputs(), clean[0].outputs());
        assert_eq!(a[0].inputs(), clean[0].inputs());
    }

    #[test]
    fn std_and_rms() {
        let ts = TimeSeries::new(
            1.0,
            DMatrix::zeros(4, 1),
            DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 1.0, -1.0]),
        )
        .unwrap();
        assert_eq!(output_std(&ts), vec![1.0]);
        assert_eq!(output_rms(&ts), vec![1.0]);
    }
}
