//! Regenerates the bundled fixtures in `crates/core/fixtures/`:
//! a third-order two-input, two-output plant, a noiseless PRBS record of
//! it with a nominal-value sidecar, and a deliberately perturbed model.
//!
//! ```text
//! cargo run -p okid-era --example make_fixtures
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use okid_era::bench::prbs::prbs_matrix;
use okid_era::io::write_json;
use okid_era::lti::simulate_from_rest;
use okid_era::signals::{save_nominal, save_timeseries};
use okid_era::{StateSpaceModel, TimeSeries};

fn plant(slow_pole: f64, pair_re: f64) -> StateSpaceModel {
    let a = DMatrix::from_row_slice(
        3,
        3,
        &[slow_pole, 0.0, 0.0, 0.0, pair_re, -0.3, 0.0, 0.3, pair_re],
    );
    let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1.0, 0.0, 0.8]);
    let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.4, 0.0, 0.0, 1.0, 0.6]);
    let d = DMatrix::zeros(2, 2);
    StateSpaceModel::new(a, b, c, d, 0.1)
        .and_then(|m| {
            m.with_channel_names(
                vec!["valve".into(), "heater".into()],
                vec!["level".into(), "temp".into()],
            )
        })
        .expect("fixture plant is valid")
}

fn main() -> okid_era::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let truth = plant(0.9, 0.5);
    let u = prbs_matrix(600, 2, 2024);
    let y = simulate_from_rest(&truth, &u)?;
    let data = TimeSeries::new(0.1, u, y)?
        .with_names(
            vec!["valve".into(), "heater".into()],
            vec!["level".into(), "temp".into()],
        )?
        .with_nominal(vec![2.0, 5.0])?;
    save_timeseries(&data, &dir.join("plant3.csv"))?;
    save_nominal(&data, &dir.join("plant3.nominal.json"))?;
    write_json(&dir.join("truth.json"), &truth)?;
    write_json(&dir.join("perturbed.json"), &plant(0.8, 0.45))?;
    Ok(())
}
