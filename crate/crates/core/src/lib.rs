//! OKID-ERA system identification.
//!
//! Estimates reduced-order, approximately balanced discrete-time
//! state-space models from arbitrary noisy input/output records, and
//! evaluates them with relative-error metrics, pole/zero maps and
//! condition-number sweeps.
//!
//! Pipeline: [`signals`] ingests data, [`okid`] estimates observer Markov
//! parameters and reconstructs the system impulse response, [`era`]
//! realizes a state-space model from it, [`analysis`] scores models, and
//! [`bench`] generates synthetic ground-truth plants and experiments.

pub mod analysis;
pub mod bench;
pub mod cli;

pub mod era;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod okid;
pub mod signals;

pub use era::{era_realize, RankPolicy};
pub use error::{Error, Result};
pub use lti::{MarkovSequence, StateSpaceModel};
pub use okid::{okid_era, OkidEraConfig};
pub use signals::TimeSeries;
