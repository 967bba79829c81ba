//! Synthetic benchmark harness: seeded plant generation, excitation
//! signals, experiments, and reproducible manifest-driven runs.

mod experiment;
mod manifest;
mod plant;
pub mod prbs;

pub use experiment::{
    markov_from_impulse, markov_from_step, output_rms, output_std, run_experiment, Excitation,
    DIVERGENCE_LIMIT,
};
pub use manifest::{
    run_manifest, BenchManifest, BenchSummary, ExcitationKind, FreqGrid, NoiseSweepPoint,
    PlantTemplate, RunDiagnostics, RunSummary, MANIFEST_VERSION, RUN_INFO_FILE,
};
pub use plant::{generate_plant, GeneratedPlant, PlantSpec, Stability};
