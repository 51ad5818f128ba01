//! Synthetic data, benchmark presets, activation-rate sweeps, and
//! distance-to-solution studies.

mod bench;
mod data;
mod distance;
mod sweep;

pub use bench::{Benchmark, PresetNorm};
pub use data::{gen_classification, gen_regression, generate, DataGenSpec, DataKind, Dataset};
pub use distance::{distance_study, DistanceOptions, DistanceReport, DistanceSeries};
pub use sweep::{run_sweep, threads_from_env, SweepReport, SweepRow, SweepRun, SweepSpec, THREADS_ENV};
