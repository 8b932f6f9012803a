//! Indoor localization from Wi-Fi RSS fingerprints with pedestrian dead
//! reckoning.
//!
//! The offline stage averages repeated surveys of grid points into a
//! [`RadioMap`]; the online stage matches a query fingerprint with NN, KNN
//! or reciprocal-distance weighted KNN. A WKNN fix can then seed a dead
//! reckoning track driven by detected steps. [`simulator`] generates
//! log-distance path-loss environments to benchmark all of it, and
//! [`store`] persists survey readings as CSV.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` / `*F32` aliases below name the common instantiations.

pub mod error;
pub mod fingerprint;
pub mod locator;
pub mod pdr;
pub mod scalar;
pub mod simulator;
pub mod store;

pub use error::{Error, Result};
pub use fingerprint::{
    build_radio_map, fingerprint_distance, rss_from_power, Fingerprint, Position, RadioMap, RssVector, RSS_CEILING_DBM,
    RSS_FLOOR_DBM,
};
pub use locator::{
    cross_validate, locate, locate_knn, locate_nn, locate_wknn, nearest_neighbors, wknn_weights, Algorithm,
    LocateConfig, Neighbor,
};
pub use pdr::{
    detect_steps, fused_track, pdr_step, read_trace, track, write_trace, PdrConfig, PdrTracker, SensorSample,
    StepEvent, Trajectory, TrajectoryPoint,
};
pub use scalar::Scalar;
pub use simulator::{
    empirical_cdf, generate_environment, run_benchmark, simulate_walk, sweep_k, synth_rss, BenchmarkResult,
    Environment, ErrorStats, SimConfig,
};
pub use store::{load_store, save_store, FingerprintRecord};

pub type PositionF64 = Position<f64>;
pub type RssVectorF64 = RssVector<f64>;
pub type FingerprintF64 = Fingerprint<f64>;
pub type RadioMapF64 = RadioMap<f64>;
pub type LocateConfigF64 = LocateConfig<f64>;
pub type PdrConfigF64 = PdrConfig<f64>;
pub type SensorSampleF64 = SensorSample<f64>;
pub type StepEventF64 = StepEvent<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type ErrorStatsF64 = ErrorStats<f64>;
pub type FingerprintRecordF64 = FingerprintRecord<f64>;

pub type PositionF32 = Position<f32>;
pub type RssVectorF32 = RssVector<f32>;
pub type FingerprintF32 = Fingerprint<f32>;
pub type RadioMapF32 = RadioMap<f32>;
pub type LocateConfigF32 = LocateConfig<f32>;
pub type PdrConfigF32 = PdrConfig<f32>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type SimConfigF32 = SimConfig<f32>;
