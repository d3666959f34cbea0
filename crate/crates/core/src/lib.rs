//! Planar in-hand friction: a contact model, a trace simulator, an online
//! estimator for `μ_c`, `μ_s` and the effective radius `r`, CSV ingestion
//! and per-trial statistics.

pub mod contact_model;
pub mod csv_format;
pub mod estimator;
pub mod ingest;
pub mod scenario_file;
pub mod simulator;
pub mod stats;
pub mod trace;

pub use contact_model::{
    ellipsoid_wrench, limit_surface_numeric, motion_ratios, ContactParams, ContactPatch,
    FrictionWrench, ModelError, MotionRatios, PlanarTwist, PressureDistribution,
};
pub use estimator::{EstimateRecord, Estimator, EstimatorParams, Measurement};
pub use simulator::{run_scenario, ScenarioSegment, SimConfig, SimTrace};
