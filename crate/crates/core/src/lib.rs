//! Blink-driven block-scanning input engine.
//!
//! The pipeline runs from a simulated sensor link to scored selections:
//!
//! - [`linkframe`]: fixed-size frame codec for the sensor link, with resync.
//! - [`blinksense`]: voltage classification and debounced blink detection.
//! - [`blockscan`]: the scanning automaton (quadrant descent, eight-direction
//!   cursor movement, action menu).
//! - [`scanmetrics`]: selection accuracy, false alarm rate, success rate.
//! - [`simharness`]: synthetic users, trial scoring, trace record/replay, sweeps.
//! - [`session`]: the session engine, message stream and TCP endpoint.
//!
//! Floating-point math in the metrics layer is generic over [`Scalar`]; the
//! aliases below pin the common concrete choices.

pub mod blinksense;
pub mod blockscan;
pub mod geometry;
pub mod linkframe;
pub mod scalar;
pub mod scanmetrics;
pub mod session;
pub mod simharness;

pub use blinksense::{BlinkEvent, SampleClass, SensorSample, SignalThresholds};
pub use blockscan::{Action, Phase, ScanConfig, ScanState};
pub use geometry::{Direction, Point, Region};
pub use scalar::Scalar;

/// Metrics summary in double precision.
pub type Summary = scanmetrics::MetricsSummary<f64>;
/// Metrics summary in single precision.
pub type Summary32 = scanmetrics::MetricsSummary<f32>;
/// Trial bookkeeping in double precision.
pub type Outcome = scanmetrics::TrialOutcome<f64>;
/// Trial bookkeeping in single precision.
pub type Outcome32 = scanmetrics::TrialOutcome<f32>;
