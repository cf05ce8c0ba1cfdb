//! Adaptive spike-train encoding and anomaly detection for streaming
//! scalar data.
//!
//! The pipeline: online statistics ([`stats`]) feed a self-recentring rate
//! encoder ([`encode`]), rates become spike trains driving integrate-and-
//! fire neurons ([`neuron`]), and a lagged bank of input neurons projecting
//! onto one output neuron flags anomalies ([`detect`]). File ingestion and
//! persistence live in [`data`]; scoring and the forgetting-rate sweep in
//! [`eval`].

pub mod data;
pub mod detect;
pub mod encode;
pub mod eval;
pub mod neuron;
pub mod stats;

pub use detect::{DetectionRecord, Detector, DetectorConfig, TrackerSpec};
pub use encode::{AdaptiveEncoder, GrfEncoder, RateSample};
pub use eval::{ScoreCard, SweepRow};
pub use neuron::{LifNeuron, SpikeMode, SpikeTrain};
pub use stats::StatsTracker;
