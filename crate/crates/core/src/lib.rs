//! Ambient activity monitoring: HMM activity recognition over binary motion
//! sensors, per-feature anomaly detection with interpretable trees, and a
//! caregiver / older-adult dialogue loop wired together by an event bus.

pub mod ingest;
pub mod anomaly;
pub mod api;
pub mod artifacts;
pub mod dialogue;
pub mod hmm;
pub mod label;
pub mod metrics;
pub mod pipeline;
pub mod simulator;

pub use label::ActivityLabel;
