//! Multi-object tracking for fixed-camera video.
//!
//! The pipeline detects motion regions by adaptive frame differencing,
//! extracts local gradient-histogram features inside those regions only,
//! groups features into per-object appearance clusters by spatial proximity
//! and trajectory coherence, and propagates the clusters through time with
//! descriptor matching constrained to region-intersection search areas.
//! Appearance models are append-only, which is what makes the tracker
//! robust to occlusion, articulation and scale change.
//!
//! A synthetic-scene harness ([`synth`]) renders scripted sprite sequences
//! with exact ground truth for testing every stage, and [`metrics`] scores
//! track output against that ground truth.

pub mod calibration;
pub mod clustering;
pub mod config;
pub mod features;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod synth;
pub mod tracking;

pub use calibration::{PointPair, SceneCalibration};
pub use motion::{FrameBuffer, MotionRegion};

/// Frame number within a sequence. Signed so windowed arithmetic around
/// frame 0 needs no special cases.
pub type FrameIndex = i64;
