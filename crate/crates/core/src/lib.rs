//! Deterministic synthesis of annotated radio-style audio, plus the feature,
//! post-processing and evaluation tools needed to train and score
//! music/speech segmentation models on it.
//!
//! The pipeline works on mono audio at 22.05 kHz throughout:
//!
//! - [`corpus`] indexes a `music/`, `speech/`, `noise/` repository and cuts
//!   canonical source segments;
//! - [`synth`] mixes them into 8 s examples with fades, cross-fades and
//!   loudness-ducked music beds ([`fades`], [`loudness`]);
//! - [`labels`], [`features`], [`postproc`] and [`eval`] cover annotations,
//!   log-Mel features, prediction clean-up and segment-based scoring.

pub mod audio;
pub mod config;
pub mod corpus;
pub mod demo;
pub mod error;
pub mod eval;
pub mod fades;
pub mod features;
pub mod labels;
pub mod loudness;
pub mod melf;
pub mod postproc;
pub mod resample;
pub mod synth;
pub mod wav;

pub use audio::{AudioClip, CANONICAL_RATE};
pub use error::{Error, Result};
