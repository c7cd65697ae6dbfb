//! The mono sample buffer shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// Sample rate every stage works at after standardization.
pub const CANONICAL_RATE: u32 = 22_050;

/// A mono buffer of float samples at a known rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
    source_id: String,
}

impl AudioClip {
    /// Builds a clip, rejecting empty buffers and non-finite samples.
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("audio clip must hold at least one sample".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            source_id: source_id.into(),
        })
    }

    /// Same as [`AudioClip::new`] at the canonical rate.
    pub fn canonical(samples: Vec<f32>, source_id: impl Into<String>) -> Result<Self> {
        Self::new(samples, CANONICAL_RATE, source_id)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Replaces the samples, keeping rate and provenance.
    pub(crate) fn with_samples(&self, samples: Vec<f32>) -> Result<Self> {
        AudioClip::new(samples, self.sample_rate, self.source_id.clone())
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f32) -> AudioClip {
        AudioClip {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
            source_id: self.source_id.clone(),
        }
    }
}

/// Number of samples covering `seconds` at `rate`, rounded to nearest.
pub fn samples_for(seconds: f64, rate: u32) -> usize {
    (seconds * rate as f64).round().max(0.0) as usize
}
