//! Fade curves and gain envelopes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::{samples_for, AudioClip};
use crate::error::{Error, Result};

/// Curvature of the two exponential fades.
pub const DEFAULT_SHARPNESS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadeCurve {
    Linear,
    /// Slow start, fast finish; lies below the linear ramp.
    ExpConvex,
    /// Fast start, slow finish; lies above the linear ramp.
    ExpConcave,
    /// Raised cosine.
    SCurve,
}

impl FadeCurve {
    pub const ALL: [FadeCurve; 4] = [
        FadeCurve::Linear,
        FadeCurve::ExpConvex,
        FadeCurve::ExpConcave,
        FadeCurve::SCurve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FadeCurve::Linear => "linear",
            FadeCurve::ExpConvex => "exp_convex",
            FadeCurve::ExpConcave => "exp_concave",
            FadeCurve::SCurve => "s_curve",
        }
    }

    /// Gain at normalized time `t` in `[0, 1]`.
    pub fn gain(self, t: f64) -> Result<f64> {
        self.gain_with_sharpness(t, DEFAULT_SHARPNESS)
    }

    pub fn gain_with_sharpness(self, t: f64, sharpness: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "fade time {t} outside [0, 1]"
            )));
        }
        Ok(self.eval(t, sharpness))
    }

    fn eval(self, t: f64, sharpness: f64) -> f64 {
        let exp = |k: f64| (k * t).exp_m1() / k.exp_m1();
        match self {
            FadeCurve::Linear => t,
            FadeCurve::ExpConvex => exp(sharpness),
            FadeCurve::ExpConcave => exp(-sharpness),
            FadeCurve::SCurve => (1.0 - (std::f64::consts::PI * t).cos()) / 2.0,
        }
    }
}

impl fmt::Display for FadeCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FadeCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FadeCurve::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown fade curve `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadeDirection {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadeSpec {
    pub curve: FadeCurve,
    pub duration_s: f64,
    pub direction: FadeDirection,
}

/// Gains for an `n`-sample fade-in: first sample exactly 0, last exactly 1.
///
/// A single-sample fade is silent.
pub fn ramp(curve: FadeCurve, n: usize) -> Vec<f32> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| curve.eval(i as f64 / last, DEFAULT_SHARPNESS) as f32)
                .collect()
        }
    }
}

/// Multiplies the start (fade-in) or end (fade-out) of `samples` in place.
pub fn apply_fade_in_place(samples: &mut [f32], curve: FadeCurve, n: usize, direction: FadeDirection) {
    let gains = ramp(curve, n);
    let len = samples.len();
    match direction {
        FadeDirection::In => {
            for (s, g) in samples[..n].iter_mut().zip(&gains) {
                *s *= g;
            }
        }
        FadeDirection::Out => {
            for (s, g) in samples[len - n..].iter_mut().zip(gains.iter().rev()) {
                *s *= g;
            }
        }
    }
}

pub fn apply_fade(clip: &AudioClip, spec: &FadeSpec) -> Result<AudioClip> {
    if spec.duration_s.is_nan() || spec.duration_s < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fade duration {} must be non-negative",
            spec.duration_s
        )));
    }
    let n = samples_for(spec.duration_s, clip.sample_rate());
    if n > clip.len() {
        return Err(Error::InvalidArgument(format!(
            "fade of {:.3} s exceeds clip of {:.3} s",
            spec.duration_s,
            clip.duration_s()
        )));
    }
    let mut samples = clip.samples().to_vec();
    apply_fade_in_place(&mut samples, spec.curve, n, spec.direction);
    clip.with_samples(samples)
}
