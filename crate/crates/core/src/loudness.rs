//! ITU-R BS.1770-4 integrated loudness for mono signals, and the ducking
//! gain that places background music a given number of LU below speech.
//!
//! The standard only tabulates K-weighting coefficients for 48 kHz. Both
//! stages are re-derived here for any rate by a pre-warped bilinear
//! transform of the analog shelf and high-pass prototypes.

use std::f64::consts::PI;
use std::fmt;

use crate::audio::AudioClip;
use crate::error::{Error, Result};

const BLOCK_S: f64 = 0.4;
const BLOCK_STEP_S: f64 = 0.1;
const ABSOLUTE_GATE_LUFS: f64 = -70.0;
const RELATIVE_GATE_LU: f64 = -10.0;
const LOUDNESS_OFFSET: f64 = -0.691;

// Analog prototype parameters of the two K-weighting stages.
const SHELF_F0: f64 = 1_681.974_450_955_533;
const SHELF_GAIN_DB: f64 = 3.999_843_853_973_347;
const SHELF_Q: f64 = 0.707_175_236_955_419_6;
const SHELF_VB_EXP: f64 = 0.499_666_774_154_541_6;
const HIGHPASS_F0: f64 = 38.135_470_876_024_44;
const HIGHPASS_Q: f64 = 0.500_327_037_323_877_3;

/// A loudness value: LUFS when absolute, LU when a difference.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Lufs(pub f64);

impl fmt::Display for Lufs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// Second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Magnitude response in dB at `freq_hz`.
    pub fn magnitude_db(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / rate_hz;
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
            (re * re + im * im).sqrt()
        };
        20.0 * (eval(&self.b) / eval(&self.a)).log10()
    }

    /// Direct form I filtering with zero initial state.
    pub fn run(&self, input: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        input
            .iter()
            .map(|&x| {
                let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                x2 = x1;
                x1 = x;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// The two K-weighting stages designed for one sample rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KWeighting {
    pub rate_hz: f64,
    pub shelf: Biquad,
    pub highpass: Biquad,
}

impl KWeighting {
    pub fn new(rate_hz: u32) -> Self {
        let rate = rate_hz as f64;

        let k = (PI * SHELF_F0 / rate).tan();
        let vh = 10f64.powf(SHELF_GAIN_DB / 20.0);
        let vb = vh.powf(SHELF_VB_EXP);
        let a0 = 1.0 + k / SHELF_Q + k * k;
        let shelf = Biquad {
            b: [
                (vh + vb * k / SHELF_Q + k * k) / a0,
                2.0 * (k * k - vh) / a0,
                (vh - vb * k / SHELF_Q + k * k) / a0,
            ],
            a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / SHELF_Q + k * k) / a0],
        };

        let k = (PI * HIGHPASS_F0 / rate).tan();
        let a0 = 1.0 + k / HIGHPASS_Q + k * k;
        let highpass = Biquad {
            b: [1.0, -2.0, 1.0],
            a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / HIGHPASS_Q + k * k) / a0],
        };

        KWeighting {
            rate_hz: rate,
            shelf,
            highpass,
        }
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        self.shelf.magnitude_db(freq_hz, self.rate_hz) + self.highpass.magnitude_db(freq_hz, self.rate_hz)
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.highpass.run(&self.shelf.run(input))
    }
}

/// Applies K-weighting (pre-filter shelf, then RLB high-pass).
pub fn k_weight(clip: &AudioClip) -> AudioClip {
    let input: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let out = KWeighting::new(clip.sample_rate()).apply(&input);
    clip.with_samples(out.into_iter().map(|s| s as f32).collect())
        .expect("filter output has input length")
}

/// Mean square of each 400 ms block, stepped by 100 ms.
fn block_powers(weighted: &[f64], rate: u32) -> Vec<f64> {
    let block = (BLOCK_S * rate as f64).round() as usize;
    let step = (BLOCK_STEP_S * rate as f64).round() as usize;
    if weighted.len() < block {
        return Vec::new();
    }
    let n_blocks = (weighted.len() - block) / step + 1;
    (0..n_blocks)
        .map(|j| {
            let w = &weighted[j * step..j * step + block];
            w.iter().map(|s| s * s).sum::<f64>() / block as f64
        })
        .collect()
}

fn power_to_lufs(power: f64) -> f64 {
    LOUDNESS_OFFSET + 10.0 * power.log10()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Gated integrated loudness of a mono clip.
pub fn integrated_loudness(clip: &AudioClip) -> Result<Lufs> {
    let block = (BLOCK_S * clip.sample_rate() as f64).round() as usize;
    if clip.len() < block {
        return Err(Error::TooShort {
            needed: block,
            available: clip.len(),
        });
    }
    let input: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let weighted = KWeighting::new(clip.sample_rate()).apply(&input);
    let powers = block_powers(&weighted, clip.sample_rate());

    let above_absolute: Vec<f64> = powers
        .into_iter()
        .filter(|&z| z > 0.0 && power_to_lufs(z) > ABSOLUTE_GATE_LUFS)
        .collect();
    let abs_mean = mean(above_absolute.iter().copied()).ok_or(Error::Unmeasurable)?;
    let relative_gate = power_to_lufs(abs_mean) + RELATIVE_GATE_LU;
    let gated = mean(
        above_absolute
            .iter()
            .copied()
            .filter(|&z| power_to_lufs(z) > relative_gate),
    )
    .ok_or(Error::Unmeasurable)?;
    Ok(Lufs(power_to_lufs(gated)))
}

/// The region where both stems play: the shorter length of the two.
fn overlap(speech: &AudioClip, music: &AudioClip) -> Result<(AudioClip, AudioClip)> {
    let n = speech.len().min(music.len());
    Ok((
        speech.with_samples(speech.samples()[..n].to_vec())?,
        music.with_samples(music.samples()[..n].to_vec())?,
    ))
}

/// Speech loudness minus music loudness, measured over their overlap.
pub fn loudness_difference(speech: &AudioClip, music: &AudioClip) -> Result<Lufs> {
    let (speech, music) = overlap(speech, music)?;
    Ok(Lufs(integrated_loudness(&speech)?.0 - integrated_loudness(&music)?.0))
}

/// Linear gain for `music` that puts it `target_ld` LU below `speech`.
pub fn gain_for_target_ld(speech: &AudioClip, music: &AudioClip, target_ld: f64) -> Result<f64> {
    let ld = loudness_difference(speech, music)?.0;
    Ok(gain_from_levels(ld, target_ld))
}

/// `10^((current_ld - target_ld) / 20)`.
pub fn gain_from_levels(current_ld: f64, target_ld: f64) -> f64 {
    10f64.powf((current_ld - target_ld) / 20.0)
}
