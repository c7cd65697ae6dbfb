//! Log-Mel spectrogram features.
//!
//! Centred STFT (reflect padding) with a periodic Hann window, power
//! spectrum, triangular Mel filterbank and natural log with a floor. An 8 s
//! clip at 22.05 kHz yields 802 frames.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::melf::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MelScale {
    /// `2595 * log10(1 + f / 700)`
    Htk,
    /// Linear below 1 kHz, logarithmic above.
    Slaney,
}

impl MelScale {
    pub fn hz_to_mel(self, hz: f64) -> f64 {
        match self {
            MelScale::Htk => 2595.0 * (1.0 + hz / 700.0).log10(),
            MelScale::Slaney => {
                let f_sp = 200.0 / 3.0;
                let min_log_hz = 1000.0;
                let min_log_mel = min_log_hz / f_sp;
                let logstep = 6.4f64.ln() / 27.0;
                if hz >= min_log_hz {
                    min_log_mel + (hz / min_log_hz).ln() / logstep
                } else {
                    hz / f_sp
                }
            }
        }
    }

    pub fn mel_to_hz(self, mel: f64) -> f64 {
        match self {
            MelScale::Htk => 700.0 * (10f64.powf(mel / 2595.0) - 1.0),
            MelScale::Slaney => {
                let f_sp = 200.0 / 3.0;
                let min_log_hz = 1000.0;
                let min_log_mel = min_log_hz / f_sp;
                let logstep = 6.4f64.ln() / 27.0;
                if mel >= min_log_mel {
                    min_log_hz * (logstep * (mel - min_log_mel)).exp()
                } else {
                    mel * f_sp
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub mel_scale: MelScale,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            sample_rate: 22_050,
            n_fft: 1024,
            hop: 220,
            n_mels: 80,
            f_min: 64.0,
            f_max: 8000.0,
            mel_scale: MelScale::Htk,
            log_floor: 1e-10,
        }
    }
}

/// Triangular filters over the `n_fft / 2 + 1` FFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// Band edge frequencies: `n_mels + 2` points, band `m` spans `edges[m]..edges[m + 2]`.
    pub edges_hz: Vec<f64>,
    /// One row of bin weights per band.
    pub weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(cfg: &FeatureConfig) -> Self {
        let scale = cfg.mel_scale;
        let (lo, hi) = (scale.hz_to_mel(cfg.f_min), scale.hz_to_mel(cfg.f_max));
        let edges_hz: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| scale.mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
            .collect();
        let n_bins = cfg.n_fft / 2 + 1;
        let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
        let weights = (0..cfg.n_mels)
            .map(|m| {
                let (left, centre, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                (0..n_bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let rising = (f - left) / (centre - left);
                        let falling = (right - f) / (right - centre);
                        rising.min(falling).max(0.0)
                    })
                    .collect()
            })
            .collect();
        MelFilterbank { edges_hz, weights }
    }

    pub fn centres_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }
}

/// `n_frames x n_mels` natural-log Mel energies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub n_frames: usize,
    pub n_mels: usize,
    /// Row-major values.
    pub data: Vec<f64>,
    pub band_centres_hz: Vec<f64>,
    pub hop: usize,
    pub n_fft: usize,
}

impl MelSpectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_mels..(i + 1) * self.n_mels]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.n_frames,
            self.n_mels,
            self.data.iter().map(|&v| v as f32).collect(),
        )
        .expect("shape is consistent")
    }
}

/// Reusable extractor holding the window, filterbank and FFT plan.
pub struct MelExtractor {
    cfg: FeatureConfig,
    window: Vec<f64>,
    filterbank: MelFilterbank,
    fft: Arc<dyn Fft<f64>>,
}

impl MelExtractor {
    pub fn new(cfg: FeatureConfig) -> Self {
        let window = (0..cfg.n_fft)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / cfg.n_fft as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        MelExtractor {
            filterbank: MelFilterbank::new(&cfg),
            cfg,
            window,
            fft,
        }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        1 + n_samples / self.cfg.hop
    }

    pub fn compute(&self, clip: &AudioClip) -> Result<MelSpectrogram> {
        if clip.sample_rate() != self.cfg.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "expected {} Hz audio, got {} Hz",
                self.cfg.sample_rate,
                clip.sample_rate()
            )));
        }
        self.compute_samples(clip.samples())
    }

    pub fn compute_samples(&self, samples: &[f32]) -> Result<MelSpectrogram> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("cannot featurize an empty clip".into()));
        }
        let n_fft = self.cfg.n_fft;
        let half = n_fft / 2;
        let n_frames = self.n_frames(samples.len());
        let n_bins = half + 1;
        let floor = self.cfg.log_floor;
        let mut data = Vec::with_capacity(n_frames * self.cfg.n_mels);
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0f64; n_bins];

        for frame in 0..n_frames {
            let start = (frame * self.cfg.hop) as isize - half as isize;
            for (n, slot) in buf.iter_mut().enumerate() {
                let x = samples[reflect(start + n as isize, samples.len())] as f64;
                *slot = Complex64::new(x * self.window[n], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf[..n_bins]) {
                *p = c.norm_sqr();
            }
            for row in &self.filterbank.weights {
                let energy: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
                data.push(energy.max(floor).ln());
            }
        }
        Ok(MelSpectrogram {
            n_frames,
            n_mels: self.cfg.n_mels,
            data,
            band_centres_hz: self.filterbank.centres_hz().to_vec(),
            hop: self.cfg.hop,
            n_fft,
        })
    }
}

/// Mirror index without repeating the edge sample (`numpy.pad(mode="reflect")`),
/// folding as often as needed for very short inputs.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Log-Mel spectrogram with the default configuration.
pub fn mel_spectrogram(clip: &AudioClip) -> Result<MelSpectrogram> {
    MelExtractor::new(FeatureConfig::default()).compute(clip)
}
