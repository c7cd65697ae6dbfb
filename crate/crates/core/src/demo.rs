//! Deterministic stand-in signals for corpora: syllabic speech-like bursts,
//! harmonic chord sequences and filtered noise. Used to build small demo
//! corpora for tests, benchmarks and the Python smoke test.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};

/// Speech-like signal: voiced syllables on a gliding pitch, separated by pauses.
pub fn speech_like<R: Rng + ?Sized>(rate: u32, seconds: f64, rng: &mut R) -> Vec<f32> {
    let n = (seconds * rate as f64) as usize;
    let mut out = vec![0.0f32; n];
    let base_f0 = rng.random_range(95.0..230.0);
    let mut pos = rng.random_range(0..(rate as usize / 10).max(1));
    while pos < n {
        let syllable = (rng.random_range(0.08..0.3) * rate as f64) as usize;
        let f0 = base_f0 * rng.random_range(0.85..1.2);
        let formant = rng.random_range(400.0..2500.0);
        let amp = rng.random_range(0.2..0.7);
        for i in 0..syllable.min(n - pos) {
            let t = i as f64 / rate as f64;
            let env = (PI * i as f64 / syllable as f64).sin().powi(2);
            let glide = f0 * (1.0 + 0.1 * (i as f64 / syllable as f64));
            let mut v = 0.0;
            for h in 1..=12 {
                let fh = glide * h as f64;
                if fh > rate as f64 / 2.2 {
                    break;
                }
                let weight = 1.0 / (1.0 + ((fh - formant) / 300.0).powi(2)) + 0.15 / h as f64;
                v += weight * (2.0 * PI * fh * t).sin();
            }
            out[pos + i] += (amp * env * v * 0.3) as f32;
        }
        pos += syllable;
        let pause = if rng.random_bool(0.15) {
            rng.random_range(0.25..0.6)
        } else {
            rng.random_range(0.02..0.12)
        };
        pos += (pause * rate as f64) as usize;
    }
    normalize_peak(&mut out, 0.9);
    out
}

/// Music-like signal: sustained harmonic chords with a soft pulse.
pub fn music_like<R: Rng + ?Sized>(rate: u32, seconds: f64, rng: &mut R) -> Vec<f32> {
    let n = (seconds * rate as f64) as usize;
    let mut out = vec![0.0f32; n];
    let beat = rng.random_range(0.3..0.7);
    let root_midi = rng.random_range(40..60) as f64;
    let mut pos = 0usize;
    while pos < n {
        let chord_len = ((beat * rng.random_range(2..6) as f64) * rate as f64) as usize;
        let root = root_midi + [0.0, 5.0, 7.0, -3.0][rng.random_range(0..4)];
        let notes = [root, root + 4.0, root + 7.0, root + 12.0];
        for i in 0..chord_len.min(n - pos) {
            let t = (pos + i) as f64 / rate as f64;
            let local = i as f64 / rate as f64;
            let attack = (local / 0.02).min(1.0);
            let pulse = 0.75 + 0.25 * (2.0 * PI * t / beat).cos();
            let mut v = 0.0;
            for (k, m) in notes.iter().enumerate() {
                let f = 440.0 * 2f64.powf((m - 69.0) / 12.0);
                for h in 1..=5 {
                    if f * h as f64 > rate as f64 / 2.2 {
                        break;
                    }
                    v += (2.0 * PI * f * h as f64 * t + k as f64).sin() / (h * h) as f64;
                }
            }
            out[pos + i] += (attack * pulse * v * 0.2) as f32;
        }
        pos += chord_len;
    }
    normalize_peak(&mut out, 0.9);
    out
}

/// Low-passed noise with slow level changes.
pub fn noise_like<R: Rng + ?Sized>(rate: u32, seconds: f64, rng: &mut R) -> Vec<f32> {
    let n = (seconds * rate as f64) as usize;
    let smooth = rng.random_range(0.05..0.6);
    let mut state = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let white: f64 = rng.random_range(-1.0..1.0);
        state += smooth * (white - state);
        let level = 0.6 + 0.4 * (2.0 * PI * 0.3 * i as f64 / rate as f64).sin();
        out.push((state * level) as f32);
    }
    normalize_peak(&mut out, 0.8);
    out
}

fn normalize_peak(x: &mut [f32], target: f32) {
    let peak = x.iter().fold(0.0f32, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        for s in x.iter_mut() {
            *s *= target / peak;
        }
    }
}

/// Layout of a generated demo corpus.
#[derive(Debug, Clone, Copy)]
pub struct DemoCorpusSpec {
    pub files_per_class: usize,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub seed: u64,
}

impl Default for DemoCorpusSpec {
    fn default() -> Self {
        DemoCorpusSpec {
            files_per_class: 6,
            min_seconds: 3.0,
            max_seconds: 14.0,
            seed: 0,
        }
    }
}

/// Writes `<root>/{music,speech,noise}/*.wav` with a mix of rates,
/// channel counts and sample formats.
pub fn write_demo_corpus(root: &Path, spec: &DemoCorpusSpec) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for class in ClassLabel::ALL {
        let dir = root.join(class.as_str());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for i in 0..spec.files_per_class {
            let (rate, channels, format) = match i % 4 {
                0 => (22_050, 1, (SampleFormat::Int, 16)),
                1 => (44_100, 2, (SampleFormat::Int, 16)),
                2 => (16_000, 1, (SampleFormat::Int, 24)),
                _ => (22_050, 2, (SampleFormat::Float, 32)),
            };
            let seconds = rng.random_range(spec.min_seconds..=spec.max_seconds);
            let mono = match class {
                ClassLabel::Music => music_like(rate, seconds, &mut rng),
                ClassLabel::Speech => speech_like(rate, seconds, &mut rng),
                ClassLabel::Noise => noise_like(rate, seconds, &mut rng),
            };
            let path = dir.join(format!("{}_{i:03}.wav", class.as_str()));
            write_wav(&path, &mono, rate, channels, format)?;
        }
    }
    Ok(())
}

fn write_wav(path: &Path, mono: &[f32], rate: u32, channels: u16, format: (SampleFormat, u16)) -> Result<()> {
    let spec = WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: format.1,
        sample_format: format.0,
    };
    let err = |e: hound::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = WavWriter::create(path, spec).map_err(err)?;
    for &s in mono {
        for c in 0..channels {
            // Slightly different channels so downmixing is exercised.
            let v = if c == 0 { s } else { s * 0.9 };
            match format {
                (SampleFormat::Float, _) => w.write_sample(v).map_err(err)?,
                (SampleFormat::Int, 24) => w.write_sample((v * 8_388_607.0).round() as i32).map_err(err)?,
                _ => w.write_sample((v * 32_767.0).round() as i16).map_err(err)?,
            }
        }
    }
    w.finalize().map_err(err)
}
