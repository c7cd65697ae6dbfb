//! PCM WAV reading and writing.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Decoded interleaved audio before any standardization.
#[derive(Debug, Clone)]
pub struct RawAudio {
    pub channels: u16,
    pub sample_rate: u32,
    /// Interleaved samples scaled to [-1, 1].
    pub samples: Vec<f32>,
}

impl RawAudio {
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    /// Averages the channels of each frame.
    pub fn downmix(&self) -> Vec<f32> {
        match self.channels {
            1 => self.samples.clone(),
            n => self
                .samples
                .chunks_exact(n as usize)
                .map(|frame| frame.iter().sum::<f32>() / n as f32)
                .collect(),
        }
    }
}

/// Header fields needed to validate a file without decoding it.
#[derive(Debug, Clone, Copy)]
pub struct WavInfo {
    pub channels: u16,
    pub sample_rate: u32,
    pub frames: u32,
}

fn open(path: &Path) -> Result<WavReader<std::io::BufReader<fs::File>>> {
    WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

fn check_spec(path: &Path, spec: &WavSpec) -> Result<()> {
    let unsupported = |reason: String| {
        Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason,
        })
    };
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) | (SampleFormat::Int, 24) | (SampleFormat::Float, 32) => {}
        (fmt, bits) => {
            return unsupported(format!(
                "{bits}-bit {} samples (expected 16/24-bit integer or 32-bit float)",
                match fmt {
                    SampleFormat::Int => "integer",
                    SampleFormat::Float => "float",
                }
            ))
        }
    }
    if !(1..=2).contains(&spec.channels) {
        return unsupported(format!("{} channels (expected 1 or 2)", spec.channels));
    }
    if spec.sample_rate == 0 {
        return unsupported("zero sample rate".into());
    }
    Ok(())
}

pub fn read_info(path: &Path) -> Result<WavInfo> {
    let reader = open(path)?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    Ok(WavInfo {
        channels: spec.channels,
        sample_rate: spec.sample_rate,
        frames: reader.duration(),
    })
}

pub fn read(path: &Path) -> Result<RawAudio> {
    let mut reader = open(path)?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    let decode_err = |e: hound::Error| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let samples: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(decode_err)?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u32 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()
                .map_err(decode_err)?
        }
    };
    if !samples.len().is_multiple_of(spec.channels as usize) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "truncated frame at end of data".into(),
        });
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "non-finite float sample".into(),
        });
    }
    Ok(RawAudio {
        channels: spec.channels,
        sample_rate: spec.sample_rate,
        samples: samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect(),
    })
}

/// Quantizes a float sample to 16-bit PCM.
pub fn to_i16(sample: f32) -> i16 {
    (sample.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16
}

/// Writes `clip` as mono 16-bit PCM. The file appears atomically.
pub fn write_pcm16(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    write_atomic(path, |tmp| {
        let file = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
        let mut writer = WavWriter::new(BufWriter::new(file), spec).map_err(|e| hound_err(tmp, e))?;
        for &s in clip.samples() {
            writer.write_sample(to_i16(s)).map_err(|e| hound_err(tmp, e))?;
        }
        writer.finalize().map_err(|e| hound_err(tmp, e))
    })
}

/// Writes `clip` as mono 32-bit float PCM. The file appears atomically.
pub fn write_float32(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    write_atomic(path, |tmp| {
        let file = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
        let mut writer = WavWriter::new(BufWriter::new(file), spec).map_err(|e| hound_err(tmp, e))?;
        for &s in clip.samples() {
            writer.write_sample(s).map_err(|e| hound_err(tmp, e))?;
        }
        writer.finalize().map_err(|e| hound_err(tmp, e))
    })
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Runs `write` against a sibling temp path, then renames it over `path`.
pub(crate) fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    if let Err(e) = write(&tmp) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
