//! Corpus ingestion: indexing a directory-per-class repository and turning
//! raw files into canonical source segments.
//!
//! Files are only validated and measured while indexing. Audio is decoded
//! again on every draw, so the index stays small regardless of corpus size.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::audio::{samples_for, AudioClip, CANONICAL_RATE};
use crate::error::{Error, Result};
use crate::resample::{resampled_len, Resampler};
use crate::wav;

/// Source class of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Music,
    Speech,
    Noise,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Music, ClassLabel::Speech, ClassLabel::Noise];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Music => "music",
            ClassLabel::Speech => "speech",
            ClassLabel::Noise => "noise",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "music" => Ok(ClassLabel::Music),
            "speech" => Ok(ClassLabel::Speech),
            "noise" => Ok(ClassLabel::Noise),
            other => Err(Error::InvalidArgument(format!("unknown class `{other}`"))),
        }
    }
}

/// Which sub-directory of the corpus root holds each class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusLayout {
    pub music: PathBuf,
    pub speech: PathBuf,
    pub noise: PathBuf,
}

impl Default for CorpusLayout {
    fn default() -> Self {
        CorpusLayout {
            music: "music".into(),
            speech: "speech".into(),
            noise: "noise".into(),
        }
    }
}

impl CorpusLayout {
    pub fn subdir(&self, class: ClassLabel) -> &Path {
        match class {
            ClassLabel::Music => &self.music,
            ClassLabel::Speech => &self.speech,
            ClassLabel::Noise => &self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub path: PathBuf,
    /// Duration after decoding, downmix and resampling to the canonical rate.
    pub duration_s: f64,
}

/// A file that could not be indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexWarning {
    pub path: PathBuf,
    pub reason: String,
}

/// Immutable per-class file lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub root: PathBuf,
    pub classes: BTreeMap<ClassLabel, Vec<CorpusEntry>>,
    #[serde(default)]
    pub warnings: Vec<IndexWarning>,
}

impl CorpusIndex {
    pub fn entries(&self, class: ClassLabel) -> &[CorpusEntry] {
        self.classes.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sizes(&self) -> BTreeMap<ClassLabel, usize> {
        self.classes.iter().map(|(c, v)| (*c, v.len())).collect()
    }

    pub fn total_duration_s(&self, class: ClassLabel) -> f64 {
        self.entries(class).iter().map(|e| e.duration_s).sum()
    }

    /// Picks a uniformly random file of `class`.
    pub fn pick<R: Rng + ?Sized>(&self, class: ClassLabel, rng: &mut R) -> Result<&CorpusEntry> {
        let entries = self.entries(class);
        if entries.is_empty() {
            return Err(Error::EmptyClass(class.to_string()));
        }
        Ok(&entries[rng.random_range(0..entries.len())])
    }
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Walks `root` and indexes every decodable WAV file per class.
///
/// Undecodable files are logged and listed in [`CorpusIndex::warnings`];
/// a missing or empty class directory is fatal.
pub fn index_corpus(root: &Path, layout: &CorpusLayout) -> Result<CorpusIndex> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus root is not a directory"),
        ));
    }
    let mut classes = BTreeMap::new();
    let mut warnings = Vec::new();
    for class in ClassLabel::ALL {
        let dir = root.join(layout.subdir(class));
        if !dir.is_dir() {
            return Err(Error::MissingClassDir {
                class: class.to_string(),
                path: dir,
            });
        }
        let mut paths: Vec<PathBuf> = WalkDir::new(&dir)
            .follow_links(true)
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file() && is_wav(e.path()))
            .map(|e| e.into_path())
            .collect();
        paths.sort();

        let results: Vec<(PathBuf, Result<f64>)> = paths
            .into_par_iter()
            .map(|p| {
                let r = standardized_duration(&p);
                (p, r)
            })
            .collect();

        let mut entries = Vec::new();
        for (path, result) in results {
            match result {
                Ok(duration_s) => entries.push(CorpusEntry { path, duration_s }),
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    warnings.push(IndexWarning {
                        path,
                        reason: e.to_string(),
                    });
                }
            }
        }
        if entries.is_empty() {
            return Err(Error::EmptyClass(class.to_string()));
        }
        classes.insert(class, entries);
    }
    Ok(CorpusIndex {
        root: root.to_path_buf(),
        classes,
        warnings,
    })
}

/// Fully decodes `path` to prove it is readable and returns its canonical duration.
fn standardized_duration(path: &Path) -> Result<f64> {
    let raw = wav::read(path)?;
    if raw.frames() == 0 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "no audio frames".into(),
        });
    }
    let len = resampled_len(raw.sample_rate, CANONICAL_RATE, raw.frames());
    Ok(len as f64 / CANONICAL_RATE as f64)
}

/// Reads a WAV file as a mono clip at the canonical rate.
pub fn decode_and_standardize(path: &Path) -> Result<AudioClip> {
    let raw = wav::read(path)?;
    if raw.frames() == 0 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "no audio frames".into(),
        });
    }
    let mono = raw.downmix();
    let resampled = Resampler::new(raw.sample_rate, CANONICAL_RATE).process(&mono);
    let samples = resampled.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    AudioClip::canonical(samples, path.display().to_string())
}

/// Silence trimming parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimConfig {
    pub threshold_db: f64,
    pub window_s: f64,
    pub max_internal_silence_s: f64,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            threshold_db: -50.0,
            window_s: 0.05,
            max_internal_silence_s: 0.5,
        }
    }
}

/// Removes leading/trailing silence and caps internal silent stretches.
///
/// Silence is detected per non-overlapping RMS window; the edges of each
/// silent stretch are then refined sample by sample.
pub fn trim_silence(clip: &AudioClip, cfg: &TrimConfig) -> Result<AudioClip> {
    let window = samples_for(cfg.window_s, clip.sample_rate()).max(1);
    let threshold = 10f64.powf(cfg.threshold_db / 20.0) as f32;
    let cap = samples_for(cfg.max_internal_silence_s, clip.sample_rate());
    let x = clip.samples();
    let quiet = |i: usize| x[i].abs() < threshold;

    let loud: Vec<bool> = x
        .chunks(window)
        .map(|w| {
            let ms = w.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / w.len() as f64;
            ms.sqrt() >= threshold as f64
        })
        .collect();
    let first = loud.iter().position(|&l| l).ok_or(Error::NoSignal)?;
    let last = loud.iter().rposition(|&l| l).unwrap();

    let mut start = first * window;
    let mut end = ((last + 1) * window).min(x.len());
    while start < end && quiet(start) {
        start += 1;
    }
    while end > start && quiet(end - 1) {
        end -= 1;
    }

    let mut out = Vec::with_capacity(end - start);
    let mut cursor = start;
    let mut w = first + 1;
    while w < last {
        if loud[w] {
            w += 1;
            continue;
        }
        let run_end = (w..=last).find(|&i| loud[i]).unwrap();
        let mut a = w * window;
        let mut b = run_end * window;
        while a > cursor && quiet(a - 1) {
            a -= 1;
        }
        while b < end && quiet(b) {
            b += 1;
        }
        out.extend_from_slice(&x[cursor..a]);
        out.extend_from_slice(&x[a..a + (b - a).min(cap)]);
        cursor = b;
        w = run_end;
    }
    out.extend_from_slice(&x[cursor..end]);
    clip.with_samples(out)
}

/// Loops a short clip until it lasts at least `min_s` seconds.
pub fn ensure_min_duration(clip: &AudioClip, min_s: f64) -> AudioClip {
    let needed = samples_for(min_s, clip.sample_rate());
    if clip.len() >= needed {
        return clip.clone();
    }
    let copies = needed.div_ceil(clip.len());
    let samples = clip.samples().repeat(copies);
    clip.with_samples(samples).expect("looped clip is non-empty")
}

/// Cuts a contiguous `dur_s` segment at a uniformly random offset.
///
/// Returns the segment and its start offset in samples.
pub fn random_segment<R: Rng + ?Sized>(
    clip: &AudioClip,
    dur_s: f64,
    rng: &mut R,
) -> Result<(AudioClip, usize)> {
    let n = samples_for(dur_s, clip.sample_rate());
    if n == 0 {
        return Err(Error::InvalidArgument("segment duration must be positive".into()));
    }
    if clip.len() < n {
        return Err(Error::TooShort {
            needed: n,
            available: clip.len(),
        });
    }
    let offset = rng.random_range(0..=clip.len() - n);
    let seg = clip.with_samples(clip.samples()[offset..offset + n].to_vec())?;
    Ok((seg, offset))
}

/// Scales the clip so that its largest absolute sample is exactly 1.0.
pub fn peak_normalize(clip: &AudioClip) -> Result<AudioClip> {
    let peak = clip.peak();
    if peak == 0.0 {
        return Err(Error::NoSignal);
    }
    // Division (not multiplication by 1/peak) makes the peak sample exactly 1.0.
    clip.with_samples(clip.samples().iter().map(|s| s / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tone(seconds: f64, amp: f32) -> Vec<f32> {
        (0..samples_for(seconds, CANONICAL_RATE))
            .map(|n| amp * (2.0 * std::f32::consts::PI * 440.0 * n as f32 / 22050.0).sin())
            .collect()
    }

    fn clip(samples: Vec<f32>) -> AudioClip {
        AudioClip::canonical(samples, "test").unwrap()
    }

    #[test]
    fn trim_removes_leading_silence() {
        let mut s = vec![0.0; samples_for(3.0, CANONICAL_RATE)];
        s.extend(tone(2.0, 0.5));
        let out = trim_silence(&clip(s), &TrimConfig::default()).unwrap();
        assert!((out.duration_s() - 2.0).abs() <= 0.001, "{}", out.duration_s());
    }

    #[test]
    fn trim_caps_internal_silence() {
        let mut s = tone(1.0, 0.5);
        s.extend(vec![0.0; samples_for(1.5, CANONICAL_RATE)]);
        s.extend(tone(1.0, 0.5));
        let out = trim_silence(&clip(s), &TrimConfig::default()).unwrap();
        // 2 s of tone plus the capped gap.
        assert!((out.duration_s() - 2.5).abs() <= 0.001, "{}", out.duration_s());
        assert!(out.len() <= 2 * 22050 + 11025);
    }

    #[test]
    fn trim_rejects_all_silence() {
        let s = vec![0.0; 22050];
        assert!(matches!(trim_silence(&clip(s), &TrimConfig::default()), Err(Error::NoSignal)));
    }

    #[test]
    fn loops_short_clips() {
        let three = clip(tone(3.0, 0.5));
        assert_eq!(ensure_min_duration(&three, 8.0).len(), 3 * 66_150);
        let five = clip(tone(5.0, 0.5));
        assert_eq!(ensure_min_duration(&five, 8.0).len(), 220_500);
        let eight = clip(tone(8.0, 0.5));
        assert_eq!(ensure_min_duration(&eight, 8.0), eight);
    }

    #[test]
    fn segment_of_exact_length_is_whole_clip() {
        let c = clip(tone(8.0, 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (seg, offset) = random_segment(&c, 8.0, &mut rng).unwrap();
        assert_eq!(offset, 0);
        assert_eq!(seg, c);
    }

    #[test]
    fn segment_too_short_errors() {
        let c = clip(tone(3.0, 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(random_segment(&c, 8.0, &mut rng), Err(Error::TooShort { .. })));
    }

    #[test]
    fn segment_is_seed_deterministic() {
        let c = clip(tone(20.0, 0.5));
        let a = random_segment(&c, 8.0, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_segment(&c, 8.0, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.samples(), b.0.samples());
    }

    #[test]
    fn segment_offsets_cover_range() {
        let c = clip(vec![0.1; samples_for(16.0, CANONICAL_RATE)]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut offsets: Vec<f64> = (0..10_000)
            .map(|_| random_segment(&c, 8.0, &mut rng).unwrap().1 as f64 / 22050.0)
            .collect();
        offsets.push(0.0);
        offsets.push(8.0);
        offsets.sort_by(f64::total_cmp);
        let max_gap = offsets.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_gap <= 0.5, "largest gap {max_gap}");
    }

    #[test]
    fn peak_normalization() {
        let c = clip(vec![0.5, -0.25, 0.1]);
        let n = peak_normalize(&c).unwrap();
        assert_eq!(n.samples(), &[1.0, -0.5, 0.2]);
        assert_eq!(peak_normalize(&n).unwrap(), n);
        assert!(matches!(peak_normalize(&clip(vec![0.0; 4])), Err(Error::NoSignal)));
    }
}
