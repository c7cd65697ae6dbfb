use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use radiomix::corpus::{decode_and_standardize, index_corpus, ClassLabel, CorpusLayout};
use radiomix::Error;

fn write_wav(path: &Path, rate: u32, channels: u16, frames: &[Vec<f32>]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let spec = WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).unwrap();
    for f in frames {
        for &s in f {
            w.write_sample(s).unwrap();
        }
    }
    w.finalize().unwrap();
}

fn tone_frames(rate: u32, channels: u16, seconds: f64, freq: f64) -> Vec<Vec<f32>> {
    let n = (seconds * rate as f64).round() as usize;
    (0..n)
        .map(|i| {
            let v = (0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32;
            vec![v; channels as usize]
        })
        .collect()
}

fn populate(root: &Path, counts: [(&str, usize); 3]) {
    for (class, n) in counts {
        for i in 0..n {
            let path = root.join(class).join(format!("sub{}/f{i}.wav", i % 2));
            write_wav(&path, 22_050, 1, &tone_frames(22_050, 1, 0.5 + i as f64 * 0.25, 300.0));
        }
    }
}

#[test]
fn counts_per_class() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path(), [("music", 3), ("speech", 2), ("noise", 1)]);
    let index = index_corpus(dir.path(), &CorpusLayout::default()).unwrap();
    assert_eq!(index.entries(ClassLabel::Music).len(), 3);
    assert_eq!(index.entries(ClassLabel::Speech).len(), 2);
    assert_eq!(index.entries(ClassLabel::Noise).len(), 1);
    let frames: usize = (0..3).map(|i| tone_frames(22_050, 1, 0.5 + i as f64 * 0.25, 300.0).len()).sum();
    assert!((index.total_duration_s(ClassLabel::Music) - frames as f64 / 22_050.0).abs() < 1e-9);
    assert!(index.warnings.is_empty());
}

#[test]
fn missing_class_directory_is_named() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path(), [("music", 1), ("speech", 1), ("noise", 0)]);
    match index_corpus(dir.path(), &CorpusLayout::default()) {
        Err(Error::MissingClassDir { class, path }) => {
            assert_eq!(class, "noise");
            assert!(path.ends_with("noise"));
        }
        other => panic!("expected a missing-directory error, got {other:?}"),
    }
}

#[test]
fn corrupt_file_is_skipped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path(), [("music", 9), ("speech", 1), ("noise", 1)]);
    let bad = dir.path().join("music/broken.wav");
    std::fs::write(&bad, b"RIFF\x10\x00\x00\x00WAVEjunkjunkjunk").unwrap();
    let index = index_corpus(dir.path(), &CorpusLayout::default()).unwrap();
    assert_eq!(index.entries(ClassLabel::Music).len(), 9);
    assert_eq!(index.warnings.len(), 1);
    assert_eq!(index.warnings[0].path, bad);
}

#[test]
fn class_with_only_broken_files_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path(), [("music", 1), ("speech", 1), ("noise", 0)]);
    std::fs::create_dir_all(dir.path().join("noise")).unwrap();
    std::fs::write(dir.path().join("noise/x.wav"), b"nope").unwrap();
    assert!(matches!(
        index_corpus(dir.path(), &CorpusLayout::default()),
        Err(Error::EmptyClass(c)) if c == "noise"
    ));
}

#[test]
fn stereo_44k_becomes_mono_22k() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.wav");
    write_wav(&path, 44_100, 2, &tone_frames(44_100, 2, 4.0, 440.0));
    let clip = decode_and_standardize(&path).unwrap();
    assert_eq!(clip.sample_rate(), 22_050);
    assert_eq!(clip.len(), 88_200);
}

#[test]
fn canonical_mono_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.wav");
    let frames = tone_frames(22_050, 1, 1.0, 523.0);
    write_wav(&path, 22_050, 1, &frames);
    let clip = decode_and_standardize(&path).unwrap();
    let want: Vec<f32> = frames.iter().map(|f| f[0]).collect();
    assert_eq!(clip.samples(), &want[..]);
}

#[test]
fn resampled_tone_keeps_its_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.wav");
    write_wav(&path, 44_100, 1, &tone_frames(44_100, 1, 1.0, 997.0));
    let clip = decode_and_standardize(&path).unwrap();

    // Naive DFT over a window taken away from the edges.
    let n = 8192;
    let x = &clip.samples()[4000..4000 + n];
    let magnitude = |k: usize| {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (i, &v) in x.iter().enumerate() {
            let ph = -2.0 * PI * (k * i) as f64 / n as f64;
            re += v as f64 * ph.cos();
            im += v as f64 * ph.sin();
        }
        re.hypot(im)
    };
    let peak = (1..n / 2)
        .map(|k| (k, magnitude(k)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    let expected = 997.0 * n as f64 / 22_050.0;
    assert!((peak as f64 - expected).abs() <= 1.0, "peak bin {peak}, expected {expected:.2}");
}
