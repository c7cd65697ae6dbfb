#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use radiomix::corpus::{index_corpus, CorpusIndex, CorpusLayout};
use radiomix::demo::{write_demo_corpus, DemoCorpusSpec};
use radiomix::synth::{Synthesizer, Variant, VariantConfig};
use tempfile::TempDir;

/// Demo corpus shared by all tests of one binary.
pub fn demo_corpus() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        write_demo_corpus(dir.path(), &DemoCorpusSpec::default()).unwrap();
        dir
    })
    .path()
}

pub fn demo_index() -> CorpusIndex {
    index_corpus(demo_corpus(), &CorpusLayout::default()).unwrap()
}

pub fn synthesizer(variant: Variant) -> Synthesizer {
    Synthesizer::new(demo_index(), VariantConfig::new(variant)).unwrap()
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    v
}

/// SHA-256 over file names and contents of a directory, in name order.
pub fn dir_digest(dir: &Path) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in files_in(dir) {
        h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&p).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

use radiomix::labels::{Event, EventList, Label};
use rand::Rng;

/// Random events on a millisecond grid inside `[0, duration_ms]`.
pub fn random_events<R: Rng>(rng: &mut R, duration_ms: u32, max_per_label: usize) -> Vec<Event> {
    let mut out = Vec::new();
    for label in Label::ALL {
        for _ in 0..rng.random_range(0..=max_per_label) {
            let a = rng.random_range(0..duration_ms);
            let b = rng.random_range(a + 1..=duration_ms);
            out.push(Event::new(a as f64 / 1000.0, b as f64 / 1000.0, label));
        }
    }
    out
}

pub fn random_list<R: Rng>(rng: &mut R, duration_ms: u32, max_per_label: usize) -> EventList {
    EventList::new(random_events(rng, duration_ms, max_per_label)).unwrap()
}

/// Naive per-segment TP/FP/FN per class, in integer microseconds.
/// Returns `[[tp, fp, fn]; 2]` indexed by label column.
pub fn brute_force_counts(reference: &[Event], prediction: &[Event], duration_ms: u32, segment_ms: u32) -> [[u64; 3]; 2] {
    let us = |t: f64| (t * 1e6).round() as i64;
    let seg = segment_ms as i64 * 1000;
    let n = (duration_ms as i64 * 1000 + seg - 1) / seg;
    let active = |events: &[Event], label: Label, i: i64| {
        events
            .iter()
            .any(|e| e.label == label && us(e.onset) < (i + 1) * seg && us(e.offset) > i * seg)
    };
    let mut out = [[0u64; 3]; 2];
    for label in Label::ALL {
        for i in 0..n {
            match (active(reference, label, i), active(prediction, label, i)) {
                (true, true) => out[label.column()][0] += 1,
                (false, true) => out[label.column()][1] += 1,
                (true, false) => out[label.column()][2] += 1,
                _ => {}
            }
        }
    }
    out
}

/// A handcrafted smoothing case under the default thresholds.
#[derive(serde::Deserialize)]
pub struct SmoothingCase {
    pub name: String,
    pub input: Vec<(f64, f64, String)>,
    pub expected: Vec<(f64, f64, String)>,
}

fn to_list(rows: &[(f64, f64, String)]) -> EventList {
    EventList::new(rows.iter().map(|(a, b, l)| Event::new(*a, *b, l.parse().unwrap()))).unwrap()
}

impl SmoothingCase {
    pub fn input(&self) -> EventList {
        to_list(&self.input)
    }

    pub fn expected(&self) -> EventList {
        to_list(&self.expected)
    }
}

pub fn smoothing_cases() -> Vec<SmoothingCase> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/smoothing_cases.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
