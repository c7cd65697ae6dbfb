//! Segment-based precision, recall and F-measure.
//!
//! The timeline is cut into fixed segments (10 ms by default). A class is
//! active in a segment when any of its events overlaps the half-open
//! interval `[i * s, (i + 1) * s)`. True negatives never enter the scores.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::ops::{Add, AddAssign};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{read_annotations, Event, EventList, Label};

pub const DEFAULT_SEGMENT_S: f64 = 0.010;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Scores {
    pub fn from_counts(counts: Counts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        Scores {
            counts,
            precision,
            recall,
            f: f_measure(precision, recall),
        }
    }
}

/// Per-class counts, indexed by [`Label::column`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts(pub [Counts; 2]);

impl ClassCounts {
    pub fn get(&self, label: Label) -> Counts {
        self.0[label.column()]
    }

    pub fn total(&self) -> Counts {
        self.0[0] + self.0[1]
    }
}

impl AddAssign for ClassCounts {
    fn add_assign(&mut self, o: ClassCounts) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub segment_s: f64,
    pub music: Scores,
    pub speech: Scores,
    /// Micro-average: class counts pooled before the ratios.
    pub overall: Scores,
    /// Macro-average: mean of the class precision, recall and F.
    pub macro_average: MacroScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl SegmentMetrics {
    pub fn from_counts(counts: &ClassCounts, segment_s: f64) -> Self {
        let music = Scores::from_counts(counts.get(Label::Music));
        let speech = Scores::from_counts(counts.get(Label::Speech));
        SegmentMetrics {
            segment_s,
            music,
            speech,
            overall: Scores::from_counts(counts.total()),
            macro_average: MacroScores {
                precision: (music.precision + speech.precision) / 2.0,
                recall: (music.recall + speech.recall) / 2.0,
                f: (music.f + speech.f) / 2.0,
            },
        }
    }

    pub fn class(&self, label: Label) -> &Scores {
        match label {
            Label::Music => &self.music,
            Label::Speech => &self.speech,
        }
    }
}

/// Segments covering `duration_s`.
pub fn segment_count(duration_s: f64, segment_s: f64) -> usize {
    ((duration_s / segment_s) - TIME_EPS).ceil().max(0.0) as usize
}

/// `t / s`, snapped to the nearest integer when `t` lies within `TIME_EPS` of a boundary.
fn in_segments(t: f64, s: f64) -> f64 {
    let u = t / s;
    let k = u.round();
    if (t - k * s).abs() <= TIME_EPS {
        k
    } else {
        u
    }
}

/// First segment index `i` with `i * s >= t`.
fn first_start_at_or_after(t: f64, s: f64) -> usize {
    in_segments(t, s).ceil().max(0.0) as usize
}

/// First segment index `i` with `(i + 1) * s > t`.
fn first_end_after(t: f64, s: f64) -> usize {
    in_segments(t, s).floor().max(0.0) as usize
}

/// Activity of `label` per segment.
pub fn segment_activity(events: &[Event], label: Label, n_segments: usize, segment_s: f64) -> Vec<bool> {
    let mut active = vec![false; n_segments];
    for e in events.iter().filter(|e| e.label == label) {
        let start = first_end_after(e.onset, segment_s).min(n_segments);
        let end = first_start_at_or_after(e.offset, segment_s).min(n_segments);
        for a in &mut active[start..end.max(start)] {
            *a = true;
        }
    }
    active
}

fn check_inputs(events: &[Event], duration_s: f64) -> Result<()> {
    for e in events {
        if e.offset > duration_s + TIME_EPS {
            return Err(Error::EventOutOfRange {
                onset: e.onset,
                offset: e.offset,
                limit: duration_s,
            });
        }
    }
    Ok(())
}

/// TP/FP/FN per class over raw event slices.
pub fn segment_counts_raw(
    reference: &[Event],
    prediction: &[Event],
    duration_s: f64,
    segment_s: f64,
) -> Result<ClassCounts> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(segment_s > 0.0 && segment_s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "segment size must be positive, got {segment_s}"
        )));
    }
    check_inputs(reference, duration_s)?;
    check_inputs(prediction, duration_s)?;
    let n = segment_count(duration_s, segment_s);
    let mut counts = ClassCounts::default();
    for label in Label::ALL {
        let r = segment_activity(reference, label, n, segment_s);
        let p = segment_activity(prediction, label, n, segment_s);
        let c = &mut counts.0[label.column()];
        for (&ri, &pi) in r.iter().zip(&p) {
            match (ri, pi) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(counts)
}

pub fn segment_counts(
    reference: &EventList,
    prediction: &EventList,
    duration_s: f64,
    segment_s: f64,
) -> Result<ClassCounts> {
    segment_counts_raw(reference.events(), prediction.events(), duration_s, segment_s)
}

pub fn segment_metrics(
    reference: &EventList,
    prediction: &EventList,
    duration_s: f64,
    segment_s: f64,
) -> Result<SegmentMetrics> {
    let counts = segment_counts(reference, prediction, duration_s, segment_s)?;
    Ok(SegmentMetrics::from_counts(&counts, segment_s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub stem: String,
    pub duration_s: f64,
    pub metrics: SegmentMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub segment_s: f64,
    pub files: Vec<FileReport>,
    /// Counts summed over all files, then turned into scores.
    pub total: SegmentMetrics,
}

fn tsv_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut stems = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string());
            }
        }
    }
    Ok(stems)
}

/// Evaluates every `<stem>.tsv` in `pred_dir` against the same stem in `ref_dir`.
///
/// Each file is scored over `[0, max(last offset, one segment)]`; segments
/// past the last event only add true negatives, which do not affect scores.
pub fn evaluate_run(ref_dir: &Path, pred_dir: &Path, segment_s: f64) -> Result<RunReport> {
    let refs = tsv_stems(ref_dir)?;
    let preds = tsv_stems(pred_dir)?;
    if refs != preds {
        let mut missing = Vec::new();
        for s in refs.difference(&preds) {
            missing.push(format!("{}", pred_dir.join(format!("{s}.tsv")).display()));
        }
        for s in preds.difference(&refs) {
            missing.push(format!("{}", ref_dir.join(format!("{s}.tsv")).display()));
        }
        return Err(Error::StemMismatch(format!("missing {}", missing.join(", "))));
    }
    if refs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no .tsv files in {}",
            ref_dir.display()
        )));
    }
    let mut files = Vec::with_capacity(refs.len());
    let mut total = ClassCounts::default();
    for stem in refs {
        let file = |dir: &Path| -> PathBuf { dir.join(format!("{stem}.tsv")) };
        let reference = read_annotations(&file(ref_dir))?;
        let prediction = read_annotations(&file(pred_dir))?;
        let duration_s = reference.end().max(prediction.end()).max(segment_s);
        let counts = segment_counts(&reference, &prediction, duration_s, segment_s)?;
        total += counts;
        files.push(FileReport {
            stem,
            duration_s,
            metrics: SegmentMetrics::from_counts(&counts, segment_s),
        });
    }
    Ok(RunReport {
        segment_s,
        files,
        total: SegmentMetrics::from_counts(&total, segment_s),
    })
}

/// Human-readable summary table.
pub fn format_table(report: &RunReport, macro_overall: bool) -> String {
    let m = &report.total;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "segment-based metrics ({} files, {:.0} ms segments)",
        report.files.len(),
        report.segment_s * 1000.0
    );
    let _ = writeln!(
        out,
        "{:<10} {:>9} {:>9} {:>9} {:>10} {:>10} {:>10}",
        "class", "P (%)", "R (%)", "F (%)", "TP", "FP", "FN"
    );
    for (name, s) in [("music", &m.music), ("speech", &m.speech)] {
        let _ = writeln!(
            out,
            "{:<10} {:>9.2} {:>9.2} {:>9.2} {:>10} {:>10} {:>10}",
            name,
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f,
            s.counts.tp,
            s.counts.fp,
            s.counts.fn_
        );
    }
    if macro_overall {
        let a = &m.macro_average;
        let _ = writeln!(
            out,
            "{:<10} {:>9.2} {:>9.2} {:>9.2}",
            "overall*",
            100.0 * a.precision,
            100.0 * a.recall,
            100.0 * a.f
        );
        let _ = writeln!(out, "* macro-average over classes");
    } else {
        let s = &m.overall;
        let _ = writeln!(
            out,
            "{:<10} {:>9.2} {:>9.2} {:>9.2} {:>10} {:>10} {:>10}",
            "overall",
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f,
            s.counts.tp,
            s.counts.fp,
            s.counts.fn_
        );
    }
    out
}
