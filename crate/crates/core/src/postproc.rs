//! From per-window frame probabilities to clean event lists.
//!
//! Long recordings are analysed in 8 s windows every 6 s. The first and
//! last second of each window are discarded, except at the outer edges of
//! the recording where nothing else covers them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{frames_to_events, Event, EventList, FrameLabels, Label, EXAMPLE_FRAMES, FRAME_HOP_S};
use crate::melf::Matrix;

pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// Slack used when comparing durations and gaps against thresholds.
const DURATION_EPS: f64 = 1e-9;

/// Sigmoid outputs per frame, columns (music, speech).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameProbs {
    pub hop_s: f64,
    pub rows: Vec<[f32; 2]>,
}

impl FrameProbs {
    pub fn new(rows: Vec<[f32; 2]>, hop_s: f64) -> Result<Self> {
        if let Some(i) = rows
            .iter()
            .position(|r| !r.iter().all(|p| (0.0..=1.0).contains(p)))
        {
            return Err(Error::InvalidArgument(format!(
                "probability outside [0, 1] at frame {i}"
            )));
        }
        Ok(FrameProbs { hop_s, rows })
    }

    pub fn n_frames(&self) -> usize {
        self.rows.len()
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.cols != 2 {
            return Err(Error::Format(format!(
                "probability matrix must have 2 columns, has {}",
                m.cols
            )));
        }
        FrameProbs::new(
            m.data.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
            FRAME_HOP_S,
        )
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.rows.len(),
            2,
            self.rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .expect("two columns per row")
    }
}

/// Window geometry, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLayout {
    pub window_frames: usize,
    pub hop_frames: usize,
    /// Frames dropped at each end of an interior window.
    pub edge_frames: usize,
}

impl Default for WindowLayout {
    fn default() -> Self {
        WindowLayout {
            window_frames: EXAMPLE_FRAMES,
            hop_frames: 600,
            edge_frames: 100,
        }
    }
}

impl WindowLayout {
    /// Number of windows needed to cover `total_frames`.
    pub fn window_count(&self, total_frames: usize) -> usize {
        if total_frames <= self.window_frames {
            1
        } else {
            1 + (total_frames - self.window_frames).div_ceil(self.hop_frames)
        }
    }

    /// Recording length, in frames, implied by `n_windows` full windows.
    pub fn covered_frames(&self, n_windows: usize) -> usize {
        (n_windows.max(1) - 1) * self.hop_frames + self.window_frames
    }
}

/// Frames on the output timeline for a recording of `duration_s`.
pub fn recording_frames(duration_s: f64) -> usize {
    (duration_s / FRAME_HOP_S).round() as usize
}

/// Joins window predictions into one timeline of `total_frames` frames.
pub fn stitch_windows(windows: &[FrameProbs], total_frames: usize, layout: &WindowLayout) -> Result<FrameProbs> {
    let expected = layout.window_count(total_frames);
    if windows.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "{} windows given, a recording of {total_frames} frames needs {expected}",
            windows.len()
        )));
    }
    if let Some((i, w)) = windows
        .iter()
        .enumerate()
        .find(|(_, w)| w.n_frames() != layout.window_frames)
    {
        return Err(Error::InvalidArgument(format!(
            "window {i} has {} frames, expected {}",
            w.n_frames(),
            layout.window_frames
        )));
    }
    let last = windows.len() - 1;
    let mut rows = Vec::with_capacity(total_frames);
    for (w, window) in windows.iter().enumerate() {
        let start = w * layout.hop_frames;
        let lo = if w == 0 { 0 } else { layout.edge_frames };
        let hi = if w == last {
            total_frames - start
        } else {
            layout.edge_frames + layout.hop_frames
        };
        rows.extend_from_slice(&window.rows[lo..hi]);
    }
    debug_assert_eq!(rows.len(), total_frames);
    Ok(FrameProbs {
        hop_s: windows[0].hop_s,
        rows,
    })
}

/// Active iff `prob >= threshold`, per cell.
pub fn threshold_probs(probs: &FrameProbs, threshold: f32) -> FrameLabels {
    FrameLabels {
        hop_s: probs.hop_s,
        rows: probs
            .rows
            .iter()
            .map(|r| [r[0] >= threshold, r[1] >= threshold])
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub min_speech_s: f64,
    pub min_music_s: f64,
    pub max_gap_speech_s: f64,
    pub max_gap_music_s: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            min_speech_s: 1.3,
            min_music_s: 3.4,
            max_gap_speech_s: 0.4,
            max_gap_music_s: 0.6,
        }
    }
}

impl SmoothingConfig {
    pub fn min_duration(&self, label: Label) -> f64 {
        match label {
            Label::Music => self.min_music_s,
            Label::Speech => self.min_speech_s,
        }
    }

    pub fn max_gap(&self, label: Label) -> f64 {
        match label {
            Label::Music => self.max_gap_music_s,
            Label::Speech => self.max_gap_speech_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.min_speech_s,
            self.min_music_s,
            self.max_gap_speech_s,
            self.max_gap_music_s,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("smoothing thresholds must be positive".into()))
        }
    }
}

/// Per class: bridge gaps no longer than the max gap, then drop events
/// shorter than the minimum duration.
pub fn smooth_events(events: &EventList, cfg: &SmoothingConfig) -> EventList {
    let mut out = Vec::with_capacity(events.len());
    for label in Label::ALL {
        let max_gap = cfg.max_gap(label);
        let mut merged: Vec<Event> = Vec::new();
        for e in events.of(label) {
            match merged.last_mut() {
                Some(last) if e.onset - last.offset <= max_gap + DURATION_EPS => {
                    last.offset = last.offset.max(e.offset);
                }
                _ => merged.push(*e),
            }
        }
        let min = cfg.min_duration(label);
        out.extend(merged.into_iter().filter(|e| e.duration() >= min - DURATION_EPS));
    }
    EventList::new(out).expect("smoothing keeps events valid")
}

/// Stitch, threshold, convert to events and smooth.
pub fn postprocess(
    windows: &[FrameProbs],
    total_frames: usize,
    threshold: f32,
    smoothing: &SmoothingConfig,
) -> Result<EventList> {
    let stitched = stitch_windows(windows, total_frames, &WindowLayout::default())?;
    let labels = threshold_probs(&stitched, threshold);
    Ok(smooth_events(&frames_to_events(&labels), smoothing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_window(p: [f32; 2]) -> FrameProbs {
        FrameProbs::new(vec![p; EXAMPLE_FRAMES], FRAME_HOP_S).unwrap()
    }

    /// Window `w` whose row value encodes (window, local frame).
    fn tagged_window(w: usize) -> FrameProbs {
        let rows = (0..EXAMPLE_FRAMES)
            .map(|i| [w as f32 / 100.0, i as f32 / 1000.0])
            .collect();
        FrameProbs::new(rows, FRAME_HOP_S).unwrap()
    }

    #[test]
    fn single_window_kept_whole() {
        let out = stitch_windows(&[tagged_window(0)], EXAMPLE_FRAMES, &WindowLayout::default()).unwrap();
        assert_eq!(out, tagged_window(0));
    }

    #[test]
    fn two_windows_over_fourteen_seconds() {
        let total = recording_frames(14.0);
        assert_eq!(total, 1400);
        let layout = WindowLayout::default();
        assert_eq!(layout.window_count(total), 2);
        let out = stitch_windows(&[tagged_window(0), tagged_window(1)], total, &layout).unwrap();
        assert_eq!(out.n_frames(), 1400);
        // Seam at global frame 700: window 0 local 699, then window 1 local 100.
        assert_eq!(out.rows[699], [0.0, 0.699]);
        assert_eq!(out.rows[700], [0.01, 0.1]);
        assert_eq!(out.rows[1399], [0.01, 0.799]);
    }

    #[test]
    fn each_frame_comes_from_one_window_at_its_own_time() {
        let layout = WindowLayout::default();
        for total in [803, 1000, 1402, 2000, 3601, 6000] {
            let n = layout.window_count(total);
            let windows: Vec<_> = (0..n).map(tagged_window).collect();
            let out = stitch_windows(&windows, total, &layout).unwrap();
            assert_eq!(out.n_frames(), total);
            for (g, row) in out.rows.iter().enumerate() {
                let w = (row[0] * 100.0).round() as usize;
                let local = (row[1] * 1000.0).round() as usize;
                assert_eq!(w * 600 + local, g, "total {total}, frame {g}");
            }
        }
    }

    #[test]
    fn constant_windows_stitch_to_constant() {
        let windows = vec![constant_window([0.3, 0.8]); 4];
        let total = WindowLayout::default().covered_frames(4);
        let out = stitch_windows(&windows, total, &WindowLayout::default()).unwrap();
        assert!(out.rows.iter().all(|r| *r == [0.3, 0.8]));
    }

    #[test]
    fn wrong_window_count_errors() {
        let windows = vec![constant_window([0.0, 0.0]); 3];
        assert!(stitch_windows(&windows, 1400, &WindowLayout::default()).is_err());
        let short = FrameProbs::new(vec![[0.0, 0.0]; 10], FRAME_HOP_S).unwrap();
        assert!(stitch_windows(&[short], 10, &WindowLayout::default()).is_err());
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let p = FrameProbs::new(vec![[0.49, 0.5], [0.5, 0.49]], FRAME_HOP_S).unwrap();
        let l = threshold_probs(&p, 0.5);
        assert_eq!(l.rows, vec![[false, true], [true, false]]);
        let all = FrameProbs::new(vec![[0.49, 0.49]; 5], FRAME_HOP_S).unwrap();
        assert!(threshold_probs(&all, 0.5).rows.iter().all(|r| r == &[false, false]));
    }

    #[test]
    fn probabilities_are_validated() {
        assert!(FrameProbs::new(vec![[1.2, 0.0]], FRAME_HOP_S).is_err());
        assert!(FrameProbs::new(vec![[f32::NAN, 0.0]], FRAME_HOP_S).is_err());
    }

    #[test]
    fn merge_happens_before_removal() {
        let cfg = SmoothingConfig::default();
        let events = EventList::new([
            Event::new(0.0, 0.8, Label::Speech),
            Event::new(1.1, 1.9, Label::Speech),
        ])
        .unwrap();
        let merged_first = smooth_events(&events, &cfg);
        assert_eq!(merged_first.events(), &[Event::new(0.0, 1.9, Label::Speech)]);

        // Removing first would leave nothing.
        let removed_first: Vec<_> = events
            .events()
            .iter()
            .filter(|e| e.duration() >= cfg.min_speech_s)
            .collect();
        assert!(removed_first.is_empty());
    }

    #[test]
    fn defaults_are_positive() {
        SmoothingConfig::default().validate().unwrap();
        let bad = SmoothingConfig {
            min_music_s: 0.0,
            ..SmoothingConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
