//! Event annotations, per-frame label matrices and the TSV label format.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wav::write_atomic;

/// Frame hop of label and probability matrices, in seconds.
pub const FRAME_HOP_S: f64 = 0.010;
/// Frames in an 8 s example.
pub const EXAMPLE_FRAMES: usize = 802;

/// Slack for float comparisons against timeline limits.
const TIME_EPS: f64 = 1e-9;

/// An annotated class. Column order in frame matrices follows declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Music,
    Speech,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Music, Label::Speech];

    pub fn column(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Music => "music",
            Label::Speech => "speech",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "music" => Ok(Label::Music),
            "speech" => Ok(Label::Speech),
            other => Err(Error::InvalidArgument(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub onset: f64,
    pub offset: f64,
    pub label: Label,
}

impl Event {
    pub fn new(onset: f64, offset: f64, label: Label) -> Self {
        Event { onset, offset, label }
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// Events sorted by onset, with same-label overlaps merged.
///
/// Offsets are exclusive. Events of the same label that touch or overlap
/// are merged; different labels may overlap freely.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventList {
    events: Vec<Event>,
}

impl EventList {
    pub fn new(events: impl IntoIterator<Item = Event>) -> Result<Self> {
        let mut events: Vec<Event> = events.into_iter().collect();
        for e in &events {
            if !(e.onset.is_finite() && e.offset.is_finite()) || e.onset < 0.0 || e.onset >= e.offset {
                return Err(Error::InvalidArgument(format!(
                    "invalid event {:.3}-{:.3} ({})",
                    e.onset, e.offset, e.label
                )));
            }
        }
        events.sort_by(|a, b| a.label.cmp(&b.label).then(a.onset.total_cmp(&b.onset)));
        let mut merged: Vec<Event> = Vec::with_capacity(events.len());
        for e in events {
            match merged.last_mut() {
                Some(last) if last.label == e.label && e.onset <= last.offset => {
                    last.offset = last.offset.max(e.offset);
                }
                _ => merged.push(e),
            }
        }
        merged.sort_by(|a, b| a.onset.total_cmp(&b.onset).then(a.label.cmp(&b.label)));
        Ok(EventList { events: merged })
    }

    pub fn empty() -> Self {
        EventList::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of(&self, label: Label) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.label == label)
    }

    /// Latest offset, or 0 for an empty list.
    pub fn end(&self) -> f64 {
        self.events.iter().fold(0.0, |m, e| m.max(e.offset))
    }

    /// Moves every event by `dt` seconds, clipping to `[0, limit]` and dropping
    /// events that vanish.
    pub fn shifted(&self, dt: f64, limit: f64) -> Self {
        let moved = self.events.iter().filter_map(|e| {
            let onset = (e.onset + dt).clamp(0.0, limit);
            let offset = (e.offset + dt).clamp(0.0, limit);
            (onset < offset).then(|| Event::new(onset, offset, e.label))
        });
        EventList::new(moved).expect("clipped events stay valid")
    }
}

/// Binary activity per frame, columns (music, speech).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    pub hop_s: f64,
    pub rows: Vec<[bool; 2]>,
}

impl FrameLabels {
    pub fn zeros(n_frames: usize, hop_s: f64) -> Self {
        FrameLabels {
            hop_s,
            rows: vec![[false; 2]; n_frames],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, label: Label) -> impl Iterator<Item = bool> + '_ {
        self.rows.iter().map(move |r| r[label.column()])
    }
}

fn frame_center(i: usize, hop_s: f64) -> f64 {
    (i as f64 + 0.5) * hop_s
}

/// First frame index whose centre is at or after `t`. Times within
/// `TIME_EPS` of a centre count as on it.
pub(crate) fn first_center_at_or_after(t: f64, hop_s: f64) -> usize {
    let u = t / hop_s - 0.5;
    let k = u.round();
    let u = if k >= 0.0 && (t - frame_center(k as usize, hop_s)).abs() <= TIME_EPS {
        k
    } else {
        u
    };
    u.ceil().max(0.0) as usize
}

/// Marks frame `i` active for a label iff its centre lies inside an event of that label.
pub fn events_to_frames(events: &EventList, n_frames: usize, hop_s: f64) -> Result<FrameLabels> {
    let limit = n_frames as f64 * hop_s;
    let mut frames = FrameLabels::zeros(n_frames, hop_s);
    for e in events.events() {
        if e.offset > limit + TIME_EPS {
            return Err(Error::EventOutOfRange {
                onset: e.onset,
                offset: e.offset,
                limit,
            });
        }
        let start = first_center_at_or_after(e.onset, hop_s).min(n_frames);
        let end = first_center_at_or_after(e.offset, hop_s).min(n_frames);
        for row in &mut frames.rows[start..end] {
            row[e.label.column()] = true;
        }
    }
    Ok(frames)
}

/// Turns each maximal run of active frames into one event.
pub fn frames_to_events(frames: &FrameLabels) -> EventList {
    let hop = frames.hop_s;
    let mut events = Vec::new();
    for label in Label::ALL {
        let mut run_start = None;
        for (i, active) in frames.column(label).chain(std::iter::once(false)).enumerate() {
            match (active, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    events.push(Event::new(s as f64 * hop, i as f64 * hop, label));
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    EventList::new(events).expect("runs are non-empty")
}

/// Renders events as `onset<TAB>offset<TAB>label` lines with millisecond precision.
pub fn format_annotations(events: &EventList) -> String {
    let mut out = String::new();
    for e in events.events() {
        let _ = writeln!(out, "{:.3}\t{:.3}\t{}", e.onset, e.offset, e.label);
    }
    out
}

/// Parses the TSV label format. Blank lines and `#` comments are skipped.
pub fn parse_annotations(text: &str, path: &Path) -> Result<EventList> {
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [onset, offset, label] = fields[..] else {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        };
        let onset: f64 = onset.parse().map_err(|_| err(format!("bad onset `{onset}`")))?;
        let offset: f64 = offset.parse().map_err(|_| err(format!("bad offset `{offset}`")))?;
        let label: Label = label.parse().map_err(|_| err(format!("unknown label `{label}`")))?;
        if !(onset.is_finite() && offset.is_finite()) || onset < 0.0 || onset >= offset {
            return Err(err(format!("invalid interval {onset}-{offset}")));
        }
        events.push(Event::new(onset, offset, label));
    }
    EventList::new(events)
}

pub fn read_annotations(path: &Path) -> Result<EventList> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, path)
}

pub fn write_annotations(path: &Path, events: &EventList) -> Result<()> {
    let text = format_annotations(events);
    write_atomic(path, |tmp| fs::write(tmp, &text).map_err(|e| Error::io(tmp, e)))
}
