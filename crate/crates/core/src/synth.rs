//! Example synthesis: single-class segments, speech over a ducked music
//! bed, and two-segment examples joined by a normal or cross-fade
//! transition.
//!
//! Every random choice for example `i` comes from ChaCha stream
//! `i * 16 + k` seeded by the master seed: `k = 0` draws the plan and
//! `k = 1..` the source material of successive attempts. The plan never
//! changes across retries, so redrawing a bad source does not bias the
//! class balance.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{samples_for, AudioClip, CANONICAL_RATE};
use crate::corpus::{
    decode_and_standardize, ensure_min_duration, peak_normalize, random_segment, trim_silence,
    ClassLabel, CorpusIndex, TrimConfig,
};
use crate::error::{Error, Result};
use crate::fades::{ramp, FadeCurve, FadeDirection, FadeSpec};
use crate::labels::{write_annotations, Event, EventList, Label};
use crate::loudness::{gain_for_target_ld, loudness_difference};
use crate::wav::{write_atomic, write_pcm16};

pub const EXAMPLE_S: f64 = 8.0;
pub const EXAMPLE_SAMPLES: usize = 176_400;

const SPEC_EPS: f64 = 1e-9;
const STREAMS_PER_EXAMPLE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Single-class examples only.
    #[serde(rename = "d-OF")]
    OnlyFiles,
    /// Adds speech over a loudness-ducked music bed; no transitions.
    #[serde(rename = "d-OFB")]
    OnlyFilesBed,
    /// Full synthesis, bed level set by a random peak gain.
    #[serde(rename = "d-NN")]
    NoNormalization,
    /// Full synthesis.
    #[serde(rename = "d-DS")]
    DataSynthesis,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::OnlyFiles,
        Variant::OnlyFilesBed,
        Variant::NoNormalization,
        Variant::DataSynthesis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::OnlyFiles => "d-OF",
            Variant::OnlyFilesBed => "d-OFB",
            Variant::NoNormalization => "d-NN",
            Variant::DataSynthesis => "d-DS",
        }
    }

    pub fn allows_beds(self) -> bool {
        self != Variant::OnlyFiles
    }

    pub fn allows_transitions(self) -> bool {
        matches!(self, Variant::NoNormalization | Variant::DataSynthesis)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}` (d-OF, d-OFB, d-NN, d-DS)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub variant: Variant,
    /// Loudness difference range for ducked beds, LU.
    pub ld_min: f64,
    pub ld_max: f64,
    pub p_transition: f64,
    pub max_gap_s: f64,
    /// Range of the transition time.
    pub transition_min_s: f64,
    pub transition_max_s: f64,
    /// Material guaranteed after a normal transition's gap.
    pub min_tail_s: f64,
    /// Bed peak gain range for d-NN.
    pub nn_gain_min: f64,
    pub nn_gain_max: f64,
    pub max_attempts: u32,
    pub trim: TrimConfig,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig::new(Variant::DataSynthesis)
    }
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        VariantConfig {
            variant,
            ld_min: 7.0,
            ld_max: 18.0,
            p_transition: 0.5,
            max_gap_s: 2.0,
            transition_min_s: 1.5,
            transition_max_s: 6.5,
            min_tail_s: 0.5,
            nn_gain_min: 0.1,
            nn_gain_max: 1.0,
            max_attempts: 10,
            trim: TrimConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.ld_min.is_finite() && self.ld_max.is_finite() && self.ld_min <= self.ld_max) {
            return bad("ld_min must not exceed ld_max");
        }
        if !(0.0..=1.0).contains(&self.p_transition) {
            return bad("p_transition must lie in [0, 1]");
        }
        if self.max_gap_s.is_nan() || self.max_gap_s < 0.0 {
            return bad("max_gap_s must be non-negative");
        }
        if !(0.0 < self.transition_min_s
            && self.transition_min_s <= self.transition_max_s
            && self.transition_max_s < EXAMPLE_S)
        {
            return bad("transition range must lie inside (0, 8) s");
        }
        if !(self.min_tail_s >= 0.0 && self.min_tail_s < EXAMPLE_S - self.transition_max_s + SPEC_EPS) {
            return bad("min_tail_s must fit after the latest transition");
        }
        if !(0.0 < self.nn_gain_min && self.nn_gain_min <= self.nn_gain_max && self.nn_gain_max <= 1.0) {
            return bad("d-NN gain range must lie in (0, 1]");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1");
        }
        Ok(())
    }
}

/// What plays in one segment of an example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassState {
    Music,
    Speech,
    Noise,
    SpeechOverMusic,
}

impl ClassState {
    pub const ALL: [ClassState; 4] = [
        ClassState::Music,
        ClassState::Speech,
        ClassState::Noise,
        ClassState::SpeechOverMusic,
    ];
    const SINGLE: [ClassState; 3] = [ClassState::Music, ClassState::Speech, ClassState::Noise];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BedLevel {
    /// Speech loudness minus music loudness, LU.
    Loudness { ld: f64 },
    /// Linear gain on the peak-normalized bed.
    PeakGain { gain: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub state: ClassState,
    pub bed: Option<BedLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Normal,
    Crossfade,
}

/// Timing of a transition. For a normal transition the outgoing fade ends
/// at `t_transition` and the incoming fade starts `gap_s` later. For a
/// cross-fade both fades share one duration and are centred on
/// `t_transition`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub kind: TransitionKind,
    pub t_transition: f64,
    pub fade_out: FadeSpec,
    pub fade_in: FadeSpec,
    pub gap_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePlan {
    pub segments: Vec<SegmentPlan>,
    pub transition: Option<TransitionSpec>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn draw_segment<R: Rng + ?Sized>(cfg: &VariantConfig, rng: &mut R) -> SegmentPlan {
    let states: &[ClassState] = if cfg.variant.allows_beds() {
        &ClassState::ALL
    } else {
        &ClassState::SINGLE
    };
    let state = states[rng.random_range(0..states.len())];
    let bed = (state == ClassState::SpeechOverMusic).then(|| match cfg.variant {
        Variant::NoNormalization => BedLevel::PeakGain {
            gain: uniform(rng, cfg.nn_gain_min, cfg.nn_gain_max),
        },
        _ => BedLevel::Loudness {
            ld: uniform(rng, cfg.ld_min, cfg.ld_max),
        },
    });
    SegmentPlan { state, bed }
}

/// Draws class states, transition and every random parameter of one example.
pub fn choose_example_plan<R: Rng + ?Sized>(cfg: &VariantConfig, rng: &mut R) -> ExamplePlan {
    let with_transition = cfg.variant.allows_transitions() && rng.random_bool(cfg.p_transition);
    if !with_transition {
        return ExamplePlan {
            segments: vec![draw_segment(cfg, rng)],
            transition: None,
        };
    }
    let first = draw_segment(cfg, rng);
    let second = draw_segment(cfg, rng);

    let kind = if rng.random_bool(0.5) {
        TransitionKind::Normal
    } else {
        TransitionKind::Crossfade
    };
    let curve = FadeCurve::ALL[rng.random_range(0..FadeCurve::ALL.len())];
    let t = uniform(rng, cfg.transition_min_s, cfg.transition_max_s);
    let (fade_out_s, fade_in_s, gap_s) = match kind {
        TransitionKind::Normal => {
            let gap_max = cfg.max_gap_s.min(EXAMPLE_S - t - cfg.min_tail_s).max(0.0);
            let gap = uniform(rng, 0.0, gap_max);
            let fade_out = uniform(rng, 0.0, t);
            let fade_in = uniform(rng, 0.0, EXAMPLE_S - t - gap);
            (fade_out, fade_in, gap)
        }
        TransitionKind::Crossfade => {
            let overlap = uniform(rng, 0.0, 2.0 * t.min(EXAMPLE_S - t));
            (overlap, overlap, 0.0)
        }
    };
    ExamplePlan {
        segments: vec![first, second],
        transition: Some(TransitionSpec {
            kind,
            t_transition: t,
            fade_out: FadeSpec {
                curve,
                duration_s: fade_out_s,
                direction: FadeDirection::Out,
            },
            fade_in: FadeSpec {
                curve,
                duration_s: fade_in_s,
                direction: FadeDirection::In,
            },
            gap_s,
        }),
    }
}

impl TransitionSpec {
    /// Checks that every extent fits inside `[0, total_s]`.
    pub fn validate(&self, total_s: f64) -> Result<()> {
        let t = self.t_transition;
        let out = self.fade_out.duration_s;
        let inn = self.fade_in.duration_s;
        let fits = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "transition {what} does not fit in {total_s} s: {self:?}"
                )))
            }
        };
        fits(t.is_finite() && out.is_finite() && inn.is_finite() && self.gap_s.is_finite(), "values")?;
        fits(out >= 0.0 && inn >= 0.0 && self.gap_s >= 0.0, "durations")?;
        fits(0.0 < t && t < total_s, "time")?;
        match self.kind {
            TransitionKind::Normal => {
                fits(out <= t + SPEC_EPS, "fade-out")?;
                fits(t + self.gap_s <= total_s + SPEC_EPS, "gap")?;
                fits(inn <= total_s - t - self.gap_s + SPEC_EPS, "fade-in")
            }
            TransitionKind::Crossfade => {
                fits((out - inn).abs() <= SPEC_EPS, "shared fade")?;
                fits(self.gap_s == 0.0, "gap")?;
                fits(t - out / 2.0 >= -SPEC_EPS && t + out / 2.0 <= total_s + SPEC_EPS, "overlap")
            }
        }
    }
}

/// Gain envelopes of the outgoing and incoming segment over `n_total` samples.
pub fn transition_envelopes(spec: &TransitionSpec, n_total: usize, rate: u32) -> Result<[Vec<f32>; 2]> {
    spec.validate(n_total as f64 / rate as f64)?;
    let at = |s: f64| samples_for(s, rate).min(n_total);
    let mut env_a = vec![0.0f32; n_total];
    let mut env_b = vec![0.0f32; n_total];
    let curve_out = spec.fade_out.curve;
    let curve_in = spec.fade_in.curve;
    match spec.kind {
        TransitionKind::Normal => {
            let a_end = at(spec.t_transition);
            let n_out = at(spec.fade_out.duration_s).min(a_end);
            let b_start = at(spec.t_transition + spec.gap_s);
            let n_in = at(spec.fade_in.duration_s).min(n_total - b_start);
            env_a[..a_end].fill(1.0);
            let ramp_out = ramp(curve_out, n_out);
            for (e, g) in env_a[a_end - n_out..a_end].iter_mut().zip(ramp_out.iter().rev()) {
                *e = *g;
            }
            env_b[b_start..].fill(1.0);
            for (e, g) in env_b[b_start..b_start + n_in].iter_mut().zip(ramp(curve_in, n_in)) {
                *e = g;
            }
        }
        TransitionKind::Crossfade => {
            let start = at((spec.t_transition - spec.fade_out.duration_s / 2.0).max(0.0));
            let n = at(spec.fade_out.duration_s).min(n_total - start);
            let end = start + n;
            env_a[..end].fill(1.0);
            for (e, g) in env_a[start..end].iter_mut().zip(ramp(curve_out, n).iter().rev()) {
                *e = *g;
            }
            env_b[start..].fill(1.0);
            for (e, g) in env_b[start..end].iter_mut().zip(ramp(curve_in, n)) {
                *e = g;
            }
        }
    }
    Ok([env_a, env_b])
}

/// Mixes the first 8 s of `a` and `b` through the transition envelopes.
pub fn render_transition(a: &AudioClip, b: &AudioClip, spec: &TransitionSpec) -> Result<AudioClip> {
    for clip in [a, b] {
        if clip.len() < EXAMPLE_SAMPLES {
            return Err(Error::TooShort {
                needed: EXAMPLE_SAMPLES,
                available: clip.len(),
            });
        }
    }
    let [env_a, env_b] = transition_envelopes(spec, EXAMPLE_SAMPLES, a.sample_rate())?;
    let mixed = (0..EXAMPLE_SAMPLES)
        .map(|i| {
            (a.samples()[i] as f64 * env_a[i] as f64 + b.samples()[i] as f64 * env_b[i] as f64) as f32
        })
        .collect();
    AudioClip::new(mixed, a.sample_rate(), "transition")
}

/// Speech over a music bed ducked to `ld` LU below it.
#[derive(Debug, Clone)]
pub struct DuckedBed {
    pub mix: AudioClip,
    pub music_gain: f64,
    /// Loudness difference of the stems as mixed.
    pub measured_ld: f64,
}

pub fn render_ducked_bed(speech: &AudioClip, music: &AudioClip, ld: f64) -> Result<DuckedBed> {
    if speech.len() != music.len() || speech.sample_rate() != music.sample_rate() {
        return Err(Error::InvalidArgument(
            "speech and music stems must have equal length and rate".into(),
        ));
    }
    let music_gain = gain_for_target_ld(speech, music, ld)?;
    let ducked = music.scaled(music_gain as f32);
    let measured_ld = loudness_difference(speech, &ducked)?.0;
    let mix = speech
        .samples()
        .iter()
        .zip(ducked.samples())
        .map(|(s, m)| s + m)
        .collect();
    Ok(DuckedBed {
        mix: AudioClip::new(mix, speech.sample_rate(), "ducked_bed")?,
        music_gain,
        measured_ld,
    })
}

/// Where a stem's audio came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub class: ClassLabel,
    /// Path relative to the corpus root.
    pub path: String,
    /// Start of the 8 s segment within the trimmed, looped file, in samples.
    pub offset: usize,
    /// Index of the example segment (0 or 1) the stem belongs to.
    pub segment: usize,
}

/// Provenance of one example; also the manifest line format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub index: u64,
    pub variant: Variant,
    pub seed: u64,
    pub classes: Vec<ClassState>,
    pub transition: Option<TransitionSpec>,
    /// Target loudness difference of each ducked bed, LU.
    pub ld: Vec<f64>,
    /// Loudness difference measured after ducking.
    pub ld_measured: Vec<f64>,
    /// Linear gain applied to each bed.
    pub bed_gain: Vec<f64>,
    pub sources: Vec<SourceRef>,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub struct SynthExample {
    pub audio: AudioClip,
    pub events: EventList,
    pub meta: ExampleMeta,
}

/// Per-example random stream.
pub fn example_rng(master_seed: u64, index: u64, substream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(STREAMS_PER_EXAMPLE) + substream);
    rng
}

/// Envelope support: `[first nonzero, last nonzero + 1)` in samples.
pub fn active_span(envelope: &[f32]) -> Option<(usize, usize)> {
    let first = envelope.iter().position(|&g| g != 0.0)?;
    let last = envelope.iter().rposition(|&g| g != 0.0)?;
    Some((first, last + 1))
}

/// Standardized, trimmed clips keyed by path, evicted oldest-first.
struct ClipCache {
    budget: usize,
    used: usize,
    clips: HashMap<PathBuf, Arc<AudioClip>>,
    order: VecDeque<PathBuf>,
}

impl ClipCache {
    fn new(budget: usize) -> Self {
        ClipCache {
            budget,
            used: 0,
            clips: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    fn get(&self, path: &Path) -> Option<Arc<AudioClip>> {
        self.clips.get(path).cloned()
    }

    fn insert(&mut self, path: PathBuf, clip: Arc<AudioClip>) {
        if clip.len() > self.budget || self.clips.contains_key(&path) {
            return;
        }
        while self.used + clip.len() > self.budget {
            let Some(old) = self.order.pop_front() else { break };
            if let Some(c) = self.clips.remove(&old) {
                self.used -= c.len();
            }
        }
        self.used += clip.len();
        self.order.push_back(path.clone());
        self.clips.insert(path, clip);
    }
}

/// One stem of a segment: a peak-normalized source and its mixing gain.
struct Stem {
    label: Option<Label>,
    clip: AudioClip,
    gain: f64,
    segment: usize,
}

/// Synthesizes examples from an indexed corpus.
pub struct Synthesizer {
    corpus: CorpusIndex,
    cfg: VariantConfig,
    cache: Mutex<ClipCache>,
}

impl Synthesizer {
    /// Default cache budget: 2^26 samples (256 MiB of f32).
    pub const DEFAULT_CACHE_SAMPLES: usize = 1 << 26;

    pub fn new(corpus: CorpusIndex, cfg: VariantConfig) -> Result<Self> {
        Self::with_cache(corpus, cfg, Self::DEFAULT_CACHE_SAMPLES)
    }

    pub fn with_cache(corpus: CorpusIndex, cfg: VariantConfig, cache_samples: usize) -> Result<Self> {
        cfg.validate()?;
        for class in ClassLabel::ALL {
            if corpus.entries(class).is_empty() {
                return Err(Error::EmptyClass(class.to_string()));
            }
        }
        Ok(Synthesizer {
            corpus,
            cfg,
            cache: Mutex::new(ClipCache::new(cache_samples)),
        })
    }

    pub fn config(&self) -> &VariantConfig {
        &self.cfg
    }

    pub fn corpus(&self) -> &CorpusIndex {
        &self.corpus
    }

    fn standardized(&self, path: &Path) -> Result<Arc<AudioClip>> {
        if let Some(c) = self.cache.lock().unwrap().get(path) {
            return Ok(c);
        }
        let clip = decode_and_standardize(path)?;
        let trimmed = trim_silence(&clip, &self.cfg.trim)?;
        let looped = Arc::new(ensure_min_duration(&trimmed, EXAMPLE_S));
        self.cache.lock().unwrap().insert(path.to_path_buf(), looped.clone());
        Ok(looped)
    }

    fn draw_source<R: Rng + ?Sized>(
        &self,
        class: ClassLabel,
        segment: usize,
        rng: &mut R,
    ) -> Result<(AudioClip, SourceRef)> {
        let entry = self.corpus.pick(class, rng)?;
        let clip = self.standardized(&entry.path)?;
        let (seg, offset) = random_segment(&clip, EXAMPLE_S, rng)?;
        let normalized = peak_normalize(&seg)?;
        let rel = entry
            .path
            .strip_prefix(&self.corpus.root)
            .unwrap_or(&entry.path)
            .to_string_lossy()
            .into_owned();
        Ok((
            normalized,
            SourceRef {
                class,
                path: rel,
                offset,
                segment,
            },
        ))
    }

    /// Plan for example `index`, independent of any source draws.
    pub fn plan(&self, index: u64, master_seed: u64) -> ExamplePlan {
        choose_example_plan(&self.cfg, &mut example_rng(master_seed, index, 0))
    }

    pub fn synthesize_example(&self, index: u64, master_seed: u64) -> Result<SynthExample> {
        self.synthesize_plan(&self.plan(index, master_seed), index, master_seed)
    }

    /// Renders a given plan with the source streams of example `index`.
    pub fn synthesize_plan(&self, plan: &ExamplePlan, index: u64, master_seed: u64) -> Result<SynthExample> {
        let mut last_err = None;
        for attempt in 0..self.cfg.max_attempts {
            let mut rng = example_rng(master_seed, index, 1 + attempt as u64);
            match self.render_plan(plan, &mut rng) {
                Ok((audio, events, mut meta)) => {
                    meta.index = index;
                    meta.seed = master_seed;
                    meta.attempts = attempt + 1;
                    return Ok(SynthExample { audio, events, meta });
                }
                Err(e) => {
                    debug!("example {index} attempt {attempt}: {e}");
                    last_err = Some(e);
                }
            }
        }
        Err(Error::SynthesisExhausted {
            index,
            attempts: self.cfg.max_attempts,
            last: last_err.map(|e| e.to_string()).unwrap_or_default(),
        })
    }

    fn render_plan<R: Rng + ?Sized>(
        &self,
        plan: &ExamplePlan,
        rng: &mut R,
    ) -> Result<(AudioClip, EventList, ExampleMeta)> {
        let mut stems = Vec::new();
        let mut meta = ExampleMeta {
            index: 0,
            variant: self.cfg.variant,
            seed: 0,
            classes: plan.segments.iter().map(|s| s.state).collect(),
            transition: plan.transition,
            ld: Vec::new(),
            ld_measured: Vec::new(),
            bed_gain: Vec::new(),
            sources: Vec::new(),
            attempts: 0,
        };

        for (seg_idx, seg) in plan.segments.iter().enumerate() {
            let mut take = |class: ClassLabel, rng: &mut R| -> Result<AudioClip> {
                let (clip, source) = self.draw_source(class, seg_idx, rng)?;
                meta.sources.push(source);
                Ok(clip)
            };
            match seg.state {
                ClassState::Music | ClassState::Speech | ClassState::Noise => {
                    let (class, label) = match seg.state {
                        ClassState::Music => (ClassLabel::Music, Some(Label::Music)),
                        ClassState::Speech => (ClassLabel::Speech, Some(Label::Speech)),
                        _ => (ClassLabel::Noise, None),
                    };
                    let clip = take(class, rng)?;
                    stems.push(Stem { label, clip, gain: 1.0, segment: seg_idx });
                }
                ClassState::SpeechOverMusic => {
                    let speech = take(ClassLabel::Speech, rng)?;
                    let music = take(ClassLabel::Music, rng)?;
                    let gain = match seg.bed {
                        Some(BedLevel::Loudness { ld }) => {
                            let bed = render_ducked_bed(&speech, &music, ld)?;
                            meta.ld.push(ld);
                            meta.ld_measured.push(bed.measured_ld);
                            bed.music_gain
                        }
                        Some(BedLevel::PeakGain { gain }) => gain,
                        None => 1.0,
                    };
                    meta.bed_gain.push(gain);
                    stems.push(Stem { label: Some(Label::Speech), clip: speech, gain: 1.0, segment: seg_idx });
                    stems.push(Stem { label: Some(Label::Music), clip: music, gain, segment: seg_idx });
                }
            }
        }

        let envelopes: Vec<Vec<f32>> = match &plan.transition {
            None => vec![vec![1.0; EXAMPLE_SAMPLES]],
            Some(spec) => transition_envelopes(spec, EXAMPLE_SAMPLES, CANONICAL_RATE)?.into(),
        };

        let mut mix = vec![0.0f64; EXAMPLE_SAMPLES];
        let mut events = Vec::new();
        for stem in &stems {
            let env = &envelopes[stem.segment];
            for ((m, &x), &g) in mix.iter_mut().zip(stem.clip.samples()).zip(env) {
                *m += x as f64 * stem.gain * g as f64;
            }
            if let (Some(label), true) = (stem.label, stem.gain > 0.0) {
                if let Some((start, end)) = active_span(env) {
                    events.push(Event::new(
                        start as f64 / CANONICAL_RATE as f64,
                        end as f64 / CANONICAL_RATE as f64,
                        label,
                    ));
                }
            }
        }
        let mixed = AudioClip::canonical(mix.into_iter().map(|v| v as f32).collect(), "example")?;
        let audio = peak_normalize(&mixed)?;
        Ok((audio, EventList::new(events)?, meta))
    }
}

/// Options for [`generate_dataset`].
#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    pub count: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn example_stem(index: u64) -> String {
    format!("ex_{index:06}")
}

/// Writes `ex_<index>.wav` / `.tsv` pairs and `manifest.jsonl` to `out_dir`.
pub fn generate_dataset(synth: &Synthesizer, opts: &GenerateOptions, out_dir: &Path) -> Result<Vec<ExampleMeta>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let results: Vec<Result<ExampleMeta>> = pool.install(|| {
        (0..opts.count)
            .into_par_iter()
            .map(|index| {
                let ex = synth.synthesize_example(index, opts.master_seed)?;
                let stem = example_stem(index);
                write_pcm16(&out_dir.join(format!("{stem}.wav")), &ex.audio)?;
                write_annotations(&out_dir.join(format!("{stem}.tsv")), &ex.events)?;
                if index % 1000 == 999 {
                    info!("synthesized {} examples", index + 1);
                }
                Ok(ex.meta)
            })
            .collect()
    });

    let mut metas = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(m) => metas.push(m),
            Err(e) => {
                warn!("generation failed; partial output left in {}", out_dir.display());
                return Err(e);
            }
        }
    }
    let mut manifest = String::new();
    for m in &metas {
        manifest.push_str(&serde_json::to_string(m).expect("metadata serializes"));
        manifest.push('\n');
    }
    let path = out_dir.join(MANIFEST_FILE);
    write_atomic(&path, |tmp| fs::write(tmp, &manifest).map_err(|e| Error::io(tmp, e)))?;
    Ok(metas)
}

/// Parses a manifest written by [`generate_dataset`].
pub fn read_manifest(path: &Path) -> Result<Vec<ExampleMeta>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
