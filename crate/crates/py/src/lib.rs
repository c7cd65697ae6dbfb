//! Python bindings. Audio crosses the boundary as lists of floats at
//! 22050 Hz; events as `(onset_s, offset_s, label)` tuples.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use radiomix::corpus::{index_corpus, ClassLabel, CorpusLayout};
use radiomix::demo::{write_demo_corpus, DemoCorpusSpec};
use radiomix::eval::segment_metrics as rm_segment_metrics;
use radiomix::fades::FadeCurve;
use radiomix::features::mel_spectrogram as rm_mel;
use radiomix::labels::{Event, EventList};
use radiomix::loudness;
use radiomix::postproc::{smooth_events as rm_smooth, SmoothingConfig};
use radiomix::synth::{generate_dataset, GenerateOptions, Synthesizer as RmSynth, Variant, VariantConfig};
use radiomix::{AudioClip, Error};

type EventTuple = (f64, f64, String);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::MissingClassDir { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn clip(samples: Vec<f32>, rate: u32) -> PyResult<AudioClip> {
    AudioClip::new(samples, rate, "python").map_err(py_err)
}

fn events_from(tuples: Vec<EventTuple>) -> PyResult<EventList> {
    let events = tuples
        .into_iter()
        .map(|(a, b, l)| Ok(Event::new(a, b, l.parse().map_err(py_err)?)))
        .collect::<PyResult<Vec<_>>>()?;
    EventList::new(events).map_err(py_err)
}

fn events_to(list: &EventList) -> Vec<EventTuple> {
    list.events()
        .iter()
        .map(|e| (e.onset, e.offset, e.label.to_string()))
        .collect()
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

/// Integrated loudness in LUFS of a mono signal.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate = 22050))]
fn integrated_loudness(py: Python<'_>, samples: Vec<f32>, sample_rate: u32) -> PyResult<f64> {
    let c = clip(samples, sample_rate)?;
    py.detach(|| loudness::integrated_loudness(&c)).map(|l| l.0).map_err(py_err)
}

/// Speech loudness minus music loudness, in LU.
#[pyfunction]
fn loudness_difference(speech: Vec<f32>, music: Vec<f32>) -> PyResult<f64> {
    loudness::loudness_difference(&clip(speech, 22_050)?, &clip(music, 22_050)?)
        .map(|l| l.0)
        .map_err(py_err)
}

/// Log-Mel spectrogram, one list of 80 values per 10 ms frame.
#[pyfunction]
fn mel_spectrogram(py: Python<'_>, samples: Vec<f32>) -> PyResult<Vec<Vec<f64>>> {
    let c = clip(samples, 22_050)?;
    let mel = py.detach(|| rm_mel(&c)).map_err(py_err)?;
    Ok((0..mel.n_frames).map(|i| mel.frame(i).to_vec()).collect())
}

/// Gain of a fade curve at normalized time `t`.
#[pyfunction]
fn fade_gain(curve: &str, t: f64) -> PyResult<f64> {
    let curve: FadeCurve = curve.parse().map_err(py_err)?;
    curve.gain(t).map_err(py_err)
}

/// Segment-based metrics as a nested dict.
#[pyfunction]
#[pyo3(signature = (reference, prediction, duration_s, segment_s = 0.010))]
fn segment_metrics(
    py: Python<'_>,
    reference: Vec<EventTuple>,
    prediction: Vec<EventTuple>,
    duration_s: f64,
    segment_s: f64,
) -> PyResult<Py<PyAny>> {
    let m = rm_segment_metrics(&events_from(reference)?, &events_from(prediction)?, duration_s, segment_s)
        .map_err(py_err)?;
    json_to_py(py, &serde_json::to_value(m).expect("metrics serialize"))
}

/// Gap merging followed by minimum-duration removal, per class.
#[pyfunction]
#[pyo3(signature = (events, min_speech_s = 1.3, min_music_s = 3.4, max_gap_speech_s = 0.4, max_gap_music_s = 0.6))]
fn smooth_events(
    events: Vec<EventTuple>,
    min_speech_s: f64,
    min_music_s: f64,
    max_gap_speech_s: f64,
    max_gap_music_s: f64,
) -> PyResult<Vec<EventTuple>> {
    let cfg = SmoothingConfig {
        min_speech_s,
        min_music_s,
        max_gap_speech_s,
        max_gap_music_s,
    };
    cfg.validate().map_err(py_err)?;
    Ok(events_to(&rm_smooth(&events_from(events)?, &cfg)))
}

/// Writes a small synthetic corpus with music/, speech/ and noise/ folders.
#[pyfunction]
#[pyo3(signature = (root, files_per_class = 6, seed = 0))]
fn write_demo(root: PathBuf, files_per_class: usize, seed: u64) -> PyResult<()> {
    let spec = DemoCorpusSpec {
        files_per_class,
        seed,
        ..DemoCorpusSpec::default()
    };
    write_demo_corpus(&root, &spec).map_err(py_err)
}

/// Example generator over an indexed corpus.
#[pyclass(frozen)]
struct Synthesizer {
    inner: RmSynth,
}

#[pymethods]
impl Synthesizer {
    #[new]
    #[pyo3(signature = (corpus, variant = "d-DS", ld_min = 7.0, ld_max = 18.0, p_transition = 0.5))]
    fn new(corpus: PathBuf, variant: &str, ld_min: f64, ld_max: f64, p_transition: f64) -> PyResult<Self> {
        let variant: Variant = variant.parse().map_err(py_err)?;
        let cfg = VariantConfig {
            ld_min,
            ld_max,
            p_transition,
            ..VariantConfig::new(variant)
        };
        let index = index_corpus(&corpus, &CorpusLayout::default()).map_err(py_err)?;
        Ok(Synthesizer {
            inner: RmSynth::new(index, cfg).map_err(py_err)?,
        })
    }

    /// Files per class.
    fn corpus_sizes(&self) -> Vec<(String, usize)> {
        ClassLabel::ALL
            .iter()
            .map(|c| (c.to_string(), self.inner.corpus().entries(*c).len()))
            .collect()
    }

    /// One example as `{"audio", "events", "meta"}`.
    fn example(&self, py: Python<'_>, index: u64, seed: u64) -> PyResult<Py<PyDict>> {
        let ex = py
            .detach(|| self.inner.synthesize_example(index, seed))
            .map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("audio", ex.audio.samples().to_vec())?;
        out.set_item("events", events_to(&ex.events))?;
        out.set_item("meta", json_to_py(py, &serde_json::to_value(&ex.meta).expect("meta serializes"))?)?;
        Ok(out.unbind())
    }

    /// Writes `count` examples and a manifest to `out`; returns the count.
    #[pyo3(signature = (out, count, seed, workers = None))]
    fn generate(&self, py: Python<'_>, out: PathBuf, count: u64, seed: u64, workers: Option<usize>) -> PyResult<usize> {
        let opts = GenerateOptions {
            count,
            master_seed: seed,
            workers,
        };
        py.detach(|| generate_dataset(&self.inner, &opts, &out))
            .map(|m| m.len())
            .map_err(py_err)
    }
}

#[pymodule]
fn pyradiomix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(integrated_loudness, m)?)?;
    m.add_function(wrap_pyfunction!(loudness_difference, m)?)?;
    m.add_function(wrap_pyfunction!(mel_spectrogram, m)?)?;
    m.add_function(wrap_pyfunction!(fade_gain, m)?)?;
    m.add_function(wrap_pyfunction!(segment_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_events, m)?)?;
    m.add_function(wrap_pyfunction!(write_demo, m)?)?;
    m.add_class::<Synthesizer>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
