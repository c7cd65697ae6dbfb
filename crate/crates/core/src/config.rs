//! Run configuration shared by the command-line subcommands.
//!
//! A TOML file may set any subset of the keys below; missing keys take
//! their defaults and command-line flags override both.
//!
//! ```toml
//! corpus = "data/corpus"
//! out = "data/d-DS"
//! seed = 0
//! workers = 4
//!
//! [synth]
//! variant = "d-DS"
//! ld_min = 7.0
//! ld_max = 18.0
//! p_transition = 0.5
//!
//! [smoothing]
//! min_speech_s = 1.3
//! min_music_s = 3.4
//!
//! [eval]
//! segment_s = 0.01
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusLayout;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_SEGMENT_S;
use crate::postproc::{SmoothingConfig, DEFAULT_THRESHOLD};
use crate::synth::VariantConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub layout: CorpusLayout,
    pub synth: VariantConfig,
    pub smoothing: SmoothingConfig,
    pub postprocess: PostprocessConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub threshold: f32,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub segment_s: f64,
    pub macro_average: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            segment_s: DEFAULT_SEGMENT_S,
            macro_average: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(one_line(&e)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), one_line(&e))))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.smoothing.validate()?;
        if !(0.0..=1.0).contains(&self.postprocess.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        if !(self.eval.segment_s > 0.0 && self.eval.segment_s.is_finite()) {
            return Err(Error::Config("segment length must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

fn one_line(e: &toml::de::Error) -> String {
    e.message().to_string()
        + &e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default()
}
