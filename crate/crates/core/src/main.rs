use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

use radiomix::config::RunConfig;
use radiomix::corpus::{decode_and_standardize, index_corpus, ClassLabel};
use radiomix::eval::{evaluate_run, format_table};
use radiomix::features::{FeatureConfig, MelExtractor};
use radiomix::labels::{write_annotations, FRAME_HOP_S};
use radiomix::loudness::integrated_loudness;
use radiomix::melf;
use radiomix::postproc::{postprocess, recording_frames, FrameProbs, WindowLayout};
use radiomix::synth::{generate_dataset, GenerateOptions, Synthesizer, Variant};
use radiomix::Error;

#[derive(Parser)]
#[command(name = "radiomix", version, about = "Synthetic radio audio for music/speech segmentation")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a corpus and report per-class file counts and durations.
    Index {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Write the index as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate a dataset of 8 s examples with annotations and a manifest.
    Synth(SynthArgs),
    /// Compute log-Mel features for a WAV file or every WAV in a directory.
    Featurize {
        #[arg(long = "in", value_name = "WAV_OR_DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Print integrated loudness in LUFS.
    Loudness { file: PathBuf },
    /// Turn per-window probability matrices into a smoothed annotation file.
    Postprocess {
        /// Directory of 802x2 `.melf` probability windows, taken in name order.
        #[arg(long, value_name = "DIR")]
        probs: PathBuf,
        #[arg(long, value_name = "TSV")]
        out: PathBuf,
        /// Recording length in seconds; defaults to the span the windows cover.
        #[arg(long, conflicts_with = "frames")]
        duration: Option<f64>,
        /// Recording length in 10 ms frames.
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        threshold: Option<f32>,
    },
    /// Segment-based precision, recall and F-measure of predictions.
    Evaluate {
        #[arg(long = "ref", value_name = "DIR")]
        reference: PathBuf,
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        #[arg(long)]
        segment_ms: Option<f64>,
        /// Also write the full report as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        /// Report the macro average as the overall score.
        #[arg(long = "macro")]
        macro_average: bool,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ld_min: Option<f64>,
    #[arg(long)]
    ld_max: Option<f64>,
    #[arg(long)]
    p_transition: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => 2,
            Error::MissingClassDir { .. } | Error::Config(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn require(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such file or directory", path.display())))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RADIOMIX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            require(path)?;
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Index { corpus, json } => {
            let root = corpus.or(cfg.corpus.clone()).ok_or_else(|| usage("--corpus is required"))?;
            require(&root)?;
            let index = index_corpus(&root, &cfg.layout)?;
            for class in ClassLabel::ALL {
                println!(
                    "{:<7} {:>6} files {:>10.1} s",
                    class.as_str(),
                    index.entries(class).len(),
                    index.total_duration_s(class)
                );
            }
            for w in &index.warnings {
                println!("skipped {}: {}", w.path.display(), w.reason);
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&index).expect("index serializes");
                fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Synth(args) => {
            if let Some(c) = args.corpus {
                cfg.corpus = Some(c);
            }
            if let Some(o) = args.out {
                cfg.out = Some(o);
            }
            if let Some(v) = args.variant {
                cfg.synth.variant = v;
            }
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(v) = args.ld_min {
                cfg.synth.ld_min = v;
            }
            if let Some(v) = args.ld_max {
                cfg.synth.ld_max = v;
            }
            if let Some(v) = args.p_transition {
                cfg.synth.p_transition = v;
            }
            if let Some(w) = args.workers {
                cfg.workers = Some(w);
            }
            cfg.validate()?;
            let root = cfg.corpus.clone().ok_or_else(|| usage("--corpus is required"))?;
            let out = cfg.out.clone().ok_or_else(|| usage("--out is required"))?;
            require(&root)?;

            let started = Instant::now();
            let index = index_corpus(&root, &cfg.layout)?;
            let synth = Synthesizer::new(index, cfg.synth)?;
            fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            let echo = out.join("run_config.toml");
            fs::write(&echo, cfg.to_toml()).map_err(|e| Error::Io { path: echo, source: e })?;
            let opts = GenerateOptions {
                count: args.count,
                master_seed: cfg.seed,
                workers: cfg.workers,
            };
            let metas = generate_dataset(&synth, &opts, &out)?;
            info!(
                "{} {} examples in {:.1} s",
                metas.len(),
                cfg.synth.variant,
                started.elapsed().as_secs_f64()
            );
            println!("wrote {} examples to {}", metas.len(), out.display());
        }
        Command::Featurize { input, out } => {
            require(&input)?;
            let inputs = wav_inputs(&input)?;
            if inputs.is_empty() {
                return Err(usage(format!("{}: no .wav files", input.display())));
            }
            fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            let extractor = MelExtractor::new(FeatureConfig::default());
            inputs.par_iter().try_for_each(|wav| -> Result<(), Error> {
                let clip = decode_and_standardize(wav)?;
                let mel = extractor.compute(&clip)?;
                let stem = wav.file_stem().expect("wav file has a name");
                melf::write(&out.join(stem).with_extension("melf"), &mel.to_matrix())
            })?;
            println!("wrote {} feature files to {}", inputs.len(), out.display());
        }
        Command::Loudness { file } => {
            require(&file)?;
            let clip = decode_and_standardize(&file)?;
            println!("{}", integrated_loudness(&clip)?);
        }
        Command::Postprocess {
            probs,
            out,
            duration,
            frames,
            threshold,
        } => {
            require(&probs)?;
            let threshold = threshold.unwrap_or(cfg.postprocess.threshold);
            cfg.postprocess.threshold = threshold;
            cfg.validate()?;
            let files = files_with_extension(&probs, "melf")?;
            if files.is_empty() {
                return Err(usage(format!("{}: no .melf files", probs.display())));
            }
            let windows = files
                .iter()
                .map(|p| FrameProbs::from_matrix(&melf::read(p)?))
                .collect::<Result<Vec<_>, Error>>()?;
            let layout = WindowLayout::default();
            let total = frames
                .or(duration.map(recording_frames))
                .unwrap_or_else(|| layout.covered_frames(windows.len()));
            let events = postprocess(&windows, total, threshold, &cfg.smoothing)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.into(), source: e })?;
            }
            write_annotations(&out, &events)?;
            println!(
                "{} events over {:.2} s written to {}",
                events.len(),
                total as f64 * FRAME_HOP_S,
                out.display()
            );
        }
        Command::Evaluate {
            reference,
            pred,
            segment_ms,
            json,
            macro_average,
        } => {
            require(&reference)?;
            require(&pred)?;
            if let Some(ms) = segment_ms {
                cfg.eval.segment_s = ms / 1000.0;
            }
            cfg.eval.macro_average |= macro_average;
            cfg.validate()?;
            let report = evaluate_run(&reference, &pred, cfg.eval.segment_s)?;
            print!("{}", format_table(&report, cfg.eval.macro_average));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
        }
    }
    Ok(())
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Io { path: dir.into(), source: e })? {
        let path = entry.map_err(|e| Error::Io { path: dir.into(), source: e })?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn wav_inputs(input: &Path) -> Result<Vec<PathBuf>, Error> {
    if input.is_dir() {
        files_with_extension(input, "wav")
    } else {
        if input.extension().is_none_or(|e| !e.eq_ignore_ascii_case("wav")) {
            warn!("{} has no .wav extension", input.display());
        }
        Ok(vec![input.to_path_buf()])
    }
}
