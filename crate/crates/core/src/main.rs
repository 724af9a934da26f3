use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use cov3d::boost::{det_curve, BoostConfig, LabeledVideo, Mapper};
use cov3d::harness::dataset::{load_video, DatasetManifest};
use cov3d::harness::eval::{cross_validate_manifest, prepare_video};
use cov3d::harness::persist::summarize;
use cov3d::harness::{generate_synthetic, load_model, save_model, Motion, SyntheticSpec};
use cov3d::windows::WindowGrid;
use cov3d::{DescriptorExtractor, Error, Result};

/// Video classification with spatio-temporal covariance descriptors.
///
/// The integral-tensor memory budget can be overridden with the
/// COV3D_MEMORY_BUDGET environment variable (bytes).
#[derive(Parser)]
#[command(name = "cov3d", version)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a one-vs-one model on every manifest entry.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        boost: BoostArgs,
    },
    /// Predict labels of manifest entries or frame directories.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "videos")]
        manifest: Option<PathBuf>,
        /// Frame directories.
        #[arg(long = "video", num_args = 1..)]
        videos: Vec<PathBuf>,
        /// Resize frames to WIDTHxHEIGHT when reading --video directories.
        #[arg(long, value_parser = parse_dims)]
        resize: Option<(usize, usize)>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation; writes a JSON report.
    CrossValidate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        boost: BoostArgs,
    },
    /// DET curves of a model's pairwise classifiers as CSV.
    DetCurve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Restrict to one pair, given as POSITIVE,NEGATIVE.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(String, String)>,
        /// Evenly spaced thresholds added to the per-sample ones.
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write a seeded moving-bar dataset with its manifest.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "left,right,up")]
        motions: Vec<Motion>,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a JSON summary of a model file.
    InspectModel {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct BoostArgs {
    /// JSON file with a full or partial training config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    detection_rate: Option<f64>,
    #[arg(long)]
    rejection_rate: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Same-class neighbours k of the adjacency graph.
    #[arg(long, short = 'k')]
    neighbours: Option<usize>,
    /// Projection dimension r.
    #[arg(long, short = 'r')]
    projection_dim: Option<usize>,
    /// Kernel bandwidth; the median pairwise distance when unset.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    min_frac: Option<f64>,
    #[arg(long)]
    step_frac: Option<f64>,
    /// Windows drawn per round; 0 searches the whole grid.
    #[arg(long)]
    window_subsample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// wrlpp, rlpp, upper-triangle, identity-tangent or karcher-tangent.
    #[arg(long, value_parser = parse_mapper)]
    mapper: Option<Mapper>,
    #[arg(long)]
    distance_cache_limit: Option<usize>,
}

impl BoostArgs {
    fn build(&self) -> Result<BoostConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                serde_json::from_str(&text)?
            }
            None => BoostConfig::default(),
        };
        let set = |dst: &mut f64, v: Option<f64>| *dst = v.unwrap_or(*dst);
        set(&mut c.detection_rate, self.detection_rate);
        set(&mut c.rejection_rate, self.rejection_rate);
        set(&mut c.margin, self.margin);
        set(&mut c.grid.min_frac, self.min_frac);
        set(&mut c.grid.step_frac, self.step_frac);
        c.max_iters = self.max_iters.unwrap_or(c.max_iters);
        c.neighbours = self.neighbours.unwrap_or(c.neighbours);
        c.projection_dim = self.projection_dim.or(c.projection_dim);
        c.sigma = self.sigma.or(c.sigma);
        c.window_subsample = self.window_subsample.unwrap_or(c.window_subsample);
        c.seed = self.seed.unwrap_or(c.seed);
        c.mapper = self.mapper.unwrap_or(c.mapper);
        c.distance_cache_limit = self.distance_cache_limit.unwrap_or(c.distance_cache_limit);
        check_grid(c.grid)?;
        c.validate()?;
        Ok(c)
    }
}

fn check_grid(g: WindowGrid) -> Result<()> {
    let ok = |f: f64| f > 0.0 && f <= 1.0;
    if ok(g.min_frac) && ok(g.step_frac) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("window fractions must lie in (0, 1]".into()))
    }
}

fn parse_mapper(s: &str) -> std::result::Result<Mapper, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    Ok((
        w.trim().parse().map_err(|e| format!("{e}"))?,
        h.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_pair(s: &str) -> std::result::Result<(String, String), String> {
    let (a, b) = s.split_once(',').ok_or("expected POSITIVE,NEGATIVE")?;
    Ok((a.to_string(), b.to_string()))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        context: path.display().to_string(),
        source: e,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::load(path)?;
    manifest.validate()?;
    Ok(manifest)
}

fn prepare_manifest(manifest: &DatasetManifest) -> Result<Vec<DescriptorExtractor>> {
    manifest
        .entries
        .par_iter()
        .map(|e| prepare_video(&manifest.load_entry(e)?))
        .collect()
}

#[derive(Serialize)]
struct Prediction {
    video: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    predicted: String,
    scores: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Train { manifest, out, boost } => {
            let config = boost.build()?;
            let manifest = load_manifest(&manifest)?;
            let videos = prepare_manifest(&manifest)?;
            let samples: Vec<LabeledVideo> = videos
                .iter()
                .zip(&manifest.entries)
                .map(|(video, e)| LabeledVideo { video, label: &e.label })
                .collect();
            let model = cov3d::boost::train_multiclass(&samples, &config)?;
            save_model(&model, &out)?;
            emit(None, &json(&summarize(&model))?)
        }
        Command::Predict {
            model,
            manifest,
            videos,
            resize,
            out,
        } => {
            let model = load_model(&model)?;
            let inputs: Vec<(PathBuf, Option<String>, cov3d::Video)> = match manifest {
                Some(path) => {
                    let m = load_manifest(&path)?;
                    m.entries
                        .iter()
                        .map(|e| Ok((m.resolve(e), Some(e.label.clone()), m.load_entry(e)?)))
                        .collect::<Result<_>>()?
                }
                None if videos.is_empty() => {
                    return Err(Error::InvalidParameter("give --manifest or --video".into()))
                }
                None => videos
                    .iter()
                    .map(|p| Ok((p.clone(), None, load_video(p, resize)?)))
                    .collect::<Result<_>>()?,
            };
            let predictions = inputs
                .into_par_iter()
                .map(|(video, label, v)| {
                    let prepared = prepare_video(&v)?;
                    let scores = model.scores(&prepared)?;
                    let predicted = model.predict(&prepared)?.to_string();
                    Ok(Prediction {
                        video,
                        label,
                        predicted,
                        scores,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(out.as_deref(), &json(&predictions)?)
        }
        Command::CrossValidate {
            manifest,
            folds,
            out,
            boost,
        } => {
            let config = boost.build()?;
            let manifest = load_manifest(&manifest)?;
            let report = cross_validate_manifest(&manifest, &config, folds, config.seed)?;
            emit(out.as_deref(), &json(&report)?)
        }
        Command::DetCurve {
            model,
            manifest,
            pair,
            points,
            out,
        } => {
            let model = load_model(&model)?;
            let manifest = load_manifest(&manifest)?;
            let videos = prepare_manifest(&manifest)?;
            let mut csv = String::from("positive,negative,threshold,false_positive_rate,miss_rate\n");
            let mut matched = false;
            for c in &model.classifiers {
                if let Some(p) = &pair {
                    if (&p.0, &p.1) != (&c.positive_label, &c.negative_label) {
                        continue;
                    }
                }
                matched = true;
                let (subset, positives): (Vec<&DescriptorExtractor>, Vec<bool>) = videos
                    .iter()
                    .zip(&manifest.entries)
                    .filter(|(_, e)| e.label == c.positive_label || e.label == c.negative_label)
                    .map(|(v, e)| (v, e.label == c.positive_label))
                    .unzip();
                for point in det_curve(c, &subset, &positives, points)? {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        c.positive_label, c.negative_label, point.threshold, point.false_positive_rate, point.miss_rate
                    ));
                }
            }
            if !matched {
                return Err(Error::InvalidParameter("no classifier for the requested pair".into()));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Synth {
            out,
            motions,
            per_class,
            width,
            height,
            frames,
            noise,
            seed,
        } => {
            let mut spec = SyntheticSpec::bars(&motions, per_class, (width, height, frames), seed);
            spec.noise = noise;
            let manifest = generate_synthetic(&spec, &out)?;
            eprintln!("wrote {} videos to {}", manifest.entries.len(), out.display());
            Ok(())
        }
        Command::InspectModel { model } => emit(None, &json(&summarize(&load_model(&model)?))?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
