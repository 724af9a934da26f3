//! Seeded synthetic datasets of moving bars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetManifest, FrameFormat, ManifestConfig, ManifestEntry};
use crate::error::{Error, Result};
use crate::features::Video;

/// Direction a class's bar travels in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Left,
    Right,
    Up,
    Down,
    Static,
}

impl std::str::FromStr for Motion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Motion::Left),
            "right" => Ok(Motion::Right),
            "up" => Ok(Motion::Up),
            "down" => Ok(Motion::Down),
            "static" => Ok(Motion::Static),
            other => Err(Error::InvalidParameter(format!("unknown motion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClass {
    pub label: String,
    pub motion: Motion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: Vec<SyntheticClass>,
    pub per_class: usize,
    /// `(W, H, T)`.
    pub dims: (usize, usize, usize),
    pub seed: u64,
    /// Bar thickness range in pixels.
    pub thickness: (f64, f64),
    /// Speed range in pixels per frame.
    pub speed: (f64, f64),
    /// Standard deviation of additive pixel noise.
    pub noise: f64,
}

impl SyntheticSpec {
    /// Bars labelled by their motion name, with default jitter.
    pub fn bars(motions: &[Motion], per_class: usize, dims: (usize, usize, usize), seed: u64) -> Self {
        let classes = motions
            .iter()
            .map(|&m| SyntheticClass {
                label: format!("{m:?}").to_ascii_lowercase(),
                motion: m,
            })
            .collect();
        SyntheticSpec {
            classes,
            per_class,
            dims,
            seed,
            thickness: (3.0, 6.0),
            speed: (0.75, 1.5),
            noise: 0.02,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::InvalidParameter("per_class must be at least 1".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidParameter("no classes given".into()));
        }
        let (w, h, t) = self.dims;
        if w < 4 || h < 4 || t < 2 {
            return Err(Error::InvalidParameter(format!("dims {w}x{h}x{t} are too small")));
        }
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if !range_ok(self.thickness) || !range_ok(self.speed) || !(self.noise >= 0.0) {
            return Err(Error::InvalidParameter("invalid thickness, speed or noise".into()));
        }
        Ok(())
    }
}

/// A generated sample, as 8-bit frames.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub label: String,
    pub dims: (usize, usize, usize),
    pub frames: Vec<Vec<u8>>,
}

impl SyntheticVideo {
    /// Intensities scaled to `[0, 1]`, as a loader would see them.
    pub fn to_video(&self) -> Result<Video> {
        let (w, h, t) = self.dims;
        let pixels = self.frames.iter().flatten().map(|&p| p as f64 / 255.0).collect();
        Video::new(w, h, t, pixels)
    }
}

/// Samples in class order, `per_class` of each.
pub fn generate_videos(spec: &SyntheticSpec) -> Result<Vec<SyntheticVideo>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.classes.len() * spec.per_class);
    for class in &spec.classes {
        for _ in 0..spec.per_class {
            out.push(SyntheticVideo {
                label: class.label.clone(),
                dims: spec.dims,
                frames: render(spec, class.motion, &mut rng),
            });
        }
    }
    Ok(out)
}

fn render(spec: &SyntheticSpec, motion: Motion, rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    let (w, h, t) = spec.dims;
    let thickness = rng.random_range(spec.thickness.0..=spec.thickness.1);
    let speed = match motion {
        Motion::Static => 0.0,
        _ => rng.random_range(spec.speed.0..=spec.speed.1),
    };
    let (axis_len, sign) = match motion {
        Motion::Left => (w, -1.0),
        Motion::Right | Motion::Static => (w, 1.0),
        Motion::Up => (h, -1.0),
        Motion::Down => (h, 1.0),
    };
    // Keep the whole path inside the frame when it fits.
    let travel = speed * (t - 1) as f64;
    let room = (axis_len as f64 - thickness - travel).max(0.0);
    let offset = rng.random_range(0.0..=room);
    let start = if sign > 0.0 { offset } else { offset + travel };
    let background = rng.random_range(0.05..0.2);
    let foreground = rng.random_range(0.7..0.95);

    (0..t)
        .map(|frame| {
            let lo = start + sign * speed * frame as f64;
            let hi = lo + thickness;
            let mut px = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let c = match motion {
                        Motion::Up | Motion::Down => y,
                        _ => x,
                    } as f64;
                    // Fraction of the pixel [c, c + 1) covered by the bar.
                    let cover = (hi.min(c + 1.0) - lo.max(c)).clamp(0.0, 1.0);
                    let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise;
                    let v = background + (foreground - background) * cover + noise;
                    px.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
            px
        })
        .collect()
}

/// Writes binary PGM frames under `out_dir` plus `manifest.json`, and returns the manifest.
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<DatasetManifest> {
    let videos = generate_videos(spec)?;
    let (w, h, _) = spec.dims;
    let mut entries = Vec::with_capacity(videos.len());
    for (i, video) in videos.iter().enumerate() {
        let rel = PathBuf::from(format!("{}_{i:04}", video.label));
        let dir = out_dir.join(&rel);
        fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        for (t, frame) in video.frames.iter().enumerate() {
            let path = dir.join(format!("frame_{t:04}.pgm"));
            write_pgm(&path, w, h, frame)?;
        }
        entries.push(ManifestEntry {
            path: rel,
            label: video.label.clone(),
            fold: None,
            crop: None,
        });
    }
    let mut manifest = DatasetManifest::new(
        ManifestConfig {
            resize: None,
            frame_format: FrameFormat::Pgm,
        },
        entries,
    );
    manifest.save(&out_dir.join("manifest.json"))?;
    manifest.root = out_dir.to_path_buf();
    Ok(manifest)
}

fn write_pgm(path: &Path, w: usize, h: usize, pixels: &[u8]) -> Result<()> {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
