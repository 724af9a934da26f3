//! Frame-directory videos and the JSON dataset manifest.

use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Video;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Which frame files a video directory is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    /// Any `.pgm` or `.png` file.
    #[default]
    Auto,
    Pgm,
    Png,
}

impl FrameFormat {
    fn accepts(self, path: &Path) -> bool {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        matches!(
            (self, ext.as_deref()),
            (FrameFormat::Auto, Some("pgm" | "png")) | (FrameFormat::Pgm, Some("pgm")) | (FrameFormat::Png, Some("png"))
        )
    }
}

/// Pixel rectangle cut out of every frame before resizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crop {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestConfig {
    /// Target `(width, height)` applied to every video after cropping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resize: Option<(usize, usize)>,
    #[serde(default)]
    pub frame_format: FrameFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Directory of frame files, relative to the manifest file unless absolute.
    pub path: PathBuf,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    /// Region of interest; frames are used whole when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<Crop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    #[serde(default)]
    pub config: ManifestConfig,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative entry paths are resolved against.
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(config: ManifestConfig, entries: Vec<ManifestEntry>) -> Self {
        DatasetManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config,
            entries,
            root: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::InvalidManifest(format!(
                "schema_version {} is not supported (expected {MANIFEST_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::InvalidManifest("no entries".into()));
        }
        if let Some(e) = self.entries.iter().find(|e| e.label.trim().is_empty()) {
            return Err(Error::InvalidManifest(format!("entry {} has an empty label", e.path.display())));
        }
        let with_fold = self.entries.iter().filter(|e| e.fold.is_some()).count();
        if with_fold != 0 && with_fold != self.entries.len() {
            return Err(Error::InvalidManifest("fold ids must be given for all entries or none".into()));
        }
        Ok(())
    }

    /// Sorted distinct labels.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<Video> {
        load_video_with(
            &self.resolve(entry),
            self.config.frame_format,
            entry.crop,
            self.config.resize,
        )
    }
}

/// Loads a directory of greyscale frames, optionally resized to `(W, H)`.
pub fn load_video(dir: &Path, resize: Option<(usize, usize)>) -> Result<Video> {
    load_video_with(dir, FrameFormat::Auto, None, resize)
}

pub fn load_video_with(
    dir: &Path,
    format: FrameFormat,
    crop: Option<Crop>,
    resize: Option<(usize, usize)>,
) -> Result<Video> {
    let files = frame_files(dir, format)?;
    let mut size = None;
    let mut pixels = Vec::new();
    for path in &files {
        let (w, h, mut frame) = read_frame(path)?;
        match size {
            None => size = Some((w, h)),
            Some(expected) if expected != (w, h) => {
                return Err(Error::InconsistentDims {
                    path: path.clone(),
                    expected,
                    found: (w, h),
                })
            }
            Some(_) => {}
        }
        let (mut fw, mut fh) = (w, h);
        if let Some(c) = crop {
            if c.width == 0 || c.height == 0 || c.x + c.width > w || c.y + c.height > h {
                return Err(Error::InvalidManifest(format!(
                    "crop {c:?} does not fit {w}x{h} frames of {}",
                    dir.display()
                )));
            }
            frame = (c.y..c.y + c.height)
                .flat_map(|y| frame[y * w + c.x..y * w + c.x + c.width].to_vec())
                .collect();
            (fw, fh) = (c.width, c.height);
        }
        if let Some((tw, th)) = resize {
            frame = resize_bilinear(&frame, fw, fh, tw, th)?;
        }
        pixels.extend(frame);
    }
    let (w, h) = match (resize, crop) {
        (Some(r), _) => r,
        (None, Some(c)) => (c.width, c.height),
        (None, None) => size.unwrap_or((0, 0)),
    };
    Video::new(w, h, files.len(), pixels)
}

fn frame_files(dir: &Path, format: FrameFormat) -> Result<Vec<PathBuf>> {
    let listing = match fs::read_dir(dir) {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFrames(dir.to_path_buf())),
        Err(e) => return Err(Error::io(format!("listing {}", dir.display()), e)),
    };
    let mut files = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?.path();
        if path.is_file() && format.accepts(&path) {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::MissingFrames(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

/// Decodes one frame to intensities in `[0, 1]`; colour goes through Rec. 601 luma.
fn read_frame(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let corrupt = |reason: String| Error::CorruptFrame {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| corrupt(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| corrupt(e.to_string()))?
        .decode()
        .map_err(|e| corrupt(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        other => other
            .to_rgb32f()
            .pixels()
            .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64).clamp(0.0, 1.0))
            .collect(),
    };
    Ok((w, h, pixels))
}

/// Bilinear resampling with pixel centres at half-integer positions and
/// replicated borders.
pub fn resize_bilinear(src: &[f64], w: usize, h: usize, new_w: usize, new_h: usize) -> Result<Vec<f64>> {
    if new_w == 0 || new_h == 0 || w == 0 || h == 0 || src.len() != w * h {
        return Err(Error::InvalidParameter(format!(
            "cannot resize {w}x{h} ({} pixels) to {new_w}x{new_h}",
            src.len()
        )));
    }
    let axis = |n_src: usize, n_dst: usize, i: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5).clamp(0.0, (n_src - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_src - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let (y0, y1, fy) = axis(h, new_h, y);
        for x in 0..new_w {
            let (x0, x1, fx) = axis(w, new_w, x);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_pgm(path: &Path, w: usize, h: usize, px: &[u8]) {
        let mut f = fs::File::create(path).unwrap();
        write!(f, "P5\n{w} {h}\n255\n").unwrap();
        f.write_all(px).unwrap();
    }

    #[test]
    fn loads_pgm_frames_in_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, v) in [10u8, 20, 30].iter().enumerate() {
            write_pgm(&dir.path().join(format!("f{i:02}.pgm")), 8, 8, &[*v; 64]);
        }
        let video = load_video(dir.path(), None).unwrap();
        assert_eq!(video.dims(), (8, 8, 3));
        assert_eq!(video.at(3, 3, 2), 30.0 / 255.0);
        assert_eq!(video.at(0, 0, 0), 10.0 / 255.0);
    }

    #[test]
    fn white_frames_scale_to_one() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..2 {
            write_pgm(&dir.path().join(format!("{i}.pgm")), 4, 3, &[255; 12]);
        }
        let video = load_video(dir.path(), None).unwrap();
        assert!(video.pixels().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn png_colour_uses_rec601_luma() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..2 {
            let img = image::RgbImage::from_fn(3, 2, |_, _| image::Rgb([255, 0, 0]));
            img.save(dir.path().join(format!("{i}.png"))).unwrap();
        }
        let video = load_video(dir.path(), None).unwrap();
        assert!((video.at(1, 1, 1) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn missing_corrupt_and_inconsistent_frames() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_video(&dir.path().join("nope"), None), Err(Error::MissingFrames(_))));
        assert!(matches!(load_video(dir.path(), None), Err(Error::MissingFrames(_))));

        write_pgm(&dir.path().join("a.pgm"), 4, 4, &[0; 16]);
        write_pgm(&dir.path().join("b.pgm"), 5, 4, &[0; 20]);
        assert!(matches!(load_video(dir.path(), None), Err(Error::InconsistentDims { .. })));

        fs::write(dir.path().join("b.pgm"), b"P5\n4 4\n255\n\x00\x01").unwrap();
        assert!(matches!(load_video(dir.path(), None), Err(Error::CorruptFrame { .. })));
    }

    /// Bilinear interpolation written out from the sampling definition.
    fn oracle(src: &[f64], w: usize, h: usize, nw: usize, nh: usize, x: usize, y: usize) -> f64 {
        let sx = ((x as f64 + 0.5) * (w as f64 / nw as f64) - 0.5).max(0.0).min((w - 1) as f64);
        let sy = ((y as f64 + 0.5) * (h as f64 / nh as f64) - 0.5).max(0.0).min((h - 1) as f64);
        let mut acc = 0.0;
        for yy in 0..h {
            for xx in 0..w {
                let wx = (1.0 - (sx - xx as f64).abs()).max(0.0);
                let wy = (1.0 - (sy - yy as f64).abs()).max(0.0);
                acc += wx * wy * src[yy * w + xx];
            }
        }
        acc
    }

    #[test]
    fn checkerboard_resize_matches_oracle() {
        let src: Vec<f64> = (0..256).map(|i| ((i % 16 + i / 16) % 2) as f64).collect();
        let out = resize_bilinear(&src, 16, 16, 8, 8).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert!((out[y * 8 + x] - oracle(&src, 16, 16, 8, 8, x, y)).abs() < 1e-6);
            }
        }
        let up = resize_bilinear(&src, 16, 16, 23, 11).unwrap();
        for y in 0..11 {
            for x in 0..23 {
                assert!((up[y * 23 + x] - oracle(&src, 16, 16, 23, 11, x, y)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn crop_then_resize() {
        let dir = tempfile::tempdir().unwrap();
        let px: Vec<u8> = (0..64).map(|i| i as u8).collect();
        for i in 0..2 {
            write_pgm(&dir.path().join(format!("{i}.pgm")), 8, 8, &px);
        }
        let crop = Crop { x: 2, y: 1, width: 4, height: 3 };
        let video = load_video_with(dir.path(), FrameFormat::Pgm, Some(crop), None).unwrap();
        assert_eq!(video.dims(), (4, 3, 2));
        assert_eq!(video.at(0, 0, 0), 10.0 / 255.0);
        let resized = load_video_with(dir.path(), FrameFormat::Pgm, Some(crop), Some((2, 2))).unwrap();
        assert_eq!(resized.dims(), (2, 2, 2));
        let bad = Crop { x: 6, y: 0, width: 4, height: 2 };
        assert!(load_video_with(dir.path(), FrameFormat::Auto, Some(bad), None).is_err());
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = DatasetManifest::new(
            ManifestConfig { resize: Some((16, 16)), frame_format: FrameFormat::Pgm },
            vec![
                ManifestEntry { path: "a".into(), label: "x".into(), fold: None, crop: None },
                ManifestEntry { path: "b".into(), label: "y".into(), fold: None, crop: None },
            ],
        );
        let path = dir.path().join("m.json");
        manifest.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(loaded.entries, manifest.entries);
        assert_eq!(loaded.config, manifest.config);
        assert_eq!(loaded.resolve(&loaded.entries[0]), dir.path().join("a"));
        assert_eq!(loaded.labels(), vec!["x", "y"]);

        let mut bad = manifest.clone();
        bad.entries[0].fold = Some(1);
        assert!(bad.validate().is_err());
        bad.entries[0].fold = None;
        bad.entries[1].label = " ".into();
        assert!(bad.validate().is_err());
        fs::write(&path, "{\"schema_version\": 1}").unwrap();
        assert!(matches!(DatasetManifest::load(&path), Err(Error::InvalidManifest(_))));
    }
}
