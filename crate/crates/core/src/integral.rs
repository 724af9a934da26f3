//! Integral-video tensors and constant-time window covariances.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVideo;
use crate::spd::SpdMatrix;

/// Relative ridge added to each covariance diagonal entry.
pub const REGULARIZATION: f64 = 1e-6;
/// Absolute floor of the ridge, covering zero-variance channels.
pub const REGULARIZATION_FLOOR: f64 = 1e-10;

/// Default cap on integral tensor memory: 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// Environment variable overriding [`DEFAULT_MEMORY_BUDGET`], in bytes.
pub const MEMORY_BUDGET_ENV: &str = "COV3D_MEMORY_BUDGET";

/// Reads the memory budget from [`MEMORY_BUDGET_ENV`], falling back to the default.
pub fn memory_budget_from_env() -> u64 {
    std::env::var(MEMORY_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MEMORY_BUDGET)
}

/// Inclusive spatio-temporal box `[x1, x2] x [y1, y2] x [t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub x1: usize,
    pub y1: usize,
    pub t1: usize,
    pub x2: usize,
    pub y2: usize,
    pub t2: usize,
}

impl Window {
    pub fn new(x1: usize, y1: usize, t1: usize, x2: usize, y2: usize, t2: usize) -> Self {
        Window {
            x1,
            y1,
            t1,
            x2,
            y2,
            t2,
        }
    }

    /// Window covering a whole `(W, H, T)` volume.
    pub fn full(dims: (usize, usize, usize)) -> Self {
        Window::new(0, 0, 0, dims.0 - 1, dims.1 - 1, dims.2 - 1)
    }

    /// Number of cells `S` inside the window.
    pub fn volume(&self) -> usize {
        (self.x2 - self.x1 + 1) * (self.y2 - self.y1 + 1) * (self.t2 - self.t1 + 1)
    }

    pub fn fits(&self, dims: (usize, usize, usize)) -> bool {
        self.x1 <= self.x2
            && self.y1 <= self.y2
            && self.t1 <= self.t2
            && self.x2 < dims.0
            && self.y2 < dims.1
            && self.t2 < dims.2
    }

    fn as_array(&self) -> [usize; 6] {
        [self.x1, self.y1, self.t1, self.x2, self.y2, self.t2]
    }
}

/// First- and second-order integral videos of a feature video.
///
/// Storage is zero-padded by one cell on each axis so every corner lookup
/// is branch free. Each padded cell holds the `d` first-order sums followed
/// by the `d(d+1)/2` second-order sums of the upper triangle (row-major).
#[derive(Debug, Clone)]
pub struct IntegralTensors {
    width: usize,
    height: usize,
    frames: usize,
    dim: usize,
    stride: usize,
    sums: Vec<f64>,
}

/// Bytes needed by [`IntegralTensors`] for the given feature video shape.
pub fn integral_memory_bytes(dims: (usize, usize, usize), dim: usize) -> u64 {
    let cells = (dims.0 as u64 + 1) * (dims.1 as u64 + 1) * (dims.2 as u64 + 1);
    cells * (dim + dim * (dim + 1) / 2) as u64 * std::mem::size_of::<f64>() as u64
}

/// Builds the integral tensors with the default memory budget.
pub fn build_integral_tensors(features: &FeatureVideo) -> Result<IntegralTensors> {
    build_integral_tensors_with_budget(features, memory_budget_from_env())
}

pub fn build_integral_tensors_with_budget(
    features: &FeatureVideo,
    budget_bytes: u64,
) -> Result<IntegralTensors> {
    let (w, h, n) = features.dims();
    let d = features.dim();
    let required = integral_memory_bytes((w, h, n), d);
    if required > budget_bytes {
        return Err(Error::MemoryBudgetExceeded {
            required,
            budget: budget_bytes,
        });
    }
    let stride = d + d * (d + 1) / 2;
    let (pw, ph, pn) = (w + 1, h + 1, n + 1);
    let mut sums = vec![0.0; pw * ph * pn * stride];
    let cell = |x: usize, y: usize, t: usize| ((t * ph + y) * pw + x) * stride;

    for t in 0..n {
        for y in 0..h {
            for x in 0..w {
                let f = features.at(x, y, t);
                let base = cell(x + 1, y + 1, t + 1);
                let out = &mut sums[base..base + stride];
                out[..d].copy_from_slice(f);
                let mut k = d;
                for i in 0..d {
                    for j in i..d {
                        out[k] = f[i] * f[j];
                        k += 1;
                    }
                }
            }
        }
    }

    // Separable prefix sums along x, then y, then t.
    for t in 1..pn {
        for y in 1..ph {
            for x in 2..pw {
                let (src, dst) = (cell(x - 1, y, t), cell(x, y, t));
                add_assign_from(&mut sums, dst, src, stride);
            }
        }
    }
    for t in 1..pn {
        for y in 2..ph {
            for x in 1..pw {
                let (src, dst) = (cell(x, y - 1, t), cell(x, y, t));
                add_assign_from(&mut sums, dst, src, stride);
            }
        }
    }
    for t in 2..pn {
        for y in 1..ph {
            for x in 1..pw {
                let (src, dst) = (cell(x, y, t - 1), cell(x, y, t));
                add_assign_from(&mut sums, dst, src, stride);
            }
        }
    }

    Ok(IntegralTensors {
        width: w,
        height: h,
        frames: n,
        dim: d,
        stride,
        sums,
    })
}

#[inline]
fn add_assign_from(buf: &mut [f64], dst: usize, src: usize, len: usize) {
    debug_assert!(src < dst);
    let (head, tail) = buf.split_at_mut(dst);
    for (o, i) in tail[..len].iter_mut().zip(&head[src..src + len]) {
        *o += *i;
    }
}

#[inline]
fn upper_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl IntegralTensors {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn padded(&self, x: usize, y: usize, t: usize) -> &[f64] {
        let base = ((t * (self.height + 1) + y) * (self.width + 1) + x) * self.stride;
        &self.sums[base..base + self.stride]
    }

    /// First-order integral `P(x, y, t, i)`.
    pub fn p(&self, x: usize, y: usize, t: usize, i: usize) -> f64 {
        self.padded(x + 1, y + 1, t + 1)[i]
    }

    /// Second-order integral `Q(x, y, t, i, j)`; symmetric in `i, j`.
    pub fn q(&self, x: usize, y: usize, t: usize, i: usize, j: usize) -> f64 {
        self.padded(x + 1, y + 1, t + 1)[self.dim + upper_index(self.dim, i, j)]
    }

    /// First- and second-order sums over a window, via temporal differences
    /// `P(., ., t2) - P(., ., t1 - 1)` followed by 2-D inclusion–exclusion.
    fn window_sums(&self, w: &Window) -> Vec<f64> {
        // Padded coordinates: index c + 1 is cell c, index 0 is the "-1" plane.
        let (xa, xb) = (w.x1, w.x2 + 1);
        let (ya, yb) = (w.y1, w.y2 + 1);
        let (ta, tb) = (w.t1, w.t2 + 1);
        let mut acc = vec![0.0; self.stride];
        let corners = [(xb, yb, 1.0), (xa, ya, 1.0), (xb, ya, -1.0), (xa, yb, -1.0)];
        for (x, y, sign) in corners {
            let hi = self.padded(x, y, tb);
            let lo = self.padded(x, y, ta);
            for ((a, h), l) in acc.iter_mut().zip(hi).zip(lo) {
                *a += sign * (h - l);
            }
        }
        acc
    }

    /// Unregularized sample covariance (`1/(S-1)`) of the window's features.
    pub fn window_covariance(&self, w: &Window) -> Result<DMatrix<f64>> {
        if !w.fits(self.dims()) {
            return Err(Error::WindowOutOfBounds(w.as_array()));
        }
        let s = w.volume();
        if s < 2 {
            return Err(Error::WindowTooSmall { volume: s });
        }
        let d = self.dim;
        let sums = self.window_sums(w);
        let (p, q) = sums.split_at(d);
        let sf = s as f64;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let c = (q[upper_index(d, i, j)] - p[i] * p[j] / sf) / (sf - 1.0);
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        Ok(cov)
    }

    /// Regularized window covariance, strictly positive definite.
    pub fn region_covariance(&self, w: &Window) -> Result<SpdMatrix> {
        Ok(regularize_covariance(self.window_covariance(w)?))
    }
}

/// Symmetrizes `c` and adds `max(eps * c_ii, floor)` to each diagonal entry.
///
/// For a covariance with positive diagonal the result is
/// `D^{1/2} (R + eps I) D^{1/2}` with `R` the correlation matrix, so it is
/// positive definite even when `c` is rank deficient, and rescaling a
/// channel rescales the ridge with it.
pub fn regularize_covariance(mut c: DMatrix<f64>) -> SpdMatrix {
    let d = c.nrows();
    for i in 0..d {
        for j in i + 1..d {
            let m = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = m;
            c[(j, i)] = m;
        }
    }
    for i in 0..d {
        // Rounding can leave a zero-variance diagonal slightly negative.
        let v = c[(i, i)].max(0.0);
        c[(i, i)] = v + (REGULARIZATION * v).max(REGULARIZATION_FLOOR);
    }
    SpdMatrix::from_symmetric_unchecked(c)
}

/// `diag(C_F)^{-1/2} C_R diag(C_F)^{-1/2}`.
pub fn normalize_descriptor(region: &SpdMatrix, full: &SpdMatrix) -> Result<SpdMatrix> {
    let d = full.dim();
    if region.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: region.dim(),
        });
    }
    let mut scale = Vec::with_capacity(d);
    for i in 0..d {
        let v = full.matrix()[(i, i)];
        if !(v > 0.0) {
            return Err(Error::DegenerateFullDescriptor { channel: i });
        }
        scale.push(v.sqrt().recip());
    }
    let r = region.matrix();
    let out = DMatrix::from_fn(d, d, |i, j| r[(i, j)] * (scale[i] * scale[j]));
    Ok(SpdMatrix::from_symmetric_unchecked(out))
}

/// Normalized Cov3D descriptors of one video.
#[derive(Debug, Clone)]
pub struct DescriptorExtractor {
    tensors: IntegralTensors,
    full: SpdMatrix,
}

impl DescriptorExtractor {
    pub fn new(tensors: IntegralTensors) -> Result<Self> {
        let full = tensors.region_covariance(&Window::full(tensors.dims()))?;
        Ok(DescriptorExtractor { tensors, full })
    }

    pub fn from_features(features: &FeatureVideo) -> Result<Self> {
        DescriptorExtractor::new(build_integral_tensors(features)?)
    }

    pub fn tensors(&self) -> &IntegralTensors {
        &self.tensors
    }

    /// Regularized covariance of the whole video.
    pub fn full_covariance(&self) -> &SpdMatrix {
        &self.full
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.tensors.dims()
    }

    /// Normalized descriptor of a window.
    pub fn descriptor(&self, w: &Window) -> Result<SpdMatrix> {
        normalize_descriptor(&self.tensors.region_covariance(w)?, &self.full)
    }
}
