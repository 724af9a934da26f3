//! Per-pixel feature mapping of a greyscale video.
//!
//! Every pixel `(x, y, t)` is mapped to the 15-dimensional vector
//!
//! ```text
//! [x, y, t, |Ix|, |Iy|, |Ixx|, |Iyy|, sqrt(Ix^2 + Iy^2), atan(|Iy| / |Ix|),
//!  u, v, du/dt, dv/dt, du/dx + dv/dy, dv/dx - du/dy]
//! ```
//!
//! where `(u, v)` is a dense Horn–Schunck flow field. All derivatives are
//! central differences with replicated borders, on a unit pixel/frame grid.

use crate::error::{Error, Result};

/// Number of channels produced by [`build_feature_video`].
pub const FEATURE_DIM: usize = 15;

/// Channel index of the horizontal flow component.
pub const CHANNEL_U: usize = 9;
/// Channel index of the vertical flow component.
pub const CHANNEL_V: usize = 10;

/// Horn–Schunck smoothness weight relative to the squared intensity range.
pub const FLOW_SMOOTHNESS: f64 = 0.01;
/// Fixed number of Jacobi sweeps per frame pair.
pub const FLOW_ITERATIONS: usize = 100;

/// Greyscale image sequence with intensities in `[0, 1]`.
///
/// Pixels are stored frame-major: index `(t * height + y) * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    width: usize,
    height: usize,
    frames: usize,
    pixels: Vec<f64>,
}

impl Video {
    pub fn new(width: usize, height: usize, frames: usize, pixels: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 || frames < 2 {
            return Err(Error::InvalidVideo(format!(
                "dimensions {width}x{height}x{frames} must all be at least 2"
            )));
        }
        if pixels.len() != width * height * frames {
            return Err(Error::InvalidVideo(format!(
                "expected {} pixels, got {}",
                width * height * frames,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidVideo("non-finite intensity".into()));
        }
        Ok(Video {
            width,
            height,
            frames,
            pixels,
        })
    }

    /// Builds a video by evaluating `f(x, y, t)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    pixels.push(f(x, y, t));
                }
            }
        }
        Video::new(width, height, frames, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, t: usize) -> f64 {
        self.pixels[(t * self.height + y) * self.width + x]
    }

    /// Left-right mirror image of every frame.
    pub fn mirrored(&self) -> Video {
        let w = self.width;
        Video::from_fn(w, self.height, self.frames, |x, y, t| self.at(w - 1 - x, y, t))
            .expect("mirroring preserves validity")
    }

    /// Frames in reverse order.
    pub fn reversed(&self) -> Video {
        let n = self.frames;
        Video::from_fn(self.width, self.height, n, |x, y, t| self.at(x, y, n - 1 - t))
            .expect("reversal preserves validity")
    }
}

/// Dense flow field, one `(u, v)` pair per pixel, laid out like [`Video`].
///
/// Frame `t` holds the flow from frame `t` to frame `t + 1`; the last frame
/// repeats the flow of the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    frames: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(
        width: usize,
        height: usize,
        frames: usize,
        u: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<Self> {
        let n = width * height * frames;
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidParameter(format!(
                "flow components must have {n} entries"
            )));
        }
        Ok(FlowField {
            width,
            height,
            frames,
            u,
            v,
        })
    }

    /// Builds a flow field from a function returning `(u, v)` per pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> (f64, f64),
    ) -> Self {
        let n = width * height * frames;
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    let (a, b) = f(x, y, t);
                    u.push(a);
                    v.push(b);
                }
            }
        }
        FlowField {
            width,
            height,
            frames,
            u,
            v,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    #[inline]
    fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    #[inline]
    pub fn u(&self, x: usize, y: usize, t: usize) -> f64 {
        self.u[self.index(x, y, t)]
    }

    #[inline]
    pub fn v(&self, x: usize, y: usize, t: usize) -> f64 {
        self.v[self.index(x, y, t)]
    }

    pub fn u_slice(&self) -> &[f64] {
        &self.u
    }

    pub fn v_slice(&self) -> &[f64] {
        &self.v
    }
}

/// Feature video of shape `W x H x T x d`.
///
/// The vector of pixel `(x, y, t)` occupies
/// `data[((t * H + y) * W + x) * d .. + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVideo {
    width: usize,
    height: usize,
    frames: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureVideo {
    pub fn new(
        width: usize,
        height: usize,
        frames: usize,
        dim: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || frames == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "feature video dimensions must be positive".into(),
            ));
        }
        if data.len() != width * height * frames * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} feature values, got {}",
                width * height * frames * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature value".into()));
        }
        Ok(FeatureVideo {
            width,
            height,
            frames,
            dim,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, t: usize) -> &[f64] {
        let start = ((t * self.height + y) * self.width + x) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Multiplies every value of channel `c` by `scales[c]`.
    pub fn scale_channels(&self, scales: &[f64]) -> FeatureVideo {
        assert_eq!(scales.len(), self.dim);
        let mut out = self.clone();
        for cell in out.data.chunks_exact_mut(self.dim) {
            for (v, s) in cell.iter_mut().zip(scales) {
                *v *= s;
            }
        }
        out
    }
}

#[inline]
fn prev(i: usize) -> usize {
    i.saturating_sub(1)
}

#[inline]
fn next(i: usize, n: usize) -> usize {
    (i + 1).min(n - 1)
}

/// `[|Ix|, |Iy|, |Ixx|, |Iyy|, magnitude, orientation]` at one pixel.
pub fn compute_gradient_features(video: &Video, x: usize, y: usize, t: usize) -> [f64; 6] {
    let (w, h) = (video.width, video.height);
    let c = video.at(x, y, t);
    let (xl, xr) = (video.at(prev(x), y, t), video.at(next(x, w), y, t));
    let (yu, yd) = (video.at(x, prev(y), t), video.at(x, next(y, h), t));

    let ix = 0.5 * (xr - xl);
    let iy = 0.5 * (yd - yu);
    let ixx = xr - 2.0 * c + xl;
    let iyy = yd - 2.0 * c + yu;

    let (ax, ay) = (ix.abs(), iy.abs());
    let orientation = if ax == 0.0 && ay == 0.0 {
        0.0
    } else {
        // atan2 of non-negative arguments equals atan(|Iy|/|Ix|) and is
        // pi/2 rather than NaN when |Ix| = 0.
        ay.atan2(ax)
    };
    [ax, ay, ixx.abs(), iyy.abs(), ix.hypot(iy), orientation]
}

/// `[u, v, du/dt, dv/dt, divergence, vorticity]` at one pixel.
pub fn compute_flow_features(flow: &FlowField, x: usize, y: usize, t: usize) -> [f64; 6] {
    let (w, h, n) = flow.dims();
    let u = flow.u(x, y, t);
    let v = flow.v(x, y, t);
    let du_dt = 0.5 * (flow.u(x, y, next(t, n)) - flow.u(x, y, prev(t)));
    let dv_dt = 0.5 * (flow.v(x, y, next(t, n)) - flow.v(x, y, prev(t)));
    let du_dx = 0.5 * (flow.u(next(x, w), y, t) - flow.u(prev(x), y, t));
    let du_dy = 0.5 * (flow.u(x, next(y, h), t) - flow.u(x, prev(y), t));
    let dv_dx = 0.5 * (flow.v(next(x, w), y, t) - flow.v(prev(x), y, t));
    let dv_dy = 0.5 * (flow.v(x, next(y, h), t) - flow.v(x, prev(y), t));
    [u, v, du_dt, dv_dt, du_dx + dv_dy, dv_dx - du_dy]
}

/// Dense Horn–Schunck flow between consecutive frames.
///
/// Spatial derivatives are central differences averaged over both frames,
/// the temporal derivative is the frame difference. The scheme is symmetric
/// under mirroring and time reversal, so those transforms negate the flow.
pub fn compute_flow(video: &Video) -> FlowField {
    let (w, h, n) = video.dims();
    let plane = w * h;
    let alpha2 = FLOW_SMOOTHNESS; // intensities live in [0, 1]
    let mut u_all = vec![0.0; plane * n];
    let mut v_all = vec![0.0; plane * n];

    let mut ix = vec![0.0; plane];
    let mut iy = vec![0.0; plane];
    let mut it = vec![0.0; plane];
    let mut u = vec![0.0; plane];
    let mut v = vec![0.0; plane];
    let mut u_next = vec![0.0; plane];
    let mut v_next = vec![0.0; plane];

    for t in 0..n - 1 {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let dx = |f: usize| 0.5 * (video.at(next(x, w), y, f) - video.at(prev(x), y, f));
                let dy = |f: usize| 0.5 * (video.at(x, next(y, h), f) - video.at(x, prev(y), f));
                ix[i] = 0.5 * (dx(t) + dx(t + 1));
                iy[i] = 0.5 * (dy(t) + dy(t + 1));
                it[i] = video.at(x, y, t + 1) - video.at(x, y, t);
            }
        }
        u.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        for _ in 0..FLOW_ITERATIONS {
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let ub = neighbourhood_mean(&u, w, h, x, y);
                    let vb = neighbourhood_mean(&v, w, h, x, y);
                    let num = ix[i] * ub + iy[i] * vb + it[i];
                    let den = alpha2 + ix[i] * ix[i] + iy[i] * iy[i];
                    u_next[i] = ub - ix[i] * num / den;
                    v_next[i] = vb - iy[i] * num / den;
                }
            }
            std::mem::swap(&mut u, &mut u_next);
            std::mem::swap(&mut v, &mut v_next);
        }
        u_all[t * plane..(t + 1) * plane].copy_from_slice(&u);
        v_all[t * plane..(t + 1) * plane].copy_from_slice(&v);
    }
    let (last, before) = ((n - 1) * plane, (n - 2) * plane);
    u_all.copy_within(before..before + plane, last);
    v_all.copy_within(before..before + plane, last);

    FlowField {
        width: w,
        height: h,
        frames: n,
        u: u_all,
        v: v_all,
    }
}

/// Classic Horn–Schunck averaging stencil (1/6 edge, 1/12 corner).
#[inline]
fn neighbourhood_mean(f: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let (xl, xr, yu, yd) = (prev(x), next(x, w), prev(y), next(y, h));
    let at = |xx: usize, yy: usize| f[yy * w + xx];
    (at(xl, y) + at(xr, y) + at(x, yu) + at(x, yd)) / 6.0
        + (at(xl, yu) + at(xr, yu) + at(xl, yd) + at(xr, yd)) / 12.0
}

/// Maps a video to its 15-channel feature video.
pub fn build_feature_video(video: &Video) -> FeatureVideo {
    let flow = compute_flow(video);
    build_feature_video_with_flow(video, &flow)
}

/// Same as [`build_feature_video`] with a precomputed flow field.
pub fn build_feature_video_with_flow(video: &Video, flow: &FlowField) -> FeatureVideo {
    assert_eq!(video.dims(), flow.dims(), "flow must match the video");
    let (w, h, n) = video.dims();
    let mut data = Vec::with_capacity(w * h * n * FEATURE_DIM);
    for t in 0..n {
        for y in 0..h {
            for x in 0..w {
                data.extend_from_slice(&[x as f64, y as f64, t as f64]);
                data.extend_from_slice(&compute_gradient_features(video, x, y, t));
                data.extend_from_slice(&compute_flow_features(flow, x, y, t));
            }
        }
    }
    FeatureVideo {
        width: w,
        height: h,
        frames: n,
        dim: FEATURE_DIM,
        data,
    }
}
