//! Candidate spatio-temporal windows for the boosting search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::Window;

/// Window granularity as fractions of the video dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    /// Minimum window extent per axis.
    pub min_frac: f64,
    /// Increment of window origin and extent per axis.
    pub step_frac: f64,
}

impl Default for WindowGrid {
    fn default() -> Self {
        WindowGrid {
            min_frac: 0.125,
            step_frac: 0.125,
        }
    }
}

impl WindowGrid {
    pub fn enumerate(&self, dims: (usize, usize, usize)) -> Result<Vec<Window>> {
        enumerate_windows(dims, self.min_frac, self.step_frac)
    }
}

/// `(step, min_extent)` of one axis.
fn axis_granularity(n: usize, min_frac: f64, step_frac: f64) -> (usize, usize) {
    let step = ((step_frac * n as f64).floor() as usize).max(1);
    let min_extent = ((min_frac * n as f64).ceil() as usize).clamp(1, n);
    (step, min_extent)
}

/// Inclusive `(start, end)` intervals along one axis.
fn axis_intervals(n: usize, min_frac: f64, step_frac: f64) -> Vec<(usize, usize)> {
    let (step, min_extent) = axis_granularity(n, min_frac, step_frac);
    let mut out = Vec::new();
    for start in (0..n).step_by(step) {
        let mut extent = step;
        loop {
            let end = (start + extent).min(n);
            if end - start >= min_extent {
                out.push((start, end - 1));
            }
            if start + extent >= n {
                break;
            }
            extent += step;
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All windows on the grid, sorted lexicographically by
/// `(x1, y1, t1, x2, y2, t2)`.
///
/// Origins and extents are multiples of `floor(step_frac * n)` (at least one
/// cell) and extents are at least `ceil(min_frac * n)`; windows running past
/// the volume are clipped, so the full volume is always included. Windows
/// with fewer than two cells are dropped.
pub fn enumerate_windows(
    dims: (usize, usize, usize),
    min_frac: f64,
    step_frac: f64,
) -> Result<Vec<Window>> {
    for (name, f) in [("min_frac", min_frac), ("step_frac", step_frac)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {f}")));
        }
    }
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::EmptyGrid);
    }
    let xs = axis_intervals(dims.0, min_frac, step_frac);
    let ys = axis_intervals(dims.1, min_frac, step_frac);
    let ts = axis_intervals(dims.2, min_frac, step_frac);
    let mut out = Vec::with_capacity(xs.len() * ys.len() * ts.len());
    for &(x1, x2) in &xs {
        for &(y1, y2) in &ys {
            for &(t1, t2) in &ts {
                let w = Window::new(x1, y1, t1, x2, y2, t2);
                if w.volume() >= 2 {
                    out.push(w);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyGrid);
    }
    out.sort_unstable();
    Ok(out)
}
