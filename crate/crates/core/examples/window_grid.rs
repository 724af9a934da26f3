//! Counts candidate windows for a few grid granularities.

use cov3d::windows::{enumerate_windows, WindowGrid};

fn main() -> cov3d::Result<()> {
    let dims = (32, 32, 16);
    for frac in [1.0, 0.5, 0.25, 0.125] {
        let windows = enumerate_windows(dims, frac, frac)?;
        println!("fraction {frac:<6} -> {:>6} windows", windows.len());
    }
    let grid = WindowGrid::default();
    let windows = grid.enumerate((16, 16, 8))?;
    println!("default grid on 16x16x8: {} windows, first {:?}, last {:?}", windows.len(), windows[0], windows[windows.len() - 1]);
    Ok(())
}
