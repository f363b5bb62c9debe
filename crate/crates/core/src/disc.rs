//! Circular detection areas and disc binning.
//!
//! A pixel `x'` belongs to the disc around `x` when `|x - x'| < R` (strict),
//! so `R = 1` is the centre pixel alone. Discs are truncated at the frame
//! border without renormalization.

use serde::{Deserialize, Serialize};

use crate::{Error, Grid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectionDisc {
    radius: u32,
}

impl DetectionDisc {
    pub fn new(radius: u32) -> Result<Self> {
        if radius == 0 {
            return Err(Error::parameter("radius", "must be >= 1"));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Half-width of the disc row at vertical offset `dy`, for `|dy| < R`.
    ///
    /// The row spans `-h..=h`, where `h` is the largest integer with
    /// `h^2 + dy^2 < R^2`.
    pub fn half_width(&self, dy: i64) -> i64 {
        let r2 = (self.radius as i64).pow(2);
        let rem = r2 - dy * dy;
        debug_assert!(rem > 0);
        let mut h = ((rem - 1) as f64).sqrt() as i64;
        while h * h >= rem {
            h -= 1;
        }
        while (h + 1) * (h + 1) < rem {
            h += 1;
        }
        h
    }

    /// Number of lattice points inside an untruncated disc.
    pub fn area(&self) -> usize {
        let r = self.radius as i64;
        (-(r - 1)..r)
            .map(|dy| 2 * self.half_width(dy) as usize + 1)
            .sum()
    }
}

/// Disc sums `out(x) = sum_{|x'-x| < R} values(x')` over a raster.
///
/// Each disc is decomposed into horizontal segments read from row prefix
/// sums, costing `O(pixels * R)`.
pub fn bin_counts(values: &[f64], grid: &Grid, disc: DetectionDisc) -> Vec<f64> {
    if disc.radius == 1 {
        assert_eq!(values.len(), grid.len(), "raster does not match grid");
        return values.to_vec();
    }
    RowPrefix::new(values, grid, disc.radius).disc_sums(disc)
}

/// Zero-padded row prefix sums shared by every disc up to a maximum radius.
///
/// Sums from [`RowPrefix::disc_sums`] are bitwise identical for any padding.
#[derive(Debug, Clone)]
pub struct RowPrefix {
    grid: Grid,
    reach: usize,
    stride: usize,
    data: Vec<f64>,
}

impl RowPrefix {
    pub fn new(values: &[f64], grid: &Grid, max_radius: u32) -> Self {
        let reach = max_radius.max(1) as usize - 1;
        let stride = grid.width() + 2 * reach + 1;
        let mut p = Self {
            grid: *grid,
            reach,
            stride,
            data: vec![0.0; grid.height() * stride],
        };
        p.refill(values);
        p
    }

    /// Recomputes the prefix sums for new values on the same grid.
    pub fn refill(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.grid.len(), "raster does not match grid");
        let w = self.grid.width();
        let (reach, stride) = (self.reach, self.stride);
        // data[y * stride + i] sums padded row y over columns < i; source
        // column c sits at padded index c + reach.
        for (row, p) in values.chunks_exact(w).zip(self.data.chunks_exact_mut(stride)) {
            p[..=reach].iter_mut().for_each(|x| *x = 0.0);
            let mut acc = 0.0;
            for (c, v) in row.iter().enumerate() {
                acc += v;
                p[reach + c + 1] = acc;
            }
            p[reach + w + 1..].iter_mut().for_each(|x| *x = acc);
        }
    }

    pub fn disc_sums(&self, disc: DetectionDisc) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.disc_sums_into(disc, &mut out);
        out
    }

    /// [`Self::disc_sums`] written into `out`.
    pub fn disc_sums_into(&self, disc: DetectionDisc, out: &mut [f64]) {
        assert_eq!(out.len(), self.grid.len(), "output does not match grid");
        let (w, h) = (self.grid.width(), self.grid.height());
        let r = disc.radius as usize - 1;
        assert!(r <= self.reach, "disc radius exceeds prefix padding");
        let spans: Vec<(i64, usize, usize)> = (-(r as i64)..=r as i64)
            .map(|dy| {
                let hw = disc.half_width(dy) as usize;
                (dy, self.reach + hw + 1, self.reach - hw)
            })
            .collect();
        let mut rows: Vec<(&[f64], usize, usize)> = Vec::with_capacity(spans.len());
        for (y, dst) in out.chunks_exact_mut(w).enumerate() {
            rows.clear();
            for &(dy, hi, lo) in &spans {
                let sy = y as i64 + dy;
                if (0..h as i64).contains(&sy) {
                    let p = &self.data[sy as usize * self.stride..(sy as usize + 1) * self.stride];
                    rows.push((p, hi, lo));
                }
            }
            // Tiles keep partial sums in registers; the per-pixel summation
            // order over rows is unchanged.
            let full = w / TILE * TILE;
            for x0 in (0..full).step_by(TILE) {
                let mut acc = [0.0f64; TILE];
                for &(p, hi, lo) in &rows {
                    let u: &[f64; TILE] = p[hi + x0..hi + x0 + TILE].try_into().expect("tile");
                    let l: &[f64; TILE] = p[lo + x0..lo + x0 + TILE].try_into().expect("tile");
                    for k in 0..TILE {
                        acc[k] += u[k] - l[k];
                    }
                }
                dst[x0..x0 + TILE].copy_from_slice(&acc);
            }
            for x in full..w {
                let mut acc = 0.0;
                for &(p, hi, lo) in &rows {
                    acc += p[hi + x] - p[lo + x];
                }
                dst[x] = acc;
            }
        }
    }
}

const TILE: usize = 16;
