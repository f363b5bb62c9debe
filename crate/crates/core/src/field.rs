//! Complex field maps on a pixel lattice.
//!
//! The squeezed-vacuum mode and the local-oscillator mode are both stored as
//! [`ComplexField`]s sampled at pixel centres. Masks are real intensity
//! transmissions; [`apply_mask`] multiplies amplitudes by `sqrt(t)` so the
//! transmitted intensity is exactly `t` times the incident one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A rectangular pixel lattice. Pixel `(x, y)` is stored at `y * width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    pitch: f64,
}

impl Grid {
    pub fn new(width: usize, height: usize, pitch: f64) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::parameter(
                "grid",
                format!("grid must be at least 2x2, got {width}x{height}"),
            ));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::parameter("pitch", format!("must be > 0, got {pitch}")));
        }
        Ok(Self {
            width,
            height,
            pitch,
        })
    }

    /// Square grid with unit pitch.
    pub fn square(size: usize) -> Result<Self> {
        Self::new(size, size, 1.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Whether a continuous pixel coordinate lies on the lattice footprint.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Geometric centre in pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.width - 1) as f64 / 2.0,
            (self.height - 1) as f64 / 2.0,
        )
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Complex amplitude per pixel of a single spatial mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    amp: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            amp: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_amplitudes(grid: Grid, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} samples, grid needs {}",
                amp.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amp })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    pub fn at(&self, x: usize, y: usize) -> Complex64 {
        self.amp[self.grid.index(x, y)]
    }

    /// `|amp|^2` per pixel.
    pub fn intensity(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total `sum |amp|^2`.
    pub fn energy(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescale to unit energy.
    pub fn normalized(mut self) -> Result<Self> {
        let e = self.energy();
        if e <= 0.0 || !e.is_finite() {
            return Err(Error::ZeroNorm("field"));
        }
        let s = 1.0 / e.sqrt();
        self.amp.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amp.iter_mut().for_each(|a| *a *= factor);
        self
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "field combination")?;
        let amp = self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(&p, &q)| a * p + b * q)
            .collect();
        Ok(Self {
            grid: self.grid,
            amp,
        })
    }
}

/// Real intensity transmission per pixel, each value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    t: Vec<f64>,
}

impl Mask {
    pub fn open(grid: Grid) -> Self {
        Self {
            grid,
            t: vec![1.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, t: Vec<f64>) -> Result<Self> {
        if t.len() != grid.len() {
            return Err(Error::Shape(format!(
                "mask has {} samples, grid needs {}",
                t.len(),
                grid.len()
            )));
        }
        if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::parameter(
                "mask",
                format!("transmission {bad} outside [0, 1]"),
            ));
        }
        Ok(Self { grid, t })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.t[self.grid.index(x, y)]
    }

    /// Number of pixels with zero transmission.
    pub fn blocked_count(&self) -> usize {
        self.t.iter().filter(|&&v| v == 0.0).count()
    }
}

/// Unit-energy Gaussian `exp(-|x - c|^2 / waist^2)` with flat phase.
///
/// `waist` and `center` are in pixels.
pub fn gaussian_mode(grid: Grid, waist: f64, center: (f64, f64)) -> Result<ComplexField> {
    if !(waist > 0.0 && waist.is_finite()) {
        return Err(Error::parameter("waist", format!("must be > 0, got {waist}")));
    }
    if !grid.contains(center.0, center.1) {
        return Err(Error::parameter(
            "center",
            format!("({}, {}) outside the grid", center.0, center.1),
        ));
    }
    let inv_w2 = 1.0 / (waist * waist);
    let mut amp = Vec::with_capacity(grid.len());
    for y in 0..grid.height() {
        let dy = y as f64 - center.1;
        for x in 0..grid.width() {
            let dx = x as f64 - center.0;
            amp.push(Complex64::new((-(dx * dx + dy * dy) * inv_w2).exp(), 0.0));
        }
    }
    ComplexField { grid, amp }.normalized()
}

/// Binary rectangle mask covering pixels `lo.0 <= x < hi.0`, `lo.1 <= y < hi.1`.
///
/// The rectangle is opaque (`t = 0`) and the rest open, or the opposite when
/// `inverted`. A zero-area rectangle yields an all-open mask.
pub fn rect_mask(
    grid: Grid,
    lo: (usize, usize),
    hi: (usize, usize),
    inverted: bool,
) -> Result<Mask> {
    if lo.0 > hi.0 || lo.1 > hi.1 {
        return Err(Error::parameter(
            "mask corners",
            format!("lower corner {lo:?} exceeds upper corner {hi:?}"),
        ));
    }
    if hi.0 > grid.width() || hi.1 > grid.height() {
        return Err(Error::parameter(
            "mask corners",
            format!(
                "upper corner {hi:?} outside {}x{} grid",
                grid.width(),
                grid.height()
            ),
        ));
    }
    let empty = lo.0 == hi.0 || lo.1 == hi.1;
    let (inside, outside) = if inverted { (1.0, 0.0) } else { (0.0, 1.0) };
    let mut t = vec![if empty { 1.0 } else { outside }; grid.len()];
    if !empty {
        for y in lo.1..hi.1 {
            for x in lo.0..hi.0 {
                t[grid.index(x, y)] = inside;
            }
        }
    }
    Ok(Mask { grid, t })
}

/// Amplitude transmission `sqrt(t)` applied pointwise.
pub fn apply_mask(field: &ComplexField, mask: &Mask) -> Result<ComplexField> {
    field.grid.ensure_same(&mask.grid, "apply_mask")?;
    let amp = field
        .amp
        .iter()
        .zip(&mask.t)
        .map(|(&a, &t)| a * t.sqrt())
        .collect();
    Ok(ComplexField {
        grid: field.grid,
        amp,
    })
}

/// Angular-spectrum propagation over `distance` with periodic boundaries.
///
/// `distance` and `wavelength` share the length unit of the grid pitch. Every
/// sampled spatial frequency must be propagating, which holds whenever
/// `wavelength <= sqrt(2) * pitch`; the transfer function is then unimodular
/// and energy is conserved.
pub fn propagate(field: &ComplexField, distance: f64, wavelength: f64) -> Result<ComplexField> {
    propagate_padded(field, distance, wavelength, 1)
}

/// [`propagate`] on a zero-padded canvas `padding` times larger in each
/// direction, cropped back to the input grid. Energy leaving the crop is lost.
pub fn propagate_padded(
    field: &ComplexField,
    distance: f64,
    wavelength: f64,
    padding: usize,
) -> Result<ComplexField> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::parameter(
            "wavelength",
            format!("must be > 0, got {wavelength}"),
        ));
    }
    if !distance.is_finite() {
        return Err(Error::parameter("distance", "must be finite"));
    }
    if padding == 0 {
        return Err(Error::parameter("padding", "must be >= 1"));
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }
    let g = field.grid;
    let (pw, ph) = (g.width() * padding, g.height() * padding);
    let (ox, oy) = ((pw - g.width()) / 2, (ph - g.height()) / 2);

    let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
    for y in 0..g.height() {
        let src = &field.amp[y * g.width()..(y + 1) * g.width()];
        let row = (y + oy) * pw + ox;
        buf[row..row + g.width()].copy_from_slice(src);
    }

    let k = 2.0 * PI / wavelength;
    let fx = frequencies(pw, g.pitch());
    let fy = frequencies(ph, g.pitch());
    let max_f2 = fx.iter().map(|f| f * f).fold(0.0, f64::max)
        + fy.iter().map(|f| f * f).fold(0.0, f64::max);
    if (2.0 * PI) * (2.0 * PI) * max_f2 > k * k {
        return Err(Error::parameter(
            "wavelength",
            format!(
                "{wavelength} is too long for pitch {}: grid frequencies would be evanescent",
                g.pitch()
            ),
        ));
    }

    let mut fft = Fft2::new(pw, ph);
    fft.forward(&mut buf);
    for (iy, &fyv) in fy.iter().enumerate() {
        for (ix, &fxv) in fx.iter().enumerate() {
            let kt2 = (2.0 * PI) * (2.0 * PI) * (fxv * fxv + fyv * fyv);
            let kz = (k * k - kt2).sqrt();
            // Drop the plane-wave carrier exp(i k z); only the relative phase matters.
            let phase = (kz - k) * distance;
            buf[iy * pw + ix] *= Complex64::from_polar(1.0, phase);
        }
    }
    fft.inverse(&mut buf);

    let mut amp = Vec::with_capacity(g.len());
    for y in 0..g.height() {
        let row = (y + oy) * pw + ox;
        amp.extend_from_slice(&buf[row..row + g.width()]);
    }
    Ok(ComplexField { grid: g, amp })
}

/// Rayleigh range `pi w^2 / lambda` of a Gaussian with the given 1/e amplitude waist.
pub fn rayleigh_range(waist: f64, wavelength: f64) -> f64 {
    PI * waist * waist / wavelength
}

/// FFT sample frequencies (cycles per length unit) in standard order.
fn frequencies(n: usize, pitch: f64) -> Vec<f64> {
    let span = n as f64 * pitch;
    (0..n)
        .map(|i| {
            let m = if i <= (n - 1) / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            };
            m / span
        })
        .collect()
}

/// Unitary-normalized 2D FFT built from row and column 1D transforms.
struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: std::sync::Arc<dyn Fft<f64>>,
    row_inv: std::sync::Arc<dyn Fft<f64>>,
    col_fwd: std::sync::Arc<dyn Fft<f64>>,
    col_inv: std::sync::Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        let (r, c) = (self.row_fwd.clone(), self.col_fwd.clone());
        self.run(data, &*r, &*c);
    }

    fn inverse(&mut self, data: &mut [Complex64]) {
        let (r, c) = (self.row_inv.clone(), self.col_inv.clone());
        self.run(data, &*r, &*c);
    }

    fn run(&self, data: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        rows.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for x in 0..self.width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = data[y * self.width + x];
            }
            cols.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                data[y * self.width + x] = *c;
            }
        }
        let s = 1.0 / ((self.width * self.height) as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= s);
    }
}
