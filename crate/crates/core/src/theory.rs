//! Closed-form quadrature-variance maps and signal-to-noise expressions.
//!
//! Variances are normalized to shot noise: `V = 1` for vacuum (or any
//! coherent state), `V = e^{2r}` for the anti-squeezed and `V = e^{-2r}` for
//! the squeezed quadrature of a squeezed vacuum with parameter `r`. The binned
//! maps here are the analytic targets that the Monte Carlo estimates are
//! checked against.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disc::bin_counts;
use crate::field::{ComplexField, Mask};
use crate::{DetectionDisc, Error, MapRole, Result, ScalarMap};

/// Binned LO energy below this fraction of the total marks a pixel invalid.
pub const LO_FLOOR_FRACTION: f64 = 1e-6;

/// Which squeezed-vacuum quadrature the local oscillator phase selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    AntiSqueezed,
    Squeezed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerParams {
    /// Squeezing parameter, `r >= 0`.
    pub r: f64,
    pub quadrature: Quadrature,
    /// Relative phase between squeezed mode and LO; 0 is phase matched.
    pub phase: f64,
}

impl SqueezerParams {
    pub fn new(r: f64, quadrature: Quadrature, phase: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::parameter("r", format!("must be >= 0, got {r}")));
        }
        if !phase.is_finite() {
            return Err(Error::parameter("phase", "must be finite"));
        }
        Ok(Self {
            r,
            quadrature,
            phase,
        })
    }

    /// Anti-squeezed, phase-matched squeezer with the given anti-squeezing level.
    pub fn anti_squeezed_db(db: f64) -> Result<Self> {
        Self::new(db_to_r(db)?, Quadrature::AntiSqueezed, 0.0)
    }

    /// Variance of the measured quadrature, `e^{+-2r}`.
    pub fn measured_variance(&self) -> f64 {
        match self.quadrature {
            Quadrature::AntiSqueezed => (2.0 * self.r).exp(),
            Quadrature::Squeezed => (-2.0 * self.r).exp(),
        }
    }

    /// `e^{+-2r} - 1`, the full-overlap excess of the measured quadrature.
    pub fn excess(&self) -> f64 {
        self.measured_variance() - 1.0
    }

    /// Excess coefficients `(in-phase, quadrature)` for the components of the
    /// LO-weighted squeezed amplitude along and across the LO phase.
    pub fn excess_coefficients(&self) -> (f64, f64) {
        let up = (2.0 * self.r).exp_m1();
        let down = (-2.0 * self.r).exp_m1();
        match self.quadrature {
            Quadrature::AntiSqueezed => (up, down),
            Quadrature::Squeezed => (down, up),
        }
    }

    /// Mean photon number of the squeezed mode, `sinh^2 r`.
    pub fn mean_photons(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// `10 log10 e^{2r}`.
    pub fn anti_squeezing_db(&self) -> f64 {
        r_to_db(self.r)
    }
}

/// Squeezing parameter whose anti-squeezing is `db` decibels:
/// `10 log10(e^{2r}) = db`.
pub fn db_to_r(db: f64) -> Result<f64> {
    if !(db >= 0.0 && db.is_finite()) {
        return Err(Error::parameter("dB", format!("must be >= 0, got {db}")));
    }
    Ok(db * std::f64::consts::LN_10 / 20.0)
}

pub fn r_to_db(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

/// Strong coherent reference: expected photons per frame and its spatial mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOscillatorParams {
    photons_per_frame: f64,
    mode: ComplexField,
}

impl LocalOscillatorParams {
    pub fn new(photons_per_frame: f64, mode: ComplexField) -> Result<Self> {
        if !(photons_per_frame >= 0.0 && photons_per_frame.is_finite()) {
            return Err(Error::parameter(
                "photons_per_frame",
                format!("must be >= 0, got {photons_per_frame}"),
            ));
        }
        let e = mode.energy();
        if (e - 1.0).abs() > 1e-9 {
            return Err(Error::parameter(
                "local oscillator mode",
                format!("must be unit-normalized, energy = {e}"),
            ));
        }
        Ok(Self {
            photons_per_frame,
            mode,
        })
    }

    pub fn photons_per_frame(&self) -> f64 {
        self.photons_per_frame
    }

    pub fn mode(&self) -> &ComplexField {
        &self.mode
    }
}

/// Pixel-basis phase-matched variance `1 + (e^{+-2r} - 1) |u1|^2`.
pub fn pixel_variance_map(u1: &ComplexField, sq: &SqueezerParams) -> ScalarMap {
    let c = sq.excess();
    let values = u1.amplitudes().iter().map(|a| 1.0 + c * a.norm_sqr()).collect();
    ScalarMap::new(*u1.grid(), MapRole::Variance, values).expect("grid-sized raster")
}

fn floor_validity(lo_binned: &[f64], total: f64, floor_fraction: f64) -> Vec<bool> {
    let floor = floor_fraction * total;
    lo_binned.iter().map(|&e| e >= floor && e > 0.0).collect()
}

/// Binned variance for arbitrary complex modes.
///
/// With `S = sum_disc conj(u2) u1` and `E = sum_disc |u2|^2`,
/// `V = 1 + [2 sinh^2 r |S|^2 +- 2 sinh r cosh r Re(S^2 e^{2i phi})] / E`,
/// the sign selecting the anti-squeezed (`+`) or squeezed (`-`) quadrature.
pub fn binned_variance_general(
    u1: &ComplexField,
    lo: &LocalOscillatorParams,
    sq: &SqueezerParams,
    disc: DetectionDisc,
) -> Result<ScalarMap> {
    binned_variance_general_with_floor(u1, lo, sq, disc, LO_FLOOR_FRACTION)
}

pub fn binned_variance_general_with_floor(
    u1: &ComplexField,
    lo: &LocalOscillatorParams,
    sq: &SqueezerParams,
    disc: DetectionDisc,
    floor_fraction: f64,
) -> Result<ScalarMap> {
    let u2 = lo.mode();
    let grid = *u1.grid();
    grid.ensure_same(u2.grid(), "binned_variance_general")?;

    let lo_int = u2.intensity();
    let (cross_re, cross_im): (Vec<f64>, Vec<f64>) = u2
        .amplitudes()
        .iter()
        .zip(u1.amplitudes())
        .map(|(b, a)| {
            let w = b.conj() * a;
            (w.re, w.im)
        })
        .unzip();
    let e = bin_counts(&lo_int, &grid, disc);
    let s_re = bin_counts(&cross_re, &grid, disc);
    let s_im = bin_counts(&cross_im, &grid, disc);
    let valid = floor_validity(&e, lo_int.iter().sum(), floor_fraction);

    let sh = sq.r.sinh();
    let ch = sq.r.cosh();
    let sign = match sq.quadrature {
        Quadrature::AntiSqueezed => 1.0,
        Quadrature::Squeezed => -1.0,
    };
    let rot = Complex64::from_polar(1.0, 2.0 * sq.phase);
    let values = (0..grid.len())
        .map(|i| {
            if !valid[i] {
                return 0.0;
            }
            let s = Complex64::new(s_re[i], s_im[i]);
            let excess =
                2.0 * sh * sh * s.norm_sqr() + sign * 2.0 * sh * ch * (s * s * rot).re;
            1.0 + excess / e[i]
        })
        .collect();
    ScalarMap::with_validity(grid, MapRole::Variance, values, valid)
}

/// Binned variance for a mode-matched, phase-matched probe `u1 = sqrt(t) u2`:
/// `V = 1 + (e^{+-2r} - 1) (sum sqrt(t) |u2|^2)^2 / sum |u2|^2` over each disc.
///
/// For the binary masks of an opaque object `sqrt(t) = t`.
pub fn binned_variance_mode_matched(
    mask: &Mask,
    u2: &ComplexField,
    sq: &SqueezerParams,
    disc: DetectionDisc,
) -> Result<ScalarMap> {
    binned_variance_mode_matched_with_floor(mask, u2, sq, disc, LO_FLOOR_FRACTION)
}

pub fn binned_variance_mode_matched_with_floor(
    mask: &Mask,
    u2: &ComplexField,
    sq: &SqueezerParams,
    disc: DetectionDisc,
    floor_fraction: f64,
) -> Result<ScalarMap> {
    let grid = *u2.grid();
    grid.ensure_same(mask.grid(), "binned_variance_mode_matched")?;
    let lo_int = u2.intensity();
    let passed: Vec<f64> = lo_int
        .iter()
        .zip(mask.values())
        .map(|(i, t)| t.sqrt() * i)
        .collect();
    let e = bin_counts(&lo_int, &grid, disc);
    let p = bin_counts(&passed, &grid, disc);
    let valid = floor_validity(&e, lo_int.iter().sum(), floor_fraction);
    let c = sq.excess();
    let values = (0..grid.len())
        .map(|i| if valid[i] { 1.0 + c * p[i] * p[i] / e[i] } else { 0.0 })
        .collect();
    ScalarMap::with_validity(grid, MapRole::Variance, values, valid)
}

/// `V = 1 + (e^{+-2r} - 1) |O|^2 T` from a transmission map and an overlap map
/// holding `|O|^2`.
///
/// A mode-matched disc that is partially blocked behaves as if
/// `T = (sum sqrt(t)|u2|^2 / sum |u2|^2)^2`, see [`ideal_quantum_transmission`].
pub fn expected_variance(
    t_map: &ScalarMap,
    overlap: &ScalarMap,
    sq: &SqueezerParams,
) -> Result<ScalarMap> {
    t_map.grid().ensure_same(overlap.grid(), "expected_variance")?;
    let c = sq.excess();
    let mut values = Vec::with_capacity(t_map.grid().len());
    let mut valid = Vec::with_capacity(t_map.grid().len());
    for i in 0..t_map.grid().len() {
        let ok = t_map.validity()[i] && overlap.validity()[i];
        let (t, o) = (t_map.values()[i], overlap.values()[i]);
        if ok && !(-1e-9..=1.0 + 1e-9).contains(&t) {
            return Err(Error::parameter("T", format!("transmission {t} outside [0, 1]")));
        }
        if ok && !(-1e-9..=1.0 + 1e-9).contains(&o) {
            return Err(Error::parameter("|O|^2", format!("overlap {o} outside [0, 1]")));
        }
        valid.push(ok);
        values.push(if ok { 1.0 + c * o * t } else { 0.0 });
    }
    ScalarMap::with_validity(*t_map.grid(), MapRole::Variance, values, valid)
}

/// `|O|^2 = sum_disc |u2|^2` for a mode-matched probe.
pub fn overlap_map(u2: &ComplexField, disc: DetectionDisc) -> ScalarMap {
    let e = bin_counts(&u2.intensity(), u2.grid(), disc);
    ScalarMap::new(*u2.grid(), MapRole::Intensity, e).expect("grid-sized raster")
}

/// Noise-free quantum transmission `(V_p - 1)/(V_r - 1)` for a mode-matched
/// probe: the squared LO-weighted disc mean of `sqrt(t)`.
pub fn ideal_quantum_transmission(
    mask: &Mask,
    u2: &ComplexField,
    disc: DetectionDisc,
) -> Result<ScalarMap> {
    let m = weighted_disc_mean(mask, u2, disc, f64::sqrt)?;
    Ok(m.map_valid(MapRole::Transmission, |v| Some(v * v)))
}

/// Noise-free classical transmission `N_p / N_r`: the LO-weighted disc mean of `t`.
pub fn ideal_classical_transmission(
    mask: &Mask,
    u2: &ComplexField,
    disc: DetectionDisc,
) -> Result<ScalarMap> {
    weighted_disc_mean(mask, u2, disc, |t| t)
}

fn weighted_disc_mean(
    mask: &Mask,
    u2: &ComplexField,
    disc: DetectionDisc,
    f: impl Fn(f64) -> f64,
) -> Result<ScalarMap> {
    let grid = *u2.grid();
    grid.ensure_same(mask.grid(), "ideal transmission")?;
    let lo_int = u2.intensity();
    let weighted: Vec<f64> = lo_int
        .iter()
        .zip(mask.values())
        .map(|(i, &t)| f(t) * i)
        .collect();
    let e = bin_counts(&lo_int, &grid, disc);
    let p = bin_counts(&weighted, &grid, disc);
    let valid = floor_validity(&e, lo_int.iter().sum(), LO_FLOOR_FRACTION);
    let values = (0..grid.len())
        .map(|i| if valid[i] { p[i] / e[i] } else { 0.0 })
        .collect();
    ScalarMap::with_validity(grid, MapRole::Transmission, values, valid)
}

/// Intensity-imaging SNR `N / sqrt(N + 2 dN_d^2)`; zero when `N = 0`.
pub fn snr_traditional(n_mean: f64, dark_var: f64) -> Result<f64> {
    if !(n_mean >= 0.0) || !(dark_var >= 0.0) {
        return Err(Error::parameter(
            "snr_traditional",
            format!("need n_mean >= 0 and dark_var >= 0, got {n_mean}, {dark_var}"),
        ));
    }
    if n_mean == 0.0 {
        return Ok(0.0);
    }
    Ok(n_mean / (n_mean + 2.0 * dark_var).sqrt())
}

/// Variance-based SNR `(V - 1) / sqrt(2 + 2 V^2)`.
pub fn snr_quantum(v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::parameter("V", format!("must be >= 0, got {v}")));
    }
    Ok((v - 1.0) / (2.0 + 2.0 * v * v).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRatio {
    pub exact: f64,
    /// Small-photon-number form `sqrt(1 + 2 dN_d^2 / N)`.
    pub approx: f64,
}

/// Ratio of variance-based to intensity SNR for an anti-squeezed vacuum and a
/// coherent beam of equal mean photon number `N = sinh^2 r`.
pub fn snr_ratio(r: f64, dark_var: f64) -> Result<SnrRatio> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::parameter(
            "r",
            format!("must be > 0 (N = sinh^2 r divides), got {r}"),
        ));
    }
    if !(dark_var >= 0.0) {
        return Err(Error::parameter("dark_var", format!("must be >= 0, got {dark_var}")));
    }
    let n = r.sinh().powi(2);
    let g = (2.0 * r).exp();
    let exact = (g - 1.0) / (2.0 + 2.0 * g * g).sqrt() * (n + 2.0 * dark_var).sqrt() / n;
    let approx = (1.0 + 2.0 * dark_var / n).sqrt();
    Ok(SnrRatio { exact, approx })
}

/// Squeezed photons reaching the object: `N_sq * t_expo / t_coh` per frame,
/// times `frames`.
pub fn photon_budget(n_sq: f64, t_expo: f64, t_coh: f64, frames: u64) -> Result<f64> {
    if !(n_sq >= 0.0) || !(t_expo > 0.0) || !(t_coh > 0.0) {
        return Err(Error::parameter(
            "photon_budget",
            format!("need n_sq >= 0 and positive times, got {n_sq}, {t_expo}, {t_coh}"),
        ));
    }
    Ok(n_sq * t_expo / t_coh * frames as f64)
}

/// Inverse of [`photon_budget`] for one frame: the squeezing parameter whose
/// mode carries `photons_per_frame * t_coh / t_expo` photons.
pub fn r_for_photons_per_frame(photons_per_frame: f64, t_expo: f64, t_coh: f64) -> Result<f64> {
    if !(photons_per_frame >= 0.0) || !(t_expo > 0.0) || !(t_coh > 0.0) {
        return Err(Error::parameter(
            "photons_per_frame",
            format!("need photons >= 0 and positive times, got {photons_per_frame}"),
        ));
    }
    Ok((photons_per_frame * t_coh / t_expo).sqrt().asinh())
}
