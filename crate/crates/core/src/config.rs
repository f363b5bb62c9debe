//! Flat JSON experiment description.
//!
//! Every key is optional; omitted keys take the documented defaults. Lengths
//! are in pixel-pitch units. The squeezer strength is given either as
//! `anti_squeezing_db` or as `squeezing_r`, never both.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::field::{apply_mask, gaussian_mode, propagate, rayleigh_range, rect_mask};
use crate::montecarlo::{CameraParams, PortModel, Scene};
use crate::theory::{db_to_r, LocalOscillatorParams, Quadrature, SqueezerParams};
use crate::{ComplexField, DetectionDisc, Error, Grid, Mask, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid_width: usize,
    pub grid_height: usize,
    pub pixel_pitch: f64,
    /// Optical wavelength in pitch units.
    pub wavelength: f64,

    pub lo_waist: f64,
    /// Beam centre; defaults to the grid centre.
    pub lo_center: Option<[f64; 2]>,
    pub lo_photons_per_frame: f64,
    /// Squeezed-mode waist; defaults to the LO waist.
    pub sq_waist: Option<f64>,
    pub sq_center: Option<[f64; 2]>,

    /// Opaque rectangle `[x0, y0]..[x1, y1)`, half-open.
    pub mask_lo: [usize; 2],
    pub mask_hi: [usize; 2],
    /// Make the rectangle the only open region.
    pub mask_inverted: bool,

    pub anti_squeezing_db: Option<f64>,
    pub squeezing_r: Option<f64>,
    pub quadrature: Quadrature,
    /// Relative LO phase in radians.
    pub phase: f64,

    /// Free-space distance used for the unmatched (propagated) variant.
    pub propagation_distance: Option<f64>,

    pub dark_mean: f64,
    pub dark_var: f64,
    pub frames_per_cluster: usize,
    pub exposure_s: f64,
    pub coherence_time_s: f64,
    pub round_counts: bool,
    pub port_model: PortModel,
    /// Remove the calibrated dark mean before forming ratios.
    pub subtract_dark_mean: bool,
    /// Subtract the within-cluster mean difference in the variance estimator.
    pub subtract_cluster_mean: bool,

    pub radii: Vec<u32>,
    pub clusters: usize,
    /// Minimum `|V_r - 1|` for a valid quantum transmission.
    pub transmission_floor: f64,
    /// Minimum reference counts for a valid classical transmission, as a
    /// fraction of the peak binned reference counts.
    pub classical_floor_fraction: f64,

    /// Classical-beam photons per frame, summed over the beam.
    pub classical_photons: f64,
    /// Quantum sweep ladder in squeezed photons per frame.
    pub photon_budgets: Vec<f64>,
    /// Classical sweep ladder in photons per frame.
    pub classical_photons_per_frame: Vec<f64>,
    pub sweep_clusters: usize,
    pub sweep_repeats: usize,

    pub cross_section_row: Option<usize>,
    pub cross_section_span: usize,
    /// Clusters per scene written as binary dumps by `simulate`.
    pub dump_clusters: usize,

    pub seed: u64,
    pub workers: Option<usize>,
    pub bit_exact: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid_width: 128,
            grid_height: 128,
            pixel_pitch: 1.0,
            wavelength: 0.06115,
            lo_waist: 25.0,
            lo_center: None,
            lo_photons_per_frame: 1e15,
            sq_waist: None,
            sq_center: None,
            mask_lo: [0, 0],
            mask_hi: [64, 64],
            mask_inverted: false,
            anti_squeezing_db: None,
            squeezing_r: None,
            quadrature: Quadrature::AntiSqueezed,
            phase: 0.0,
            propagation_distance: None,
            dark_mean: 100.0,
            dark_var: 400.0,
            frames_per_cluster: 4,
            exposure_s: 2e-6,
            coherence_time_s: 2.5e-6,
            round_counts: false,
            port_model: PortModel::Gaussian,
            subtract_dark_mean: true,
            subtract_cluster_mean: false,
            radii: vec![1, 5, 10, 15],
            clusters: 5000,
            transmission_floor: 0.05,
            classical_floor_fraction: 0.01,
            classical_photons: 250.0,
            photon_budgets: vec![0.8, 8.0, 80.0, 800.0],
            classical_photons_per_frame: vec![250.0],
            sweep_clusters: 500,
            sweep_repeats: 3,
            cross_section_row: None,
            cross_section_span: 80,
            dump_clusters: 1,
            seed: 1,
            workers: None,
            bit_exact: false,
        }
    }
}

const DEFAULT_DB: f64 = 7.5;

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::config(field, reason)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be a positive number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
                .unwrap_or("<json>")
                .to_string();
            Error::config(field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_width < 2 || self.grid_height < 2 {
            return Err(bad("grid_width", "grid must be at least 2x2"));
        }
        positive("pixel_pitch", self.pixel_pitch)?;
        positive("wavelength", self.wavelength)?;
        positive("lo_waist", self.lo_waist)?;
        if let Some(w) = self.sq_waist {
            positive("sq_waist", w)?;
        }
        positive("lo_photons_per_frame", self.lo_photons_per_frame)?;
        for (name, lo, hi, n) in [
            ("mask_hi", self.mask_lo[0], self.mask_hi[0], self.grid_width),
            ("mask_hi", self.mask_lo[1], self.mask_hi[1], self.grid_height),
        ] {
            if lo > hi || hi > n {
                return Err(bad(name, format!("rectangle [{lo}, {hi}) does not fit 0..{n}")));
            }
        }
        match (self.anti_squeezing_db, self.squeezing_r) {
            (Some(_), Some(_)) => {
                return Err(bad("squeezing_r", "give anti_squeezing_db or squeezing_r, not both"))
            }
            (Some(db), None) if !(db >= 0.0 && db.is_finite()) => {
                return Err(bad("anti_squeezing_db", format!("must be >= 0, got {db}")))
            }
            (None, Some(r)) if !(r >= 0.0 && r.is_finite()) => {
                return Err(bad("squeezing_r", format!("must be >= 0, got {r}")))
            }
            _ => {}
        }
        if !self.phase.is_finite() {
            return Err(bad("phase", "must be finite"));
        }
        if let Some(d) = self.propagation_distance {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(bad("propagation_distance", format!("must be >= 0, got {d}")));
            }
        }
        if !self.dark_mean.is_finite() {
            return Err(bad("dark_mean", "must be finite"));
        }
        if !(self.dark_var >= 0.0 && self.dark_var.is_finite()) {
            return Err(bad("dark_var", format!("must be >= 0, got {}", self.dark_var)));
        }
        if self.frames_per_cluster < 2 {
            return Err(bad("frames_per_cluster", "need at least 2 frames"));
        }
        positive("exposure_s", self.exposure_s)?;
        positive("coherence_time_s", self.coherence_time_s)?;
        if self.radii.is_empty() {
            return Err(bad("radii", "need at least one radius"));
        }
        if self.radii.contains(&0) {
            return Err(bad("radii", "radii must be >= 1"));
        }
        if self.clusters == 0 {
            return Err(bad("clusters", "need at least one cluster"));
        }
        positive("transmission_floor", self.transmission_floor)?;
        positive("classical_floor_fraction", self.classical_floor_fraction)?;
        if !(self.classical_photons >= 0.0 && self.classical_photons.is_finite()) {
            return Err(bad("classical_photons", "must be >= 0"));
        }
        if self.photon_budgets.is_empty() {
            return Err(bad("photon_budgets", "need at least one budget"));
        }
        if self.photon_budgets.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(bad("photon_budgets", "budgets must be >= 0"));
        }
        if self
            .classical_photons_per_frame
            .iter()
            .any(|b| !(*b >= 0.0 && b.is_finite()))
        {
            return Err(bad("classical_photons_per_frame", "photon counts must be >= 0"));
        }
        if self.sweep_clusters == 0 {
            return Err(bad("sweep_clusters", "need at least one cluster"));
        }
        if self.sweep_repeats == 0 {
            return Err(bad("sweep_repeats", "need at least one repeat"));
        }
        if let Some(row) = self.cross_section_row {
            if row >= self.grid_height {
                return Err(bad("cross_section_row", format!("{row} outside height {}", self.grid_height)));
            }
        }
        if self.cross_section_span == 0 || self.cross_section_span > self.grid_width {
            return Err(bad(
                "cross_section_span",
                format!("{} does not fit width {}", self.cross_section_span, self.grid_width),
            ));
        }
        if self.workers == Some(0) {
            return Err(bad("workers", "must be >= 1"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_width, self.grid_height, self.pixel_pitch)
    }

    pub fn squeezing_r_value(&self) -> Result<f64> {
        match (self.anti_squeezing_db, self.squeezing_r) {
            (_, Some(r)) => Ok(r),
            (Some(db), None) => db_to_r(db),
            (None, None) => db_to_r(DEFAULT_DB),
        }
    }

    pub fn squeezer(&self) -> Result<SqueezerParams> {
        SqueezerParams::new(self.squeezing_r_value()?, self.quadrature, self.phase)
    }

    fn center_or_default(&self, c: Option<[f64; 2]>, grid: &Grid) -> (f64, f64) {
        c.map(|[x, y]| (x, y)).unwrap_or_else(|| grid.center())
    }

    pub fn lo_mode(&self) -> Result<ComplexField> {
        let g = self.grid()?;
        gaussian_mode(g, self.lo_waist, self.center_or_default(self.lo_center, &g))
    }

    /// Squeezed mode before the object.
    pub fn sq_mode(&self) -> Result<ComplexField> {
        let g = self.grid()?;
        gaussian_mode(
            g,
            self.sq_waist.unwrap_or(self.lo_waist),
            self.center_or_default(self.sq_center.or(self.lo_center), &g),
        )
    }

    pub fn mask(&self) -> Result<Mask> {
        rect_mask(
            self.grid()?,
            (self.mask_lo[0], self.mask_lo[1]),
            (self.mask_hi[0], self.mask_hi[1]),
            self.mask_inverted,
        )
    }

    pub fn local_oscillator(&self) -> Result<LocalOscillatorParams> {
        LocalOscillatorParams::new(self.lo_photons_per_frame, self.lo_mode()?)
    }

    /// Default is ten Rayleigh ranges of the squeezed mode.
    pub fn propagation_distance_value(&self) -> f64 {
        self.propagation_distance
            .unwrap_or_else(|| 10.0 * rayleigh_range(self.sq_waist.unwrap_or(self.lo_waist), self.wavelength))
    }

    /// The squeezed mode after free-space propagation, no longer matched to the LO.
    pub fn propagated_mode(&self) -> Result<ComplexField> {
        propagate(&self.sq_mode()?, self.propagation_distance_value(), self.wavelength)
    }

    pub fn reference_scene(&self) -> Result<Scene> {
        Scene::new(self.sq_mode()?, self.local_oscillator()?, self.squeezer()?)
    }

    pub fn probe_scene(&self) -> Result<Scene> {
        Scene::new(apply_mask(&self.sq_mode()?, &self.mask()?)?, self.local_oscillator()?, self.squeezer()?)
    }

    pub fn camera(&self) -> Result<CameraParams> {
        let mut cam = CameraParams::new(self.grid()?, self.dark_mean, self.dark_var, self.frames_per_cluster)?;
        cam.exposure = self.exposure_s;
        cam.round_counts = self.round_counts;
        cam.port_model = self.port_model;
        Ok(cam)
    }

    pub fn discs(&self) -> Result<Vec<DetectionDisc>> {
        self.radii.iter().map(|&r| DetectionDisc::new(r)).collect()
    }

    /// Dark mean removed from every pixel before ratios, per port.
    pub fn dark_offset(&self) -> f64 {
        if self.subtract_dark_mean {
            self.dark_mean
        } else {
            0.0
        }
    }

    /// Row through the midpoint of the vertical mask edge inside the beam.
    pub fn cross_section_row_value(&self) -> usize {
        if let Some(r) = self.cross_section_row {
            return r;
        }
        let cy = self.lo_center.map(|c| c[1]).unwrap_or((self.grid_height as f64 - 1.0) / 2.0);
        let (y0, y1) = (self.mask_lo[1] as f64, self.mask_hi[1] as f64);
        let lo = y0.max(cy - self.lo_waist);
        let hi = y1.min(cy + self.lo_waist);
        let mid = if lo < hi { 0.5 * (lo + hi) } else { 0.5 * (y0 + y1) };
        (mid.floor().max(0.0) as usize).min(self.grid_height - 1)
    }

    /// Column of the vertical mask edge crossed by the cross-section.
    pub fn mask_edge_column(&self) -> usize {
        let cx = self.lo_center.map(|c| c[0]).unwrap_or((self.grid_width as f64 - 1.0) / 2.0);
        let (x0, x1) = (self.mask_lo[0], self.mask_hi[0]);
        // pick the edge nearer the beam centre
        if x0 > 0 && (x0 as f64 - cx).abs() < (x1 as f64 - cx).abs() || x1 >= self.grid_width {
            x0
        } else {
            x1
        }
    }

    pub fn cross_section_start(&self) -> Result<usize> {
        crate::analysis::centered_start(self.grid_width, self.mask_edge_column(), self.cross_section_span)
    }
}
