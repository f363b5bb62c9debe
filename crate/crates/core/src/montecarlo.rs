//! Seeded synthesis of camera frames.
//!
//! Quantum clusters model the two output ports of a 50:50 beam splitter that
//! mixes the squeezed probe with a strong local oscillator, in the strong-LO
//! Gaussian limit. Per frame the LO-normalized difference signal at each lit
//! pixel is `eta'(x)`, a standard normal vector whose component in the span of
//!
//! ```text
//! f_a(x) = Re w(x) / |u2(x)|,  f_b(x) = Im w(x) / |u2(x)|,  w = conj(u2) u1 e^{i phi}
//! ```
//!
//! is redrawn with covariance `I + c_a f_a f_a^T + c_b f_b f_b^T`. Summing
//! `D = sqrt(N_LO) |u2| eta'` over any disc then has exactly the analytic
//! binned variance, at `O(pixels)` cost per frame.
//!
//! Every frame draws from its own xoshiro256++ stream keyed by
//! [`derive_stream_seed`], so results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::ClusterSignals;
use crate::field::ComplexField;
use crate::theory::{LocalOscillatorParams, SqueezerParams, LO_FLOOR_FRACTION};
use crate::{Error, Grid, Result, ScalarMap};

/// How port counts are drawn around their means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortModel {
    /// Gaussian LO shot noise in the strong-oscillator limit.
    #[default]
    Gaussian,
    /// Poisson photocounts around a classically fluctuating excess. Only
    /// valid when the excess covariance is positive semidefinite.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub grid: Grid,
    /// Dark counts per pixel per frame, mean.
    pub dark_mean: f64,
    /// Dark counts per pixel per frame, variance.
    pub dark_var: f64,
    pub frames_per_cluster: usize,
    /// Exposure per frame in seconds; metadata only.
    pub exposure: f64,
    /// Round every count to the nearest integer.
    pub round_counts: bool,
    pub port_model: PortModel,
}

impl CameraParams {
    pub fn new(grid: Grid, dark_mean: f64, dark_var: f64, frames_per_cluster: usize) -> Result<Self> {
        let cam = Self {
            grid,
            dark_mean,
            dark_var,
            frames_per_cluster,
            exposure: 2e-6,
            round_counts: false,
            port_model: PortModel::Gaussian,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dark_var >= 0.0 && self.dark_var.is_finite()) {
            return Err(Error::parameter("dark_var", format!("must be >= 0, got {}", self.dark_var)));
        }
        if !self.dark_mean.is_finite() {
            return Err(Error::parameter("dark_mean", "must be finite"));
        }
        if self.frames_per_cluster < 2 {
            return Err(Error::parameter(
                "frames_per_cluster",
                format!("need at least 2 frames, got {}", self.frames_per_cluster),
            ));
        }
        Ok(())
    }

    fn dark(&self) -> Option<Normal<f64>> {
        (self.dark_var > 0.0 || self.dark_mean != 0.0)
            .then(|| Normal::new(self.dark_mean, self.dark_var.sqrt()).expect("validated dark noise"))
    }
}

/// Squeezed probe, local oscillator and squeezer bound into one sampling context.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub u1: ComplexField,
    pub lo: LocalOscillatorParams,
    pub sq: SqueezerParams,
}

impl Scene {
    pub fn new(u1: ComplexField, lo: LocalOscillatorParams, sq: SqueezerParams) -> Result<Self> {
        u1.grid().ensure_same(lo.mode().grid(), "scene")?;
        let e = u1.energy();
        if e > 1.0 + 1e-9 {
            return Err(Error::Physicality(format!(
                "squeezed mode energy {e} exceeds 1"
            )));
        }
        Ok(Self { u1, lo, sq })
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }
}

/// Where a cluster's random streams came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub master: u64,
    pub cluster_index: u64,
    pub frame_seeds: Vec<u64>,
}

impl SeedLineage {
    fn new(master: u64, cluster_index: u64, frames: usize) -> Self {
        Self {
            master,
            cluster_index,
            frame_seeds: (0..frames as u64)
                .map(|f| derive_stream_seed(master, cluster_index, f))
                .collect(),
        }
    }
}

/// One burst of frames from both homodyne output ports.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticCluster {
    pub grid: Grid,
    pub port1: Vec<Vec<f64>>,
    pub port2: Vec<Vec<f64>>,
    pub lineage: SeedLineage,
}

impl KineticCluster {
    pub fn new(grid: Grid, port1: Vec<Vec<f64>>, port2: Vec<Vec<f64>>, lineage: SeedLineage) -> Result<Self> {
        if port1.len() != port2.len() || port1.is_empty() {
            return Err(Error::Shape(format!(
                "port frame counts {} and {} must match and be nonzero",
                port1.len(),
                port2.len()
            )));
        }
        if port1.iter().chain(&port2).any(|f| f.len() != grid.len()) {
            return Err(Error::Shape("port frame does not match grid".into()));
        }
        Ok(Self {
            grid,
            port1,
            port2,
            lineage,
        })
    }

    pub fn frames(&self) -> usize {
        self.port1.len()
    }

    /// Same data with the port labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            grid: self.grid,
            port1: self.port2.clone(),
            port2: self.port1.clone(),
            lineage: self.lineage.clone(),
        }
    }
}

/// Single-port frames of a coherent beam plus dark noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalCluster {
    pub grid: Grid,
    pub frames: Vec<Vec<f64>>,
    pub lineage: SeedLineage,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed for frame `frame_index` of cluster `cluster_index`.
pub fn derive_stream_seed(master: u64, cluster_index: u64, frame_index: u64) -> u64 {
    let h = splitmix64(master ^ 0x5153_4841_444F_5731);
    let h = splitmix64(h ^ cluster_index);
    splitmix64(h.rotate_left(17) ^ frame_index)
}

/// Independent master seed for a labelled sub-experiment.
pub fn sub_seed(master: u64, label: u64) -> u64 {
    splitmix64(splitmix64(master ^ 0xA5A5_5A5A_C3C3_3C3C) ^ label.wrapping_mul(0x9E37_79B9))
}

type FrameRng = Xoshiro256PlusPlus;

fn frame_rng(seed: u64) -> FrameRng {
    FrameRng::seed_from_u64(seed)
}

/// Precomputed sampling state for one scene and camera.
#[derive(Debug, Clone)]
pub struct QuantumSampler {
    cam: CameraParams,
    /// Raster indices of pixels with nonzero LO amplitude.
    lit: Vec<usize>,
    /// `N_LO |u2|^2` over the full raster.
    lo_counts: Vec<f64>,
    /// `sqrt(N_LO) |u2|` at lit pixels.
    scale: Vec<f64>,
    /// Orthonormal basis of span{f_a, f_b}, over lit pixels.
    basis: Vec<Vec<f64>>,
    /// Lower-triangular factor of the in-span covariance (Gaussian ports) or
    /// of the excess covariance (Poisson ports).
    factor: [[f64; 2]; 2],
}

const SPAN_EPS: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl QuantumSampler {
    pub fn new(scene: &Scene, cam: &CameraParams) -> Result<Self> {
        cam.validate()?;
        scene.grid().ensure_same(&cam.grid, "scene vs camera")?;
        let e1 = scene.u1.energy();
        if e1 > 1.0 + 1e-9 {
            return Err(Error::Physicality(format!("squeezed mode energy {e1} exceeds 1")));
        }
        let u1 = scene.u1.amplitudes();
        let u2 = scene.lo.mode().amplitudes();
        let n_lo = scene.lo.photons_per_frame();
        let rot = num_complex::Complex64::from_polar(1.0, scene.sq.phase);

        let lit: Vec<usize> = (0..u2.len()).filter(|&i| u2[i].norm() > 0.0).collect();
        let lo_counts: Vec<f64> = u2.iter().map(|a| n_lo * a.norm_sqr()).collect();
        let scale: Vec<f64> = lit.iter().map(|&i| n_lo.sqrt() * u2[i].norm()).collect();
        let (fa, fb): (Vec<f64>, Vec<f64>) = lit
            .iter()
            .map(|&i| {
                let w = u2[i].conj() * u1[i] * rot;
                let m = u2[i].norm();
                (w.re / m, w.im / m)
            })
            .unzip();

        let total: f64 = u2.iter().map(|a| a.norm_sqr()).sum();
        let dim = lo_counts
            .iter()
            .filter(|&&c| c >= LO_FLOOR_FRACTION * total * n_lo && c < 10.0)
            .count();
        if dim > 0 {
            log::warn!(
                "{dim} lit pixels receive fewer than 10 LO photons per frame; \
                 the Gaussian shot-noise model is inaccurate there"
            );
        }

        // Gram-Schmidt over {f_a, f_b}, skipping vanishing directions.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2);
        for v in [&fa, &fb] {
            let mut r = v.clone();
            for q in &basis {
                let p = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
            let n = dot(&r, &r).sqrt();
            if n >= SPAN_EPS {
                r.iter_mut().for_each(|x| *x /= n);
                basis.push(r);
            }
        }

        let (ca, cb) = scene.sq.excess_coefficients();
        let k = basis.len();
        let coords = |v: &[f64]| -> [f64; 2] {
            let mut c = [0.0; 2];
            for (j, q) in basis.iter().enumerate() {
                c[j] = dot(q, v);
            }
            c
        };
        let a = coords(&fa);
        let b = coords(&fb);
        let mut excess = [[0.0; 2]; 2];
        for i in 0..k {
            for j in 0..k {
                excess[i][j] = ca * a[i] * a[j] + cb * b[i] * b[j];
            }
        }

        let factor = match cam.port_model {
            PortModel::Gaussian => {
                let mut m = excess;
                for (i, row) in m.iter_mut().enumerate().take(k) {
                    row[i] += 1.0;
                }
                cholesky(&m, k).ok_or_else(|| {
                    Error::Physicality("two-mode covariance is not positive definite".into())
                })?
            }
            PortModel::Poisson => psd_sqrt(&excess, k).ok_or_else(|| {
                Error::Physicality(
                    "Poisson ports need a non-negative excess covariance \
                     (phase-matched anti-squeezed probes only)"
                        .into(),
                )
            })?,
        };

        Ok(Self {
            cam: *cam,
            lit,
            lo_counts,
            scale,
            basis,
            factor,
        })
    }

    /// Dimension of the squeezed subspace (0, 1 or 2).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Raster indices of lit pixels, the coordinates of [`Self::basis`].
    pub fn lit_pixels(&self) -> &[usize] {
        &self.lit
    }

    /// LO-normalized difference signal `eta'` over lit pixels for one frame.
    pub fn sample_eta<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut eta: Vec<f64> = (0..self.lit.len()).map(|_| rng.sample(StandardNormal)).collect();
        let k = self.basis.len();
        if k == 0 {
            return eta;
        }
        let mut proj = [0.0; 2];
        for (p, q) in proj.iter_mut().zip(&self.basis) {
            *p = dot(q, &eta);
        }
        let z: [f64; 2] = [rng.sample(StandardNormal), if k > 1 { rng.sample(StandardNormal) } else { 0.0 }];
        let zeta = lower_mul(&self.factor, &z, k);
        for (j, q) in self.basis.iter().enumerate() {
            let delta = zeta[j] - proj[j];
            eta.iter_mut().zip(q).for_each(|(e, qv)| *e += delta * qv);
        }
        eta
    }

    /// Frames of one kinetic cluster.
    pub fn cluster(&self, master: u64, cluster_index: u64) -> KineticCluster {
        let frames = self.cam.frames_per_cluster;
        let lineage = SeedLineage::new(master, cluster_index, frames);
        let mut port1 = Vec::with_capacity(frames);
        let mut port2 = Vec::with_capacity(frames);
        for &seed in &lineage.frame_seeds {
            let (a, b) = self.frame(&mut frame_rng(seed));
            port1.push(a);
            port2.push(b);
        }
        KineticCluster {
            grid: self.cam.grid,
            port1,
            port2,
            lineage,
        }
    }

    /// Difference and sum signals of cluster `cluster_index`, bit-identical to
    /// `ClusterSignals::new(&self.cluster(..))` without storing the ports.
    pub fn signals(&self, master: u64, cluster_index: u64) -> ClusterSignals {
        let frames = self.cam.frames_per_cluster;
        let mut sig = ClusterSignals::with_capacity(self.cam.grid, frames);
        for f in 0..frames as u64 {
            let mut rng = frame_rng(derive_stream_seed(master, cluster_index, f));
            let (a, b) = self.frame(&mut rng);
            sig.push_frame(&a, &b);
        }
        sig.finish_frames();
        sig
    }

    fn frame(&self, rng: &mut FrameRng) -> (Vec<f64>, Vec<f64>) {
        match self.cam.port_model {
            PortModel::Gaussian => self.gaussian_frame(rng),
            PortModel::Poisson => self.poisson_frame(rng),
        }
    }

    fn gaussian_frame(&self, rng: &mut FrameRng) -> (Vec<f64>, Vec<f64>) {
        let eta = self.sample_eta(rng);
        let mut p1: Vec<f64> = self.lo_counts.iter().map(|c| 0.5 * c).collect();
        let mut p2 = p1.clone();
        for ((&i, &s), &e) in self.lit.iter().zip(&self.scale).zip(&eta) {
            let d = 0.5 * s * e;
            p1[i] += d;
            p2[i] -= d;
        }
        self.finish_frame(rng, p1, p2)
    }

    fn poisson_frame(&self, rng: &mut FrameRng) -> (Vec<f64>, Vec<f64>) {
        let k = self.basis.len();
        let z: [f64; 2] = [rng.sample(StandardNormal), if k > 1 { rng.sample(StandardNormal) } else { 0.0 }];
        let xi = lower_mul(&self.factor, &z, k);
        let mut excess = vec![0.0; self.lo_counts.len()];
        for (li, (&i, &s)) in self.lit.iter().zip(&self.scale).enumerate() {
            let mut e = 0.0;
            for (j, q) in self.basis.iter().enumerate() {
                e += q[li] * xi[j];
            }
            excess[i] = s * e;
        }
        let draw = |rng: &mut FrameRng, mean: f64| -> f64 {
            if mean <= 0.0 {
                0.0
            } else {
                Poisson::new(mean).expect("positive mean").sample(rng)
            }
        };
        let mut p1 = Vec::with_capacity(excess.len());
        let mut p2 = Vec::with_capacity(excess.len());
        for (c, e) in self.lo_counts.iter().zip(&excess) {
            p1.push(draw(rng, 0.5 * (c + e)));
            p2.push(draw(rng, 0.5 * (c - e)));
        }
        self.finish_frame(rng, p1, p2)
    }

    fn finish_frame(&self, rng: &mut FrameRng, mut p1: Vec<f64>, mut p2: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        if let Some(dark) = self.cam.dark() {
            p1.iter_mut().for_each(|v| *v += dark.sample(rng));
            p2.iter_mut().for_each(|v| *v += dark.sample(rng));
        }
        if self.cam.round_counts {
            p1.iter_mut().for_each(|v| *v = v.round());
            p2.iter_mut().for_each(|v| *v = v.round());
        }
        (p1, p2)
    }
}

fn cholesky(m: &[[f64; 2]; 2], k: usize) -> Option<[[f64; 2]; 2]> {
    let mut l = [[0.0; 2]; 2];
    if k == 0 {
        return Some(l);
    }
    if !(m[0][0] > 0.0) {
        return None;
    }
    l[0][0] = m[0][0].sqrt();
    if k == 2 {
        l[1][0] = m[1][0] / l[0][0];
        let d = m[1][1] - l[1][0] * l[1][0];
        if !(d > 0.0) {
            return None;
        }
        l[1][1] = d.sqrt();
    }
    Some(l)
}

/// Symmetric square root of a PSD matrix (used as a generic factor).
fn psd_sqrt(m: &[[f64; 2]; 2], k: usize) -> Option<[[f64; 2]; 2]> {
    let tol = 1e-12 * (1.0 + m[0][0].abs() + m[1][1].abs());
    match k {
        0 => Some([[0.0; 2]; 2]),
        1 => (m[0][0] >= -tol).then(|| [[m[0][0].max(0.0).sqrt(), 0.0], [0.0, 0.0]]),
        _ => {
            let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
            let tr = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let (l1, l2) = (tr + disc, tr - disc);
            if l2 < -tol {
                return None;
            }
            // eigenvector for l1
            let (vx, vy) = if b.abs() > 0.0 {
                let n = ((l1 - d).powi(2) + b * b).sqrt();
                ((l1 - d) / n, b / n)
            } else if a >= d {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            let (s1, s2) = (l1.max(0.0).sqrt(), l2.max(0.0).sqrt());
            // S = s1 v v^T + s2 u u^T with u = (-vy, vx)
            Some([
                [s1 * vx * vx + s2 * vy * vy, (s1 - s2) * vx * vy],
                [(s1 - s2) * vx * vy, s1 * vy * vy + s2 * vx * vx],
            ])
        }
    }
}

fn lower_mul(l: &[[f64; 2]; 2], z: &[f64; 2], k: usize) -> [f64; 2] {
    let mut out = [0.0; 2];
    for i in 0..k {
        for j in 0..k {
            out[i] += l[i][j] * z[j];
        }
    }
    out
}

/// One quantum kinetic cluster. Builds a [`QuantumSampler`] per call; reuse a
/// sampler when drawing many clusters of the same scene.
pub fn synthesize_quantum_cluster(
    scene: &Scene,
    cam: &CameraParams,
    master: u64,
    cluster_index: u64,
) -> Result<KineticCluster> {
    Ok(QuantumSampler::new(scene, cam)?.cluster(master, cluster_index))
}

/// Pre-validated coherent-beam source.
#[derive(Debug, Clone)]
pub struct ClassicalSampler {
    cam: CameraParams,
    intensity: Vec<f64>,
}

impl ClassicalSampler {
    /// `intensity` is the mean photon number per pixel per frame.
    pub fn new(intensity: &ScalarMap, cam: &CameraParams) -> Result<Self> {
        cam.validate()?;
        intensity.grid().ensure_same(&cam.grid, "intensity vs camera")?;
        let mut values = Vec::with_capacity(intensity.grid().len());
        for (&v, &ok) in intensity.values().iter().zip(intensity.validity()) {
            if !ok || !(v >= 0.0 && v.is_finite()) {
                return Err(Error::parameter(
                    "intensity",
                    format!("must be finite and >= 0 everywhere, got {v}"),
                ));
            }
            values.push(v);
        }
        Ok(Self { cam: *cam, intensity: values })
    }

    pub fn cluster(&self, master: u64, cluster_index: u64) -> ClassicalCluster {
        let lineage = SeedLineage::new(master, cluster_index, self.cam.frames_per_cluster);
        let dark = self.cam.dark();
        let frames = lineage
            .frame_seeds
            .iter()
            .map(|&seed| {
                let mut rng = frame_rng(seed);
                self.intensity
                    .iter()
                    .map(|&mean| {
                        let mut c = if mean > 0.0 {
                            Poisson::new(mean).expect("positive mean").sample(&mut rng)
                        } else {
                            0.0
                        };
                        if let Some(d) = &dark {
                            c += d.sample(&mut rng);
                        }
                        if self.cam.round_counts {
                            c = c.round();
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        ClassicalCluster {
            grid: self.cam.grid,
            frames,
            lineage,
        }
    }
}

/// Frames of a coherent beam: `Poisson(intensity) + Normal(dark_mean, dark_var)`.
pub fn synthesize_classical_cluster(
    intensity: &ScalarMap,
    cam: &CameraParams,
    master: u64,
    cluster_index: u64,
) -> Result<ClassicalCluster> {
    Ok(ClassicalSampler::new(intensity, cam)?.cluster(master, cluster_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{apply_mask, gaussian_mode, rect_mask};
    use crate::theory::Quadrature;
    use crate::MapRole;
    use num_complex::Complex64;

    fn small_scene(r: f64, phase: f64) -> (Scene, CameraParams) {
        let g = Grid::square(16).unwrap();
        let u2 = gaussian_mode(g, 4.0, g.center()).unwrap();
        let m = rect_mask(g, (0, 0), (8, 8), false).unwrap();
        let u1 = apply_mask(&u2, &m).unwrap();
        let lo = LocalOscillatorParams::new(1e6, u2).unwrap();
        let sq = SqueezerParams::new(r, Quadrature::AntiSqueezed, phase).unwrap();
        let cam = CameraParams::new(g, 0.0, 0.0, 4).unwrap();
        (Scene::new(u1, lo, sq).unwrap(), cam)
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_stream_seed(7, 3, 2), derive_stream_seed(7, 3, 2));
        let mut all = std::collections::HashSet::new();
        for m in 0..4 {
            for c in 0..50 {
                for f in 0..8 {
                    assert!(all.insert(derive_stream_seed(m, c, f)));
                }
            }
        }
        assert_ne!(sub_seed(1, 0), sub_seed(1, 1));
    }

    #[test]
    fn same_seed_same_cluster() {
        let (scene, cam) = small_scene(0.8, 0.0);
        let a = synthesize_quantum_cluster(&scene, &cam, 11, 5).unwrap();
        let b = synthesize_quantum_cluster(&scene, &cam, 11, 5).unwrap();
        assert_eq!(a, b);
        let c = synthesize_quantum_cluster(&scene, &cam, 12, 5).unwrap();
        assert_ne!(a.port1, c.port1);
    }

    #[test]
    fn direct_signals_match_port_route() {
        let (scene, mut cam) = small_scene(0.8, 0.0);
        cam.dark_mean = 3.0;
        cam.dark_var = 2.0;
        let s = QuantumSampler::new(&scene, &cam).unwrap();
        let via_ports = ClusterSignals::new(&s.cluster(4, 9)).unwrap();
        assert_eq!(s.signals(4, 9), via_ports);
    }

    #[test]
    fn phase_matched_real_fields_give_rank_one() {
        let (scene, cam) = small_scene(0.8, 0.0);
        assert_eq!(QuantumSampler::new(&scene, &cam).unwrap().rank(), 1);
        let (scene, cam) = small_scene(0.8, 0.3);
        assert_eq!(QuantumSampler::new(&scene, &cam).unwrap().rank(), 1);
        let far = crate::field::propagate(&scene.u1, 500.0, 0.5).unwrap();
        let scrambled = Scene::new(far, scene.lo.clone(), scene.sq).unwrap();
        assert_eq!(QuantumSampler::new(&scrambled, &cam).unwrap().rank(), 2);
        let g = Grid::square(8).unwrap();
        let u2 = gaussian_mode(g, 2.0, g.center()).unwrap();
        let lo = LocalOscillatorParams::new(1e4, u2).unwrap();
        let sq = SqueezerParams::new(0.5, Quadrature::AntiSqueezed, 0.0).unwrap();
        let vac = Scene::new(ComplexField::zeros(g), lo, sq).unwrap();
        let cam = CameraParams::new(g, 0.0, 0.0, 2).unwrap();
        assert_eq!(QuantumSampler::new(&vac, &cam).unwrap().rank(), 0);
    }

    #[test]
    fn gaussian_ports_conserve_lo_counts_without_dark_noise() {
        let (scene, cam) = small_scene(0.8, 0.2);
        let c = synthesize_quantum_cluster(&scene, &cam, 1, 0).unwrap();
        let u2 = scene.lo.mode();
        for f in 0..c.frames() {
            for i in 0..cam.grid.len() {
                let s = c.port1[f][i] + c.port2[f][i];
                let expect = 1e6 * u2.amplitudes()[i].norm_sqr();
                assert!((s - expect).abs() <= 1e-9 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn unphysical_scene_is_rejected() {
        let g = Grid::square(8).unwrap();
        let u2 = gaussian_mode(g, 2.0, g.center()).unwrap();
        let lo = LocalOscillatorParams::new(1e4, u2.clone()).unwrap();
        let sq = SqueezerParams::new(0.5, Quadrature::AntiSqueezed, 0.0).unwrap();
        let too_big = u2.scaled(Complex64::new(1.1, 0.0));
        assert!(matches!(Scene::new(too_big, lo, sq), Err(Error::Physicality(_))));
    }

    #[test]
    fn camera_validation() {
        let g = Grid::square(8).unwrap();
        assert!(CameraParams::new(g, 0.0, -1.0, 4).is_err());
        assert!(CameraParams::new(g, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn poisson_ports_need_psd_excess() {
        let (scene, mut cam) = small_scene(0.8, 0.0);
        cam.port_model = PortModel::Poisson;
        let s = QuantumSampler::new(&scene, &cam).unwrap();
        let c = s.cluster(3, 0);
        assert!(c.port1.iter().flatten().all(|v| v.fract() == 0.0 && *v >= 0.0));
        let (scene, mut cam) = small_scene(0.8, std::f64::consts::FRAC_PI_2);
        cam.port_model = PortModel::Poisson;
        assert!(matches!(QuantumSampler::new(&scene, &cam), Err(Error::Physicality(_))));
    }

    #[test]
    fn classical_zero_intensity_is_dark_only() {
        let g = Grid::square(8).unwrap();
        let cam = CameraParams::new(g, 5.0, 0.0, 3).unwrap();
        let i0 = ScalarMap::constant(g, MapRole::Intensity, 0.0);
        let c = synthesize_classical_cluster(&i0, &cam, 0, 0).unwrap();
        assert!(c.frames.iter().flatten().all(|&v| v == 5.0));
        let neg = ScalarMap::constant(g, MapRole::Intensity, -1.0);
        assert!(synthesize_classical_cluster(&neg, &cam, 0, 0).is_err());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = [[2.0, 0.7], [0.7, 0.5]];
        let s = psd_sqrt(&m, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| s[i][k] * s[k][j]).sum();
                assert!((v - m[i][j]).abs() < 1e-12);
            }
        }
        assert!(psd_sqrt(&[[1.0, 0.0], [0.0, -0.5]], 2).is_none());
    }
}
