//! From frames to observables: binned variance maps, transmission maps,
//! cross-sections and the similarity score.
//!
//! The variance estimator is the literal normalized form
//!
//! ```text
//! V_c(x) = mean_f (N1^R - N2^R)^2 / mean_f (N1^R + N2^R)
//! ```
//!
//! evaluated per kinetic cluster `c` and averaged over clusters. A pixel is
//! invalid when its denominator falls to or below the floor in any cluster.

use crate::disc::{bin_counts, RowPrefix};
use crate::montecarlo::{ClassicalCluster, KineticCluster};
use crate::{DetectionDisc, Error, Grid, MapRole, Result, ScalarMap};

/// Tuning knobs of the variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceOptions {
    /// Denominators at or below this many binned counts invalidate a pixel.
    pub denominator_floor: f64,
    /// Per-pixel per-port dark mean removed from the denominator.
    pub dark_offset: f64,
    /// Subtract the within-cluster mean difference before squaring, using the
    /// unbiased `F - 1` normalization.
    pub subtract_cluster_mean: bool,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            denominator_floor: 0.0,
            dark_offset: 0.0,
            subtract_cluster_mean: false,
        }
    }
}

/// Streaming accumulator of per-cluster variance ratios for one disc.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceAccumulator {
    grid: Grid,
    disc: DetectionDisc,
    opts: VarianceOptions,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    invalid: Vec<bool>,
    clusters: u64,
}

/// Cluster-averaged variance map with its pointwise standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub map: ScalarMap,
    /// Standard error of the mean over clusters. Infinite for a single cluster.
    pub stderr: Vec<f64>,
    pub clusters: u64,
}

impl VarianceAccumulator {
    pub fn new(grid: Grid, disc: DetectionDisc, opts: VarianceOptions) -> Self {
        let n = grid.len();
        Self {
            grid,
            disc,
            opts,
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            invalid: vec![false; n],
            clusters: 0,
        }
    }

    pub fn disc(&self) -> DetectionDisc {
        self.disc
    }

    pub fn options(&self) -> &VarianceOptions {
        &self.opts
    }

    pub fn clusters(&self) -> u64 {
        self.clusters
    }

    pub fn push(&mut self, cluster: &KineticCluster) -> Result<()> {
        let sig = ClusterSignals::new(cluster)?;
        self.push_signals(&sig)
    }

    /// Adds one cluster given its pre-differenced port signals.
    pub fn push_signals(&mut self, sig: &ClusterSignals) -> Result<()> {
        self.grid.ensure_same(&sig.grid, "variance accumulator")?;
        self.push_ratio(&sig.ratio(self.disc, &self.opts))
    }

    /// Adds one cluster's per-pixel ratio as computed with this disc and options.
    pub fn push_ratio(&mut self, ratio: &[Option<f64>]) -> Result<()> {
        if ratio.len() != self.sum.len() {
            return Err(Error::Shape("ratio raster does not match grid".into()));
        }
        for (i, &v) in ratio.iter().enumerate() {
            match v {
                Some(v) => {
                    self.sum[i] += v;
                    self.sum_sq[i] += v * v;
                }
                None => self.invalid[i] = true,
            }
        }
        self.clusters += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.grid.ensure_same(&other.grid, "variance accumulator merge")?;
        if self.disc != other.disc || self.opts != other.opts {
            return Err(Error::parameter("accumulator", "cannot merge different disc or options"));
        }
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.invalid[i] |= other.invalid[i];
        }
        self.clusters += other.clusters;
        Ok(())
    }

    pub fn finish(&self) -> Result<VarianceEstimate> {
        if self.clusters == 0 {
            return Err(Error::parameter("clusters", "need at least one cluster"));
        }
        let n = self.clusters as f64;
        let mut means = Vec::with_capacity(self.sum.len());
        let mut stderr = Vec::with_capacity(self.sum.len());
        for i in 0..self.sum.len() {
            let m = self.sum[i] / n;
            means.push(m);
            stderr.push(if self.clusters > 1 {
                let var = ((self.sum_sq[i] - n * m * m) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            } else {
                f64::INFINITY
            });
        }
        let valid: Vec<bool> = self.invalid.iter().map(|b| !b).collect();
        Ok(VarianceEstimate {
            map: ScalarMap::with_validity(self.grid, MapRole::Variance, means, valid)?,
            stderr,
            clusters: self.clusters,
        })
    }
}

/// Per-frame difference and frame-averaged sum of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSignals {
    grid: Grid,
    diff: Vec<Vec<f64>>,
    mean_sum: Vec<f64>,
}

impl ClusterSignals {
    pub fn new(cluster: &KineticCluster) -> Result<Self> {
        if cluster.frames() < 2 {
            return Err(Error::parameter("frames_per_cluster", "need at least 2 frames"));
        }
        let mut sig = Self::with_capacity(cluster.grid, cluster.frames());
        for (a, b) in cluster.port1.iter().zip(&cluster.port2) {
            sig.push_frame(a, b);
        }
        sig.finish_frames();
        Ok(sig)
    }

    pub(crate) fn with_capacity(grid: Grid, frames: usize) -> Self {
        Self {
            grid,
            diff: Vec::with_capacity(frames),
            mean_sum: vec![0.0; grid.len()],
        }
    }

    pub(crate) fn push_frame(&mut self, a: &[f64], b: &[f64]) {
        for (s, (x, y)) in self.mean_sum.iter_mut().zip(a.iter().zip(b)) {
            *s += x + y;
        }
        self.diff.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
    }

    pub(crate) fn finish_frames(&mut self) {
        let f = self.diff.len() as f64;
        self.mean_sum.iter_mut().for_each(|s| *s /= f);
    }

    pub fn frames(&self) -> usize {
        self.diff.len()
    }

    /// Per-pixel ratio of this cluster, `None` where the denominator fails the floor.
    pub fn ratio(&self, disc: DetectionDisc, opts: &VarianceOptions) -> Vec<Option<f64>> {
        self.ratios(&[disc], opts).pop().expect("one disc")
    }

    /// [`Self::ratio`] for several discs, sharing the row prefix sums.
    pub fn ratios(&self, discs: &[DetectionDisc], opts: &VarianceOptions) -> Vec<Vec<Option<f64>>> {
        let n = self.grid.len();
        let f = self.diff.len() as f64;
        let max_r = discs.iter().map(|d| d.radius()).max().unwrap_or(1);
        let mut num = vec![vec![0.0; n]; discs.len()];
        let mut mean_d = vec![vec![0.0; if opts.subtract_cluster_mean { n } else { 0 }]; discs.len()];
        let mut prefix: Option<RowPrefix> = None;
        let mut binned = vec![0.0; n];
        for d in &self.diff {
            match prefix.as_mut() {
                Some(p) => p.refill(d),
                None => prefix = Some(RowPrefix::new(d, &self.grid, max_r)),
            }
            let prefix = prefix.as_ref().expect("prefix built");
            for (k, &disc) in discs.iter().enumerate() {
                let b: &[f64] = if disc.radius() == 1 {
                    d
                } else {
                    prefix.disc_sums_into(disc, &mut binned);
                    &binned
                };
                num[k].iter_mut().zip(b).for_each(|(acc, v)| *acc += v * v);
                if opts.subtract_cluster_mean {
                    mean_d[k].iter_mut().zip(b).for_each(|(m, v)| *m += v);
                }
            }
        }
        let shifted: Vec<f64> = self.mean_sum.iter().map(|s| s - 2.0 * opts.dark_offset).collect();
        let den_prefix = RowPrefix::new(&shifted, &self.grid, max_r);
        discs
            .iter()
            .enumerate()
            .map(|(k, &disc)| {
                let den = if disc.radius() == 1 { shifted.clone() } else { den_prefix.disc_sums(disc) };
                (0..n)
                    .map(|i| {
                        let a = if opts.subtract_cluster_mean {
                            let m = mean_d[k][i] / f;
                            (num[k][i] - f * m * m) / (f - 1.0)
                        } else {
                            num[k][i] / f
                        };
                        (den[i] > opts.denominator_floor).then(|| a / den[i])
                    })
                    .collect()
            })
            .collect()
    }
}

/// Cluster-averaged variance map for one disc.
pub fn estimate_variance_map(
    clusters: &[KineticCluster],
    disc: DetectionDisc,
    opts: VarianceOptions,
) -> Result<VarianceEstimate> {
    let first = clusters
        .first()
        .ok_or_else(|| Error::parameter("clusters", "need at least one cluster"))?;
    let mut acc = VarianceAccumulator::new(first.grid, disc, opts);
    for c in clusters {
        acc.push(c)?;
    }
    acc.finish()
}

/// Accumulates the frame- and cluster-averaged binned counts of classical frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCountAccumulator {
    grid: Grid,
    dark_offset: f64,
    sum: Vec<f64>,
    frames: u64,
}

impl MeanCountAccumulator {
    pub fn new(grid: Grid, dark_offset: f64) -> Self {
        Self {
            grid,
            dark_offset,
            sum: vec![0.0; grid.len()],
            frames: 0,
        }
    }

    pub fn push(&mut self, cluster: &ClassicalCluster) -> Result<()> {
        self.grid.ensure_same(&cluster.grid, "count accumulator")?;
        for f in &cluster.frames {
            self.sum.iter_mut().zip(f).for_each(|(s, v)| *s += v - self.dark_offset);
            self.frames += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.grid.ensure_same(&other.grid, "count accumulator merge")?;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.frames += other.frames;
        Ok(())
    }

    /// Unbinned per-pixel mean counts.
    pub fn mean(&self) -> Result<ScalarMap> {
        if self.frames == 0 {
            return Err(Error::parameter("clusters", "need at least one frame"));
        }
        let f = self.frames as f64;
        ScalarMap::new(self.grid, MapRole::Intensity, self.sum.iter().map(|s| s / f).collect())
    }
}

/// Disc sums of a map. Invalid input pixels contribute zero.
pub fn bin_map(map: &ScalarMap, disc: DetectionDisc) -> ScalarMap {
    let vals: Vec<f64> = map
        .values()
        .iter()
        .zip(map.validity())
        .map(|(&v, &ok)| if ok { v } else { 0.0 })
        .collect();
    let out = bin_counts(&vals, map.grid(), disc);
    ScalarMap::new(*map.grid(), map.role(), out).unwrap_or_else(|_| unreachable!("binning keeps shape"))
}

fn check_floor(floor: f64) -> Result<()> {
    if floor > 0.0 && floor.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter("floor", format!("must be > 0, got {floor}")))
    }
}

/// `T = (V_p - 1) / (V_r - 1)` where `|V_r - 1| >= floor`.
pub fn transmission_quantum(v_probe: &ScalarMap, v_ref: &ScalarMap, floor: f64) -> Result<ScalarMap> {
    check_floor(floor)?;
    v_probe.grid().ensure_same(v_ref.grid(), "transmission maps")?;
    let (values, valid) = v_probe
        .values()
        .iter()
        .zip(v_ref.values())
        .zip(v_probe.validity().iter().zip(v_ref.validity()))
        .map(|((&p, &r), (&vp, &vr))| {
            let ex = r - 1.0;
            if vp && vr && ex.abs() >= floor {
                let t = (p - 1.0) / ex;
                if t.is_finite() {
                    return (t, true);
                }
            }
            (0.0, false)
        })
        .unzip();
    ScalarMap::with_validity(*v_probe.grid(), MapRole::Transmission, values, valid)
}

/// `T = N_p / N_r` where `N_r >= floor`.
pub fn transmission_traditional(n_probe: &ScalarMap, n_ref: &ScalarMap, floor: f64) -> Result<ScalarMap> {
    check_floor(floor)?;
    n_probe.grid().ensure_same(n_ref.grid(), "transmission maps")?;
    let (values, valid) = n_probe
        .values()
        .iter()
        .zip(n_ref.values())
        .zip(n_probe.validity().iter().zip(n_ref.validity()))
        .map(|((&p, &r), (&vp, &vr))| {
            if vp && vr && r >= floor {
                (p / r, true)
            } else {
                (0.0, false)
            }
        })
        .unzip();
    ScalarMap::with_validity(*n_probe.grid(), MapRole::Transmission, values, valid)
}

/// Clamps valid transmissions into `[0, 1]`.
pub fn clamp_transmission(t: &ScalarMap) -> ScalarMap {
    t.map_valid(MapRole::Transmission, |v| Some(v.clamp(0.0, 1.0)))
}

/// `10 log10(v)`; non-positive values become invalid.
pub fn to_decibels(v: &ScalarMap) -> ScalarMap {
    v.map_valid(MapRole::Decibels, |x| (x > 0.0).then(|| 10.0 * x.log10()))
}

/// A horizontal slice of a map, gaps kept as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub row: usize,
    pub start: usize,
    pub values: Vec<Option<f64>>,
}

impl CrossSection {
    pub fn from_values(row: usize, start: usize, values: &[f64]) -> Self {
        Self {
            row,
            start,
            values: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn columns(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.values.len()
    }
}

/// Pixels `start..start + span` of `row`.
pub fn cross_section(map: &ScalarMap, row: usize, start: usize, span: usize) -> Result<CrossSection> {
    let g = map.grid();
    if row >= g.height() {
        return Err(Error::parameter("row", format!("{row} outside height {}", g.height())));
    }
    if span == 0 || start + span > g.width() {
        return Err(Error::parameter(
            "span",
            format!("columns {start}..{} outside width {}", start + span, g.width()),
        ));
    }
    Ok(CrossSection {
        row,
        start,
        values: (start..start + span).map(|x| map.get(x, row)).collect(),
    })
}

/// Start column of a `span`-pixel window centred on `column`, shifted to fit the grid.
pub fn centered_start(width: usize, column: usize, span: usize) -> Result<usize> {
    if span == 0 || span > width {
        return Err(Error::parameter("span", format!("{span} does not fit width {width}")));
    }
    Ok(column.saturating_sub(span / 2).min(width - span))
}

/// Normalized cross-correlation of a reconstruction with the true profile,
/// over the pixels valid in both sections.
pub fn similarity(t_exp: &CrossSection, t_obj: &CrossSection) -> Result<f64> {
    if t_exp.len() != t_obj.len() {
        return Err(Error::Shape(format!(
            "cross-sections differ in length: {} vs {}",
            t_exp.len(),
            t_obj.len()
        )));
    }
    let (mut num, mut ee, mut oo) = (0.0, 0.0, 0.0);
    for (e, o) in t_exp.values.iter().zip(&t_obj.values) {
        if let (Some(e), Some(o)) = (e, o) {
            num += e * o;
            ee += e * e;
            oo += o * o;
        }
    }
    if oo == 0.0 {
        return Err(Error::ZeroNorm("reference profile"));
    }
    if ee == 0.0 {
        return Err(Error::ZeroNorm("reconstructed profile"));
    }
    Ok((num / (ee.sqrt() * oo.sqrt())).clamp(-1.0, 1.0))
}

/// Root-mean-square deviation over pixels valid in both sections.
pub fn rms_deviation(a: &CrossSection, b: &CrossSection) -> Option<f64> {
    let (s, n) = a
        .values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).powi(2)))
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    (n > 0).then(|| (s / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::SeedLineage;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus as TestRng;
    use rand_distr::StandardNormal;

    fn grid() -> Grid {
        Grid::square(8).unwrap()
    }

    fn lineage() -> SeedLineage {
        SeedLineage {
            master: 0,
            cluster_index: 0,
            frame_seeds: vec![],
        }
    }

    #[test]
    fn identical_ports_give_zero_variance() {
        let g = grid();
        let f = vec![vec![3.0; 64]; 4];
        let c = KineticCluster::new(g, f.clone(), f, lineage()).unwrap();
        let est = estimate_variance_map(&[c], DetectionDisc::new(2).unwrap(), Default::default()).unwrap();
        assert!(est.map.valid_values().all(|v| v == 0.0));
        assert_eq!(est.map.valid_count(), 64);
    }

    #[test]
    fn synthetic_shot_noise_calibrates_to_one() {
        let g = grid();
        let c0: f64 = 1e4;
        let mut rng = TestRng::seed_from_u64(9);
        let disc = DetectionDisc::new(3).unwrap();
        let mut acc = VarianceAccumulator::new(g, disc, Default::default());
        for _ in 0..10_000 {
            let mut p1 = Vec::new();
            let mut p2 = Vec::new();
            for _ in 0..4 {
                let gs: Vec<f64> = (0..64).map(|_| c0.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
                p1.push(gs.iter().map(|x| (c0 + x) / 2.0).collect());
                p2.push(gs.iter().map(|x| (c0 - x) / 2.0).collect());
            }
            acc.push(&KineticCluster::new(g, p1, p2, lineage()).unwrap()).unwrap();
        }
        let est = acc.finish().unwrap();
        let mean = est.map.valid_mean().unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 0.02);
        let (i, v) = (27, est.map.values()[27]);
        assert!((v - 1.0).abs() < 4.0 * est.stderr[i], "{v} +- {}", est.stderr[i]);
    }

    #[test]
    fn floor_and_dark_offset() {
        let g = grid();
        let p1 = vec![vec![2.0; 64]; 2];
        let p2 = vec![vec![1.0; 64]; 2];
        let c = KineticCluster::new(g, p1, p2, lineage()).unwrap();
        let disc = DetectionDisc::new(1).unwrap();
        let opts = VarianceOptions {
            dark_offset: 1.0,
            ..Default::default()
        };
        let est = estimate_variance_map(&[c.clone()], disc, opts).unwrap();
        assert_eq!(est.map.valid_count(), 64);
        assert_abs_diff_eq!(est.map.values()[0], 1.0, epsilon = 1e-15);
        let opts = VarianceOptions {
            denominator_floor: 3.0,
            ..Default::default()
        };
        assert_eq!(estimate_variance_map(&[c], disc, opts).unwrap().map.valid_count(), 0);
    }

    #[test]
    fn mean_subtraction_removes_offsets() {
        let g = grid();
        let p1 = vec![vec![5.0; 64], vec![7.0; 64]];
        let p2 = vec![vec![1.0; 64], vec![1.0; 64]];
        let c = KineticCluster::new(g, p1, p2, lineage()).unwrap();
        let disc = DetectionDisc::new(1).unwrap();
        let opts = VarianceOptions {
            subtract_cluster_mean: true,
            ..Default::default()
        };
        // diffs 4 and 6: unbiased variance 2, mean sum 7
        let v = estimate_variance_map(&[c], disc, opts).unwrap().map.values()[0];
        assert_abs_diff_eq!(v, 2.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn shared_prefix_ratios_match_single_disc_binning() {
        let g = Grid::new(9, 7, 1.0).unwrap();
        let mut rng = TestRng::seed_from_u64(5);
        let mk = |rng: &mut TestRng| -> Vec<Vec<f64>> {
            (0..3).map(|_| (0..63).map(|_| 50.0 + rng.random::<f64>()).collect()).collect()
        };
        let (a, b) = (mk(&mut rng), mk(&mut rng));
        let sig = ClusterSignals::new(&KineticCluster::new(g, a.clone(), b.clone(), lineage()).unwrap()).unwrap();
        let discs: Vec<DetectionDisc> = [1, 3, 4].iter().map(|&r| DetectionDisc::new(r).unwrap()).collect();
        let all = sig.ratios(&discs, &VarianceOptions::default());
        for (k, &d) in discs.iter().enumerate() {
            let mut num = vec![0.0; 63];
            let mut sum = vec![0.0; 63];
            for (x, y) in a.iter().zip(&b) {
                let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
                let bd = bin_counts(&diff, &g, d);
                num.iter_mut().zip(&bd).for_each(|(n, v)| *n += v * v);
                sum.iter_mut().zip(x.iter().zip(y)).for_each(|(s, (p, q))| *s += p + q);
            }
            let den = bin_counts(&sum.iter().map(|s| s / 3.0).collect::<Vec<_>>(), &g, d);
            for i in 0..63 {
                assert_abs_diff_eq!(all[k][i].unwrap(), num[i] / 3.0 / den[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn accumulator_merge_matches_sequential() {
        let g = grid();
        let disc = DetectionDisc::new(2).unwrap();
        let mut rng = TestRng::seed_from_u64(1);
        let clusters: Vec<KineticCluster> = (0..6)
            .map(|_| {
                let mk = |rng: &mut TestRng| -> Vec<Vec<f64>> {
                    (0..3).map(|_| (0..64).map(|_| 10.0 + rng.random::<f64>()).collect()).collect()
                };
                let a = mk(&mut rng);
                let b = mk(&mut rng);
                KineticCluster::new(g, a, b, lineage()).unwrap()
            })
            .collect();
        let whole = estimate_variance_map(&clusters, disc, Default::default()).unwrap();
        let mut a = VarianceAccumulator::new(g, disc, Default::default());
        let mut b = a.clone();
        clusters[..2].iter().for_each(|c| a.push(c).unwrap());
        clusters[2..].iter().for_each(|c| b.push(c).unwrap());
        a.merge(&b).unwrap();
        let merged = a.finish().unwrap();
        for (x, y) in whole.map.values().iter().zip(merged.map.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_eq!(merged.clusters, 6);
    }

    #[test]
    fn quantum_transmission_examples() {
        let g = grid();
        let vr = ScalarMap::constant(g, MapRole::Variance, 5.623);
        let blocked = ScalarMap::constant(g, MapRole::Variance, 1.0);
        let t = transmission_quantum(&blocked, &vr, 0.05).unwrap();
        assert!(t.valid_values().all(|v| v == 0.0));
        let t = transmission_quantum(&vr, &vr, 0.05).unwrap();
        assert!(t.valid_values().all(|v| v == 1.0));
        let half = ScalarMap::constant(g, MapRole::Variance, 1.0 + 0.5 * 4.623);
        let t = transmission_quantum(&half, &vr, 0.05).unwrap();
        assert!(t.valid_values().all(|v| (v - 0.5).abs() < 1e-15));
        let flat = ScalarMap::constant(g, MapRole::Variance, 1.01);
        assert_eq!(transmission_quantum(&vr, &flat, 0.05).unwrap().valid_count(), 0);
        assert!(transmission_quantum(&vr, &vr, 0.0).is_err());
    }

    #[test]
    fn traditional_transmission_examples() {
        let g = grid();
        let n = ScalarMap::constant(g, MapRole::Intensity, 250.0);
        let z = ScalarMap::constant(g, MapRole::Intensity, 0.0);
        assert!(transmission_traditional(&n, &n, 1.0).unwrap().valid_values().all(|v| v == 1.0));
        assert!(transmission_traditional(&z, &n, 1.0).unwrap().valid_values().all(|v| v == 0.0));
        assert_eq!(transmission_traditional(&n, &z, 1.0).unwrap().valid_count(), 0);
        assert!(transmission_traditional(&n, &n, -1.0).is_err());
    }

    #[test]
    fn decibel_examples() {
        let g = grid();
        let v = ScalarMap::new(g, MapRole::Variance, {
            let mut v = vec![1.0; 64];
            v[1] = 5.623;
            v[2] = 2.0;
            v[3] = 0.0;
            v
        })
        .unwrap();
        let d = to_decibels(&v);
        assert_eq!(d.values()[0], 0.0);
        assert_abs_diff_eq!(d.values()[1], 7.5, epsilon = 1e-3);
        assert_abs_diff_eq!(d.values()[2], 3.0103, epsilon = 1e-4);
        assert!(!d.validity()[3]);
        assert_eq!(d.role(), MapRole::Decibels);
    }

    #[test]
    fn similarity_examples() {
        let a = CrossSection::from_values(0, 0, &[1.0, 1.0, 0.0, 0.0]);
        let b = CrossSection::from_values(0, 0, &[1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(similarity(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(similarity(&a, &a).unwrap(), 1.0, epsilon = 1e-15);
        let c = CrossSection::from_values(0, 0, &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(similarity(&a, &c).unwrap(), 0.0);
        let z = CrossSection::from_values(0, 0, &[0.0; 4]);
        assert!(matches!(similarity(&a, &z), Err(Error::ZeroNorm(_))));
        assert!(similarity(&a, &CrossSection::from_values(0, 0, &[1.0])).is_err());
    }

    #[test]
    fn gaps_are_skipped() {
        let o = CrossSection::from_values(0, 0, &[1.0, 1.0, 0.0]);
        let e = CrossSection {
            row: 0,
            start: 0,
            values: vec![Some(2.0), None, Some(0.0)],
        };
        assert_abs_diff_eq!(similarity(&e, &o).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cross_section_bounds() {
        let g = Grid::new(100, 10, 1.0).unwrap();
        let m = ScalarMap::constant(g, MapRole::Transmission, 0.5);
        let cs = cross_section(&m, 3, 10, 80).unwrap();
        assert_eq!(cs.len(), 80);
        assert!(cs.values.iter().all(|v| *v == Some(0.5)));
        assert!(cross_section(&m, 10, 0, 10).is_err());
        assert!(cross_section(&m, 0, 30, 80).is_err());
        assert_eq!(centered_start(100, 64, 80).unwrap(), 20);
        assert_eq!(centered_start(100, 5, 80).unwrap(), 0);
        assert_eq!(centered_start(100, 98, 80).unwrap(), 20);
    }
}
