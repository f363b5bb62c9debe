//! The four experiments, as in-memory computations and as artifact writers.
//!
//! Each `cmd_*` function writes into an output directory and returns the
//! [`RunManifest`] it also stores as `manifest.json`. CSV artifacts carry no
//! timestamps, so with `bit_exact` set two identical runs produce identical
//! bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    cross_section, similarity, to_decibels, transmission_quantum, transmission_traditional, bin_map,
    CrossSection, MeanCountAccumulator, VarianceAccumulator, VarianceEstimate,
    VarianceOptions,
};
use crate::config::ExperimentConfig;
use crate::field::apply_mask;
use crate::io::{self, cell};
use crate::montecarlo::{sub_seed, CameraParams, ClassicalSampler, QuantumSampler, Scene};
use crate::parallel::{chunked_reduce, with_workers};
use crate::theory::{
    binned_variance_general, binned_variance_mode_matched, ideal_classical_transmission,
    ideal_quantum_transmission, photon_budget, pixel_variance_map, r_for_photons_per_frame,
    SqueezerParams, LO_FLOOR_FRACTION,
};
use crate::{DetectionDisc, Error, MapRole, Mask, Result, ScalarMap};

/// Clusters handled per parallel task. Fixed so results never depend on the
/// worker count.
const CHUNK: usize = 16;

const ARM_QUANTUM_REF: u64 = 1;
const ARM_QUANTUM_PROBE: u64 = 2;
const ARM_CLASSICAL_REF: u64 = 3;
const ARM_CLASSICAL_PROBE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Theory,
    Simulate,
    Classical,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Theory => "theory",
            Command::Simulate => "simulate",
            Command::Classical => "classical",
            Command::Sweep => "sweep",
        }
    }
}

/// Master seed and the per-arm sub-seeds derived from it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub master: u64,
    pub arms: BTreeMap<String, u64>,
}

impl SeedReport {
    fn new(master: u64) -> Self {
        Self {
            master,
            arms: BTreeMap::new(),
        }
    }

    fn arm(&mut self, name: impl Into<String>, label: u64) -> u64 {
        let s = sub_seed(self.master, label);
        self.arms.insert(name.into(), s);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    /// Emitted files relative to the output directory, in write order.
    pub files: Vec<String>,
    pub wall_clock_s: f64,
    pub seeds: SeedReport,
    pub bit_exact: bool,
    pub workers: Option<usize>,
}

/// Registers emitted files and rejects duplicates.
struct Emitter<'a> {
    dir: &'a Path,
    hash: String,
    files: Vec<String>,
}

impl<'a> Emitter<'a> {
    fn new(dir: &'a Path, cfg: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir,
            hash: cfg.hash(),
            files: Vec::new(),
        })
    }

    fn add(&mut self, paths: impl IntoIterator<Item = PathBuf>) -> Result<()> {
        for p in paths {
            let rel = p
                .strip_prefix(self.dir)
                .unwrap_or(&p)
                .to_string_lossy()
                .replace('\\', "/");
            if self.files.contains(&rel) {
                return Err(Error::format(&p, "artifact written twice"));
            }
            self.files.push(rel);
        }
        Ok(())
    }

    fn map(&mut self, stem: &str, map: &ScalarMap) -> Result<()> {
        let paths = io::write_map(self.dir, stem, map, &self.hash)?;
        self.add(paths)
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let p = self.dir.join(name);
        io::write_table(&p, header, rows)?;
        self.add([p])
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let p = self.dir.join(name);
        io::write_json(&p, v)?;
        self.add([p])
    }

    fn finish(self, cmd: Command, cfg: &ExperimentConfig, seeds: SeedReport, start: Instant) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: cmd.as_str().to_string(),
            config_hash: self.hash,
            files: self.files,
            wall_clock_s: start.elapsed().as_secs_f64(),
            seeds,
            bit_exact: cfg.bit_exact,
            workers: cfg.workers,
        };
        io::write_json(&self.dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

/// Where cross-sections are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionSpec {
    pub row: usize,
    pub start: usize,
    pub span: usize,
}

impl SectionSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            row: cfg.cross_section_row_value(),
            start: cfg.cross_section_start()?,
            span: cfg.cross_section_span,
        })
    }

    pub fn take(&self, map: &ScalarMap) -> Result<CrossSection> {
        cross_section(map, self.row, self.start, self.span)
    }
}

/// The object's true transmission along the cross-section.
pub fn object_section(mask: &Mask, spec: &SectionSpec) -> Result<CrossSection> {
    let m = ScalarMap::new(*mask.grid(), MapRole::Transmission, mask.values().to_vec())?;
    spec.take(&m)
}

/// Similarity of a reconstruction to the object, zero if nothing is valid.
pub fn score(t: &ScalarMap, object: &CrossSection, spec: &SectionSpec) -> Result<f64> {
    match similarity(&spec.take(t)?, object) {
        Ok(s) => Ok(s),
        Err(Error::ZeroNorm(what)) => {
            log::warn!("similarity undefined ({what} has no support on row {}); scoring 0", spec.row);
            Ok(0.0)
        }
        Err(e) => Err(e),
    }
}

/// Cluster-averaged variance maps of one scene for several discs.
pub fn run_quantum_arm(
    scene: &Scene,
    cam: &CameraParams,
    master: u64,
    clusters: usize,
    discs: &[DetectionDisc],
    opts: VarianceOptions,
    ordered: bool,
) -> Result<Vec<VarianceEstimate>> {
    let sampler = QuantumSampler::new(scene, cam)?;
    let grid = cam.grid;
    let fresh = || -> Vec<VarianceAccumulator> {
        discs.iter().map(|&d| VarianceAccumulator::new(grid, d, opts)).collect()
    };
    let total = chunked_reduce(
        clusters,
        CHUNK,
        ordered,
        |range| -> Result<Vec<VarianceAccumulator>> {
            let mut accs = fresh();
            for c in range {
                let ratios = sampler.signals(master, c as u64).ratios(discs, &opts);
                for (acc, ratio) in accs.iter_mut().zip(&ratios) {
                    acc.push_ratio(ratio)?;
                }
            }
            Ok(accs)
        },
        |a, b| {
            let (mut a, b) = (a?, b?);
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y)?;
            }
            Ok(a)
        },
    )
    .ok_or_else(|| Error::parameter("clusters", "need at least one cluster"))??;
    total.iter().map(VarianceAccumulator::finish).collect()
}

/// Frame- and cluster-averaged counts of a coherent beam, dark offset removed.
pub fn run_classical_arm(
    intensity: &ScalarMap,
    cam: &CameraParams,
    master: u64,
    clusters: usize,
    dark_offset: f64,
    ordered: bool,
) -> Result<ScalarMap> {
    let sampler = ClassicalSampler::new(intensity, cam)?;
    let grid = cam.grid;
    chunked_reduce(
        clusters,
        CHUNK,
        ordered,
        |range| -> Result<MeanCountAccumulator> {
            let mut acc = MeanCountAccumulator::new(grid, dark_offset);
            for c in range {
                acc.push(&sampler.cluster(master, c as u64))?;
            }
            Ok(acc)
        },
        |a, b| {
            let (mut a, b) = (a?, b?);
            a.merge(&b)?;
            Ok(a)
        },
    )
    .ok_or_else(|| Error::parameter("clusters", "need at least one cluster"))??
    .mean()
}

fn variance_options(cfg: &ExperimentConfig) -> VarianceOptions {
    VarianceOptions {
        denominator_floor: LO_FLOOR_FRACTION * cfg.lo_photons_per_frame,
        dark_offset: cfg.dark_offset(),
        subtract_cluster_mean: cfg.subtract_cluster_mean,
    }
}

fn squeezed_photons_per_frame(cfg: &ExperimentConfig, sq: &SqueezerParams) -> Result<f64> {
    photon_budget(sq.mean_photons(), cfg.exposure_s, cfg.coherence_time_s, 1)
}

// ---------------------------------------------------------------- theory

/// Analytic maps for one disc.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRadius {
    pub radius: u32,
    pub reference: ScalarMap,
    pub probe_matched: ScalarMap,
    pub probe_unmatched: ScalarMap,
    pub ideal_quantum: ScalarMap,
    pub ideal_classical: ScalarMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryBundle {
    pub pixel_matched: ScalarMap,
    pub pixel_unmatched: ScalarMap,
    pub radii: Vec<TheoryRadius>,
    pub section: SectionSpec,
    pub object: CrossSection,
}

pub fn theory(cfg: &ExperimentConfig) -> Result<TheoryBundle> {
    cfg.validate()?;
    let sq = cfg.squeezer()?;
    let mask = cfg.mask()?;
    let lo = cfg.lo_mode()?;
    let u1 = cfg.probe_scene()?.u1;
    let u1_far = apply_mask(&cfg.propagated_mode()?, &mask)?;
    let lop = cfg.local_oscillator()?;
    let open = Mask::open(*lo.grid());
    let radii = cfg
        .discs()?
        .into_iter()
        .map(|d| {
            let reference = if cfg.sq_waist.is_some() || cfg.sq_center.is_some() {
                binned_variance_general(&cfg.sq_mode()?, &lop, &sq, d)?
            } else {
                binned_variance_mode_matched(&open, &lo, &sq, d)?
            };
            let probe_matched = if cfg.sq_waist.is_some() || cfg.sq_center.is_some() {
                binned_variance_general(&u1, &lop, &sq, d)?
            } else {
                binned_variance_mode_matched(&mask, &lo, &sq, d)?
            };
            Ok(TheoryRadius {
                radius: d.radius(),
                reference,
                probe_matched,
                probe_unmatched: binned_variance_general(&u1_far, &lop, &sq, d)?,
                ideal_quantum: ideal_quantum_transmission(&mask, &lo, d)?,
                ideal_classical: ideal_classical_transmission(&mask, &lo, d)?,
            })
        })
        .collect::<Result<_>>()?;
    let section = SectionSpec::from_config(cfg)?;
    Ok(TheoryBundle {
        pixel_matched: pixel_variance_map(&u1, &sq),
        pixel_unmatched: pixel_variance_map(&u1_far, &sq),
        radii,
        object: object_section(&mask, &section)?,
        section,
    })
}

pub fn cmd_theory(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let bundle = theory(cfg)?;
    let mut em = Emitter::new(out, cfg)?;
    em.json("config.json", cfg)?;
    let fields = out.join("fields");
    for (stem, field) in [
        ("lo_mode", cfg.lo_mode()?),
        ("squeezed_mode", cfg.probe_scene()?.u1),
        ("squeezed_mode_propagated", apply_mask(&cfg.propagated_mode()?, &cfg.mask()?)?),
    ] {
        let p = fields.join(format!("{stem}.qsfld"));
        io::write_field_bin(&p, &field)?;
        em.add([p])?;
    }
    em.map("pixel_variance_matched", &bundle.pixel_matched)?;
    em.map("pixel_variance_unmatched", &bundle.pixel_unmatched)?;
    for t in &bundle.radii {
        let r = t.radius;
        em.map(&format!("reference_R{r}"), &t.reference)?;
        em.map(&format!("reference_db_R{r}"), &to_decibels(&t.reference))?;
        em.map(&format!("probe_matched_R{r}"), &t.probe_matched)?;
        em.map(&format!("probe_matched_db_R{r}"), &to_decibels(&t.probe_matched))?;
        em.map(&format!("probe_unmatched_R{r}"), &t.probe_unmatched)?;
        em.map(&format!("probe_unmatched_db_R{r}"), &to_decibels(&t.probe_unmatched))?;
        em.map(&format!("ideal_tq_R{r}"), &t.ideal_quantum)?;
        em.map(&format!("ideal_tt_R{r}"), &t.ideal_classical)?;
    }
    let spec = bundle.section;
    let sections: Vec<(CrossSection, CrossSection)> = bundle
        .radii
        .iter()
        .map(|t| Ok((spec.take(&t.ideal_quantum)?, spec.take(&t.ideal_classical)?)))
        .collect::<Result<_>>()?;
    let mut header = vec!["column".to_string(), "object".to_string()];
    for t in &bundle.radii {
        header.push(format!("quantum_R{}", t.radius));
        header.push(format!("classical_R{}", t.radius));
    }
    let rows: Vec<Vec<String>> = (0..spec.span)
        .map(|i| {
            let mut row = vec![(spec.start + i).to_string(), cell(bundle.object.values[i])];
            for (q, c) in &sections {
                row.push(cell(q.values[i]));
                row.push(cell(c.values[i]));
            }
            row
        })
        .collect();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    em.table("profiles.csv", &hdr, &rows)?;
    em.finish(Command::Theory, cfg, SeedReport::new(cfg.seed), start)
}

// -------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRadius {
    pub radius: u32,
    pub reference: VarianceEstimate,
    pub probe: VarianceEstimate,
    pub transmission: ScalarMap,
    pub ideal: ScalarMap,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationBundle {
    pub radii: Vec<QuantumRadius>,
    pub photons_per_frame: f64,
    pub section: SectionSpec,
    pub object: CrossSection,
    pub seeds: SeedReport,
}

/// Reference and probe variance maps plus the quantum transmission per disc,
/// with the squeezer overridden by `sq`.
fn quantum_reconstruction(
    cfg: &ExperimentConfig,
    sq: SqueezerParams,
    clusters: usize,
    seeds: &mut SeedReport,
    tag: &str,
    label_base: u64,
) -> Result<Vec<(VarianceEstimate, VarianceEstimate, ScalarMap)>> {
    let lo = cfg.local_oscillator()?;
    let cam = cfg.camera()?;
    let discs = cfg.discs()?;
    let opts = variance_options(cfg);
    let ref_scene = Scene::new(cfg.sq_mode()?, lo.clone(), sq)?;
    let probe_scene = Scene::new(apply_mask(&cfg.sq_mode()?, &cfg.mask()?)?, lo, sq)?;
    let s_ref = seeds.arm(format!("{tag}quantum_reference"), label_base + ARM_QUANTUM_REF);
    let s_probe = seeds.arm(format!("{tag}quantum_probe"), label_base + ARM_QUANTUM_PROBE);
    let refs = run_quantum_arm(&ref_scene, &cam, s_ref, clusters, &discs, opts, cfg.bit_exact)?;
    let probes = run_quantum_arm(&probe_scene, &cam, s_probe, clusters, &discs, opts, cfg.bit_exact)?;
    refs.into_iter()
        .zip(probes)
        .map(|(r, p)| {
            let t = transmission_quantum(&p.map, &r.map, cfg.transmission_floor)?;
            Ok((r, p, t))
        })
        .collect()
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulationBundle> {
    cfg.validate()?;
    with_workers(cfg.workers, || {
        let sq = cfg.squeezer()?;
        let mask = cfg.mask()?;
        let lo = cfg.lo_mode()?;
        let section = SectionSpec::from_config(cfg)?;
        let object = object_section(&mask, &section)?;
        let mut seeds = SeedReport::new(cfg.seed);
        let recon = quantum_reconstruction(cfg, sq, cfg.clusters, &mut seeds, "", 0)?;
        let radii = recon
            .into_iter()
            .zip(cfg.discs()?)
            .map(|((reference, probe, transmission), d)| {
                Ok(QuantumRadius {
                    radius: d.radius(),
                    similarity: score(&transmission, &object, &section)?,
                    ideal: ideal_quantum_transmission(&mask, &lo, d)?,
                    reference,
                    probe,
                    transmission,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SimulationBundle {
            radii,
            photons_per_frame: squeezed_photons_per_frame(cfg, &sq)?,
            section,
            object,
            seeds,
        })
    })
}

fn stderr_map(est: &VarianceEstimate) -> Result<ScalarMap> {
    ScalarMap::with_validity(
        *est.map.grid(),
        MapRole::Variance,
        est.stderr.clone(),
        est.map.validity().to_vec(),
    )
}

fn section_rows(spec: &SectionSpec, cols: &[&CrossSection]) -> Vec<Vec<String>> {
    (0..spec.span)
        .map(|i| {
            std::iter::once((spec.start + i).to_string())
                .chain(cols.iter().map(|c| cell(c.values[i])))
                .collect()
        })
        .collect()
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let bundle = simulate(cfg)?;
    let mut em = Emitter::new(out, cfg)?;
    em.json("config.json", cfg)?;
    let spec = bundle.section;
    let mut sim_rows = Vec::new();
    for q in &bundle.radii {
        let r = q.radius;
        em.map(&format!("vref_R{r}"), &q.reference.map)?;
        em.map(&format!("vref_db_R{r}"), &to_decibels(&q.reference.map))?;
        em.map(&format!("vref_stderr_R{r}"), &stderr_map(&q.reference)?)?;
        em.map(&format!("vprobe_R{r}"), &q.probe.map)?;
        em.map(&format!("vprobe_db_R{r}"), &to_decibels(&q.probe.map))?;
        em.map(&format!("vprobe_stderr_R{r}"), &stderr_map(&q.probe)?)?;
        em.map(&format!("tq_R{r}"), &q.transmission)?;
        let t = spec.take(&q.transmission)?;
        let ideal = spec.take(&q.ideal)?;
        em.table(
            &format!("section_R{r}.csv"),
            &["column", "t_quantum", "ideal", "object"],
            &section_rows(&spec, &[&t, &ideal, &bundle.object]),
        )?;
        sim_rows.push(vec![r.to_string(), bundle.photons_per_frame.to_string(), q.similarity.to_string()]);
    }
    em.table("similarity.csv", &["radius", "photons", "similarity"], &sim_rows)?;

    // Raw dumps regenerate the first clusters from the recorded seeds.
    let cam = cfg.camera()?;
    let n_dump = cfg.dump_clusters.min(cfg.clusters);
    for (name, scene) in [("reference", cfg.reference_scene()?), ("probe", cfg.probe_scene()?)] {
        let seed = bundle.seeds.arms[&format!("quantum_{name}")];
        let sampler = QuantumSampler::new(&scene, &cam)?;
        for c in 0..n_dump {
            let cluster = sampler.cluster(seed, c as u64);
            let bin = out.join("clusters").join(format!("{name}_{c:05}.qsclu"));
            io::write_cluster(&bin, &cluster)?;
            let side = bin.with_extension("json");
            io::write_json(
                &side,
                &io::ClusterSidecar {
                    scene: name.to_string(),
                    scene_hash: em.hash.clone(),
                    lineage: cluster.lineage.clone(),
                    params: serde_json::json!({
                        "squeezing_r": scene.sq.r,
                        "quadrature": scene.sq.quadrature,
                        "phase": scene.sq.phase,
                        "lo_photons_per_frame": scene.lo.photons_per_frame(),
                        "dark_mean": cam.dark_mean,
                        "dark_var": cam.dark_var,
                        "frames_per_cluster": cam.frames_per_cluster,
                        "exposure_s": cam.exposure,
                        "port_model": cam.port_model,
                        "round_counts": cam.round_counts,
                    }),
                },
            )?;
            em.add([bin, side])?;
        }
    }
    em.finish(Command::Simulate, cfg, bundle.seeds, start)
}

// ------------------------------------------------------------- classical

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalRadius {
    pub radius: u32,
    pub reference: ScalarMap,
    pub probe: ScalarMap,
    pub transmission: ScalarMap,
    pub ideal: ScalarMap,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBundle {
    pub radii: Vec<ClassicalRadius>,
    pub photons_per_frame: f64,
    pub section: SectionSpec,
    pub object: CrossSection,
    pub seeds: SeedReport,
}

/// Mean photon number per pixel of a coherent beam in the LO mode.
pub fn classical_intensities(cfg: &ExperimentConfig, photons_per_frame: f64) -> Result<(ScalarMap, ScalarMap)> {
    let lo = cfg.lo_mode()?;
    let mask = cfg.mask()?;
    let g = *lo.grid();
    let i_ref: Vec<f64> = lo.intensity().iter().map(|v| v * photons_per_frame).collect();
    let i_probe = i_ref.iter().zip(mask.values()).map(|(i, t)| i * t).collect();
    Ok((
        ScalarMap::new(g, MapRole::Intensity, i_ref)?,
        ScalarMap::new(g, MapRole::Intensity, i_probe)?,
    ))
}

fn classical_reconstruction(
    cfg: &ExperimentConfig,
    photons_per_frame: f64,
    clusters: usize,
    seeds: &mut SeedReport,
    tag: &str,
    label_base: u64,
) -> Result<Vec<(ScalarMap, ScalarMap, ScalarMap)>> {
    let cam = cfg.camera()?;
    let (i_ref, i_probe) = classical_intensities(cfg, photons_per_frame)?;
    let s_ref = seeds.arm(format!("{tag}classical_reference"), label_base + ARM_CLASSICAL_REF);
    let s_probe = seeds.arm(format!("{tag}classical_probe"), label_base + ARM_CLASSICAL_PROBE);
    let off = cfg.dark_offset();
    let n_ref = run_classical_arm(&i_ref, &cam, s_ref, clusters, off, cfg.bit_exact)?;
    let n_probe = run_classical_arm(&i_probe, &cam, s_probe, clusters, off, cfg.bit_exact)?;
    cfg.discs()?
        .into_iter()
        .map(|d| {
            let b_ref = bin_map(&n_ref, d);
            let b_probe = bin_map(&n_probe, d);
            let ideal_peak = bin_map(&i_ref, d).valid_range().map_or(0.0, |r| r.1);
            let floor = (cfg.classical_floor_fraction * ideal_peak).max(f64::MIN_POSITIVE);
            let t = transmission_traditional(&b_probe, &b_ref, floor)?;
            Ok((b_ref, b_probe, t))
        })
        .collect()
}

pub fn classical(cfg: &ExperimentConfig) -> Result<ClassicalBundle> {
    cfg.validate()?;
    with_workers(cfg.workers, || {
        let mask = cfg.mask()?;
        let lo = cfg.lo_mode()?;
        let section = SectionSpec::from_config(cfg)?;
        let object = object_section(&mask, &section)?;
        let mut seeds = SeedReport::new(cfg.seed);
        let recon = classical_reconstruction(cfg, cfg.classical_photons, cfg.clusters, &mut seeds, "", 0)?;
        let radii = recon
            .into_iter()
            .zip(cfg.discs()?)
            .map(|((reference, probe, transmission), d)| {
                Ok(ClassicalRadius {
                    radius: d.radius(),
                    similarity: score(&transmission, &object, &section)?,
                    ideal: ideal_classical_transmission(&mask, &lo, d)?,
                    reference,
                    probe,
                    transmission,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ClassicalBundle {
            radii,
            photons_per_frame: cfg.classical_photons,
            section,
            object,
            seeds,
        })
    })
}

pub fn cmd_classical(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let bundle = classical(cfg)?;
    let mut em = Emitter::new(out, cfg)?;
    em.json("config.json", cfg)?;
    let spec = bundle.section;
    let mut rows = Vec::new();
    for c in &bundle.radii {
        let r = c.radius;
        em.map(&format!("counts_ref_R{r}"), &c.reference)?;
        em.map(&format!("counts_probe_R{r}"), &c.probe)?;
        em.map(&format!("tt_R{r}"), &c.transmission)?;
        let t = spec.take(&c.transmission)?;
        let ideal = spec.take(&c.ideal)?;
        em.table(
            &format!("section_R{r}.csv"),
            &["column", "t_classical", "ideal", "object"],
            &section_rows(&spec, &[&t, &ideal, &bundle.object]),
        )?;
        rows.push(vec![r.to_string(), bundle.photons_per_frame.to_string(), c.similarity.to_string()]);
    }
    em.table("similarity.csv", &["radius", "photons", "similarity"], &rows)?;
    em.finish(Command::Classical, cfg, bundle.seeds, start)
}

// ----------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quantum,
    Classical,
    CeilingQuantum,
    CeilingClassical,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quantum => "quantum",
            Method::Classical => "classical",
            Method::CeilingQuantum => "ceiling_quantum",
            Method::CeilingClassical => "ceiling_classical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    /// Photons per frame; `None` for ceiling rows.
    pub budget: Option<f64>,
    /// Total photons over all clusters and frames of one repeat.
    pub photons: Option<f64>,
    pub radius: u32,
    pub similarity: f64,
    /// Standard error over repeats; `None` with a single repeat.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub seeds: SeedReport,
}

fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let se = (xs.len() > 1).then(|| {
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (v / n).sqrt()
    });
    (m, se)
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    with_workers(cfg.workers, || {
        let mask = cfg.mask()?;
        let lo_mode = cfg.lo_mode()?;
        let section = SectionSpec::from_config(cfg)?;
        let object = object_section(&mask, &section)?;
        let discs = cfg.discs()?;
        let frames = (cfg.sweep_clusters * cfg.frames_per_cluster) as u64;
        let base = cfg.squeezer()?;
        let mut seeds = SeedReport::new(cfg.seed);
        let mut rows = Vec::new();
        let label = |kind: u64, b: usize, k: usize| 1000 * (1 + kind * 1_000_000 + (b * cfg.sweep_repeats + k) as u64);

        for (b, &ppf) in cfg.photon_budgets.iter().enumerate() {
            let r = r_for_photons_per_frame(ppf, cfg.exposure_s, cfg.coherence_time_s)?;
            let sq = SqueezerParams::new(r, base.quadrature, base.phase)?;
            let total = photon_budget(sq.mean_photons(), cfg.exposure_s, cfg.coherence_time_s, frames)?;
            let mut per_r = vec![Vec::new(); discs.len()];
            for k in 0..cfg.sweep_repeats {
                let tag = format!("sweep_q{b}_rep{k}_");
                let recon = quantum_reconstruction(cfg, sq, cfg.sweep_clusters, &mut seeds, &tag, label(0, b, k))?;
                for (i, (_, _, t)) in recon.iter().enumerate() {
                    per_r[i].push(score(t, &object, &section)?);
                }
            }
            for (d, s) in discs.iter().zip(&per_r) {
                let (m, se) = mean_stderr(s);
                rows.push(SweepRow {
                    method: Method::Quantum,
                    budget: Some(ppf),
                    photons: Some(total),
                    radius: d.radius(),
                    similarity: m,
                    stderr: se,
                });
            }
        }
        for (b, &ppf) in cfg.classical_photons_per_frame.iter().enumerate() {
            let mut per_r = vec![Vec::new(); discs.len()];
            for k in 0..cfg.sweep_repeats {
                let tag = format!("sweep_c{b}_rep{k}_");
                let recon = classical_reconstruction(cfg, ppf, cfg.sweep_clusters, &mut seeds, &tag, label(1, b, k))?;
                for (i, (_, _, t)) in recon.iter().enumerate() {
                    per_r[i].push(score(t, &object, &section)?);
                }
            }
            for (d, s) in discs.iter().zip(&per_r) {
                let (m, se) = mean_stderr(s);
                rows.push(SweepRow {
                    method: Method::Classical,
                    budget: Some(ppf),
                    photons: Some(ppf * frames as f64),
                    radius: d.radius(),
                    similarity: m,
                    stderr: se,
                });
            }
        }
        for &d in &discs {
            for (method, ideal) in [
                (Method::CeilingQuantum, ideal_quantum_transmission(&mask, &lo_mode, d)?),
                (Method::CeilingClassical, ideal_classical_transmission(&mask, &lo_mode, d)?),
            ] {
                rows.push(SweepRow {
                    method,
                    budget: None,
                    photons: None,
                    radius: d.radius(),
                    similarity: score(&ideal, &object, &section)?,
                    stderr: None,
                });
            }
        }
        Ok(SweepTable { rows, seeds })
    })
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let table = sweep(cfg)?;
    let mut em = Emitter::new(out, cfg)?;
    em.json("config.json", cfg)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.method.as_str().to_string(),
                cell(r.budget),
                cell(r.photons),
                r.radius.to_string(),
                r.similarity.to_string(),
                cell(r.stderr),
            ]
        })
        .collect();
    em.table("sweep.csv", &["method", "budget", "photons", "radius", "similarity", "stderr"], &rows)?;
    for (name, method) in [("sweep_quantum.csv", Method::Quantum), ("sweep_classical.csv", Method::Classical)] {
        let arm: Vec<Vec<String>> = table
            .rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| vec![r.radius.to_string(), cell(r.photons), r.similarity.to_string()])
            .collect();
        em.table(name, &["radius", "photons", "similarity"], &arm)?;
    }
    em.finish(Command::Sweep, cfg, table.seeds, start)
}

/// Applies command-line overrides on top of a loaded config.
pub fn apply_overrides(
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    workers: Option<usize>,
    bit_exact: bool,
) -> Result<ExperimentConfig> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    cfg.bit_exact |= bit_exact;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    match cmd {
        Command::Theory => cmd_theory(cfg, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Classical => cmd_classical(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
    }
}

