//! Browser bindings. Every export takes the flat JSON experiment config used
//! by the command line and returns a JSON document; invalid pixels are `null`.

use qshadow::analysis::{clamp_transmission, to_decibels, CrossSection};
use qshadow::config::ExperimentConfig;
use qshadow::runner::{self, SectionSpec};
use qshadow::{Error, Result, ScalarMap};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest grid side and cluster count accepted, to keep the page responsive.
pub const MAX_SIDE: usize = 256;
pub const MAX_CLUSTERS: usize = 5000;

#[derive(Serialize)]
struct Raster {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
}

impl From<&ScalarMap> for Raster {
    fn from(m: &ScalarMap) -> Self {
        let g = m.grid();
        Self {
            width: g.width(),
            height: g.height(),
            values: m.values().iter().zip(m.validity()).map(|(&v, &ok)| ok.then_some(v)).collect(),
        }
    }
}

fn parse(config: &str) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::from_json(config)?;
    if cfg.grid_width > MAX_SIDE || cfg.grid_height > MAX_SIDE {
        return Err(Error::Config { field: "grid_width".into(), reason: format!("demo grids are limited to {MAX_SIDE}") });
    }
    if cfg.clusters > MAX_CLUSTERS {
        return Err(Error::Config { field: "clusters".into(), reason: format!("demo runs are limited to {MAX_CLUSTERS}") });
    }
    Ok(cfg)
}

fn section_json(spec: &SectionSpec, s: &CrossSection) -> serde_json::Value {
    json!({ "row": spec.row, "start": spec.start, "values": s.values })
}

fn radius_index(cfg: &ExperimentConfig, radius: u32) -> Result<usize> {
    cfg.radii
        .iter()
        .position(|&r| r == radius)
        .ok_or_else(|| Error::Config { field: "radii".into(), reason: format!("radius {radius} is not configured") })
}

/// Analytic binned noise map in dB for one configured radius, either for the
/// phase-matched probe or for the far-propagated one.
pub fn noise_map_json(config: &str, radius: u32, unmatched: bool) -> Result<String> {
    let cfg = parse(config)?;
    let i = radius_index(&cfg, radius)?;
    let bundle = runner::theory(&cfg)?;
    let r = &bundle.radii[i];
    let v = if unmatched { &r.probe_unmatched } else { &r.probe_matched };
    let db = to_decibels(v);
    Ok(json!({
        "radius": radius,
        "db": Raster::from(&db),
        "range": db.valid_range(),
        "reference_peak_db": to_decibels(&r.reference).valid_range().map(|x| x.1),
    })
    .to_string())
}

/// Noise-free edge profiles along the cross-section and their similarity to
/// the object, per configured radius.
pub fn edge_profiles_json(config: &str) -> Result<String> {
    let cfg = parse(config)?;
    let bundle = runner::theory(&cfg)?;
    let spec = bundle.section;
    let radii = bundle
        .radii
        .iter()
        .map(|r| {
            let q = spec.take(&r.ideal_quantum)?;
            let c = spec.take(&r.ideal_classical)?;
            Ok(json!({
                "radius": r.radius,
                "quantum": section_json(&spec, &q),
                "classical": section_json(&spec, &c),
                "similarity_quantum": runner::score(&r.ideal_quantum, &bundle.object, &spec)?,
                "similarity_classical": runner::score(&r.ideal_classical, &bundle.object, &spec)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "object": section_json(&spec, &bundle.object), "radii": radii }).to_string())
}

/// Seeded Monte Carlo reconstruction: quantum and classical transmission maps
/// with their cross-sections and similarity scores, per configured radius.
pub fn reconstruct_json(config: &str) -> Result<String> {
    let cfg = parse(config)?;
    let q = runner::simulate(&cfg)?;
    let c = runner::classical(&cfg)?;
    let spec = q.section;
    let radii = q
        .radii
        .iter()
        .zip(&c.radii)
        .map(|(q, c)| {
            let tq = clamp_transmission(&q.transmission);
            let tt = clamp_transmission(&c.transmission);
            Ok(json!({
                "radius": q.radius,
                "quantum": Raster::from(&tq),
                "classical": Raster::from(&tt),
                "quantum_section": section_json(&spec, &spec.take(&q.transmission)?),
                "classical_section": section_json(&spec, &spec.take(&c.transmission)?),
                "similarity_quantum": q.similarity,
                "similarity_classical": c.similarity,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "object": section_json(&spec, &q.object),
        "squeezed_photons_per_frame": q.photons_per_frame,
        "classical_photons_per_frame": c.photons_per_frame,
        "radii": radii,
    })
    .to_string())
}

/// Default configuration as JSON, used by the page to seed its controls.
pub fn default_config_json() -> String {
    ExperimentConfig::default().to_json()
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = defaultConfig)]
pub fn default_config() -> String {
    default_config_json()
}

#[wasm_bindgen(js_name = noiseMap)]
pub fn noise_map(config: &str, radius: u32, unmatched: bool) -> std::result::Result<String, JsError> {
    js(noise_map_json(config, radius, unmatched))
}

#[wasm_bindgen(js_name = edgeProfiles)]
pub fn edge_profiles(config: &str) -> std::result::Result<String, JsError> {
    js(edge_profiles_json(config))
}

#[wasm_bindgen]
pub fn reconstruct(config: &str) -> std::result::Result<String, JsError> {
    js(reconstruct_json(config))
}
