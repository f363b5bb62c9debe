//! Artifact formats.
//!
//! - Maps: CSV matrix (empty cell = invalid pixel), 16-bit binary PGM
//!   (0 = invalid, valid values scaled linearly onto 1..=65535) and a JSON
//!   sidecar recording the scaling.
//! - Fields: `QSFLD1` binary (u32 width, u32 height, then interleaved
//!   little-endian f64 re/im pairs in raster order), or a pair of CSV
//!   matrices for the real and imaginary parts.
//! - Kinetic clusters: `QSCLU1` binary (u32 width, height, frames, then all
//!   port-1 frames followed by all port-2 frames as little-endian f32) plus a
//!   JSON sidecar.
//! - Tables: CSV with a header row. Floats use the shortest round-trip form,
//!   so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::montecarlo::{KineticCluster, SeedLineage};
use crate::{ComplexField, Error, Grid, MapRole, Result, ScalarMap};

const FIELD_MAGIC: &[u8; 6] = b"QSFLD1";
const CLUSTER_MAGIC: &[u8; 6] = b"QSCLU1";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

fn matrix_csv(grid: &Grid, cell: impl Fn(usize) -> Option<f64>) -> String {
    let mut out = String::new();
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if x > 0 {
                out.push(',');
            }
            if let Some(v) = cell(grid.index(x, y)) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn parse_matrix(path: &Path, text: &str) -> Result<(usize, usize, Vec<Option<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = 0;
    let mut height = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        width = rec.len();
        for cell in rec.iter() {
            let cell = cell.trim();
            values.push(if cell.is_empty() {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .map_err(|e| Error::format(path, format!("bad number {cell:?}: {e}")))?,
                )
            });
        }
        height += 1;
    }
    Ok((width, height, values))
}

pub fn write_map_csv(path: &Path, map: &ScalarMap) -> Result<()> {
    let csv = matrix_csv(map.grid(), |i| map.validity()[i].then(|| map.values()[i]));
    write_bytes(path, csv.as_bytes())
}

pub fn read_map_csv(path: &Path, role: MapRole, pitch: f64) -> Result<ScalarMap> {
    let text = String::from_utf8(read_bytes(path)?).map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h, cells) = parse_matrix(path, &text)?;
    let grid = Grid::new(w, h, pitch).map_err(|e| Error::format(path, e.to_string()))?;
    let valid: Vec<bool> = cells.iter().map(Option::is_some).collect();
    let values = cells.into_iter().map(|c| c.unwrap_or(0.0)).collect();
    ScalarMap::with_validity(grid, role, values, valid)
}

/// Linear PGM scaling of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub role: String,
    /// `linear` or `dB10log10`.
    pub scale: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub valid_count: usize,
    pub invalid_count: usize,
    /// PGM level used for invalid pixels.
    pub invalid_value: u16,
    pub config_hash: String,
}

impl MapSidecar {
    pub fn for_map(map: &ScalarMap, config_hash: &str) -> Self {
        let range = map.valid_range();
        Self {
            role: map.role().as_str().to_string(),
            scale: if map.role() == MapRole::Decibels { "dB10log10" } else { "linear" }.to_string(),
            min: range.map(|r| r.0),
            max: range.map(|r| r.1),
            valid_count: map.valid_count(),
            invalid_count: map.grid().len() - map.valid_count(),
            invalid_value: 0,
            config_hash: config_hash.to_string(),
        }
    }

    /// Map value represented by a nonzero PGM level.
    pub fn decode(&self, level: u16) -> Option<f64> {
        let (lo, hi) = (self.min?, self.max?);
        (level != self.invalid_value).then(|| {
            if hi > lo {
                lo + (hi - lo) * (level as f64 - 1.0) / 65534.0
            } else {
                lo
            }
        })
    }
}

fn pgm_levels(map: &ScalarMap) -> Vec<u16> {
    let range = map.valid_range();
    map.values()
        .iter()
        .zip(map.validity())
        .map(|(&v, &ok)| match (ok, range) {
            (true, Some((lo, hi))) if hi > lo => 1 + ((v - lo) / (hi - lo) * 65534.0).round() as u16,
            (true, Some(_)) => 1,
            _ => 0,
        })
        .collect()
}

pub fn write_map_pgm(path: &Path, map: &ScalarMap) -> Result<()> {
    let g = map.grid();
    let mut bytes = format!("P5\n{} {}\n65535\n", g.width(), g.height()).into_bytes();
    for level in pgm_levels(map) {
        bytes.extend_from_slice(&level.to_be_bytes());
    }
    write_bytes(path, &bytes)
}

/// 16-bit binary PGM contents: width, height, levels in raster order.
pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = read_bytes(path)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(Error::format(path, "expected a 16-bit P5 PGM"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::format(path, e.to_string()));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != 2 * w * h {
        return Err(Error::format(path, format!("expected {} data bytes, found {}", 2 * w * h, body.len())));
    }
    Ok((w, h, body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

/// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.json`; returns the paths.
pub fn write_map(dir: &Path, stem: &str, map: &ScalarMap, config_hash: &str) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let pgm = dir.join(format!("{stem}.pgm"));
    let json = dir.join(format!("{stem}.json"));
    write_map_csv(&csv, map)?;
    write_map_pgm(&pgm, map)?;
    write_json(&json, &MapSidecar::for_map(map, config_hash))?;
    Ok(vec![csv, pgm, json])
}

pub fn write_field_bin(path: &Path, field: &ComplexField) -> Result<()> {
    let g = field.grid();
    let mut bytes = Vec::with_capacity(14 + 16 * g.len());
    bytes.extend_from_slice(FIELD_MAGIC);
    bytes.extend_from_slice(&(g.width() as u32).to_le_bytes());
    bytes.extend_from_slice(&(g.height() as u32).to_le_bytes());
    for a in field.amplitudes() {
        bytes.extend_from_slice(&a.re.to_le_bytes());
        bytes.extend_from_slice(&a.im.to_le_bytes());
    }
    write_bytes(path, &bytes)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_field_bin(path: &Path, pitch: f64) -> Result<ComplexField> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 14 || &bytes[..6] != FIELD_MAGIC {
        return Err(Error::format(path, "missing QSFLD1 header"));
    }
    let (w, h) = (u32_at(&bytes, 6) as usize, u32_at(&bytes, 10) as usize);
    let body = &bytes[14..];
    if body.len() != 16 * w * h {
        return Err(Error::format(path, format!("expected {} data bytes, found {}", 16 * w * h, body.len())));
    }
    let grid = Grid::new(w, h, pitch).map_err(|e| Error::format(path, e.to_string()))?;
    let amp = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    ComplexField::from_amplitudes(grid, amp)
}

/// Writes `<stem>_re.csv` and `<stem>_im.csv`.
pub fn write_field_csv(dir: &Path, stem: &str, field: &ComplexField) -> Result<Vec<PathBuf>> {
    let a = field.amplitudes();
    let re = dir.join(format!("{stem}_re.csv"));
    let im = dir.join(format!("{stem}_im.csv"));
    write_bytes(&re, matrix_csv(field.grid(), |i| Some(a[i].re)).as_bytes())?;
    write_bytes(&im, matrix_csv(field.grid(), |i| Some(a[i].im)).as_bytes())?;
    Ok(vec![re, im])
}

pub fn read_field_csv(re: &Path, im: &Path, pitch: f64) -> Result<ComplexField> {
    let load = |p: &Path| -> Result<(usize, usize, Vec<f64>)> {
        let text = String::from_utf8(read_bytes(p)?).map_err(|e| Error::format(p, e.to_string()))?;
        let (w, h, cells) = parse_matrix(p, &text)?;
        let vals = cells
            .into_iter()
            .map(|c| c.ok_or_else(|| Error::format(p, "empty cell in field matrix")))
            .collect::<Result<_>>()?;
        Ok((w, h, vals))
    };
    let (w, h, r) = load(re)?;
    let (w2, h2, i) = load(im)?;
    if (w, h) != (w2, h2) {
        return Err(Error::format(im, "real and imaginary matrices differ in shape"));
    }
    let grid = Grid::new(w, h, pitch).map_err(|e| Error::format(re, e.to_string()))?;
    ComplexField::from_amplitudes(grid, r.into_iter().zip(i).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// JSON metadata stored next to a cluster dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSidecar {
    pub scene: String,
    pub scene_hash: String,
    pub lineage: SeedLineage,
    pub params: serde_json::Value,
}

pub fn write_cluster(path: &Path, cluster: &KineticCluster) -> Result<()> {
    let g = cluster.grid;
    let frames = cluster.frames();
    let mut bytes = Vec::with_capacity(18 + 8 * frames * g.len());
    bytes.extend_from_slice(CLUSTER_MAGIC);
    for v in [g.width(), g.height(), frames] {
        bytes.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for frame in cluster.port1.iter().chain(&cluster.port2) {
        for &v in frame {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    write_bytes(path, &bytes)
}

/// Reads a cluster dump; counts come back rounded through f32.
pub fn read_cluster(path: &Path, pitch: f64) -> Result<KineticCluster> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 18 || &bytes[..6] != CLUSTER_MAGIC {
        return Err(Error::format(path, "missing QSCLU1 header"));
    }
    let (w, h, f) = (
        u32_at(&bytes, 6) as usize,
        u32_at(&bytes, 10) as usize,
        u32_at(&bytes, 14) as usize,
    );
    let body = &bytes[18..];
    if body.len() != 8 * w * h * f {
        return Err(Error::format(path, format!("expected {} data bytes, found {}", 8 * w * h * f, body.len())));
    }
    let grid = Grid::new(w, h, pitch).map_err(|e| Error::format(path, e.to_string()))?;
    let mut frames: Vec<Vec<f64>> = body
        .chunks_exact(4 * w * h)
        .map(|fr| {
            fr.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect()
        })
        .collect();
    let port2 = frames.split_off(f);
    KineticCluster::new(
        grid,
        frames,
        port2,
        SeedLineage {
            master: 0,
            cluster_index: 0,
            frame_seeds: Vec::new(),
        },
    )
    .map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a CSV table with the given header; every row must match its width.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let fmt = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(header).map_err(fmt)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::format(path, "row width differs from header"));
        }
        w.write_record(row).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    write_bytes(path, &bytes)
}

/// Header and rows of a CSV table.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bytes = read_bytes(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let rows = rdr
        .records()
        .map(|r| {
            r.map(|r| r.iter().map(String::from).collect())
                .map_err(|e| Error::format(path, e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Formats an optional value as a CSV cell (empty for a gap).
pub fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_headers_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(read_field_bin(&p, 1.0), Err(Error::Format { .. })));
        assert!(matches!(read_cluster(&p, 1.0), Err(Error::Format { .. })));
        assert!(matches!(read_pgm16(&p), Err(Error::Format { .. })));
        assert!(matches!(read_field_bin(&dir.path().join("missing"), 1.0), Err(Error::Io { .. })));
    }

    #[test]
    fn pgm_scaling_and_gaps() {
        let g = Grid::new(3, 2, 1.0).unwrap();
        let m = ScalarMap::with_validity(
            g,
            MapRole::Variance,
            vec![1.0, 2.0, 3.0, 0.0, 2.0, 1.5],
            vec![true, true, true, false, true, true],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_map(dir.path(), "m", &m, "abc").unwrap();
        let (w, h, levels) = read_pgm16(&paths[1]).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(levels[0], 1);
        assert_eq!(levels[2], 65535);
        assert_eq!(levels[3], 0);
        let side: MapSidecar = read_json(&paths[2]).unwrap();
        assert_eq!(side.valid_count, 5);
        assert_eq!(side.scale, "linear");
        assert!((side.decode(levels[1]).unwrap() - 2.0).abs() < 1e-4);
        assert_eq!(side.decode(0), None);
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![vec!["1".into(), "0.5".into(), cell(None)]];
        write_table(&p, &["radius", "photons", "similarity"], &rows).unwrap();
        let (h, r) = read_table(&p).unwrap();
        assert_eq!(h, ["radius", "photons", "similarity"]);
        assert_eq!(r, rows);
        assert!(write_table(&p, &["a"], &rows).is_err());
    }
}
