//! CSV and JSON export, and pyramid persistence.
//!
//! A saved pyramid is a directory holding `manifest.json` plus, for each
//! level `k`, `level{k}_graph.txt`, `level{k}_pattern.json`,
//! `level{k}_basis.csv`, `level{k}_energies.csv`, `level{k}_phi.csv`,
//! `level{k}_quartet.csv` and, when available, `level{k}_coords.csv` and
//! `level{k}_report.json`. Floats are written in shortest round-trip form,
//! so a reload is exact.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{FilterLevel, FilterVector, Quartet};
use crate::fourier::{BasisReport, FourierBasis, SignedPermutation};
use crate::graph::{parse_graph, write_edge_list};
use crate::multires::{Pyramid, PyramidConfig};
use crate::sampling::SamplingPattern;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Headerless CSV, one matrix row per line.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        rows.push(parse_record(&rec?, path)?);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|row| row.len() != ncols) {
        return Err(Error::DimensionMismatch { expected: ncols, actual: bad.len() });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn parse_record(rec: &csv::StringRecord, path: &Path) -> Result<Vec<f64>> {
    rec.iter()
        .map(|f| {
            f.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: rec.position().map_or(0, |p| p.line() as usize),
                message: format!("{}: bad number {f:?}: {e}", path.display()),
            })
        })
        .collect()
}

/// CSV with a header row and one column per named vector.
pub fn write_columns_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::DimensionMismatch { expected: headers.len(), actual: columns.len() });
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if let Some(c) = columns.iter().find(|c| c.len() != rows) {
        return Err(Error::DimensionMismatch { expected: rows, actual: c.len() });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_columns_csv(path: &Path, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if headers != expected {
        return Err(Error::Parse { line: 1, message: format!("{}: unexpected header {headers:?}", path.display()) });
    }
    let mut cols = vec![Vec::new(); expected.len()];
    for rec in r.records() {
        for (c, v) in cols.iter_mut().zip(parse_record(&rec?, path)?) {
            c.push(v);
        }
    }
    Ok(cols)
}

/// `index, basis_energy[, laplacian_eigenvalue]`.
pub fn write_energies_csv(path: &Path, basis: &FourierBasis, laplacian_eigs: Option<&[f64]>) -> Result<()> {
    let index: Vec<f64> = (0..basis.n()).map(|k| k as f64).collect();
    match laplacian_eigs {
        Some(eigs) => write_columns_csv(
            path,
            &["index", "basis_energy", "laplacian_eigenvalue"],
            &[&index, basis.energies(), eigs],
        ),
        None => write_columns_csv(path, &["index", "basis_energy"], &[&index, basis.energies()]),
    }
}

/// `index, partner, sign`.
pub fn write_phi_csv(path: &Path, phi: &SignedPermutation) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "partner", "sign"])?;
    for i in 0..phi.len() {
        w.write_record([i.to_string(), phi.partner(i).to_string(), phi.sign(i).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_phi_csv(path: &Path) -> Result<SignedPermutation> {
    let mut r = csv::Reader::from_path(path)?;
    let mut perm = Vec::new();
    let mut signs = Vec::new();
    for (k, rec) in r.deserialize::<(usize, usize, i8)>().enumerate() {
        let (i, j, s) = rec?;
        if i != k {
            return Err(Error::Parse { line: k + 2, message: format!("{}: expected index {k}", path.display()) });
        }
        perm.push(j);
        signs.push(s);
    }
    SignedPermutation::new(perm, signs)
}

const QUARTET_HEADER: [&str; 5] = ["index", "h0", "h1", "g0", "g1"];

pub fn write_quartet_csv(path: &Path, q: &Quartet) -> Result<()> {
    let index: Vec<f64> = (0..q.h0.len()).map(|k| k as f64).collect();
    write_columns_csv(path, &QUARTET_HEADER, &[&index, q.h0.values(), q.h1.values(), q.g0.values(), q.g1.values()])
}

pub fn read_quartet_csv(path: &Path) -> Result<Quartet> {
    let cols = read_columns_csv(path, &QUARTET_HEADER)?;
    let v = |k: usize| FilterVector::new(DVector::from_vec(cols[k].clone()));
    Ok(Quartet { h0: v(1)?, h1: v(2)?, g0: v(3)?, g1: v(4)? })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub depth: usize,
    /// Vertex count per level.
    pub sizes: Vec<usize>,
    pub config: PyramidConfig,
    pub sparsified: Vec<bool>,
}

const FORMAT_VERSION: u32 = 1;

pub fn save_pyramid(dir: &Path, p: &Pyramid) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        depth: p.depth(),
        sizes: p.levels().iter().map(FilterLevel::n).collect(),
        config: p.config().clone(),
        sparsified: p.sparsified().to_vec(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    for (k, level) in p.levels().iter().enumerate() {
        save_level(dir, k, level)?;
    }
    Ok(())
}

fn save_level(dir: &Path, k: usize, level: &FilterLevel) -> Result<()> {
    let file = |name: &str| dir.join(format!("level{k}_{name}"));
    fs::write(file("graph.txt"), write_edge_list(level.graph(), None))?;
    write_json(&file("pattern.json"), level.pattern())?;
    write_matrix_csv(&file("basis.csv"), level.basis().matrix())?;
    write_energies_csv(&file("energies.csv"), level.basis(), None)?;
    write_phi_csv(&file("phi.csv"), level.basis().phi())?;
    write_quartet_csv(&file("quartet.csv"), level.quartet())?;
    if let Some(c) = level.graph().coords() {
        let x: Vec<f64> = c.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = c.iter().map(|p| p[1]).collect();
        write_columns_csv(&file("coords.csv"), &["x", "y"], &[&x, &y])?;
    }
    if let Some(r) = level.report() {
        write_json(&file("report.json"), r)?;
    }
    Ok(())
}

pub fn load_pyramid(dir: &Path) -> Result<Pyramid> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported format version {}", manifest.format_version)));
    }
    if manifest.sizes.len() != manifest.depth {
        return Err(Error::DimensionMismatch { expected: manifest.depth, actual: manifest.sizes.len() });
    }
    let mut levels = Vec::with_capacity(manifest.depth);
    for (k, &n) in manifest.sizes.iter().enumerate() {
        let level = load_level(dir, k)?;
        if level.n() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: level.n() });
        }
        levels.push(level);
    }
    Pyramid::from_levels(levels, manifest.config, manifest.sparsified)
}

fn load_level(dir: &Path, k: usize) -> Result<FilterLevel> {
    let file = |name: &str| dir.join(format!("level{k}_{name}"));
    let (mut graph, _) = parse_graph(&fs::read_to_string(file("graph.txt"))?)?;
    let coords = file("coords.csv");
    if coords.exists() {
        let xy = read_columns_csv(&coords, &["x", "y"])?;
        graph = graph.with_coords(xy[0].iter().zip(&xy[1]).map(|(&x, &y)| [x, y]).collect())?;
    }
    let pattern: SamplingPattern = read_json(&file("pattern.json"))?;
    let u = read_matrix_csv(&file("basis.csv"))?;
    let energies = read_columns_csv(&file("energies.csv"), &["index", "basis_energy"])?.swap_remove(1);
    let phi = read_phi_csv(&file("phi.csv"))?;
    let basis = FourierBasis::from_parts(u, energies, phi, pattern)?;
    let quartet = read_quartet_csv(&file("quartet.csv"))?;
    let report_path = file("report.json");
    let report: Option<BasisReport> = if report_path.exists() { Some(read_json(&report_path)?) } else { None };
    FilterLevel::from_parts(graph, basis, quartet, report)
}
