//! File formats: phase-shift tables, sector curves with JSON sidecars, detector
//! images and transfer functions. Every writer replaces its target atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cross_section::{AbscissaKind, AngularSector, SectorCurve};
use crate::error::{Error, Result};
use crate::scattering::PhaseShiftTable;
use crate::vmi::{BinnedImage, DetectorImage, TransferFunction};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:e}")
}

fn num(x: f64) -> String {
    format_number(x)
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn parse(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::InvalidInput(format!(
            "{}:{line}: '{field}' is not a number",
            path.display()
        ))
    })
}

/// Plain CSV with the given header, written atomically.
pub fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Header `energy,l0,...,lN`; one row per energy.
pub fn write_phase_table(path: &Path, table: &PhaseShiftTable) -> Result<()> {
    let header: Vec<String> = std::iter::once("energy".to_string())
        .chain((0..=table.l_max()).map(|l| format!("l{l}")))
        .collect();
    let rows = table.energies().iter().enumerate().map(|(i, &e)| {
        std::iter::once(num(e))
            .chain((0..=table.l_max()).map(|l| num(table.phase(l, i))))
            .collect()
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

pub fn read_phase_table(path: &Path) -> Result<PhaseShiftTable> {
    let mut r = open_csv(path)?;
    let header = r.headers()?.clone();
    let ok = header.get(0) == Some("energy")
        && header
            .iter()
            .skip(1)
            .enumerate()
            .all(|(l, h)| h == format!("l{l}"))
        && header.len() >= 2;
    if !ok {
        return Err(Error::InvalidInput(format!(
            "{}: header must be energy,l0,...,lN",
            path.display()
        )));
    }
    let n_l = header.len() - 1;
    let mut energies = Vec::new();
    let mut rows = vec![Vec::new(); n_l];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        energies.push(parse(&rec[0], path, i + 2)?);
        for (l, row) in rows.iter_mut().enumerate() {
            row.push(parse(&rec[l + 1], path, i + 2)?);
        }
    }
    if energies.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no rows", path.display())));
    }
    PhaseShiftTable::from_rows(energies, rows)
}

/// Sector metadata stored next to a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSidecar {
    pub sector: AngularSector,
    pub abscissa_kind: AbscissaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Header `abscissa,value,sigma_err` (empty `sigma_err` when absent) plus a JSON sidecar.
pub fn write_sector_curve(
    path: &Path,
    curve: &SectorCurve,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let header = ["abscissa", "value", "sigma_err"].map(String::from);
    let rows = (0..curve.len()).map(|i| {
        vec![
            num(curve.abscissa[i]),
            num(curve.values[i]),
            curve
                .sigma_err
                .as_ref()
                .map(|s| num(s[i]))
                .unwrap_or_default(),
        ]
    });
    write_atomic(path, &csv_bytes(&header, rows)?)?;
    write_json(
        &sidecar_path(path),
        &CurveSidecar {
            sector: curve.sector.clone(),
            abscissa_kind: curve.abscissa_kind,
            provenance,
        },
    )
}

/// Reads a curve; sector metadata come from `sidecar` if given, else from the file next to it.
pub fn read_sector_curve(path: &Path, sidecar: Option<CurveSidecar>) -> Result<SectorCurve> {
    let meta = match sidecar {
        Some(m) => m,
        None => read_json(&sidecar_path(path))?,
    };
    let mut r = open_csv(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2
        || &header[0] != "abscissa"
        || &header[1] != "value"
        || (header.len() > 2 && &header[2] != "sigma_err")
    {
        return Err(Error::InvalidInput(format!(
            "{}: header must be abscissa,value,sigma_err",
            path.display()
        )));
    }
    let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        x.push(parse(&rec[0], path, i + 2)?);
        y.push(parse(&rec[1], path, i + 2)?);
        match rec.get(2) {
            Some(f) if !f.is_empty() => s.push(Some(parse(f, path, i + 2)?)),
            _ => s.push(None),
        }
    }
    if x.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let sigma_err = if s.iter().all(Option::is_some) {
        Some(s.into_iter().flatten().collect())
    } else if s.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::InvalidInput(format!(
            "{}: sigma_err must be given on every row or none",
            path.display()
        )));
    };
    SectorCurve::new(meta.abscissa_kind, x, y, sigma_err, meta.sector)
}

/// Header `x,y`.
pub fn write_image_points(path: &Path, image: &DetectorImage) -> Result<()> {
    let rows = image.points.iter().map(|&(x, y)| vec![num(x), num(y)]);
    write_atomic(path, &csv_bytes(&["x".into(), "y".into()], rows)?)
}

/// Plain-text PGM with counts scaled to 0..=255, top row at the largest `y`.
pub fn write_pgm(path: &Path, image: &BinnedImage) -> Result<()> {
    let max = image.counts.iter().copied().max().unwrap_or(0).max(1);
    let mut s = format!("P2\n{} {}\n255\n", image.n, image.n);
    for row in (0..image.n).rev() {
        let line: Vec<String> = (0..image.n)
            .map(|c| (image.counts[row * image.n + c] * 255 / max).to_string())
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Header `sector,energy,factor`; holes have an empty factor.
pub fn write_transfer_function(path: &Path, tf: &TransferFunction) -> Result<()> {
    let mut rows = Vec::new();
    for (s, row) in tf.sectors.iter().zip(&tf.factors) {
        for (e, f) in tf.energies.iter().zip(row) {
            rows.push(vec![s.clone(), num(*e), f.map(num).unwrap_or_default()]);
        }
    }
    let header = ["sector", "energy", "factor"].map(String::from);
    write_atomic(path, &csv_bytes(&header, rows)?)
}

pub fn read_transfer_function(path: &Path) -> Result<TransferFunction> {
    let mut r = open_csv(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["sector", "energy", "factor"] {
        return Err(Error::InvalidInput(format!(
            "{}: header must be sector,energy,factor",
            path.display()
        )));
    }
    let mut tf = TransferFunction {
        sectors: Vec::new(),
        energies: Vec::new(),
        factors: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let e = parse(&rec[1], path, i + 2)?;
        let f = if rec[2].is_empty() {
            None
        } else {
            Some(parse(&rec[2], path, i + 2)?)
        };
        if tf.sectors.last().map(String::as_str) != Some(&rec[0]) {
            tf.sectors.push(rec[0].to_string());
            tf.factors.push(Vec::new());
        }
        let row = tf.factors.last_mut().unwrap();
        if tf.sectors.len() == 1 {
            tf.energies.push(e);
        } else if tf.energies.get(row.len()) != Some(&e) {
            return Err(Error::InvalidInput(format!(
                "{}: sectors use different energy grids",
                path.display()
            )));
        }
        row.push(f);
    }
    if tf.factors.iter().any(|r| r.len() != tf.energies.len()) {
        return Err(Error::InvalidInput(format!(
            "{}: ragged energy grid",
            path.display()
        )));
    }
    Ok(tf)
}
