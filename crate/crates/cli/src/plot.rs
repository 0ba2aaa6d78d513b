//! Deterministic SVG line plots of curve files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fanoscat_core::io::{read_sector_curve, sidecar_path, write_atomic};
use fanoscat_core::AbscissaKind;
use sha2::{Digest, Sha256};

use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    label: String,
    y: Vec<f64>,
    err: Option<Vec<f64>>,
}

fn interp(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let j = x.partition_point(|&v| v < at);
    if j < x.len() && x[j] == at {
        return Some(y[j]);
    }
    if j == 0 || j == x.len() {
        return None;
    }
    let t = (at - x[j - 1]) / (x[j] - x[j - 1]);
    Some(y[j - 1] + t * (y[j] - y[j - 1]))
}

fn same_abscissa(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(p, q)| (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1.0))
}

fn inputs_hash(paths: &[PathBuf]) -> Result<String, CliError> {
    let mut h = Sha256::new();
    for p in paths {
        for f in [p.clone(), sidecar_path(p)] {
            let bytes = std::fs::read(&f)
                .map_err(|e| CliError::validation(format!("{}: {e}", f.display())))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    }
}

pub fn run(
    curves: &[PathBuf],
    resample: bool,
    out: &Path,
    name: &str,
    hash: Option<String>,
) -> Result<(), CliError> {
    if name.is_empty() || Path::new(name).components().count() != 1 {
        return Err(CliError::validation(format!(
            "plot name must be a plain file name, got {name:?}"
        )));
    }
    let mut read = Vec::new();
    for p in curves {
        let c = read_sector_curve(p, None).map_err(CliError::from_core_validation)?;
        let label = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        read.push((label, c));
    }
    let kind = read[0].1.abscissa_kind;
    if read.iter().any(|(_, c)| c.abscissa_kind != kind) {
        return Err(CliError::validation(
            "curves mix energy and reduced-energy abscissae",
        ));
    }
    let x = read[0].1.abscissa.clone();
    let mut series = Vec::new();
    for (label, c) in read {
        if same_abscissa(&x, &c.abscissa) {
            series.push(Series {
                label,
                y: c.values,
                err: c.sigma_err,
            });
        } else if resample {
            let y = x
                .iter()
                .map(|&v| interp(&c.abscissa, &c.values, v))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "{label} does not cover the first curve's abscissa"
                    ))
                })?;
            let err = match &c.sigma_err {
                Some(s) => x.iter().map(|&v| interp(&c.abscissa, s, v)).collect(),
                None => None,
            };
            series.push(Series { label, y, err });
        } else {
            return Err(CliError::validation(format!(
                "{label} has a different abscissa; pass --resample to interpolate"
            )));
        }
    }
    let hash = match hash {
        Some(h) => h,
        None => inputs_hash(curves)?,
    };
    let svg = render(&x, &series, kind, &hash);
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;
    write_atomic(&out.join(name), svg.as_bytes())?;
    Ok(())
}

fn render(x: &[f64], series: &[Series], kind: AbscissaKind, hash: &str) -> String {
    let (x0, x1) = range(x.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|s| {
        s.y.iter().enumerate().flat_map(move |(i, &v)| {
            let e = s.err.as_ref().map_or(0.0, |e| e[i]);
            [v - e, v + e]
        })
    }));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (y1 - v) / (y1 - y0) * ph;
    let xlabel = match kind {
        AbscissaKind::ReducedEnergy => "reduced energy ε",
        AbscissaKind::Energy => "collision energy E",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<metadata>config_hash={hash}</metadata>");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x0, x1) {
        let px = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{b2:.2}" stroke="black"/><text x="{px:.2}" y="{ty:.2}" text-anchor="middle">{t}</text>"#,
            b = TOP + ph,
            b2 = TOP + ph + 5.0,
            ty = TOP + ph + 18.0,
            t = tick_label(t)
        );
    }
    for t in ticks(y0, y1) {
        let py = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{a:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{t}</text>"#,
            a = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = py + 4.0,
            t = tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{cx:.2}" y="{y:.2}" text-anchor="middle">{xlabel}</text>"#,
        cx = LEFT + pw / 2.0,
        y = HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">k²-scaled cross section</text>"#,
        cy = TOP + ph / 2.0
    );
    for (k, ser) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(&ser.y)
            .map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        if let Some(err) = &ser.err {
            for ((&a, &b), &e) in x.iter().zip(&ser.y).zip(err) {
                let _ = writeln!(
                    s,
                    r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{c}"/>"#,
                    px = sx(a),
                    lo = sy(b - e),
                    hi = sy(b + e)
                );
            }
        }
        let ly = TOP + 15.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{lx2:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/><text x="{tx:.2}" y="{ty:.2}">{label}</text>"#,
            lx2 = lx + 20.0,
            tx = lx + 26.0,
            ty = ly + 4.0,
            label = escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
