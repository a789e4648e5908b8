//! File writers: CSV tables, legacy VTK meshes, SVG line plots and JSON reports.
//!
//! Numbers are written in the shortest decimal form that round-trips, so the
//! files depend only on the computed values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fem::BoundaryLoad;
use crate::mesh::Mesh;
use crate::optimize::AscentTrace;
use crate::oracle::{ArcConfig, CompareRow};
use crate::region::BoundaryRegion;
use crate::shape::DerivativeReport;

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes a CSV file with the given header.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    w.write_record(header).map_err(std::io::Error::from)?;
    for row in rows {
        w.write_record(&row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// `vertex_id,x,y,u`
pub fn write_solution_csv(path: &Path, mesh: &Mesh, u: &[f64]) -> Result<()> {
    let rows = mesh
        .vertices()
        .iter()
        .zip(u)
        .enumerate()
        .map(|(i, ([x, y], u))| vec![i.to_string(), num(*x), num(*y), num(*u)]);
    write_csv(path, &["vertex_id", "x", "y", "u"], rows)
}

/// `s,f,u` at the boundary loop vertices.
pub fn write_trace_csv(path: &Path, mesh: &Mesh, load: &BoundaryLoad, u: &[f64]) -> Result<()> {
    let trace = mesh.boundary_trace(u);
    let rows = mesh
        .boundary_coordinates()
        .into_iter()
        .zip(trace)
        .map(|(s, u)| vec![num(s), num(load.value_at(mesh, s)), num(u)]);
    write_csv(path, &["s", "f", "u"], rows)
}

/// `iter,J,threshold_s,measure,residual`
pub fn write_ascent_csv(path: &Path, trace: &AscentTrace) -> Result<()> {
    let rows = trace.steps.iter().map(|st| {
        vec![
            st.iter.to_string(),
            num(st.j),
            opt(st.threshold_s),
            num(st.measure),
            opt(st.residual),
        ]
    });
    write_csv(path, &["iter", "J", "threshold_s", "measure", "residual"], rows)
}

/// `s_begin,s_end`, one row per arc. An arc through `s = 0` has `s_end`
/// beyond the perimeter.
pub fn write_region_csv(path: &Path, region: &BoundaryRegion) -> Result<()> {
    let rows = region
        .arcs()
        .into_iter()
        .map(|a| vec![num(a.begin), num(a.end())]);
    write_csv(path, &["s_begin", "s_end"], rows)
}

/// `edge_id,f`
pub fn write_rearrangement_csv(path: &Path, f: &[f64]) -> Result<()> {
    let rows = f.iter().enumerate().map(|(i, f)| vec![i.to_string(), num(*f)]);
    write_csv(path, &["edge_id", "f"], rows)
}

/// `vertex_id,v`
pub fn write_extremal_csv(path: &Path, v: &[f64]) -> Result<()> {
    let rows = v.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]);
    write_csv(path, &["vertex_id", "v"], rows)
}

/// `t,fd_dJ,formula_dJ,fd_dA,formula_dA`
pub fn write_derivative_csv(path: &Path, report: &DerivativeReport) -> Result<()> {
    let rows = report.entries.iter().map(|e| {
        vec![
            num(e.t),
            num(e.fd_dj),
            num(e.formula_dj),
            num(e.fd_da),
            num(e.formula_da),
        ]
    });
    write_csv(path, &["t", "fd_dJ", "formula_dJ", "fd_dA", "formula_dA"], rows)
}

/// `config_id,description,J`
pub fn write_oracle_csv(path: &Path, table: &[ArcConfig]) -> Result<()> {
    let rows = table
        .iter()
        .map(|c| vec![c.config_id.to_string(), c.description.clone(), num(c.j)]);
    write_csv(path, &["config_id", "description", "J"], rows)
}

/// `n_refine,J_fem,J_oracle,abs_err`
pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.n_refine.to_string(),
            num(r.j_fem),
            num(r.j_oracle),
            num(r.abs_err),
        ]
    });
    write_csv(path, &["n_refine", "J_fem", "J_oracle", "abs_err"], rows)
}

/// Legacy ASCII VTK unstructured grid with nodal scalar fields.
pub fn vtk_string(mesh: &Mesh, fields: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    let n = mesh.n_vertices();
    let tris = mesh.triangles();
    out.push_str("# vtk DataFile Version 3.0\nmembrane solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {n} double");
    for [x, y] in mesh.vertices() {
        let _ = writeln!(out, "{} {} 0", num(*x), num(*y));
    }
    let _ = writeln!(out, "CELLS {} {}", tris.len(), 4 * tris.len());
    for [a, b, c] in tris {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {}", tris.len());
    for _ in tris {
        out.push_str("5\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {n}");
    }
    for (name, values) in fields {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values.iter() {
            out.push_str(&num(*v));
            out.push('\n');
        }
    }
    out
}

pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[(&str, &[f64])]) -> Result<()> {
    fs::write(path, vtk_string(mesh, fields))?;
    Ok(())
}

/// One polyline of an SVG plot.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Axis range over the finite transformed values; `[0, 1]` when there are none.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn transform(v: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => v,
        Scale::Log10 if v > 0.0 => v.log10(),
        Scale::Log10 => f64::NAN,
    }
}

/// Line plot with axes, ticks and a legend. Non-finite points (and
/// non-positive ones on log axes) are skipped.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    x_scale: Scale,
    y_scale: Scale,
) -> String {
    let xs = range(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| transform(p.0, x_scale))),
    );
    let ys = range(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| transform(p.1, y_scale))),
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - xs.0) / (xs.1 - xs.0) * pw;
    let py = |y: f64| TOP + ph - (y - ys.0) / (ys.1 - ys.0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (xs.0 + f * (xs.1 - xs.0), ys.0 + f * (ys.1 - ys.0));
        let (lx, ly) = match (x_scale, y_scale) {
            (Scale::Log10, Scale::Log10) => (10f64.powf(x), 10f64.powf(y)),
            (Scale::Log10, Scale::Linear) => (10f64.powf(x), y),
            (Scale::Linear, Scale::Log10) => (x, 10f64.powf(y)),
            (Scale::Linear, Scale::Linear) => (x, y),
        };
        let (sx, sy) = (px(x), py(y));
        let _ = writeln!(
            svg,
            r##"<line x1="{sx:.2}" y1="{}" x2="{sx:.2}" y2="{}" stroke="#ccc"/><text x="{sx:.2}" y="{}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            tick_label(lx)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{sy:.2}" x2="{}" y2="{sy:.2}" stroke="#ccc"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT,
            LEFT + pw,
            LEFT - 6.0,
            sy + 4.0,
            tick_label(ly)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| (transform(x, x_scale), transform(y, y_scale)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if pts.len() == 1 {
            let (cx, cy) = pts[0].split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        } else if !pts.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            LEFT + pw - 130.0,
            LEFT + pw - 110.0,
            LEFT + pw - 104.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg)?;
    Ok(())
}

/// `J` against ascent iteration.
pub fn ascent_plot(trace: &AscentTrace) -> String {
    let pts = trace.steps.iter().map(|s| (s.iter as f64, s.j)).collect();
    line_plot(
        "Ascent",
        "iteration",
        "J",
        &[Series::new("J", pts)],
        Scale::Linear,
        Scale::Linear,
    )
}

/// Boundary trace `u(s)` overlaid with the load `f(s)`.
pub fn trace_plot(mesh: &Mesh, load: &BoundaryLoad, u: &[f64]) -> String {
    let s = mesh.boundary_coordinates();
    let trace = mesh.boundary_trace(u);
    let u_pts = s.iter().zip(&trace).map(|(s, u)| (*s, *u)).collect();
    let f_pts = s.iter().map(|&s| (s, load.value_at(mesh, s))).collect();
    line_plot(
        "Boundary trace and load",
        "arc length s",
        "value",
        &[Series::new("u(s)", u_pts), Series::new("f(s)", f_pts)],
        Scale::Linear,
        Scale::Linear,
    )
}

/// Log-log plot of the finite-difference error against the step size.
pub fn derivative_plot(report: &DerivativeReport) -> String {
    let gap = report.entries.iter().map(|e| (e.t, e.gap_j())).collect();
    let area = report
        .entries
        .iter()
        .map(|e| (e.t, (e.fd_da - e.formula_da).abs()))
        .collect();
    line_plot(
        "Finite differences vs formula",
        "step t",
        "|FD - formula|",
        &[Series::new("dJ", gap), Series::new("dA", area)],
        Scale::Log10,
        Scale::Log10,
    )
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::optimize::Termination;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5331467e-7, -0.0, 1e300, 123456789.125] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(2.0), "2");
    }

    #[test]
    fn vtk_layout() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 8, 0)).unwrap();
        let u: Vec<f64> = (0..mesh.n_vertices()).map(|i| i as f64).collect();
        let text = vtk_string(&mesh, &[("u", &u)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], format!("POINTS {} double", mesh.n_vertices()));
        let nt = mesh.triangles().len();
        assert!(text.contains(&format!("CELLS {nt} {}", 4 * nt)));
        let at = lines
            .iter()
            .position(|l| *l == format!("CELL_TYPES {nt}"))
            .unwrap();
        assert!(lines[at + 1..=at + nt].iter().all(|l| *l == "5"));
        assert!(text.contains(&format!("POINT_DATA {}\nSCALARS u double 1", mesh.n_vertices())));
        assert!(text.ends_with(&format!("{}\n", mesh.n_vertices() - 1)));
    }

    #[test]
    fn empty_plot_has_axes() {
        let trace = AscentTrace {
            steps: vec![],
            terminated: Termination::MaxIters,
            degenerate: false,
        };
        let svg = ascent_plot(&trace);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<rect x="));
        assert!(!svg.contains("polyline"));
        let none = line_plot("t", "x", "y", &[], Scale::Log10, Scale::Log10);
        assert!(none.contains("</svg>"));
        assert!(!none.contains("NaN"));
    }

    #[test]
    fn log_plot_skips_non_positive_points() {
        let s = Series::new("a", vec![(1e-2, 1e-5), (5e-3, 0.0), (2.5e-3, 2e-6)]);
        let svg = line_plot("t", "x", "y", &[s], Scale::Log10, Scale::Log10);
        assert_eq!(svg.matches("polyline").count(), 1);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn csv_files() {
        let dir = tempfile::tempdir().unwrap();
        let region = BoundaryRegion::from_intervals(&[(0.5, 1.5), (3.0, 3.25)], 6.0).unwrap();
        let path = dir.path().join("region.csv");
        write_region_csv(&path, &region).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "s_begin,s_end\n0.5,1.5\n3,3.25\n"
        );
        let path = dir.path().join("f.csv");
        write_rearrangement_csv(&path, &[1.0, 0.2]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "edge_id,f\n0,1\n1,0.2\n");
    }
}
