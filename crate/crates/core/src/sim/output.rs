//! Trace export: CSV (authoritative) and a static SVG overview.

use std::fmt::Write as _;
use std::io::Write;

use super::closed_loop::{Sample, SimTrace};
use crate::error::{CoreError, Result};

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "v_y", "r", "psi_l", "y_l", "delta", "delta_dot", "v_x", "T_d", "T_ovr", "theta_d", "mu", "u_raw",
        "u_sat", "T_c", "f_w", "rho_c", "DS",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=8).map(|i| format!("eta_{i}")));
    h.push("V".into());
    h
}

fn row(s: &Sample) -> Vec<f64> {
    let mut r = vec![s.t];
    r.extend(s.x.iter());
    r.extend([
        s.exo.v_x,
        s.sig.t_d,
        s.exo.t_ovr,
        s.sig.theta_d,
        s.sig.mu,
        s.sig.u_raw,
        s.sig.u_sat,
        s.sig.t_c,
        s.exo.f_w,
        s.exo.rho_c,
        s.exo.ds,
    ]);
    r.extend(s.sig.eta.iter());
    r.push(s.v);
    r
}

/// 17 significant digits, so every value reads back bit-exactly.
pub fn write_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let to_err = |e: csv::Error| CoreError::Config(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header()).map_err(to_err)?;
    for s in &trace.samples {
        // normalize -0 so identical runs print identical bytes
        w.write_record(row(s).iter().map(|v| format!("{:.16e}", v + 0.0))).map_err(to_err)?;
    }
    w.flush().map_err(|e| CoreError::Config(format!("csv: {e}")))?;
    Ok(())
}

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 150.0;
const MARGIN: f64 = 60.0;
const MAX_POINTS: usize = 2000;

/// Stacked line charts of `y_l`, `T_c`, `T_d` and `μ` against time.
pub fn render_svg(trace: &SimTrace) -> String {
    let panels: [(&str, fn(&Sample) -> f64); 4] = [
        ("y_l [m]", |s| s.x[3]),
        ("T_c [N·m]", |s| s.sig.t_c),
        ("T_d [N·m]", |s| s.sig.t_d),
        ("mu [-]", |s| s.sig.mu),
    ];
    let stride = trace.samples.len().div_ceil(MAX_POINTS).max(1);
    let pts: Vec<&Sample> = trace.samples.iter().step_by(stride).collect();
    let (t0, t1) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) if b.t > a.t => (a.t, b.t),
        _ => (0.0, 1.0),
    };
    let height = MARGIN + panels.len() as f64 * (PANEL_H + MARGIN);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#,
        trace.scenario
    );
    let plot_w = WIDTH - 2.0 * MARGIN;
    for (p, (label, f)) in panels.iter().enumerate() {
        let top = MARGIN + p as f64 * (PANEL_H + MARGIN);
        let ys: Vec<f64> = pts.iter().map(|s| f(s)).collect();
        let (mut lo, mut hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        if !(hi > lo) {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        }
        let sx = |t: f64| MARGIN + (t - t0) / (t1 - t0) * plot_w;
        let sy = |y: f64| top + PANEL_H - (y - lo) / (hi - lo) * PANEL_H;
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="gray"/>"#
        );
        let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}">{label}</text>"#, top - 6.0);
        let _ = writeln!(svg, r#"<text x="4" y="{}">{hi:.3}</text>"#, top + 10.0);
        let _ = writeln!(svg, r#"<text x="4" y="{}">{lo:.3}</text>"#, top + PANEL_H);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">t [s]: {t0:.1} .. {t1:.1}</text>"#,
            WIDTH - MARGIN - 120.0,
            top + PANEL_H + 16.0
        );
        let mut path = String::new();
        for (i, (s, y)) in pts.iter().zip(&ys).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(s.t), sy(*y));
        }
        let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="steelblue"/>"#, path.trim_end());
    }
    svg.push_str("</svg>\n");
    svg
}
