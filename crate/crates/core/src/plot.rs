//! Self-contained SVG scatter plots of `(||u||_T, ||y||_T)` with sector lines.
//!
//! Output depends only on the records passed in: coordinates are printed with
//! fixed precision and panels are laid out in input order.

use std::fmt::Write as _;

use crate::cone::{empirical_cone, TrajectoryRecord};
use crate::error::Result;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 40.0;
const TITLE_H: f64 = 36.0;
const MAX_COLS: usize = 3;
const MAX_POINTS: usize = 5000;

pub struct PlotPanel {
    pub label: String,
    pub records: Vec<TrajectoryRecord>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one scatter panel per entry with the true sector (gray dashed),
/// the empirical bounds `a_R` and `b_L` (solid) and `b_I` (dotted), all
/// drawn as rays `||y|| = k ||u||`.
pub fn render_figure(title: &str, panels: &[PlotPanel], true_cone: Option<(f64, f64)>) -> Result<String> {
    let cols = panels.len().clamp(1, MAX_COLS);
    let rows = panels.len().div_ceil(cols).max(1);
    let width = cols as f64 * PANEL_W;
    let height = TITLE_H + rows as f64 * PANEL_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, panel) in panels.iter().enumerate() {
        let x0 = (i % cols) as f64 * PANEL_W;
        let y0 = TITLE_H + (i / cols) as f64 * PANEL_H;
        draw_panel(&mut svg, panel, x0, y0, true_cone)?;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_panel(
    svg: &mut String,
    panel: &PlotPanel,
    x0: f64,
    y0: f64,
    true_cone: Option<(f64, f64)>,
) -> Result<()> {
    let left = x0 + MARGIN;
    let top = y0 + MARGIN / 2.0;
    let w = PANEL_W - 1.5 * MARGIN;
    let h = PANEL_H - 1.5 * MARGIN;
    let bounds = empirical_cone(&panel.records).ok();

    let x_max = panel
        .records
        .iter()
        .map(|r| r.norm_u())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut y_max = panel.records.iter().map(|r| r.norm_y()).fold(0.0, f64::max);
    if let Some((_, b)) = true_cone {
        y_max = y_max.max(b.abs() * x_max);
    }
    let y_max = y_max.max(1e-12) * 1.05;
    let x_max = x_max * 1.05;
    let px = |x: f64| left + w * x / x_max;
    let py = |y: f64| top + h * (1.0 - y / y_max);

    let _ = writeln!(svg, r#"<g>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        top - 6.0,
        escape(&panel.label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">||u|| (max {x_max:.3})</text>"#,
        left + w / 2.0,
        top + h + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">||y|| (max {y_max:.3})</text>"#,
        left - 10.0,
        top + h / 2.0,
        left - 10.0,
        top + h / 2.0
    );

    let ray = |svg: &mut String, slope: f64, style: &str| {
        if !slope.is_finite() || slope < 0.0 {
            return;
        }
        let (x_end, y_end) = if slope * x_max <= y_max {
            (x_max, slope * x_max)
        } else {
            (y_max / slope, y_max)
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
            px(0.0),
            py(0.0),
            px(x_end),
            py(y_end)
        );
    };
    if let Some((a, b)) = true_cone {
        for k in [a, b] {
            ray(svg, k, r#"stroke="gray" stroke-dasharray="4 3""#);
        }
    }
    if let Some(c) = &bounds {
        for k in [c.a_r, c.b_l] {
            ray(svg, k, r#"stroke="crimson""#);
        }
        ray(svg, c.b_i, r#"stroke="crimson" stroke-dasharray="1 3""#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">a_R {:.3}  b_L {:.3}  b_I {:.3}</text>"#,
            left + 6.0,
            top + 14.0,
            c.a_r,
            c.b_l,
            c.b_i
        );
    }

    let stride = panel.records.len().div_ceil(MAX_POINTS).max(1);
    for r in panel.records.iter().step_by(stride) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="steelblue" fill-opacity="0.6"/>"#,
            px(r.norm_u()),
            py(r.norm_y())
        );
    }
    let _ = writeln!(svg, "</g>");
    Ok(())
}
