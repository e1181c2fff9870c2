//! Standalone SVG plots: learning curves with shaded +/- std bands and
//! vertical reset markers, and interval plots for aggregate results. Every
//! plot gets a sidecar CSV holding exactly the plotted numbers.

use std::fmt::Write as _;
use std::path::Path;

use super::{AggregateResult, CurveTable};
use crate::{Error, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2",
];

/// One curve to draw: an aggregated table plus the env steps where resets
/// fired (rendered as vertical markers).
#[derive(Debug, Clone)]
pub struct CurvePlotSeries {
    pub label: String,
    pub table: CurveTable,
    pub reset_steps: Vec<u64>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Axis {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Axis {
    fn to_px(&self, v: f64) -> f64 {
        let span = if self.max > self.min { self.max - self.min } else { 1.0 };
        self.lo_px + (v - self.min) / span * (self.hi_px - self.lo_px)
    }

    /// Tick positions at a 1/2/5 step covering the range.
    fn ticks(&self) -> Vec<f64> {
        let span = if self.max > self.min { self.max - self.min } else { 1.0 };
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let norm = raw / mag;
        let step = if norm < 1.5 {
            mag
        } else if norm < 3.5 {
            2.0 * mag
        } else if norm < 7.5 {
            5.0 * mag
        } else {
            10.0 * mag
        };
        let first = (self.min / step).ceil() * step;
        let mut t = Vec::new();
        let mut v = first;
        while v <= self.max + step * 1e-9 {
            t.push(v);
            v += step;
        }
        t
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 10_000.0 {
        format!("{:.0}k", v / 1000.0)
    } else if v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn svg_header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(title)
    );
}

fn draw_axes(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"##,
        MARGIN_L,
        MARGIN_T,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    for t in x.ticks() {
        let px = x.to_px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#ddd" stroke-width="0.6"/>"##,
            MARGIN_T,
            HEIGHT - MARGIN_B
        );
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 16.0,
            fmt_tick(t)
        );
    }
    for t in y.ticks() {
        let py = y.to_px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd" stroke-width="0.6"/>"##,
            MARGIN_L,
            WIDTH - MARGIN_R
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        xml_escape(y_label)
    );
}

/// Curves with shaded +/- std bands; reset events become vertical dashed
/// markers. Writes `<out>.svg` and a sidecar CSV with the plotted numbers.
pub fn emit_curve_plot(series: &[CurvePlotSeries], title: &str, out_svg: &Path) -> Result<()> {
    if series.is_empty() || series.iter().any(|s| s.table.steps.is_empty()) {
        return Err(Error::Config("nothing to plot".into()));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for (i, &step) in s.table.steps.iter().enumerate() {
            x_min = x_min.min(step as f64);
            x_max = x_max.max(step as f64);
            y_min = y_min.min(s.table.mean[i] - s.table.std[i]);
            y_max = y_max.max(s.table.mean[i] + s.table.std[i]);
        }
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let x = Axis {
        min: x_min,
        max: x_max.max(x_min + 1.0),
        lo_px: MARGIN_L,
        hi_px: WIDTH - MARGIN_R,
    };
    let y = Axis {
        min: y_min - pad,
        max: y_max + pad,
        lo_px: HEIGHT - MARGIN_B,
        hi_px: MARGIN_T,
    };

    let mut svg = String::new();
    svg_header(&mut svg, title);
    draw_axes(&mut svg, &x, &y, "env step", "eval return");

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &rs in &s.reset_steps {
            let px = x.to_px(rs as f64);
            let _ = writeln!(
                svg,
                r#"<line class="reset-marker" x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="{color}" stroke-width="1" stroke-dasharray="4,3" opacity="0.55"/>"#,
                MARGIN_T,
                HEIGHT - MARGIN_B
            );
        }
        let mut band = String::new();
        for (i, &step) in s.table.steps.iter().enumerate() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                x.to_px(step as f64),
                y.to_px(s.table.mean[i] + s.table.std[i])
            );
        }
        for (i, &step) in s.table.steps.iter().enumerate().rev() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                x.to_px(step as f64),
                y.to_px(s.table.mean[i] - s.table.std[i])
            );
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" opacity="0.16" stroke="none"/>"#,
            band.trim_end()
        );
        let mut line = String::new();
        for (i, &step) in s.table.steps.iter().enumerate() {
            let _ = write!(line, "{:.2},{:.2} ", x.to_px(step as f64), y.to_px(s.table.mean[i]));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            line.trim_end()
        );
        let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            WIDTH - MARGIN_R - 170.0,
            WIDTH - MARGIN_R - 146.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH - MARGIN_R - 140.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(out_svg, svg)?;

    let mut csv = String::from("series,step,mean,std\n");
    for s in series {
        for (i, &step) in s.table.steps.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{}", s.label, step, s.table.mean[i], s.table.std[i]);
        }
    }
    std::fs::write(sidecar_path(out_svg), csv)?;
    Ok(())
}

/// Interval plot: one row per labeled aggregate, point plus CI whiskers.
/// Writes the SVG and a sidecar CSV.
pub fn emit_interval_plot(entries: &[(String, AggregateResult)], title: &str, out_svg: &Path) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for (_, r) in entries {
        v_min = v_min.min(r.ci_low);
        v_max = v_max.max(r.ci_high);
    }
    if v_min == v_max {
        v_min -= 1.0;
        v_max += 1.0;
    }
    let pad = 0.08 * (v_max - v_min);
    let x = Axis {
        min: v_min - pad,
        max: v_max + pad,
        lo_px: MARGIN_L + 110.0,
        hi_px: WIDTH - MARGIN_R,
    };

    let mut svg = String::new();
    svg_header(&mut svg, title);
    let rows = entries.len() as f64;
    let row_h = (HEIGHT - MARGIN_T - MARGIN_B) / rows;
    for t in x.ticks() {
        let px = x.to_px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#ddd" stroke-width="0.6"/>"##,
            MARGIN_T,
            HEIGHT - MARGIN_B
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 16.0,
            fmt_tick(t)
        );
    }
    for (i, (label, r)) in entries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cy = MARGIN_T + row_h * (i as f64 + 0.5);
        let x_lo = x.to_px(r.ci_low);
        let x_hi = x.to_px(r.ci_high);
        let x_pt = x.to_px(r.point);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN_L + 96.0,
            cy + 4.0,
            xml_escape(label)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{x_lo:.2}" y1="{cy:.2}" x2="{x_hi:.2}" y2="{cy:.2}" stroke="{color}" stroke-width="2"/>"#
        );
        for cap in [x_lo, x_hi] {
            let _ = writeln!(
                svg,
                r#"<line x1="{cap:.2}" y1="{:.2}" x2="{cap:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
                cy - 6.0,
                cy + 6.0
            );
        }
        let _ = writeln!(svg, r#"<circle cx="{x_pt:.2}" cy="{cy:.2}" r="4" fill="{color}"/>"#);
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(out_svg, svg)?;

    let mut csv = String::from("label,statistic,point,ci_low,ci_high,confidence,resamples\n");
    for (label, r) in entries {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            label, r.statistic, r.point, r.ci_low, r.ci_high, r.confidence, r.resamples
        );
    }
    std::fs::write(sidecar_path(out_svg), csv)?;
    Ok(())
}

fn sidecar_path(svg: &Path) -> std::path::PathBuf {
    svg.with_extension("csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Statistic;

    fn table() -> CurveTable {
        CurveTable {
            steps: vec![1000, 2000, 3000, 4000],
            mean: vec![10.0, 40.0, 90.0, 120.5],
            std: vec![2.0, 8.0, 5.0, 3.25],
        }
    }

    /// Minimal well-formedness check: tags balance and nest properly.
    fn assert_well_formed_xml(text: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().unwrap_or_else(|| panic!("stray closing tag {name}"));
                assert_eq!(open, name, "mismatched tags");
            } else if !tag.ends_with('/') {
                let name: String = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn curve_plot_is_well_formed_and_sidecar_exact() {
        let dir = std::env::temp_dir().join("resetlab_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let svg_path = dir.join("curve.svg");
        let series = vec![CurvePlotSeries {
            label: "baseline".into(),
            table: table(),
            reset_steps: vec![2000],
        }];
        emit_curve_plot(&series, "test curves", &svg_path).unwrap();
        let svg = std::fs::read_to_string(&svg_path).unwrap();
        assert_well_formed_xml(&svg);

        let csv = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "series,step,mean,std");
        let t = table();
        for (i, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts[0], "baseline");
            assert_eq!(parts[1].parse::<u64>().unwrap(), t.steps[i]);
            // Shortest round-trip formatting: parsing back is bit-exact.
            assert_eq!(parts[2].parse::<f64>().unwrap(), t.mean[i]);
            assert_eq!(parts[3].parse::<f64>().unwrap(), t.std[i]);
        }
    }

    #[test]
    fn reset_markers_land_at_logged_steps() {
        let dir = std::env::temp_dir().join("resetlab_plot_test_markers");
        std::fs::create_dir_all(&dir).unwrap();
        let svg_path = dir.join("m.svg");
        let series = vec![CurvePlotSeries {
            label: "with resets".into(),
            table: table(),
            reset_steps: vec![2000, 3000],
        }];
        emit_curve_plot(&series, "markers", &svg_path).unwrap();
        let svg = std::fs::read_to_string(&svg_path).unwrap();

        // Recompute the x transform the plot uses.
        let x = Axis {
            min: 1000.0,
            max: 4000.0,
            lo_px: MARGIN_L,
            hi_px: WIDTH - MARGIN_R,
        };
        for rs in [2000u64, 3000] {
            let expect = format!(
                r#"<line class="reset-marker" x1="{:.2}""#,
                x.to_px(rs as f64)
            );
            assert!(svg.contains(&expect), "missing marker for step {rs}");
        }
    }

    #[test]
    fn interval_plot_emits_and_balances() {
        let dir = std::env::temp_dir().join("resetlab_plot_test_iv");
        std::fs::create_dir_all(&dir).unwrap();
        let svg_path = dir.join("iv.svg");
        let entries = vec![
            (
                "resets".to_string(),
                AggregateResult {
                    statistic: Statistic::Iqm,
                    point: 0.8,
                    ci_low: 0.7,
                    ci_high: 0.9,
                    confidence: 0.95,
                    resamples: 2000,
                    degenerate: false,
                },
            ),
            (
                "no resets".to_string(),
                AggregateResult {
                    statistic: Statistic::Iqm,
                    point: 0.5,
                    ci_low: 0.35,
                    ci_high: 0.62,
                    confidence: 0.95,
                    resamples: 2000,
                    degenerate: false,
                },
            ),
        ];
        emit_interval_plot(&entries, "aggregates", &svg_path).unwrap();
        let svg = std::fs::read_to_string(&svg_path).unwrap();
        assert_well_formed_xml(&svg);
        let csv = std::fs::read_to_string(dir.join("iv.csv")).unwrap();
        assert!(csv.starts_with("label,statistic,point,ci_low,ci_high"));
        assert!(csv.contains("resets,iqm,0.8,0.7,0.9,0.95,2000"));
    }

    #[test]
    fn empty_input_rejected() {
        let p = std::env::temp_dir().join("never.svg");
        assert!(emit_curve_plot(&[], "t", &p).is_err());
        assert!(emit_interval_plot(&[], "t", &p).is_err());
    }
}
