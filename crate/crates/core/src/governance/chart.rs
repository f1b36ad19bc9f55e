//! SVG rendering of indicators as variable-width columns.
//!
//! Each indicator is a column and each system a row. A cell's filled width is
//! the value scaled against the largest value in its column.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{IndicatorKind, IndicatorValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartLayout {
    pub max_col_width: f64,
    pub row_height: f64,
    pub col_gap: f64,
    pub label_width: f64,
    pub header_height: f64,
    pub margin: f64,
    /// Vertical inset of bars and markers inside a row.
    pub bar_inset: f64,
    pub tick_length: f64,
    pub font_family: String,
    pub font_size: f64,
    pub background: String,
    pub fill: String,
    pub frame: String,
    pub marker: String,
    pub hatch: String,
    pub dash: String,
}

impl Default for ChartLayout {
    fn default() -> Self {
        ChartLayout {
            max_col_width: 120.0,
            row_height: 40.0,
            col_gap: 16.0,
            label_width: 90.0,
            header_height: 40.0,
            margin: 10.0,
            bar_inset: 6.0,
            tick_length: 6.0,
            font_family: "sans-serif".into(),
            font_size: 11.0,
            background: "#ffffff".into(),
            fill: "#808080".into(),
            frame: "#c0c0c0".into(),
            marker: "#000000".into(),
            hatch: "#404040".into(),
            dash: "4 3".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("nothing to draw")]
    EmptyInput,
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("row {row} does not list the same indicators as the first row")]
    Ragged { row: usize },
    #[error("{kind} in row {row} has a negative or non-finite value")]
    BadValue { row: usize, kind: IndicatorKind },
}

impl ChartLayout {
    pub fn validate(&self) -> Result<(), ChartError> {
        let dims = [
            ("max_col_width", self.max_col_width, true),
            ("row_height", self.row_height, true),
            ("col_gap", self.col_gap, false),
            ("label_width", self.label_width, false),
            ("header_height", self.header_height, false),
            ("margin", self.margin, false),
            ("bar_inset", self.bar_inset, false),
            ("tick_length", self.tick_length, false),
            ("font_size", self.font_size, true),
        ];
        for (name, v, strict) in dims {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                return Err(ChartError::InvalidLayout(format!("{name} = {v}")));
            }
        }
        if 2.0 * self.bar_inset >= self.row_height {
            return Err(ChartError::InvalidLayout("bar_inset leaves no room in a row".into()));
        }
        Ok(())
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

fn check_value(v: Option<f64>, row: usize, kind: IndicatorKind) -> Result<(), ChartError> {
    match v {
        Some(x) if !(x.is_finite() && x >= 0.0) => Err(ChartError::BadValue { row, kind }),
        _ => Ok(()),
    }
}

/// Per-column scale factors (pixels per unit). A column whose values are all
/// zero or undefined gets a factor of 0.
pub fn column_scales(rows: &[(String, Vec<IndicatorValue>)], max_col_width: f64) -> Vec<f64> {
    let ncols = rows.first().map_or(0, |r| r.1.len());
    (0..ncols)
        .map(|c| {
            let max = rows.iter().filter_map(|r| r.1[c].value).fold(0.0_f64, f64::max);
            if max > 0.0 {
                max_col_width / max
            } else {
                0.0
            }
        })
        .collect()
}

/// Render a systems × indicators matrix. Every row must list the same
/// indicator kinds in the same order.
pub fn render_chart(rows: &[(String, Vec<IndicatorValue>)], layout: &ChartLayout) -> Result<String, ChartError> {
    layout.validate()?;
    let first = rows.first().ok_or(ChartError::EmptyInput)?;
    let kinds: Vec<IndicatorKind> = first.1.iter().map(|v| v.kind).collect();
    if kinds.is_empty() {
        return Err(ChartError::EmptyInput);
    }
    for (r, (_, vals)) in rows.iter().enumerate() {
        if vals.len() != kinds.len() || vals.iter().zip(&kinds).any(|(v, k)| v.kind != *k) {
            return Err(ChartError::Ragged { row: r });
        }
        for v in vals {
            check_value(v.value, r, v.kind)?;
            check_value(v.prev_value, r, v.kind)?;
            check_value(v.target, r, v.kind)?;
            check_value(v.benchmark, r, v.kind)?;
        }
    }

    let l = layout;
    let w = l.max_col_width;
    let scales = column_scales(rows, w);
    let ncols = kinds.len() as f64;
    let legend_height = l.font_size * 2.5;
    let width = 2.0 * l.margin + l.label_width + ncols * w + (ncols - 1.0) * l.col_gap;
    let body_top = l.margin + l.header_height;
    let body_height = rows.len() as f64 * l.row_height;
    let height = body_top + body_height + legend_height + l.margin;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="{}" font-size="{}">"#,
        px(width),
        px(height),
        px(width),
        px(height),
        esc(&l.font_family),
        px(l.font_size)
    );
    let _ = writeln!(s, "<defs>");
    let _ = writeln!(
        s,
        r#"<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="{}" stroke-width="1.5"/></pattern>"#,
        esc(&l.hatch)
    );
    let _ = writeln!(s, "</defs>");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="{}"/>"#,
        px(width),
        px(height),
        esc(&l.background)
    );

    let col_x = |c: usize| l.margin + l.label_width + c as f64 * (w + l.col_gap);

    for (c, k) in kinds.iter().enumerate() {
        let cx = col_x(c) + w / 2.0;
        let y1 = l.margin + l.header_height * 0.4;
        let y2 = l.margin + l.header_height * 0.75;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{}</text>"#,
            px(cx),
            px(y1),
            esc(k.label())
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(cx),
            px(y2),
            esc(k.unit())
        );
    }

    for (r, (system, vals)) in rows.iter().enumerate() {
        let y0 = body_top + r as f64 * l.row_height;
        let top = y0 + l.bar_inset;
        let bottom = y0 + l.row_height - l.bar_inset;
        let bar_h = bottom - top;
        let _ = writeln!(s, r#"<g class="row" data-system="{}">"#, esc(system));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
            px(l.margin),
            px(y0 + l.row_height / 2.0),
            esc(system)
        );
        for (c, v) in vals.iter().enumerate() {
            let x0 = col_x(c);
            let scale = scales[c];
            let at = |x: f64| x0 + (x * scale).min(w);
            let kind = format!("{:?}", v.kind);
            let _ = writeln!(
                s,
                r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{}"/>"#,
                px(x0),
                px(top),
                px(w),
                px(bar_h),
                esc(&l.frame)
            );
            match v.value {
                Some(x) => {
                    let _ = writeln!(
                        s,
                        r#"<rect class="value" data-kind="{kind}" x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}: {} {}</title></rect>"#,
                        px(x0),
                        px(top),
                        px(x * scale),
                        px(bar_h),
                        esc(&l.fill),
                        esc(system),
                        format_args!("{x:.4}"),
                        esc(&v.unit)
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r#"<rect class="undefined" data-kind="{kind}" x="{}" y="{}" width="{}" height="{}" fill="url(#hatch)"><title>{}: undefined</title></rect>"#,
                        px(x0),
                        px(top),
                        px(w),
                        px(bar_h),
                        esc(system)
                    );
                }
            }
            if let Some(p) = v.prev_value {
                let x = at(p);
                let _ = writeln!(
                    s,
                    r#"<line class="prev" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
                    px(x),
                    px(top),
                    px(x),
                    px(bottom),
                    esc(&l.marker)
                );
            }
            if let Some(t) = v.target {
                let x = at(t);
                let _ = writeln!(
                    s,
                    r#"<line class="target" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2" stroke-dasharray="{}"/>"#,
                    px(x),
                    px(top),
                    px(x),
                    px(bottom),
                    esc(&l.marker),
                    esc(&l.dash)
                );
            }
            if let Some(b) = v.benchmark {
                let x = at(b);
                let _ = writeln!(
                    s,
                    r#"<line class="benchmark" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
                    px(x),
                    px(bottom),
                    px(x),
                    px(bottom + l.tick_length.min(l.bar_inset)),
                    esc(&l.marker)
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let ly = body_top + body_height + l.font_size * 1.5;
    let mut lx = l.margin + l.label_width;
    let sample = 14.0;
    let legend = [
        ("prev", "previous period"),
        ("target", "target"),
        ("benchmark", "benchmark"),
        ("undefined", "undefined"),
    ];
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (class, text) in legend {
        match class {
            "prev" | "target" => {
                let dash = if class == "target" {
                    format!(r#" stroke-dasharray="{}""#, esc(&l.dash))
                } else {
                    String::new()
                };
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"{dash}/>"#,
                    px(lx + sample / 2.0),
                    px(ly - l.font_size),
                    px(lx + sample / 2.0),
                    px(ly),
                    esc(&l.marker)
                );
            }
            "benchmark" => {
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
                    px(lx + sample / 2.0),
                    px(ly - l.tick_length.min(l.font_size)),
                    px(lx + sample / 2.0),
                    px(ly),
                    esc(&l.marker)
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="url(#hatch)"/>"#,
                    px(lx),
                    px(ly - l.font_size),
                    px(sample),
                    px(l.font_size)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            px(lx + sample + 4.0),
            px(ly),
            esc(text)
        );
        lx += sample + 4.0 + text.len() as f64 * l.font_size * 0.6 + 16.0;
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
