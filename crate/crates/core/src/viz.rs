//! SVG figures: decomposition force plots and line charts.
//!
//! Output depends only on the plot description, so equal inputs give identical bytes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::types::Decomposition;

const POS: &str = "#ff0051";
const NEG: &str = "#008bfb";
const MARGIN: f64 = 40.0;
const FONT: &str = "font-family=\"sans-serif\"";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceFeature {
    pub name: String,
    /// Feature value as printed in the label.
    pub value: String,
    pub phi_int: f64,
    pub phi_dep: f64,
}

impl ForceFeature {
    pub fn phi(&self) -> f64 {
        self.phi_int + self.phi_dep
    }
}

/// Extra tick axis above the bar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondaryAxis {
    /// Main axis in log-odds, secondary axis in probability.
    Probability,
}

impl SecondaryAxis {
    fn apply(self, v: f64) -> f64 {
        match self {
            SecondaryAxis::Probability => sigmoid(v),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SecondaryAxis::Probability => "probability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcePlotSpec {
    pub base: f64,
    pub features: Vec<ForceFeature>,
    pub axis_label: String,
    pub secondary: Option<SecondaryAxis>,
    pub width: f64,
    pub height: f64,
}

impl ForcePlotSpec {
    /// Split-part plot of a decomposition. `values` are the printed feature values.
    pub fn from_decomposition(d: &Decomposition, names: &[String], values: &[f64]) -> Self {
        let features = names
            .iter()
            .zip(values)
            .zip(d.phi_int.iter().zip(&d.phi_dep))
            .map(|((name, v), (&phi_int, &phi_dep))| ForceFeature {
                name: name.clone(),
                value: format_value(*v),
                phi_int,
                phi_dep,
            })
            .collect();
        ForcePlotSpec {
            base: d.base,
            features,
            axis_label: String::from("model output"),
            secondary: None,
            width: 900.0,
            height: 220.0,
        }
    }

    /// Classic plot with every attribution drawn as a direct effect.
    pub fn classic(base: f64, names: &[String], values: &[f64], phi: &[f64]) -> Self {
        let features = names
            .iter()
            .zip(values)
            .zip(phi)
            .map(|((name, v), &p)| ForceFeature { name: name.clone(), value: format_value(*v), phi_int: p, phi_dep: 0.0 })
            .collect();
        ForcePlotSpec {
            base,
            features,
            axis_label: String::from("model output"),
            secondary: None,
            width: 900.0,
            height: 220.0,
        }
    }

    pub fn tip(&self) -> f64 {
        self.base + self.features.iter().map(ForceFeature::phi).sum::<f64>()
    }
}

/// Compact printing of feature values: integers without decimals.
pub fn format_value(v: f64) -> String {
    if libm::trunc(v) == v && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{:.3}", v);
        String::from(s.trim_end_matches('0').trim_end_matches('.'))
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn check_finite(values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Render(String::from("non-finite value")))
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    left: f64,
    right: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, left: f64, right: f64) -> Self {
        let (lo, hi) = if hi - lo > 1e-12 {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            (lo - 1.0, hi + 1.0)
        };
        Scale { lo, hi, left, right }
    }

    fn map(&self, v: f64) -> f64 {
        self.left + (v - self.lo) / (self.hi - self.lo) * (self.right - self.left)
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        (0..count).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (count - 1) as f64).collect()
    }
}

struct Segment<'a> {
    feature: &'a ForceFeature,
    dependent: bool,
    value: f64,
}

/// Horizontal force plot. Each feature gets a solid segment for its
/// interventional part and a hatched one for its dependent part.
pub fn render_force_plot(spec: &ForcePlotSpec) -> Result<String> {
    if spec.features.is_empty() {
        return Err(Error::Render(String::from("force plot needs at least one feature")));
    }
    check_finite(
        [spec.base, spec.width, spec.height]
            .into_iter()
            .chain(spec.features.iter().flat_map(|f| [f.phi_int, f.phi_dep])),
    )?;

    let mut order: Vec<&ForceFeature> = spec.features.iter().collect();
    order.sort_by(|a, b| b.phi().abs().total_cmp(&a.phi().abs()));
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for f in &order {
        for (dependent, value) in [(false, f.phi_int), (true, f.phi_dep)] {
            let seg = Segment { feature: f, dependent, value };
            if value > 0.0 {
                positive.push(seg);
            } else if value < 0.0 {
                negative.push(seg);
            }
        }
    }
    let push_up: f64 = positive.iter().map(|s| s.value).sum();
    let push_down: f64 = negative.iter().map(|s| -s.value).sum();
    let tip = spec.tip();
    let lo = (spec.base - push_down).min(spec.base).min(tip);
    let hi = (spec.base + push_up).max(spec.base).max(tip);
    let scale = Scale::new(lo, hi, MARGIN, spec.width - MARGIN);

    let bar_y = spec.height * 0.45;
    let bar_h = 24.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">",
        w = spec.width,
        h = spec.height
    );
    svg.push_str("<defs>\n");
    for (id, color) in [("hatch-pos", POS), ("hatch-neg", NEG)] {
        let _ = writeln!(
            svg,
            "<pattern id=\"{id}\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\" patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"white\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"{color}\" stroke-width=\"3\"/></pattern>"
        );
    }
    svg.push_str("</defs>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    axis(&mut svg, &scale, bar_y + bar_h + 40.0, &spec.axis_label, |v| v, false);
    if let Some(t) = spec.secondary {
        axis(&mut svg, &scale, bar_y - 40.0, t.label(), |v| t.apply(v), true);
    }

    // positive parts run left from the tip, negative parts run right, largest first
    let mut edge = tip;
    for seg in &positive {
        let start = edge - seg.value;
        segment(&mut svg, &scale, seg, start, edge, bar_y, bar_h, POS, "hatch-pos");
        edge = start;
    }
    let mut edge = tip;
    for seg in &negative {
        let end = edge - seg.value;
        segment(&mut svg, &scale, seg, edge, end, bar_y, bar_h, NEG, "hatch-neg");
        edge = end;
    }

    let bx = scale.map(spec.base);
    let _ = writeln!(
        svg,
        "<line class=\"base\" x1=\"{bx:.3}\" y1=\"{:.3}\" x2=\"{bx:.3}\" y2=\"{:.3}\" stroke=\"#666\" stroke-dasharray=\"3,3\"/>",
        bar_y - 10.0,
        bar_y + bar_h + 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{bx:.3}\" y=\"{:.3}\" {FONT} font-size=\"11\" text-anchor=\"middle\" fill=\"#666\">base value = {:.3}</text>",
        bar_y - 14.0,
        spec.base
    );
    let tx = scale.map(tip);
    let _ = writeln!(
        svg,
        "<path class=\"tip\" data-x=\"{tx:.3}\" d=\"M {tx:.3} {:.3} L {:.3} {:.3} L {:.3} {:.3} Z\" fill=\"black\"/>",
        bar_y - 2.0,
        tx - 6.0,
        bar_y - 12.0,
        tx + 6.0,
        bar_y - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{tx:.3}\" y=\"{:.3}\" {FONT} font-size=\"13\" font-weight=\"bold\" text-anchor=\"middle\">f(x) = {:.3}</text>",
        bar_y - 26.0,
        tip
    );
    if positive.iter().chain(&negative).any(|s| s.dependent) {
        let legend_y = spec.height - 12.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN:.0}\" y=\"{:.3}\" width=\"14\" height=\"10\" fill=\"#999\"/><text x=\"{:.0}\" y=\"{legend_y:.3}\" {FONT} font-size=\"11\">interventional</text>",
            legend_y - 9.0,
            MARGIN + 18.0
        );
        let _ = writeln!(
            svg,
            "<rect x=\"{:.0}\" y=\"{:.3}\" width=\"14\" height=\"10\" fill=\"url(#hatch-pos)\" stroke=\"#999\"/><text x=\"{:.0}\" y=\"{legend_y:.3}\" {FONT} font-size=\"11\">dependent</text>",
            MARGIN + 120.0,
            legend_y - 9.0,
            MARGIN + 138.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[allow(clippy::too_many_arguments)]
fn segment(svg: &mut String, scale: &Scale, seg: &Segment<'_>, from: f64, to: f64, y: f64, h: f64, color: &str, hatch: &str) {
    let (x0, x1) = (scale.map(from), scale.map(to));
    let (left, width) = (x0.min(x1), (x1 - x0).abs());
    let (class, fill) = if seg.dependent { ("dep", format!("url(#{hatch})")) } else { ("int", String::from(color)) };
    let _ = writeln!(
        svg,
        "<rect class=\"{class}\" data-feature=\"{}\" x=\"{left:.3}\" y=\"{y:.3}\" width=\"{width:.3}\" height=\"{h:.3}\" fill=\"{fill}\" stroke=\"{color}\" stroke-width=\"0.5\"/>",
        esc(&seg.feature.name)
    );
    if !seg.dependent || seg.feature.phi_int == 0.0 {
        let _ = writeln!(
            svg,
            "<text x=\"{:.3}\" y=\"{:.3}\" {FONT} font-size=\"11\" text-anchor=\"middle\" fill=\"{color}\">{} = {}</text>",
            left + width / 2.0,
            y + h + 14.0,
            esc(&seg.feature.name),
            esc(&seg.feature.value)
        );
    }
}

fn axis(svg: &mut String, scale: &Scale, y: f64, label: &str, transform: impl Fn(f64) -> f64, above: bool) {
    let _ = writeln!(
        svg,
        "<line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{:.3}\" y2=\"{y:.3}\" stroke=\"#333\"/>",
        scale.left, scale.right
    );
    let dy = if above { -6.0 } else { 6.0 };
    let ty = if above { y - 9.0 } else { y + 18.0 };
    for t in scale.ticks(7) {
        let x = scale.map(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.3}\" y1=\"{y:.3}\" x2=\"{x:.3}\" y2=\"{:.3}\" stroke=\"#333\"/><text x=\"{x:.3}\" y=\"{ty:.3}\" {FONT} font-size=\"10\" text-anchor=\"middle\">{:.3}</text>",
            y + dy,
            transform(t)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.3}\" y=\"{ty:.3}\" {FONT} font-size=\"10\" text-anchor=\"end\" fill=\"#666\">{}</text>",
        scale.left - 4.0,
        esc(label)
    );
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSeries {
    pub label: String,
    pub y: Vec<f64>,
    /// Half-width of a shaded band around the line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<Vec<f64>>,
    /// Individual traces drawn see-through in the series colour.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlays: Vec<Vec<f64>>,
}

impl LineSeries {
    pub fn new(label: impl Into<String>, y: Vec<f64>) -> Self {
        LineSeries { label: label.into(), y, std: None, overlays: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub series: Vec<LineSeries>,
    pub width: f64,
    pub height: f64,
}

impl LineChartSpec {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>, x: Vec<f64>) -> Self {
        LineChartSpec {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            series: Vec::new(),
            width: 640.0,
            height: 420.0,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const DASHES: [&str; 6] = ["none", "8,4", "2,3", "10,3,2,3", "4,4", "1,5"];

pub fn render_line_chart(spec: &LineChartSpec) -> Result<String> {
    if spec.series.is_empty() || spec.x.is_empty() {
        return Err(Error::Render(String::from("line chart needs a series")));
    }
    let n = spec.x.len();
    for s in &spec.series {
        let bad = s.y.len() != n
            || s.std.as_ref().is_some_and(|d| d.len() != n)
            || s.overlays.iter().any(|o| o.len() != n);
        if bad {
            return Err(Error::Render(format!("series '{}' is not on the shared x grid", s.label)));
        }
    }
    check_finite(spec.x.iter().copied().chain([spec.width, spec.height]))?;
    let mut ys = Vec::new();
    for s in &spec.series {
        ys.extend_from_slice(&s.y);
        for o in &s.overlays {
            ys.extend_from_slice(o);
        }
        if let Some(d) = &s.std {
            ys.extend(s.y.iter().zip(d).flat_map(|(m, e)| [m - e, m + e]));
        }
    }
    check_finite(ys.iter().copied())?;

    let left = 70.0;
    let top = 40.0;
    let plot_bottom = spec.height - 60.0;
    let legend_w = 170.0;
    let plot_right = spec.width - legend_w;
    let xmin = spec.x.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = spec.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xs = Scale::new(xmin, xmax, left, plot_right);
    let yscale = Scale::new(ymin, ymax, plot_bottom, top);
    let point = |x: f64, y: f64| format!("{:.3},{:.3}", xs.map(x), yscale.map(y));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">",
        w = spec.width,
        h = spec.height
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        svg,
        "<text x=\"{:.3}\" y=\"24\" {FONT} font-size=\"14\" text-anchor=\"middle\">{}</text>",
        (left + plot_right) / 2.0,
        esc(&spec.title)
    );
    let _ = writeln!(
        svg,
        "<path d=\"M {left:.3} {top:.3} L {left:.3} {plot_bottom:.3} L {plot_right:.3} {plot_bottom:.3}\" fill=\"none\" stroke=\"#333\"/>"
    );
    for t in xs.ticks(6) {
        let x = xs.map(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.3}\" y1=\"{plot_bottom:.3}\" x2=\"{x:.3}\" y2=\"{:.3}\" stroke=\"#333\"/><text x=\"{x:.3}\" y=\"{:.3}\" {FONT} font-size=\"10\" text-anchor=\"middle\">{:.2}</text>",
            plot_bottom + 5.0,
            plot_bottom + 18.0,
            t
        );
    }
    for t in yscale.ticks(6) {
        let y = yscale.map(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{left:.3}\" y2=\"{y:.3}\" stroke=\"#333\"/><text x=\"{:.3}\" y=\"{:.3}\" {FONT} font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            left - 5.0,
            left - 8.0,
            y + 3.0,
            t
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.3}\" y=\"{:.3}\" {FONT} font-size=\"12\" text-anchor=\"middle\">{}</text>",
        (left + plot_right) / 2.0,
        spec.height - 20.0,
        esc(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.3}\" {FONT} font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.3})\">{}</text>",
        (top + plot_bottom) / 2.0,
        (top + plot_bottom) / 2.0,
        esc(&spec.y_label)
    );

    for (k, s) in spec.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some(d) = &s.std {
            let upper = spec.x.iter().zip(&s.y).zip(d).map(|((x, m), e)| point(*x, m + e));
            let lower = spec.x.iter().zip(&s.y).zip(d).rev().map(|((x, m), e)| point(*x, m - e));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                svg,
                "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
                pts.join(" ")
            );
        }
    }
    for (k, s) in spec.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for o in &s.overlays {
            let pts: Vec<String> = spec.x.iter().zip(o).map(|(x, y)| point(*x, *y)).collect();
            let _ = writeln!(
                svg,
                "<polyline class=\"overlay\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.8\" stroke-opacity=\"0.3\"/>",
                pts.join(" ")
            );
        }
    }
    for (k, s) in spec.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = DASHES[k % DASHES.len()];
        let pts: Vec<String> = spec.x.iter().zip(&s.y).map(|(x, y)| point(*x, *y)).collect();
        let _ = writeln!(
            svg,
            "<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" stroke-dasharray=\"{dash}\"/>",
            pts.join(" ")
        );
        let ly = top + 10.0 + 20.0 * k as f64;
        let lx = plot_right + 15.0;
        let _ = writeln!(
            svg,
            "<g class=\"legend\"><line x1=\"{lx:.3}\" y1=\"{ly:.3}\" x2=\"{:.3}\" y2=\"{ly:.3}\" stroke=\"{color}\" stroke-width=\"2\" stroke-dasharray=\"{dash}\"/><text x=\"{:.3}\" y=\"{:.3}\" {FONT} font-size=\"11\">{}</text></g>",
            lx + 28.0,
            lx + 34.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
