//! Static SVG figures: joint scatter plots and scree bars.
//!
//! Output is a pure function of the input, with coordinates printed at fixed
//! precision, so identical inputs give identical bytes.

use std::fmt::Write;

use cumbia_core::export::prefixed_label;
use cumbia_core::{BiplotCoordinates, Embedding, Error, ObjectKind, Result, Scree};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;

const SAMPLE_COLOUR: &str = "#1f77b4";
const VARIABLE_COLOUR: &str = "#d62728";
const UNGROUPED_COLOUR: &str = "#a0a0a0";
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Coordinates of typed objects, the common input of [`emit_scatter`].
#[derive(Debug, Clone)]
pub struct Scatter {
    kinds: Vec<ObjectKind>,
    labels: Vec<String>,
    coords: Vec<Vec<f64>>,
    dims: usize,
}

impl Scatter {
    pub fn from_embedding(e: &Embedding) -> Self {
        Scatter {
            kinds: e.kinds().to_vec(),
            labels: e.labels().to_vec(),
            coords: (0..e.len())
                .map(|i| (0..e.dims_used()).map(|k| e.coordinate(i, k)).collect())
                .collect(),
            dims: e.dims_used(),
        }
    }

    pub fn from_biplot(b: &BiplotCoordinates) -> Self {
        let mut kinds = vec![ObjectKind::Sample; b.sample_labels.len()];
        kinds.resize(kinds.len() + b.variable_labels.len(), ObjectKind::Variable);
        let rows = |m: &cumbia_core::faer::Mat<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..b.rank).map(|k| m[(i, k)]).collect())
                .collect()
        };
        let mut coords = rows(&b.sample_coords);
        coords.extend(rows(&b.variable_coords));
        Scatter {
            kinds,
            labels: b
                .sample_labels
                .iter()
                .chain(&b.variable_labels)
                .cloned()
                .collect(),
            coords,
            dims: b.rank,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn kinds(&self) -> &[ObjectKind] {
        &self.kinds
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let (lo, hi) = if !lo.is_finite() {
            (-1.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 1.0, hi + 1.0)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        };
        Axis { lo, hi }
    }

    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn px(v: f64) -> String {
    // avoid "-0.00"
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
}

fn frame(out: &mut String, x_label: &str, y_label: &str, x: &Axis, y: &Axis) {
    let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="#333"/>"##
    );
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let gx = LEFT + f * w;
        let gy = TOP + h - f * h;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(gx),
            px(TOP + h + 16.0),
            format_tick(x.lo + f * (x.hi - x.lo))
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            px(LEFT - 6.0),
            px(gy + 4.0),
            format_tick(y.lo + f * (y.hi - y.lo))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        px(LEFT + w / 2.0),
        px(HEIGHT - 15.0),
        escape(x_label)
    );
    let cy = TOP + h / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        px(cy),
        px(cy),
        escape(y_label)
    );
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s.starts_with("-0.000") {
        "0.000".into()
    } else {
        s
    }
}

/// Scatter of components `component_x` and `component_y` (counted from 0).
/// Samples are filled circles and variables crosses; `groups`, when given,
/// colours objects by group in order of first appearance.
pub fn emit_scatter(
    points: &Scatter,
    component_x: usize,
    component_y: usize,
    groups: Option<&[Option<String>]>,
) -> Result<String> {
    for c in [component_x, component_y] {
        if c >= points.dims {
            return Err(Error::Parameter(format!(
                "component {} requested but only {} available",
                c + 1,
                points.dims
            )));
        }
    }
    if let Some(g) = groups {
        if g.len() != points.labels.len() {
            return Err(Error::Parameter(
                "one group entry per object required".into(),
            ));
        }
    }

    let mut legend: Vec<(String, &str)> = Vec::new();
    let colours: Vec<&str> = match groups {
        None => {
            legend.push(("samples".into(), SAMPLE_COLOUR));
            legend.push(("variables".into(), VARIABLE_COLOUR));
            points
                .kinds
                .iter()
                .map(|k| match k {
                    ObjectKind::Sample => SAMPLE_COLOUR,
                    ObjectKind::Variable => VARIABLE_COLOUR,
                })
                .collect()
        }
        Some(groups) => {
            let mut order: Vec<&str> = Vec::new();
            for g in groups.iter().flatten() {
                if !order.contains(&g.as_str()) {
                    order.push(g);
                }
            }
            for (i, g) in order.iter().enumerate() {
                legend.push(((*g).to_string(), PALETTE[i % PALETTE.len()]));
            }
            if groups.iter().any(Option::is_none) {
                legend.push(("ungrouped".into(), UNGROUPED_COLOUR));
            }
            groups
                .iter()
                .map(|g| match g {
                    Some(g) => {
                        let i = order.iter().position(|o| o == g).unwrap_or(0);
                        PALETTE[i % PALETTE.len()]
                    }
                    None => UNGROUPED_COLOUR,
                })
                .collect()
        }
    };

    let x = Axis::fit(points.coords.iter().map(|c| c[component_x]));
    let y = Axis::fit(points.coords.iter().map(|c| c[component_y]));
    let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);

    let mut out = String::new();
    header(&mut out);
    frame(
        &mut out,
        &format!("Component {}", component_x + 1),
        &format!("Component {}", component_y + 1),
        &x,
        &y,
    );
    for (i, c) in points.coords.iter().enumerate() {
        let fx = LEFT + x.unit(c[component_x]) * w;
        let fy = TOP + h - y.unit(c[component_y]) * h;
        let title = escape(&prefixed_label(points.kinds[i], &points.labels[i]));
        let colour = colours[i];
        match points.kinds[i] {
            ObjectKind::Sample => {
                let _ = writeln!(
                    out,
                    r#"<circle class="marker" cx="{}" cy="{}" r="3.5" fill="{colour}"><title>{title}</title></circle>"#,
                    px(fx),
                    px(fy)
                );
            }
            ObjectKind::Variable => {
                let (l, r, t, b) = (px(fx - 3.0), px(fx + 3.0), px(fy - 3.0), px(fy + 3.0));
                let _ = writeln!(
                    out,
                    r#"<path class="marker" d="M{l} {t}L{r} {b}M{l} {b}L{r} {t}" stroke="{colour}" stroke-width="1.2" fill="none"><title>{title}</title></path>"#
                );
            }
        }
    }
    legend_block(&mut out, &legend);
    out.push_str("</svg>\n");
    Ok(out)
}

fn legend_block(out: &mut String, entries: &[(String, &str)]) {
    let x0 = WIDTH - RIGHT + 15.0;
    for (i, (name, colour)) in entries.iter().enumerate() {
        let y0 = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{colour}"/><text x="{}" y="{}">{}</text>"#,
            px(x0),
            px(y0 - 9.0),
            px(x0 + 16.0),
            px(y0),
            escape(name)
        );
    }
}

/// Bar chart of the positive-part fractions of a scree table.
pub fn emit_scree(scree: &Scree) -> String {
    let n = scree.fractions.len().max(1);
    let x = Axis {
        lo: 0.0,
        hi: n as f64,
    };
    let top = scree
        .fractions
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(1e-12);
    let y = Axis {
        lo: 0.0,
        hi: top * 1.05,
    };
    let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out);
    frame(&mut out, "Component", "Fraction", &x, &y);
    let bar = w / n as f64;
    for (k, f) in scree.fractions.iter().enumerate() {
        let height = y.unit(*f) * h;
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{SAMPLE_COLOUR}"><title>component {}: {}</title></rect>"#,
            px(LEFT + k as f64 * bar + 0.1 * bar),
            px(TOP + h - height),
            px(0.8 * bar),
            px(height),
            k + 1,
            f
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cumbia_core::{cumbia, CumbiaConfig, DataMatrix};

    fn four_objects() -> Scatter {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.0]]).unwrap();
        Scatter::from_embedding(&cumbia(&x, &CumbiaConfig::with_k(1), 2).unwrap())
    }

    #[test]
    fn one_marker_per_object() {
        let p = four_objects();
        let svg = emit_scatter(&p, 0, p.dims() - 1, None).unwrap();
        assert_eq!(svg.matches(r#"class="marker""#).count(), 4);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("Component 1"));
    }

    #[test]
    fn out_of_range_component() {
        let p = four_objects();
        assert!(matches!(
            emit_scatter(&p, 0, p.dims(), None),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn groups_share_a_colour() {
        let p = four_objects();
        let groups = vec![Some("a".to_string()), None, Some("a".to_string()), None];
        let svg = emit_scatter(&p, 0, 0, Some(&groups)).unwrap();
        assert_eq!(svg.matches(PALETTE[0]).count(), 3); // two markers and the legend
        assert!(svg.contains("ungrouped"));
    }
}
