//! Prefix curves of generated examples and a plain SVG line plot of them.

use std::fmt::Write as _;
use std::io::Write;

use slowar2::example::{build_prefix, ExampleSequences};
use slowar2::hermite::PiecewiseQuintic;
use slowar2::{Order, Result};

pub const POINTS_PER_SEGMENT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Fat,
    Dashed,
    Thin,
    ThinDashed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub name: &'static str,
    pub alpha: f64,
    pub beta_q: f64,
    pub stroke: Stroke,
}

/// Constant `alpha in {1, 2}` crossed with constant `beta_q in {0, 1/2}`.
pub const FIG1: [CurveSpec; 4] = [
    CurveSpec {
        name: "a1_b0",
        alpha: 1.0,
        beta_q: 0.0,
        stroke: Stroke::Fat,
    },
    CurveSpec {
        name: "a2_b0",
        alpha: 2.0,
        beta_q: 0.0,
        stroke: Stroke::Dashed,
    },
    CurveSpec {
        name: "a1_b05",
        alpha: 1.0,
        beta_q: 0.5,
        stroke: Stroke::Thin,
    },
    CurveSpec {
        name: "a2_b05",
        alpha: 2.0,
        beta_q: 0.5,
        stroke: Stroke::ThinDashed,
    },
];

#[derive(Debug, Clone)]
pub struct Curve {
    pub spec: CurveSpec,
    pub sequences: ExampleSequences,
    pub interpolant: PiecewiseQuintic,
    pub samples: Vec<(f64, f64)>,
}

impl Curve {
    pub fn build(spec: CurveSpec, q: Order, eps: f64, iters: usize) -> Result<Self> {
        let sequences = build_prefix(q, eps, 0.1, spec.alpha, spec.beta_q, iters)?;
        let interpolant = PiecewiseQuintic::from_knot_data(
            &sequences.x,
            &sequences.f0,
            &sequences.f1,
            &sequences.f2,
        )?;
        let samples = interpolant
            .sample_abscissae(POINTS_PER_SEGMENT)
            .into_iter()
            .map(|x| (x, interpolant.jet(x).0))
            .collect();
        Ok(Self {
            spec,
            sequences,
            interpolant,
            samples,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f"])?;
        for (x, f) in &self.samples {
            w.write_record([x.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn fig1_curves(q: Order, eps: f64, iters: usize) -> Result<Vec<Curve>> {
    FIG1.iter()
        .map(|&spec| Curve::build(spec, q, eps, iters))
        .collect()
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

fn stroke_attrs(stroke: Stroke) -> &'static str {
    match stroke {
        Stroke::Fat => r#"stroke-width="3""#,
        Stroke::Dashed => r#"stroke-width="1.5" stroke-dasharray="8 4""#,
        Stroke::Thin => r#"stroke-width="1""#,
        Stroke::ThinDashed => r#"stroke-width="1" stroke-dasharray="4 3""#,
    }
}

const COLORS: [&str; 4] = ["#1f3b73", "#b03a2e", "#1e8449", "#7d3c98"];

/// Line plot of all curves on shared axes.
pub fn render_svg(curves: &[Curve], title: &str) -> String {
    let pts = curves.iter().flat_map(|c| c.samples.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (xs, ys) = (span(x_lo, x_hi), span(y_lo, y_hi));
    let px = |x: f64| MARGIN + (x - x_lo) / xs * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_lo) / ys * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for (v, x, y, anchor) in [
        (x_lo, left, bottom + 20.0, "start"),
        (x_hi, right, bottom + 20.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{v:.6}</text>"#
        );
    }
    for (v, y) in [(y_lo, bottom), (y_hi, top)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.9}</text>"#,
            left - 4.0
        );
    }
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = c
            .samples
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="{}" fill="none" stroke="{color}" {} points="{}"/>"#,
            c.spec.name,
            stroke_attrs(c.spec.stroke),
            points.join(" ")
        );
        let ly = top + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" {}/>"#,
            right - 150.0,
            right - 110.0,
            stroke_attrs(c.spec.stroke)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">alpha={} beta={}</text>"#,
            right - 104.0,
            ly + 4.0,
            c.spec.alpha,
            c.spec.beta_q
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_lengths() {
        let curves = fig1_curves(Order::One, 1e-5, 15).unwrap();
        assert_eq!(curves.len(), 4);
        for c in &curves {
            assert_eq!(c.sequences.x.len(), 16);
            assert_eq!(c.samples.len(), 15 * POINTS_PER_SEGMENT + 1);
        }
    }

    #[test]
    fn too_many_iterations_rejected() {
        // k_eps = 8
        assert!(fig1_curves(Order::One, 0.25, 8).is_err());
        assert!(fig1_curves(Order::One, 0.25, 7).is_ok());
    }

    #[test]
    fn svg_has_one_polyline_per_curve() {
        let curves = fig1_curves(Order::One, 0.01, 5).unwrap();
        let svg = render_svg(&curves, "test");
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains(
            r##"id="a2_b0" fill="none" stroke="#b03a2e" stroke-width="1.5" stroke-dasharray"##
        ));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
