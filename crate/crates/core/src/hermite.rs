//! C² piecewise quintic Hermite interpolation.
//!
//! Each segment stores its polynomial in the normalized variable
//! `t = (x - x_lo) / (x_hi - x_lo)`; derivatives in `x` follow by the chain rule.
//! The terms of degree below 3 are evaluated from the raw left-end data, so a
//! knot reproduces its value and derivatives bit for bit. Iterates of AR2 on
//! the generated examples then land exactly on the knots; off-knot rounding
//! errors would otherwise be amplified by the large third derivative there.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example::ExampleSequences;
use crate::function::C2Function;

/// Value, first and second derivative at a point.
pub type Jet = (f64, f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Coefficients of `1, t, ..., t^5`.
    pub coeffs: [f64; 6],
    /// Value, first and second derivative at `x_lo`.
    pub anchor: [f64; 3],
}

impl QuinticSegment {
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    fn t(&self, x: f64) -> f64 {
        (x - self.x_lo) / self.width()
    }

    /// Value and first two derivatives with respect to `x`.
    pub fn jet(&self, x: f64) -> Jet {
        let u = x - self.x_lo;
        let w = self.width();
        let t = u / w;
        let c = &self.coeffs;
        let [f, f1, f2] = self.anchor;
        let v = f + u * (f1 + 0.5 * u * f2) + t * t * t * (c[3] + t * (c[4] + t * c[5]));
        let d1 = f1 + u * f2 + t * t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])) / w;
        let d2 = f2 + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5])) / (w * w);
        (v, d1, d2)
    }

    /// Third derivative with respect to `x`.
    pub fn third_derivative(&self, x: f64) -> f64 {
        let t = self.t(x);
        let c = &self.coeffs;
        (6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5])) / self.width().powi(3)
    }

    /// `max |f'''|` over the segment, from the quadratic `f'''(t)`.
    pub fn max_abs_third_derivative(&self) -> f64 {
        let c = &self.coeffs;
        let (a, b, c0) = (60.0 * c[5], 24.0 * c[4], 6.0 * c[3]);
        let at = |t: f64| (c0 + t * (b + t * a)).abs();
        let mut m = at(0.0).max(at(1.0));
        if a != 0.0 {
            let t = -b / (2.0 * a);
            if (0.0..=1.0).contains(&t) {
                m = m.max(at(t));
            }
        }
        m / self.width().powi(3)
    }
}

/// The unique polynomial of degree at most 5 matching value, first and second
/// derivative at both ends of `[x_lo, x_hi]`.
pub fn quintic_from_hermite(x_lo: f64, x_hi: f64, lo: Jet, hi: Jet) -> Result<QuinticSegment> {
    let w = x_hi - x_lo;
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Interpolation(format!(
            "empty or invalid interval [{x_lo}, {x_hi}]"
        )));
    }
    for v in [lo.0, lo.1, lo.2, hi.0, hi.1, hi.2] {
        if !v.is_finite() {
            return Err(Error::Interpolation(format!(
                "non-finite Hermite data on [{x_lo}, {x_hi}]"
            )));
        }
    }
    // scale derivatives into the t variable
    let (a0, a1, a2) = (lo.0, lo.1 * w, 0.5 * lo.2 * w * w);
    let r0 = hi.0 - (a0 + a1 + a2);
    let r1 = hi.1 * w - (a1 + 2.0 * a2);
    let r2 = hi.2 * w * w - 2.0 * a2;
    // a3 + a4 + a5 = r0, 3a3 + 4a4 + 5a5 = r1, 6a3 + 12a4 + 20a5 = r2
    let a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
    let a4 = -15.0 * r0 + 7.0 * r1 - r2;
    let a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
    Ok(QuinticSegment {
        x_lo,
        x_hi,
        coeffs: [a0, a1, a2, a3, a4, a5],
        anchor: [lo.0, lo.1, lo.2],
    })
}

/// Behaviour beyond the outermost knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extension {
    /// Constant value; C² when the boundary derivatives vanish.
    Constant { value: f64 },
    /// A quintic joining the boundary data to a flat plateau, then the plateau.
    Bridge {
        segment: QuinticSegment,
        plateau: f64,
    },
}

impl Extension {
    fn jet(&self, x: f64) -> Jet {
        match self {
            Extension::Constant { value } => (*value, 0.0, 0.0),
            Extension::Bridge { segment, plateau } => {
                if x < segment.x_lo || x > segment.x_hi {
                    (*plateau, 0.0, 0.0)
                } else {
                    segment.jet(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseQuintic {
    pub knots: Vec<f64>,
    pub segments: Vec<QuinticSegment>,
    pub left_ext: Extension,
    pub right_ext: Extension,
}

impl PiecewiseQuintic {
    /// Interpolates `(values, d1, d2)` at strictly increasing `knots`.
    ///
    /// Left of the first knot a bridge on `[x_0 - 1, x_0]` climbs to a plateau
    /// one unit above the first value. Right of the last knot the function is
    /// constant when both derivatives vanish there, otherwise a bridge on
    /// `[x_n, x_n + 1]` levels off at the last value.
    pub fn from_knot_data(knots: &[f64], values: &[f64], d1: &[f64], d2: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n || d1.len() != n || d2.len() != n {
            return Err(Error::Interpolation(format!(
                "need at least 2 knots with matching data, got {n} knots and {}/{}/{} values",
                values.len(),
                d1.len(),
                d2.len()
            )));
        }
        if let Some(k) = knots.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Interpolation(format!(
                "knots not strictly increasing at index {k}: {} then {}",
                knots[k],
                knots[k + 1]
            )));
        }
        let jet = |k: usize| (values[k], d1[k], d2[k]);
        let segments = (0..n - 1)
            .map(|k| quintic_from_hermite(knots[k], knots[k + 1], jet(k), jet(k + 1)))
            .collect::<Result<Vec<_>>>()?;

        let plateau_left = values[0] + 1.0;
        let left_ext = Extension::Bridge {
            segment: quintic_from_hermite(
                knots[0] - 1.0,
                knots[0],
                (plateau_left, 0.0, 0.0),
                jet(0),
            )?,
            plateau: plateau_left,
        };
        let last = n - 1;
        let right_ext = if d1[last] == 0.0 && d2[last] == 0.0 {
            Extension::Constant {
                value: values[last],
            }
        } else {
            Extension::Bridge {
                segment: quintic_from_hermite(
                    knots[last],
                    knots[last] + 1.0,
                    jet(last),
                    (values[last], 0.0, 0.0),
                )?,
                plateau: values[last],
            }
        };
        Ok(Self {
            knots: knots.to_vec(),
            segments,
            left_ext,
            right_ext,
        })
    }

    /// Value and first two derivatives at `x`.
    pub fn jet(&self, x: f64) -> Jet {
        let first = self.knots[0];
        let last = *self.knots.last().expect("at least two knots");
        if x < first {
            self.left_ext.jet(x)
        } else if x >= last {
            self.right_ext.jet(x)
        } else {
            let idx = self.knots.partition_point(|&k| k <= x) - 1;
            self.segments[idx].jet(x)
        }
    }

    /// Every polynomial piece, extensions included, in left-to-right order.
    pub fn pieces(&self) -> Vec<&QuinticSegment> {
        let mut out = Vec::with_capacity(self.segments.len() + 2);
        if let Extension::Bridge { segment, .. } = &self.left_ext {
            out.push(segment);
        }
        out.extend(self.segments.iter());
        if let Extension::Bridge { segment, .. } = &self.right_ext {
            out.push(segment);
        }
        out
    }

    /// Writes `x,f,f1,f2` rows, `points_per_segment` per interior segment.
    pub fn write_samples_csv<W: Write>(&self, points_per_segment: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f", "f1", "f2"])?;
        for x in self.sample_abscissae(points_per_segment) {
            let (v, d1, d2) = self.jet(x);
            w.write_record([x.to_string(), v.to_string(), d1.to_string(), d2.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Uniform abscissae over the knot range, `points_per_segment` per segment
    /// plus the final knot.
    pub fn sample_abscissae(&self, points_per_segment: usize) -> Vec<f64> {
        let m = points_per_segment.max(1);
        let mut xs = Vec::with_capacity(self.segments.len() * m + 1);
        for seg in &self.segments {
            for i in 0..m {
                xs.push(seg.x_lo + seg.width() * i as f64 / m as f64);
            }
        }
        xs.push(*self.knots.last().expect("at least two knots"));
        xs
    }
}

impl C2Function for PiecewiseQuintic {
    fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }
    fn deriv1(&self, x: f64) -> f64 {
        self.jet(x).1
    }
    fn deriv2(&self, x: f64) -> f64 {
        self.jet(x).2
    }
}

/// The interpolant through the knots `x_k` of a generated example.
pub fn build_interpolant(seq: &ExampleSequences) -> Result<PiecewiseQuintic> {
    PiecewiseQuintic::from_knot_data(&seq.x, &seq.f0, &seq.f1, &seq.f2)
}

/// Upper bound on the Lipschitz constant of `f''` over the knot range: the
/// largest `|f'''|` over the interior segments, in closed form per segment.
/// The extension bridges are not included.
///
/// `samples_per_segment` must be at least 2; it is only validated, since the
/// closed form needs no sampling.
pub fn estimate_hessian_lipschitz(f: &PiecewiseQuintic, samples_per_segment: usize) -> Result<f64> {
    if samples_per_segment < 2 {
        return Err(Error::InvalidInput(format!(
            "samples_per_segment = {samples_per_segment} must be at least 2"
        )));
    }
    Ok(f.segments
        .iter()
        .map(QuinticSegment::max_abs_third_derivative)
        .fold(0.0, f64::max))
}
