//! Criticality measures `phi_j(x) = f(x) - min_{|d| <= 1} T_j(x, d)` for
//! univariate functions, where `T_j` is the degree-`j` Taylor expansion at `x`.
//!
//! Both measures are independent of `f(x)` itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Second order Taylor data of a function at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorData {
    pub x: f64,
    pub f0: f64,
    pub g: f64,
    pub h: f64,
}

impl TaylorData {
    pub fn new(x: f64, f0: f64, g: f64, h: f64) -> Self {
        Self { x, f0, g, h }
    }

    /// `T_1(x, d) = f0 + g d`.
    pub fn linear(&self, d: f64) -> f64 {
        self.f0 + self.g * d
    }

    /// `T_2(x, d) = f0 + g d + h d^2 / 2`.
    pub fn quadratic(&self, d: f64) -> f64 {
        self.f0 + self.g * d + 0.5 * self.h * d * d
    }

    /// Decrease `T_2(x, 0) - T_2(x, d)`, computed without `f0`.
    pub fn quadratic_decrease(&self, d: f64) -> f64 {
        -(self.g * d + 0.5 * self.h * d * d)
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {v}")))
    }
}

/// First order measure: `|g|`.
pub fn phi1(g: f64) -> Result<f64> {
    finite("g", g)?;
    Ok(g.abs())
}

/// Second order measure, from the candidate set `{-1, +1, -g/h}` (the last
/// one only when `h > 0` and it lies in `[-1, 1]`).
pub fn phi2(taylor: &TaylorData) -> Result<f64> {
    finite("g", taylor.g)?;
    finite("h", taylor.h)?;
    let mut best = 0.0f64;
    for d in [-1.0, 1.0] {
        best = best.max(taylor.quadratic_decrease(d));
    }
    if taylor.h > 0.0 {
        let d = -taylor.g / taylor.h;
        if d.abs() <= 1.0 {
            best = best.max(taylor.quadratic_decrease(d));
        }
    }
    Ok(best)
}

/// Measure of order `j` (1 or 2).
pub fn phi(taylor: &TaylorData, j: u8) -> Result<f64> {
    match j {
        1 => phi1(taylor.g),
        2 => phi2(taylor),
        _ => Err(Error::InvalidInput(format!(
            "criticality order {j} not supported"
        ))),
    }
}

/// Brute-force measure over a uniform grid of `grid_points` on `[-1, 1]`.
///
/// Independent of the closed forms above; intended as a test oracle.
pub fn phi_grid_oracle(taylor: &TaylorData, j: u8, grid_points: usize) -> f64 {
    assert!(grid_points >= 3, "grid needs at least 3 points");
    assert!(j == 1 || j == 2, "order must be 1 or 2");
    let n = grid_points - 1;
    let mut min = f64::INFINITY;
    for i in 0..=n {
        let d = -1.0 + 2.0 * i as f64 / n as f64;
        let t = if j == 1 {
            taylor.linear(d)
        } else {
            taylor.quadratic(d)
        };
        min = min.min(t);
    }
    taylor.f0 - min
}
