//! The AR2 adaptive cubic regularization method for univariate functions.
//!
//! Each iteration minimizes the model
//!
//! ```text
//! m(s) = f0 + g s + h s^2 / 2 + (sigma / 6) |s|^3
//! ```
//!
//! exactly, by enumerating the stationary points on each half-line.

use serde::{Deserialize, Serialize};

use crate::config::{Ar2Config, Order, SigmaPolicy, StepDomain};
use crate::criticality::{phi1, phi2, TaylorData};
use crate::error::{Error, Result};
use crate::function::{C2Function, Counted};
use crate::trace::{IterRecord, RunTrace, Termination};

/// Relative tolerance under which two candidate model decreases are a tie.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelData {
    pub f0: f64,
    pub g: f64,
    pub h: f64,
    pub sigma: f64,
}

impl ModelData {
    pub fn new(f0: f64, g: f64, h: f64, sigma: f64) -> Self {
        Self { f0, g, h, sigma }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.f0 - self.decrease(s)
    }

    /// `m(0) - m(s)`, evaluated without `f0` to avoid cancellation.
    pub fn decrease(&self, s: f64) -> f64 {
        -(self.g * s + 0.5 * self.h * s * s + self.sigma / 6.0 * s.abs().powi(3))
    }

    /// `m'(s) = g + h s + (sigma / 2) s |s|`.
    pub fn gradient(&self, s: f64) -> f64 {
        self.g + self.h * s + 0.5 * self.sigma * s * s.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub step: f64,
    pub model_value: f64,
    pub model_decrease: f64,
    pub stationary_points: Vec<f64>,
}

/// Real roots of `a s^2 + b s + c = 0` with `a > 0`, using the
/// cancellation-free pairing `q = -(b + sign(b) sqrt(disc)) / 2`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if b == 0.0 {
        let r = (-c / a).sqrt();
        return vec![r, -r];
    }
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc.sqrt());
    if q == 0.0 {
        // b = c = 0: double root at the origin
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Positive stationary points of the cubic model, `g + h s + (sigma/2) s^2 = 0`.
pub(crate) fn positive_stationary_points(g: f64, h: f64, sigma: f64) -> Vec<f64> {
    quadratic_roots(0.5 * sigma, h, g)
        .into_iter()
        .filter(|&s| s > 0.0)
        .collect()
}

/// Exact global minimizer of the cubic model over `domain`.
///
/// Ties (decreases equal within [`TIE_RTOL`] relative) go to the larger step.
pub fn minimize_model(model: &ModelData, domain: StepDomain) -> Result<SubproblemSolution> {
    if !(model.sigma > 0.0) || !model.sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "regularization weight must be positive, got {}",
            model.sigma
        )));
    }
    for (name, v) in [("f0", model.f0), ("g", model.g), ("h", model.h)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("model {name} = {v}")));
        }
    }
    let half_sigma = 0.5 * model.sigma;
    let mut stationary: Vec<f64> = Vec::new();
    // s >= 0: g + h s + (sigma/2) s^2 = 0
    stationary.extend(positive_stationary_points(model.g, model.h, model.sigma));
    if domain == StepDomain::FullLine {
        // s <= 0: g + h s - (sigma/2) s^2 = 0
        stationary.extend(
            quadratic_roots(half_sigma, -model.h, -model.g)
                .into_iter()
                .filter(|&s| s < 0.0),
        );
    }
    if model.g == 0.0 {
        stationary.push(0.0);
    }
    stationary.sort_by(f64::total_cmp);
    stationary.dedup();

    let mut best_step = 0.0f64;
    let mut best_dec = 0.0f64;
    for &s in &stationary {
        let dec = model.decrease(s);
        let scale = dec.abs().max(best_dec.abs());
        let tie = (dec - best_dec).abs() <= TIE_RTOL * scale;
        if (tie && s > best_step) || (!tie && dec > best_dec) {
            best_step = s;
            best_dec = dec;
        }
    }
    Ok(SubproblemSolution {
        step: best_step,
        model_value: model.value(best_step),
        model_decrease: best_dec,
        stationary_points: stationary,
    })
}

fn next_sigma(config: &Ar2Config, sigma: f64, rho: f64) -> f64 {
    if rho >= config.eta2 {
        match config.sigma_policy {
            SigmaPolicy::Keep => sigma,
            SigmaPolicy::Shrink => config.sigma_min.max(config.gamma1 * sigma),
        }
    } else if rho >= config.eta1 {
        sigma
    } else {
        config.gamma2 * sigma
    }
}

fn ensure_finite(iteration: usize, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Aborted {
            iteration,
            reason: format!("{what} is {v}"),
        })
    }
}

/// Runs AR2 from `x0` until an approximate critical point of order `config.q`
/// is found or `config.max_iters` iterations have been made.
///
/// Evaluations follow the algorithm literally: `f(x0)` once, then per
/// iteration `f'` (and `f''` when needed for termination) at each new iterate,
/// `f''` for the model if not yet available, and `f` at the trial point.
pub fn run_ar2<F: C2Function>(f: &F, x0: f64, config: &Ar2Config) -> Result<RunTrace> {
    config.validate()?;
    let f = Counted::new(f);
    let q = config.q;
    let thresholds = [
        config.eps(1) * (1.0 - config.threshold_rtol),
        config.eps(2) / 2.0 * (1.0 - config.threshold_rtol),
    ];

    let mut x = ensure_finite(0, "x0", x0)?;
    let mut fx = ensure_finite(0, "f(x0)", f.value(x))?;
    let mut sigma = config.sigma0;
    let mut records = Vec::new();
    let mut k = 0usize;
    // derivative data at the current iterate, refreshed after each accepted step
    let mut derivs: Option<(f64, Option<f64>, f64, Option<f64>)> = None;

    let terminated_by = loop {
        let (g, mut h, p1, mut p2) = match derivs {
            Some(d) => d,
            None => {
                // Step 1
                let g = ensure_finite(k, "f'(x)", f.deriv1(x))?;
                let p1 = phi1(g)?;
                let mut h = None;
                let mut p2 = None;
                let mut proceed = p1 >= thresholds[0];
                if !proceed && q == Order::Two {
                    let hv = ensure_finite(k, "f''(x)", f.deriv2(x))?;
                    let v = phi2(&TaylorData::new(x, fx, g, hv))?;
                    h = Some(hv);
                    p2 = Some(v);
                    proceed = v >= thresholds[1];
                }
                if !proceed {
                    derivs = Some((g, h, p1, p2));
                    break Termination::Criticality;
                }
                (g, h, p1, p2)
            }
        };
        if k >= config.max_iters {
            derivs = Some((g, h, p1, p2));
            break Termination::MaxIters;
        }

        // Step 2
        let hv = match h {
            Some(v) => v,
            None => {
                let v = ensure_finite(k, "f''(x)", f.deriv2(x))?;
                h = Some(v);
                v
            }
        };
        let taylor = TaylorData::new(x, fx, g, hv);
        if p2.is_none() && (q == Order::Two || config.record_phi2) {
            p2 = Some(phi2(&taylor)?);
        }
        let model = ModelData::new(fx, g, hv, sigma);
        let sol = minimize_model(&model, config.step_domain)?;
        let step = sol.step;
        let predicted = taylor.quadratic_decrease(step);
        if !(predicted > 0.0) {
            return Err(Error::Aborted {
                iteration: k,
                reason: format!(
                    "no predicted decrease at a non-critical point (step = {step}, T(0) - T(s) = {predicted})"
                ),
            });
        }

        // Step 3
        let trial = ensure_finite(k, "trial point", x + step)?;
        let f_trial = ensure_finite(k, "f(x + s)", f.value(trial))?;
        let rho = ensure_finite(k, "rho", (fx - f_trial) / predicted)?;
        let accepted = rho >= config.eta1;
        records.push(IterRecord {
            k,
            x,
            f: fx,
            g,
            h: hv,
            sigma,
            step,
            rho,
            phi1: p1,
            phi2: if q == Order::Two || config.record_phi2 {
                p2
            } else {
                None
            },
            accepted,
        });

        // Step 4
        sigma = next_sigma(config, sigma, rho);
        if accepted {
            x = trial;
            fx = f_trial;
            derivs = None;
        } else {
            derivs = Some((g, h, p1, p2));
        }
        k += 1;
    };

    let (_, _, final_phi1, final_phi2) = derivs.expect("derivatives available at termination");
    Ok(RunTrace {
        termination_index: k,
        terminated_by,
        counters: f.counts(),
        records,
        final_x: x,
        final_f: fx,
        final_phi1,
        final_phi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::make_analytic_function;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_min(m: &ModelData, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| m.value(lo + (hi - lo) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn linear_slope_step() {
        let m = ModelData::new(0.0, -0.25, 0.0, 2.0);
        let sol = minimize_model(&m, StepDomain::FullLine).unwrap();
        assert_relative_eq!(sol.step, 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            sol.model_decrease,
            0.25 * 0.5 - 0.125 / 3.0,
            max_relative = 1e-14
        );
        assert!(sol.stationary_points.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn convex_model_stays_put() {
        let sol =
            minimize_model(&ModelData::new(0.0, 0.0, 1.0, 2.0), StepDomain::FullLine).unwrap();
        assert_eq!(sol.step, 0.0);
        assert_eq!(sol.model_decrease, 0.0);
    }

    #[test]
    fn symmetric_tie_goes_positive() {
        let m = ModelData::new(0.0, 0.0, -0.25, 2.0);
        let sol = minimize_model(&m, StepDomain::FullLine).unwrap();
        assert_eq!(sol.step, 0.25);
        let expected = -0.5 * 0.25 * 0.0625 + 0.015625 / 3.0;
        assert_relative_eq!(sol.model_value, expected, max_relative = 1e-14);
        assert_relative_eq!(m.value(-0.25), m.value(0.25), max_relative = 1e-14);
        assert!(sol.stationary_points.contains(&-0.25));
    }

    #[test]
    fn half_line_picks_larger_root() {
        // q = 2 data with eps = 0.25, alpha = 1, beta_q = 0.25
        let m = ModelData::new(0.0, 0.015625, -0.3125, 2.0);
        let sol = minimize_model(&m, StepDomain::Nonnegative).unwrap();
        assert_relative_eq!(sol.step, 0.25, max_relative = 1e-15);
        assert_eq!(sol.stationary_points.len(), 2);
        assert_relative_eq!(sol.stationary_points[0], 0.0625, max_relative = 1e-15);
        // the full line prefers the negative branch
        let full = minimize_model(&m, StepDomain::FullLine).unwrap();
        assert!(full.step < 0.0 && full.model_value < sol.model_value);
    }

    #[test]
    fn half_line_origin_wins_for_large_beta() {
        // beta_q = 0.5: m(alpha eps) - f0 = (alpha eps)^3 (beta/2 - 1/6) > 0
        let m = ModelData::new(0.0, 0.03125, -0.375, 2.0);
        let sol = minimize_model(&m, StepDomain::Nonnegative).unwrap();
        assert_eq!(sol.step, 0.0);
        let pos: Vec<f64> = sol
            .stationary_points
            .iter()
            .copied()
            .filter(|&s| s > 0.0)
            .collect();
        assert_eq!(pos.len(), 2);
        assert_relative_eq!(pos[0], 0.125, max_relative = 1e-15);
        assert_relative_eq!(pos[1], 0.25, max_relative = 1e-15);
        assert_relative_eq!(
            m.value(0.25),
            0.015625 * (0.25 - 1.0 / 6.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_bad_sigma() {
        for s in [0.0, -1.0, f64::NAN] {
            assert!(
                minimize_model(&ModelData::new(0.0, 1.0, 0.0, s), StepDomain::FullLine).is_err()
            );
        }
    }

    #[test]
    fn quadratic_sanity_run() {
        let f = make_analytic_function(|x| x * x, |x| 2.0 * x, |_| 2.0);
        let mut cfg = Ar2Config::new(Order::One, 1e-6)
            .unwrap()
            .with_sigma0(2.0)
            .unwrap();
        cfg.eta1 = 0.1;
        cfg.eta2 = 0.9;
        let trace = run_ar2(&f, 10.0, &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::Criticality);
        assert!(trace.termination_index >= 1);
        assert!(f.deriv1(trace.final_x).abs() < 1e-6);
        assert_eq!(trace.termination_index, trace.records.len());
        for w in trace.records.windows(2) {
            if w[0].accepted {
                assert!(w[1].f < w[0].f);
            }
        }
    }

    #[test]
    fn zero_function_stops_immediately() {
        let f = make_analytic_function(|_| 0.0, |_| 0.0, |_| 0.0);
        for eps in [1e-8, 0.25, 1.0] {
            let cfg = Ar2Config::new(Order::Two, eps).unwrap();
            let trace = run_ar2(&f, 3.0, &cfg).unwrap();
            assert_eq!(trace.termination_index, 0);
            assert!(trace.records.is_empty());
            assert_eq!(trace.final_phi2, Some(0.0));
        }
    }

    #[test]
    fn unsuccessful_iterations_grow_sigma() {
        // Nearly flat curvature far from the minimizer: long steps overshoot
        // until sigma has grown.
        let f = make_analytic_function(
            |x: f64| (1.0 + x * x).sqrt(),
            |x: f64| x / (1.0 + x * x).sqrt(),
            |x: f64| (1.0 + x * x).powf(-1.5),
        );
        let mut cfg = Ar2Config::new(Order::Two, 1e-8)
            .unwrap()
            .with_sigma0(1e-3)
            .unwrap();
        cfg.sigma_policy = SigmaPolicy::Shrink;
        let trace = run_ar2(&f, 3.0, &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::Criticality);
        let mut sigma = cfg.sigma0;
        for r in &trace.records {
            assert_eq!(r.sigma, sigma);
            assert_eq!(r.accepted, r.rho >= cfg.eta1);
            let next = next_sigma(&cfg, sigma, r.rho);
            if r.rho >= cfg.eta2 {
                assert!(next >= cfg.sigma_min.max(cfg.gamma1 * sigma) && next <= sigma);
            } else if r.rho >= cfg.eta1 {
                assert!(next >= sigma && next <= cfg.gamma2 * sigma);
            } else {
                assert!(next >= cfg.gamma2 * sigma && next <= cfg.gamma3 * sigma);
            }
            assert!(next >= cfg.sigma_min);
            sigma = next;
        }
        assert!(trace.records.iter().any(|r| !r.accepted));
        // rejected trials keep x
        for w in trace.records.windows(2) {
            if !w[0].accepted {
                assert_eq!(w[0].x, w[1].x);
            }
        }
    }

    #[test]
    fn max_iters_is_respected() {
        let f = make_analytic_function(|x: f64| -x, |_| -1.0, |_| 0.0);
        let mut cfg = Ar2Config::new(Order::One, 0.5).unwrap();
        cfg.max_iters = 7;
        let trace = run_ar2(&f, 0.0, &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::MaxIters);
        assert_eq!(trace.records.len(), 7);
    }

    #[test]
    fn non_finite_aborts() {
        let f = make_analytic_function(|x: f64| x.ln(), |x: f64| 1.0 / x, |x: f64| -1.0 / (x * x));
        let cfg = Ar2Config::new(Order::One, 1e-3).unwrap();
        let err = run_ar2(&f, 0.5, &cfg).unwrap_err();
        assert!(matches!(err, Error::Aborted { .. }), "{err}");
    }

    #[test]
    fn keep_policy_holds_sigma_on_successful_runs() {
        let f = make_analytic_function(
            |x: f64| (1.0 + x * x).ln(),
            |x: f64| 2.0 * x / (1.0 + x * x),
            |x: f64| 2.0 * (1.0 - x * x) / (1.0 + x * x).powi(2),
        );
        let cfg = Ar2Config::new(Order::Two, 1e-9)
            .unwrap()
            .with_sigma0(2.0)
            .unwrap();
        let trace = run_ar2(&f, 0.8, &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::Criticality);
        assert!(trace.records.iter().all(|r| r.accepted));
        assert!(trace.records.iter().all(|r| r.sigma == 2.0));
    }

    proptest! {
        #[test]
        fn minimizer_is_stationary_and_global(
            g in -10.0f64..10.0, h in -10.0f64..10.0, sigma in 0.01f64..10.0,
        ) {
            let m = ModelData::new(0.0, g, h, sigma);
            let sol = minimize_model(&m, StepDomain::FullLine).unwrap();
            if sol.step != 0.0 {
                prop_assert!(m.gradient(sol.step).abs() <= 1e-10 * g.abs().max(1.0));
            }
            let span = 2.0 * (g.abs() + h.abs() + sigma);
            prop_assert!(sol.model_value <= grid_min(&m, -span, span, 20_000) + 1e-8);
            prop_assert!(sol.model_decrease >= 0.0);
        }

        #[test]
        fn nonnegative_domain_is_respected(g in -5.0f64..5.0, h in -5.0f64..5.0, sigma in 0.1f64..5.0) {
            let m = ModelData::new(1.0, g, h, sigma);
            let sol = minimize_model(&m, StepDomain::Nonnegative).unwrap();
            prop_assert!(sol.step >= 0.0);
            let span = 2.0 * (g.abs() + h.abs() + sigma);
            prop_assert!(sol.model_value <= grid_min(&m, 0.0, span, 20_000) + 1e-8);
        }
    }
}
