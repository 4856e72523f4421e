//! Perturbation schedules and the slow-convergence sequences derived from them.
//!
//! With `p = 3 - q`, a schedule fixes for every `k < k_eps` a scale
//! `alpha_k in [1, 2]`, a derivative perturbation `beta_q,k in [0, 1/2]` (with
//! `beta_p,k = -beta_q,k`) and a value perturbation `|beta0_k| <= (1 - eta1)/4`.
//! The derived data are
//!
//! ```text
//! f^(q)_k = -(1 + beta_q,k) alpha_k eps
//! f^(p)_k = beta_q,k (alpha_k eps)^(q/p)
//! s_k     = (alpha_k eps)^(1/p)
//! f_0     = 3 * 2^(3/p)
//! f_k+1   = T2(x_k, s_k) + beta0_k+1 s_k^3
//! ```
//!
//! so that, with a constant regularization weight of 2, `s_k` is a
//! stationary point of the cubic model and every iteration is successful.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Order;
use crate::error::{Error, Result};

/// Regularization weight held by every iteration of a generated example.
pub const EXAMPLE_SIGMA: f64 = 2.0;

/// Agreement required between a computed model root and `(alpha eps)^(1/p)`.
const STEP_RTOL: f64 = 1e-12;

/// Relative guard applied before the ceiling in [`k_epsilon`].
const CEIL_GUARD: f64 = 1e-12;

/// Iteration count `ceil(eps^(-3/(3-q)))` that a generated example consumes.
pub fn k_epsilon(q: Order, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let raw = eps.powf(-3.0 / q.pf());
    Ok((raw * (1.0 - CEIL_GUARD)).ceil() as usize)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 0.25 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps = {eps} not in (0, 1/4]")))
    }
}

fn check_eta1(eta1: f64) -> Result<()> {
    if eta1 > 0.0 && eta1 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eta1 = {eta1} not in (0, 1)")))
    }
}

/// Largest admissible `|beta0_k|`.
pub fn beta0_bound(eta1: f64) -> f64 {
    (1.0 - eta1) / 4.0
}

/// `3 * 2^(3/p)`, the starting value and the upper end of the value range.
pub fn f0_start(q: Order) -> f64 {
    3.0 * 2f64.powf(3.0 / q.pf())
}

/// `(alpha eps)^(1/p)`.
pub fn step_length(q: Order, alpha_eps: f64) -> f64 {
    match q {
        Order::One => alpha_eps.sqrt(),
        Order::Two => alpha_eps,
    }
}

/// `1/q + beta_q/q + beta_p/p` with `beta_p = -beta_q`.
pub fn decrease_factor(q: Order, beta_q: f64) -> f64 {
    (1.0 + beta_q) / q.qf() - beta_q / q.pf()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `alpha_k = 1`, no perturbation.
    Unperturbed,
    /// `alpha_k = 1 + (k_eps - k) / k_eps`, no perturbation.
    Book,
    /// Uniform draws over the admissible ranges.
    Random,
    /// Constant `alpha` and `beta_q`.
    Constant,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub q: Order,
    pub eps: f64,
    pub k_eps: usize,
    pub alpha: Vec<f64>,
    pub beta_q: Vec<f64>,
    pub beta0: Vec<f64>,
    pub eta1: f64,
}

impl PerturbationSchedule {
    /// Builds and validates a schedule; the vectors must have `k_eps + 1` entries.
    pub fn new(
        q: Order,
        eps: f64,
        eta1: f64,
        alpha: Vec<f64>,
        beta_q: Vec<f64>,
        beta0: Vec<f64>,
    ) -> Result<Self> {
        let sched = Self {
            q,
            eps,
            k_eps: k_epsilon(q, eps)?,
            alpha,
            beta_q,
            beta0,
            eta1,
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        check_eta1(self.eta1)?;
        let k_eps = k_epsilon(self.q, self.eps)?;
        if self.k_eps != k_eps {
            return Err(Error::Schedule(format!(
                "k_eps = {} but ceil(eps^(-3/p)) = {k_eps}",
                self.k_eps
            )));
        }
        let n = k_eps + 1;
        for (name, v) in [
            ("alpha", &self.alpha),
            ("beta_q", &self.beta_q),
            ("beta0", &self.beta0),
        ] {
            if v.len() != n {
                return Err(Error::Schedule(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
        }
        check_ranges(
            &self.alpha[..k_eps],
            &self.beta_q[..k_eps],
            &self.beta0,
            self.eta1,
        )?;
        if self.alpha[k_eps] != 0.0 || self.beta_q[k_eps] != 0.0 {
            return Err(Error::Schedule(format!(
                "terminal entries must vanish, got alpha = {}, beta_q = {}",
                self.alpha[k_eps], self.beta_q[k_eps]
            )));
        }
        Ok(())
    }

    /// `beta_p,k = -beta_q,k`.
    pub fn beta_p(&self, k: usize) -> f64 {
        -self.beta_q[k]
    }
}

fn check_ranges(alpha: &[f64], beta_q: &[f64], beta0: &[f64], eta1: f64) -> Result<()> {
    if let Some((k, a)) = alpha
        .iter()
        .enumerate()
        .find(|(_, a)| !(1.0..=2.0).contains(*a))
    {
        return Err(Error::Schedule(format!("alpha[{k}] = {a} not in [1, 2]")));
    }
    if let Some((k, b)) = beta_q
        .iter()
        .enumerate()
        .find(|(_, b)| !(0.0..=0.5).contains(*b))
    {
        return Err(Error::Schedule(format!(
            "beta_q[{k}] = {b} not in [0, 1/2]"
        )));
    }
    if beta0.first().is_some_and(|&b| b != 0.0) {
        return Err(Error::Schedule(format!(
            "beta0[0] = {} must be 0",
            beta0[0]
        )));
    }
    let bound = beta0_bound(eta1);
    if let Some((k, b)) = beta0.iter().enumerate().find(|(_, b)| !(b.abs() <= bound)) {
        return Err(Error::Schedule(format!(
            "|beta0[{k}]| = {} exceeds {bound}",
            b.abs()
        )));
    }
    Ok(())
}

/// Deterministic schedules: [`ScheduleKind::Unperturbed`] or [`ScheduleKind::Book`].
pub fn default_schedule(
    q: Order,
    eps: f64,
    eta1: f64,
    kind: ScheduleKind,
) -> Result<PerturbationSchedule> {
    let k_eps = k_epsilon(q, eps)?;
    let alpha: Vec<f64> = match kind {
        ScheduleKind::Unperturbed => (0..k_eps).map(|_| 1.0).collect(),
        ScheduleKind::Book => (0..k_eps)
            .map(|k| 1.0 + (k_eps - k) as f64 / k_eps as f64)
            .collect(),
        other => {
            return Err(Error::InvalidInput(format!(
                "{other:?} is not a deterministic default schedule"
            )))
        }
    };
    let zeros = vec![0.0; k_eps + 1];
    PerturbationSchedule::new(q, eps, eta1, terminated(alpha), zeros.clone(), zeros)
}

/// Constant `alpha_k = alpha`, `beta_q,k = beta_q` and no value perturbation.
pub fn constant_schedule(
    q: Order,
    eps: f64,
    eta1: f64,
    alpha: f64,
    beta_q: f64,
) -> Result<PerturbationSchedule> {
    let k_eps = k_epsilon(q, eps)?;
    PerturbationSchedule::new(
        q,
        eps,
        eta1,
        terminated(vec![alpha; k_eps]),
        terminated(vec![beta_q; k_eps]),
        vec![0.0; k_eps + 1],
    )
}

fn terminated(mut v: Vec<f64>) -> Vec<f64> {
    v.push(0.0);
    v
}

/// Uniform random schedule over the admissible ranges, reproducible from `seed`.
///
/// `beta0` is drawn for `k = 1..=k_eps` (the terminal value may be perturbed
/// too); `beta0[0]` is always 0.
pub fn random_schedule(
    q: Order,
    eps: f64,
    eta1: f64,
    seed: u64,
    beta_q_max: f64,
    beta0_enabled: bool,
) -> Result<PerturbationSchedule> {
    if !(0.0..=0.5).contains(&beta_q_max) {
        return Err(Error::InvalidInput(format!(
            "beta_q_max = {beta_q_max} not in [0, 1/2]"
        )));
    }
    check_eta1(eta1)?;
    let k_eps = k_epsilon(q, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = beta0_bound(eta1);
    let mut alpha = Vec::with_capacity(k_eps + 1);
    let mut beta_q = Vec::with_capacity(k_eps + 1);
    let mut beta0 = Vec::with_capacity(k_eps + 1);
    beta0.push(0.0);
    for _ in 0..k_eps {
        alpha.push(rng.gen_range(1.0..=2.0));
        beta_q.push(if beta_q_max > 0.0 {
            rng.gen_range(0.0..=beta_q_max)
        } else {
            0.0
        });
        beta0.push(if beta0_enabled {
            rng.gen_range(-bound..=bound)
        } else {
            0.0
        });
    }
    PerturbationSchedule::new(q, eps, eta1, terminated(alpha), terminated(beta_q), beta0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSequences {
    pub q: Order,
    pub eps: f64,
    pub k_eps: usize,
    /// Whether the data end at `x_{k_eps}` (false for plotting prefixes).
    pub complete: bool,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub sigma: f64,
    /// `max(9/2, 5/2, 3 * 2^(3/p), 1)`.
    pub kappa_f: f64,
    /// `9 * 2^(3/p - 1)`, the closed form printed alongside the maximum above;
    /// the two disagree and both are reported.
    pub kappa_f_closed_form: f64,
}

impl ExampleSequences {
    /// Number of steps stored (`k_eps` for complete sequences).
    pub fn steps(&self) -> usize {
        self.s.len()
    }

    /// Derivative of order `j` at knot `k`.
    pub fn deriv(&self, j: u8, k: usize) -> f64 {
        match j {
            0 => self.f0[k],
            1 => self.f1[k],
            _ => self.f2[k],
        }
    }

    /// `T2(x_k, s_k)` from the stored knot data.
    pub fn taylor_at_step(&self, k: usize) -> f64 {
        let s = self.s[k];
        self.f0[k] + self.f1[k] * s + 0.5 * self.f2[k] * s * s
    }

    /// `T2'(x_k, s_k) = f'_k + f''_k s_k`.
    pub fn taylor_slope_at_step(&self, k: usize) -> f64 {
        self.f1[k] + self.f2[k] * self.s[k]
    }

    /// `T2''(x_k, s_k) = f''_k`.
    pub fn taylor_curvature_at_step(&self, k: usize) -> f64 {
        self.f2[k]
    }
}

/// Derives the example data from a validated schedule.
pub fn build_sequences(schedule: &PerturbationSchedule) -> Result<ExampleSequences> {
    schedule.validate()?;
    let mut seq = assemble(
        schedule.q,
        schedule.eps,
        &schedule.alpha,
        &schedule.beta_q,
        &schedule.beta0,
        schedule.k_eps,
    )?;
    seq.complete = true;
    Ok(seq)
}

/// Builds only the first `steps` steps of a schedule with constant `alpha`
/// and `beta_q` (and no value perturbation), without materializing all
/// `k_eps` knots. Used for plotting when `k_eps` is huge.
pub fn build_prefix(
    q: Order,
    eps: f64,
    eta1: f64,
    alpha: f64,
    beta_q: f64,
    steps: usize,
) -> Result<ExampleSequences> {
    check_eps(eps)?;
    check_eta1(eta1)?;
    let k_eps = k_epsilon(q, eps)?;
    if steps == 0 || steps >= k_eps {
        return Err(Error::InvalidInput(format!(
            "prefix length {steps} must be in [1, k_eps) = [1, {k_eps})"
        )));
    }
    let n = steps + 1;
    let alpha = vec![alpha; n];
    let beta_q = vec![beta_q; n];
    let beta0 = vec![0.0; n];
    check_ranges(&alpha, &beta_q, &beta0, eta1)?;
    let mut seq = assemble(q, eps, &alpha, &beta_q, &beta0, k_eps)?;
    seq.complete = false;
    Ok(seq)
}

fn assemble(
    q: Order,
    eps: f64,
    alpha: &[f64],
    beta_q: &[f64],
    beta0: &[f64],
    k_eps: usize,
) -> Result<ExampleSequences> {
    let n = alpha.len();
    let steps = n - 1;
    let p = q.pf();
    let mut f_q = Vec::with_capacity(n);
    let mut f_p = Vec::with_capacity(n);
    for k in 0..n {
        let ae = alpha[k] * eps;
        f_q.push(-(1.0 + beta_q[k]) * ae);
        f_p.push(beta_q[k] * ae.powf(q.qf() / p));
    }
    let (f1, f2) = match q {
        Order::One => (f_q, f_p),
        Order::Two => (f_p, f_q),
    };
    let s: Vec<f64> = (0..steps)
        .map(|k| rounded_step(step_length(q, alpha[k] * eps), f1[k], f2[k]))
        .collect();
    let mut x = Vec::with_capacity(n);
    x.push(0.0);
    let mut f0 = Vec::with_capacity(n);
    f0.push(f0_start(q));
    for k in 0..steps {
        x.push(x[k] + s[k]);
        let cube = s[k].powi(3);
        let t_next = f0[k] - cube * decrease_factor(q, beta_q[k]);
        f0.push(t_next + beta0[k + 1] * cube);
    }
    let kappa_f = [4.5, 2.5, f0_start(q), 1.0]
        .into_iter()
        .fold(f64::MIN, f64::max);
    let seq = ExampleSequences {
        q,
        eps,
        k_eps,
        complete: false,
        x,
        s,
        f0,
        f1,
        f2,
        sigma: EXAMPLE_SIGMA,
        kappa_f,
        kappa_f_closed_form: 9.0 * 2f64.powf(3.0 / p - 1.0),
    };
    for (name, v) in [
        ("x", &seq.x),
        ("f0", &seq.f0),
        ("f1", &seq.f1),
        ("f2", &seq.f2),
    ] {
        if let Some(k) = v.iter().position(|e| !e.is_finite()) {
            return Err(Error::Construction(format!("{name}[{k}] is not finite")));
        }
    }
    if let Some(k) = seq.f0.windows(2).position(|w| !(w[1] < w[0])) {
        return Err(Error::Construction(format!("f0 not decreasing at k = {k}")));
    }
    Ok(seq)
}

/// The model root nearest `closed_form`, as the solver computes it from the
/// rounded knot data, when it agrees with `closed_form` to `STEP_RTOL`.
///
/// Off-knot rounding errors grow geometrically along the trajectory (the
/// interpolant's third derivative at the knots is large), so the knots must
/// sit exactly where a floating-point AR2 step from the previous knot lands.
fn rounded_step(closed_form: f64, g: f64, h: f64) -> f64 {
    crate::solver::positive_stationary_points(g, h, EXAMPLE_SIGMA)
        .into_iter()
        .min_by(|a, b| (a - closed_form).abs().total_cmp(&(b - closed_form).abs()))
        .filter(|r| (r - closed_form).abs() <= STEP_RTOL * closed_form)
        .unwrap_or(closed_form)
}

/// Model gradient `g + h s_k + (sigma/2) s_k^2` at the prescribed step; zero
/// up to rounding for every admissible schedule.
pub fn model_stationarity_check(seq: &ExampleSequences, k: usize) -> Result<f64> {
    if k >= seq.steps() {
        return Err(Error::InvalidInput(format!(
            "k = {k} has no step (steps = {})",
            seq.steps()
        )));
    }
    let s = seq.s[k];
    Ok(seq.f1[k] + seq.f2[k] * s + 0.5 * seq.sigma * s * s)
}

/// Data from the previous iteration needed by [`theta_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaContext {
    pub q: Order,
    pub eps: f64,
    /// `T2(x_{k-1}, s_{k-1})`.
    pub taylor_prev: f64,
    pub alpha_prev: f64,
}

impl ThetaContext {
    /// Context for knot `k >= 1` of a built sequence.
    pub fn from_sequences(seq: &ExampleSequences, alpha_prev: f64, k: usize) -> Self {
        Self {
            q: seq.q,
            eps: seq.eps,
            taylor_prev: seq.taylor_at_step(k - 1),
            alpha_prev,
        }
    }
}

/// The map `(beta0_k, alpha_k, beta_q,k) -> (f_k, f^(q)_k, f^(p)_k)`.
pub fn theta_map(beta0: f64, alpha: f64, beta_q: f64, ctx: &ThetaContext) -> (f64, f64, f64) {
    let p = ctx.q.pf();
    let ae = alpha * ctx.eps;
    let prev_cube = step_length(ctx.q, ctx.alpha_prev * ctx.eps).powi(3);
    (
        ctx.taylor_prev + beta0 * prev_cube,
        -ae * (1.0 + beta_q),
        ae.powf(ctx.q.qf() / p) * beta_q,
    )
}

/// Closed-form Jacobian determinant of [`theta_map`]:
/// `-(alpha_prev eps)^(3/p) eps^(3/p) alpha^(q/p) [1 + (1 - q/p) beta_q]`.
pub fn theta_jacobian_det(alpha_prev: f64, alpha: f64, beta_q: f64, q: Order, eps: f64) -> f64 {
    let p = q.pf();
    let r = q.qf() / p;
    -(alpha_prev * eps).powf(3.0 / p)
        * eps.powf(3.0 / p)
        * alpha.powf(r)
        * (1.0 + (1.0 - r) * beta_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn k_epsilon_values() {
        assert_eq!(k_epsilon(Order::One, 0.25).unwrap(), 8);
        assert_eq!(k_epsilon(Order::Two, 0.25).unwrap(), 64);
        assert_eq!(k_epsilon(Order::One, 0.1).unwrap(), 32);
        assert_eq!(k_epsilon(Order::One, 0.05).unwrap(), 90);
        assert_eq!(k_epsilon(Order::Two, 0.2).unwrap(), 125);
        assert_eq!(k_epsilon(Order::Two, 0.1).unwrap(), 1000);
        for eps in [0.0, -0.1, 0.3, f64::NAN] {
            assert!(k_epsilon(Order::One, eps).is_err());
        }
    }

    #[test]
    fn default_schedules() {
        let u = default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Unperturbed).unwrap();
        assert_eq!(u.alpha, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        let b = default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Book).unwrap();
        assert_eq!((b.alpha[0], b.alpha[4], b.alpha[8]), (2.0, 1.5, 0.0));
        let b2 = default_schedule(Order::Two, 0.25, 0.1, ScheduleKind::Book).unwrap();
        assert_eq!((b2.alpha[0], b2.alpha[64], b2.alpha.len()), (2.0, 0.0, 65));
        assert!(default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Random).is_err());
    }

    #[test]
    fn schedule_validation_errors() {
        let ok = default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Unperturbed).unwrap();
        let mut bad = ok.clone();
        bad.alpha[3] = 2.5;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.alpha[8] = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.beta_q[2] = 0.6;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.beta0[0] = 0.01;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.beta0[5] = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.k_eps = 9;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_schedule_is_seeded() {
        let a = random_schedule(Order::One, 0.1, 0.1, 42, 0.5, true).unwrap();
        let b = random_schedule(Order::One, 0.1, 0.1, 42, 0.5, true).unwrap();
        assert_eq!(a, b);
        let c = random_schedule(Order::One, 0.1, 0.1, 43, 0.5, true).unwrap();
        assert_ne!(a, c);
        let d = random_schedule(Order::One, 0.25, 0.1, 5, 0.0, false).unwrap();
        assert!(d.beta_q.iter().all(|&b| b == 0.0) && d.beta0.iter().all(|&b| b == 0.0));
        assert!(d.alpha[..8].iter().any(|&a| a != 1.0));
        d.validate().unwrap();
        assert!(random_schedule(Order::One, 0.1, 0.1, 1, 0.7, false).is_err());
    }

    #[test]
    fn unperturbed_first_order_sequences() {
        let sched = default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Unperturbed).unwrap();
        let seq = build_sequences(&sched).unwrap();
        assert_relative_eq!(seq.f0[0], 8.485, max_relative = 1e-4);
        for k in 0..8 {
            assert_eq!(seq.s[k], 0.5);
            assert_eq!(seq.x[k], 0.5 * k as f64);
            assert_eq!(seq.f1[k], -0.25);
            assert_eq!(seq.f2[k], 0.0);
            assert_relative_eq!(seq.f0[k] - seq.f0[k + 1], 0.125, max_relative = 1e-13);
        }
        assert_eq!(seq.x[8], 4.0);
        assert_eq!((seq.f1[8], seq.f2[8]), (0.0, 0.0));
        assert_eq!(seq.sigma, 2.0);
        assert_relative_eq!(seq.kappa_f, 3.0 * 2f64.sqrt() * 2.0, max_relative = 1e-15);
        assert_relative_eq!(
            seq.kappa_f_closed_form,
            9.0 * 2f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn second_order_sequences_with_beta() {
        let sched = constant_schedule(Order::Two, 0.25, 0.1, 1.0, 0.5).unwrap();
        let seq = build_sequences(&sched).unwrap();
        for k in 0..64 {
            assert_eq!(seq.f2[k], -0.375);
            assert_eq!(seq.f1[k], 0.03125);
            assert_eq!(seq.s[k], 0.25);
        }
        assert_eq!((seq.f1[64], seq.f2[64]), (0.0, 0.0));
        assert_eq!(seq.kappa_f, 24.0);
        assert_eq!(seq.kappa_f_closed_form, 36.0);
    }

    #[test]
    fn stationarity_residuals() {
        let u = build_sequences(
            &default_schedule(Order::One, 0.25, 0.1, ScheduleKind::Unperturbed).unwrap(),
        )
        .unwrap();
        for k in 0..8 {
            assert!(model_stationarity_check(&u, k).unwrap().abs() <= 1e-15);
        }
        assert!(model_stationarity_check(&u, 8).is_err());
        let c =
            build_sequences(&constant_schedule(Order::Two, 0.25, 0.1, 1.0, 0.5).unwrap()).unwrap();
        for k in 0..64 {
            assert!(model_stationarity_check(&c, k).unwrap().abs() <= 1e-15);
        }
        let mut alpha = vec![1.0; 8];
        alpha[7] = 2.0;
        alpha.push(0.0);
        let sched =
            PerturbationSchedule::new(Order::One, 0.25, 0.1, alpha, vec![0.0; 9], vec![0.0; 9])
                .unwrap();
        let seq = build_sequences(&sched).unwrap();
        assert!(model_stationarity_check(&seq, 7).unwrap().abs() <= 1e-14);
    }

    #[test]
    fn theta_map_values() {
        let ctx = ThetaContext {
            q: Order::One,
            eps: 0.25,
            taylor_prev: 1.0,
            alpha_prev: 1.0,
        };
        assert_eq!(theta_map(0.1, 1.3, 0.0, &ctx).2, 0.0);
        assert_eq!(theta_map(0.0, 1.0, 0.5, &ctx).1, -0.375);
    }

    #[test]
    fn jacobian_det_values() {
        assert_relative_eq!(
            theta_jacobian_det(1.0, 1.0, 0.0, Order::One, 0.25),
            -0.015625,
            max_relative = 1e-15
        );
        let with_beta = theta_jacobian_det(1.0, 1.0, 0.5, Order::One, 0.25);
        assert_relative_eq!(with_beta, -0.015625 * 1.25, max_relative = 1e-15);
    }

    #[test]
    fn prefix_matches_full_construction() {
        let full =
            build_sequences(&constant_schedule(Order::One, 0.1, 0.1, 2.0, 0.5).unwrap()).unwrap();
        let pre = build_prefix(Order::One, 0.1, 0.1, 2.0, 0.5, 10).unwrap();
        assert!(!pre.complete && full.complete);
        assert_eq!(pre.steps(), 10);
        assert_eq!(&pre.x[..], &full.x[..11]);
        assert_eq!(&pre.f0[..], &full.f0[..11]);
        assert_eq!(&pre.f1[..], &full.f1[..11]);
        assert!(build_prefix(Order::One, 0.1, 0.1, 1.0, 0.0, 32).is_err());
        assert!(build_prefix(Order::One, 1e-5, 0.1, 1.0, 0.0, 15).is_ok());
    }

    fn schedules() -> impl Strategy<Value = PerturbationSchedule> {
        (
            any::<u64>(),
            prop::bool::ANY,
            0.0f64..=0.5,
            prop::sample::select(vec![0.25, 0.2, 0.1]),
        )
            .prop_map(|(seed, b0, bmax, eps)| {
                random_schedule(Order::One, eps, 0.1, seed, bmax, b0).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn random_schedules_are_admissible(seed in any::<u64>(), q in 1u8..=2, b0 in prop::bool::ANY) {
            let q = Order::try_from(q).unwrap();
            let s = random_schedule(q, 0.25, 0.1, seed, 0.5, b0).unwrap();
            s.validate().unwrap();
            prop_assert_eq!(s.alpha.len(), s.k_eps + 1);
        }
    }

    proptest! {
        #[test]
        fn theta_map_reproduces_sequences(sched in schedules()) {
            let seq = build_sequences(&sched).unwrap();
            for k in 1..=sched.k_eps {
                let ctx = ThetaContext::from_sequences(&seq, sched.alpha[k - 1], k);
                let (f0, fq, fp) = theta_map(sched.beta0[k], sched.alpha[k], sched.beta_q[k], &ctx);
                prop_assert!((f0 - seq.f0[k]).abs() <= 1e-14 * seq.f0[k].abs().max(1.0));
                prop_assert_eq!(fq, seq.f1[k]);
                prop_assert_eq!(fp, seq.f2[k]);
            }
        }

        #[test]
        fn decrease_factor_range(beta in 0.0f64..=0.5, q in 1u8..=2) {
            let f = decrease_factor(Order::try_from(q).unwrap(), beta);
            prop_assert!((0.25..=1.25).contains(&f));
        }
    }
}
