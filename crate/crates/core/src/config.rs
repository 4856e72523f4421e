//! AR2 algorithm constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Criticality order `q` sought by the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    One,
    Two,
}

impl Order {
    pub fn q(self) -> u8 {
        match self {
            Order::One => 1,
            Order::Two => 2,
        }
    }

    /// The complementary order `p = 3 - q`.
    pub fn p(self) -> u8 {
        3 - self.q()
    }

    pub fn qf(self) -> f64 {
        f64::from(self.q())
    }

    pub fn pf(self) -> f64 {
        f64::from(self.p())
    }
}

impl TryFrom<u8> for Order {
    type Error = String;

    fn try_from(q: u8) -> std::result::Result<Self, Self::Error> {
        match q {
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            other => Err(format!("criticality order must be 1 or 2, got {other}")),
        }
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        o.q()
    }
}

/// Which endpoint of the very-successful interval `[max(sigma_min, gamma1*sigma), sigma]`
/// is selected when `rho >= eta2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPolicy {
    Keep,
    Shrink,
}

/// Domain over which the cubic model is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDomain {
    FullLine,
    Nonnegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar2Config {
    pub q: Order,
    pub eps1: f64,
    pub eps2: f64,
    pub sigma0: f64,
    /// Inexact-subproblem constant. Stored for completeness; the subproblem is
    /// always solved exactly.
    pub theta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub sigma_min: f64,
    pub sigma_policy: SigmaPolicy,
    pub step_domain: StepDomain,
    pub max_iters: usize,
    /// Relative slack on the termination threshold: iteration continues while
    /// `phi_j >= (eps_j / j) * (1 - threshold_rtol)` for some `j <= q`.
    pub threshold_rtol: f64,
    /// Record `phi_2` even when `q = 1`.
    pub record_phi2: bool,
}

impl Ar2Config {
    pub const DEFAULT_MAX_ITERS: usize = 10_000_000;

    /// Configuration with `eps1 = eps2 = eps` and conventional constants.
    pub fn new(q: Order, eps: f64) -> Result<Self> {
        let cfg = Self {
            q,
            eps1: eps,
            eps2: eps,
            sigma0: 1.0,
            theta: 0.01,
            eta1: 0.1,
            eta2: 0.9,
            gamma1: 0.5,
            gamma2: 2.0,
            gamma3: 4.0,
            sigma_min: 1e-8,
            sigma_policy: SigmaPolicy::Keep,
            step_domain: StepDomain::FullLine,
            max_iters: Self::DEFAULT_MAX_ITERS,
            threshold_rtol: 0.0,
            record_phi2: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Result<Self> {
        self.sigma0 = sigma0;
        if self.sigma_min > sigma0 {
            self.sigma_min = sigma0;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: impl Into<String>) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.into()))
            }
        }
        check(
            self.eps1 > 0.0 && self.eps1 <= 1.0,
            format!("eps1 = {} not in (0, 1]", self.eps1),
        )?;
        check(
            self.eps2 > 0.0 && self.eps2 <= 1.0,
            format!("eps2 = {} not in (0, 1]", self.eps2),
        )?;
        check(
            self.sigma0 > 0.0 && self.sigma0.is_finite(),
            format!("sigma0 = {} must be positive", self.sigma0),
        )?;
        check(
            self.theta > 0.0 && self.theta < 1.0,
            format!("theta = {} not in (0, 1)", self.theta),
        )?;
        check(
            self.eta1 > 0.0 && self.eta1 <= self.eta2 && self.eta2 < 1.0,
            format!(
                "need 0 < eta1 <= eta2 < 1, got eta1 = {}, eta2 = {}",
                self.eta1, self.eta2
            ),
        )?;
        check(
            self.gamma1 > 0.0
                && self.gamma1 < 1.0
                && 1.0 < self.gamma2
                && self.gamma2 < self.gamma3,
            format!(
                "need 0 < gamma1 < 1 < gamma2 < gamma3, got {}, {}, {}",
                self.gamma1, self.gamma2, self.gamma3
            ),
        )?;
        check(
            self.sigma_min > 0.0 && self.sigma_min <= self.sigma0,
            format!("sigma_min = {} not in (0, sigma0]", self.sigma_min),
        )?;
        check(
            (0.0..1.0).contains(&self.threshold_rtol),
            format!("threshold_rtol = {} not in [0, 1)", self.threshold_rtol),
        )?;
        Ok(())
    }

    pub fn eps(&self, j: u8) -> f64 {
        if j == 1 {
            self.eps1
        } else {
            self.eps2
        }
    }
}
