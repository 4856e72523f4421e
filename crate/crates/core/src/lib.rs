//! Adaptive cubic regularization (AR2) for univariate nonconvex minimization,
//! together with a generator for a parametrized family of functions on which
//! AR2 needs exactly `ceil(eps^(-3/(3-q)))` iterations to reach an
//! `eps`-approximate critical point of order `q`.
//!
//! The pieces are layered bottom-up:
//!
//! - [`function`]: the [`C2Function`] interface and evaluation accounting.
//! - [`criticality`]: the order-1 and order-2 criticality measures.
//! - [`solver`]: the exact cubic-model minimizer and the AR2 driver.
//! - [`example`]: perturbation schedules and the derived slow sequences.
//! - [`hermite`]: the C² piecewise quintic interpolant realizing a sequence.
//! - [`verify`]: admissibility checks, run certification and sampling.
//! - [`document`]: the JSON file holding a generated example.
//!
//! ```
//! use slowar2::{example, hermite, solver, verify};
//!
//! let schedule = example::default_schedule(
//!     slowar2::Order::One, 0.25, 0.1, example::ScheduleKind::Unperturbed,
//! ).unwrap();
//! let seq = example::build_sequences(&schedule).unwrap();
//! let f = hermite::build_interpolant(&seq).unwrap();
//! let config = verify::paper_config(&schedule, verify::Mode::Paper).unwrap();
//! let trace = solver::run_ar2(&f, 0.0, &config).unwrap();
//! assert_eq!(trace.termination_index, 8);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod criticality;
pub mod document;
pub mod error;
pub mod example;
pub mod function;
pub mod hermite;
pub mod solver;
pub mod trace;
pub mod verify;

pub use config::{Ar2Config, Order, SigmaPolicy, StepDomain};
pub use error::{Error, Result};
pub use function::{make_analytic_function, C2Function, Counted, EvalCounter, EvalCounts};
pub use trace::{IterRecord, RunTrace, Termination};
