//! Univariate twice continuously differentiable functions and evaluation
//! accounting.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// A univariate function exposing its value and first two derivatives.
///
/// Implementations must be deterministic: the same input bit pattern always
/// produces the same output.
pub trait C2Function {
    fn value(&self, x: f64) -> f64;
    fn deriv1(&self, x: f64) -> f64;
    fn deriv2(&self, x: f64) -> f64;
}

impl<F: C2Function + ?Sized> C2Function for &F {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn deriv1(&self, x: f64) -> f64 {
        (**self).deriv1(x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        (**self).deriv2(x)
    }
}

/// Plain snapshot of an [`EvalCounter`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub n_value: u64,
    pub n_deriv1: u64,
    pub n_deriv2: u64,
}

impl EvalCounts {
    pub fn total(&self) -> u64 {
        self.n_value + self.n_deriv1 + self.n_deriv2
    }
}

/// Monotone evaluation counters, safe to bump through a shared reference.
#[derive(Debug, Default)]
pub struct EvalCounter {
    n_value: AtomicU64,
    n_deriv1: AtomicU64,
    n_deriv2: AtomicU64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            n_value: self.n_value.load(Ordering::Relaxed),
            n_deriv1: self.n_deriv1.load(Ordering::Relaxed),
            n_deriv2: self.n_deriv2.load(Ordering::Relaxed),
        }
    }

    fn bump(slot: &AtomicU64) {
        slot.fetch_add(1, Ordering::Relaxed);
    }
}

/// Wraps a [`C2Function`] so that every evaluator call is counted exactly once.
#[derive(Debug)]
pub struct Counted<F> {
    inner: F,
    counter: EvalCounter,
}

impl<F: C2Function> Counted<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            counter: EvalCounter::new(),
        }
    }

    pub fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    pub fn counts(&self) -> EvalCounts {
        self.counter.snapshot()
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: C2Function> C2Function for Counted<F> {
    fn value(&self, x: f64) -> f64 {
        EvalCounter::bump(&self.counter.n_value);
        self.inner.value(x)
    }
    fn deriv1(&self, x: f64) -> f64 {
        EvalCounter::bump(&self.counter.n_deriv1);
        self.inner.deriv1(x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        EvalCounter::bump(&self.counter.n_deriv2);
        self.inner.deriv2(x)
    }
}

/// A function given by three closures for the value and the derivatives.
pub struct Analytic<V, D1, D2> {
    value: V,
    deriv1: D1,
    deriv2: D2,
}

impl<V, D1, D2> C2Function for Analytic<V, D1, D2>
where
    V: Fn(f64) -> f64,
    D1: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn deriv1(&self, x: f64) -> f64 {
        (self.deriv1)(x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        (self.deriv2)(x)
    }
}

/// Builds a counted [`C2Function`] from closures for `f`, `f'` and `f''`.
pub fn make_analytic_function<V, D1, D2>(
    value: V,
    deriv1: D1,
    deriv2: D2,
) -> Counted<Analytic<V, D1, D2>>
where
    V: Fn(f64) -> f64,
    D1: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    Counted::new(Analytic {
        value,
        deriv1,
        deriv2,
    })
}
