use std::fmt;
use std::sync::Arc;

use super::{Law, Mean};

/// A survival function given as a callable, with the metadata the
/// convolution routines need.
#[derive(Clone)]
pub struct TailFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support_start: f64,
    total: f64,
    mean: Mean,
    kinks: Vec<f64>,
}

impl fmt::Debug for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailFunction")
            .field("support_start", &self.support_start)
            .field("total", &self.total)
            .field("mean", &self.mean)
            .finish_non_exhaustive()
    }
}

impl TailFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support_start: f64, mean: Mean) -> Self {
        Self {
            f: Arc::new(f),
            support_start,
            total: 1.0,
            mean,
            kinks: Vec::new(),
        }
    }

    pub fn from_law(law: Arc<dyn Law>) -> Self {
        let mut kinks = law.breakpoints();
        kinks.extend(law.atoms().into_iter().map(|a| a.0));
        Self {
            support_start: law.support_start(),
            total: law.total_mass(),
            mean: law.mean(),
            kinks,
            f: Arc::new(move |x| law.tail(x)),
        }
    }

    pub fn with_total(mut self, total: f64) -> Self {
        self.total = total;
        self
    }

    /// Points where the survival function is not smooth.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.total
        } else {
            (self.f)(x)
        }
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

impl Law for TailFunction {
    fn tail(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn mean(&self) -> Mean {
        self.mean
    }

    fn support_start(&self) -> f64 {
        self.support_start
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.kinks.clone()
    }

    fn total_mass(&self) -> f64 {
        self.total
    }
}
