//! Probability laws on the half line: closed-form families, jump laws for
//! truncated Lévy measures, discrete laws and gridded (possibly signed) measures.
//!
//! Every law exposes its survival function `tail(x) = law((x, inf))`, interval
//! masses `law((x, x + c])` computed without cancellation where a closed form
//! allows it, an optional density, and its mean.

mod analytic;
mod discrete;
mod grid;
mod jump;
mod spec;
mod tailfn;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use analytic::AnalyticLaw;
pub use discrete::{DiscreteLaw, PointMass};
pub use grid::{discretize, Extrapolation, GriddedMeasure};
pub use jump::{RegularlyVaryingJump, RestrictedLaw, SlowlyVarying};
pub use spec::{parse_jump, parse_law, parse_slowly_varying, JumpSpec};
pub use tailfn::TailFunction;

use crate::error::{check_positive, Error, Result};
use crate::quad::{self, Estimate, QuadOptions};

/// Interval masses below this magnitude are reported as underflow.
pub const UNDERFLOW: f64 = 1e-300;

/// Mean of a law: finite value or an explicit infinite marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mean {
    Finite(f64),
    Infinite,
}

impl Mean {
    pub fn finite(self) -> Option<f64> {
        match self {
            Mean::Finite(m) => Some(m),
            Mean::Infinite => None,
        }
    }

    pub fn require(self) -> Result<f64> {
        self.finite().ok_or(Error::InfiniteMean)
    }
}

/// A finite measure on `[0, inf)` described through its survival function.
pub trait Law: Send + Sync + Debug {
    /// `law((x, inf))`.
    fn tail(&self, x: f64) -> f64;

    fn log_tail(&self, x: f64) -> f64 {
        self.tail(x).ln()
    }

    /// Raw `law((x, x + c])`; may be zero or tiny.
    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        self.tail(x) - self.tail(x + c)
    }

    /// Density of the absolutely continuous part, `None` if the law has none.
    fn pdf(&self, _x: f64) -> Option<f64> {
        None
    }

    fn mean(&self) -> Mean;

    /// Left end of the support of the non-atomic part.
    fn support_start(&self) -> f64 {
        0.0
    }

    /// Point masses as `(position, mass)`.
    fn atoms(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }

    /// Points where the density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn total_mass(&self) -> f64 {
        1.0
    }

    /// Tail shape to use when a discretisation of this law overflows its grid.
    fn extrapolation_hint(&self) -> Extrapolation {
        Extrapolation::None
    }

    /// `int_[a, b] f d(law)`, atoms at the endpoints included. The returned
    /// error estimate may exceed the requested tolerance; callers decide.
    fn integrate(
        &self,
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        extra_breaks: &[f64],
        opts: &QuadOptions,
    ) -> Result<Estimate> {
        integrate_default(self, f, a, b, extra_breaks, opts)
    }

    /// Downcast hook for the grid backend.
    fn as_grid(&self) -> Option<&GriddedMeasure> {
        None
    }
}

/// Atom sum plus adaptive quadrature against the density.
pub(crate) fn integrate_default<L: Law + ?Sized>(
    law: &L,
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    extra_breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Estimate> {
    let mut est = Estimate::default();
    for (pos, mass) in law.atoms() {
        if pos >= a && pos <= b {
            est.value += mass * f(pos);
        }
    }
    let lo = a.max(law.support_start());
    if b > lo {
        if law.pdf(0.5 * (lo + b)).is_none() {
            if law.atoms().is_empty() {
                return Err(Error::Unsupported(
                    "law has neither density nor atoms".into(),
                ));
            }
            return Ok(est);
        }
        let mut pts = vec![lo];
        pts.extend(
            law.breakpoints()
                .into_iter()
                .chain(extra_breaks.iter().copied())
                .filter(|&p| p > lo && p < b),
        );
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let g = |y: f64| match law.pdf(y) {
            Some(d) if d != 0.0 => f(y) * d,
            _ => 0.0,
        };
        est = est + quad::integrate_pts_lenient(g, &pts, opts);
    }
    Ok(est)
}

/// Survival probability `law((x, inf))`.
pub fn tail(law: &dyn Law, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "tail", x });
    }
    Ok(law.tail(x))
}

/// Density at `x`, rejecting points where it is undefined or infinite.
pub fn density(law: &dyn Law, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "density", x });
    }
    match law.pdf(x) {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Domain { what: "density", x }),
    }
}

/// `law((x, x + c])`; values that vanish below [`UNDERFLOW`] are reported as
/// [`Error::Underflow`] so ratio computations can abort.
pub fn local_mass(law: &dyn Law, x: f64, c: f64) -> Result<f64> {
    check_positive("c", c)?;
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "local_mass", x });
    }
    let v = law.interval_mass(x, c);
    if v.is_nan() {
        return Err(Error::Domain { what: "local_mass", x });
    }
    if v.abs() < UNDERFLOW {
        return Err(Error::Underflow { x });
    }
    Ok(v)
}

pub fn mean(law: &dyn Law) -> Mean {
    law.mean()
}

/// Mean by integrating the tail, `int_0^inf tail(u) du`; used for laws
/// without a closed form.
pub(crate) fn mean_from_tail<F: Fn(f64) -> f64>(tail: F, start: f64, breaks: &[f64]) -> Mean {
    let opts = QuadOptions::rel(1e-11).with_max_intervals(4096);
    match quad::integrate_to_infinity_pts(&tail, start, breaks, &opts) {
        Ok(e) if e.value.is_finite() && e.rel_error() < 1e-6 => Mean::Finite(start + e.value),
        _ => Mean::Infinite,
    }
}
