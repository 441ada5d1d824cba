//! Normalised jump laws `nu_(c)` living on `(c, inf)`.

use std::fmt;
use std::sync::Arc;

use super::{mean_from_tail, AnalyticLaw, Extrapolation, Law, Mean};
use crate::error::{check_positive, Error, Result};
use crate::quad::{self, QuadOptions};

/// Slowly varying factor `l(x)` of a regularly varying density.
#[derive(Clone)]
pub enum SlowlyVarying {
    Constant(f64),
    /// `scale * (ln x)^power`, defined for `x > 1`.
    LogPower { scale: f64, power: f64 },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlowlyVarying::Constant(k) => write!(f, "Constant({k})"),
            SlowlyVarying::LogPower { scale, power } => write!(f, "{scale}*(ln x)^{power}"),
            SlowlyVarying::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl SlowlyVarying {
    pub fn one() -> Self {
        SlowlyVarying::Constant(1.0)
    }

    pub fn log_power(power: f64) -> Self {
        SlowlyVarying::LogPower { scale: 1.0, power }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SlowlyVarying::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SlowlyVarying::Constant(k) => *k,
            SlowlyVarying::LogPower { scale, power } => scale * x.ln().powf(*power),
            SlowlyVarying::Custom { f, .. } => f(x),
        }
    }

    /// `l(e^v)`, evaluated without forming `e^v` where possible.
    pub fn eval_log(&self, v: f64) -> f64 {
        match self {
            SlowlyVarying::Constant(k) => *k,
            SlowlyVarying::LogPower { scale, power } => scale * v.powf(*power),
            SlowlyVarying::Custom { f, .. } => f(v.exp()),
        }
    }

    /// Whether `int^inf l(u)/u du` converges, when decidable in closed form.
    pub fn karamata_converges(&self) -> Option<bool> {
        match self {
            SlowlyVarying::Constant(k) => Some(*k == 0.0),
            SlowlyVarying::LogPower { power, .. } => Some(*power < -1.0),
            SlowlyVarying::Custom { .. } => None,
        }
    }

    /// Smallest `x` where the factor is defined.
    pub fn domain_start(&self) -> f64 {
        match self {
            SlowlyVarying::LogPower { .. } => 1.0,
            _ => 0.0,
        }
    }
}

/// Normalised jump law with density proportional to `x^(-alpha-1) l(x)` on `(c, inf)`.
#[derive(Debug, Clone)]
pub struct RegularlyVaryingJump {
    alpha: f64,
    l: SlowlyVarying,
    cutoff: f64,
    // int_c^inf u^(-alpha-1) l(u) du
    norm: f64,
}

impl RegularlyVaryingJump {
    pub fn new(alpha: f64, l: SlowlyVarying, cutoff: f64) -> Result<Self> {
        check_positive("cutoff", cutoff)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "index must be finite and nonnegative",
            });
        }
        if cutoff <= l.domain_start() {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: cutoff,
                reason: "cutoff must exceed the domain start of the slowly varying factor",
            });
        }
        if alpha == 0.0 && l.karamata_converges() == Some(false) {
            return Err(Error::Precondition(
                "index 0 with a non-integrable slowly varying factor is not normalisable".into(),
            ));
        }
        let mut jump = Self {
            alpha,
            l,
            cutoff,
            norm: 1.0,
        };
        jump.norm = jump.raw_tail(cutoff)?;
        check_positive("normalising constant", jump.norm)?;
        Ok(jump)
    }

    /// Pareto type I jump: `tail(x) = (x / c)^(-alpha)` for `x >= c`.
    pub fn power_law(alpha: f64, cutoff: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Self::new(alpha, SlowlyVarying::one(), cutoff)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn slowly_varying(&self) -> &SlowlyVarying {
        &self.l
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `int_c^inf u^(-alpha-1) l(u) du`; the Lévy density is `delta / norm` times the shape.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Unnormalised tail `int_x^inf u^(-alpha-1) l(u) du`, `x >= c`.
    fn raw_tail(&self, x: f64) -> Result<f64> {
        match self.l {
            SlowlyVarying::Constant(k) if self.alpha > 0.0 => Ok(k * x.powf(-self.alpha) / self.alpha),
            SlowlyVarying::LogPower { scale, power } if self.alpha == 0.0 => {
                Ok(scale * x.ln().powf(power + 1.0) / (-power - 1.0))
            }
            _ => {
                let v0 = x.ln();
                let g = |v: f64| (-self.alpha * v).exp() * self.l.eval_log(v);
                quad::integrate_to_infinity(g, v0, &QuadOptions::rel(1e-12)).map(|e| e.value)
            }
        }
    }

    fn closed_form(&self) -> bool {
        matches!(
            (&self.l, self.alpha > 0.0),
            (SlowlyVarying::Constant(_), true) | (SlowlyVarying::LogPower { .. }, false)
        )
    }
}

impl Law for RegularlyVaryingJump {
    fn tail(&self, x: f64) -> f64 {
        if x <= self.cutoff {
            return 1.0;
        }
        self.log_tail(x).exp()
    }

    fn log_tail(&self, x: f64) -> f64 {
        if x <= self.cutoff {
            return 0.0;
        }
        match self.l {
            SlowlyVarying::Constant(_) if self.alpha > 0.0 => -self.alpha * (x / self.cutoff).ln(),
            SlowlyVarying::LogPower { power, .. } if self.alpha == 0.0 => {
                (power + 1.0) * (x.ln() / self.cutoff.ln()).ln()
            }
            _ => (self.raw_tail(x).unwrap_or(f64::NAN) / self.norm).ln(),
        }
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        let y = x + c;
        if y <= self.cutoff {
            return 0.0;
        }
        if x < self.cutoff {
            return 1.0 - self.tail(y);
        }
        if self.closed_form() {
            let shrink = match self.l {
                SlowlyVarying::Constant(_) => -self.alpha * (c / x).ln_1p(),
                SlowlyVarying::LogPower { power, .. } => (power + 1.0) * ((c / x).ln_1p() / x.ln()).ln_1p(),
                SlowlyVarying::Custom { .. } => unreachable!(),
            };
            return self.tail(x) * -shrink.exp_m1();
        }
        let f = |u: f64| self.pdf(u).unwrap_or(0.0);
        quad::integrate(f, x, y, &QuadOptions::rel(1e-12))
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        if x <= self.cutoff {
            return Some(0.0);
        }
        Some((-(self.alpha + 1.0) * x.ln()).exp() * self.l.eval(x) / self.norm)
    }

    fn mean(&self) -> Mean {
        let c = self.cutoff;
        match self.l {
            SlowlyVarying::Constant(_) if self.alpha > 1.0 => Mean::Finite(c * self.alpha / (self.alpha - 1.0)),
            SlowlyVarying::Constant(_) => Mean::Infinite,
            _ if self.alpha < 1.0 => Mean::Infinite,
            SlowlyVarying::LogPower { scale, power } if self.alpha == 1.0 => {
                if power < -1.0 {
                    Mean::Finite(scale * c.ln().powf(power + 1.0) / (-power - 1.0) / self.norm)
                } else {
                    Mean::Infinite
                }
            }
            _ => mean_from_tail(|u| self.tail(u), c, &[2.0 * c, 10.0 * c]),
        }
    }

    fn support_start(&self) -> f64 {
        self.cutoff
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.cutoff]
    }

    fn extrapolation_hint(&self) -> Extrapolation {
        if self.alpha > 0.0 {
            Extrapolation::Power { alpha: self.alpha }
        } else {
            Extrapolation::None
        }
    }
}

/// An analytic law conditioned on `(c, inf)`.
#[derive(Debug, Clone, Copy)]
pub struct RestrictedLaw {
    law: AnalyticLaw,
    cutoff: f64,
    log_tail_c: f64,
}

impl RestrictedLaw {
    pub fn new(law: AnalyticLaw, cutoff: f64) -> Result<Self> {
        let law = law.validate()?;
        if !(cutoff >= 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: cutoff,
                reason: "cutoff must be finite and nonnegative",
            });
        }
        let log_tail_c = law.log_tail(cutoff);
        if !log_tail_c.is_finite() {
            return Err(Error::Underflow { x: cutoff });
        }
        Ok(Self {
            law,
            cutoff,
            log_tail_c,
        })
    }

    pub fn base(&self) -> AnalyticLaw {
        self.law
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl Law for RestrictedLaw {
    fn tail(&self, x: f64) -> f64 {
        self.log_tail(x).exp()
    }

    fn log_tail(&self, x: f64) -> f64 {
        if x <= self.cutoff {
            0.0
        } else {
            self.law.log_tail(x) - self.log_tail_c
        }
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        let y = x + c;
        if y <= self.cutoff || c <= 0.0 {
            return 0.0;
        }
        if x < self.cutoff {
            return 1.0 - self.tail(y);
        }
        self.law.interval_mass(x, c) / self.log_tail_c.exp()
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        if x <= self.cutoff {
            return Some(0.0);
        }
        self.law.pdf(x).map(|d| d / self.log_tail_c.exp())
    }

    fn mean(&self) -> Mean {
        match self.law.mean() {
            Mean::Infinite => Mean::Infinite,
            Mean::Finite(_) => mean_from_tail(|u| self.tail(u), self.cutoff, &[self.cutoff + 1.0, self.cutoff + 10.0]),
        }
    }

    fn support_start(&self) -> f64 {
        self.cutoff
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.cutoff]
    }

    fn extrapolation_hint(&self) -> Extrapolation {
        self.law.extrapolation_hint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_tail_mean_and_local_mass() {
        let j = RegularlyVaryingJump::power_law(2.0, 1.0).unwrap();
        assert_eq!(j.tail(0.5), 1.0);
        assert!((j.tail(2.0) - 0.25).abs() < 1e-15);
        assert_eq!(j.mean(), Mean::Finite(2.0));
        assert!((j.interval_mass(2.0, 1.0) - (0.25 - 1.0 / 9.0)).abs() < 1e-15);
        assert!((j.interval_mass(0.5, 1.0) - (1.0 - 1.0 / 2.25)).abs() < 1e-15);
        assert!((j.norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_power_index_zero() {
        // q(x) = x^-1 (ln x)^-2 on (e, inf): tail = 1 / ln x, norm = 1
        let j = RegularlyVaryingJump::new(0.0, SlowlyVarying::log_power(-2.0), std::f64::consts::E).unwrap();
        assert!((j.norm() - 1.0).abs() < 1e-14);
        assert!((j.tail(1e8) - 1.0 / 1e8f64.ln()).abs() < 1e-15);
        let diff = j.tail(1e3) - j.tail(1e3 + 1.0);
        assert!((j.interval_mass(1e3, 1.0) / diff - 1.0).abs() < 1e-9);
        assert_eq!(j.mean(), Mean::Infinite);
        assert!(RegularlyVaryingJump::new(0.0, SlowlyVarying::one(), 2.0).is_err());
    }

    #[test]
    fn custom_factor_matches_closed_form() {
        let closed = RegularlyVaryingJump::power_law(0.25, 1.0).unwrap();
        let custom = RegularlyVaryingJump::new(0.25, SlowlyVarying::custom("one", |_| 1.0), 1.0).unwrap();
        for &x in &[1.5, 10.0, 1e4] {
            assert!((custom.tail(x) / closed.tail(x) - 1.0).abs() < 1e-10);
            assert!((custom.interval_mass(x, 1.0) / closed.interval_mass(x, 1.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn restricted_pareto() {
        let r = RestrictedLaw::new(AnalyticLaw::pareto(2.0).unwrap(), 1.0).unwrap();
        assert!((r.tail(3.0) - 0.25).abs() < 1e-15);
        // mean = 1 + int_1^inf (2/(1+u))^2 du = 1 + 2
        assert!((r.mean().finite().unwrap() - 3.0).abs() < 1e-8);
    }
}
