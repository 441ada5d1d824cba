use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Extrapolation, Law, Mean};
use crate::error::{check_positive, Error, Result};
use crate::quad::{self, Estimate, QuadOptions};
use crate::special;

/// Closed-form law on `[0, inf)`.
///
/// * `Lognormal`: standard lognormal, `tail(x) = P(Z > ln x)`.
/// * `Weibull { beta }`: `tail(x) = exp(-x^beta)`, `0 < beta < 1`.
/// * `Pareto { alpha }`: `tail(x) = (1 + x)^(-alpha)`.
/// * `Exponential { rate }`: light-tailed control, `tail(x) = exp(-rate x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AnalyticLaw {
    Lognormal,
    Weibull { beta: f64 },
    Pareto { alpha: f64 },
    Exponential { rate: f64 },
}

impl AnalyticLaw {
    pub fn lognormal() -> Self {
        AnalyticLaw::Lognormal
    }

    pub fn weibull(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "Weibull shape must lie in (0, 1)",
            });
        }
        Ok(AnalyticLaw::Weibull { beta })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Ok(AnalyticLaw::Pareto { alpha })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("rate", rate)?;
        Ok(AnalyticLaw::Exponential { rate })
    }

    pub(crate) fn validate(self) -> Result<Self> {
        match self {
            AnalyticLaw::Lognormal => Ok(self),
            AnalyticLaw::Weibull { beta } => Self::weibull(beta),
            AnalyticLaw::Pareto { alpha } => Self::pareto(alpha),
            AnalyticLaw::Exponential { rate } => Self::exponential(rate),
        }
    }

    /// `ln(tail(x) - tail(x + c))` for `c > 0`, evaluated without forming the difference.
    pub fn log_interval_mass(&self, x: f64, c: f64) -> f64 {
        // (x, x + c] with x < 0 carries the mass of (0, x + c]
        let (x, c) = if x < 0.0 { (0.0, x + c) } else { (x, c) };
        if c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            AnalyticLaw::Pareto { alpha } => {
                self.log_tail(x) + (-(-alpha * (c / (1.0 + x)).ln_1p()).exp_m1()).ln()
            }
            AnalyticLaw::Weibull { beta } => {
                let gap = if x > 0.0 {
                    x.powf(beta) * (beta * (c / x).ln_1p()).exp_m1()
                } else {
                    c.powf(beta)
                };
                self.log_tail(x) + (-(-gap).exp_m1()).ln()
            }
            AnalyticLaw::Exponential { rate } => self.log_tail(x) + (-(-rate * c).exp_m1()).ln(),
            AnalyticLaw::Lognormal => self.lognormal_interval_mass(x, c).ln(),
        }
    }

    fn lognormal_interval_mass(&self, x: f64, c: f64) -> f64 {
        if x > 0.0 && c <= 0.25 * x {
            // density is smooth and slowly varying over the interval
            let f = |y: f64| self.pdf_value(y);
            let coarse = quad::fixed_gk21(&f, x, x + c);
            let fine = quad::fixed_gk21(&f, x, x + 0.5 * c) + quad::fixed_gk21(&f, x + 0.5 * c, x + c);
            if (coarse - fine).abs() <= 1e-13 * fine.abs() {
                return fine;
            }
            return quad::integrate(f, x, x + c, &QuadOptions::rel(1e-14))
                .map(|e| e.value)
                .unwrap_or(fine);
        }
        let z1 = if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        let z2 = (x + c).ln();
        if z1 > 5.0 {
            let l1 = special::ln_normal_tail(z1);
            let l2 = special::ln_normal_tail(z2);
            return (l1 + (-(l2 - l1).exp_m1()).ln()).exp();
        }
        // lower tail form avoids cancellation left of the median
        special::normal_tail(-z2) - special::normal_tail(-z1)
    }

    fn pdf_value(&self, x: f64) -> f64 {
        match *self {
            AnalyticLaw::Lognormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    special::normal_density(x.ln()) / x
                }
            }
            AnalyticLaw::Weibull { beta } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    let xb = x.powf(beta);
                    beta * xb / x * (-xb).exp()
                }
            }
            AnalyticLaw::Pareto { alpha } => alpha * (-(alpha + 1.0) * x.ln_1p()).exp(),
            AnalyticLaw::Exponential { rate } => rate * (-rate * x).exp(),
        }
    }

    /// Laplace transform `int e^{-t x} law(dx)`.
    pub fn laplace(&self, t: f64) -> Result<Estimate> {
        if t == 0.0 {
            return Ok(Estimate::exact(1.0));
        }
        if let AnalyticLaw::Exponential { rate } = *self {
            return Ok(Estimate::exact(rate / (rate + t)));
        }
        let f = |x: f64| (-t * x).exp() * self.pdf_value(x);
        let breaks = [1e-6, 1e-3, 1.0 / t, 10.0 / t];
        quad::integrate_to_infinity_pts(f, 0.0, &breaks, &QuadOptions::rel(1e-12))
    }
}

impl Law for AnalyticLaw {
    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            AnalyticLaw::Lognormal => special::normal_tail(x.ln()),
            _ => self.log_tail(x).exp(),
        }
    }

    fn log_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            AnalyticLaw::Lognormal => special::ln_normal_tail(x.ln()),
            AnalyticLaw::Weibull { beta } => -x.powf(beta),
            AnalyticLaw::Pareto { alpha } => -alpha * x.ln_1p(),
            AnalyticLaw::Exponential { rate } => -rate * x,
        }
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        let (x, c) = if x < 0.0 { (0.0, x + c) } else { (x, c) };
        if c <= 0.0 {
            return 0.0;
        }
        if matches!(self, AnalyticLaw::Lognormal) {
            return self.lognormal_interval_mass(x, c);
        }
        self.log_interval_mass(x, c).exp()
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        Some(self.pdf_value(x))
    }

    fn mean(&self) -> Mean {
        match *self {
            AnalyticLaw::Lognormal => Mean::Finite(E.sqrt()),
            AnalyticLaw::Weibull { beta } => Mean::Finite(special::gamma(1.0 + 1.0 / beta)),
            AnalyticLaw::Pareto { alpha } if alpha > 1.0 => Mean::Finite(1.0 / (alpha - 1.0)),
            AnalyticLaw::Pareto { .. } => Mean::Infinite,
            AnalyticLaw::Exponential { rate } => Mean::Finite(1.0 / rate),
        }
    }

    fn extrapolation_hint(&self) -> Extrapolation {
        match *self {
            AnalyticLaw::Pareto { alpha } => Extrapolation::Power { alpha },
            AnalyticLaw::Weibull { beta } => Extrapolation::StretchedExp { beta, rate: 1.0 },
            AnalyticLaw::Exponential { rate } => Extrapolation::StretchedExp { beta: 1.0, rate },
            AnalyticLaw::Lognormal => Extrapolation::None,
        }
    }
}

impl fmt::Display for AnalyticLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnalyticLaw::Lognormal => write!(f, "lognormal"),
            AnalyticLaw::Weibull { beta } => write!(f, "weibull:beta={beta}"),
            AnalyticLaw::Pareto { alpha } => write!(f, "pareto:alpha={alpha}"),
            AnalyticLaw::Exponential { rate } => write!(f, "exp:rate={rate}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{density, local_mass, tail};

    #[test]
    fn interval_straddling_origin() {
        for law in [
            AnalyticLaw::pareto(0.5).unwrap(),
            AnalyticLaw::weibull(0.5).unwrap(),
            AnalyticLaw::lognormal(),
            AnalyticLaw::exponential(1.0).unwrap(),
        ] {
            let want = 1.0 - law.tail(0.25);
            assert!((law.interval_mass(-0.75, 1.0) - want).abs() < 1e-14, "{law:?}");
            assert_eq!(law.interval_mass(-2.0, 1.0), 0.0);
        }
    }

    #[test]
    fn tail_examples() {
        let p2 = AnalyticLaw::pareto(2.0).unwrap();
        assert!((tail(&p2, 1.0).unwrap() - 0.25).abs() < 1e-16);
        let w = AnalyticLaw::weibull(0.5).unwrap();
        assert_eq!(tail(&w, 0.0).unwrap(), 1.0);
        assert!((tail(&AnalyticLaw::Lognormal, 1.0).unwrap() - 0.5).abs() < 1e-16);
    }

    #[test]
    fn density_examples() {
        assert!((density(&AnalyticLaw::Lognormal, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((density(&AnalyticLaw::pareto(2.0).unwrap(), 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((density(&AnalyticLaw::exponential(1.0).unwrap(), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(density(&AnalyticLaw::Lognormal, 0.0).unwrap(), 0.0);
        assert!(density(&AnalyticLaw::weibull(0.5).unwrap(), 0.0).is_err());
    }

    #[test]
    fn local_mass_examples() {
        let p2 = AnalyticLaw::pareto(2.0).unwrap();
        let v = local_mass(&p2, 1.0, 1.0).unwrap();
        assert!((v - (0.25 - 1.0 / 9.0)).abs() < 1e-16);
        let w = AnalyticLaw::weibull(0.5).unwrap();
        let v = local_mass(&w, 4.0, 1.0).unwrap();
        let expect = (-2.0f64).exp() - (-(5f64).sqrt()).exp();
        assert!((v / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn local_mass_deep_tail_uses_log_space() {
        let w = AnalyticLaw::weibull(0.5).unwrap();
        // tail(1e6) = e^-1000 underflows, the interval mass does too
        assert!(matches!(local_mass(&w, 1e6, 1.0), Err(Error::Underflow { .. })));
        let v = w.log_interval_mass(1e6, 1.0);
        assert!((v - (-1000.0 + (-(-0.0005f64 + 1.25e-10).exp_m1()).ln())).abs() < 1e-6);
        // relative accuracy far out in the Pareto tail
        let p = AnalyticLaw::pareto(3.0).unwrap();
        let x: f64 = 1e7;
        let exact = (1.0 + x).powi(-3) * (1.0 - ((1.0 + x) / (2.0 + x)).powi(3));
        assert!((p.interval_mass(x, 1.0) / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lognormal_interval_mass_matches_tail_difference() {
        let ln = AnalyticLaw::Lognormal;
        for &(x, c) in &[(0.5, 1.0), (3.0, 0.5), (30.0, 1.0), (1e3, 1.0), (10.0, 20.0)] {
            let diff = ln.tail(x) - ln.tail(x + c);
            let v = ln.interval_mass(x, c);
            assert!((v / diff - 1.0).abs() < 1e-9, "x={x} c={c}: {v} vs {diff}");
        }
    }

    #[test]
    fn means() {
        assert!((AnalyticLaw::pareto(2.0).unwrap().mean().finite().unwrap() - 1.0).abs() < 1e-15);
        assert!((AnalyticLaw::weibull(0.5).unwrap().mean().finite().unwrap() - 2.0).abs() < 1e-13);
        assert!((AnalyticLaw::Lognormal.mean().finite().unwrap() - 1.648_721_270_700_128).abs() < 1e-15);
        assert_eq!(AnalyticLaw::pareto(1.0).unwrap().mean(), Mean::Infinite);
        assert_eq!(AnalyticLaw::pareto(0.5).unwrap().mean(), Mean::Infinite);
    }

    #[test]
    fn parameter_validation() {
        assert!(AnalyticLaw::weibull(1.5).is_err());
        assert!(AnalyticLaw::pareto(0.0).is_err());
        assert!(AnalyticLaw::exponential(-1.0).is_err());
    }

    #[test]
    fn laplace_exponential_and_pareto() {
        let e = AnalyticLaw::exponential(1.0).unwrap();
        assert_eq!(e.laplace(1.0).unwrap().value, 0.5);
        let w = AnalyticLaw::weibull(0.5).unwrap();
        // moment check: (1 - L(t)) / t -> mean as t -> 0
        let t = 1e-6;
        let slope = (1.0 - w.laplace(t).unwrap().value) / t;
        assert!((slope - 2.0).abs() < 1e-3);
    }
}
