use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::powers::ConvolutionPowers;
use super::tables::TableOptions;
use crate::error::{check_positive, Error, Result};
use crate::laws::Law;
use crate::quad::Estimate;

/// Default bound on the dropped weight mass of truncated series.
pub const DEFAULT_BUDGET: f64 = 1e-14;

/// Weights `p_0, ..., p_M` of a compound sum `sum_n p_n law^{n*}`, possibly
/// signed, with a geometric envelope `sum |p_n| (1 + eps1)^n < inf` and a bound
/// on the weight mass dropped by truncating at `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundWeights {
    p: Vec<f64>,
    eps1: f64,
    dropped: f64,
}

impl CompoundWeights {
    /// A finite weight sequence (nothing dropped).
    pub fn new(p: Vec<f64>, eps1: f64) -> Result<Self> {
        check_positive("eps1", eps1)?;
        if p.is_empty() {
            return Err(Error::Precondition("weight sequence is empty".into()));
        }
        if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: *bad,
                reason: "weights must be finite",
            });
        }
        let w = Self { p, eps1, dropped: 0.0 };
        if !w.envelope_sum().is_finite() {
            return Err(Error::Precondition("weights violate the geometric envelope".into()));
        }
        Ok(w)
    }

    /// Poisson weights `e^{-delta} delta^n / n!`, truncated once the dropped
    /// mass is below [`DEFAULT_BUDGET`].
    pub fn poisson(delta: f64) -> Result<Self> {
        Self::poisson_with_budget(delta, DEFAULT_BUDGET)
    }

    pub fn poisson_with_budget(delta: f64, budget: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        check_positive("budget", budget)?;
        let mut p = vec![(-delta).exp()];
        loop {
            let m = p.len() - 1;
            let next = p[m] * delta / (m + 1) as f64;
            // sum_{n > m} p_n <= p_{m+1} / (1 - delta / (m + 2)) once m + 2 > delta;
            // the factorial moments need the n^2-weighted remainder small as well
            let ratio = delta / (m + 2) as f64;
            if ratio < 1.0 {
                let rest = next / (1.0 - ratio);
                let weighted = rest * ((m + 1) as f64).powi(2) / (1.0 - ratio);
                if rest <= budget && weighted <= budget {
                    return Ok(Self {
                        p,
                        eps1: 1.0,
                        dropped: rest,
                    });
                }
            }
            if p.len() > 100_000 {
                return Err(Error::Truncation {
                    achieved: next,
                    budget,
                });
            }
            p.push(next);
        }
    }

    /// Signed weights `-(1/delta) (1 - e^delta)^n / n`, `n >= 1`, of the
    /// logarithmic series that inverts a compound Poisson construction.
    /// Requires `e^delta - 1 < 1`.
    pub fn log_series(delta: f64, budget: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        check_positive("budget", budget)?;
        let r = delta.exp_m1();
        if !(r < 1.0) {
            return Err(Error::Precondition(format!(
                "logarithmic series needs e^delta - 1 < 1, i.e. delta < ln 2; got delta = {delta}"
            )));
        }
        let z = -r;
        let mut p = vec![0.0];
        let mut zn = 1.0;
        let mut n = 0usize;
        loop {
            n += 1;
            zn *= z;
            p.push(-zn / (n as f64 * delta));
            // |rest| <= r^{n+1} / ((n + 1) delta (1 - r))
            let rest = r.powi(n as i32 + 1) / ((n + 1) as f64 * delta * (1.0 - r));
            if rest <= budget {
                return Ok(Self {
                    p,
                    eps1: 0.5 * (1.0 / r - 1.0),
                    dropped: rest,
                });
            }
            if n > 1_000_000 {
                return Err(Error::Truncation { achieved: rest, budget });
            }
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.p
    }

    /// Truncation index `M`.
    pub fn truncation(&self) -> usize {
        self.p.len() - 1
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    /// Bound on `sum_{n > M} |p_n|`.
    pub fn dropped(&self) -> f64 {
        self.dropped
    }

    pub fn envelope_sum(&self) -> f64 {
        let g = 1.0 + self.eps1;
        self.p.iter().enumerate().map(|(n, w)| w.abs() * g.powi(n as i32)).sum()
    }

    pub fn is_probability(&self) -> bool {
        self.p.iter().all(|&w| w >= 0.0) && (self.p.iter().sum::<f64>() - 1.0).abs() <= 1e-12
    }

    /// `sum n p_n`.
    pub fn first_moment(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, w)| n as f64 * w).sum()
    }

    /// `sum n (n - 1) p_n`.
    pub fn second_factorial_moment(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(n, w)| (n * n.saturating_sub(1)) as f64 * w)
            .sum()
    }

    pub fn check_budget(&self, budget: f64) -> Result<()> {
        if self.dropped > budget {
            return Err(Error::Truncation {
                achieved: self.dropped,
                budget,
            });
        }
        Ok(())
    }

    /// `sum p_n law^{n*}((x, inf))` from prebuilt powers.
    pub fn tail_with(&self, powers: &ConvolutionPowers, x: f64) -> Result<Estimate> {
        let m = self.truncation();
        let d = powers.excesses(m, x)?;
        let t = powers.jump().tail(x);
        let mut est = Estimate::exact(self.first_moment() * t);
        if x < 0.0 {
            est.value += self.p[0];
        }
        for (w, dn) in self.p.iter().zip(&d).skip(2) {
            est = est + dn.scale(*w);
        }
        Ok(est)
    }
}

/// `sum_n p_n jump^{n*}((x, inf))`.
pub fn compound_tail(w: &CompoundWeights, jump: Arc<dyn Law>, x: f64) -> Result<Estimate> {
    w.check_budget(DEFAULT_BUDGET)?;
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "compound_tail", x });
    }
    let powers = ConvolutionPowers::build(jump, w.truncation(), x.max(1e-9), TableOptions::default())?;
    w.tail_with(&powers, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::AnalyticLaw;

    #[test]
    fn poisson_moments() {
        let w = CompoundWeights::poisson(0.5).unwrap();
        assert!((w.weights()[0] - 0.6065306597126334).abs() < 1e-16);
        assert!((w.first_moment() - 0.5).abs() < 1e-12);
        assert!((w.second_factorial_moment() - 0.25).abs() < 1e-12);
        assert!(w.is_probability());
        assert!(w.dropped() <= DEFAULT_BUDGET);
    }

    #[test]
    fn point_mass_at_zero() {
        let w = CompoundWeights::new(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        let j: Arc<dyn Law> = Arc::new(AnalyticLaw::pareto(2.0).unwrap());
        assert_eq!(compound_tail(&w, j, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn log_series_needs_small_delta() {
        assert!(CompoundWeights::log_series(0.7, 1e-14).unwrap_err().is_precondition());
        let w = CompoundWeights::log_series(0.5, 1e-14).unwrap();
        // sum of the weights is ln(e^delta) / delta = 1
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(!w.is_probability());
    }

    #[test]
    fn two_copies() {
        let w = CompoundWeights::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let j: Arc<dyn Law> = Arc::new(AnalyticLaw::exponential(1.0).unwrap());
        let got = compound_tail(&w, j, 1.0).unwrap().value;
        assert!((got / (2.0 * (-1.0f64).exp()) - 1.0).abs() < 1e-10);
    }
}
