//! Closed-form second-order tail predictors.
//!
//! Every predictor returns `leading(x) + coefficient * normalizer(x)`, where
//! the normalizer is the scale of the neglected remainder: the unit-interval
//! mass `mu((x, x + 1])`, a density, or `tail(x) x^-alpha l(x)` in the
//! regularly varying regimes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conv::CompoundWeights;
use crate::error::{check_positive, Error, Result};
use crate::laws::{AnalyticLaw, Law, SlowlyVarying, TailFunction};
use crate::quad::{self, QuadOptions};
use crate::special::gamma;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which relation a prediction evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// Lévy tail from the law's tail.
    NuFromMu,
    /// Law's tail from the Lévy tail.
    MuFromNu,
    /// Tail of the `t`-th convolution power.
    Power,
    /// Tail of a compound sum `sum p_n rho^{n*}`.
    Compound,
    DensityNuFromMu,
    DensityMuFromNu,
    /// Regularly varying Lévy density of index in `[0, 1]`.
    RegularVariation,
}

impl Relation {
    pub const ALL: [Relation; 7] = [
        Relation::NuFromMu,
        Relation::MuFromNu,
        Relation::Power,
        Relation::Compound,
        Relation::DensityNuFromMu,
        Relation::DensityMuFromNu,
        Relation::RegularVariation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::NuFromMu => "nu-from-mu",
            Relation::MuFromNu => "mu-from-nu",
            Relation::Power => "power",
            Relation::Compound => "compound",
            Relation::DensityNuFromMu => "density-nu-from-mu",
            Relation::DensityMuFromNu => "density-mu-from-nu",
            Relation::RegularVariation => "regular-variation",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown relation '{s}'")))
    }
}

/// `prediction(x) = leading(x) + coefficient * normalizer(x)`.
#[derive(Clone)]
pub struct SecondOrderPrediction {
    leading: RealFn,
    normalizer: RealFn,
    coefficient: f64,
    relation: Relation,
    description: String,
}

impl fmt::Debug for SecondOrderPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecondOrderPrediction")
            .field("relation", &self.relation)
            .field("coefficient", &self.coefficient)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl SecondOrderPrediction {
    pub fn new(
        leading: RealFn,
        normalizer: RealFn,
        coefficient: f64,
        relation: Relation,
        description: impl Into<String>,
    ) -> Self {
        Self {
            leading,
            normalizer,
            coefficient,
            relation,
            description: description.into(),
        }
    }

    pub fn leading(&self, x: f64) -> f64 {
        (self.leading)(x)
    }

    pub fn normalizer(&self, x: f64) -> f64 {
        (self.normalizer)(x)
    }

    pub fn correction(&self, x: f64) -> f64 {
        if self.coefficient == 0.0 {
            return 0.0;
        }
        self.coefficient * self.normalizer(x)
    }

    pub fn prediction(&self, x: f64) -> f64 {
        self.leading(x) + self.correction(x)
    }

    /// `correction(x) / leading(x)`.
    pub fn relative_correction(&self, x: f64) -> f64 {
        self.correction(x) / self.leading(x)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Same prediction with the normalizer multiplied by `c`.
    pub fn scale_normalizer(&self, c: f64) -> Self {
        let n = self.normalizer.clone();
        Self {
            normalizer: Arc::new(move |x| c * n(x)),
            ..self.clone()
        }
    }
}

fn finite_mean(law: &dyn Law) -> Result<f64> {
    law.mean().require()
}

fn unit_mass(law: Arc<dyn Law>) -> RealFn {
    Arc::new(move |x| law.interval_mass(x, 1.0))
}

fn law_tail(law: Arc<dyn Law>, k: f64) -> RealFn {
    Arc::new(move |x| k * law.tail(x))
}

/// Lévy tail from the law: `tail(x) - m mu((x, x + 1])`.
pub fn predict_nu_from_mu(mu: Arc<dyn Law>) -> Result<SecondOrderPrediction> {
    let m = finite_mean(mu.as_ref())?;
    Ok(SecondOrderPrediction::new(
        law_tail(mu.clone(), 1.0),
        unit_mass(mu),
        -m,
        Relation::NuFromMu,
        format!("nu tail from mu tail, m = {m}"),
    ))
}

/// Law's tail from the Lévy tail: `nu_tail(x) + m nu((x, x + 1])`.
pub fn predict_mu_from_nu(nu_tail: TailFunction, m_mu: f64) -> Result<SecondOrderPrediction> {
    if !m_mu.is_finite() {
        return Err(Error::InfiniteMean);
    }
    let nu = Arc::new(nu_tail);
    let lead = nu.clone();
    Ok(SecondOrderPrediction::new(
        Arc::new(move |x| lead.eval(x)),
        Arc::new(move |x| nu.eval(x) - nu.eval(x + 1.0)),
        m_mu,
        Relation::MuFromNu,
        format!("mu tail from nu tail, m = {m_mu}"),
    ))
}

/// `mu^{t*}((x, inf)) = t tail(x) + (t^2 - t) m mu((x, x + 1])`.
pub fn predict_power(mu: Arc<dyn Law>, t: f64) -> Result<SecondOrderPrediction> {
    check_positive("t", t)?;
    let m = finite_mean(mu.as_ref())?;
    Ok(SecondOrderPrediction::new(
        law_tail(mu.clone(), t),
        unit_mass(mu),
        (t * t - t) * m,
        Relation::Power,
        format!("power t = {t}, m = {m}"),
    ))
}

/// `sum p_n rho^{n*}((x, inf)) = (sum n p_n) tail(x) + (sum n(n-1) p_n) m rho((x, x + 1])`.
pub fn predict_compound(w: &CompoundWeights, rho: Arc<dyn Law>) -> Result<SecondOrderPrediction> {
    if !w.envelope_sum().is_finite() {
        return Err(Error::Precondition("weights violate the geometric envelope".into()));
    }
    let m = finite_mean(rho.as_ref())?;
    Ok(SecondOrderPrediction::new(
        law_tail(rho.clone(), w.first_moment()),
        unit_mass(rho),
        w.second_factorial_moment() * m,
        Relation::Compound,
        format!("compound sum, {} weights, m = {m}", w.weights().len()),
    ))
}

/// Lévy tail from the law with the density as normalizer: `tail(x) - m p(x)`.
pub fn predict_density_nu_from_mu(mu: Arc<dyn Law>) -> Result<SecondOrderPrediction> {
    if mu.pdf(mu.support_start() + 1.0).is_none() {
        return Err(Error::Unsupported("law has no density".into()));
    }
    let m = finite_mean(mu.as_ref())?;
    let p = mu.clone();
    Ok(SecondOrderPrediction::new(
        law_tail(mu, 1.0),
        Arc::new(move |x| p.pdf(x).unwrap_or(0.0)),
        -m,
        Relation::DensityNuFromMu,
        format!("nu tail from mu tail, density normalizer, m = {m}"),
    ))
}

/// Law's tail from the Lévy tail with the Lévy density `k(x)/x` as normalizer.
pub fn predict_density_mu_from_nu(
    nu_tail: TailFunction,
    levy_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    m_mu: f64,
) -> Result<SecondOrderPrediction> {
    if !m_mu.is_finite() {
        return Err(Error::InfiniteMean);
    }
    Ok(SecondOrderPrediction::new(
        Arc::new(move |x| nu_tail.eval(x)),
        Arc::new(levy_density),
        m_mu,
        Relation::DensityMuFromNu,
        format!("mu tail from nu tail, density normalizer, m = {m_mu}"),
    ))
}

fn check_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "index must lie in (0, 1)",
        })
    }
}

/// `K(alpha) = (2 alpha - 1) Gamma(1 - alpha)^2 / (2 alpha Gamma(2 - 2 alpha))`.
pub fn k_alpha(alpha: f64) -> Result<f64> {
    check_index(alpha)?;
    let g = gamma(1.0 - alpha);
    Ok((2.0 * alpha - 1.0) * g * g / (2.0 * alpha * gamma(2.0 - 2.0 * alpha)))
}

/// `C(alpha) = (1 - alpha) K(alpha)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_index(alpha)?;
    let g = gamma(1.0 - alpha);
    Ok((1.0 - alpha) * (2.0 * alpha - 1.0) * g * g / (2.0 * alpha * gamma(2.0 - 2.0 * alpha)))
}

const KARAMATA_TOL: f64 = 1e-10;
const LOG_REACH: f64 = 700.0;

/// Decide whether `int^inf l(u)/u du` converges: closed form when known,
/// otherwise the log-log slope of `v -> l(e^v)` between `v = 128` and `512`
/// must be below -1.
pub fn karamata_converges(l: &SlowlyVarying) -> bool {
    if let Some(known) = l.karamata_converges() {
        return known;
    }
    let (a, b) = (l.eval_log(128.0).abs(), l.eval_log(512.0).abs());
    if b == 0.0 {
        return true;
    }
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return false;
    }
    (b / a).ln() / 4.0f64.ln() < -1.0
}

/// `l*(x) = int_1^x l(u)/u du`.
pub fn karamata_lstar(l: &SlowlyVarying, x: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::Domain { what: "karamata l*", x });
    }
    let v = x.ln();
    match *l {
        SlowlyVarying::Constant(k) => Ok(k * v),
        SlowlyVarying::LogPower { scale, power } => {
            if power <= -1.0 {
                return Err(Error::Precondition(format!(
                    "(ln u)^{power} is not integrable against du/u at u = 1"
                )));
            }
            Ok(scale * v.powf(power + 1.0) / (power + 1.0))
        }
        SlowlyVarying::Custom { .. } => {
            let pts = log_breaks(0.0, v);
            let opts = QuadOptions::rel(KARAMATA_TOL);
            Ok(quad::integrate_pts(|s| l.eval_log(s), &pts, &opts)?.value)
        }
    }
}

/// `l_*(x) = int_x^inf l(u)/u du`; `+inf` when the integral diverges.
pub fn karamata_lsub(l: &SlowlyVarying, x: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::Domain { what: "karamata l_*", x });
    }
    if !karamata_converges(l) {
        return Ok(f64::INFINITY);
    }
    let v = x.ln();
    match *l {
        SlowlyVarying::Constant(_) => Ok(0.0),
        SlowlyVarying::LogPower { scale, power } => Ok(scale * v.powf(power + 1.0) / (-power - 1.0)),
        SlowlyVarying::Custom { .. } => {
            // a callable l cannot be evaluated past u = e^LOG_REACH; beyond it
            // v -> l(e^v) is continued as a power of v fitted on [REACH/2, REACH]
            let opts = QuadOptions::rel(KARAMATA_TOL);
            let far = |from: f64| {
                let (g1, g2) = (l.eval_log(0.5 * LOG_REACH), l.eval_log(LOG_REACH));
                let slope = (g2 / g1).ln() / 2f64.ln();
                g2 * LOG_REACH * (from / LOG_REACH).powf(slope + 1.0) / (-slope - 1.0)
            };
            if v >= LOG_REACH {
                return Ok(far(v));
            }
            let pts = log_breaks(v, LOG_REACH);
            Ok(quad::integrate_pts(|s| l.eval_log(s), &pts, &opts)?.value + far(LOG_REACH))
        }
    }
}

fn log_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut z = 1.0;
    while z < hi {
        if z > lo {
            pts.push(z);
        }
        z *= 2.0;
    }
    pts.push(hi);
    pts
}

/// The four cases of the regularly varying expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `0 < alpha < 1`: relative correction `K(alpha) x^-alpha l(x)`.
    FractionalIndex,
    /// `alpha = 1`, `l*(inf) = inf`: relative correction `l*(x)/x`.
    UnitIndexInfiniteMean,
    /// `alpha = 1`, `l*(inf) < inf`: relative correction `m/x`.
    UnitIndexFiniteMean,
    /// `alpha = 0`: relative correction `l_*(x)/2`, opposite sign.
    ZeroIndex,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::FractionalIndex => "fractional-index",
            Regime::UnitIndexInfiniteMean => "unit-index-infinite-mean",
            Regime::UnitIndexFiniteMean => "unit-index-finite-mean",
            Regime::ZeroIndex => "zero-index",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Density `p(x) ~ x^(-alpha-1) l(x)` with `alpha` in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RegVaryingTail {
    alpha: f64,
    l: SlowlyVarying,
    karamata_finite: bool,
    tail: Option<TailFunction>,
}

impl RegVaryingTail {
    /// Rejects `alpha` outside `[0, 1]` and factors whose ratio `l(2x)/l(x)`,
    /// sampled at `x = 10^k`, `k = 2..6`, does not approach 1: the distance to
    /// 1 must not grow and must be within 10% at `10^6`.
    pub fn new(alpha: f64, l: SlowlyVarying) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "index must lie in [0, 1]",
            });
        }
        let dist: Vec<f64> = (2..=6)
            .map(|k| {
                let x = 10f64.powi(k);
                (l.eval(2.0 * x) / l.eval(x) - 1.0).abs()
            })
            .collect();
        let growing = dist.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-12);
        if growing || !(dist[4] <= 0.1) {
            return Err(Error::Precondition(format!(
                "|l(2x)/l(x) - 1| = {dist:?} at x = 1e2..1e6; factor is not slowly varying"
            )));
        }
        let karamata_finite = karamata_converges(&l);
        Ok(Self {
            alpha,
            l,
            karamata_finite,
            tail: None,
        })
    }

    /// Pareto law `(1 + x)^-alpha`, `0 < alpha <= 1`: `l = alpha`, exact tail.
    pub fn pareto(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "index must lie in (0, 1]",
            });
        }
        let law = AnalyticLaw::pareto(alpha)?;
        Ok(Self::new(alpha, SlowlyVarying::Constant(alpha))?.with_tail(TailFunction::from_law(Arc::new(law))))
    }

    /// Use `tail` as the law's exact survival function instead of the
    /// Karamata asymptotic.
    pub fn with_tail(mut self, tail: TailFunction) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn slowly_varying(&self) -> &SlowlyVarying {
        &self.l
    }

    /// Whether `l*(inf)` (equivalently `l_*(x)`) is finite.
    pub fn karamata_finite(&self) -> bool {
        self.karamata_finite
    }

    pub fn lstar(&self, x: f64) -> Result<f64> {
        karamata_lstar(&self.l, x)
    }

    pub fn lsub(&self, x: f64) -> Result<f64> {
        karamata_lsub(&self.l, x)
    }

    pub fn regime(&self) -> Regime {
        if self.alpha == 0.0 {
            Regime::ZeroIndex
        } else if self.alpha < 1.0 {
            Regime::FractionalIndex
        } else if self.karamata_finite {
            Regime::UnitIndexFiniteMean
        } else {
            Regime::UnitIndexInfiniteMean
        }
    }

    /// The law's tail: exact when supplied, else `x^-alpha l(x) / alpha`
    /// (`alpha > 0`) or `l_*(x)` (`alpha = 0`).
    pub fn tail(&self, x: f64) -> f64 {
        if let Some(t) = &self.tail {
            return t.eval(x);
        }
        if self.alpha > 0.0 {
            (-self.alpha * x.ln()).exp() * self.l.eval(x) / self.alpha
        } else {
            karamata_lsub(&self.l, x).unwrap_or(f64::NAN)
        }
    }
}

/// Both relations of a regularly varying law.
#[derive(Debug, Clone)]
pub struct RvPrediction {
    pub regime: Regime,
    /// Lévy tail from the law's tail.
    pub nu_from_mu: SecondOrderPrediction,
    /// Tail of the `t`-th power.
    pub power: SecondOrderPrediction,
}

/// Second-order expansions of `nu((x, inf))` and `mu^{t*}((x, inf))` for a
/// regularly varying law. The normalizer is `tail(x)` times the relative
/// scale of the regime (`x^-alpha l`, `l*/x`, `1/x` or `l_*`).
pub fn predict_rv(rv: &RegVaryingTail, mean_mu: Option<f64>, t: f64) -> Result<RvPrediction> {
    check_positive("t", t)?;
    let regime = rv.regime();
    let this = Arc::new(rv.clone());
    let (coef, scale): (f64, RealFn) = match regime {
        Regime::FractionalIndex => {
            if mean_mu.is_some() {
                return Err(Error::Regime("index below 1 has infinite mean; none may be given".into()));
            }
            let k = k_alpha(rv.alpha)?;
            let r = this.clone();
            (k, Arc::new(move |x: f64| (-r.alpha * x.ln()).exp() * r.l.eval(x)))
        }
        Regime::UnitIndexInfiniteMean => {
            if mean_mu.is_some() {
                return Err(Error::Regime("index 1 with divergent l* has infinite mean".into()));
            }
            let r = this.clone();
            (1.0, Arc::new(move |x: f64| r.lstar(x).unwrap_or(f64::NAN) / x))
        }
        Regime::UnitIndexFiniteMean => {
            let m = mean_mu.ok_or_else(|| Error::Regime("index 1 with finite l* needs the mean".into()))?;
            if !m.is_finite() {
                return Err(Error::Regime(format!("mean {m} is not finite")));
            }
            (m, Arc::new(|x: f64| 1.0 / x))
        }
        Regime::ZeroIndex => {
            if !rv.karamata_finite {
                return Err(Error::Regime("index 0 needs a convergent l_*".into()));
            }
            if mean_mu.is_some() {
                return Err(Error::Regime("index 0 has infinite mean; none may be given".into()));
            }
            let r = this.clone();
            (-0.5, Arc::new(move |x: f64| r.lsub(x).unwrap_or(f64::NAN)))
        }
    };
    let lead = this.clone();
    let leading: RealFn = Arc::new(move |x| lead.tail(x));
    let tl = this.clone();
    let lead_t: RealFn = Arc::new(move |x| t * tl.tail(x));
    let sc = scale.clone();
    let normalizer: RealFn = Arc::new(move |x| this.tail(x) * sc(x));
    let desc = format!("{regime}, alpha = {}, l = {:?}", rv.alpha, rv.l);
    Ok(RvPrediction {
        regime,
        nu_from_mu: SecondOrderPrediction::new(
            leading,
            normalizer.clone(),
            -coef,
            Relation::RegularVariation,
            format!("nu tail, {desc}"),
        ),
        power: SecondOrderPrediction::new(
            lead_t,
            normalizer,
            t * (t - 1.0) * coef,
            Relation::RegularVariation,
            format!("power t = {t}, {desc}"),
        ),
    })
}

/// Relative Lévy-tail correction `nu_tail/mu_tail - 1` of a closed-form law,
/// to second order.
pub fn example_relative_correction(law: &AnalyticLaw) -> Result<RealFn> {
    Ok(match *law {
        AnalyticLaw::Lognormal => {
            let s = 0.5f64.exp();
            Arc::new(move |x: f64| -s * x.ln() / x)
        }
        AnalyticLaw::Weibull { beta } => {
            let g = gamma(1.0 / beta);
            Arc::new(move |x: f64| -g * x.powf(beta - 1.0))
        }
        AnalyticLaw::Pareto { alpha } if alpha > 1.0 => {
            let k = alpha / (alpha - 1.0);
            Arc::new(move |x: f64| -k / x)
        }
        AnalyticLaw::Pareto { alpha } if alpha == 1.0 => Arc::new(|x: f64| -x.ln() / x),
        AnalyticLaw::Pareto { alpha } => {
            let k = alpha * k_alpha(alpha)?;
            Arc::new(move |x: f64| -k * x.powf(-alpha))
        }
        AnalyticLaw::Exponential { .. } => {
            return Err(Error::Unsupported("light-tailed law has no subexponential expansion".into()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_at_known_points() {
        assert_eq!(k_alpha(0.5).unwrap(), 0.0);
        assert_eq!(c_alpha(0.5).unwrap(), 0.0);
        let k34 = 2.472099569735162557911800462927013394957;
        assert!((k_alpha(0.75).unwrap() / k34 - 1.0).abs() < 1e-13);
        let c14 = -1.270819627190968629909748685223287454722;
        assert!((c_alpha(0.25).unwrap() / c14 - 1.0).abs() < 1e-13);
        assert!(k_alpha(0.3).unwrap() < 0.0 && k_alpha(0.7).unwrap() > 0.0);
        assert!(c_alpha(1.0).is_err() && k_alpha(0.0).is_err());
    }

    #[test]
    fn karamata_closed_forms() {
        let one = SlowlyVarying::one();
        assert!((karamata_lstar(&one, 100.0).unwrap() - 100f64.ln()).abs() < 1e-14);
        assert_eq!(karamata_lsub(&one, 100.0).unwrap(), f64::INFINITY);
        let l = SlowlyVarying::log_power(-2.0);
        assert!((karamata_lsub(&l, 1e4).unwrap() - 1.0 / 1e4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn karamata_quadrature_matches_closed_form() {
        let l = SlowlyVarying::custom("log^-2", |u: f64| u.ln().powi(-2));
        assert!(karamata_converges(&l));
        let got = karamata_lsub(&l, 50.0).unwrap();
        assert!((got * 50f64.ln() - 1.0).abs() < 1e-8, "{got}");
        let flat = SlowlyVarying::custom("1+1/log", |u: f64| 1.0 + 1.0 / (2.0 + u.ln()));
        assert!(!karamata_converges(&flat));
        let want = 1e3f64.ln() + (2.0 + 1e3f64.ln()).ln() - 2f64.ln();
        assert!((karamata_lstar(&flat, 1e3).unwrap() / want - 1.0).abs() < 1e-8);
    }

    #[test]
    fn regime_dispatch() {
        let rv = RegVaryingTail::pareto(0.25).unwrap();
        assert_eq!(rv.regime(), Regime::FractionalIndex);
        let p = predict_rv(&rv, None, 1.0).unwrap();
        assert_eq!(p.power.correction(100.0), 0.0);
        let x: f64 = 1e6;
        let want = -0.25 * k_alpha(0.25).unwrap() * x.powf(-0.25);
        assert!((p.nu_from_mu.relative_correction(x) / want - 1.0).abs() < 1e-12);

        let unit = RegVaryingTail::pareto(1.0).unwrap();
        assert_eq!(unit.regime(), Regime::UnitIndexInfiniteMean);
        assert!(predict_rv(&unit, Some(1.0), 2.0).is_err());
        let p = predict_rv(&unit, None, 2.0).unwrap();
        assert!((p.nu_from_mu.relative_correction(x) / (-x.ln() / x) - 1.0).abs() < 1e-12);

        let zero = RegVaryingTail::new(0.0, SlowlyVarying::one()).unwrap();
        assert!(matches!(predict_rv(&zero, None, 2.0), Err(Error::Regime(_))));
        let finite = RegVaryingTail::new(1.0, SlowlyVarying::log_power(-2.0)).unwrap();
        assert_eq!(finite.regime(), Regime::UnitIndexFiniteMean);
        assert!(predict_rv(&finite, None, 2.0).is_err());
    }

    #[test]
    fn zero_index_flips_sign() {
        let rv = RegVaryingTail::new(0.0, SlowlyVarying::log_power(-2.0)).unwrap();
        let p = predict_rv(&rv, None, 3.0).unwrap();
        let x: f64 = 1e8;
        let ls = 1.0 / x.ln();
        assert!((p.nu_from_mu.relative_correction(x) - 0.5 * ls).abs() < 1e-14);
        assert!((p.power.relative_correction(x) + ls).abs() < 1e-14);
    }

    #[test]
    fn power_and_compound() {
        let p3: Arc<dyn Law> = Arc::new(AnalyticLaw::pareto(3.0).unwrap());
        let pw = predict_power(p3.clone(), 2.0).unwrap();
        let x = 10.0;
        assert!((pw.prediction(x) - (2.0 * p3.tail(x) + p3.interval_mass(x, 1.0))).abs() < 1e-16);
        assert_eq!(predict_power(p3.clone(), 1.0).unwrap().correction(x), 0.0);
        let two = CompoundWeights::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let c = predict_compound(&two, p3.clone()).unwrap();
        assert!((c.prediction(x) - pw.prediction(x)).abs() < 1e-16);
        let half: Arc<dyn Law> = Arc::new(AnalyticLaw::pareto(0.5).unwrap());
        assert!(matches!(predict_nu_from_mu(half), Err(Error::InfiniteMean)));
    }

    #[test]
    fn relation_names_round_trip() {
        for r in Relation::ALL {
            assert_eq!(r.name().parse::<Relation>().unwrap(), r);
        }
    }
}
