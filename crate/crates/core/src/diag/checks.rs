use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::{DiagnosticReport, Verdict};
use crate::asym::{c_alpha, example_relative_correction, predict_rv, RegVaryingTail, Regime};
use crate::conv::{
    density_convolution, twofold_excess, twofold_interval_mass, ConvolutionPowers, TableOptions,
};
use crate::error::{check_positive, Error, Result};
use crate::infdiv::CompoundPoissonLaw;
use crate::laws::{local_mass, AnalyticLaw, Law, UNDERFLOW};
use crate::quad::{self, Estimate, QuadOptions};

/// Default verdict tolerance, relative to `|target|` (or absolute for a zero target).
pub const DEFAULT_TOLERANCE: f64 = 0.05;

// relative rounding error allowed for a directly computed normalizer
const NORMALIZER_REL: f64 = 8.0 * f64::EPSILON;

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Precondition("empty x grid".into()));
    }
    if let Some(w) = xs.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(format!(
            "x grid must be strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    if let Some(x) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain { what: "x grid", x: *x });
    }
    Ok(())
}

/// Evaluate `f` on every `x` (in parallel) and assemble a report. An
/// underflowing normalizer aborts with the samples before it as a partial report.
fn sample<F>(name: &str, subject: &str, xs: &[f64], target: f64, f: F) -> Result<DiagnosticReport>
where
    F: Fn(f64) -> Result<Estimate> + Sync,
{
    check_grid(xs)?;
    let vals: Vec<Result<Estimate>> = xs.par_iter().map(|&x| f(x)).collect();
    let mut obs = Vec::with_capacity(xs.len());
    let mut err = Vec::with_capacity(xs.len());
    for (i, v) in vals.into_iter().enumerate() {
        match v {
            Ok(e) => {
                obs.push(e.value);
                err.push(e.error);
            }
            Err(Error::Underflow { x }) => {
                let partial = DiagnosticReport::new(name, subject, xs[..i].to_vec(), obs, err, target, DEFAULT_TOLERANCE);
                return Err(Error::NormalizerUnderflow {
                    x,
                    partial: Box::new(partial),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DiagnosticReport::new(name, subject, xs.to_vec(), obs, err, target, DEFAULT_TOLERANCE))
}

/// `num / den` with `num`'s error and a rounding allowance for `den`.
fn ratio(num: Estimate, den: f64) -> Estimate {
    let v = num.value / den;
    Estimate::new(v, num.error / den.abs() + v.abs() * NORMALIZER_REL)
}

fn subject(law: &dyn Law) -> String {
    format!("{law:?}")
}

/// Long-tail check of the local mass: `law((x+1, x+1+c]) / law((x, x+c])` against 1.
pub fn check_lloc(law: &dyn Law, c: f64, xs: &[f64]) -> Result<DiagnosticReport> {
    check_positive("c", c)?;
    sample("lloc", &subject(law), xs, 1.0, |x| {
        let den = local_mass(law, x, c)?;
        let num = local_mass(law, x + 1.0, c).or_else(|e| match e {
            Error::Underflow { .. } => Ok(0.0),
            e => Err(e),
        })?;
        Ok(ratio(Estimate::exact(num), den))
    })
}

/// Local subexponentiality: `law^{2*}((x, x+c]) / law((x, x+c])` against 2.
pub fn check_sloc(law: &dyn Law, c: f64, xs: &[f64]) -> Result<DiagnosticReport> {
    check_positive("c", c)?;
    sample("sloc", &subject(law), xs, 2.0, |x| {
        let den = local_mass(law, x, c)?;
        Ok(ratio(twofold_interval_mass(law, x, c)?, den))
    })
}

/// Second-order residual `(tail2 - 2 tail - 2 m law((x, x+1])) / law((x, x+1])`
/// against 0, with `tail2 - 2 tail = I - tail^2` from the two-fold excess.
pub fn check_s2loc(law: &dyn Law, xs: &[f64]) -> Result<DiagnosticReport> {
    let m = law.mean().require()?;
    sample("s2loc", &subject(law), xs, 0.0, |x| {
        let den = local_mass(law, x, 1.0)?;
        let t = law.tail(x);
        let num = twofold_excess(law, x)? - Estimate::exact(t * t + 2.0 * m * den);
        Ok(ratio(num, den))
    })
}

/// `tail(x)^2 / law((x, x+1])` against 0.
pub fn check_s2loc_hypotheses(law: &dyn Law, xs: &[f64]) -> Result<DiagnosticReport> {
    sample("s2loc-hypotheses", &subject(law), xs, 0.0, |x| {
        let den = local_mass(law, x, 1.0)?;
        let t = law.tail(x);
        Ok(ratio(Estimate::exact(t * t), den))
    })
}

fn density_at(law: &dyn Law, x: f64) -> Result<f64> {
    match law.pdf(x) {
        None => Err(Error::Unsupported("law has no density".into())),
        Some(p) if !(p.abs() >= UNDERFLOW) => Err(Error::Underflow { x }),
        Some(p) => Ok(p),
    }
}

/// Density subexponentiality: `p^{2(x)}(x) / p(x)` against 2.
pub fn check_sd(law: &dyn Law, xs: &[f64]) -> Result<DiagnosticReport> {
    if law.pdf(law.support_start() + 1.0).is_none() {
        return Err(Error::Unsupported("law has no density".into()));
    }
    sample("sd", &subject(law), xs, 2.0, |x| {
        let p = density_at(law, x)?;
        Ok(ratio(density_convolution(law, x)?, p))
    })
}

/// Density-normalised second-order residual `(tail2 - 2 tail - 2 m p(x)) / p(x)` against 0.
pub fn check_s2d(law: &dyn Law, xs: &[f64]) -> Result<DiagnosticReport> {
    if law.pdf(law.support_start() + 1.0).is_none() {
        return Err(Error::Unsupported("law has no density".into()));
    }
    let m = law.mean().require()?;
    sample("s2d", &subject(law), xs, 0.0, |x| {
        let p = density_at(law, x)?;
        let t = law.tail(x);
        let num = twofold_excess(law, x)? - Estimate::exact(t * t + 2.0 * m * p);
        Ok(ratio(num, p))
    })
}

/// Where the convolution powers for power residuals come from.
#[derive(Clone, Copy)]
pub enum PowerSource<'a> {
    /// `mu^{t*}` for real `t > 0` by scaling the Poisson intensity.
    Compound(&'a CompoundPoissonLaw),
    /// Integer folds of an arbitrary law.
    Folds(&'a Arc<dyn Law>),
}

impl fmt::Debug for PowerSource<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerSource::Compound(cp) => write!(f, "{cp:?}"),
            PowerSource::Folds(l) => write!(f, "{l:?}"),
        }
    }
}

fn integer_fold(t: f64) -> Result<usize> {
    if t >= 1.0 && t.fract() == 0.0 && t <= 64.0 {
        Ok(t as usize)
    } else {
        Err(Error::Precondition(format!(
            "power t = {t} of a law that is not compound Poisson must be an integer fold"
        )))
    }
}

/// `mu^{t*}((x, inf)) - t mu((x, inf))` for each `t`, sampled on `xs`.
fn power_excesses(src: PowerSource<'_>, ts: &[f64], xs: &[f64]) -> Result<Vec<Vec<Estimate>>> {
    check_grid(xs)?;
    match src {
        PowerSource::Compound(cp) => ts
            .iter()
            .map(|&t| xs.par_iter().map(|&x| cp.power_excess(t, x)).collect())
            .collect(),
        PowerSource::Folds(law) => {
            let ns: Vec<usize> = ts.iter().map(|&t| integer_fold(t)).collect::<Result<_>>()?;
            let top = *ns.iter().max().unwrap_or(&1);
            let x_max = xs[xs.len() - 1].max(1.0);
            let powers = ConvolutionPowers::build(law.clone(), top.max(2), x_max, TableOptions::default())?;
            let rows: Vec<Vec<Estimate>> = xs
                .par_iter()
                .map(|&x| powers.excesses(top, x))
                .collect::<Result<_>>()?;
            Ok(ns.iter().map(|&n| rows.iter().map(|r| r[n]).collect()).collect())
        }
    }
}

fn source_law(src: PowerSource<'_>) -> (Arc<dyn Law>, f64) {
    match src {
        PowerSource::Compound(cp) => {
            let m = cp.mean().finite().unwrap_or(f64::INFINITY);
            (Arc::new(cp.clone()) as Arc<dyn Law>, m)
        }
        PowerSource::Folds(law) => (law.clone(), law.mean().finite().unwrap_or(f64::INFINITY)),
    }
}

fn power_residual_reports(src: PowerSource<'_>, ts: &[f64], xs: &[f64]) -> Result<Vec<DiagnosticReport>> {
    let (law, m) = source_law(src);
    if !m.is_finite() {
        return Err(Error::InfiniteMean);
    }
    let ex = power_excesses(src, ts, xs)?;
    let subj = format!("{src:?}");
    ts.iter()
        .zip(ex)
        .map(|(&t, d)| {
            let name = format!("power-residual t={t}");
            sample(&name, &subj, xs, 0.0, |x| {
                let i = xs.partition_point(|&z| z < x);
                let den = local_mass(law.as_ref(), x, 1.0)?;
                Ok(ratio(d[i] - Estimate::exact((t * t - t) * m * den), den))
            })
        })
        .collect()
}

/// Residuals `(mu^{t*}((x, inf)) - t tail(x) - (t^2 - t) m mu((x, x+1])) / mu((x, x+1])`
/// for `t = t0` and `t0 + 1`, each against 0.
pub fn check_power_pair(src: PowerSource<'_>, t0: f64, xs: &[f64]) -> Result<Vec<DiagnosticReport>> {
    check_positive("t0", t0)?;
    power_residual_reports(src, &[t0, t0 + 1.0], xs)
}

/// `(mu^{t*}((x, inf)) - t tail(x)) / mu((x, x+1])` against `(t^2 - t) m`.
pub fn check_power_ratio(src: PowerSource<'_>, t: f64, xs: &[f64]) -> Result<DiagnosticReport> {
    let (law, m) = source_law(src);
    if !m.is_finite() {
        return Err(Error::InfiniteMean);
    }
    let d = power_excesses(src, &[t], xs)?.pop().unwrap();
    sample(&format!("power-ratio t={t}"), &format!("{src:?}"), xs, (t * t - t) * m, |x| {
        let i = xs.partition_point(|&z| z < x);
        Ok(ratio(d[i], local_mass(law.as_ref(), x, 1.0)?))
    })
}

/// Target of the compound Poisson ratio in a regime.
pub fn regime_target(rv: &RegVaryingTail) -> Result<f64> {
    Ok(match rv.regime() {
        Regime::FractionalIndex => c_alpha(rv.alpha())?,
        Regime::UnitIndexInfiniteMean | Regime::UnitIndexFiniteMean => 1.0,
        Regime::ZeroIndex => -0.5,
    })
}

/// `int_1^x nu((u, inf)) du` of the Lévy measure `delta * jump` on `(c, inf)`.
fn integrated_levy_tail(cp: &CompoundPoissonLaw, x: f64) -> Result<Estimate> {
    let c = cp.cutoff();
    let delta = cp.delta();
    let mut acc = Estimate::exact(if c > 1.0 { delta * (c.min(x) - 1.0) } else { 0.0 });
    let lo = c.max(1.0);
    if x > lo {
        let jump = cp.jump().clone();
        let (a, b) = (lo.ln(), x.ln());
        let g = |v: f64| {
            let u = v.exp();
            jump.tail(u) * u
        };
        let mut pts = vec![a];
        let n = ((b - a) / 0.5).ceil().max(1.0) as usize;
        pts.extend((1..n).map(|k| a + (b - a) * k as f64 / n as f64));
        pts.push(b);
        let est = quad::integrate_pts(g, &pts, &QuadOptions::rel(1e-11))?;
        acc = acc + est.scale(delta);
    }
    Ok(acc)
}

/// Ratio of `mu((x, inf)) - nu((x, inf))` to the regime's normalizer for a
/// compound Poisson law whose jump density is declared regularly varying by
/// `rv`: `q(x) int_1^x nu_tail` (index in (0, 1], divergent l*), `q(x) m`
/// (index 1, finite l*), or `nu_tail(x)^2` (index 0). Targets are `C(alpha)`,
/// 1, 1 and -1/2.
pub fn check_levy_difference(cp: &CompoundPoissonLaw, rv: &RegVaryingTail, xs: &[f64]) -> Result<DiagnosticReport> {
    let jump = cp.jump().clone();
    let c = cp.cutoff();
    let shape = |x: f64| (-(rv.alpha() + 1.0) * x.ln()).exp() * rv.slowly_varying().eval(x);
    let probe = |x: f64| -> Result<f64> {
        let p = jump
            .pdf(x)
            .ok_or_else(|| Error::Regime("jump law has no density".into()))?;
        Ok(p / shape(x))
    };
    let (r1, r2) = (probe(1e3 * c.max(1.0))?, probe(1e6 * c.max(1.0))?);
    if !((r2 / r1 - 1.0).abs() < 0.1) {
        return Err(Error::Regime(format!(
            "jump density is not x^(-{}-1) l(x): shape ratio drifts from {r1} to {r2}",
            rv.alpha()
        )));
    }
    let target = regime_target(rv)?;
    let regime = rv.regime();
    let m = match regime {
        Regime::UnitIndexFiniteMean => cp.mean().require()?,
        Regime::ZeroIndex if !rv.karamata_finite() => {
            return Err(Error::Regime("index 0 needs a convergent l_*".into()));
        }
        _ => f64::NAN,
    };
    let delta = cp.delta();
    let name = format!("levy-difference {regime}");
    sample(&name, &format!("{cp:?}"), xs, target, |x| {
        if x <= c.max(1.0) {
            return Err(Error::Domain { what: "levy difference", x });
        }
        let num = cp.excess_over_levy(x)?;
        let q = delta * jump.pdf(x).unwrap_or(0.0);
        let den = match regime {
            Regime::FractionalIndex | Regime::UnitIndexInfiniteMean => {
                let i = integrated_levy_tail(cp, x)?;
                let den = q * i.value;
                let r = ratio(num, den);
                return if den.abs() < UNDERFLOW {
                    Err(Error::Underflow { x })
                } else {
                    Ok(Estimate::new(r.value, r.error + r.value.abs() * i.rel_error()))
                };
            }
            Regime::UnitIndexFiniteMean => q * m,
            Regime::ZeroIndex => {
                let nu = cp.levy_tail(x);
                nu * nu
            }
        };
        if den.abs() < UNDERFLOW {
            return Err(Error::Underflow { x });
        }
        Ok(ratio(num, den))
    })
}

/// Named closed-form examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Example {
    Lognormal,
    Weibull(f64),
    /// Pareto with `alpha > 1`.
    Pareto(f64),
    /// Pareto with `0 < alpha <= 1`.
    ParetoRv(f64),
}

impl Example {
    pub fn all() -> Vec<Example> {
        vec![
            Example::Lognormal,
            Example::Weibull(0.5),
            Example::Pareto(2.0),
            Example::ParetoRv(1.0),
        ]
    }

    pub fn law(&self) -> Result<AnalyticLaw> {
        match *self {
            Example::Lognormal => Ok(AnalyticLaw::lognormal()),
            Example::Weibull(b) => AnalyticLaw::weibull(b),
            Example::Pareto(a) if a > 1.0 => AnalyticLaw::pareto(a),
            Example::ParetoRv(a) if a > 0.0 && a <= 1.0 => AnalyticLaw::pareto(a),
            Example::Pareto(a) | Example::ParetoRv(a) => Err(Error::InvalidParameter {
                name: "alpha",
                value: a,
                reason: "pareto needs alpha > 1, pareto_rv needs 0 < alpha <= 1",
            }),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Example::Lognormal => write!(f, "lognormal"),
            Example::Weibull(b) => write!(f, "weibull:{b}"),
            Example::Pareto(a) => write!(f, "pareto:{a}"),
            Example::ParetoRv(a) => write!(f, "pareto_rv:{a}"),
        }
    }
}

impl FromStr for Example {
    type Err = Error;

    /// `lognormal`, `weibull[:beta]`, `pareto[:alpha]`, `pareto_rv[:alpha]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => {
                    let a = a.rsplit('=').next().unwrap_or(a);
                    a.parse().map_err(|_| Error::Parse(format!("bad example parameter '{a}'")))
                }
            }
        };
        let ex = match name {
            "lognormal" if arg.is_none() => Example::Lognormal,
            "weibull" => Example::Weibull(num(0.5)?),
            "pareto" => Example::Pareto(num(2.0)?),
            "pareto_rv" => Example::ParetoRv(num(1.0)?),
            _ => return Err(Error::Parse(format!("unknown example '{s}'"))),
        };
        ex.law()?;
        Ok(ex)
    }
}

/// Reports and per-claim errors of one example run.
#[derive(Debug)]
pub struct ValidationBundle {
    pub example: Example,
    pub reports: Vec<DiagnosticReport>,
    pub errors: Vec<(String, Error)>,
}

impl ValidationBundle {
    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Failed)
    }

    pub fn all_converged(&self) -> bool {
        self.errors.is_empty() && self.reports.iter().all(|r| r.verdict == Verdict::Converged)
    }
}

/// Run every claim of a named example on `xs`: class checks, the second-order
/// residual, and the tails of the two- and three-fold powers against their
/// predicted corrections. Errors of individual claims are collected.
pub fn validate_example(ex: Example, xs: &[f64]) -> Result<ValidationBundle> {
    check_grid(xs)?;
    let law = ex.law()?;
    let shared: Arc<dyn Law> = Arc::new(law);
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut record = |claim: &str, r: Result<Vec<DiagnosticReport>>| match r {
        Ok(v) => reports.extend(v),
        Err(e) => errors.push((claim.to_string(), e)),
    };
    record("lloc", check_lloc(&law, 1.0, xs).map(|r| vec![r]));
    record("sloc", check_sloc(&law, 1.0, xs).map(|r| vec![r]));
    let src = PowerSource::Folds(&shared);
    match ex {
        Example::ParetoRv(alpha) => {
            let rv = RegVaryingTail::pareto(alpha)?;
            let x_max = xs[xs.len() - 1].max(1.0);
            let res = ConvolutionPowers::build(shared.clone(), 3, x_max, TableOptions::default()).and_then(|powers| {
                [2.0, 3.0]
                    .iter()
                    .map(|&t| {
                        let pred = predict_rv(&rv, None, t)?.power;
                        sample(&format!("power-correction t={t}"), &subject(&law), xs, 1.0, |x| {
                            let d = powers.excess(t as usize, x)?;
                            let corr = pred.correction(x);
                            if corr.abs() < UNDERFLOW {
                                return Err(Error::Underflow { x });
                            }
                            Ok(ratio(d, corr))
                        })
                    })
                    .collect()
            });
            record("power corrections", res);
        }
        _ => {
            record("s2loc", check_s2loc(&law, xs).map(|r| vec![r]));
            record("s2loc-hypotheses", check_s2loc_hypotheses(&law, xs).map(|r| vec![r]));
            record(
                "power ratios",
                [2.0, 3.0].iter().map(|&t| check_power_ratio(src, t, xs)).collect(),
            );
            let rel = example_relative_correction(&law)?;
            let res = power_excesses(src, &[2.0, 3.0], xs).and_then(|ex| {
                [2.0, 3.0]
                    .iter()
                    .zip(ex)
                    .map(|(&t, d)| {
                        // relative power correction against (t - 1) times the closed form
                        sample(&format!("relative-power-correction t={t}"), &subject(&law), xs, 1.0, |x| {
                            let i = xs.partition_point(|&z| z < x);
                            let want = -(t - 1.0) * rel(x) * t * law.tail(x);
                            if want.abs() < UNDERFLOW {
                                return Err(Error::Underflow { x });
                            }
                            Ok(ratio(d[i], want))
                        })
                    })
                    .collect()
            });
            record("relative power corrections", res);
        }
    }
    Ok(ValidationBundle {
        example: ex,
        reports,
        errors,
    })
}
