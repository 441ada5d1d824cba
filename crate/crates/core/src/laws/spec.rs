//! Text specifications of laws, e.g. `pareto:alpha=3` or `rv:alpha=0.25,l=one`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AnalyticLaw, GriddedMeasure, Law, PointMass, RegularlyVaryingJump, RestrictedLaw, SlowlyVarying};
use crate::error::{Error, Result};

fn split_spec(s: &str) -> Result<(String, BTreeMap<String, String>)> {
    let s = s.trim();
    let (family, rest) = match s.split_once(':') {
        Some((f, r)) => (f, r),
        None => (s, ""),
    };
    let mut params = BTreeMap::new();
    for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))?;
        if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("duplicate parameter `{k}`")));
        }
    }
    Ok((family.trim().to_ascii_lowercase(), params))
}

struct Params {
    family: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn num(&mut self, key: &str) -> Result<f64> {
        let raw = self
            .map
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("`{}` needs parameter `{key}`", self.family)))?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("parameter `{key}` is not a number: `{raw}`")))
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::Parse(format!("unknown parameter `{k}` for `{}`", self.family))),
            None => Ok(()),
        }
    }
}

fn analytic_from(p: &mut Params) -> Result<Option<AnalyticLaw>> {
    let law = match p.family.as_str() {
        "lognormal" => AnalyticLaw::lognormal(),
        "weibull" => AnalyticLaw::weibull(p.num("beta")?)?,
        "pareto" => AnalyticLaw::pareto(p.num("alpha")?)?,
        "exp" | "exponential" => AnalyticLaw::exponential(p.num("rate")?)?,
        _ => return Ok(None),
    };
    Ok(Some(law))
}

/// Parse `pareto:alpha=<r>`, `weibull:beta=<r>`, `lognormal` or `exp:rate=<r>`.
pub fn parse_law(s: &str) -> Result<AnalyticLaw> {
    let (family, map) = split_spec(s)?;
    let mut p = Params { family, map };
    let law = analytic_from(&mut p)?.ok_or_else(|| Error::Parse(format!("unknown law `{s}`")))?;
    p.finish()?;
    Ok(law)
}

/// Parse a slowly varying factor: `one`, a number, or `logpow:<p>` for `(ln x)^p`.
pub fn parse_slowly_varying(s: &str) -> Result<SlowlyVarying> {
    let s = s.trim();
    if s == "one" {
        return Ok(SlowlyVarying::one());
    }
    if let Some(p) = s.strip_prefix("logpow:") {
        let power = p
            .parse()
            .map_err(|_| Error::Parse(format!("bad log power `{p}`")))?;
        return Ok(SlowlyVarying::log_power(power));
    }
    s.parse()
        .map(SlowlyVarying::Constant)
        .map_err(|_| Error::Parse(format!("unknown slowly varying factor `{s}`")))
}

/// Parse a jump law living on `(cutoff, inf)`.
///
/// Accepted forms: `point:at=<a>`, `powerlaw:alpha=<r>` (`tail = (x/c)^-alpha`),
/// `rv:alpha=<r>,l=<factor>` (density proportional to `x^(-alpha-1) l(x)`),
/// or any analytic law string, which is then conditioned on `(cutoff, inf)`.
pub fn parse_jump(s: &str, cutoff: f64) -> Result<Arc<dyn Law>> {
    let (family, map) = split_spec(s)?;
    let mut p = Params { family, map };
    let law: Arc<dyn Law> = match p.family.as_str() {
        "point" => {
            let at = p.num("at")?;
            if !(at > cutoff) {
                return Err(Error::Precondition(format!(
                    "point jump at {at} must lie above the cutoff {cutoff}"
                )));
            }
            Arc::new(PointMass::new(at)?)
        }
        "powerlaw" => Arc::new(RegularlyVaryingJump::power_law(p.num("alpha")?, cutoff)?),
        "rv" => {
            let alpha = p.num("alpha")?;
            let l = match p.text("l") {
                Some(t) => parse_slowly_varying(&t)?,
                None => SlowlyVarying::one(),
            };
            Arc::new(RegularlyVaryingJump::new(alpha, l, cutoff)?)
        }
        _ => match analytic_from(&mut p)? {
            Some(law) => Arc::new(RestrictedLaw::new(law, cutoff)?),
            None => return Err(Error::Parse(format!("unknown jump law `{s}`"))),
        },
    };
    p.finish()?;
    Ok(law)
}

/// Jump law as it appears in configuration files: a spec string or an explicit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JumpSpec {
    Text(String),
    Grid(GriddedMeasure),
}

impl JumpSpec {
    pub fn build(&self, cutoff: f64) -> Result<Arc<dyn Law>> {
        match self {
            JumpSpec::Text(s) => parse_jump(s, cutoff),
            JumpSpec::Grid(g) => {
                if g.origin() < cutoff {
                    return Err(Error::Precondition(format!(
                        "gridded jump law starts at {} below the cutoff {cutoff}",
                        g.origin()
                    )));
                }
                if g.atom() != 0.0 && g.origin() <= cutoff {
                    return Err(Error::Precondition("jump law has an atom at the cutoff".into()));
                }
                if (g.total() - 1.0).abs() > 1e-12 {
                    return Err(Error::Precondition(format!(
                        "gridded jump law has total mass {}, expected 1",
                        g.total()
                    )));
                }
                Ok(Arc::new(g.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_four_families() {
        assert_eq!(parse_law("pareto:alpha=3").unwrap(), AnalyticLaw::Pareto { alpha: 3.0 });
        assert_eq!(parse_law("weibull:beta=0.5").unwrap(), AnalyticLaw::Weibull { beta: 0.5 });
        assert_eq!(parse_law("lognormal").unwrap(), AnalyticLaw::Lognormal);
        assert_eq!(parse_law("exp:rate=1").unwrap(), AnalyticLaw::Exponential { rate: 1.0 });
        assert!(parse_law("weibull:beta=1.5").unwrap_err().is_precondition());
        assert!(matches!(parse_law("cauchy"), Err(Error::Parse(_))));
        assert!(matches!(parse_law("pareto:alpha=2,beta=1"), Err(Error::Parse(_))));
        assert!(matches!(parse_law("pareto"), Err(Error::Parse(_))));
    }

    #[test]
    fn display_round_trips() {
        for s in ["pareto:alpha=3", "weibull:beta=0.5", "lognormal", "exp:rate=1"] {
            let law = parse_law(s).unwrap();
            assert_eq!(parse_law(&law.to_string()).unwrap(), law);
        }
    }

    #[test]
    fn jump_laws() {
        let j = parse_jump("powerlaw:alpha=2", 1.0).unwrap();
        assert!((j.tail(10.0) - 0.01).abs() < 1e-16);
        let j = parse_jump("rv:alpha=0,l=logpow:-2", std::f64::consts::E).unwrap();
        assert!((j.tail(1e4) - 1.0 / 1e4f64.ln()).abs() < 1e-15);
        let j = parse_jump("point:at=2", 1.0).unwrap();
        assert_eq!(j.atoms(), vec![(2.0, 1.0)]);
        assert!(parse_jump("point:at=0.5", 1.0).is_err());
        let j = parse_jump("pareto:alpha=2", 1.0).unwrap();
        assert_eq!(j.tail(1.0), 1.0);
    }

    #[test]
    fn jump_spec_json_forms() {
        let a: JumpSpec = serde_json::from_str(r#""powerlaw:alpha=2""#).unwrap();
        assert_eq!(a, JumpSpec::Text("powerlaw:alpha=2".into()));
        let g = r#"{"origin":1,"step":1,"atom":0,"masses":[0.5,0.5],"overflow":0,"signed":false}"#;
        let b: JumpSpec = serde_json::from_str(g).unwrap();
        assert!(b.build(1.0).is_ok());
        assert!(b.build(2.0).is_err());
    }
}
