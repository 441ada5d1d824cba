use std::str::FromStr;
use std::sync::Arc;

use serde_json::json;
use subexp::asym::{
    predict_compound, predict_density_mu_from_nu, predict_density_nu_from_mu, predict_mu_from_nu,
    predict_nu_from_mu, predict_power, predict_rv, RegVaryingTail, Relation, SecondOrderPrediction,
};
use subexp::conv::{tail_convolve, CompoundWeights, ConvolutionPowers, TableOptions};
use subexp::diag::{
    check_levy_difference, check_lloc, check_power_pair, check_power_ratio, check_s2d, check_s2loc,
    check_s2loc_hypotheses, check_sd, check_sloc, validate_example, DiagnosticReport, Example, PowerSource, Verdict,
    DEFAULT_TOLERANCE,
};
use subexp::infdiv::{invert_levy, jump_grid, laplace, sigma_from_spec, CompoundOptions, CompoundPoissonLaw, GridSpec, LevySpec};
use subexp::laws::{parse_law, parse_slowly_varying, Law, TailFunction};
use subexp::Error;

use crate::config::{parse_grid, parse_list, positive};
use crate::output::{emit, emit_json, reports_csv, reports_json, summary, Table};
use crate::{CliError, ConvolveArgs, DiagnoseArgs, Format, InvertArgs, PredictArgs, ValidateArgs};

fn missing(what: &str) -> CliError {
    CliError::Config(format!("{what} is required"))
}

fn write_reports(reports: &[(String, DiagnosticReport)], format: Option<Format>, out: Option<&std::path::Path>) -> Result<(), CliError> {
    summary(reports);
    match format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&reports_csv(reports), out),
        Format::Json => emit_json(&reports_json(reports), out),
    }
}

fn verdict_code(reports: &[(String, DiagnosticReport)]) -> u8 {
    if reports.iter().any(|(_, r)| r.verdict == Verdict::Failed) {
        1
    } else {
        0
    }
}

fn integer_power(t: f64) -> Result<f64, CliError> {
    if t >= 1.0 && t.fract() == 0.0 {
        Ok(t)
    } else {
        Err(CliError::Config(format!("--t must be a positive integer for a closed-form law, got {t}")))
    }
}

pub fn diagnose(a: DiagnoseArgs) -> Result<u8, CliError> {
    let class = a.class.clone().ok_or_else(|| missing("--class"))?;
    let xs = parse_grid(a.x.as_deref().unwrap_or("log:10,1000,24"))?;
    let tol = positive("tolerance", a.tolerance.unwrap_or(DEFAULT_TOLERANCE))?;
    let c = positive("c", a.c.unwrap_or(1.0))?;
    let top = xs[xs.len() - 1];
    let result = match (&a.law, &a.jump) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --law or --jump, not both".into())),
        (None, None) => return Err(missing("--law or --jump")),
        (Some(spec), None) => {
            let law = parse_law(spec)?;
            let shared: Arc<dyn Law> = Arc::new(law);
            let folds = PowerSource::Folds(&shared);
            match class.as_str() {
                "lloc" => check_lloc(&law, c, &xs).map(|r| vec![r]),
                "sloc" => check_sloc(&law, c, &xs).map(|r| vec![r]),
                "s2loc" => check_s2loc(&law, &xs).map(|r| vec![r]),
                "s2loc-hypotheses" => check_s2loc_hypotheses(&law, &xs).map(|r| vec![r]),
                "sd" => check_sd(&law, &xs).map(|r| vec![r]),
                "s2d" => check_s2d(&law, &xs).map(|r| vec![r]),
                "power-ratio" => check_power_ratio(folds, integer_power(a.t.unwrap_or(2.0))?, &xs).map(|r| vec![r]),
                "power-pair" => check_power_pair(folds, integer_power(a.t.unwrap_or(1.0))?, &xs),
                "levy-difference" => {
                    return Err(CliError::Config("levy-difference needs a compound Poisson law (--jump)".into()))
                }
                other => return Err(CliError::Config(format!("unknown class `{other}`"))),
            }
        }
        (None, Some(jump)) => {
            let delta = a.delta.unwrap_or(0.5);
            let cutoff = a.cutoff.unwrap_or(1.0);
            let spec = LevySpec::parse(cutoff, delta, jump)?;
            let t = a.t.unwrap_or(if class == "power-pair" { 1.0 } else { 2.0 });
            let mut opts = CompoundOptions::default()
                .with_x_max(a.x_max.unwrap_or((top + 1.0 + c) * 1.01))
                .with_max_t(if class.starts_with("power") { t + 1.0 } else { 1.0 });
            if let Some(b) = a.budget {
                opts.budget = positive("budget", b)?;
            }
            let cp = CompoundPoissonLaw::new(&spec, opts)?;
            match class.as_str() {
                "lloc" => check_lloc(&cp, c, &xs).map(|r| vec![r]),
                "sloc" => check_sloc(&cp, c, &xs).map(|r| vec![r]),
                "power-ratio" => check_power_ratio(PowerSource::Compound(&cp), t, &xs).map(|r| vec![r]),
                "power-pair" => check_power_pair(PowerSource::Compound(&cp), t, &xs),
                "levy-difference" => {
                    let alpha = a.alpha.ok_or_else(|| missing("--alpha"))?;
                    let l = parse_slowly_varying(a.l.as_deref().unwrap_or("one"))?;
                    let rv = RegVaryingTail::new(alpha, l)?;
                    check_levy_difference(&cp, &rv, &xs).map(|r| vec![r])
                }
                "s2loc" | "s2loc-hypotheses" | "sd" | "s2d" => {
                    return Err(CliError::Config(format!(
                        "class `{class}` needs a closed-form law (--law)"
                    )))
                }
                other => return Err(CliError::Config(format!("unknown class `{other}`"))),
            }
        }
    };
    let reports = match result {
        Ok(v) => v,
        Err(Error::NormalizerUnderflow { x, partial }) => {
            // keep what was sampled before the normalizer vanished
            let partial = partial.with_tolerance(tol);
            let decided = partial.xs.len() >= 4 && partial.verdict == Verdict::Failed;
            let part = vec![(class.clone(), partial)];
            write_reports(&part, a.format, a.out.as_deref())?;
            eprintln!("sampling stopped at x = {x}: normalizer underflow");
            if decided {
                return Ok(1);
            }
            return Err(Error::Underflow { x }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let reports: Vec<(String, DiagnosticReport)> = reports
        .into_iter()
        .map(|r| (class.clone(), r.with_tolerance(tol)))
        .collect();
    write_reports(&reports, a.format, a.out.as_deref())?;
    Ok(verdict_code(&reports))
}

fn law_arg(law: &Option<String>) -> Result<Arc<dyn Law>, CliError> {
    let spec = law.as_deref().ok_or_else(|| missing("--law"))?;
    Ok(Arc::new(parse_law(spec)?))
}

pub fn predict(a: PredictArgs) -> Result<u8, CliError> {
    let relation = Relation::from_str(a.relation.as_deref().ok_or_else(|| missing("--relation"))?)?;
    let xs = parse_grid(a.x.as_deref().unwrap_or("log:10,10000,16"))?;
    let mean = || a.mean.ok_or_else(|| missing("--mean"));
    let mut regime = None;
    let pred: SecondOrderPrediction = match relation {
        Relation::NuFromMu => predict_nu_from_mu(law_arg(&a.law)?)?,
        Relation::MuFromNu => predict_mu_from_nu(TailFunction::from_law(law_arg(&a.law)?), mean()?)?,
        Relation::Power => predict_power(law_arg(&a.law)?, a.t.unwrap_or(2.0))?,
        Relation::Compound => {
            let w = CompoundWeights::poisson(a.delta.ok_or_else(|| missing("--delta"))?)?;
            predict_compound(&w, law_arg(&a.law)?)?
        }
        Relation::DensityNuFromMu => predict_density_nu_from_mu(law_arg(&a.law)?)?,
        Relation::DensityMuFromNu => {
            let nu = law_arg(&a.law)?;
            let density = nu.clone();
            predict_density_mu_from_nu(TailFunction::from_law(nu), move |x| density.pdf(x).unwrap_or(0.0), mean()?)?
        }
        Relation::RegularVariation => {
            let alpha = a.alpha.ok_or_else(|| missing("--alpha"))?;
            let l = parse_slowly_varying(a.l.as_deref().unwrap_or("one"))?;
            let rv = RegVaryingTail::new(alpha, l)?;
            // the Lévy tail form unless a power is asked for
            let p = predict_rv(&rv, a.mean, a.t.unwrap_or(1.0))?;
            regime = Some(p.regime);
            eprintln!("regime: {}", p.regime);
            if a.t.is_some() {
                p.power
            } else {
                p.nu_from_mu
            }
        }
    };
    let mut table = Table::new(vec!["x", "leading", "normalizer", "correction", "prediction", "relative_correction"]);
    for &x in &xs {
        table.push(vec![
            x,
            pred.leading(x),
            pred.normalizer(x),
            pred.correction(x),
            pred.prediction(x),
            pred.relative_correction(x),
        ]);
    }
    eprintln!("{}: coefficient {}", pred.description(), pred.coefficient());
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&table.to_csv(), a.out.as_deref())?,
        Format::Json => emit_json(
            &json!({
                "relation": relation.name(),
                "description": pred.description(),
                "coefficient": pred.coefficient(),
                "regime": regime.map(|r| r.name()),
                "rows": table.to_json(),
            }),
            a.out.as_deref(),
        )?,
    }
    Ok(0)
}

pub fn invert(a: InvertArgs) -> Result<u8, CliError> {
    let jump = a.jump.as_deref().ok_or_else(|| missing("--jump"))?;
    let delta = a.delta.unwrap_or(0.5);
    let spec = LevySpec::parse(a.cutoff.unwrap_or(1.0), delta, jump)?;
    let defaults = GridSpec::default();
    let grid = GridSpec {
        step: positive("step", a.step.unwrap_or(defaults.step))?,
        cells: a.cells.unwrap_or(defaults.cells),
    };
    let ts = parse_list(a.laplace_t.as_deref().unwrap_or("0.1,0.3,1,3,10"), "laplace_t")?;
    let nu = jump_grid(&spec, grid)?;
    let sigma = sigma_from_spec(&spec, grid)?;
    let inv = invert_levy(&sigma, delta)?;
    let law = spec.jump_law()?;
    let mut table = Table::new(vec!["t", "recovered", "jump_grid", "gap", "jump_exact", "discretization_error"]);
    for &t in &ts {
        let rec = laplace(&inv.measure, t)?;
        let on_grid = laplace(&nu, t)?;
        let exact = laplace(law.as_ref(), t)?;
        table.push(vec![t, rec.value, on_grid.value, (rec.value - on_grid.value).abs(), exact.value, rec.error]);
    }
    eprintln!(
        "series terms {}, clamped negative mass {:e}, truncation bound {:e}",
        inv.terms, inv.clamped_mass, inv.truncation_bound
    );
    if let Some(p) = &a.measure {
        std::fs::write(p, serde_json::to_string_pretty(&inv.measure)?)?;
    }
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&table.to_csv(), a.out.as_deref())?,
        Format::Json => emit_json(
            &json!({
                "terms": inv.terms,
                "clamped_mass": inv.clamped_mass,
                "truncation_bound": inv.truncation_bound,
                "rows": table.to_json(),
            }),
            a.out.as_deref(),
        )?,
    }
    Ok(0)
}

pub fn validate(a: ValidateArgs) -> Result<u8, CliError> {
    let which = a.example.as_deref().unwrap_or("all");
    let examples = if which == "all" {
        Example::all()
    } else {
        vec![Example::from_str(which)?]
    };
    let xs = parse_grid(a.x.as_deref().unwrap_or("log:10,1000,7"))?;
    let tol = a.tolerance.map(|t| positive("tolerance", t)).transpose()?;
    let mut reports = Vec::new();
    let mut worst_error = 0u8;
    for ex in examples {
        let bundle = validate_example(ex, &xs)?;
        for (claim, e) in &bundle.errors {
            eprintln!("{ex} {claim}: {e}");
            worst_error = worst_error.max(CliError::Core(clone_kind(e)).exit_code());
        }
        for r in bundle.reports {
            let r = match tol {
                Some(t) => r.with_tolerance(t),
                None => r,
            };
            reports.push((ex.to_string(), r));
        }
    }
    write_reports(&reports, a.format, a.out.as_deref())?;
    Ok(if worst_error > 0 { worst_error } else { verdict_code(&reports) })
}

/// An error of the same precondition/numerical kind, for exit-code purposes.
fn clone_kind(e: &Error) -> Error {
    if e.is_precondition() {
        Error::Precondition(e.to_string())
    } else {
        Error::Underflow { x: f64::NAN }
    }
}

pub fn convolve(a: ConvolveArgs) -> Result<u8, CliError> {
    let law = law_arg(&a.law)?;
    let xs = parse_grid(a.x.as_deref().unwrap_or("log:1,1000,16"))?;
    let table = match &a.with {
        Some(b) => {
            let other = parse_law(b)?;
            let tail = TailFunction::from_law(law.clone());
            let mut t = Table::new(vec!["x", "tail", "err_estimate"]);
            for &x in &xs {
                let e = tail_convolve(&tail, &other, x)?;
                t.push(vec![x, e.value, e.error]);
            }
            t
        }
        None => {
            let n = a.n.unwrap_or(2);
            if n == 0 {
                return Err(CliError::Config("--n must be at least 1".into()));
            }
            let powers = ConvolutionPowers::build(law.clone(), n.max(2), xs[xs.len() - 1], TableOptions::default())?;
            let mut t = Table::new(vec!["x", "tail", "nfold_tail", "excess", "err_estimate"]);
            for &x in &xs {
                let ex = powers.excess(n, x)?;
                let lead = n as f64 * law.tail(x);
                t.push(vec![x, law.tail(x), lead + ex.value, ex.value, ex.error]);
            }
            t
        }
    };
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&table.to_csv(), a.out.as_deref())?,
        Format::Json => emit_json(&table.to_json(), a.out.as_deref())?,
    }
    Ok(0)
}
