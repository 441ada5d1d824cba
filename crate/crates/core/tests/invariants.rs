use std::sync::Arc;

use subexp::asym::{c_alpha, predict_rv, RegVaryingTail};
use subexp::conv::{convolve_grid, tail_convolve, twofold_excess, CompoundWeights};
use subexp::diag::{check_lloc, check_power_pair, log_grid, validate_example, Example, PowerSource, Verdict};
use subexp::infdiv::{invert_levy, jump_grid, laplace, sigma_from_spec, CompoundOptions, CompoundPoissonLaw, GridSpec, LevySpec};
use subexp::laws::{discretize, AnalyticLaw, DiscreteLaw, Law, TailFunction};
use subexp::quad::{integrate_pts, QuadOptions};

#[test]
fn mean_equals_integrated_tail() {
    let p3 = AnalyticLaw::pareto(3.0).unwrap();
    let w = AnalyticLaw::weibull(0.5).unwrap();
    let ln = AnalyticLaw::lognormal();
    // Pareto's remainder past X is closed form; the others are negligible by then
    let cases: [(&AnalyticLaw, f64, f64); 3] = [
        (&p3, 1e4, 0.5 * (1.0f64 + 1e4).powi(-2)),
        (&w, 1e4, 0.0),
        (&ln, 40f64.exp(), 0.0),
    ];
    for (law, top, remainder) in cases {
        let head = integrate_pts(|x| law.tail(x), &[0.0, 0.5, 1.0], &QuadOptions::rel(1e-12)).unwrap();
        let b = top.ln();
        let pts: Vec<f64> = (0..=64).map(|k| b * k as f64 / 64.0).collect();
        let body = integrate_pts(|v: f64| law.tail(v.exp()) * v.exp(), &pts, &QuadOptions::rel(1e-12)).unwrap();
        let total = head.value + body.value + remainder;
        let m = law.mean().finite().unwrap();
        assert!((total / m - 1.0).abs() < 1e-6, "{law:?}: {total} vs {m}");
    }
}

#[test]
fn grid_and_quadrature_backends_agree() {
    let p3 = Arc::new(AnalyticLaw::pareto(3.0).unwrap());
    let h = 0.02;
    let g = discretize(p3.as_ref(), 0.0, h, 5000).unwrap();
    let two = convolve_grid(&g, &g).unwrap();
    let a = TailFunction::from_law(p3.clone());
    for x in [5.0, 20.0, 80.0] {
        let quad = tail_convolve(&a, p3.as_ref(), x).unwrap().value;
        let grid = two.tail(x);
        let tol = (3.0 * h / x).max(1e-8);
        assert!((grid / quad - 1.0).abs() <= tol, "x = {x}: {grid} vs {quad}");
    }
}

#[test]
fn subtraction_and_identity_agree_where_subtraction_is_meaningful() {
    let mut compared = 0;
    for law in [AnalyticLaw::pareto(3.0).unwrap(), AnalyticLaw::weibull(0.5).unwrap()] {
        let shared: Arc<dyn Law> = Arc::new(law);
        let a = TailFunction::from_law(shared.clone());
        for x in [10.0, 100.0, 1000.0] {
            let t = shared.tail(x);
            let two = tail_convolve(&a, shared.as_ref(), x).unwrap();
            let direct = two.value - 2.0 * t;
            let direct_err = two.error + 4.0 * f64::EPSILON * two.value;
            let ex = twofold_excess(shared.as_ref(), x).unwrap();
            let identity = ex.value - t * t;
            if direct.abs() >= 100.0 * direct_err {
                compared += 1;
                let gap = (direct - identity).abs();
                assert!(gap <= 10.0 * (direct_err + ex.error), "{law:?} at {x}: {direct} vs {identity}");
            }
        }
    }
    assert!(compared >= 3);
}

#[test]
fn poisson_weights_have_factorial_moments() {
    for delta in [0.1, 0.5, 0.69, 2.0] {
        let w = CompoundWeights::poisson(delta).unwrap();
        let sum: f64 = w.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-13);
        assert!((w.first_moment() - delta).abs() <= 1e-12);
        assert!((w.second_factorial_moment() - delta * delta).abs() <= 1e-12);
    }
}

fn lattice_compound(delta: f64) -> CompoundPoissonLaw {
    let spec = LevySpec::parse(1.0, delta, "point:at=2").unwrap();
    CompoundPoissonLaw::new(&spec, CompoundOptions::default().with_x_max(60.0)).unwrap()
}

#[test]
fn powers_form_a_semigroup() {
    let cp = lattice_compound(0.5);
    let one = cp.power(1.0).unwrap();
    // atoms sit on cell right ends, so compare at cell boundaries; the weight
    // truncation budget is absolute, so stay where the tail dwarfs it
    let cells = 64;
    let grid = |law: &CompoundPoissonLaw| discretize(law, 0.0, 1.0, cells).unwrap();
    for (s, t) in [(0.5, 0.5), (1.0, 1.0), (1.0, 2.0)] {
        let sum = convolve_grid(&grid(&cp.power(s).unwrap()), &grid(&cp.power(t).unwrap())).unwrap();
        let direct = cp.power(s + t).unwrap();
        for x in [1.0, 3.0, 9.0] {
            let want = direct.try_tail(x).unwrap().value;
            assert!((sum.tail(x) / want - 1.0).abs() <= 1e-8, "s = {s}, t = {t}, x = {x}");
        }
    }
    for x in [0.5, 7.5] {
        assert_eq!(one.try_tail(x).unwrap().value, cp.try_tail(x).unwrap().value);
    }
}

#[test]
fn inversion_recovers_restricted_weibull() {
    let spec = LevySpec::parse(1.0, 0.6, "weibull:beta=0.5").unwrap();
    let grid = GridSpec::default();
    let nu = jump_grid(&spec, grid).unwrap();
    let inv = invert_levy(&sigma_from_spec(&spec, grid).unwrap(), 0.6).unwrap();
    for t in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let d = laplace(&inv.measure, t).unwrap().value - laplace(&nu, t).unwrap().value;
        assert!(d.abs() <= 1e-6, "t = {t}: {d}");
    }
    assert!(inv.clamped_mass <= 1e-10);
}

#[test]
fn regular_variation_matches_the_compound_form() {
    // l = 1: the fractional-index correction against C(alpha) mu((x, x+1]) int_1^x tail;
    // the lower limit of the integral fades like x^(alpha - 1)
    for (alpha, x) in [(0.25, 1e4), (0.75, 1e6)] {
        let x: f64 = x;
        let law = AnalyticLaw::pareto(alpha).unwrap();
        let pred = predict_rv(&RegVaryingTail::pareto(alpha).unwrap(), None, 1.0).unwrap().nu_from_mu;
        let integrated = ((1.0 + x).powf(1.0 - alpha) - 2f64.powf(1.0 - alpha)) / (1.0 - alpha);
        let compound_form = -c_alpha(alpha).unwrap() * law.interval_mass(x, 1.0) * integrated;
        let got = pred.correction(x);
        assert!((got / compound_form - 1.0).abs() <= 0.05, "alpha = {alpha}: {got} vs {compound_form}");
    }
}

#[test]
fn alternating_lattice_law_fails_local_long_tail() {
    let atoms: Vec<(f64, f64)> = (1..=2000)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 0 { 1.0 } else { -1.0 };
            (k, k.powi(-4) * (1.0 + 0.9 * sign))
        })
        .collect();
    let law = DiscreteLaw::normalized(atoms).unwrap();
    let xs: Vec<f64> = (0..12).map(|i| 10.5 + 10.0 * i as f64).collect();
    let r = check_lloc(&law, 1.0, &xs).unwrap();
    assert_eq!(r.verdict, Verdict::Failed, "{:?}", r.observed);
}

#[test]
fn finite_mean_example_validates() {
    let bundle = validate_example(Example::Pareto(3.0), &log_grid(10.0, 1e3, 7)).unwrap();
    assert!(bundle.errors.is_empty(), "{:?}", bundle.errors);
    assert!(!bundle.any_failed());
    let names: Vec<&str> = bundle.reports.iter().map(|r| r.name.as_str()).collect();
    assert!(names.contains(&"s2loc") && names.iter().any(|n| n.starts_with("relative-power-correction")));
}

#[test]
fn compound_power_pair_residuals() {
    let spec = LevySpec::parse(1.0, 0.5, "powerlaw:alpha=2").unwrap();
    let cp = CompoundPoissonLaw::new(&spec, CompoundOptions::default().with_x_max(100.0)).unwrap();
    let xs = log_grid(5.0, 80.0, 5);
    let pair = check_power_pair(PowerSource::Compound(&cp), 1.0, &xs).unwrap();
    assert_eq!(pair.len(), 2);
    assert!(pair[0].observed.iter().all(|o| o.abs() <= 1e-12));
    let second: Vec<f64> = pair[1].observed.iter().map(|o| o.abs()).collect();
    assert!(second[4] < second[0], "{second:?}");
}
