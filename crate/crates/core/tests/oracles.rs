//! Values frozen from independent computations: arbitrary-precision quadrature
//! for the analytic laws and bracketing Panjer recursions for compound sums.

use std::sync::Arc;

use subexp::diag::{check_power_ratio, check_s2loc, check_sloc, PowerSource};
use subexp::infdiv::{CompoundOptions, CompoundPoissonLaw, LevySpec};
use subexp::laws::{AnalyticLaw, Law};

fn close(got: f64, want: f64, rel: f64) {
    assert!((got / want - 1.0).abs() <= rel, "got {got}, want {want}");
}

#[test]
fn second_order_residuals() {
    let cases = [
        (AnalyticLaw::pareto(3.0).unwrap(), [10.0, 1e3], [0.5740622908, 0.0060945139284]),
        (AnalyticLaw::weibull(0.5).unwrap(), [10.0, 1e4], [-1.296547, 0.1383064972]),
        (AnalyticLaw::lognormal(), [10.0, 1e4], [1.874580, 0.0092663760]),
    ];
    for (law, xs, want) in cases {
        let r = check_s2loc(&law, &xs).unwrap();
        close(r.observed[0], want[0], 1e-6);
        close(r.observed[1], want[1], 1e-8);
    }
}

#[test]
fn local_two_fold_ratio_of_infinite_mean_pareto() {
    let half = AnalyticLaw::pareto(0.5).unwrap();
    let r = check_sloc(&half, 1.0, &[10.0, 1e3]).unwrap();
    close(r.observed[0], 1.5450112142, 1e-9);
    close(r.observed[1], 1.99401894, 1e-8);
}

#[test]
fn three_fold_excess_of_pareto() {
    let p3: Arc<dyn Law> = Arc::new(AnalyticLaw::pareto(3.0).unwrap());
    let r = check_power_ratio(PowerSource::Folds(&p3), 3.0, &[10.0, 100.0]).unwrap();
    close(r.observed[0], 5.3003678387, 1e-6);
    close(r.observed[1], 3.2274291820, 1e-6);
}

#[test]
fn compound_tails_inside_panjer_brackets() {
    // lower and upper discretisations at h = 0.005, Richardson midpoint
    let cases = [
        ("powerlaw:alpha=2", 6.006307e-4, 6.009700e-4, 6.009043e-4),
        ("rv:alpha=0.25,l=one", 0.19487530, 0.19488487, 0.1948838),
    ];
    for (jump, lo, hi, extrapolated) in cases {
        let spec = LevySpec::parse(1.0, 0.5, jump).unwrap();
        let cp = CompoundPoissonLaw::new(&spec, CompoundOptions::default().with_x_max(40.0).with_max_t(1.0)).unwrap();
        let t = cp.try_tail(30.0).unwrap().value;
        assert!(lo <= t && t <= hi, "{jump}: {t}");
        close(t, extrapolated, 2e-6);
    }
}

#[test]
fn point_mass_jumps_give_poisson_counts() {
    let spec = LevySpec::parse(1.0, 0.5, "point:at=2").unwrap();
    let cp = CompoundPoissonLaw::new(&spec, CompoundOptions::default().with_x_max(40.0)).unwrap();
    let poisson_tail = |lambda: f64, k: u32| {
        let mut term = (-lambda).exp();
        let mut below = 0.0;
        for j in 0..=k {
            below += term;
            term *= lambda / (j + 1) as f64;
        }
        1.0 - below
    };
    for (x, k) in [(3.0, 1), (9.0, 4)] {
        close(cp.try_tail(x).unwrap().value, poisson_tail(0.5, k), 1e-10);
        let sq = cp.power(2.0).unwrap();
        close(sq.try_tail(x).unwrap().value, poisson_tail(1.0, k), 1e-10);
    }
}
