//! Tail-accurate convolution.
//!
//! Two backends: exact lattice convolution of gridded measures for bulk mass
//! and signed series, and adaptive quadrature on survival functions for tail
//! values. The quadrature backend never subtracts nearly equal tails; the
//! two-fold excess uses
//!
//! `tail2(x) - 2 tail(x) + tail(x)^2 = int_[0,x] law((x - y, x]) law(dy)`.

mod grid;
mod powers;
mod tables;
mod weights;

use crate::error::{Error, Result};
use crate::laws::{Law, TailFunction};
use crate::quad::{Estimate, QuadOptions};

pub use grid::{combine_grids, convolve_grid, convolve_grid_capped, grid_power, shift_to_zero};
pub use powers::{nfold_tail, ConvolutionPowers};
pub use tables::{NFoldTables, TableOptions};
pub use weights::{compound_tail, CompoundWeights, DEFAULT_BUDGET};

/// Default relative tolerance of survival-function quadratures.
pub const TAIL_REL_TOL: f64 = 1e-10;

/// Breakpoints in `[0, x]` clustering geometrically towards both ends, plus
/// `x - k` for every `k` in `mirrored` and `p` for every `p` in `direct`.
pub(crate) fn split_points(x: f64, mirrored: &[f64], direct: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0, 0.5 * x, x];
    let mut d = 0.25 * x;
    while d > 1e-9 * x {
        pts.push(d);
        pts.push(x - d);
        d *= 0.1;
    }
    pts.extend(mirrored.iter().map(|k| x - k));
    pts.extend_from_slice(direct);
    pts.retain(|p| *p >= 0.0 && *p <= x && p.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "convolution tail", x })
    }
}

fn check_target(est: Estimate, opts: &QuadOptions) -> Result<Estimate> {
    let target = opts.abs_tol.max(opts.rel_tol * est.value.abs());
    if !est.value.is_finite() || est.error > 100.0 * target {
        return Err(Error::Quadrature {
            achieved: est.error,
            target,
        });
    }
    Ok(est)
}

/// `(A * B)((x, inf)) = total(A) tail_B(x) + int_[0,x] tail_A(x - y) B(dy)`.
pub fn tail_convolve(a: &TailFunction, b: &dyn Law, x: f64) -> Result<Estimate> {
    tail_convolve_with(a, b, x, &QuadOptions::rel(TAIL_REL_TOL))
}

pub fn tail_convolve_with(a: &TailFunction, b: &dyn Law, x: f64, opts: &QuadOptions) -> Result<Estimate> {
    check_x(x)?;
    let mut mirrored = vec![a.support_start()];
    mirrored.extend_from_slice(a.kinks());
    let pts = split_points(x, &mirrored, &b.breakpoints());
    let f = |y: f64| a.eval(x - y);
    let body = b.integrate(&f, 0.0, x, &pts, opts)?;
    let body = check_target(body, opts)?;
    Ok(Estimate::exact(a.total_mass() * b.tail(x)) + body)
}

/// `int_[0,x] law((x - y, x]) law(dy)`, the cancellation-free two-fold excess.
pub fn twofold_excess(law: &dyn Law, x: f64) -> Result<Estimate> {
    twofold_excess_with(law, x, &QuadOptions::rel(TAIL_REL_TOL))
}

pub fn twofold_excess_with(law: &dyn Law, x: f64, opts: &QuadOptions) -> Result<Estimate> {
    check_x(x)?;
    let mut mirrored = vec![law.support_start()];
    let mut direct = law.breakpoints();
    for (p, _) in law.atoms() {
        mirrored.push(p);
        direct.push(p);
    }
    mirrored.extend(law.breakpoints());
    let pts = split_points(x, &mirrored, &direct);
    let f = |y: f64| if y <= 0.0 { 0.0 } else { law.interval_mass(x - y, y) };
    let est = law.integrate(&f, 0.0, x, &pts, opts)?;
    check_target(est, opts)
}

/// `law^{2*}((x, inf))` from the two-fold excess: `2 tail - tail^2 + excess`.
pub fn twofold_tail(law: &dyn Law, x: f64) -> Result<Estimate> {
    let t = law.tail(x);
    let total = law.total_mass();
    // for a finite measure of mass m the identity reads 2 m tail - tail^2
    Ok(Estimate::exact(2.0 * total * t - t * t) + twofold_excess(law, x)?)
}

/// `law^{2*}((x, x + c]) = int_[0, x+c] law((x - y, x + c - y]) law(dy)`,
/// a positive integrand, so no tails are subtracted.
pub fn twofold_interval_mass(law: &dyn Law, x: f64, c: f64) -> Result<Estimate> {
    twofold_interval_mass_with(law, x, c, &QuadOptions::rel(TAIL_REL_TOL))
}

pub fn twofold_interval_mass_with(law: &dyn Law, x: f64, c: f64, opts: &QuadOptions) -> Result<Estimate> {
    check_x(x)?;
    crate::error::check_positive("c", c)?;
    let s = law.support_start();
    let mut mirrored = vec![c, s, s + c];
    let mut direct = law.breakpoints();
    for (p, _) in law.atoms() {
        mirrored.extend([p, p + c]);
        direct.push(p);
    }
    let top = x + c;
    let pts = split_points(top, &mirrored, &direct);
    let f = |y: f64| law.interval_mass(x - y, c);
    let est = law.integrate(&f, 0.0, top, &pts, opts)?;
    check_target(est, opts)
}

/// Density of the two-fold convolution, `int_0^x p(x - y) p(y) dy`.
pub fn density_convolution(law: &dyn Law, x: f64) -> Result<Estimate> {
    check_x(x)?;
    if law.pdf(law.support_start() + 1.0).is_none() || !law.atoms().is_empty() {
        return Err(Error::Unsupported("density convolution needs an absolutely continuous law".into()));
    }
    let opts = QuadOptions::rel(TAIL_REL_TOL);
    let s = law.support_start();
    if x <= 2.0 * s {
        return Ok(Estimate::exact(0.0));
    }
    // symmetric in y <-> x - y: twice the lower half
    let half = 0.5 * x;
    let mut pts = split_points(x, &[s], &[s]);
    pts.retain(|&p| p >= s && p <= half);
    pts.insert(0, s);
    pts.push(half);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |y: f64| law.pdf(y).unwrap_or(0.0) * law.pdf(x - y).unwrap_or(0.0);
    let est = crate::quad::integrate_pts(f, &pts, &opts)?;
    Ok(est.scale(2.0))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::laws::{AnalyticLaw, Mean, PointMass};

    #[test]
    fn dirac_b_returns_tail_a() {
        let p = Arc::new(AnalyticLaw::pareto(2.0).unwrap());
        let a = TailFunction::from_law(p.clone());
        let d0 = PointMass::new(0.0).unwrap();
        for &x in &[0.0, 1.0, 10.0] {
            assert_eq!(tail_convolve(&a, &d0, x).unwrap().value, p.tail(x));
        }
    }

    #[test]
    fn erlang_closed_forms() {
        let e = Arc::new(AnalyticLaw::exponential(1.0).unwrap());
        let a = TailFunction::from_law(e.clone());
        for &x in &[0.5, 1.0, 5.0, 40.0] {
            let two = tail_convolve(&a, e.as_ref(), x).unwrap().value;
            let exact = (1.0 + x) * (-x).exp();
            assert!((two / exact - 1.0).abs() < 1e-10, "x = {x}");
        }
        let gamma2 = TailFunction::new(|z: f64| (1.0 + z) * (-z).exp(), 0.0, Mean::Finite(2.0));
        let three = tail_convolve(&gamma2, e.as_ref(), 2.0).unwrap().value;
        assert!((three / (5.0 * (-2.0f64).exp()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn erlang_local_mass_and_density() {
        let e = AnalyticLaw::exponential(1.0).unwrap();
        let g = |z: f64| (1.0 + z) * (-z).exp();
        for &x in &[0.5, 3.0, 30.0] {
            let got = twofold_interval_mass(&e, x, 1.0).unwrap().value;
            assert!((got / (g(x) - g(x + 1.0)) - 1.0).abs() < 1e-10, "x = {x}");
            let d = density_convolution(&e, x).unwrap().value;
            assert!((d / (x * (-x).exp()) - 1.0).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn identity_matches_oracle() {
        let p2 = AnalyticLaw::pareto(2.0).unwrap();
        let w = AnalyticLaw::weibull(0.5).unwrap();
        let cases = [
            (&p2, 10.0, 0.003235127409244624397),
            (&p2, 1000.0, 4.0494045178428852882e-9),
            (&w, 100.0, 0.000013898631378848081271),
            (&w, 1000.0, 1.3090649875224339611e-15),
        ];
        for (law, x, want) in cases {
            let got = twofold_excess(law, x).unwrap();
            assert!((got.value / want - 1.0).abs() < 1e-8, "x = {x}: {}", got.value);
        }
    }
}
