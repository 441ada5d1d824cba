use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laws::GriddedMeasure;

const PAR_THRESHOLD: usize = 2048;

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Convolution of two gridded measures with a common step.
///
/// Cell masses are treated as lattice masses at the right cell ends, which
/// makes the product of two lattice measures exact. The output origin is the
/// sum of the origins. When an input carries overflow, the output keeps only
/// the cells it determines completely; everything else lands in the overflow,
/// so the total mass is `total(a) * total(b)`.
pub fn convolve_grid(a: &GriddedMeasure, b: &GriddedMeasure) -> Result<GriddedMeasure> {
    convolve_grid_capped(a, b, usize::MAX)
}

/// [`convolve_grid`] keeping at most `max_cells` cells; the rest of the mass
/// goes to the overflow.
pub fn convolve_grid_capped(a: &GriddedMeasure, b: &GriddedMeasure, max_cells: usize) -> Result<GriddedMeasure> {
    if !same_step(a.step(), b.step()) {
        return Err(Error::StepMismatch(a.step(), b.step()));
    }
    let (na, nb) = (a.len(), b.len());
    let n_out = match (a.overflow() != 0.0, b.overflow() != 0.0) {
        (true, true) => na.min(nb),
        (true, false) => na,
        (false, true) => nb,
        (false, false) => na + nb,
    };
    let capped = n_out > max_cells;
    let n_out = n_out.min(max_cells);
    let va = a.lattice();
    let vb = b.lattice();
    let entry = |k: usize| -> f64 {
        let lo = k.saturating_sub(nb);
        let hi = k.min(na);
        if lo > hi {
            return 0.0;
        }
        (lo..=hi).map(|i| va[i] * vb[k - i]).sum()
    };
    let out: Vec<f64> = if n_out >= PAR_THRESHOLD {
        (0..=n_out).into_par_iter().map(entry).collect()
    } else {
        (0..=n_out).map(entry).collect()
    };
    let in_grid: f64 = out.iter().sum();
    let overflow = if a.overflow() == 0.0 && b.overflow() == 0.0 && !capped {
        0.0
    } else {
        a.total() * b.total() - in_grid
    };
    let signed = a.is_signed() || b.is_signed();
    let overflow = if !signed && overflow < 0.0 { 0.0 } else { overflow };
    GriddedMeasure::from_lattice(
        a.origin() + b.origin(),
        a.step(),
        out,
        overflow,
        signed,
        a.extrapolation().heavier(b.extrapolation()),
    )
}

/// Re-express `g` on a grid with origin 0; the origin must be a multiple of the step.
pub fn shift_to_zero(g: &GriddedMeasure) -> Result<GriddedMeasure> {
    let k = g.origin() / g.step();
    let kr = k.round();
    if (k - kr).abs() > 1e-9 * kr.max(1.0) {
        return Err(Error::Precondition(format!(
            "grid origin {} is not a multiple of the step {}",
            g.origin(),
            g.step()
        )));
    }
    let mut v = vec![0.0; kr as usize];
    v.extend(g.lattice());
    GriddedMeasure::from_lattice(0.0, g.step(), v, g.overflow(), g.is_signed(), g.extrapolation())
}

/// `g^{n*}` by left folding; `n = 0` gives the unit atom at the origin.
pub fn grid_power(g: &GriddedMeasure, n: usize) -> Result<GriddedMeasure> {
    let mut acc = GriddedMeasure::dirac(0.0, g.step())?;
    for _ in 0..n {
        acc = convolve_grid(&acc, g)?;
    }
    Ok(acc)
}

/// `sum_k w_k g_k` for grids sharing origin and step; lengths may differ.
pub fn combine_grids(terms: &[(f64, &GriddedMeasure)]) -> Result<GriddedMeasure> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| Error::Precondition("nothing to combine".into()))?;
    let n = terms.iter().map(|t| t.1.len()).max().unwrap_or(0);
    let mut v = vec![0.0; n + 1];
    let mut overflow = 0.0;
    let mut extrapolation = first.extrapolation();
    let mut signed = false;
    for &(w, g) in terms {
        if !same_step(g.step(), first.step()) {
            return Err(Error::StepMismatch(first.step(), g.step()));
        }
        if g.origin() != first.origin() {
            return Err(Error::Precondition("grids to combine must share the origin".into()));
        }
        for (k, m) in g.lattice().into_iter().enumerate() {
            v[k] += w * m;
        }
        overflow += w * g.overflow();
        extrapolation = extrapolation.heavier(g.extrapolation());
        signed |= w < 0.0 || g.is_signed();
    }
    // a grid with overflow hides its mass beyond its last cell, so only the
    // cells every such grid resolves are kept
    let limit = terms
        .iter()
        .filter(|t| t.0 != 0.0 && t.1.overflow() != 0.0)
        .map(|t| t.1.len())
        .min()
        .unwrap_or(n);
    if limit < n {
        let spill: f64 = v[limit + 1..].iter().sum();
        v.truncate(limit + 1);
        overflow += spill;
    }
    GriddedMeasure::from_lattice(first.origin(), first.step(), v, overflow, signed, extrapolation)
}
