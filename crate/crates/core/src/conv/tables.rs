use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::split_points;
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::laws::Law;
use crate::quad::{Estimate, QuadOptions};

/// Node layout and accuracy of [`NFoldTables`].
#[derive(Debug, Clone, Copy)]
pub struct TableOptions {
    /// Nodes on the uniform stretch near the origin.
    pub uniform_nodes: usize,
    /// Geometric growth factor minus one beyond the uniform stretch.
    pub growth: f64,
    pub rel_tol: f64,
    /// Absolute tolerance in units of `n^2 tail(x)`.
    pub abs_scale: f64,
    pub max_intervals: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            uniform_nodes: 512,
            growth: 1.0 / 64.0,
            rel_tol: 1e-10,
            abs_scale: 1e-14,
            max_intervals: 4000,
        }
    }
}

/// Piecewise PCHIP table, split at kinks so no cubic straddles one.
#[derive(Debug, Clone)]
struct Table {
    bounds: Vec<f64>,
    pieces: Vec<Pchip>,
    // absolute error of the tabulated values, per piece and node
    errs: Vec<Vec<f64>>,
}

impl Table {
    fn build(pieces_nodes: &[Vec<f64>], values: &[Vec<f64>], errs: Vec<Vec<f64>>) -> Self {
        let bounds = pieces_nodes.iter().map(|p| p[0]).chain(pieces_nodes.last().map(|p| *p.last().unwrap())).collect();
        let pieces = pieces_nodes
            .iter()
            .zip(values)
            .map(|(xs, ys)| Pchip::new(xs.clone(), ys.clone()))
            .collect();
        Self { bounds, pieces, errs }
    }

    fn piece(&self, u: f64) -> usize {
        let k = self.bounds.partition_point(|&b| b <= u);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    fn eval(&self, u: f64) -> f64 {
        self.pieces[self.piece(u)].eval(u)
    }

    /// Interpolation indicator plus the larger stored error of the bracketing nodes.
    fn error(&self, u: f64) -> f64 {
        let k = self.piece(u);
        let p = &self.pieces[k];
        let xs = p.nodes();
        let i = xs.partition_point(|&x| x <= u).clamp(1, xs.len() - 1);
        p.error_indicator(u) + self.errs[k][i - 1].max(self.errs[k][i])
    }
}

/// Tables of the n-fold excesses `D_n(x) = tail_n(x) - n tail(x)` of a jump
/// law with a density, for `2 <= n <= max_n` on `[0, x_max]`.
///
/// `D_2 = I - tail^2` with `I` the two-fold excess integral, and
/// `D_{n+1}(x) = n (I(x) - tail(x)^2) + int_[0,x] D_n(x - y) law(dy)`,
/// so no nearly equal tails are ever subtracted. Each table is a piecewise
/// PCHIP on a node set that is uniform near the origin, geometric beyond, and
/// contains every multiple of the support start (where `D_n` has kinks).
pub struct NFoldTables {
    jump: Arc<dyn Law>,
    max_n: usize,
    x_max: f64,
    opts: TableOptions,
    kinks: Vec<f64>,
    uniform_end: f64,
    tables: Vec<Table>,
}

impl fmt::Debug for NFoldTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFoldTables")
            .field("jump", &self.jump)
            .field("max_n", &self.max_n)
            .field("x_max", &self.x_max)
            .finish_non_exhaustive()
    }
}

/// Smallest `x` with `tail(x) <= 1/2`, by bisection.
fn median(law: &dyn Law) -> f64 {
    let half = 0.5 * law.total_mass();
    let mut hi = law.support_start().max(1e-3);
    while law.tail(hi) > half && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if law.tail(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl NFoldTables {
    pub fn build(jump: Arc<dyn Law>, max_n: usize, x_max: f64, opts: TableOptions) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Domain { what: "table range", x: x_max });
        }
        if jump.pdf(jump.support_start() + 1.0).is_none() {
            return Err(Error::Unsupported("excess tables need a jump law with a density".into()));
        }
        let s = jump.support_start();
        let scale = s.max(median(jump.as_ref())).max(0.25);
        let kinks: Vec<f64> = if s > 0.0 {
            (1..=max_n.max(2)).map(|k| k as f64 * s).filter(|&k| k < x_max).collect()
        } else {
            Vec::new()
        };
        let uniform_end = (16.0 * scale).max((max_n as f64 + 2.0) * s).min(x_max);
        let mut n_uniform = opts.uniform_nodes.max(8);
        if s > 0.0 {
            n_uniform = n_uniform.max((8.0 * uniform_end / s).ceil() as usize);
        }
        let h = uniform_end / n_uniform as f64;
        let mut nodes: Vec<f64> = (0..=n_uniform).map(|k| k as f64 * h).collect();
        if s == 0.0 {
            // resolve a possibly singular density at the origin
            let mut z = 1e-6 * scale;
            while z < h {
                nodes.push(z);
                z *= 1.5;
            }
        }
        // geometric ratio chosen to land on x_max; two nodes past it keep the
        // one-sided end derivative out of range
        if x_max > uniform_end {
            let steps = ((x_max / uniform_end).ln() / opts.growth.ln_1p()).ceil();
            let r = (x_max / uniform_end).powf(1.0 / steps);
            let steps = steps as i32;
            nodes.extend((1..steps).map(|k| uniform_end * r.powi(k)));
            nodes.extend([x_max, x_max * r, x_max * r * r]);
        } else {
            nodes.push(x_max);
        }
        nodes.extend_from_slice(&kinks);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));

        // split at kinks; each kink node closes one piece and opens the next
        let mut pieces: Vec<Vec<f64>> = vec![Vec::new()];
        let mut ki = 0;
        for &x in &nodes {
            pieces.last_mut().unwrap().push(x);
            if ki < kinks.len() && (x - kinks[ki]).abs() <= 1e-12 * x {
                ki += 1;
                pieces.push(vec![x]);
            }
        }
        pieces.retain(|p| p.len() >= 2);

        let mut this = Self {
            jump,
            max_n,
            x_max,
            opts,
            kinks,
            uniform_end,
            tables: Vec::new(),
        };
        if max_n < 2 {
            return Ok(this);
        }
        let flat: Vec<f64> = pieces.iter().flatten().copied().collect();
        let base: Vec<Estimate> = flat.par_iter().map(|&x| this.base(x)).collect();
        let reshape = |v: &[Estimate]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
            let mut vals = Vec::new();
            let mut errs = Vec::new();
            let mut k = 0;
            for p in &pieces {
                vals.push(v[k..k + p.len()].iter().map(|e| e.value).collect());
                errs.push(v[k..k + p.len()].iter().map(|e| e.error).collect());
                k += p.len();
            }
            (vals, errs)
        };
        let (vals, errs) = reshape(&base);
        this.tables.push(Table::build(&pieces, &vals, errs));
        for n in 3..=max_n {
            let prev = this.tables.last().unwrap();
            let cur: Vec<Estimate> = flat
                .par_iter()
                .zip(&base)
                .map(|(&x, b)| b.scale((n - 1) as f64) + this.fold(prev, n, x))
                .collect();
            let (vals, errs) = reshape(&cur);
            let t = Table::build(&pieces, &vals, errs);
            this.tables.push(t);
        }
        Ok(this)
    }

    pub fn jump(&self) -> &Arc<dyn Law> {
        &self.jump
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn quad_opts(&self, n: usize, x: f64) -> QuadOptions {
        let abs = self.opts.abs_scale * (n * n) as f64 * self.jump.tail(x).max(1e-300);
        QuadOptions::rel(self.opts.rel_tol)
            .with_abs(abs)
            .with_max_intervals(self.opts.max_intervals)
    }

    /// `I(x) - tail(x)^2 = D_2(x)`.
    fn base(&self, x: f64) -> Estimate {
        let law = self.jump.as_ref();
        let t = law.tail(x);
        if x <= 0.0 {
            return Estimate::exact(-t * t);
        }
        let mut mirrored = vec![law.support_start()];
        let mut direct = law.breakpoints();
        for (p, _) in law.atoms() {
            mirrored.push(p);
            direct.push(p);
        }
        let pts = split_points(x, &mirrored, &direct);
        let f = |y: f64| if y <= 0.0 { 0.0 } else { law.interval_mass(x - y, y) };
        let i = law
            .integrate(&f, 0.0, x, &pts, &self.quad_opts(2, x))
            .unwrap_or(Estimate::new(f64::NAN, f64::INFINITY));
        i - Estimate::exact(t * t)
    }

    /// `int_[0,x] D_{n-1}(x - y) law(dy)` from the table of `D_{n-1}`.
    fn fold(&self, prev: &Table, n: usize, x: f64) -> Estimate {
        let law = self.jump.as_ref();
        let mut mirrored = self.kinks.clone();
        mirrored.push(self.uniform_end);
        mirrored.push(0.0);
        let pts = split_points(x, &mirrored, &law.breakpoints());
        let f = |y: f64| prev.eval(x - y);
        let est = law
            .integrate(&f, 0.0, x, &pts, &self.quad_opts(n, x))
            .unwrap_or(Estimate::new(f64::NAN, f64::INFINITY));
        let coarse = QuadOptions::rel(1e-2).with_max_intervals(64);
        let g = |y: f64| prev.error(x - y);
        let prop = law.integrate(&g, 0.0, x, &pts, &coarse).map(|e| e.value).unwrap_or(0.0);
        Estimate::new(est.value, est.error + prop)
    }

    fn check(&self, x: f64) -> Result<()> {
        if !(x <= self.x_max * (1.0 + 1e-12)) || x.is_nan() {
            return Err(Error::Domain {
                what: "excess table range",
                x,
            });
        }
        Ok(())
    }

    /// `D_n(x)` evaluated afresh at `x` (quadrature against the table of `D_{n-1}`).
    pub fn excess(&self, n: usize, x: f64) -> Result<Estimate> {
        Ok(self.excesses_upto(n, x)?.pop().unwrap())
    }

    /// `[D_0(x), ..., D_n(x)]`, sharing the two-fold integral.
    pub fn excesses_upto(&self, n: usize, x: f64) -> Result<Vec<Estimate>> {
        if x < 0.0 {
            return Ok((0..=n).map(|k| Estimate::exact(1.0 - k as f64)).collect());
        }
        if n > self.max_n {
            return Err(Error::Precondition(format!(
                "excess of order {n} requested from tables built up to {}",
                self.max_n
            )));
        }
        self.check(x)?;
        if n < 2 {
            return Ok(vec![Estimate::default(); n + 1]);
        }
        let mut out = vec![Estimate::default(); 2];
        let base = self.base(x);
        out.push(base);
        let rest: Vec<Estimate> = (3..=n)
            .into_par_iter()
            .map(|k| base.scale((k - 1) as f64) + self.fold(&self.tables[k - 3], k, x))
            .collect();
        out.extend(rest);
        if out.iter().any(|e| !e.value.is_finite()) {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                target: 0.0,
            });
        }
        Ok(out)
    }

    /// Interpolated table value of `D_n(x)`, cheap but less accurate.
    pub fn excess_interpolated(&self, n: usize, x: f64) -> Result<Estimate> {
        if n < 2 {
            return Ok(Estimate::default());
        }
        self.check(x)?;
        let t = self
            .tables
            .get(n - 2)
            .ok_or_else(|| Error::Precondition(format!("no table for order {n}")))?;
        Ok(Estimate::new(t.eval(x), t.error(x)))
    }
}
