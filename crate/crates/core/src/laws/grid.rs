use serde::{Deserialize, Serialize};

use super::{Law, Mean};
use crate::error::{check_positive, Error, Result};
use crate::quad::{self, Estimate, QuadOptions};

/// Shape assumed for the overflow mass beyond the last cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extrapolation {
    /// Overflow sits as an atom at the grid edge.
    #[default]
    None,
    /// `tail(x) = overflow * ((1 + e) / (1 + x))^alpha` beyond the edge `e`.
    Power { alpha: f64 },
    /// `tail(x) = overflow * exp(-rate (x^beta - e^beta))` beyond the edge `e`.
    StretchedExp { beta: f64, rate: f64 },
}

impl Extrapolation {
    fn validate(self) -> Result<Self> {
        match self {
            Extrapolation::None => {}
            Extrapolation::Power { alpha } => check_positive("alpha", alpha)?,
            Extrapolation::StretchedExp { beta, rate } => {
                check_positive("beta", beta)?;
                check_positive("rate", rate)?;
            }
        }
        Ok(self)
    }

    /// Fraction of the overflow mass beyond `x >= edge`.
    fn ratio(&self, edge: f64, x: f64) -> f64 {
        match *self {
            Extrapolation::None => 0.0,
            Extrapolation::Power { alpha } => ((1.0 + edge) / (1.0 + x)).powf(alpha),
            Extrapolation::StretchedExp { beta, rate } => (-rate * (x.powf(beta) - edge.powf(beta))).exp(),
        }
    }

    /// Minus the derivative of [`Self::ratio`].
    fn ratio_density(&self, edge: f64, x: f64) -> f64 {
        match *self {
            Extrapolation::None => 0.0,
            Extrapolation::Power { alpha } => alpha / (1.0 + x) * self.ratio(edge, x),
            Extrapolation::StretchedExp { beta, rate } => {
                rate * beta * x.powf(beta - 1.0) * self.ratio(edge, x)
            }
        }
    }

    /// Heavier of two shapes, used for the overflow of a convolution.
    pub fn heavier(self, other: Self) -> Self {
        use Extrapolation::*;
        match (self, other) {
            (Power { alpha: a }, Power { alpha: b }) => Power { alpha: a.min(b) },
            (p @ Power { .. }, _) | (_, p @ Power { .. }) => p,
            (StretchedExp { beta: a, rate: ra }, StretchedExp { beta: b, rate: rb }) => {
                if a < b || (a == b && ra <= rb) {
                    self
                } else {
                    other
                }
            }
            (s @ StretchedExp { .. }, None) | (None, s @ StretchedExp { .. }) => s,
            (None, None) => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    origin: f64,
    step: f64,
    atom: f64,
    masses: Vec<f64>,
    overflow: f64,
    signed: bool,
    #[serde(default)]
    extrapolation: Extrapolation,
}

/// Measure on a uniform grid: an atom at `origin`, masses on the cells
/// `(origin + i h, origin + (i + 1) h]`, and overflow mass beyond the last cell.
///
/// Inside a cell the mass is spread uniformly, so the reconstructed survival
/// function is piecewise linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GriddedMeasure {
    origin: f64,
    step: f64,
    atom: f64,
    masses: Vec<f64>,
    overflow: f64,
    signed: bool,
    extrapolation: Extrapolation,
    // cell_suffix[k] = sum of masses[k..]
    cell_suffix: Vec<f64>,
}

impl TryFrom<GridRepr> for GriddedMeasure {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        GriddedMeasure::new(r.origin, r.step, r.atom, r.masses, r.overflow, r.signed, r.extrapolation)
    }
}

impl From<GriddedMeasure> for GridRepr {
    fn from(g: GriddedMeasure) -> Self {
        GridRepr {
            origin: g.origin,
            step: g.step,
            atom: g.atom,
            masses: g.masses,
            overflow: g.overflow,
            signed: g.signed,
            extrapolation: g.extrapolation,
        }
    }
}

impl GriddedMeasure {
    pub fn new(
        origin: f64,
        step: f64,
        atom: f64,
        masses: Vec<f64>,
        overflow: f64,
        signed: bool,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        if !(origin >= 0.0 && origin.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "origin",
                value: origin,
                reason: "grid origin must be finite and nonnegative",
            });
        }
        check_positive("step", step)?;
        let extrapolation = extrapolation.validate()?;
        let all = || std::iter::once(atom).chain(masses.iter().copied()).chain(std::iter::once(overflow));
        if let Some(bad) = all().find(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass",
                value: bad,
                reason: "grid masses must be finite",
            });
        }
        if !signed {
            if let Some(bad) = all().find(|&m| m < 0.0) {
                return Err(Error::InvalidParameter {
                    name: "mass",
                    value: bad,
                    reason: "unsigned grid has a negative mass",
                });
            }
        }
        let mut cell_suffix = vec![0.0; masses.len() + 1];
        for k in (0..masses.len()).rev() {
            cell_suffix[k] = cell_suffix[k + 1] + masses[k];
        }
        Ok(Self {
            origin,
            step,
            atom,
            masses,
            overflow,
            signed,
            extrapolation,
            cell_suffix,
        })
    }

    /// Build from lattice form: `v[0]` is the atom, `v[k]` the mass of cell `k - 1`
    /// (mass attributed to the right end `origin + k h`).
    pub fn from_lattice(
        origin: f64,
        step: f64,
        mut v: Vec<f64>,
        overflow: f64,
        signed: bool,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        if v.is_empty() {
            v.push(0.0);
        }
        let atom = v.remove(0);
        Self::new(origin, step, atom, v, overflow, signed, extrapolation)
    }

    /// Unit atom at `origin`, no cells.
    pub fn dirac(origin: f64, step: f64) -> Result<Self> {
        Self::new(origin, step, 1.0, Vec::new(), 0.0, false, Extrapolation::None)
    }

    pub fn lattice(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.masses.len() + 1);
        v.push(self.atom);
        v.extend_from_slice(&self.masses);
        v
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Right end of the last cell.
    pub fn edge(&self) -> f64 {
        self.origin + self.masses.len() as f64 * self.step
    }

    pub fn total(&self) -> f64 {
        self.atom + self.cell_suffix[0] + self.overflow
    }

    /// Total variation `|atom| + sum |m_i| + |overflow|`.
    pub fn total_variation(&self) -> f64 {
        self.atom.abs() + self.masses.iter().map(|m| m.abs()).sum::<f64>() + self.overflow.abs()
    }

    /// Copy with every mass multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.origin,
            self.step,
            self.atom * k,
            self.masses.iter().map(|m| m * k).collect(),
            self.overflow * k,
            self.signed || k < 0.0,
            self.extrapolation,
        )
    }

    /// Copy with the signed flag set.
    pub fn into_signed(mut self) -> Self {
        self.signed = true;
        self
    }

    /// Fractional cell coordinate of `x`, snapped to integers within rounding.
    fn coord(&self, x: f64) -> f64 {
        let u = (x - self.origin) / self.step;
        let r = u.round();
        if (u - r).abs() <= 1e-9 * r.abs().max(1.0) {
            r
        } else {
            u
        }
    }

    /// Mass of the cells restricted to `(lo, hi]`, with `origin <= lo < hi <= edge`.
    fn cells_between(&self, lo: f64, hi: f64) -> f64 {
        let n = self.masses.len();
        if n == 0 {
            return 0.0;
        }
        let ul = self.coord(lo).clamp(0.0, n as f64);
        let uh = self.coord(hi).clamp(0.0, n as f64);
        if uh <= ul {
            return 0.0;
        }
        let k0 = (ul.floor() as usize).min(n - 1);
        let k1 = ((uh.ceil() as usize).max(1) - 1).min(n - 1);
        if k0 == k1 {
            return self.masses[k0] * (uh - ul);
        }
        let mut m = self.masses[k0] * (k0 as f64 + 1.0 - ul) + self.masses[k1] * (uh - k1 as f64);
        if k1 > k0 + 1 {
            let inner = k1 - k0 - 1;
            // long runs use suffix sums; short ones are summed directly
            m += if inner > 256 {
                self.cell_suffix[k0 + 1] - self.cell_suffix[k1]
            } else {
                self.masses[k0 + 1..k1].iter().sum::<f64>()
            };
        }
        m
    }

    /// Overflow mass in `(x, inf)`.
    fn overflow_tail(&self, x: f64) -> f64 {
        let e = self.edge();
        if x < e {
            self.overflow
        } else {
            self.overflow * self.extrapolation.ratio(e, x)
        }
    }

    /// Mass of `(x, y]`.
    pub fn mass_between(&self, x: f64, y: f64) -> f64 {
        if !(y > x) {
            return 0.0;
        }
        let e = self.edge();
        let mut m = 0.0;
        if x < self.origin && y >= self.origin {
            m += self.atom;
        }
        let lo = x.max(self.origin);
        let hi = y.min(e);
        if hi > lo {
            m += self.cells_between(lo, hi);
        }
        m + self.overflow_tail(x) - self.overflow_tail(y)
    }

    /// Laplace transform by cell midpoints, with error bound `h t / 2` times
    /// the total variation of the cells.
    pub fn laplace(&self, t: f64) -> Result<Estimate> {
        if !(t >= 0.0) {
            return Err(Error::Domain { what: "laplace", x: t });
        }
        let h = self.step;
        let mut v = self.atom * (-t * self.origin).exp();
        let mut cell_var = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            v += m * (-t * (self.origin + (k as f64 + 0.5) * h)).exp();
            cell_var += m.abs();
        }
        let mut err = 0.5 * h * t * cell_var;
        let e = self.edge();
        match self.extrapolation {
            Extrapolation::None => v += self.overflow * (-t * e).exp(),
            ex if self.overflow != 0.0 => {
                let f = |x: f64| (-t * x).exp() * ex.ratio_density(e, x);
                let part = quad::integrate_to_infinity(f, e, &QuadOptions::rel(1e-12))?;
                v += self.overflow * part.value;
                err += self.overflow.abs() * part.error;
            }
            _ => {}
        }
        Ok(Estimate::new(v, err))
    }

    fn cell_of(&self, x: f64) -> Option<usize> {
        let u = self.coord(x);
        if u <= 0.0 || u > self.masses.len() as f64 {
            None
        } else {
            Some(u.ceil() as usize - 1)
        }
    }
}

impl Law for GriddedMeasure {
    fn tail(&self, x: f64) -> f64 {
        let mut t = self.overflow_tail(x);
        if x < self.origin {
            t += self.atom + self.cell_suffix[0];
        } else if x < self.edge() {
            t += self.cells_between(x, self.edge());
        }
        t
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        self.mass_between(x, x + c)
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        let e = self.edge();
        if x > e {
            return Some(self.overflow * self.extrapolation.ratio_density(e, x));
        }
        Some(self.cell_of(x).map_or(0.0, |k| self.masses[k] / self.step))
    }

    fn mean(&self) -> Mean {
        let h = self.step;
        let mut m = self.atom * self.origin;
        for (k, w) in self.masses.iter().enumerate() {
            m += w * (self.origin + (k as f64 + 0.5) * h);
        }
        let e = self.edge();
        if self.overflow != 0.0 {
            match self.extrapolation {
                Extrapolation::None => m += self.overflow * e,
                Extrapolation::Power { alpha } if alpha > 1.0 => {
                    m += self.overflow * (e + (1.0 + e) / (alpha - 1.0));
                }
                Extrapolation::Power { .. } => return Mean::Infinite,
                ex => {
                    let rest = quad::integrate_to_infinity(|x| ex.ratio(e, x), e, &QuadOptions::rel(1e-10));
                    match rest {
                        Ok(r) => m += self.overflow * (e + r.value),
                        Err(_) => return Mean::Infinite,
                    }
                }
            }
        }
        Mean::Finite(m / self.total())
    }

    fn support_start(&self) -> f64 {
        self.origin
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        let mut a = Vec::new();
        if self.atom != 0.0 {
            a.push((self.origin, self.atom));
        }
        if self.extrapolation == Extrapolation::None && self.overflow != 0.0 {
            a.push((self.edge(), self.overflow));
        }
        a
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.edge()]
    }

    fn total_mass(&self) -> f64 {
        self.total()
    }

    fn extrapolation_hint(&self) -> Extrapolation {
        self.extrapolation
    }

    /// Cellwise 21-point rule against the piecewise-constant density, split
    /// at `extra_breaks`; the overflow part uses the extrapolated density.
    fn integrate(
        &self,
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        extra_breaks: &[f64],
        opts: &QuadOptions,
    ) -> Result<Estimate> {
        let mut est = Estimate::default();
        if !(b >= a) {
            return Ok(est);
        }
        if a <= self.origin && self.origin <= b && self.atom != 0.0 {
            est.value += self.atom * f(self.origin);
        }
        let e = self.edge();
        let lo = a.max(self.origin);
        let hi = b.min(e);
        if hi > lo {
            let h = self.step;
            let k0 = (self.coord(lo).floor().max(0.0) as usize).min(self.masses.len() - 1);
            let k1 = (self.coord(hi).ceil() as usize).min(self.masses.len());
            let mut breaks: Vec<f64> = extra_breaks.iter().copied().filter(|&p| p > lo && p < hi).collect();
            breaks.sort_by(f64::total_cmp);
            let mut bi = 0;
            for k in k0..k1 {
                let w = self.masses[k];
                let cl = (self.origin + k as f64 * h).max(lo);
                let cr = (self.origin + (k + 1) as f64 * h).min(hi);
                if w == 0.0 || !(cr > cl) {
                    continue;
                }
                let g = |y: f64| f(y);
                let mut left = cl;
                while bi < breaks.len() && breaks[bi] <= left {
                    bi += 1;
                }
                let mut acc = 0.0;
                while bi < breaks.len() && breaks[bi] < cr {
                    acc += quad::fixed_gk21(&g, left, breaks[bi]);
                    left = breaks[bi];
                    bi += 1;
                }
                acc += quad::fixed_gk21(&g, left, cr);
                est.value += w / h * acc;
            }
        }
        if self.overflow != 0.0 && b >= e {
            match self.extrapolation {
                Extrapolation::None => est.value += self.overflow * f(e),
                ex => {
                    let start = a.max(e);
                    let g = |x: f64| f(x) * ex.ratio_density(e, x);
                    let part = if b.is_finite() {
                        quad::integrate(g, start, b, opts)?
                    } else {
                        quad::integrate_to_infinity(g, start, opts)?
                    };
                    est = est + part.scale(self.overflow);
                }
            }
        }
        Ok(est)
    }

    fn as_grid(&self) -> Option<&GriddedMeasure> {
        Some(self)
    }
}

/// Cell-exact discretisation: `m_i = law((x0 + i h, x0 + (i + 1) h])`,
/// `atom = total - tail(x0)`, `overflow = tail(x0 + n h)`.
pub fn discretize(law: &dyn Law, x0: f64, h: f64, n: usize) -> Result<GriddedMeasure> {
    check_positive("step", h)?;
    if n == 0 {
        return Err(Error::Precondition("grid needs at least one cell".into()));
    }
    let masses: Vec<f64> = (0..n)
        .map(|i| law.interval_mass(x0 + i as f64 * h, h).max(0.0))
        .collect();
    let atom = (law.total_mass() - law.tail(x0)).max(0.0);
    let overflow = law.tail(x0 + n as f64 * h);
    GriddedMeasure::new(x0, h, atom, masses, overflow, false, law.extrapolation_hint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::AnalyticLaw;

    #[test]
    fn discretize_pareto_two_cells() {
        let g = discretize(&AnalyticLaw::pareto(2.0).unwrap(), 0.0, 1.0, 2).unwrap();
        assert_eq!(g.atom(), 0.0);
        assert!((g.masses()[0] - 0.75).abs() < 1e-15);
        assert!((g.masses()[1] - (0.25 - 1.0 / 9.0)).abs() < 1e-15);
        assert!((g.overflow() - 1.0 / 9.0).abs() < 1e-15);
        assert!((g.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretize_exponential_half() {
        let g = discretize(&AnalyticLaw::exponential(1.0).unwrap(), 0.0, 2f64.ln(), 1).unwrap();
        assert!((g.masses()[0] - 0.5).abs() < 1e-15);
        assert!((g.overflow() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn survival_is_piecewise_linear_and_exact_on_nodes() {
        let law = AnalyticLaw::pareto(2.0).unwrap();
        let g = discretize(&law, 0.0, 0.5, 40).unwrap();
        assert!((g.tail(3.0) - law.tail(3.0)).abs() < 1e-15);
        let mid = 0.5 * (law.tail(3.0) + law.tail(3.5));
        assert!((g.tail(3.25) - mid).abs() < 1e-15);
        assert!((g.interval_mass(1.0, 1.0) - law.interval_mass(1.0, 1.0)).abs() < 1e-15);
        // beyond the edge the Pareto hint reproduces the exact tail
        assert!((g.tail(100.0) / law.tail(100.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = GriddedMeasure::new(1.0, 0.5, 0.1, vec![0.2, 0.3], 0.4, false, Extrapolation::Power { alpha: 2.0 })
            .unwrap();
        let s = serde_json::to_string(&g).unwrap();
        for key in ["origin", "step", "atom", "masses", "overflow", "signed", "extrapolation"] {
            assert!(s.contains(key));
        }
        let back: GriddedMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"origin":0,"step":1,"atom":0,"masses":[-0.1],"overflow":0,"signed":false}"#;
        assert!(serde_json::from_str::<GriddedMeasure>(bad).is_err());
    }

    #[test]
    fn laplace_of_dirac_and_total() {
        let d = GriddedMeasure::dirac(0.0, 0.1).unwrap();
        assert_eq!(d.laplace(3.0).unwrap().value, 1.0);
        let g = discretize(&AnalyticLaw::exponential(1.0).unwrap(), 0.0, 0.01, 5000).unwrap();
        assert!((g.laplace(0.0).unwrap().value - 1.0).abs() < 1e-14);
        let l = g.laplace(1.0).unwrap();
        assert!((l.value - 0.5).abs() <= l.error);
    }

    #[test]
    fn integrate_against_cells() {
        let g = discretize(&AnalyticLaw::exponential(1.0).unwrap(), 0.0, 0.01, 4000).unwrap();
        let m = g
            .integrate(&|y| y, 0.0, f64::INFINITY, &[], &QuadOptions::default())
            .unwrap();
        assert!((m.value - 1.0).abs() < 1e-4, "{}", m.value);
    }
}
