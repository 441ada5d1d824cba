use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::grid::convolve_grid;
use super::tables::{NFoldTables, TableOptions};
use crate::error::{Error, Result};
use crate::laws::{DiscreteLaw, GriddedMeasure, Law};
use crate::quad::Estimate;

enum Backend {
    Quadrature(NFoldTables),
    Discrete(Vec<DiscreteLaw>),
    Grid(Vec<GriddedMeasure>),
}

/// Convolution powers `jump^{n*}`, `n <= max_n`, of a jump law.
///
/// Laws with a density use [`NFoldTables`]; purely atomic laws are convolved
/// exactly; gridded laws use the lattice backend.
pub struct ConvolutionPowers {
    jump: Arc<dyn Law>,
    max_n: usize,
    backend: Backend,
}

impl fmt::Debug for ConvolutionPowers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.backend {
            Backend::Quadrature(_) => "quadrature",
            Backend::Discrete(_) => "discrete",
            Backend::Grid(_) => "grid",
        };
        f.debug_struct("ConvolutionPowers")
            .field("jump", &self.jump)
            .field("max_n", &self.max_n)
            .field("backend", &kind)
            .finish()
    }
}

fn discrete_convolve(a: &DiscreteLaw, b: &DiscreteLaw) -> Result<DiscreteLaw> {
    // positions are summed exactly, so equal sums merge on their bit pattern
    let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
    for (pa, ma) in a.atoms() {
        for (pb, mb) in b.atoms() {
            *acc.entry((pa + pb).to_bits()).or_insert(0.0) += ma * mb;
        }
    }
    DiscreteLaw::new(acc.into_iter().map(|(p, m)| (f64::from_bits(p), m)).collect())
}

impl ConvolutionPowers {
    pub fn build(jump: Arc<dyn Law>, max_n: usize, x_max: f64, opts: TableOptions) -> Result<Self> {
        let backend = if let Some(g) = jump.as_grid() {
            let mut powers = vec![GriddedMeasure::dirac(0.0, g.step())?];
            for n in 1..=max_n {
                let next = convolve_grid(&powers[n - 1], g)?;
                powers.push(next);
            }
            Backend::Grid(powers)
        } else if jump.pdf(jump.support_start() + 1.0).is_some() {
            Backend::Quadrature(NFoldTables::build(jump.clone(), max_n, x_max, opts)?)
        } else {
            let atoms = jump.atoms();
            if atoms.is_empty() {
                return Err(Error::Unsupported("jump law has neither density nor atoms".into()));
            }
            let base = DiscreteLaw::new(atoms)?;
            let mut powers = vec![DiscreteLaw::new(vec![(0.0, 1.0)])?];
            for n in 1..=max_n {
                let next = discrete_convolve(&powers[n - 1], &base)?;
                powers.push(next);
            }
            Backend::Discrete(powers)
        };
        Ok(Self { jump, max_n, backend })
    }

    pub fn jump(&self) -> &Arc<dyn Law> {
        &self.jump
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// `[D_0(x), ..., D_n(x)]` with `D_k = tail_k - k tail`.
    pub fn excesses(&self, n: usize, x: f64) -> Result<Vec<Estimate>> {
        if n > self.max_n {
            return Err(Error::Precondition(format!(
                "power {n} requested, powers built up to {}",
                self.max_n
            )));
        }
        match &self.backend {
            Backend::Quadrature(t) => t.excesses_upto(n, x),
            Backend::Discrete(p) => {
                let t = self.jump.tail(x);
                Ok((0..=n).map(|k| Estimate::exact(p[k].tail(x) - k as f64 * t)).collect())
            }
            Backend::Grid(p) => {
                let t = self.jump.tail(x);
                Ok((0..=n).map(|k| Estimate::exact(p[k].tail(x) - k as f64 * t)).collect())
            }
        }
    }

    pub fn excess(&self, n: usize, x: f64) -> Result<Estimate> {
        Ok(self.excesses(n, x)?.pop().unwrap())
    }

    /// `jump^{n*}((x, inf))`; `n = 0` is the unit atom at the origin.
    pub fn tail(&self, n: usize, x: f64) -> Result<Estimate> {
        if n == 0 {
            return Ok(Estimate::exact(if x < 0.0 { 1.0 } else { 0.0 }));
        }
        let lead = n as f64 * self.jump.tail(x);
        Ok(Estimate::exact(lead) + self.excess(n, x)?)
    }

    /// The gridded powers, when the jump law is a grid.
    pub fn grid_powers(&self) -> Option<&[GriddedMeasure]> {
        match &self.backend {
            Backend::Grid(p) => Some(p),
            _ => None,
        }
    }
}

/// `law^{n*}((x, inf))`.
pub fn nfold_tail(law: Arc<dyn Law>, n: usize, x: f64) -> Result<Estimate> {
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "nfold_tail", x });
    }
    match n {
        0 => Ok(Estimate::exact(0.0)),
        1 => Ok(Estimate::exact(law.tail(x))),
        2 if law.as_grid().is_none() && law.pdf(law.support_start() + 1.0).is_some() => {
            super::twofold_tail(law.as_ref(), x)
        }
        _ => ConvolutionPowers::build(law, n, x.max(1e-9), TableOptions::default())?.tail(n, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{AnalyticLaw, PointMass};

    #[test]
    fn trivial_orders() {
        let p: Arc<dyn Law> = Arc::new(AnalyticLaw::pareto(2.0).unwrap());
        assert_eq!(nfold_tail(p.clone(), 0, 3.0).unwrap().value, 0.0);
        assert_eq!(nfold_tail(p.clone(), 1, 3.0).unwrap().value, p.tail(3.0));
    }

    #[test]
    fn erlang_three() {
        let e: Arc<dyn Law> = Arc::new(AnalyticLaw::exponential(1.0).unwrap());
        let got = nfold_tail(e, 3, 2.0).unwrap();
        let want = 5.0 * (-2.0f64).exp();
        assert!((got.value / want - 1.0).abs() < 1e-7, "{}", got.value);
        assert!((got.value - want).abs() <= got.error.max(1e-14));
    }

    #[test]
    fn point_mass_powers_are_exact() {
        let d: Arc<dyn Law> = Arc::new(PointMass::new(2.0).unwrap());
        let pw = ConvolutionPowers::build(d, 3, 10.0, TableOptions::default()).unwrap();
        assert_eq!(pw.tail(3, 5.9).unwrap().value, 1.0);
        assert_eq!(pw.tail(3, 6.0).unwrap().value, 0.0);
    }
}
