use super::{Law, Mean};
use crate::error::{check_positive, Error, Result};
use crate::quad::{Estimate, QuadOptions};

/// Unit point mass at `at >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    at: f64,
}

impl PointMass {
    pub fn new(at: f64) -> Result<Self> {
        if !(at >= 0.0 && at.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "at",
                value: at,
                reason: "point mass location must be finite and nonnegative",
            });
        }
        Ok(Self { at })
    }

    pub fn location(&self) -> f64 {
        self.at
    }
}

impl Law for PointMass {
    fn tail(&self, x: f64) -> f64 {
        if x < self.at {
            1.0
        } else {
            0.0
        }
    }

    fn mean(&self) -> Mean {
        Mean::Finite(self.at)
    }

    fn support_start(&self) -> f64 {
        self.at
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        vec![(self.at, 1.0)]
    }

    fn integrate(
        &self,
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        _extra_breaks: &[f64],
        _opts: &QuadOptions,
    ) -> Result<Estimate> {
        let v = if self.at >= a && self.at <= b { f(self.at) } else { 0.0 };
        Ok(Estimate::exact(v))
    }
}

/// Finite set of weighted atoms; weights must be nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    positions: Vec<f64>,
    masses: Vec<f64>,
    // suffix[k] = sum of masses[k..]
    suffix: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Precondition("discrete law needs at least one atom".into()));
        }
        for &(p, m) in &atoms {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "position",
                    value: p,
                    reason: "atoms must sit on [0, inf)",
                });
            }
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "mass",
                    value: m,
                    reason: "atom masses must be nonnegative",
                });
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let positions: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let mut suffix = vec![0.0; masses.len() + 1];
        for k in (0..masses.len()).rev() {
            suffix[k] = suffix[k + 1] + masses[k];
        }
        Ok(Self {
            positions,
            masses,
            suffix,
        })
    }

    /// Normalise a set of weights to a probability law.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        check_positive("total mass", total)?;
        Self::new(atoms.into_iter().map(|(p, m)| (p, m / total)).collect())
    }

    fn first_after(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| p <= x)
    }
}

impl Law for DiscreteLaw {
    fn tail(&self, x: f64) -> f64 {
        self.suffix[self.first_after(x)]
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        let lo = self.first_after(x);
        let hi = self.first_after(x + c);
        self.masses[lo..hi].iter().sum()
    }

    fn mean(&self) -> Mean {
        Mean::Finite(
            self.positions
                .iter()
                .zip(&self.masses)
                .map(|(p, m)| p * m)
                .sum::<f64>()
                / self.suffix[0],
        )
    }

    fn support_start(&self) -> f64 {
        self.positions[0]
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.positions.iter().copied().zip(self.masses.iter().copied()).collect()
    }

    fn total_mass(&self) -> f64 {
        self.suffix[0]
    }

    fn integrate(
        &self,
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        _extra_breaks: &[f64],
        _opts: &QuadOptions,
    ) -> Result<Estimate> {
        let lo = self.positions.partition_point(|&p| p < a);
        let hi = self.first_after(b);
        let v = (lo..hi).map(|k| self.masses[k] * f(self.positions[k])).sum();
        Ok(Estimate::exact(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::local_mass;

    #[test]
    fn point_mass_has_no_local_mass_away_from_atom() {
        let d0 = PointMass::new(0.0).unwrap();
        assert!(matches!(local_mass(&d0, 5.0, 1.0), Err(Error::Underflow { .. })));
        assert_eq!(d0.tail(0.0), 0.0);
    }

    #[test]
    fn discrete_tail_and_intervals() {
        let law = DiscreteLaw::new(vec![(2.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(law.tail(0.5), 1.0);
        assert_eq!(law.tail(1.0), 0.5);
        assert_eq!(law.interval_mass(0.0, 1.0), 0.5);
        assert_eq!(law.interval_mass(1.0, 1.0), 0.5);
        assert_eq!(law.mean(), Mean::Finite(1.5));
    }
}
