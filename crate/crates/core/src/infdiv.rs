//! Compound Poisson laws from truncated Lévy measures, their convolution
//! powers, and the logarithmic-series inversion.
//!
//! A Lévy measure restricted to `(c, inf)` is described by its mass
//! `delta = nu((c, inf))` and the normalised jump law `nu_c`. The compound
//! Poisson law is `e^{-delta} sum_n delta^n / n! nu_c^{n*}` and its `t`-th
//! convolution power replaces `delta` by `t delta`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conv::{
    combine_grids, convolve_grid_capped, shift_to_zero, CompoundWeights, ConvolutionPowers, TableOptions,
    DEFAULT_BUDGET,
};
use crate::error::{check_positive, Error, Result};
use crate::laws::{discretize, Extrapolation, GriddedMeasure, JumpSpec, Law, Mean};
use crate::quad::{self, Estimate, QuadOptions};

/// Truncated Lévy measure: cutoff `c`, mass `delta` above it, normalised jump law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevySpec {
    pub cutoff: f64,
    pub delta: f64,
    pub jump: JumpSpec,
}

impl LevySpec {
    pub fn new(cutoff: f64, delta: f64, jump: JumpSpec) -> Result<Self> {
        let spec = Self { cutoff, delta, jump };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(cutoff: f64, delta: f64, jump: &str) -> Result<Self> {
        Self::new(cutoff, delta, JumpSpec::Text(jump.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("cutoff", self.cutoff)?;
        check_positive("delta", self.delta)?;
        self.jump_law().map(|_| ())
    }

    /// The normalised jump law on `(cutoff, inf)`.
    pub fn jump_law(&self) -> Result<Arc<dyn Law>> {
        let law = self.jump.build(self.cutoff)?;
        if law.tail(self.cutoff) < 1.0 - 1e-12 {
            return Err(Error::Precondition(format!(
                "jump law puts mass {} at or below the cutoff",
                1.0 - law.tail(self.cutoff)
            )));
        }
        Ok(law)
    }
}

/// Construction parameters of a [`CompoundPoissonLaw`].
#[derive(Debug, Clone, Copy)]
pub struct CompoundOptions {
    /// Largest `x` at which tails can be queried.
    pub x_max: f64,
    /// Largest power `t` the convolution tables are sized for.
    pub max_t: f64,
    pub budget: f64,
    pub tables: TableOptions,
}

impl Default for CompoundOptions {
    fn default() -> Self {
        Self {
            x_max: 1e4,
            max_t: 3.0,
            budget: DEFAULT_BUDGET,
            tables: TableOptions::default(),
        }
    }
}

impl CompoundOptions {
    pub fn with_x_max(mut self, x_max: f64) -> Self {
        self.x_max = x_max;
        self
    }

    pub fn with_max_t(mut self, max_t: f64) -> Self {
        self.max_t = max_t;
        self
    }
}

/// `e^{-delta} sum_n delta^n / n! jump^{n*}`.
///
/// Tails are evaluated as `delta tail_jump(x) + sum_n p_n D_n(x)` with the
/// n-fold excesses `D_n` of the jump law, so the difference to the Lévy tail
/// `delta tail_jump(x)` is available without cancellation.
#[derive(Clone)]
pub struct CompoundPoissonLaw {
    cutoff: f64,
    delta: f64,
    weights: CompoundWeights,
    powers: Arc<ConvolutionPowers>,
    opts: CompoundOptions,
}

impl fmt::Debug for CompoundPoissonLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompoundPoissonLaw")
            .field("cutoff", &self.cutoff)
            .field("delta", &self.delta)
            .field("jump", self.powers.jump())
            .finish()
    }
}

/// Compound Poisson law of a Lévy spec with default options.
pub fn compound_poisson(spec: &LevySpec) -> Result<CompoundPoissonLaw> {
    CompoundPoissonLaw::new(spec, CompoundOptions::default())
}

impl CompoundPoissonLaw {
    pub fn new(spec: &LevySpec, opts: CompoundOptions) -> Result<Self> {
        spec.validate()?;
        Self::from_jump(spec.jump_law()?, spec.cutoff, spec.delta, opts)
    }

    pub fn from_jump(jump: Arc<dyn Law>, cutoff: f64, delta: f64, opts: CompoundOptions) -> Result<Self> {
        check_positive("delta", delta)?;
        check_positive("max_t", opts.max_t)?;
        let weights = CompoundWeights::poisson_with_budget(delta, opts.budget)?;
        let widest = CompoundWeights::poisson_with_budget(delta * opts.max_t.max(1.0), opts.budget)?;
        let powers = ConvolutionPowers::build(jump, widest.truncation(), opts.x_max, opts.tables)?;
        Ok(Self {
            cutoff,
            delta,
            weights,
            powers: Arc::new(powers),
            opts,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn jump(&self) -> &Arc<dyn Law> {
        self.powers.jump()
    }

    pub fn weights(&self) -> &CompoundWeights {
        &self.weights
    }

    pub fn x_max(&self) -> f64 {
        self.opts.x_max
    }

    /// `mu^{t*}`: same jump law, mass `t delta`. Tables are shared when large enough.
    pub fn power(&self, t: f64) -> Result<Self> {
        check_positive("t", t)?;
        let weights = CompoundWeights::poisson_with_budget(t * self.delta, self.opts.budget)?;
        if weights.truncation() <= self.powers.max_n() {
            return Ok(Self {
                cutoff: self.cutoff,
                delta: t * self.delta,
                weights,
                powers: self.powers.clone(),
                opts: self.opts,
            });
        }
        Self::from_jump(self.jump().clone(), self.cutoff, t * self.delta, self.opts)
    }

    /// Tail of the Lévy measure, `delta tail_jump(x)`.
    pub fn levy_tail(&self, x: f64) -> f64 {
        self.delta * self.jump().tail(x)
    }

    /// `nu((x, x + c])` of the Lévy measure.
    pub fn levy_interval_mass(&self, x: f64, c: f64) -> f64 {
        self.delta * self.jump().interval_mass(x, c)
    }

    /// `mu((x, inf)) - nu((x, inf)) = sum_n p_n D_n(x)`.
    pub fn excess_over_levy(&self, x: f64) -> Result<Estimate> {
        if x < 0.0 {
            return Ok(Estimate::exact(1.0 - self.levy_tail(x)));
        }
        let d = self.powers.excesses(self.weights.truncation(), x)?;
        Ok(self
            .weights
            .weights()
            .iter()
            .zip(&d)
            .skip(2)
            .map(|(w, dn)| dn.scale(*w))
            .sum())
    }

    pub fn try_tail(&self, x: f64) -> Result<Estimate> {
        if x < 0.0 {
            return Ok(Estimate::exact(1.0));
        }
        Ok(Estimate::exact(self.levy_tail(x)) + self.excess_over_levy(x)?)
    }

    /// `mu((x, x + c])`, the excess terms entering only as a difference.
    pub fn try_interval_mass(&self, x: f64, c: f64) -> Result<Estimate> {
        check_positive("c", c)?;
        let lead = Estimate::exact(self.levy_interval_mass(x, c));
        if x < 0.0 {
            return Ok(Estimate::exact(1.0) - self.try_tail(x + c)?);
        }
        Ok(lead + self.excess_over_levy(x)? - self.excess_over_levy(x + c)?)
    }

    /// `mu^{t*}((x, inf)) - t mu((x, inf)) = sum_n (p_n(t delta) - t p_n(delta)) D_n(x)`;
    /// the single-jump terms cancel exactly.
    pub fn power_excess(&self, t: f64, x: f64) -> Result<Estimate> {
        check_positive("t", t)?;
        let wt = CompoundWeights::poisson_with_budget(t * self.delta, self.opts.budget)?;
        let m = wt.truncation().max(self.weights.truncation());
        if m > self.powers.max_n() {
            return self.power(t)?.power_excess_rebuilt(self, t, x);
        }
        let d = self.powers.excesses(m, x)?;
        let coef = |n: usize| {
            wt.weights().get(n).copied().unwrap_or(0.0) - t * self.weights.weights().get(n).copied().unwrap_or(0.0)
        };
        Ok(d.iter().enumerate().skip(2).map(|(n, dn)| dn.scale(coef(n))).sum())
    }

    fn power_excess_rebuilt(&self, base: &Self, t: f64, x: f64) -> Result<Estimate> {
        Ok(self.excess_over_levy(x)? - base.excess_over_levy(x)?.scale(t))
    }

    /// Laplace transform `exp(-delta (1 - L_jump(s)))`.
    pub fn laplace(&self, s: f64) -> Result<Estimate> {
        let l = laplace(self.jump().as_ref(), s)?;
        let v = (-self.delta * (1.0 - l.value)).exp();
        Ok(Estimate::new(v, v * self.delta * l.error))
    }
}

impl Law for CompoundPoissonLaw {
    /// NaN outside the tabulated range; see [`CompoundPoissonLaw::try_tail`].
    fn tail(&self, x: f64) -> f64 {
        self.try_tail(x).map_or(f64::NAN, |e| e.value)
    }

    fn interval_mass(&self, x: f64, c: f64) -> f64 {
        self.try_interval_mass(x, c).map_or(f64::NAN, |e| e.value)
    }

    fn mean(&self) -> Mean {
        match self.jump().mean() {
            Mean::Finite(m) => Mean::Finite(self.delta * m),
            Mean::Infinite => Mean::Infinite,
        }
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        vec![(0.0, (-self.delta).exp())]
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.cutoff]
    }

    fn integrate(
        &self,
        _f: &dyn Fn(f64) -> f64,
        _a: f64,
        _b: f64,
        _extra_breaks: &[f64],
        _opts: &QuadOptions,
    ) -> Result<Estimate> {
        Err(Error::Unsupported(
            "integration against a compound Poisson law; use its convolution powers".into(),
        ))
    }
}

/// Laplace transform `int e^{-t x} law(dx)` of a law or gridded measure.
pub fn laplace(law: &dyn Law, t: f64) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(Error::Domain { what: "laplace", x: t });
    }
    if let Some(g) = law.as_grid() {
        return g.laplace(t);
    }
    if t == 0.0 {
        return Ok(Estimate::exact(law.total_mass()));
    }
    let mut est: Estimate = law
        .atoms()
        .into_iter()
        .map(|(p, m)| Estimate::exact(m * (-t * p).exp()))
        .sum();
    let s = law.support_start();
    if law.pdf(s + 1.0).is_some() {
        let f = |x: f64| (-t * x).exp() * law.pdf(x).unwrap_or(0.0);
        let mut breaks = law.breakpoints();
        breaks.extend([s + 1e-6, s + 1e-3, s + 1.0 / t, s + 10.0 / t]);
        est = est + quad::integrate_to_infinity_pts(f, s, &breaks, &QuadOptions::rel(1e-12))?;
    }
    Ok(est)
}

/// Lattice parameters for the gridded series of [`sigma_from_spec`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub step: f64,
    pub cells: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 1.0 / 64.0,
            cells: 4096,
        }
    }
}

/// The jump law on a lattice with origin 0.
pub fn jump_grid(spec: &LevySpec, grid: GridSpec) -> Result<GriddedMeasure> {
    let law = spec.jump_law()?;
    match law.as_grid() {
        Some(g) => shift_to_zero(g),
        None => discretize(law.as_ref(), 0.0, grid.step, grid.cells),
    }
}

/// `sigma = e^{-delta} / (1 - e^{-delta}) sum_{n >= 1} delta^n / n! nu_c^{n*}`,
/// the compound Poisson law conditioned on at least one jump, on a lattice.
pub fn sigma_from_spec(spec: &LevySpec, grid: GridSpec) -> Result<GriddedMeasure> {
    let nu = jump_grid(spec, grid)?;
    sigma_from_grid(&nu, spec.delta)
}

pub fn sigma_from_grid(nu: &GriddedMeasure, delta: f64) -> Result<GriddedMeasure> {
    let w = CompoundWeights::poisson(delta)?;
    let norm = -(-delta).exp_m1();
    let cap = nu.len();
    let mut power = nu.clone();
    let mut acc = nu.scaled(w.weights()[1] / norm)?;
    for n in 2..=w.truncation() {
        power = convolve_grid_capped(&power, nu, cap)?;
        acc = combine_grids(&[(1.0, &acc), (w.weights()[n] / norm, &power)])?;
    }
    Ok(acc)
}

/// Result of [`invert_levy`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Inversion {
    pub measure: GriddedMeasure,
    /// Mass of the negative cells set to zero (each below the clamp threshold).
    pub clamped_mass: f64,
    pub terms: usize,
    /// Bound on the weight mass dropped by truncating the series.
    pub truncation_bound: f64,
}

/// Negative cells with magnitude below this are treated as truncation noise.
pub const CLAMP_THRESHOLD: f64 = 1e-10;

/// `nu_c = -(1/delta) sum_{n >= 1} (1 - e^delta)^n / n sigma^{n*}`, valid for
/// `e^delta - 1 < 1`.
pub fn invert_levy(sigma: &GriddedMeasure, delta: f64) -> Result<Inversion> {
    check_positive("delta", delta)?;
    if delta >= std::f64::consts::LN_2 {
        return Err(Error::Precondition(format!(
            "inversion series needs delta < ln 2, got {delta}"
        )));
    }
    let sigma = shift_to_zero(sigma)?;
    let w = CompoundWeights::log_series(delta, DEFAULT_BUDGET)?;
    let cap = sigma.len();
    let mut power = sigma.clone();
    let mut acc = sigma.scaled(w.weights()[1])?;
    for n in 2..=w.truncation() {
        power = convolve_grid_capped(&power, &sigma, cap)?;
        acc = combine_grids(&[(1.0, &acc), (w.weights()[n], &power)])?;
    }
    let mut negative = 0.0;
    let mut worst: f64 = 0.0;
    let mut clean = |v: f64| {
        if v < 0.0 {
            negative += -v;
            worst = worst.max(-v);
            0.0
        } else {
            v
        }
    };
    let lattice: Vec<f64> = acc.lattice().into_iter().map(&mut clean).collect();
    let overflow = clean(acc.overflow());
    if worst > CLAMP_THRESHOLD {
        return Err(Error::Inversion {
            negative_mass: negative,
        });
    }
    let extrapolation = match acc.extrapolation() {
        e @ Extrapolation::None => e,
        e if overflow > 0.0 => e,
        _ => Extrapolation::None,
    };
    let measure = GriddedMeasure::from_lattice(0.0, acc.step(), lattice, overflow, false, extrapolation)?;
    Ok(Inversion {
        measure,
        clamped_mass: negative,
        terms: w.truncation(),
        truncation_bound: w.dropped(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_spec() -> LevySpec {
        LevySpec::parse(1.0, 0.5, "powerlaw:alpha=2").unwrap()
    }

    #[test]
    fn atom_at_zero() {
        let cp = compound_poisson(&pareto_spec()).unwrap();
        assert!((cp.tail(0.0) - (1.0 - (-0.5f64).exp())).abs() < 1e-13);
        assert_eq!(cp.mean(), Mean::Finite(1.0));
    }

    #[test]
    fn small_delta_is_single_jump() {
        let spec = LevySpec::parse(1.0, 1e-4, "powerlaw:alpha=2").unwrap();
        let cp = compound_poisson(&spec).unwrap();
        for &x in &[2.0, 10.0, 100.0] {
            let r = cp.tail(x) / cp.levy_tail(x);
            assert!((r - 1.0).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn power_one_is_identity() {
        let cp = compound_poisson(&pareto_spec()).unwrap();
        let same = cp.power(1.0).unwrap();
        assert_eq!(same.tail(7.0), cp.tail(7.0));
        assert_eq!(cp.power_excess(1.0, 7.0).unwrap().value, 0.0);
    }

    #[test]
    fn inversion_rejects_large_delta() {
        let s = GriddedMeasure::dirac(0.0, 0.1).unwrap();
        assert!(invert_levy(&s, 0.7).unwrap_err().is_precondition());
    }

    #[test]
    fn point_mass_round_trip() {
        let spec = LevySpec::parse(1.0, 0.5, "point:at=2").unwrap();
        let grid = GridSpec { step: 0.25, cells: 256 };
        let sigma = sigma_from_spec(&spec, grid).unwrap();
        assert!((sigma.total() - 1.0).abs() < 1e-12);
        // atoms of sigma at 2, 4, 6, ... proportional to delta^n / n!
        let v = sigma.lattice();
        assert!((v[16] / v[8] - 0.25).abs() < 1e-12);
        let inv = invert_levy(&sigma, 0.5).unwrap();
        let r = inv.measure.lattice();
        for (k, m) in r.iter().enumerate() {
            let want = if k == 8 { 1.0 } else { 0.0 };
            assert!((m - want).abs() < 1e-10, "cell {k}: {m}");
        }
    }
}
