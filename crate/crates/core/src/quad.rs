//! Adaptive Gauss–Kronrod quadrature (21-point Kronrod / 10-point Gauss pair)
//! with global error control, user breakpoints and a half-infinite variant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub const fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.value * k, self.error * k.abs())
    }

    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value - rhs.value, self.error + rhs.error)
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 1 << 20,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_292_526_480,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One Gauss–Kronrod 21-point panel: returns (integral, error, |integral|).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs)
}

/// Fixed 21-point Kronrod rule on `[a, b]` (no error control).
pub fn fixed_gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    gk21(f, a, b).0
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate> {
    integrate_pts(f, &[a, b], opts)
}

/// Integrate `f` over `[pts[0], pts[last]]`, with the interior points used as
/// initial breakpoints. Points must be non-decreasing; empty panels are skipped.
pub fn integrate_pts<F: Fn(f64) -> f64>(f: F, pts: &[f64], opts: &QuadOptions) -> Result<Estimate> {
    let (est, target) = adapt(&f, pts, opts);
    if !est.value.is_finite() || est.error > target {
        return Err(Error::Quadrature {
            achieved: est.error,
            target,
        });
    }
    Ok(est)
}

/// Like [`integrate_pts`] but returns the best estimate even when the
/// tolerance was not reached; the error field then reports what was achieved.
pub fn integrate_pts_lenient<F: Fn(f64) -> f64>(f: F, pts: &[f64], opts: &QuadOptions) -> Estimate {
    adapt(&f, pts, opts).0
}

fn adapt<F: Fn(f64) -> f64>(f: &F, pts: &[f64], opts: &QuadOptions) -> (Estimate, f64) {
    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    if pts.len() < 2 {
        return (Estimate::default(), 0.0);
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error, _) = gk21(f, a, b);
        total += value;
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    if !total.is_finite() {
        return (Estimate::new(total, f64::INFINITY), target(0.0));
    }
    let mut frozen = Vec::new();
    while total_err > target(total) && heap.len() + frozen.len() < opts.max_intervals {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) < 16.0 * f64::EPSILON * mid.abs() {
            // too narrow to split: keep it but stop refining
            frozen.push(seg);
            continue;
        }
        let (v1, e1, _) = gk21(f, seg.a, mid);
        let (v2, e2, _) = gk21(f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated update error
    let all = || heap.iter().chain(frozen.iter());
    let value: f64 = all().map(|s| s.value).sum();
    let error: f64 = all().map(|s| s.error).sum();
    (Estimate::new(value, error), target(value))
}

/// Integrate `f` over `[a, inf)` through `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: &QuadOptions) -> Result<Estimate> {
    integrate_to_infinity_pts(f, a, &[], opts)
}

/// Half-infinite integral with extra breakpoints given in the original variable.
pub fn integrate_to_infinity_pts<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Estimate> {
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let x = a + s / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut pts = vec![0.0];
    let mut inner: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a && x.is_finite())
        .map(|&x| (x - a) / (1.0 + (x - a)))
        .collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(1.0);
    integrate_pts(g, &pts, opts)
}

/// Geometric breakpoints between `lo > 0` and `hi`, roughly `per_decade` per decade.
pub fn geometric_points(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if !(lo > 0.0) || !(hi > lo) {
        return vec![];
    }
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (hi / lo).powf(1.0 / n as f64);
    (0..=n).map(|k| lo * ratio.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::default().with_abs(1e-13)).unwrap();
        assert!((r.value - 0.0).abs() < 1e-14);
        let r = integrate(|x| x.powi(19), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 0.05).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadOptions::rel(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn half_infinite_power_and_exponential() {
        let r = integrate_to_infinity(|x: f64| (1.0 + x).powi(-3), 0.0, &QuadOptions::rel(1e-12)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 3.0, &QuadOptions::rel(1e-12)).unwrap();
        assert!((r.value / (-3f64).exp() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tiny_integrals_keep_relative_accuracy() {
        let r = integrate(|x: f64| 1e-250 * (-x).exp(), 0.0, 1.0, &QuadOptions::rel(1e-12)).unwrap();
        assert!((r.value / (1e-250 * (1.0 - (-1f64).exp())) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let opts = QuadOptions::rel(1e-14).with_max_intervals(3);
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-4, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn geometric_points_span() {
        let p = geometric_points(1.0, 1000.0, 4);
        assert_eq!(p.len(), 13);
        assert!((p[12] - 1000.0).abs() < 1e-9);
    }
}
