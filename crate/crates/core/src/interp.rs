//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Carlson
//! slopes, as in SciPy's `PchipInterpolator`).

#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// `xs` must be strictly increasing with at least two nodes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len(), "need matching node arrays");
        debug_assert!(xs.windows(2).all(|w| w[1] > w[0]), "nodes not increasing");
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = m[0];
            d[1] = m[0];
        } else {
            for k in 1..n - 1 {
                if m[k - 1] * m[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], m[0], m[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        }
        Self { xs, ys, slopes: d }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Evaluate; outside the node range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.locate(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// Four-point Lagrange interpolant through the nodes around `x`; used as an
    /// independent-order comparison to estimate interpolation error.
    pub fn eval_lagrange4(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n < 4 {
            return self.eval(x);
        }
        let k = self.locate(x);
        let start = k.saturating_sub(1).min(n - 4);
        let idx = start..start + 4;
        let mut acc = 0.0;
        for i in idx.clone() {
            let mut w = 1.0;
            for j in idx.clone() {
                if i != j {
                    w *= (x - self.xs[j]) / (self.xs[i] - self.xs[j]);
                }
            }
            acc += w * self.ys[i];
        }
        acc
    }

    /// Local interpolation error indicator at `x`.
    pub fn error_indicator(&self, x: f64) -> f64 {
        (self.eval(x) - self.eval_lagrange4(x)).abs()
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
