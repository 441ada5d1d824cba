use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Failed,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Failed => "failed",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Sampled ratio or residual series with its target limit and a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub subject: String,
    pub xs: Vec<f64>,
    pub observed: Vec<f64>,
    pub target: f64,
    pub err: Vec<f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Median |observed - target| on the last third over the first third.
    pub trend: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl DiagnosticReport {
    /// Assemble a report and render the verdict.
    ///
    /// Converged: the last-third median of |observed - target| is within
    /// `tolerance * scale` (scale = |target|, or 1 for a zero target) plus the
    /// error estimate, and the residuals shrink (trend < 1) or sit inside the
    /// error band. Failed: every last-third sample is outside tolerance plus
    /// error and the residuals do not shrink (trend >= 0.9).
    pub fn new(
        name: impl Into<String>,
        subject: impl Into<String>,
        xs: Vec<f64>,
        observed: Vec<f64>,
        err: Vec<f64>,
        target: f64,
        tolerance: f64,
    ) -> Self {
        let mut r = Self {
            name: name.into(),
            subject: subject.into(),
            xs,
            observed,
            target,
            err,
            verdict: Verdict::Inconclusive,
            tolerance,
            trend: f64::NAN,
        };
        r.render();
        r
    }

    pub fn scale(&self) -> f64 {
        if self.target == 0.0 {
            1.0
        } else {
            self.target.abs()
        }
    }

    fn render(&mut self) {
        let n = self.observed.len();
        if n == 0 {
            self.verdict = Verdict::Inconclusive;
            return;
        }
        let third = n.div_ceil(3);
        let res: Vec<f64> = self
            .observed
            .iter()
            .map(|o| {
                let r = (o - self.target).abs();
                if r.is_nan() {
                    f64::INFINITY
                } else {
                    r
                }
            })
            .collect();
        let err = |i: usize| self.err.get(i).copied().unwrap_or(0.0).abs();
        let first = median(res[..third].to_vec());
        let last_idx = n - third..n;
        let last = median(res[last_idx.clone()].to_vec());
        let last_err = median(last_idx.clone().map(err).collect());
        self.trend = if first == 0.0 {
            if last == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            last / first
        };
        let band = self.tolerance * self.scale();
        let within_error = last_idx.clone().all(|i| res[i] <= err(i));
        let all_outside = last_idx.clone().all(|i| res[i] > band + err(i));
        self.verdict = if last <= band + last_err && (self.trend < 1.0 || within_error) {
            Verdict::Converged
        } else if all_outside && !(self.trend < 0.9) {
            Verdict::Failed
        } else {
            Verdict::Inconclusive
        };
    }

    /// Re-render the verdict with a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.render();
        self
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.xs.last()?, *self.observed.last()?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// CSV with columns `x,observed,target,err_estimate`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,observed,target,err_estimate\n");
        for i in 0..self.xs.len() {
            let e = self.err.get(i).copied().unwrap_or(0.0);
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.xs[i], self.observed[i], self.target, e
            );
        }
        s
    }
}
