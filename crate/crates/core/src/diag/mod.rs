//! Class-membership diagnostics: defining ratios and residuals sampled on
//! x grids, with convergence verdicts.

mod checks;
mod report;

pub use checks::{
    check_levy_difference, check_lloc, check_power_pair, check_power_ratio, check_s2d, check_s2loc,
    check_s2loc_hypotheses, check_sd, check_sloc, regime_target, validate_example, Example, PowerSource,
    ValidationBundle, DEFAULT_TOLERANCE,
};
pub use report::{DiagnosticReport, Verdict};

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
