//! Numerical toolkit for second-order subexponential tail asymptotics of
//! infinitely divisible laws on the half line.
//!
//! The crate is organised bottom-up:
//!
//! * [`laws`] closed-form heavy-tailed laws, jump laws and gridded measures;
//! * [`conv`] tail-accurate convolution (grid backend and survival-function
//!   quadrature backend), n-fold powers and compound sums;
//! * [`infdiv`] compound Poisson laws built from truncated Lévy measures, their
//!   convolution powers, and the logarithmic-series inversion;
//! * [`asym`] closed-form second-order predictors and regular-variation constants;
//! * [`diag`] empirical class-membership diagnostics with convergence verdicts.

pub mod asym;
pub mod conv;
pub mod diag;
pub mod error;
pub mod infdiv;
pub mod interp;
pub mod laws;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use quad::Estimate;
