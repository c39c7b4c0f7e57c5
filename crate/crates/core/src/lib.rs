//! Autoregressive forecasting of curves that uses the curves' first
//! derivatives:
//!
//! ```text
//! X_{i+1} = φ(X_i) + Ψ(X'_i) + ε_{i+1}
//! ```
//!
//! Curves live in the Sobolev space `W = W^{2,1}[0, δ]`, derivatives in
//! `L²[0, δ]`; both are represented by coordinates against truncated
//! orthonormal Fourier systems ([`basis`]). A long series is cut into blocks
//! of length `δ` ([`curve`]), summarized by six moment operators
//! ([`covariance`]), and `(φ, Ψ)` is estimated by a doubly penalized inverse
//! ([`estimator`]). [`predictors`] has the forecasts and the ARH(1)
//! baselines, [`wong`] a process with known operators, and [`eval`] the
//! scores and benchmark drivers.
//!
//! ```
//! use arhd::{basis::BasisSpec, curve::slice, estimator::{fit, PenaltyConfig}};
//! use arhd::predictors::predict_arhd;
//! use arhd::wong::{simulate, WongConfig};
//!
//! let config = WongConfig { n_blocks: 40, m: 20, ..WongConfig::default() };
//! let traj = simulate(&config).unwrap();
//! let spec = BasisSpec::for_grid(config.delta, config.m).unwrap();
//! let panel = slice(&traj, &spec).unwrap().center().unwrap();
//! let model = fit(&panel, &PenaltyConfig::new(0.1, 0.5).unwrap()).unwrap();
//! let last = panel.n() - 1;
//! let next = predict_arhd(&model, &panel.curve(last), &panel.derivative(last)).unwrap();
//! assert_eq!(next.values.len(), 20);
//! ```

pub mod basis;
pub mod covariance;
pub mod curve;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod operator;
pub mod predictors;
pub mod wong;

pub use basis::{BasisSpec, CoeffVec, Space};
pub use curve::{CurvePanel, Trajectory};
pub use error::{ArhdError, Result};
pub use estimator::{fit, ArhdFit, PenaltyConfig};
pub use operator::OpMatrix;
pub use predictors::{Method, Prediction};

// The book's snippets run as doc-tests so they cannot drift from the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
    #[doc = include_str!("../../../book/src/covariance.md")]
    mod covariance {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/wong.md")]
    mod wong {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
}
