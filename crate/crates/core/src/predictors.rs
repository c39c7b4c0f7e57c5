//! One-block-ahead forecasts: ARHD and the ARH(1) projection baselines in
//! three coordinate systems, plus rolling-origin selection of `(α, β)`.
//!
//! | method | coordinates the ARH(1) estimator runs in                 |
//! |--------|----------------------------------------------------------|
//! | ARW    | W-coordinates (Sobolev inner product)                    |
//! | ARF    | L²-Fourier coordinates                                   |
//! | ARH    | raw grid values, L² product of the piecewise-linear interpolant |

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{midpoint_grid, BasisSpec, CoeffVec, Space};
use crate::curve::CurvePanel;
use crate::error::{ArhdError, Result};
use crate::estimator::{fit, ArhdFit, PenaltyConfig};
use crate::eval::mse;
use crate::operator::sym_eigen_desc;

/// Eigenvalues at or below this fraction of the largest are treated as zero.
const EIGEN_FLOOR: f64 = 1e-12;

/// A sample whose largest covariance eigenvalue is below this has no
/// variation at all; its forecast is the mean.
const NO_VARIATION: f64 = 1e-24;

/// A forecast of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// W-coordinates with the mean added back.
    pub coeffs: CoeffVec,
    /// Forecast on the `m`-point midpoint grid.
    pub values: Vec<f64>,
    pub method: String,
    pub params: String,
}

/// `φ x + Ψ x' + mean`.
pub fn predict_arhd(fit: &ArhdFit, last_curve: &CoeffVec, last_deriv: &CoeffVec) -> Result<Prediction> {
    last_curve.expect_space(Space::W)?;
    last_deriv.expect_space(Space::L)?;
    let n = fit.spec.n_funcs();
    for len in [last_curve.len(), last_deriv.len()] {
        if len != n {
            return Err(ArhdError::DimensionMismatch { expected: n, got: len });
        }
    }
    let coeffs = &fit.phi.mat * &last_curve.coeffs
        + &fit.psi.mat * &last_deriv.coeffs
        + &fit.mean_curve.coeffs;
    let coeffs = CoeffVec::new(Space::W, coeffs);
    let values = fit.spec.reconstruct_on_grid(&coeffs, fit.m)?;
    Ok(Prediction {
        coeffs,
        values,
        method: "ARHD".into(),
        params: format!("alpha={},beta={}", fit.penalty.alpha, fit.penalty.beta),
    })
}

/// ARH(1) projection estimator in orthonormal coordinates.
///
/// `y` holds centered curves as columns. The operator is estimated from the
/// `n − 1` consecutive pairs as `ρ = Π C₁ Π Γ⁺ Π` with `Π` the projector on
/// the top-`k` eigenvectors of `Γ`; both moments use the same pairs so that
/// `k = dim` recovers a noiseless linear recursion exactly. Returns `ρ·last`,
/// or zero when the sample has no variation.
pub fn arh1_forecast(y: &DMatrix<f64>, k: usize, last: &DVector<f64>) -> Result<DVector<f64>> {
    let dim = y.nrows();
    let n = y.ncols();
    if k < 1 || k > dim {
        return Err(ArhdError::InvalidParameter(format!(
            "k_n must be in [1, {dim}], got {k}"
        )));
    }
    if n < 3 {
        return Err(ArhdError::InsufficientHistory(format!(
            "projection estimator needs at least 3 curves, got {n}"
        )));
    }
    let pairs = (n - 1) as f64;
    let past = y.columns(0, n - 1);
    let next = y.columns(1, n - 1);
    let gamma = &past * past.transpose() / pairs;
    let c1 = &next * past.transpose() / pairs;
    let (vals, vecs) = sym_eigen_desc(&gamma);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= NO_VARIATION {
        return Ok(DVector::zeros(dim));
    }
    let v = vecs.columns(0, k).into_owned();
    let mut inv = DVector::zeros(k);
    for i in 0..k {
        if !(vals[i] > EIGEN_FLOOR * top.max(f64::MIN_POSITIVE)) {
            return Err(ArhdError::SingularSubspace(i + 1));
        }
        inv[i] = vals[i].recip();
    }
    let coords = v.transpose() * last;
    let scaled = coords.component_mul(&inv);
    let image = v.transpose() * (&c1 * (&v * scaled));
    Ok(&v * image)
}

/// ARH(1) in W-coordinates.
pub fn predict_arw(panel: &CurvePanel, k: usize, last_curve: &CoeffVec) -> Result<Prediction> {
    require_centered(panel)?;
    last_curve.expect_space(Space::W)?;
    let x = arh1_forecast(panel.x(), k, &last_curve.coeffs)?;
    finish_w(panel, x + &panel.mean_curve().coeffs, "ARW", k)
}

/// ARH(1) in L²-Fourier coordinates, ignoring Sobolev weights.
pub fn predict_arf(panel: &CurvePanel, k: usize, last_curve: &CoeffVec) -> Result<Prediction> {
    require_centered(panel)?;
    last_curve.expect_space(Space::W)?;
    let s = panel.spec().weights();
    let mut c = panel.x().clone();
    for mut col in c.column_iter_mut() {
        col.component_mul_assign(&s);
    }
    let last = last_curve.coeffs.component_mul(&s);
    let pred_l = arh1_forecast(&c, k, &last)?;
    let x = pred_l.component_div(&s);
    finish_w(panel, x + &panel.mean_curve().coeffs, "ARF", k)
}

/// ARH(1) on raw grid values with the L² product of the piecewise-linear
/// interpolant.
///
/// The panel's raw values are centered on their own grid mean. Output
/// values come from the grid forecast; `coeffs` is their projection.
pub fn predict_arh(panel: &CurvePanel, k: usize) -> Result<Prediction> {
    let values = panel.values();
    let (m, n) = values.shape();
    let mean = values.column_mean();
    let mut y = values.clone();
    for mut col in y.column_iter_mut() {
        col -= &mean;
    }
    let mass = hat_mass_matrix(panel.spec().delta(), m);
    let chol = mass
        .cholesky()
        .ok_or_else(|| ArhdError::InvalidParameter("hat mass matrix is not positive".into()))?;
    // z = Lᵀ y puts the grid in orthonormal coordinates: yᵀ M y = ‖z‖².
    let lt = chol.l().transpose();
    let z = &lt * &y;
    let last = z.column(n - 1).into_owned();
    let pred_z = arh1_forecast(&z, k, &last)?;
    let pred_y = lt
        .solve_upper_triangular(&pred_z)
        .ok_or_else(|| ArhdError::InvalidParameter("singular mass factor".into()))?;
    let out: Vec<f64> = (pred_y + mean).iter().copied().collect();
    let coeffs = panel.spec().project(&out)?;
    Ok(Prediction {
        coeffs,
        values: out,
        method: "ARH".into(),
        params: format!("k_n={k}"),
    })
}

/// Gram matrix of the hat functions on the midpoint grid over `[0, δ]`.
///
/// Linear interpolation between nodes, constant extension over the two half
/// cells at the ends.
pub fn hat_mass_matrix(delta: f64, m: usize) -> DMatrix<f64> {
    let h = delta / m as f64;
    let mut mass = DMatrix::zeros(m, m);
    if m == 1 {
        mass[(0, 0)] = delta;
        return mass;
    }
    for i in 0..m - 1 {
        mass[(i, i)] += h / 3.0;
        mass[(i + 1, i + 1)] += h / 3.0;
        mass[(i, i + 1)] += h / 6.0;
        mass[(i + 1, i)] += h / 6.0;
    }
    mass[(0, 0)] += h / 2.0;
    mass[(m - 1, m - 1)] += h / 2.0;
    mass
}

fn require_centered(panel: &CurvePanel) -> Result<()> {
    if !panel.is_centered() {
        return Err(ArhdError::NotCentered);
    }
    Ok(())
}

fn finish_w(panel: &CurvePanel, x: DVector<f64>, method: &str, k: usize) -> Result<Prediction> {
    let coeffs = CoeffVec::new(Space::W, x);
    let values = panel.spec().reconstruct_on_grid(&coeffs, panel.m())?;
    Ok(Prediction {
        coeffs,
        values,
        method: method.into(),
        params: format!("k_n={k}"),
    })
}

/// Forecasting method with its tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Arhd { alpha: f64, beta: f64 },
    Arw { k: usize },
    Arf { k: usize },
    Arh { k: usize },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Arhd { .. } => "ARHD",
            Method::Arw { .. } => "ARW",
            Method::Arf { .. } => "ARF",
            Method::Arh { .. } => "ARH",
        }
    }

    pub fn params(&self) -> String {
        match self {
            Method::Arhd { alpha, beta } => format!("alpha={alpha},beta={beta}"),
            Method::Arw { k } | Method::Arf { k } | Method::Arh { k } => format!("k_n={k}"),
        }
    }

    /// Forecast the block after the last curve of a centered training panel.
    pub fn forecast_next(&self, train: &CurvePanel) -> Result<Prediction> {
        require_centered(train)?;
        let last = train.n() - 1;
        match *self {
            Method::Arhd { alpha, beta } => {
                let f = fit(train, &PenaltyConfig::new(alpha, beta)?)?;
                predict_arhd(&f, &train.curve(last), &train.derivative(last))
            }
            Method::Arw { k } => predict_arw(train, k, &train.curve(last)),
            Method::Arf { k } => predict_arf(train, k, &train.curve(last)),
            Method::Arh { k } => predict_arh(train, k),
        }
    }
}

/// Outcome of a penalty grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<(f64, f64)>,
    /// Mean MSE per grid pair.
    pub scores: Vec<f64>,
    pub best: (f64, f64),
    pub folds: usize,
}

/// Default number of rolling folds: `min(10, n/4)`, at least 1.
pub fn default_folds(n: usize) -> usize {
    (n / 4).clamp(1, 10)
}

/// Rolling-origin cross-validation of `(α, β)`.
///
/// For each of the last `folds` blocks, fit on every earlier block (centered
/// on that prefix), forecast the block and score MSE on its raw grid values.
/// Among equal scores the larger `(α, β)` wins.
pub fn cross_validate(panel: &CurvePanel, grid: &[(f64, f64)], folds: usize) -> Result<CvResult> {
    let raw = panel.uncenter();
    let n = raw.n();
    if folds < 1 {
        return Err(ArhdError::InvalidParameter("folds must be at least 1".into()));
    }
    if n < folds + 3 {
        return Err(ArhdError::InsufficientHistory(format!(
            "{folds} folds need at least {} curves, got {n}",
            folds + 3
        )));
    }
    if grid.is_empty() {
        return Err(ArhdError::InvalidParameter("empty penalty grid".into()));
    }
    for &(a, b) in grid {
        PenaltyConfig::new(a, b)?;
    }
    let prefixes = (0..folds)
        .map(|f| {
            let len = n - folds + f;
            Ok((raw.columns(0, len).center()?, raw.block_values(len)))
        })
        .collect::<Result<Vec<_>>>()?;

    let scores = grid
        .par_iter()
        .map(|&(alpha, beta)| {
            let method = Method::Arhd { alpha, beta };
            let mut total = 0.0;
            for (train, target) in &prefixes {
                let pred = method.forecast_next(train)?;
                total += mse(target, &pred.values)?;
            }
            Ok(total / folds as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best] && grid[i] > grid[best]);
        if better {
            best = i;
        }
    }
    Ok(CvResult {
        grid: grid.to_vec(),
        best: grid[best],
        scores,
        folds,
    })
}

/// Write forecasts as CSV with columns `t,observed,predicted,method`.
///
/// Times are block-local midpoints shifted by `t_offset`; `observed` is left
/// empty when unknown.
pub fn write_predictions_csv<W: Write>(
    mut w: W,
    spec: &BasisSpec,
    t_offset: f64,
    observed: Option<&[f64]>,
    predictions: &[Prediction],
    comments: &[String],
) -> Result<()> {
    for line in comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "t,observed,predicted,method")?;
    for pred in predictions {
        let grid = midpoint_grid(spec.delta(), pred.values.len());
        if let Some(obs) = observed {
            if obs.len() != pred.values.len() {
                return Err(ArhdError::DimensionMismatch {
                    expected: pred.values.len(),
                    got: obs.len(),
                });
            }
        }
        for (j, (&t, v)) in grid.iter().zip(&pred.values).enumerate() {
            let obs = observed.map(|o| o[j].to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", t_offset + t, obs, v, pred.method)?;
        }
    }
    Ok(())
}
