//! Doubly penalized estimation of `(φ, Ψ)` in `X_{i+1} = φ(X_i) + Ψ(X'_i) + ε_{i+1}`.
//!
//! The moment system
//!
//! ```text
//! Δ  = φ Γ   + Ψ Γ'
//! Δ' = φ Γ'* + Ψ Γ''
//! ```
//!
//! is solved by eliminating one unknown through a resolvent with ridge `α`,
//! which leaves the Schur complements
//!
//! ```text
//! S_φ = Γ   − Γ'* (Γ'' + αI)⁻¹ Γ'      T_φ = Δ  − Δ' (Γ'' + αI)⁻¹ Γ'
//! S_Ψ = Γ'' − Γ'  (Γ  + αI)⁻¹ Γ'*      T_Ψ = Δ' − Δ  (Γ  + αI)⁻¹ Γ'*
//! ```
//!
//! and then inverting those with a second ridge `β`:
//! `φ_n = T_φ (S_φ + βI)⁻¹`, `Ψ_n = T_Ψ (S_Ψ + βI)⁻¹`.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, CoeffVec, Space};
use crate::covariance::{covariances, Covariances};
use crate::curve::CurvePanel;
use crate::error::{ArhdError, Result};
use crate::operator::{max_asymmetry, sym_eigenvalues, symmetrize, OpMatrix};

/// Schur operators below this eigenvalue abort the fit.
pub const SCHUR_TOL: f64 = 1e-8;

/// Header line of the fit file format.
pub const FIT_FILE_HEADER: &str = "arhd-fit v1";

/// Ridge parameters `(α, β)`, optionally tied to the sample size through
/// `α_n = n^{-a}`, `β_n = n^{-b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub alpha: f64,
    pub beta: f64,
    pub rate_a: Option<f64>,
    pub rate_b: Option<f64>,
}

impl PenaltyConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ArhdError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            alpha,
            beta,
            rate_a: None,
            rate_b: None,
        })
    }

    /// Rate schedule `α_n = n^{-a}`, `β_n = n^{-b}`.
    ///
    /// Requires `b < a/2` and `2a + 2b < 1/2`. The stored `alpha`/`beta`
    /// are the values at `n = 1` until [`PenaltyConfig::at`] resolves them.
    pub fn schedule(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(ArhdError::InvalidParameter(format!(
                "rate exponents must be positive, got a={a}, b={b}"
            )));
        }
        if b >= a / 2.0 || 2.0 * a + 2.0 * b >= 0.5 {
            return Err(ArhdError::InvalidParameter(format!(
                "rates must satisfy b < a/2 and 2a + 2b < 1/2, got a={a}, b={b}"
            )));
        }
        Ok(Self {
            alpha: 1.0,
            beta: 1.0,
            rate_a: Some(a),
            rate_b: Some(b),
        })
    }

    /// Concrete penalties for a sample of `n` curves.
    pub fn at(&self, n: usize) -> Self {
        let nf = n as f64;
        Self {
            alpha: self.rate_a.map_or(self.alpha, |a| nf.powf(-a)),
            beta: self.rate_b.map_or(self.beta, |b| nf.powf(-b)),
            ..*self
        }
    }
}

/// `(T + αI)⁻¹` for a symmetric positive semidefinite `T`.
pub fn resolvent(t: &OpMatrix, alpha: f64) -> Result<OpMatrix> {
    if t.dom != t.cod {
        return Err(ArhdError::SpaceMismatch {
            expected: t.dom,
            got: t.cod,
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ArhdError::InvalidParameter(format!(
            "resolvent parameter must be positive, got {alpha}"
        )));
    }
    let asym = max_asymmetry(&t.mat);
    if asym > 1e-10 * t.mat.amax().max(1.0) {
        return Err(ArhdError::NotSymmetric(asym));
    }
    let n = t.dim();
    let shifted = symmetrize(&t.mat) + DMatrix::identity(n, n) * alpha;
    let chol = shifted
        .cholesky()
        .ok_or_else(|| ArhdError::Indefinite(crate::operator::min_eigenvalue(&t.mat)))?;
    Ok(OpMatrix::new(t.dom, t.cod, chol.inverse()))
}

/// `S_φ`, `S_Ψ`, `T_φ`, `T_Ψ` at a fixed inner ridge `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurOperators {
    /// W → W
    pub s_phi: OpMatrix,
    /// L → L
    pub s_psi: OpMatrix,
    /// W → W
    pub t_phi: OpMatrix,
    /// L → W
    pub t_psi: OpMatrix,
}

pub fn schur_operators(cov: &Covariances, alpha: f64) -> Result<SchurOperators> {
    let r_pp = resolvent(&cov.gamma_pp, alpha)?;
    let r_g = resolvent(&cov.gamma, alpha)?;

    // Γ'* R'' Γ' and Δ' R'' Γ' share the trailing factor.
    let rpp_gp = r_pp.compose(&cov.gamma_p)?;
    let rg_gps = r_g.compose(&cov.gamma_p_star)?;

    let mut s_phi = cov.gamma.sub(&cov.gamma_p_star.compose(&rpp_gp)?)?;
    let mut s_psi = cov.gamma_pp.sub(&cov.gamma_p.compose(&rg_gps)?)?;
    s_phi.mat = symmetrize(&s_phi.mat);
    s_psi.mat = symmetrize(&s_psi.mat);

    let t_phi = cov.delta.sub(&cov.delta_p.compose(&rpp_gp)?)?;
    let t_psi = cov.delta_p.sub(&cov.delta.compose(&rg_gps)?)?;

    Ok(SchurOperators {
        s_phi,
        s_psi,
        t_phi,
        t_psi,
    })
}

/// Post-fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Ascending spectrum of `S_φ`.
    pub s_phi_spectrum: Vec<f64>,
    pub s_phi_min_eigenvalue: f64,
    pub s_psi_min_eigenvalue: f64,
    /// Mean squared W-norm of the in-sample one-step residuals.
    pub residual_mean_sq: f64,
    /// `‖φ_n + Ψ_n D‖₂`
    pub a_hat_norm: f64,
}

/// Fitted ARHD operators together with what is needed to forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ArhdFit {
    pub spec: BasisSpec,
    /// Points per block of the data the fit came from.
    pub m: usize,
    /// Training sample size.
    pub n: usize,
    /// W → W
    pub phi: OpMatrix,
    /// L → W
    pub psi: OpMatrix,
    /// Penalties actually used (schedules resolved at `n`).
    pub penalty: PenaltyConfig,
    pub mean_curve: CoeffVec,
    pub diagnostics: FitDiagnostics,
}

/// Moments used by [`fit`], all taken over the `n − 1` consecutive pairs.
///
/// `Γ`, `Γ'`, `Γ''` come from the leading curves `X_1..X_{n-1}` and `Δ`,
/// `Δ'` from the pairs `(X_k, X_{k+1})`, each divided by `n − 1`. Then the
/// sample moment equations `Δ = φΓ + ΨΓ'` hold exactly for data that follow
/// the recursion without noise; the full-sample `Γ` would carry an extra
/// `X_n X_nᵀ` term and bias every fit by `O(1/n)`.
pub fn estimation_moments(panel: &CurvePanel) -> Result<Covariances> {
    let n = panel.n();
    if n < 3 {
        return Err(ArhdError::InsufficientHistory(format!(
            "fitting needs at least 3 curves, got {n}"
        )));
    }
    let mut cov = covariances(&panel.columns(0, n - 1))?;
    let pairs = (n - 1) as f64;
    let past = panel.x().columns(0, n - 1);
    let past_p = panel.xp().columns(0, n - 1);
    let next = panel.x().columns(1, n - 1);
    cov.delta.mat = next * past.transpose() / pairs;
    cov.delta_p.mat = next * past_p.transpose() / pairs;
    cov.n = n - 1;
    Ok(cov)
}

/// Solve `X (S + βI) = T` through a Cholesky factorization.
fn right_solve(t: &OpMatrix, s: &OpMatrix, beta: f64) -> Result<OpMatrix> {
    let n = s.dim();
    let shifted = &s.mat + DMatrix::identity(n, n) * beta;
    let chol = shifted
        .cholesky()
        .ok_or_else(|| ArhdError::DegenerateSchur(crate::operator::min_eigenvalue(&s.mat)))?;
    let xt = chol.solve(&t.mat.transpose());
    Ok(OpMatrix::new(s.dom, t.cod, xt.transpose()))
}

/// Fit `(φ_n, Ψ_n)` on a centered panel.
pub fn fit(panel: &CurvePanel, penalty: &PenaltyConfig) -> Result<ArhdFit> {
    if !panel.is_centered() {
        return Err(ArhdError::NotCentered);
    }
    let n = panel.n();
    if n < 3 {
        return Err(ArhdError::InsufficientHistory(format!(
            "fitting needs at least 3 curves, got {n}"
        )));
    }
    let penalty = penalty.at(n);
    let cov = estimation_moments(panel)?;
    let schur = schur_operators(&cov, penalty.alpha)?;

    let s_phi_spectrum = sym_eigenvalues(&schur.s_phi.mat);
    let s_phi_min = s_phi_spectrum.first().copied().unwrap_or(0.0);
    let s_psi_min = sym_eigenvalues(&schur.s_psi.mat)
        .first()
        .copied()
        .unwrap_or(0.0);
    for v in [s_phi_min, s_psi_min] {
        if v < -SCHUR_TOL {
            return Err(ArhdError::DegenerateSchur(v));
        }
    }

    let phi = right_solve(&schur.t_phi, &schur.s_phi, penalty.beta)?;
    let psi = right_solve(&schur.t_psi, &schur.s_psi, penalty.beta)?;

    let spec = *panel.spec();
    let dmat = spec.derivative_operator();
    let a_hat = phi.add(&psi.compose(&dmat)?)?;
    let residual_mean_sq = {
        let past = panel.x().columns(0, n - 1);
        let next = panel.x().columns(1, n - 1);
        let resid = next - &a_hat.mat * past;
        resid.norm_squared() / (n - 1) as f64
    };

    Ok(ArhdFit {
        spec,
        m: panel.m(),
        n,
        diagnostics: FitDiagnostics {
            s_phi_spectrum,
            s_phi_min_eigenvalue: s_phi_min,
            s_psi_min_eigenvalue: s_psi_min,
            residual_mean_sq,
            a_hat_norm: a_hat.norm(),
        },
        phi,
        psi,
        penalty,
        mean_curve: panel.mean_curve().clone(),
    })
}

impl ArhdFit {
    /// Combined operator `A = φ + Ψ D` acting on W.
    pub fn a_hat(&self) -> OpMatrix {
        let d = self.spec.derivative_operator();
        let psi_d = OpMatrix::new(Space::W, Space::W, &self.psi.mat * &d.mat);
        OpMatrix::new(Space::W, Space::W, &self.phi.mat + psi_d.mat)
    }

    /// Write the fit as a flat text file; `echo` lines become `#` comments.
    pub fn write_to<W: Write>(&self, mut w: W, echo: &[String]) -> Result<()> {
        writeln!(w, "{FIT_FILE_HEADER}")?;
        for line in echo {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "n_funcs {}", self.spec.n_funcs())?;
        writeln!(w, "delta {}", self.spec.delta())?;
        writeln!(w, "m {}", self.m)?;
        writeln!(w, "n {}", self.n)?;
        writeln!(w, "alpha {}", self.penalty.alpha)?;
        writeln!(w, "beta {}", self.penalty.beta)?;
        writeln!(w, "mean_curve {}", join(self.mean_curve.coeffs.iter()))?;
        writeln!(w, "phi {}", join(row_major(&self.phi.mat).iter()))?;
        writeln!(w, "psi {}", join(row_major(&self.psi.mat).iter()))?;
        writeln!(w, "s_phi_spectrum {}", join(self.diagnostics.s_phi_spectrum.iter()))?;
        writeln!(w, "s_psi_min_eigenvalue {}", self.diagnostics.s_psi_min_eigenvalue)?;
        writeln!(w, "residual_mean_sq {}", self.diagnostics.residual_mean_sq)?;
        writeln!(w, "a_hat_norm {}", self.diagnostics.a_hat_norm)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        let mut header_seen = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if !header_seen {
                if line != FIT_FILE_HEADER {
                    return Err(ArhdError::Parse {
                        line: idx + 1,
                        msg: format!("expected header {FIT_FILE_HEADER:?}"),
                    });
                }
                header_seen = true;
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let nums = rest
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| ArhdError::Parse {
                        line: idx + 1,
                        msg: format!("bad number {tok:?} for {key}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            fields.insert(key.to_string(), nums);
        }
        if !header_seen {
            return Err(ArhdError::Parse {
                line: 0,
                msg: "empty fit file".into(),
            });
        }
        let get = |key: &str| -> Result<&Vec<f64>> {
            fields.get(key).ok_or_else(|| ArhdError::Parse {
                line: 0,
                msg: format!("missing field {key}"),
            })
        };
        let scalar = |key: &str| -> Result<f64> {
            get(key)?.first().copied().ok_or_else(|| ArhdError::Parse {
                line: 0,
                msg: format!("empty field {key}"),
            })
        };
        let n_funcs = scalar("n_funcs")? as usize;
        let spec = BasisSpec::new(scalar("delta")?, n_funcs)?;
        let square = |key: &str| -> Result<DMatrix<f64>> {
            let v = get(key)?;
            if v.len() != n_funcs * n_funcs {
                return Err(ArhdError::DimensionMismatch {
                    expected: n_funcs * n_funcs,
                    got: v.len(),
                });
            }
            Ok(DMatrix::from_row_slice(n_funcs, n_funcs, v))
        };
        let mean = get("mean_curve")?;
        if mean.len() != n_funcs {
            return Err(ArhdError::DimensionMismatch {
                expected: n_funcs,
                got: mean.len(),
            });
        }
        Ok(Self {
            spec,
            m: scalar("m")? as usize,
            n: scalar("n")? as usize,
            phi: OpMatrix::new(Space::W, Space::W, square("phi")?),
            psi: OpMatrix::new(Space::L, Space::W, square("psi")?),
            penalty: PenaltyConfig::new(scalar("alpha")?, scalar("beta")?)?,
            mean_curve: CoeffVec::new(Space::W, DVector::from_column_slice(mean)),
            diagnostics: FitDiagnostics {
                s_phi_spectrum: get("s_phi_spectrum")?.clone(),
                s_phi_min_eigenvalue: get("s_phi_spectrum")?.first().copied().unwrap_or(0.0),
                s_psi_min_eigenvalue: scalar("s_psi_min_eigenvalue")?,
                residual_mean_sq: scalar("residual_mean_sq")?,
                a_hat_norm: scalar("a_hat_norm")?,
            },
        })
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Smallest singular value of the stacked moment matrix
/// `Λ = [[Γ, ΓDᵀ], [DΓ, DΓDᵀ]]`.
///
/// `Λ = (I; D) Γ (I, Dᵀ)` has rank at most `N`, so the value is zero in
/// exact arithmetic; it measures how close the sample sits to the set
/// `{(U, V) : U + VD = 0}` along which `(φ, Ψ)` cannot be told apart.
pub fn stacked_moment_min_singular(gamma: &DMatrix<f64>, dmat: &DMatrix<f64>) -> f64 {
    let n = gamma.nrows();
    let gd = gamma * dmat.transpose();
    let dg = dmat * gamma;
    let dgd = dmat * &gd;
    let mut lambda = DMatrix::zeros(2 * n, 2 * n);
    lambda.view_mut((0, 0), (n, n)).copy_from(gamma);
    lambda.view_mut((0, n), (n, n)).copy_from(&gd);
    lambda.view_mut((n, 0), (n, n)).copy_from(&dg);
    lambda.view_mut((n, n), (n, n)).copy_from(&dgd);
    lambda.singular_values().min()
}

/// Identifiability diagnostic for a fitted panel.
pub fn identifiability_diag(cov: &Covariances, fit: &ArhdFit) -> Result<f64> {
    if cov.dim() != fit.spec.n_funcs() {
        return Err(ArhdError::DimensionMismatch {
            expected: fit.spec.n_funcs(),
            got: cov.dim(),
        });
    }
    Ok(stacked_moment_min_singular(
        &cov.gamma.mat,
        &fit.spec.derivative_matrix(),
    ))
}
