//! Empirical covariance and cross-covariance operators of a curve panel.
//!
//! With `X` the `N × n` matrix of W-coordinates and `X'` the matching
//! L-coordinates of the derivatives:
//!
//! ```text
//! Γ   = X Xᵀ / n            W → W
//! Γ'  = X' Xᵀ / n           W → L
//! Γ'* = X X'ᵀ / n           L → W
//! Γ'' = X' X'ᵀ / n          L → L
//! Δ   = Σ X_{k+1} X_kᵀ / (n-1)     W → W
//! Δ'  = Σ X_{k+1} X'_kᵀ / (n-1)    L → W
//! ```

use std::io::Write;

use nalgebra::DMatrix;

use crate::basis::Space;
use crate::curve::CurvePanel;
use crate::error::{ArhdError, Result};
use crate::operator::{max_asymmetry, spectral_norm, sym_eigen_desc, symmetrize, OpMatrix};

/// Eigenvalues in `(-PSD_TOL, 0)` are roundoff and get clamped.
pub const PSD_TOL: f64 = 1e-10;

/// The six moment operators of one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariances {
    pub gamma: OpMatrix,
    pub gamma_p: OpMatrix,
    pub gamma_p_star: OpMatrix,
    pub gamma_pp: OpMatrix,
    pub delta: OpMatrix,
    pub delta_p: OpMatrix,
    /// Number of curves the moments were computed from.
    pub n: usize,
}

pub fn covariances(panel: &CurvePanel) -> Result<Covariances> {
    let n = panel.n();
    if n < 2 {
        return Err(ArhdError::InsufficientHistory(format!(
            "covariances need at least 2 curves, got {n}"
        )));
    }
    let x = panel.x();
    let xp = panel.xp();
    let nf = n as f64;

    let gamma = psd_repair(symmetrize(&(x * x.transpose() / nf)))?;
    let gamma_p = xp * x.transpose() / nf;
    let gamma_pp = psd_repair(symmetrize(&(xp * xp.transpose() / nf)))?;

    let lag = (n - 1) as f64;
    let past = x.columns(0, n - 1);
    let past_p = xp.columns(0, n - 1);
    let next = x.columns(1, n - 1);
    let delta = next * past.transpose() / lag;
    let delta_p = next * past_p.transpose() / lag;

    Ok(Covariances {
        gamma: OpMatrix::new(Space::W, Space::W, gamma),
        gamma_p_star: OpMatrix::new(Space::L, Space::W, gamma_p.transpose()),
        gamma_p: OpMatrix::new(Space::W, Space::L, gamma_p),
        gamma_pp: OpMatrix::new(Space::L, Space::L, gamma_pp),
        delta: OpMatrix::new(Space::W, Space::W, delta),
        delta_p: OpMatrix::new(Space::L, Space::W, delta_p),
        n,
    })
}

/// Clamp roundoff-level negative eigenvalues of a symmetric matrix.
///
/// Fails when an eigenvalue is below `-PSD_TOL`.
pub fn psd_repair(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen_desc(&m);
    let min = vals.last().copied().unwrap_or(0.0);
    if min >= 0.0 {
        return Ok(m);
    }
    if min < -PSD_TOL {
        return Err(ArhdError::Indefinite(min));
    }
    let clamped = nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(0.0)));
    Ok(symmetrize(
        &(&vecs * DMatrix::from_diagonal(&clamped) * vecs.transpose()),
    ))
}

/// Discrepancies of the coordinate identities `(Γv)' = Γ'v` and
/// `(Γ'*u)' = Γ''u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralDiagnostics {
    /// `‖D·Γ − Γ'‖₂`
    pub gamma_p: f64,
    /// `‖D·Γ'* − Γ''‖₂`
    pub gamma_pp: f64,
}

pub fn structural_check(cov: &Covariances, dmat: &OpMatrix) -> Result<StructuralDiagnostics> {
    let n = cov.gamma.dim();
    for op in [&cov.gamma_p, &cov.gamma_p_star, &cov.gamma_pp, dmat] {
        if op.dim() != n {
            return Err(ArhdError::DimensionMismatch {
                expected: n,
                got: op.dim(),
            });
        }
    }
    let dg = dmat.compose(&cov.gamma)?.sub(&cov.gamma_p)?;
    let dgs = dmat.compose(&cov.gamma_p_star)?.sub(&cov.gamma_pp)?;
    Ok(StructuralDiagnostics {
        gamma_p: spectral_norm(&dg.mat),
        gamma_pp: spectral_norm(&dgs.mat),
    })
}

impl Covariances {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn named(&self) -> [(&'static str, &OpMatrix); 6] {
        [
            ("gamma", &self.gamma),
            ("gamma_p", &self.gamma_p),
            ("gamma_p_star", &self.gamma_p_star),
            ("gamma_pp", &self.gamma_pp),
            ("delta", &self.delta),
            ("delta_p", &self.delta_p),
        ]
    }

    /// Largest asymmetry of the two auto-covariances.
    pub fn asymmetry(&self) -> f64 {
        max_asymmetry(&self.gamma.mat).max(max_asymmetry(&self.gamma_pp.mat))
    }

    /// Dump every matrix row-major, each preceded by a `name,dom,cod` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (name, op) in self.named() {
            writeln!(w, "# {name},dom={:?},cod={:?}", op.dom, op.cod)?;
            for row in op.mat.row_iter() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", line.join(","))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::operator::min_eigenvalue;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn spec() -> BasisSpec {
        BasisSpec::new(1.0, 5).unwrap()
    }

    #[test]
    fn repeated_column_is_rank_one() {
        let u = DVector::from_vec(vec![1.0, -0.5, 0.2, 0.0, 2.0]);
        let x = DMatrix::from_columns(&[u.clone(), u.clone(), u.clone()]);
        let panel = CurvePanel::from_coeffs(spec(), 16, x).unwrap();
        let cov = covariances(&panel).unwrap();
        assert_abs_diff_eq!(cov.gamma.mat, &u * u.transpose(), epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_sample_gives_scaled_identity() {
        let panel = CurvePanel::from_coeffs(spec(), 16, DMatrix::identity(5, 5)).unwrap();
        let cov = covariances(&panel).unwrap();
        assert_abs_diff_eq!(cov.gamma.mat, DMatrix::identity(5, 5) / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn needs_two_curves() {
        let panel = CurvePanel::from_coeffs(spec(), 16, DMatrix::zeros(5, 1)).unwrap();
        assert!(matches!(
            covariances(&panel),
            Err(ArhdError::InsufficientHistory(_))
        ));
    }

    #[test]
    fn adjoint_relation_and_tags() {
        let x = DMatrix::from_fn(5, 7, |i, j| ((i * 7 + j) as f64 * 0.71).sin());
        let panel = CurvePanel::from_coeffs(spec(), 16, x).unwrap();
        let cov = covariances(&panel).unwrap();
        assert_eq!(cov.gamma_p_star, cov.gamma_p.adjoint());
        assert_eq!((cov.delta_p.dom, cov.delta_p.cod), (Space::L, Space::W));
        assert!(min_eigenvalue(&cov.gamma.mat) >= -1e-10);
        assert!(cov.asymmetry() < 1e-12);
    }

    #[test]
    fn structural_identities_hold() {
        let x = DMatrix::from_fn(5, 9, |i, j| ((i + 3 * j) as f64).cos());
        let panel = CurvePanel::from_coeffs(spec(), 16, x).unwrap();
        let cov = covariances(&panel).unwrap();
        let d = spec().derivative_operator();
        let diag = structural_check(&cov, &d).unwrap();
        assert!(diag.gamma_p < 1e-10 && diag.gamma_pp < 1e-10);

        let mut bad = cov.clone();
        bad.gamma_p.mat[(1, 2)] += 0.3;
        let diag = structural_check(&bad, &d).unwrap();
        assert!(diag.gamma_p > 0.1);
    }

    #[test]
    fn zero_panel_has_zero_discrepancy() {
        let panel = CurvePanel::from_coeffs(spec(), 16, DMatrix::zeros(5, 4)).unwrap();
        let cov = covariances(&panel).unwrap();
        let diag = structural_check(&cov, &spec().derivative_operator()).unwrap();
        assert_eq!(diag.gamma_p, 0.0);
        assert_eq!(diag.gamma_pp, 0.0);
    }

    #[test]
    fn structural_check_dimension_mismatch() {
        let panel = CurvePanel::from_coeffs(spec(), 16, DMatrix::zeros(5, 4)).unwrap();
        let cov = covariances(&panel).unwrap();
        let d7 = BasisSpec::new(1.0, 7).unwrap().derivative_operator();
        assert!(structural_check(&cov, &d7).is_err());
    }

    #[test]
    fn psd_repair_policy() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-12]));
        let fixed = psd_repair(m).unwrap();
        assert!(min_eigenvalue(&fixed) >= 0.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-6]));
        assert!(matches!(psd_repair(m), Err(ArhdError::Indefinite(_))));
    }

    #[test]
    fn csv_dump_has_headers() {
        let panel = CurvePanel::from_coeffs(spec(), 16, DMatrix::identity(5, 5)).unwrap();
        let mut buf = Vec::new();
        covariances(&panel).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# delta_p,dom=L,cod=W"));
        assert_eq!(text.lines().count(), 6 * 6);
    }
}
