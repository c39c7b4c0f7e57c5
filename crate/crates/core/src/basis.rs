//! Orthonormal Fourier basis of `L²[0, δ]` and the induced Sobolev basis of
//! `W = W^{2,1}[0, δ]`.
//!
//! Index layout for a truncation `N = 2J + 1`:
//!
//! | index      | L-function                    | W-function          |
//! |------------|-------------------------------|---------------------|
//! | `0`        | `1/√δ`                        | same                |
//! | `2j - 1`   | `√(2/δ) cos(2jπt/δ)`          | `s_j · e_{2j-1}`    |
//! | `2j`       | `√(2/δ) sin(2jπt/δ)`          | `s_j · e_{2j}`      |
//!
//! with Sobolev weight `s_j = [1 + 4j²π²/δ²]^{-1/2}`. A curve `f = Σ c_k e_k`
//! has W-coordinates `x_k = c_k / s_k`, and the dot product of W-coordinates
//! is the `∫fg + ∫f'g'` inner product for band-limited periodic curves.
//!
//! Quadrature is the midpoint rule on `t_j = (j - ½)δ/m`, which integrates
//! every product of two basis functions exactly once `m ≥ N`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ArhdError, Result};
use crate::operator::OpMatrix;

/// Largest truncation picked by [`default_truncation`].
pub const MAX_DEFAULT_FUNCS: usize = 21;

/// Coordinate space of a coefficient sequence or operator side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// Sobolev space `W^{2,1}[0, δ]`, coordinates against the `w_k`.
    W,
    /// `L²[0, δ]`, coordinates against the orthonormal Fourier `e_k`.
    L,
}

/// Block length and truncation of the Fourier system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    delta: f64,
    n_funcs: usize,
}

/// Default truncation for `m` points per block: `min(2⌊(m-1)/4⌋ + 1, 21)`.
///
/// Keeps `m ≥ 2N - 1` so the projection stays well conditioned; `m = 12`
/// gives `N = 5` and `m = 50` gives `N = 21`.
pub fn default_truncation(m: usize) -> usize {
    (2 * (m.saturating_sub(1) / 4) + 1).min(MAX_DEFAULT_FUNCS)
}

/// Midpoint grid `t_j = (j - ½)δ/m`, `j = 1..=m`.
pub fn midpoint_grid(delta: f64, m: usize) -> Vec<f64> {
    let h = delta / m as f64;
    (0..m).map(|j| (j as f64 + 0.5) * h).collect()
}

/// Sobolev weight `[1 + 4j²π²/δ²]^{-1/2}` of frequency `j` (1 for `j = 0`).
pub fn sobolev_weight(delta: f64, j: usize) -> f64 {
    let omega = 2.0 * PI * j as f64 / delta;
    (1.0 + omega * omega).sqrt().recip()
}

impl BasisSpec {
    pub fn new(delta: f64, n_funcs: usize) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ArhdError::InvalidBasis(format!(
                "block length must be positive, got {delta}"
            )));
        }
        if n_funcs < 3 || n_funcs % 2 == 0 {
            return Err(ArhdError::InvalidBasis(format!(
                "number of basis functions must be odd and at least 3, got {n_funcs}"
            )));
        }
        Ok(Self { delta, n_funcs })
    }

    /// Spec with the [`default_truncation`] for `m` points per block.
    pub fn for_grid(delta: f64, m: usize) -> Result<Self> {
        Self::new(delta, default_truncation(m))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_funcs(&self) -> usize {
        self.n_funcs
    }

    /// Highest frequency `J`.
    pub fn n_freqs(&self) -> usize {
        self.n_funcs / 2
    }

    /// Angular frequency `2jπ/δ`.
    pub fn omega(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.delta
    }

    /// Frequency carried by basis index `k`.
    pub fn freq_of(k: usize) -> usize {
        (k + 1) / 2
    }

    /// Ratio `w_k / e_k`.
    pub fn weight(&self, k: usize) -> f64 {
        sobolev_weight(self.delta, Self::freq_of(k))
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_fn(self.n_funcs, |k, _| self.weight(k))
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.n_funcs {
            return Err(ArhdError::IndexOutOfRange {
                index: k,
                n_funcs: self.n_funcs,
            });
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.delta).contains(&t) {
            return Err(ArhdError::TimeOutOfRange {
                t,
                delta: self.delta,
            });
        }
        Ok(())
    }

    // Unchecked L-basis value.
    fn e(&self, k: usize, t: f64) -> f64 {
        if k == 0 {
            return self.delta.sqrt().recip();
        }
        let amp = (2.0 / self.delta).sqrt();
        let arg = self.omega(Self::freq_of(k)) * t;
        if k % 2 == 1 {
            amp * arg.cos()
        } else {
            amp * arg.sin()
        }
    }

    /// Value of the `k`-th orthonormal basis function of `space` at `t`.
    pub fn eval(&self, space: Space, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        self.check_time(t)?;
        Ok(match space {
            Space::L => self.e(k, t),
            Space::W => self.weight(k) * self.e(k, t),
        })
    }

    /// `N × len(grid)` matrix of basis values.
    pub fn design(&self, space: Space, grid: &[f64]) -> Result<DMatrix<f64>> {
        for &t in grid {
            self.check_time(t)?;
        }
        let mut out = DMatrix::from_fn(self.n_funcs, grid.len(), |k, j| self.e(k, grid[j]));
        if space == Space::W {
            for k in 0..self.n_funcs {
                let s = self.weight(k);
                out.row_mut(k).scale_mut(s);
            }
        }
        Ok(out)
    }

    /// Row vector of basis values at a single time point.
    pub fn point_evaluation(&self, space: Space, t: f64) -> Result<DVector<f64>> {
        self.check_time(t)?;
        Ok(DVector::from_fn(self.n_funcs, |k, _| match space {
            Space::L => self.e(k, t),
            Space::W => self.weight(k) * self.e(k, t),
        }))
    }

    /// Projection matrix mapping `m` midpoint samples to W-coordinates.
    pub fn projector(&self, m: usize) -> Result<DMatrix<f64>> {
        if m < self.n_funcs {
            return Err(ArhdError::Underdetermined {
                m,
                n_funcs: self.n_funcs,
            });
        }
        let grid = midpoint_grid(self.delta, m);
        let mut p = self.design(Space::L, &grid)?;
        let h = self.delta / m as f64;
        for k in 0..self.n_funcs {
            let scale = h / self.weight(k);
            p.row_mut(k).scale_mut(scale);
        }
        Ok(p)
    }

    /// W-coordinates of a curve sampled on the midpoint grid.
    pub fn project(&self, samples: &[f64]) -> Result<CoeffVec> {
        let p = self.projector(samples.len())?;
        let y = DVector::from_column_slice(samples);
        Ok(CoeffVec::new(Space::W, p * y))
    }

    /// Coordinate matrix of differentiation, W → L.
    ///
    /// `e'_{2j-1} = -ω_j e_{2j}` and `e'_{2j} = ω_j e_{2j-1}`, composed with
    /// the rescaling `c = s·x`.
    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let n = self.n_funcs;
        let mut d = DMatrix::zeros(n, n);
        for j in 1..=self.n_freqs() {
            let a = self.omega(j) * sobolev_weight(self.delta, j);
            d[(2 * j, 2 * j - 1)] = -a;
            d[(2 * j - 1, 2 * j)] = a;
        }
        d
    }

    pub fn derivative_operator(&self) -> OpMatrix {
        OpMatrix::new(Space::W, Space::L, self.derivative_matrix())
    }

    /// L-coordinates of the derivative of a W-coordinate curve.
    pub fn differentiate(&self, x: &CoeffVec) -> Result<CoeffVec> {
        self.check_len(x)?;
        x.expect_space(Space::W)?;
        Ok(CoeffVec::new(Space::L, self.derivative_matrix() * &x.coeffs))
    }

    /// Evaluate `Σ_k coeffs_k · basis_k(t)` on `grid`.
    pub fn reconstruct(&self, x: &CoeffVec, grid: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let design = self.design(x.space, grid)?;
        Ok((design.transpose() * &x.coeffs).iter().copied().collect())
    }

    /// Reconstruct on the `m`-point midpoint grid.
    pub fn reconstruct_on_grid(&self, x: &CoeffVec, m: usize) -> Result<Vec<f64>> {
        self.reconstruct(x, &midpoint_grid(self.delta, m))
    }

    /// W-coordinates to L-coordinates of the same curve.
    pub fn to_l(&self, x: &CoeffVec) -> Result<CoeffVec> {
        self.check_len(x)?;
        x.expect_space(Space::W)?;
        Ok(CoeffVec::new(
            Space::L,
            x.coeffs.component_mul(&self.weights()),
        ))
    }

    /// L-coordinates to W-coordinates of the same curve.
    pub fn to_w(&self, c: &CoeffVec) -> Result<CoeffVec> {
        self.check_len(c)?;
        c.expect_space(Space::L)?;
        Ok(CoeffVec::new(
            Space::W,
            c.coeffs.component_div(&self.weights()),
        ))
    }

    fn check_len(&self, x: &CoeffVec) -> Result<()> {
        if x.len() != self.n_funcs {
            return Err(ArhdError::DimensionMismatch {
                expected: self.n_funcs,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Coefficient sequence tagged with its coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVec {
    pub space: Space,
    pub coeffs: DVector<f64>,
}

impl CoeffVec {
    pub fn new(space: Space, coeffs: DVector<f64>) -> Self {
        Self { space, coeffs }
    }

    pub fn zeros(space: Space, n: usize) -> Self {
        Self::new(space, DVector::zeros(n))
    }

    pub fn from_slice(space: Space, coeffs: &[f64]) -> Self {
        Self::new(space, DVector::from_column_slice(coeffs))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(ArhdError::SpaceMismatch {
                expected: space,
                got: self.space,
            });
        }
        Ok(())
    }
}
