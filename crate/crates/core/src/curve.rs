//! Slicing a long trajectory into a panel of curves `X_{i+1}(t) = ξ(iδ + t)`.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::basis::{midpoint_grid, BasisSpec, CoeffVec, Space};
use crate::error::{ArhdError, Result};

/// Discretized scalar trajectory, `m` points per block of length `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Vec<f64>,
    delta: f64,
    m: usize,
    /// Calendar label of the first sample; informational only.
    pub t0: Option<String>,
}

impl Trajectory {
    pub fn new(values: Vec<f64>, delta: f64, m: usize) -> Result<Self> {
        if m == 0 || values.len() % m != 0 {
            return Err(ArhdError::BadTrajectory {
                len: values.len(),
                m,
            });
        }
        if values.len() / m < 3 {
            return Err(ArhdError::InsufficientHistory(format!(
                "a trajectory needs at least 3 blocks, got {}",
                values.len() / m
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ArhdError::InvalidParameter(format!(
                "block length must be positive, got {delta}"
            )));
        }
        Ok(Self {
            values,
            delta,
            m,
            t0: None,
        })
    }

    pub fn with_t0(mut self, t0: impl Into<String>) -> Self {
        self.t0 = Some(t0.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_blocks(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Absolute sampling times `iδ + t_j`.
    pub fn times(&self) -> Vec<f64> {
        let grid = midpoint_grid(self.delta, self.m);
        (0..self.n_blocks())
            .flat_map(|i| grid.iter().map(move |t| i as f64 * self.delta + t))
            .collect()
    }

    /// First `n_blocks` blocks.
    pub fn truncate_blocks(&self, n_blocks: usize) -> Result<Self> {
        let mut out = Self::new(
            self.values[..n_blocks.min(self.n_blocks()) * self.m].to_vec(),
            self.delta,
            self.m,
        )?;
        out.t0 = self.t0.clone();
        Ok(out)
    }
}

/// Paired sample `(X_i, X'_i)` in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePanel {
    spec: BasisSpec,
    x: DMatrix<f64>,
    xp: DMatrix<f64>,
    values: DMatrix<f64>,
    mean_curve: CoeffVec,
    centered: bool,
}

/// Cut a trajectory into blocks and project each block.
pub fn slice(traj: &Trajectory, spec: &BasisSpec) -> Result<CurvePanel> {
    if (spec.delta() - traj.delta()).abs() > 1e-12 * traj.delta().max(1.0) {
        return Err(ArhdError::InvalidParameter(format!(
            "basis block length {} does not match trajectory block length {}",
            spec.delta(),
            traj.delta()
        )));
    }
    let m = traj.m();
    let values = DMatrix::from_column_slice(m, traj.n_blocks(), traj.values());
    CurvePanel::from_values(*spec, values)
}

impl CurvePanel {
    /// Panel from an `m × n` matrix of raw block samples.
    pub fn from_values(spec: BasisSpec, values: DMatrix<f64>) -> Result<Self> {
        let projector = spec.projector(values.nrows())?;
        let x = projector * &values;
        let xp = spec.derivative_matrix() * &x;
        Ok(Self {
            mean_curve: CoeffVec::zeros(Space::W, spec.n_funcs()),
            spec,
            x,
            xp,
            values,
            centered: false,
        })
    }

    /// Panel from W-coordinates directly; raw values are the reconstruction
    /// on an `m`-point grid.
    pub fn from_coeffs(spec: BasisSpec, m: usize, x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != spec.n_funcs() {
            return Err(ArhdError::DimensionMismatch {
                expected: spec.n_funcs(),
                got: x.nrows(),
            });
        }
        let design = spec.design(Space::W, &midpoint_grid(spec.delta(), m))?;
        let values = design.transpose() * &x;
        let xp = spec.derivative_matrix() * &x;
        Ok(Self {
            mean_curve: CoeffVec::zeros(Space::W, spec.n_funcs()),
            spec,
            x,
            xp,
            values,
            centered: false,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// Points per block.
    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    /// W-coordinates, one column per curve.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// L-coordinates of the derivatives, one column per curve.
    pub fn xp(&self) -> &DMatrix<f64> {
        &self.xp
    }

    /// Raw (never centered) block samples, `m × n`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mean_curve(&self) -> &CoeffVec {
        &self.mean_curve
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn curve(&self, i: usize) -> CoeffVec {
        CoeffVec::new(Space::W, self.x.column(i).into_owned())
    }

    pub fn derivative(&self, i: usize) -> CoeffVec {
        CoeffVec::new(Space::L, self.xp.column(i).into_owned())
    }

    /// Raw samples of block `i`.
    pub fn block_values(&self, i: usize) -> Vec<f64> {
        self.values.column(i).iter().copied().collect()
    }

    /// Subtract the empirical mean coefficient vector from every curve.
    pub fn center(&self) -> Result<Self> {
        if self.centered {
            return Err(ArhdError::AlreadyCentered);
        }
        let mean = self.x.column_mean();
        self.center_with(&mean)
    }

    /// Center with an externally supplied mean (e.g. a training mean).
    pub fn center_with(&self, mean: &DVector<f64>) -> Result<Self> {
        if self.centered {
            return Err(ArhdError::AlreadyCentered);
        }
        if mean.len() != self.spec.n_funcs() {
            return Err(ArhdError::DimensionMismatch {
                expected: self.spec.n_funcs(),
                got: mean.len(),
            });
        }
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            col -= mean;
        }
        let xp = self.spec.derivative_matrix() * &x;
        Ok(Self {
            spec: self.spec,
            x,
            xp,
            values: self.values.clone(),
            mean_curve: CoeffVec::new(Space::W, mean.clone()),
            centered: true,
        })
    }

    /// Add the stored mean back.
    pub fn uncenter(&self) -> Self {
        if !self.centered {
            return self.clone();
        }
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            col += &self.mean_curve.coeffs;
        }
        let xp = self.spec.derivative_matrix() * &x;
        Self {
            spec: self.spec,
            x,
            xp,
            values: self.values.clone(),
            mean_curve: CoeffVec::zeros(Space::W, self.spec.n_funcs()),
            centered: false,
        }
    }

    /// First `train_len` curves and the remainder.
    ///
    /// For a centered panel both parts are re-centered on the mean of the
    /// training part.
    pub fn split(&self, train_len: usize) -> Result<(Self, Self)> {
        let n = self.n();
        if train_len < 2 || train_len >= n {
            return Err(ArhdError::InvalidParameter(format!(
                "training length must be in [2, {}), got {train_len}",
                n
            )));
        }
        let raw = self.uncenter();
        let (train, test) = (raw.columns(0, train_len), raw.columns(train_len, n - train_len));
        if !self.centered {
            return Ok((train, test));
        }
        let train = train.center()?;
        let test = test.center_with(&train.mean_curve.coeffs)?;
        Ok((train, test))
    }

    /// Contiguous range of curves, keeping centering metadata.
    pub fn columns(&self, start: usize, len: usize) -> Self {
        Self {
            spec: self.spec,
            x: self.x.columns(start, len).into_owned(),
            xp: self.xp.columns(start, len).into_owned(),
            values: self.values.columns(start, len).into_owned(),
            mean_curve: self.mean_curve.clone(),
            centered: self.centered,
        }
    }
}

/// Read a trajectory from CSV text.
///
/// Accepted rows are a single value or `timestamp,value`. Blank lines and
/// lines starting with `#` are skipped; a non-numeric first row is taken as
/// a header. Missing values are rejected.
pub fn read_trajectory<R: BufRead>(reader: R, delta: f64, m: usize) -> Result<Trajectory> {
    let mut values = Vec::new();
    let mut t0 = None;
    let mut seen_row = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let (stamp, raw) = match fields.as_slice() {
            [v] => (None, *v),
            [s, v] => (Some(*s), *v),
            _ => {
                return Err(ArhdError::Parse {
                    line: line_no,
                    msg: format!("expected 1 or 2 fields, found {}", fields.len()),
                })
            }
        };
        let first = !seen_row;
        seen_row = true;
        if is_missing(raw) {
            return Err(ArhdError::Parse {
                line: line_no,
                msg: "missing value".into(),
            });
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                if values.is_empty() {
                    t0 = stamp.map(str::to_string);
                }
                values.push(v);
            }
            Ok(_) => {
                return Err(ArhdError::Parse {
                    line: line_no,
                    msg: format!("non-finite value {raw:?}"),
                })
            }
            Err(_) if first => continue,
            Err(_) => {
                return Err(ArhdError::Parse {
                    line: line_no,
                    msg: format!("cannot parse {raw:?} as a number"),
                })
            }
        }
    }
    let mut traj = Trajectory::new(values, delta, m)?;
    traj.t0 = t0;
    Ok(traj)
}

fn is_missing(raw: &str) -> bool {
    raw.is_empty() || matches!(raw.to_ascii_lowercase().as_str(), "na" | "nan" | "null" | "?")
}

/// Write a trajectory as `t,value` rows, preceded by `# ` comment lines.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "t,value")?;
    for (t, v) in traj.times().iter().zip(traj.values()) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}
