//! The Wong process: a stationary, unit-variance, mean-square differentiable
//! Gaussian process
//!
//! ```text
//! ξ_u = √3 e^{-√3u} ∫₀^{e^{2u/√3}} W_s ds
//! ```
//!
//! whose blocks of length `δ` follow an ARHD recursion with rank-one
//! operators coupled to the block endpoint:
//!
//! ```text
//! X_{i+1}(t) = g(t) X_i(δ) + c(t) X'_i(δ) + ε_{i+1}(t)
//! c(t) = (√3/2) e^{-√3t} (e^{2t/√3} − 1),   g(t) = e^{-√3t} + √3 c(t)
//! ```
//!
//! Innovations are sampled through Brownian scaling,
//! `ε(t) ≗ √3 e^{-√3t} ∫₀^{V(t)} B_v dv` with `V(t) = e^{2t/√3} − 1`,
//! which is the same law for every block and never touches the huge
//! time-changed clock of the literal definition.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{midpoint_grid, BasisSpec, Space};
use crate::curve::Trajectory;
use crate::error::{ArhdError, Result};
use crate::operator::OpMatrix;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Quadrature points used to project `g` and `c` onto the basis.
const TRUTH_QUADRATURE: usize = 20_000;

/// Simulation geometry and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WongConfig {
    pub n_blocks: usize,
    pub delta: f64,
    pub m: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Sub-steps per half grid interval of the innovation integral.
    pub inner_steps: usize,
}

impl Default for WongConfig {
    fn default() -> Self {
        Self {
            n_blocks: 105,
            delta: 1.8348,
            m: 50,
            seed: 7,
            burn_in: 50,
            inner_steps: 16,
        }
    }
}

impl WongConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks < 1 {
            return Err(ArhdError::InvalidParameter("n_blocks must be at least 1".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(ArhdError::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.m < 1 {
            return Err(ArhdError::InvalidParameter("m must be at least 1".into()));
        }
        if self.inner_steps < 4 {
            return Err(ArhdError::InvalidParameter(format!(
                "inner_steps must be at least 4, got {}",
                self.inner_steps
            )));
        }
        Ok(())
    }

    /// Number of steps of the fine innovation grid on `[0, δ]`.
    fn fine_steps(&self) -> usize {
        2 * self.inner_steps * self.m
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ArhdError::TimeOutOfRange { t, delta: f64::INFINITY });
    }
    Ok(())
}

pub fn c_of_t(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(c_raw(t))
}

pub fn g_of_t(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(g_raw(t))
}

pub fn c_prime(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(c_prime_raw(t))
}

pub fn g_prime(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(g_prime_raw(t))
}

fn c_raw(t: f64) -> f64 {
    0.5 * SQRT3 * (-SQRT3 * t).exp() * (2.0 * t / SQRT3).exp_m1()
}

fn g_raw(t: f64) -> f64 {
    (-SQRT3 * t).exp() + SQRT3 * c_raw(t)
}

fn c_prime_raw(t: f64) -> f64 {
    0.5 * SQRT3 * (-SQRT3 * t).exp() * (SQRT3 - (2.0 * t / SQRT3).exp() / SQRT3)
}

fn g_prime_raw(t: f64) -> f64 {
    -SQRT3 * (-SQRT3 * t).exp() + SQRT3 * c_prime_raw(t)
}

/// Stationary covariance `r(τ) = (3/2)e^{-|τ|/√3} − ½e^{-√3|τ|}`.
pub fn stationary_covariance(tau: f64) -> f64 {
    let a = tau.abs();
    1.5 * (-a / SQRT3).exp() - 0.5 * (-SQRT3 * a).exp()
}

/// Variance of the innovation at block time `t`:
/// `e^{-2√3t}(e^{2t/√3} − 1)³`.
pub fn innovation_variance(t: f64) -> f64 {
    (-2.0 * SQRT3 * t).exp() * (2.0 * t / SQRT3).exp_m1().powi(3)
}

/// Exact operators of the process in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WongTruth {
    /// W → W: `f ↦ g · f(δ)`
    pub phi_true: OpMatrix,
    /// L → W: `f' ↦ c · f'(δ)`
    pub psi_true: OpMatrix,
    /// `c` on the `m`-point midpoint grid.
    pub c_curve: Vec<f64>,
}

impl WongTruth {
    /// `φ + Ψ D` on W.
    pub fn a_true(&self, spec: &BasisSpec) -> OpMatrix {
        let psi_d = &self.psi_true.mat * spec.derivative_matrix();
        OpMatrix::new(Space::W, Space::W, &self.phi_true.mat + psi_d)
    }
}

pub fn true_operators(spec: &BasisSpec, m: usize) -> Result<WongTruth> {
    let delta = spec.delta();
    let dense = midpoint_grid(delta, TRUTH_QUADRATURE);
    let g_samples: Vec<f64> = dense.iter().map(|&t| g_raw(t)).collect();
    let c_samples: Vec<f64> = dense.iter().map(|&t| c_raw(t)).collect();
    let g_w = spec.project(&g_samples)?.coeffs;
    let c_w = spec.project(&c_samples)?.coeffs;
    let end_w = spec.point_evaluation(Space::W, delta)?;
    let end_l = spec.point_evaluation(Space::L, delta)?;
    Ok(WongTruth {
        phi_true: OpMatrix::new(Space::W, Space::W, &g_w * end_w.transpose()),
        psi_true: OpMatrix::new(Space::L, Space::W, &c_w * end_l.transpose()),
        c_curve: midpoint_grid(delta, m).iter().map(|&t| c_raw(t)).collect(),
    })
}

/// One innovation path on the fine grid `t_k = kδ/M`, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationPath {
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    pub deps: Vec<f64>,
}

/// Innovation block on the midpoint grid plus its endpoint state.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationBlock {
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub end_value: f64,
    pub end_deriv: f64,
}

/// Sample `B` and `I = ∫B` jointly and exactly at the fine time points.
///
/// Over a step of length `h` in the clock `v`, the pair
/// `(ΔB, ∫(B − B_prev))` is Gaussian with variances `h`, `h³/3` and
/// covariance `h²/2`.
pub fn innovation_path<R: Rng + ?Sized>(rng: &mut R, config: &WongConfig) -> InnovationPath {
    let steps = config.fine_steps();
    let dt = config.delta / steps as f64;
    let t: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let mut eps = Vec::with_capacity(steps + 1);
    let mut deps = Vec::with_capacity(steps + 1);
    let (mut b, mut integral) = (0.0_f64, 0.0_f64);
    let mut v_prev = 0.0;
    eps.push(0.0);
    deps.push(0.0);
    for &tk in &t[1..] {
        let v = (2.0 * tk / SQRT3).exp_m1();
        let h = v - v_prev;
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        integral += b * h + h.powf(1.5) * (0.5 * z1 + z2 / 12f64.sqrt());
        b += h.sqrt() * z1;
        v_prev = v;
        let e = SQRT3 * (-SQRT3 * tk).exp() * integral;
        eps.push(e);
        deps.push(-SQRT3 * e + 2.0 * (-tk / SQRT3).exp() * b);
    }
    InnovationPath { t, eps, deps }
}

pub fn innovation_block<R: Rng + ?Sized>(rng: &mut R, config: &WongConfig) -> InnovationBlock {
    let path = innovation_path(rng, config);
    let idx = grid_indices(config);
    InnovationBlock {
        values: idx.iter().map(|&k| path.eps[k]).collect(),
        derivs: idx.iter().map(|&k| path.deps[k]).collect(),
        end_value: *path.eps.last().unwrap_or(&0.0),
        end_deriv: *path.deps.last().unwrap_or(&0.0),
    }
}

/// Fine-grid indices of the midpoints `(j + ½)δ/m`.
fn grid_indices(config: &WongConfig) -> Vec<usize> {
    (0..config.m)
        .map(|j| (2 * j + 1) * config.inner_steps)
        .collect()
}

/// Independent stream for replicate `replicate` of a seeded study.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One recorded block transition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    /// Grid samples of `X_{i+1}`.
    pub values: Vec<f64>,
    /// `X_i(δ)` and `X'_i(δ)` of the previous block.
    pub prev_end_value: f64,
    pub prev_end_deriv: f64,
    /// Grid samples of `ε_{i+1}`.
    pub eps: Vec<f64>,
}

/// Simulate with the stream of `replicate`, keeping every kept block's
/// inputs for inspection.
pub fn simulate_recorded(config: &WongConfig, replicate: u64) -> Result<Vec<BlockRecord>> {
    config.validate()?;
    let mut rng = replicate_rng(config.seed, replicate);
    let grid = midpoint_grid(config.delta, config.m);
    let g: Vec<f64> = grid.iter().map(|&t| g_raw(t)).collect();
    let c: Vec<f64> = grid.iter().map(|&t| c_raw(t)).collect();
    let (g_end, c_end) = (g_raw(config.delta), c_raw(config.delta));
    let (gp_end, cp_end) = (g_prime_raw(config.delta), c_prime_raw(config.delta));

    let (mut x_end, mut dx_end) = (0.0_f64, 0.0_f64);
    let mut out = Vec::with_capacity(config.n_blocks);
    for block in 0..config.burn_in + config.n_blocks {
        let inn = innovation_block(&mut rng, config);
        if block >= config.burn_in {
            let values = (0..config.m)
                .map(|j| g[j] * x_end + c[j] * dx_end + inn.values[j])
                .collect();
            out.push(BlockRecord {
                values,
                prev_end_value: x_end,
                prev_end_deriv: dx_end,
                eps: inn.values,
            });
        }
        let next_x = g_end * x_end + c_end * dx_end + inn.end_value;
        let next_dx = gp_end * x_end + cp_end * dx_end + inn.end_deriv;
        x_end = next_x;
        dx_end = next_dx;
    }
    Ok(out)
}

/// Regenerate a block from its recorded inputs through the representation.
pub fn regenerate_block(config: &WongConfig, record: &BlockRecord) -> Vec<f64> {
    midpoint_grid(config.delta, config.m)
        .iter()
        .zip(&record.eps)
        .map(|(&t, e)| g_raw(t) * record.prev_end_value + c_raw(t) * record.prev_end_deriv + e)
        .collect()
}

/// Simulate replicate `replicate` of a seeded study.
pub fn simulate_replicate(config: &WongConfig, replicate: u64) -> Result<Trajectory> {
    let values: Vec<f64> = simulate_recorded(config, replicate)?
        .into_iter()
        .flat_map(|r| r.values)
        .collect();
    Trajectory::new(values, config.delta, config.m)
}

pub fn simulate(config: &WongConfig) -> Result<Trajectory> {
    simulate_replicate(config, 0)
}

/// Sidecar manifest for a simulated trajectory.
pub fn manifest(config: &WongConfig, replicate: u64) -> serde_json::Value {
    serde_json::json!({
        "generator": "wong",
        "replicate": replicate,
        "config": config,
    })
}

/// Blocks of a trajectory as an `m × n` matrix.
pub fn trajectory_matrix(traj: &Trajectory) -> DMatrix<f64> {
    DMatrix::from_column_slice(traj.m(), traj.n_blocks(), traj.values())
}
