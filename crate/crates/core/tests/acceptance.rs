//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::f64::consts::PI;

use arhd::basis::{midpoint_grid, BasisSpec, CoeffVec, Space};
use arhd::covariance::{covariances, structural_check};
use arhd::curve::{read_trajectory, slice, CurvePanel};
use arhd::estimator::{estimation_moments, fit, resolvent, schur_operators, PenaltyConfig};
use arhd::eval::{benchmark_sst, benchmark_wong, mse, rmae, SstConfig};
use arhd::operator::{min_eigenvalue, spectral_norm, OpMatrix};
use arhd::predictors::Method;
use arhd::wong::{innovation_path, replicate_rng, simulate, simulate_replicate, true_operators, WongConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    gaussian(rng, n, k).qr().q().columns(0, k).into_owned()
}

fn wong_panel(replicate: u64) -> CurvePanel {
    let config = WongConfig::default();
    let traj = simulate_replicate(&config, replicate).unwrap();
    let spec = BasisSpec::for_grid(config.delta, config.m).unwrap();
    slice(&traj, &spec).unwrap().center().unwrap()
}

#[test]
fn criterion_01_wong_benchmark() {
    let methods = [
        Method::Arhd { alpha: 0.1, beta: 0.5 },
        Method::Arh { k: 1 },
        Method::Arf { k: 1 },
        Method::Arw { k: 1 },
    ];
    let bench = benchmark_wong(50, &WongConfig::default(), &methods).unwrap();
    let rows = &bench.report.rows;
    let arhd = rows[0].mse;
    let baselines: Vec<f64> = rows[1..].iter().map(|r| r.mse).collect();
    let arhd_ok = (0.22..=0.45).contains(&arhd);
    let base_ok = baselines.iter().all(|m| (0.45..=0.85).contains(m));
    let best = baselines.iter().all(|&m| arhd < m);
    let pass = arhd_ok && base_ok && best;
    verdict(
        1,
        pass,
        &format!(
            "ARHD mse {arhd:.4} (want [0.22, 0.45]); ARH/ARF/ARW mse {:.4}/{:.4}/{:.4} (want [0.45, 0.85]); ARHD best: {best}",
            baselines[0], baselines[1], baselines[2]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_resolvent_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap_singular: f64 = 0.0;
    let mut singular_cases = 0;
    for i in 0..100 {
        let n = 3 + i % 10;
        // Every other matrix is rank deficient.
        let rank = if i % 2 == 0 { n } else { 1 + i % (n - 1) };
        let b = gaussian(&mut rng, n, rank);
        let t = OpMatrix::new(Space::W, Space::W, &b * b.transpose());
        for alpha in [1.0, 0.1, 0.01] {
            let norm = resolvent(&t, alpha).unwrap().norm();
            worst_excess = worst_excess.max(norm - 1.0 / alpha);
            if rank < n {
                singular_cases += 1;
                worst_gap_singular = worst_gap_singular.max((norm - 1.0 / alpha).abs());
            }
        }
    }
    let pass = worst_excess <= 1e-9 && worst_gap_singular <= 1e-6;
    verdict(
        2,
        pass,
        &format!(
            "max(‖R‖ − 1/α) = {worst_excess:.3e} (≤ 1e-9); singular cases {singular_cases}, max |‖R‖ − 1/α| = {worst_gap_singular:.3e} (≤ 1e-6)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_schur_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for i in 0..200 {
        let n_funcs = [3, 5, 7, 9, 11][i % 5];
        let n = 2 + (i * 7) % 40;
        let scale = [0.01, 1.0, 100.0][i % 3];
        let spec = BasisSpec::new([1.0, 1.8348, 12.0][i % 3], n_funcs).unwrap();
        let x = gaussian(&mut rng, n_funcs, n) * scale;
        let panel = CurvePanel::from_coeffs(spec, 2 * n_funcs + 1, x).unwrap().center().unwrap();
        let cov = covariances(&panel).unwrap();
        for alpha in [1.0, 0.1, 0.01] {
            let s = schur_operators(&cov, alpha).unwrap();
            worst = worst.min(min_eigenvalue(&s.s_phi.mat)).min(min_eigenvalue(&s.s_psi.mat));
        }
    }
    for r in 0..5 {
        let cov = covariances(&wong_panel(r)).unwrap();
        for alpha in [1.0, 0.1, 0.01] {
            let s = schur_operators(&cov, alpha).unwrap();
            worst = worst.min(min_eigenvalue(&s.s_phi.mat)).min(min_eigenvalue(&s.s_psi.mat));
        }
    }
    let pass = worst >= -1e-8;
    verdict(3, pass, &format!("min eigenvalue of S_φ, S_Ψ over 205 panels = {worst:.3e} (≥ -1e-8)"));
    assert!(pass);
}

#[test]
fn criterion_04_vanishing_bias() {
    let cov = covariances(&wong_panel(0)).unwrap();
    let s_phi = schur_operators(&cov, 0.1).unwrap().s_phi.mat;
    let n = s_phi.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let betas = [1.0, 0.1, 0.01, 0.001];
    let mut all_strict = true;
    let mut last_values = Vec::new();
    for _ in 0..20 {
        let x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let norms: Vec<f64> = betas
            .iter()
            .map(|&b| {
                let shifted = &s_phi + DMatrix::identity(n, n) * b;
                let y = shifted.cholesky().unwrap().solve(&x) * b;
                y.norm()
            })
            .collect();
        all_strict &= norms.windows(2).all(|w| w[1] < w[0]);
        last_values.push(norms[3]);
    }
    let max_last = last_values.iter().cloned().fold(0.0, f64::max);
    verdict(
        4,
        all_strict,
        &format!("strict decrease along β = 1, 0.1, 0.01, 0.001 for 20 unit vectors: {all_strict}; max ‖β(S+β)⁻¹x‖ at β=0.001: {max_last:.4}"),
    );
    assert!(all_strict);
}

#[test]
fn criterion_05_consistency_trend() {
    let n_funcs = 5;
    let spec = BasisSpec::new(1.0, n_funcs).unwrap();
    let d = spec.derivative_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let phi = orthonormal(&mut rng, n_funcs, 3)
        * DMatrix::from_diagonal(&DVector::from_vec(vec![0.4, 0.3, 0.2]))
        * orthonormal(&mut rng, n_funcs, 3).transpose();
    let psi = orthonormal(&mut rng, n_funcs, 3)
        * DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.2, 0.1]))
        * orthonormal(&mut rng, n_funcs, 3).transpose();
    let a = &phi + &psi * &d;
    let sd = DVector::from_fn(n_funcs, |k, _| 1.0 / (k + 1) as f64);
    let sizes = [50usize, 100, 200, 400];
    let schedule = PenaltyConfig::schedule(0.2, 0.04).unwrap();

    let mut errs_phi = Vec::new();
    let mut errs_psi = Vec::new();
    for &n in &sizes {
        let (mut ep, mut es) = (0.0, 0.0);
        for r in 0..20u64 {
            let mut rr = replicate_rng(5_000 + n as u64, r);
            let mut x = DVector::zeros(n_funcs);
            let mut cols = Vec::with_capacity(n);
            for i in 0..n + 50 {
                let noise = DVector::from_fn(n_funcs, |_, _| rr.sample::<f64, _>(StandardNormal));
                x = &a * &x + sd.component_mul(&noise);
                if i >= 50 {
                    cols.push(x.clone());
                }
            }
            let panel = CurvePanel::from_coeffs(spec, 12, DMatrix::from_columns(&cols))
                .unwrap()
                .center()
                .unwrap();
            let f = fit(&panel, &schedule).unwrap();
            ep += spectral_norm(&(&f.phi.mat - &phi));
            es += spectral_norm(&(&f.psi.mat - &psi));
        }
        errs_phi.push(ep / 20.0);
        errs_psi.push(es / 20.0);
    }
    let check = |e: &[f64]| e.windows(2).all(|w| w[1] <= w[0]) && e[3] <= 0.7 * e[0];
    let pass = check(&errs_phi) && check(&errs_psi);
    let fmt = |e: &[f64]| e.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" → ");
    verdict(
        5,
        pass,
        &format!(
            "mean ‖φ_n − φ‖ at n=50,100,200,400: {}; mean ‖Ψ_n − Ψ‖: {} (want non-increasing, total drop ≥ 30%)",
            fmt(&errs_phi),
            fmt(&errs_psi)
        ),
    );
    assert!(pass);
}

/// Literal innovation at block 0: `√3 e^{-√3t} ∫_1^{e^{2t/√3}} (W_s − W_1) ds`,
/// Euler path for `W` and trapezoid rule for the integral.
fn literal_innovation(rng: &mut ChaCha8Rng, t: f64, steps: usize) -> f64 {
    let upper = (2.0 * t / 3f64.sqrt()).exp();
    let h = (upper - 1.0) / steps as f64;
    let (mut w, mut integral) = (0.0_f64, 0.0_f64);
    for _ in 0..steps {
        let next = w + h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        integral += 0.5 * h * (w + next);
        w = next;
    }
    3f64.sqrt() * (-3f64.sqrt() * t).exp() * integral
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn criterion_06_wong_truth() {
    let config = WongConfig::default();
    let spec = BasisSpec::new(config.delta, 21).unwrap();
    let truth = true_operators(&spec, config.m).unwrap();
    let h1 = truth.a_true(&spec).norm();
    let h1_ok = h1 < 1.0;

    let draws = 10_000;
    let mut rng = replicate_rng(6, 0);
    let sampler: Vec<f64> = (0..draws)
        .map(|_| *innovation_path(&mut rng, &config).eps.last().unwrap())
        .collect();
    let mut rng = replicate_rng(6, 1);
    let literal: Vec<f64> = (0..draws)
        .map(|_| literal_innovation(&mut rng, config.delta, 2_000))
        .collect();
    let (v1, v2) = (sample_variance(&sampler), sample_variance(&literal));
    let se = |v: f64| v * (2.0 / (draws as f64 - 1.0)).sqrt();
    let se_diff = (se(v1).powi(2) + se(v2).powi(2)).sqrt();
    let var_ok = (v1 - v2).abs() <= 3.0 * se_diff;

    let long = WongConfig {
        n_blocks: 2_000,
        seed: 66,
        ..config
    };
    let traj = simulate(&long).unwrap();
    let long_var = sample_variance(traj.values());
    let long_ok = (0.9..=1.1).contains(&long_var);

    let pass = h1_ok && var_ok && long_ok;
    verdict(
        6,
        pass,
        &format!(
            "‖φ + ΨD‖₂ at N=21 = {h1:.4} (want < 1): {h1_ok}; Var ε(δ) sampler {v1:.4} vs literal {v2:.4}, |diff| {:.4} ≤ 3·SE {:.4}: {var_ok}; long-run Var ξ = {long_var:.4} (want [0.9, 1.1]): {long_ok}",
            (v1 - v2).abs(),
            3.0 * se_diff
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_coordinate_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut panels = Vec::new();
    for i in 0..50 {
        let n_funcs = [3, 5, 11, 21][i % 4];
        let spec = BasisSpec::new([1.0, 1.8348, 12.0][i % 3], n_funcs).unwrap();
        let x = gaussian(&mut rng, n_funcs, 4 + i);
        let panel = CurvePanel::from_coeffs(spec, 2 * n_funcs + 3, x).unwrap();
        panels.push(panel.center().unwrap());
        panels.push(panel);
    }
    for r in 0..3 {
        panels.push(wong_panel(r));
    }
    for panel in &panels {
        let cov = covariances(panel).unwrap();
        let diag = structural_check(&cov, &panel.spec().derivative_operator()).unwrap();
        worst = worst.max(diag.gamma_p).max(diag.gamma_pp);
    }
    let pass = worst <= 1e-10;
    verdict(
        7,
        pass,
        &format!("max of ‖DΓ − Γ'‖₂, ‖DΓD* − Γ''‖₂ over {} panels = {worst:.3e} (≤ 1e-10)", panels.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_08_noiseless_recovery() {
    let n_funcs = 5;
    let spec = BasisSpec::new(1.0, n_funcs).unwrap();
    let d = spec.derivative_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let phi = orthonormal(&mut rng, n_funcs, n_funcs)
        * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.9, 0.8, 0.7, 0.6]))
        * orthonormal(&mut rng, n_funcs, n_funcs).transpose()
        * 0.6;
    let psi = orthonormal(&mut rng, n_funcs, n_funcs) * 0.3;
    let a0 = &phi + &psi * &d;
    // Keep the recursion from decaying or blowing up over the sample.
    let radius = a0.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let a = a0 * (0.97 / radius);

    let n = 40;
    let mut x = DVector::from_fn(n_funcs, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut cols = vec![x.clone()];
    for _ in 1..n {
        x = &a * &x;
        cols.push(x.clone());
    }
    let data = DMatrix::from_columns(&cols);
    let panel = CurvePanel::from_coeffs(spec, 12, data.clone())
        .unwrap()
        .center_with(&DVector::zeros(n_funcs))
        .unwrap();
    let f = fit(&panel, &PenaltyConfig::new(1e-6, 1e-6).unwrap()).unwrap();
    let a_hat = f.a_hat().mat;
    let err = spectral_norm(&((&a_hat - &a) * &data)) / spectral_norm(&data);
    let pass = err <= 1e-4;
    verdict(
        8,
        pass,
        &format!("‖(Â − A)X‖₂ / ‖X‖₂ on the sample span = {err:.3e} (≤ 1e-4)"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_enso_reproduction() {
    let Ok(path) = std::env::var("ARHD_ENSO_CSV") else {
        println!("criterion 9: SKIP set ARHD_ENSO_CSV to a monthly Niño-3 CSV (1950-1996) to run");
        return;
    };
    let file = std::fs::File::open(&path).unwrap();
    let traj = read_trajectory(std::io::BufReader::new(file), 1.0, 12).unwrap();
    let config = SstConfig {
        start_year: traj.t0.is_none().then_some(1950),
        ..SstConfig::default()
    };
    let one = [Method::Arhd { alpha: 0.1, beta: 0.4 }];
    let rolling = [Method::Arhd { alpha: 0.4, beta: 0.8 }];
    let out = benchmark_sst(&traj, &config, &one, &rolling).unwrap();
    let shot = out.one_shot.rows[0].mse;
    let roll = out.rolling.rows[0].mse;
    let pass = (0.10..=0.30).contains(&shot) && (0.40..=0.70).contains(&roll);
    verdict(
        9,
        pass,
        &format!("1986 ARHD(0.1, 0.4) mse {shot:.4} (want [0.10, 0.30]); 1987-96 ARHD(0.4, 0.8) mean mse {roll:.4} (want [0.40, 0.70])"),
    );
    assert!(pass);
}

/// Independent orthonormal Fourier function and its derivative.
fn fourier(delta: f64, k: usize, t: f64) -> (f64, f64) {
    if k == 0 {
        return (delta.sqrt().recip(), 0.0);
    }
    let j = ((k + 1) / 2) as f64;
    let w = 2.0 * PI * j / delta;
    let amp = (2.0 / delta).sqrt();
    if k % 2 == 1 {
        (amp * (w * t).cos(), -amp * w * (w * t).sin())
    } else {
        (amp * (w * t).sin(), amp * w * (w * t).cos())
    }
}

#[test]
fn criterion_10_basis_and_score_suite() {
    let delta = 1.8348;
    let n_funcs = 21;
    let spec = BasisSpec::new(delta, n_funcs).unwrap();
    let m = 10_000;
    let grid = midpoint_grid(delta, m);
    let h = delta / m as f64;

    // W-Gram ∫ w_k w_l + ∫ w_k' w_l' and L-Gram ∫ e_k e_l, from
    // independently coded functions and weights.
    let weight = |k: usize| {
        let w = 2.0 * PI * ((k + 1) / 2) as f64 / delta;
        (1.0 + w * w).sqrt().recip()
    };
    let table: Vec<Vec<(f64, f64)>> = (0..n_funcs)
        .map(|k| grid.iter().map(|&t| fourier(delta, k, t)).collect())
        .collect();
    let mut gram_err: f64 = 0.0;
    for k in 0..n_funcs {
        for l in 0..n_funcs {
            let (mut ip_w, mut ip_l) = (0.0, 0.0);
            for j in 0..m {
                let ((ek, dk), (el, dl)) = (table[k][j], table[l][j]);
                ip_w += h * weight(k) * weight(l) * (ek * el + dk * dl);
                ip_l += h * ek * el;
            }
            let target = if k == l { 1.0 } else { 0.0 };
            gram_err = gram_err.max((ip_w - target).abs()).max((ip_l - target).abs());
        }
    }
    // The library's W-functions agree with the independent ones.
    let mut value_err: f64 = 0.0;
    for k in 0..n_funcs {
        for j in (0..m).step_by(97) {
            let lib = spec.eval(Space::W, k, grid[j]).unwrap();
            value_err = value_err.max((lib - weight(k) * table[k][j].0).abs());
        }
    }
    let gram_ok = gram_err <= 1e-6 && value_err <= 1e-12;

    // Projection round trip.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut trip_err: f64 = 0.0;
    for mm in [21usize, 50, 137, 1000] {
        let x = CoeffVec::new(Space::W, DVector::from_fn(n_funcs, |_, _| rng.sample(StandardNormal)));
        let samples = spec.reconstruct_on_grid(&x, mm).unwrap();
        let back = spec.project(&samples).unwrap();
        trip_err = trip_err.max((back.coeffs - &x.coeffs).amax());
    }
    let trip_ok = trip_err <= 1e-8;

    // Differentiation against central differences at m = 10⁴.
    let x = CoeffVec::new(Space::W, DVector::from_fn(n_funcs, |_, _| rng.sample(StandardNormal)));
    let deriv = spec.differentiate(&x).unwrap();
    let eps = h;
    let inner: Vec<f64> = grid.iter().copied().filter(|&t| t > eps && t < delta - eps).collect();
    let plus: Vec<f64> = inner.iter().map(|t| t + eps).collect();
    let minus: Vec<f64> = inner.iter().map(|t| t - eps).collect();
    let fp = spec.reconstruct(&x, &plus).unwrap();
    let fm = spec.reconstruct(&x, &minus).unwrap();
    let analytic = spec.design(Space::L, &inner).unwrap().transpose() * &deriv.coeffs;
    let fd_err = (0..inner.len())
        .map(|i| ((fp[i] - fm[i]) / (2.0 * eps) - analytic[i]).abs())
        .fold(0.0, f64::max);
    let fd_ok = fd_err < 1e-4;

    // Scores against naive loops.
    let mut score_err: f64 = 0.0;
    for trial in 0..20 {
        let len = 1 + trial * 13;
        let o: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
        let p: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
        let mut sq = 0.0;
        let mut rel = 0.0;
        let mut cnt = 0;
        let mut i = 0;
        while i < len {
            sq += (o[i] - p[i]) * (o[i] - p[i]);
            if o[i].abs() >= 1e-8 {
                rel += (o[i] - p[i]).abs() / o[i].abs();
                cnt += 1;
            }
            i += 1;
        }
        score_err = score_err
            .max((mse(&o, &p).unwrap() - sq / len as f64).abs())
            .max((rmae(&o, &p).unwrap().value - rel / cnt as f64).abs());
    }
    let score_ok = score_err <= 1e-12;

    let pass = gram_ok && trip_ok && fd_ok && score_ok;
    verdict(
        10,
        pass,
        &format!(
            "Gram err {gram_err:.2e} (≤ 1e-6); round trip {trip_err:.2e} (≤ 1e-8); d/dt vs FD sup {fd_err:.2e} (< 1e-4); mse/rmae vs loops {score_err:.2e} (≤ 1e-12)"
        ),
    );
    assert!(pass);
}

#[test]
fn estimation_moments_use_pairs() {
    // Guard for criterion 8: every moment used by the fit runs over the same
    // n − 1 pairs.
    let spec = BasisSpec::new(1.0, 3).unwrap();
    let x = DMatrix::from_fn(3, 4, |i, j| (i * j) as f64 + 0.5 * i as f64);
    let panel = CurvePanel::from_coeffs(spec, 5, x.clone()).unwrap();
    let em = estimation_moments(&panel).unwrap();
    let past = x.columns(0, 3);
    let want_gamma = &past * past.transpose() / 3.0;
    let want_delta = x.columns(1, 3) * past.transpose() / 3.0;
    assert!((em.gamma.mat - want_gamma).amax() < 1e-12);
    assert!((em.delta.mat - want_delta).amax() < 1e-12);
}
