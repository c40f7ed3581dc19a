mod common;

use common::*;
use rayon::prelude::*;
use xlirs::analysis::*;
use xlirs::channel::SystemConfig;
use xlirs::estimator::Hyperparams;
use xlirs::linalg::{lu_solve, pinv_full_column_rank};
use xlirs::observation::{build_phase_schedule, ScheduleKind};
use xlirs::rng::{complex_gaussian, derive_seed, rng_from_seed};
use xlirs::{ComplexMatrix, Tensor3, C};

#[test]
fn nmse_cases() {
    let mut r = rng(1);
    let h = tensor([2, 3, 2], &mut r);
    let h = h.scale_real(1.0 / h.frobenius_norm());
    assert_eq!(nmse(&[h.clone()], &[h.clone()]).unwrap(), 0.0);
    assert!((nmse(&[Tensor3::zeros(h.dims())], &[h.clone()]).unwrap() - 1.0).abs() < 1e-15);
    let p = tensor([2, 3, 2], &mut r);
    let p = p.scale_real(1.0 / p.frobenius_norm());
    let eps = 0.01;
    let e = h.add(&p.scale_real(eps)).unwrap();
    assert!((nmse(&[e.clone()], &[h.clone()]).unwrap() - eps * eps).abs() < 1e-15);
    // scale invariance
    let a = C::new(3.0, -2.0);
    let n1 = nmse(&[e.clone()], &[h.clone()]).unwrap();
    let n2 = nmse(&[e.scale(a)], &[h.scale(a)]).unwrap();
    assert!((n1 - n2).abs() < 1e-12 * n1);
    assert!(nmse(&[h.clone()], &[Tensor3::zeros(h.dims())]).is_err());
    assert!(nmse(&[h.clone()], &[]).is_err());
}

fn reference_inputs(noise_power: f64) -> CrlbInputs {
    CrlbInputs { noise_power, subcarriers: 6, n_z: 5, n_y: 5, n_r: 256, pilots: 280 }
}

#[test]
fn crlb_values() {
    assert!((crlb(&reference_inputs(1.0)) - 6.0 * 25.0 * 256.0 / 280.0).abs() < 1e-9);
    assert!((crlb(&reference_inputs(1.0)) - 137.142857).abs() < 1e-6);
    assert_eq!(crlb(&reference_inputs(0.0)), 0.0);
    let doubled = CrlbInputs { subcarriers: 12, ..reference_inputs(1.0) };
    assert!((crlb(&doubled) - 2.0 * crlb(&reference_inputs(1.0))).abs() < 1e-9);
    assert_eq!(CrlbInputs::from_config(&SystemConfig::paper(), 1.0), reference_inputs(1.0));
}

fn dense_qv(v: &ComplexMatrix<f64>, n_z: usize, n_y: usize) -> ComplexMatrix<f64> {
    ComplexMatrix::identity(n_y).kron(&v.transpose()).kron(&ComplexMatrix::identity(n_z))
}

#[test]
fn fim_orthogonal_schedule_is_scaled_identity() {
    let v = build_phase_schedule::<f64>(8, 16, ScheduleKind::OrthogonalDft, 0).unwrap();
    let f = fim(&v.v, 0.5, 2, 2).unwrap();
    let dense = f.to_dense().unwrap();
    let want = ComplexMatrix::identity(32).scale(C::new(16.0 / 0.5, 0.0));
    assert!(dense.max_abs_diff(&want) < 1e-9);
    let q = dense_qv(&v.v, 2, 2);
    let qq = q.adjoint().matmul(&q).unwrap().scale(C::new(2.0, 0.0));
    assert!(dense.max_abs_diff(&qq) < 1e-9);
    assert!(fim(&v.v, 0.0, 2, 2).is_err());
}

#[test]
fn fim_trivial_kronecker_factors() {
    let v = build_phase_schedule::<f64>(4, 6, ScheduleKind::RandomPhase, 3).unwrap();
    let f = fim(&v.v, 2.0, 1, 1).unwrap();
    let want = v.gram().scale(C::new(0.5, 0.0));
    assert!(f.to_dense().unwrap().max_abs_diff(&want) < 1e-15);
}

#[test]
fn fim_trace_of_inverse() {
    for seed in 0..5 {
        let v = build_phase_schedule::<f64>(4, 6, ScheduleKind::RandomPhase, seed).unwrap();
        let f = fim(&v.v, 0.3, 2, 3).unwrap();
        let dense = f.to_dense().unwrap();
        let inv = lu_solve(&dense, &ComplexMatrix::identity(dense.rows())).unwrap();
        let inv_gram = lu_solve(&v.gram(), &ComplexMatrix::identity(4)).unwrap();
        let want = 6.0 * 0.3 * inv_gram.trace().re;
        assert!((inv.trace().re - want).abs() < 1e-9 * want);
        assert!((f.trace_of_inverse().unwrap() - want).abs() < 1e-9 * want);
    }
    let big = fim(&build_phase_schedule::<f64>(64, 64, ScheduleKind::OrthogonalDft, 0).unwrap().v, 1.0, 4, 4).unwrap();
    assert!(big.to_dense().is_err());
}

#[test]
fn crlb_equals_dense_fim_trace_chain() {
    let (n_z, n_y, n_r, p, m, s2) = (2, 2, 8, 16, 3, 0.2);
    let v = build_phase_schedule::<f64>(n_r, p, ScheduleKind::OrthogonalDft, 0).unwrap();
    let q = dense_qv(&v.v, n_z, n_y);
    let qq = q.adjoint().matmul(&q).unwrap();
    let per = s2 * lu_solve(&qq, &ComplexMatrix::identity(qq.rows())).unwrap().trace().re;
    let inp = CrlbInputs { noise_power: s2, subcarriers: m, n_z, n_y, n_r, pilots: p };
    assert!((crlb(&inp) - m as f64 * per).abs() < 1e-9);
}

#[test]
fn trace_bound_cases() {
    let v = build_phase_schedule::<f64>(8, 16, ScheduleKind::OrthogonalDft, 0).unwrap();
    let tb = trace_bound_check(&v.v).unwrap();
    assert!((tb.lhs - 0.5).abs() < 1e-9 && (tb.rhs - 0.5).abs() < 1e-9 && tb.equality);
    for seed in 0..20 {
        let n_r = 2 + (seed as usize % 15);
        let v = build_phase_schedule::<f64>(n_r, 2 * n_r, ScheduleKind::RandomPhase, seed).unwrap();
        let tb = trace_bound_check(&v.v).unwrap();
        assert!(tb.lhs > tb.rhs && !tb.equality);
    }
    for p in [1, 3, 7] {
        let v = build_phase_schedule::<f64>(1, p, ScheduleKind::RandomPhase, 4).unwrap();
        let tb = trace_bound_check(&v.v).unwrap();
        assert!((tb.lhs - 1.0 / p as f64).abs() < 1e-12 && (tb.rhs - 1.0 / p as f64).abs() < 1e-12);
    }
    // two identical rows make V*Vᵀ singular
    let row: Vec<C<f64>> = (0..4).map(|p| C::new(0.0, p as f64).exp()).collect();
    let singular = ComplexMatrix::from_rows(&[row.clone(), row]).unwrap();
    assert!(trace_bound_check(&singular).is_err());
}

#[test]
fn ls_oracle_noiseless_and_dense_equivalence() {
    let mut r = rng(5);
    let v = build_phase_schedule::<f64>(4, 6, ScheduleKind::RandomPhase, 1).unwrap();
    let g = tensor([2, 4, 2], &mut r);
    let y = g.mode_product(&v.v.transpose(), 2).unwrap();
    let est = ls_oracle_estimate(&y, &v.v).unwrap();
    assert!(rel_diff(&est, &g) < 1e-9);

    let noisy = y.add(&tensor(y.dims(), &mut r).scale_real(0.1)).unwrap();
    let est = ls_oracle_estimate(&noisy, &v.v).unwrap();
    let q = dense_qv(&v.v, 2, 2);
    let x = pinv_full_column_rank(&q).unwrap().matmul(&ComplexMatrix::column_vector(noisy.data())).unwrap();
    for i in 0..est.len() {
        assert!((x[(i, 0)] - est.data()[i]).norm() < 1e-10);
    }
    let short = build_phase_schedule::<f64>(4, 3, ScheduleKind::RandomPhase, 1).unwrap();
    let y3 = g.mode_product(&short.v.transpose(), 2).unwrap();
    assert!(ls_oracle_estimate(&y3, &short.v).is_err());
}

/// Monte-Carlo MSE of the LS oracle on one subcarrier with pure noise input;
/// the estimator is linear and unbiased, so the channel itself cancels.
pub fn ls_monte_carlo_mse(trials: usize, seed: u64) -> (f64, f64) {
    let (n_z, n_y, n_r, p, s2) = (2, 2, 8, 16, 0.01);
    let v = build_phase_schedule::<f64>(n_r, p, ScheduleKind::OrthogonalDft, 0).unwrap();
    let mut r = rng(seed);
    let g = tensor([n_z, n_r, n_y], &mut r);
    let clean = g.mode_product(&v.v.transpose(), 2).unwrap();
    let errs: Vec<(f64, Tensor3<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut nr = rng_from_seed(derive_seed(seed, &[t as u64]));
            let noise: Vec<C<f64>> = (0..clean.len()).map(|_| complex_gaussian::<f64>(&mut nr, s2)).collect();
            let y = clean.add(&Tensor3::new(clean.dims(), noise).unwrap()).unwrap();
            let e = ls_oracle_estimate(&y, &v.v).unwrap().sub(&g).unwrap();
            (e.frobenius_norm_sqr(), e)
        })
        .collect();
    let mse = errs.iter().map(|e| e.0).sum::<f64>() / trials as f64;
    let mut mean = Tensor3::zeros(g.dims());
    for (_, e) in &errs {
        mean = mean.add(e).unwrap();
    }
    let bias = mean.scale_real(1.0 / trials as f64).frobenius_norm();
    let bound = crlb_per_subcarrier(&CrlbInputs { noise_power: s2, subcarriers: 1, n_z, n_y, n_r, pilots: p });
    (mse / bound, bias)
}

#[test]
fn ls_oracle_attains_crlb() {
    let (ratio, _) = ls_monte_carlo_mse(500, 7);
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");
}

#[test]
fn ls_oracle_is_unbiased() {
    let (_, b2) = ls_monte_carlo_mse(100, 8);
    let (_, b4) = ls_monte_carlo_mse(10_000, 8);
    // mean error shrinks like 1/√trials
    assert!(b4 < b2 / 4.0, "{b2} -> {b4}");
}

#[test]
fn complexity_cases() {
    let cfg = SystemConfig::paper();
    let hp = Hyperparams { mode_ranks: Some(Hyperparams::REFERENCE_MODE_RANKS), t_max: 500, ..Hyperparams::default() };
    let rep = complexity_estimate(&cfg, &hp);
    for v in [rep.hosvd, rep.core, rep.factors, rep.recovery, rep.total] {
        assert!(v.is_finite() && v > 0.0);
    }
    // hand evaluation of the factor term: P N_b GzGrGy + (Gz²+Gr²+Gy²) P N_b + Gz³Nz + Gr³P + Gy³Ny
    let f = 280.0 * 25.0 * 7000.0 + (25.0 + 78400.0 + 25.0) * 280.0 * 25.0 + 125.0 * 5.0 + 280f64.powi(3) * 280.0 + 125.0 * 5.0;
    assert!((rep.factors - f).abs() < 1e-6 * f);
    let total = (f + 280.0 * 256.0 * 256.0) * 6.0 * 500.0;
    assert!((rep.total - total).abs() < 1e-6 * total);
    assert!((rep.log10_total - total.log10()).abs() < 1e-12);

    let zero = complexity_estimate(&cfg, &Hyperparams { t_max: 0, ..hp.clone() });
    assert_eq!(zero.total, 0.0);

    let mut prev = 0.0;
    for p in [280, 290, 300, 310] {
        let c = SystemConfig { pilots: p, ..cfg.clone() };
        let t = complexity_estimate(&c, &hp).total;
        assert!(t > prev);
        prev = t;
    }
    assert_eq!(full_mode_ranks(&cfg), [5, 25, 5]);
}

#[test]
fn metric_report_averages() {
    let mut r = rng(9);
    let h = vec![tensor([2, 2, 2], &mut r)];
    let e = vec![h[0].scale_real(0.9)];
    let rep = MetricReport::from_trials(&[e.clone(), h.clone()], &[h.clone(), h.clone()], 1.0).unwrap();
    assert!((rep.nmse_linear - 0.005).abs() < 1e-12);
    assert!((rep.nmse_db - 10.0 * 0.005f64.log10()).abs() < 1e-12);
    assert_eq!(rep.trials, 2);
    assert!(rep.mse >= 0.0);
}
