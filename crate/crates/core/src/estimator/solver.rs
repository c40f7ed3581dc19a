//! Algorithm driver: initialization, inner core solver, factor updates and
//! channel recovery.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid, shape, Error, Result};
use crate::hosvd::hosvd_truncated;
use crate::linalg::{cholesky, cholesky_solve, left_singular, pinv_full_column_rank};
use crate::matrix::ComplexMatrix;
use crate::observation::{ObservationSet, PhaseSchedule};
use crate::scalar::{creal, Real, C};
use crate::tensor::{check_mode, Mode, Tensor3};

use super::objective::{grad_f2, inner_objective, objective_lo, prox_step, reconstruct, weight_tensor};
use super::{Hyperparams, Normalization, StepSize, AUTO_STEP_FRACTION};

/// Iterates of one subcarrier's problem.
#[derive(Clone, Debug)]
pub struct EstimatorState<T> {
    /// Normalized observation.
    pub y: Tensor3<T>,
    pub z: Tensor3<T>,
    pub a: [ComplexMatrix<T>; 3],
    /// MM weights for the current outer iteration.
    pub d: Tensor3<T>,
    /// Extrapolated point of the inner loop.
    pub w: Tensor3<T>,
    /// Last proximal candidate.
    pub k: Tensor3<T>,
    /// Inner iterate before `z`.
    pub z_prev: Tensor3<T>,
    pub eta: T,
    /// The observation was divided by this before fitting.
    pub norm_scale: T,
    /// `objective_lo` after initialization and after every outer iteration.
    pub objective_trace: Vec<T>,
}

impl<T: Real> EstimatorState<T> {
    pub fn objective(&self, hp: &Hyperparams) -> Result<T> {
        objective_lo(&self.z, &self.a, &self.y, hp)
    }

    /// Current fit `Z ×ₙ A⁽ⁿ⁾` in the observation's original scale.
    pub fn fitted(&self) -> Result<Tensor3<T>> {
        Ok(reconstruct(&self.z, &self.a)?.scale_real(self.norm_scale))
    }
}

/// Normalizes `y` and seeds core and factors with its HOSVD.
pub fn initialize<T: Real>(y: &Tensor3<T>, hp: &Hyperparams) -> Result<EstimatorState<T>> {
    if !y.is_finite() {
        return Err(invalid("observation has non-finite entries"));
    }
    let norm = y.frobenius_norm();
    if !(norm > T::zero()) {
        return Err(invalid("observation is identically zero"));
    }
    let norm_scale = match hp.normalization {
        Normalization::UnitFrobenius => norm,
        Normalization::UnitRms => norm / T::from_count(y.len()).sqrt(),
    };
    let y = y.scale_real(T::one() / norm_scale);
    let h = hosvd_truncated(&y, hp.mode_ranks)?;
    let z = h.core;
    let a = h.factors;
    let d = weight_tensor(&z, T::lit(hp.delta))?;
    let lo = objective_lo(&z, &a, &y, hp)?;
    Ok(EstimatorState {
        y,
        w: z.clone(),
        k: z.clone(),
        z_prev: z.clone(),
        z,
        a,
        d,
        eta: T::one(),
        norm_scale,
        objective_trace: vec![lo],
    })
}

/// Lipschitz constant of the data-fit gradient, `2λ1 Πₙ σ_max(A⁽ⁿ⁾)²`.
///
/// The gradient map `X ↦ 2λ1 (X ×ₙ A⁽ⁿ⁾) ×ₙ A⁽ⁿ⁾ᴴ` is the Kronecker product
/// of the three Gram matrices, so its top eigenvalue factorizes.
pub fn lipschitz_constant<T: Real>(a: &[ComplexMatrix<T>; 3], lambda1: T) -> Result<T> {
    let mut l = T::lit(2.0) * lambda1;
    for m in a {
        let (_, s) = left_singular(m)?;
        let top = s.first().copied().unwrap_or(T::zero());
        l = l * top * top;
    }
    Ok(l)
}

/// Returns whichever of `k` and `z_prev` has the lower inner objective; ties
/// go to `k`.
pub fn monotone_select<'a, T: Real>(
    k: &'a Tensor3<T>,
    f_k: T,
    z_prev: &'a Tensor3<T>,
    f_prev: T,
) -> (&'a Tensor3<T>, T) {
    if f_k <= f_prev {
        (k, f_k)
    } else {
        (z_prev, f_prev)
    }
}

/// Over-relaxed momentum step. Returns `(W_next, η_next)` with
/// `η_next = (1 + √(1 + 4η²))/2` and
/// `W_next = Z + (η/η_next)(K − Z) + ((η − 1)/η_next)(Z − Z_prev) + (η/η_next)(1 − ρ)(W − K)`.
pub fn momentum_update<T: Real>(
    z: &Tensor3<T>,
    k: &Tensor3<T>,
    z_prev: &Tensor3<T>,
    w: &Tensor3<T>,
    eta: T,
    rho: T,
) -> Result<(Tensor3<T>, T)> {
    let one = T::one();
    let four = T::lit(4.0);
    let eta_next = (one + (one + four * eta * eta).sqrt()) / T::lit(2.0);
    let c1 = eta / eta_next;
    let c2 = (eta - one) / eta_next;
    let c3 = c1 * (one - rho);
    let dims = z.dims();
    for t in [k, z_prev, w] {
        if t.dims() != dims {
            return Err(shape(format!("momentum operands {:?} vs {dims:?}", t.dims())));
        }
    }
    let data = z
        .data()
        .iter()
        .zip(k.data())
        .zip(z_prev.data().iter().zip(w.data()))
        .map(|((&zi, &ki), (&pi, &wi))| zi + (ki - zi) * c1 + (zi - pi) * c2 + (wi - ki) * c3)
        .collect();
    Ok((Tensor3::new(dims, data)?, eta_next))
}

fn step_size<T: Real>(state: &EstimatorState<T>, hp: &Hyperparams) -> Result<T> {
    match hp.lambda3 {
        StepSize::Fixed(s) => Ok(T::lit(s)),
        StepSize::Auto(_) => {
            let l = lipschitz_constant(&state.a, T::lit(hp.lambda1))?;
            Ok(if l > T::zero() { T::lit(AUTO_STEP_FRACTION) / l } else { T::one() })
        }
    }
}

/// Runs `k_max` inner proximal-gradient steps on the core with factors and
/// weights held fixed. Returns the inner objective after entry and after
/// every step.
pub fn update_core<T: Real>(state: &mut EstimatorState<T>, hp: &Hyperparams) -> Result<Vec<T>> {
    let lambda1 = T::lit(hp.lambda1);
    let rho = T::lit(hp.rho);
    let step = step_size(state, hp)?;
    let f = |x: &Tensor3<T>, s: &EstimatorState<T>| inner_objective(x, &s.d, &s.a, &s.y, lambda1);

    let mut f_cur = f(&state.z, state)?;
    let mut trace = vec![f_cur];
    if hp.k_max == 0 {
        return Ok(trace);
    }
    state.w = state.z.clone();
    state.z_prev = state.z.clone();
    state.eta = T::one();
    for _ in 0..hp.k_max {
        let g = grad_f2(&state.w, &state.a, &state.y, lambda1)?;
        let k = prox_step(&state.w, &state.d, &g, step)?;
        let f_k = f(&k, state)?;
        let (chosen, f_new) = monotone_select(&k, f_k, &state.z, f_cur);
        let z_new = chosen.clone();
        let (w_next, eta_next) = momentum_update(&z_new, &k, &state.z, &state.w, state.eta, rho)?;
        state.z_prev = std::mem::replace(&mut state.z, z_new);
        state.w = w_next;
        state.eta = eta_next;
        state.k = k;
        f_cur = f_new;
        trace.push(f_cur);
    }
    Ok(trace)
}

/// `Ξ = (⊗_{k≠n} A⁽ᵏ⁾, highest mode first) · unfold(Z, n)ᵀ`, computed as
/// `unfold(Z ×_{k≠n} A⁽ᵏ⁾, n)ᵀ`.
pub fn build_xi<T: Real>(z: &Tensor3<T>, a: &[ComplexMatrix<T>; 3], mode: Mode) -> Result<ComplexMatrix<T>> {
    let n = check_mode(mode)?;
    let mut t = z.clone();
    for k in 0..3 {
        if k != n {
            t = t.mode_product(&a[k], k + 1)?;
        }
    }
    Ok(t.unfold(mode)?.transpose())
}

/// Conjugate of the ridge system matrix `λ1 ΞᵀΞ* + λ2 I`, which is Hermitian
/// positive definite and is what row solves factor.
fn ridge_system<T: Real>(xi: &ComplexMatrix<T>, lambda1: T, lambda2: T) -> Result<ComplexMatrix<T>> {
    if !(lambda2 > T::zero()) {
        return Err(invalid("factor update needs lambda2 > 0"));
    }
    // conj(λ1 ΞᵀΞ* + λ2 I) = λ1 ΞᴴΞ + λ2 I
    let mut h = xi.gram().scale(creal(lambda1));
    for i in 0..h.rows() {
        h[(i, i)] = h[(i, i)] + creal(lambda2);
    }
    Ok(h)
}

/// Minimizer of `λ1‖y_row − a Ξᵀ‖² + λ2‖a‖²`:
/// `a = λ1 y_row Ξ* (λ1 ΞᵀΞ* + λ2 I)⁻¹`.
pub fn update_factor_row<T: Real>(y_row: &[C<T>], xi: &ComplexMatrix<T>, lambda1: T, lambda2: T) -> Result<Vec<C<T>>> {
    if y_row.len() != xi.rows() {
        return Err(shape(format!("row of length {} against Ξ with {} rows", y_row.len(), xi.rows())));
    }
    let l = cholesky(&ridge_system(xi, lambda1, lambda2)?)?;
    let b: Vec<C<T>> = xi.conj().left_mul_row(y_row)?.into_iter().map(|v| v * lambda1).collect();
    // a H = b  ⇔  conj(H) aᵀ = bᵀ with H Hermitian
    Ok(cholesky_solve(&l, &b))
}

/// Refits every row of every factor, modes 1 to 3 in turn.
pub fn update_factors<T: Real>(state: &mut EstimatorState<T>, hp: &Hyperparams) -> Result<()> {
    let lambda1 = T::lit(hp.lambda1);
    let lambda2 = T::lit(hp.lambda2);
    for mode in 1..=3 {
        let xi = build_xi(&state.z, &state.a, mode)?;
        let l = cholesky(&ridge_system(&xi, lambda1, lambda2)?)?;
        let b = state.y.unfold(mode)?.matmul(&xi.conj())?;
        let mut a = ComplexMatrix::zeros(b.rows(), b.cols());
        for i in 0..b.rows() {
            let rhs: Vec<C<T>> = b.row(i).into_iter().map(|v| v * lambda1).collect();
            a.set_row(i, &cholesky_solve(&l, &rhs));
        }
        state.a[mode - 1] = a;
    }
    Ok(())
}

/// Channel estimate `(Z ×ₙ A⁽ⁿ⁾) ×₂ pinv(Vᵀ)`, rescaled to the observation.
pub fn recover_channel<T: Real>(state: &EstimatorState<T>, schedule: &PhaseSchedule<T>) -> Result<Tensor3<T>> {
    let pinv = schedule_pinv(schedule)?;
    state.fitted()?.mode_product(&pinv, 2)
}

fn schedule_pinv<T: Real>(schedule: &PhaseSchedule<T>) -> Result<ComplexMatrix<T>> {
    if schedule.pilots() < schedule.n_r() {
        return Err(invalid(format!(
            "channel recovery needs P ≥ N_r, got P = {} < N_r = {}",
            schedule.pilots(),
            schedule.n_r()
        )));
    }
    pinv_full_column_rank(&schedule.v.transpose())
}

/// Estimate for one subcarrier.
#[derive(Clone, Debug)]
pub struct SubcarrierEstimate<T> {
    /// `N_z x N_r x N_y` channel estimate.
    pub channel: Tensor3<T>,
    pub objective_trace: Vec<f64>,
    /// Outer iterations performed.
    pub iterations: usize,
    /// Whether the relative-change test stopped the loop before `t_max`.
    pub converged: bool,
}

fn divergence_slack<T: Real>(prev: T) -> T {
    let rel = T::lit(1e-6).max(T::epsilon() * T::lit(1000.0));
    rel * (T::one() + prev.abs())
}

/// Full estimator on one subcarrier's observation.
pub fn estimate<T: Real>(y: &Tensor3<T>, schedule: &PhaseSchedule<T>, hp: &Hyperparams) -> Result<SubcarrierEstimate<T>> {
    hp.validate()?;
    if y.dims()[1] != schedule.pilots() {
        return Err(shape(format!(
            "observation has {} pilots, schedule has {}",
            y.dims()[1],
            schedule.pilots()
        )));
    }
    let pinv = schedule_pinv(schedule)?;
    let mut state = initialize(y, hp)?;
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=hp.t_max {
        state.d = weight_tensor(&state.z, T::lit(hp.delta))?;
        update_core(&mut state, hp)?;
        update_factors(&mut state, hp)?;
        let lo = state.objective(hp)?;
        let prev = *state.objective_trace.last().expect("trace starts with the initial value");
        if !lo.is_finite() || lo > prev + divergence_slack(prev) {
            return Err(Error::Divergence { iteration: t, prev: prev.to_f64_lossy(), next: lo.to_f64_lossy() });
        }
        state.objective_trace.push(lo);
        iterations = t;
        let change = (prev - lo).abs() / prev.abs().max(T::min_positive_value());
        if change < T::lit(hp.rel_tol) {
            converged = true;
            break;
        }
    }
    let channel = state.fitted()?.mode_product(&pinv, 2)?;
    Ok(SubcarrierEstimate {
        channel,
        objective_trace: state.objective_trace.iter().map(|v| v.to_f64_lossy()).collect(),
        iterations,
        converged,
    })
}

/// Estimates for every subcarrier of an observation set.
#[derive(Clone, Debug)]
pub struct EstimationResult<T> {
    pub channels: Vec<Tensor3<T>>,
    pub traces: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub wall_ms: f64,
}

impl<T> EstimationResult<T> {
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    /// Mean over subcarriers of the final objective value.
    pub fn mean_final_objective(&self) -> f64 {
        let finals: Vec<f64> = self.traces.iter().filter_map(|t| t.last().copied()).collect();
        finals.iter().sum::<f64>() / finals.len().max(1) as f64
    }
}

/// Solves the independent per-subcarrier problems in parallel.
pub fn estimate_all<T: Real>(obs: &ObservationSet<T>, hp: &Hyperparams) -> Result<EstimationResult<T>> {
    let start = Instant::now();
    let per: Vec<SubcarrierEstimate<T>> = obs
        .tensors
        .par_iter()
        .map(|y| estimate(y, &obs.schedule, hp))
        .collect::<Result<_>>()?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut out = EstimationResult { channels: Vec::new(), traces: Vec::new(), iterations: Vec::new(), wall_ms };
    for e in per {
        out.channels.push(e.channel);
        out.traces.push(e.objective_trace);
        out.iterations.push(e.iterations);
    }
    Ok(out)
}
