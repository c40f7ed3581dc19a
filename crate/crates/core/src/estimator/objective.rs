//! Objective, majorizer and gradient of the sparse Tucker problem.

use crate::error::{shape, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::{creal, Real};
use crate::tensor::Tensor3;

use super::Hyperparams;

pub(crate) fn reconstruct<T: Real>(z: &Tensor3<T>, a: &[ComplexMatrix<T>; 3]) -> Result<Tensor3<T>> {
    z.tucker_product(&a[0], &a[1], &a[2])
}

fn check_dims<T: Real>(z: &Tensor3<T>, a: &[ComplexMatrix<T>; 3], y: &Tensor3<T>) -> Result<()> {
    let zd = z.dims();
    let yd = y.dims();
    for n in 0..3 {
        if a[n].shape() != (yd[n], zd[n]) {
            return Err(shape(format!(
                "factor {} is {:?}, expected {:?} for core {zd:?} and data {yd:?}",
                n + 1,
                a[n].shape(),
                (yd[n], zd[n])
            )));
        }
    }
    Ok(())
}

fn fit<T: Real>(z: &Tensor3<T>, a: &[ComplexMatrix<T>; 3], y: &Tensor3<T>) -> Result<T> {
    check_dims(z, a, y)?;
    Ok(y.sub(&reconstruct(z, a)?)?.frobenius_norm_sqr())
}

fn ridge<T: Real>(a: &[ComplexMatrix<T>; 3]) -> T {
    a.iter().map(|m| m.frobenius_norm_sqr()).sum()
}

/// `Σₙ Σᵢ log(‖slice‖² + δ)`.
pub(crate) fn log_sum<T: Real>(z: &Tensor3<T>, delta: T) -> Result<T> {
    let mut total = T::zero();
    for mode in 1..=3 {
        total = total + z.slice_norms_sqr(mode)?.into_iter().map(|s| (s + delta).ln()).sum::<T>();
    }
    Ok(total)
}

/// MM weights: `D[i1,i2,i3] = Σₙ 1/(‖slice of Z through iₙ along mode n‖² + δ)`.
pub fn weight_tensor<T: Real>(z: &Tensor3<T>, delta: T) -> Result<Tensor3<T>> {
    let s1 = z.slice_norms_sqr(1)?;
    let s2 = z.slice_norms_sqr(2)?;
    let s3 = z.slice_norms_sqr(3)?;
    let inv = |v: Vec<T>| v.into_iter().map(|s| T::one() / (s + delta)).collect::<Vec<_>>();
    let (w1, w2, w3) = (inv(s1), inv(s2), inv(s3));
    Ok(Tensor3::from_fn(z.dims(), |i, j, k| creal(w1[i] + w2[j] + w3[k])))
}

/// The full non-convex objective `L(Z, A)`.
pub fn objective_lo<T: Real>(z: &Tensor3<T>, a: &[ComplexMatrix<T>; 3], y: &Tensor3<T>, hp: &Hyperparams) -> Result<T> {
    let f = fit(z, a, y)?;
    Ok(log_sum(z, T::lit(hp.delta))? + T::lit(hp.lambda1) * f + T::lit(hp.lambda2) * ridge(a))
}

/// `⟨Z, D∗Z⟩ = Σ D·|Z|²` for real non-negative weights.
fn weighted_energy<T: Real>(z: &Tensor3<T>, d: &Tensor3<T>) -> Result<T> {
    if z.dims() != d.dims() {
        return Err(shape(format!("weights {:?} vs core {:?}", d.dims(), z.dims())));
    }
    Ok(z.data().iter().zip(d.data()).map(|(x, w)| w.re * x.norm_sqr()).sum())
}

/// Majorizer of [`objective_lo`] built at `z_ref`, with `d = weight_tensor(z_ref)`.
///
/// Uses `log(x + δ) ≤ log(x₀ + δ) + (x − x₀)/(x₀ + δ)` on every slice energy,
/// so it touches the objective at `z = z_ref`.
pub fn surrogate_sn<T: Real>(
    z: &Tensor3<T>,
    a: &[ComplexMatrix<T>; 3],
    y: &Tensor3<T>,
    d: &Tensor3<T>,
    z_ref: &Tensor3<T>,
    hp: &Hyperparams,
) -> Result<T> {
    let delta = T::lit(hp.delta);
    let mut constant = T::zero();
    for mode in 1..=3 {
        for s in z_ref.slice_norms_sqr(mode)? {
            constant = constant + (s + delta).ln() - s / (s + delta);
        }
    }
    let quad = weighted_energy(z, d)?;
    Ok(constant + quad + T::lit(hp.lambda1) * fit(z, a, y)? + T::lit(hp.lambda2) * ridge(a))
}

/// Inner-loop objective `F(Z) = ⟨Z, D∗Z⟩ + λ1‖Y − Z ×ₙ A⁽ⁿ⁾‖²`.
pub fn inner_objective<T: Real>(
    z: &Tensor3<T>,
    d: &Tensor3<T>,
    a: &[ComplexMatrix<T>; 3],
    y: &Tensor3<T>,
    lambda1: T,
) -> Result<T> {
    Ok(weighted_energy(z, d)? + lambda1 * fit(z, a, y)?)
}

/// Gradient of `λ1‖Y − W ×ₙ A⁽ⁿ⁾‖²` with respect to `W`:
/// `−2λ1 (Y − W ×ₙ A⁽ⁿ⁾) ×ₙ A⁽ⁿ⁾ᴴ`.
pub fn grad_f2<T: Real>(w: &Tensor3<T>, a: &[ComplexMatrix<T>; 3], y: &Tensor3<T>, lambda1: T) -> Result<Tensor3<T>> {
    check_dims(w, a, y)?;
    let residual = y.sub(&reconstruct(w, a)?)?;
    Ok(residual.tucker_adjoint_product(&a[0], &a[1], &a[2])?.scale_real(-T::lit(2.0) * lambda1))
}

/// Proximal step `K = (W − λ3·grad) / (2λ3·D + 1)`, entrywise.
pub fn prox_step<T: Real>(w: &Tensor3<T>, d: &Tensor3<T>, grad: &Tensor3<T>, lambda3: T) -> Result<Tensor3<T>> {
    let v = w.sub(&grad.scale_real(lambda3))?;
    let two = T::lit(2.0);
    v.zip_with(d, |x, dw| x / (two * lambda3 * dw.re + T::one()))
}
