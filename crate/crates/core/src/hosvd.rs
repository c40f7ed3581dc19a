//! Higher-order SVD (Tucker decomposition with orthonormal factors).

use crate::error::{invalid, Error, Result};
use crate::linalg::left_singular;
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;
use crate::tensor::Tensor3;

/// Core tensor plus one orthonormal factor per mode.
#[derive(Clone, Debug)]
pub struct HosvdResult<T> {
    pub core: Tensor3<T>,
    pub factors: [ComplexMatrix<T>; 3],
    pub mode_ranks: [usize; 3],
    /// Singular values of each mode unfolding, descending.
    pub singular_values: [Vec<T>; 3],
}

impl<T: Real> HosvdResult<T> {
    /// `core ×₁ U⁽¹⁾ ×₂ U⁽²⁾ ×₃ U⁽³⁾`.
    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        let [a, b, c] = &self.factors;
        self.core.tucker_product(a, b, c)
    }
}

/// HOSVD keeping the full mode ranks `min(I_n, Π_{k≠n} I_k)`.
pub fn hosvd<T: Real>(t: &Tensor3<T>) -> Result<HosvdResult<T>> {
    hosvd_truncated(t, None)
}

/// HOSVD with optional per-mode rank truncation. Requested ranks larger than
/// the full mode rank are clamped.
pub fn hosvd_truncated<T: Real>(t: &Tensor3<T>, ranks: Option<[usize; 3]>) -> Result<HosvdResult<T>> {
    if !t.is_finite() {
        return Err(Error::Linalg("HOSVD input has non-finite entries".into()));
    }
    if let Some(r) = ranks {
        if r.contains(&0) {
            return Err(invalid(format!("mode ranks must be positive, got {r:?}")));
        }
    }
    let mut factors = Vec::with_capacity(3);
    let mut sigmas = Vec::with_capacity(3);
    for mode in 1..=3 {
        let (u, s) = left_singular(&t.unfold(mode)?)?;
        let keep = ranks.map_or(u.cols(), |r| r[mode - 1].min(u.cols()));
        factors.push(u.leading_columns(keep));
        sigmas.push(s);
    }
    let factors: [ComplexMatrix<T>; 3] = factors.try_into().expect("three factors");
    let singular_values: [Vec<T>; 3] = sigmas.try_into().expect("three spectra");
    let core = t.tucker_adjoint_product(&factors[0], &factors[1], &factors[2])?;
    let mode_ranks = [factors[0].cols(), factors[1].cols(), factors[2].cols()];
    Ok(HosvdResult { core, factors, mode_ranks, singular_values })
}
