//! Dense complex third-order tensors.
//!
//! Entries are stored mode-1 fastest: the linear index of `(i1, i2, i3)` is
//! `i1 + i2·I1 + i3·I1·I2` (0-based). Mode-n unfoldings keep the remaining
//! two modes in increasing order with the lower mode varying fastest, so that
//! `unfold(X ×₁A ×₂B ×₃C, n) = A⁽ⁿ⁾ · unfold(X, n) · (⊗ of the others, highest
//! mode first)ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::{czero, Real, C};

/// Tensor mode, 1-based as in the usual n-mode notation.
pub type Mode = usize;

pub(crate) fn check_mode(mode: Mode) -> Result<usize> {
    match mode {
        1..=3 => Ok(mode - 1),
        _ => Err(Error::InvalidMode(mode)),
    }
}

/// Dense complex third-order tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Tensor3<T> {
    dims: [usize; 3],
    data: Vec<C<T>>,
}

impl<T: Real> Tensor3<T> {
    pub fn new(dims: [usize; 3], data: Vec<C<T>>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(invalid(format!("tensor extents must be positive, got {dims:?}")));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(shape(format!("{} entries for tensor of dims {dims:?}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self { dims, data: vec![czero(); dims.iter().product()] }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for i3 in 0..dims[2] {
            for i2 in 0..dims[1] {
                for i1 in 0..dims[0] {
                    data.push(f(i1, i2, i3));
                }
            }
        }
        Self { dims, data }
    }

    /// Outer product `a ∘ b ∘ c`.
    pub fn outer(a: &[C<T>], b: &[C<T>], c: &[C<T>]) -> Self {
        Self::from_fn([a.len(), b.len(), c.len()], |i, j, k| a[i] * b[j] * c[k])
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C<T>> {
        self.data
    }

    #[inline]
    pub fn linear_index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.dims[0] * (i2 + self.dims[1] * i3)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> C<T> {
        self.data[self.linear_index(i1, i2, i3)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: C<T>) {
        let k = self.linear_index(i1, i2, i3);
        self.data[k] = v;
    }

    /// Mode-n unfolding: `I_n` rows, columns ordered with the lower remaining
    /// mode fastest.
    pub fn unfold(&self, mode: Mode) -> Result<ComplexMatrix<T>> {
        let n = check_mode(mode)?;
        let [d1, d2, d3] = self.dims;
        let m = match n {
            0 => ComplexMatrix::from_col_major(d1, d2 * d3, self.data.clone())?,
            1 => ComplexMatrix::from_fn(d2, d1 * d3, |i2, col| self.get(col % d1, i2, col / d1)),
            _ => ComplexMatrix::from_fn(d3, d1 * d2, |i3, col| self.get(col % d1, col / d1, i3)),
        };
        Ok(m)
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(m: &ComplexMatrix<T>, mode: Mode, dims: [usize; 3]) -> Result<Self> {
        let n = check_mode(mode)?;
        let others: usize = dims.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, d)| d).product();
        if m.rows() != dims[n] || m.cols() != others {
            return Err(shape(format!(
                "cannot fold a {}x{} matrix along mode {mode} into dims {dims:?}",
                m.rows(),
                m.cols()
            )));
        }
        let [d1, _, _] = dims;
        let t = match n {
            0 => Self::new(dims, m.data().to_vec())?,
            1 => Self::from_fn(dims, |i1, i2, i3| m[(i2, i1 + d1 * i3)]),
            _ => Self::from_fn(dims, |i1, i2, i3| m[(i3, i1 + d1 * i2)]),
        };
        Ok(t)
    }

    /// n-mode product `self ×ₙ m`, with `m.cols() == I_n`.
    pub fn mode_product(&self, m: &ComplexMatrix<T>, mode: Mode) -> Result<Self> {
        let n = check_mode(mode)?;
        let mid = self.dims[n];
        if m.cols() != mid {
            return Err(shape(format!(
                "mode-{mode} product needs {mid} matrix columns, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let pre: usize = self.dims[..n].iter().product();
        let post: usize = self.dims[n + 1..].iter().product();
        let rows = m.rows();
        let mut dims = self.dims;
        dims[n] = rows;
        let mut out = vec![czero(); pre * rows * post];
        for b in 0..post {
            for k in 0..mid {
                let src = &self.data[pre * (k + mid * b)..pre * (k + mid * b + 1)];
                for j in 0..rows {
                    let w = m[(j, k)];
                    if w.re == T::zero() && w.im == T::zero() {
                        continue;
                    }
                    let dst = &mut out[pre * (j + rows * b)..pre * (j + rows * b + 1)];
                    for (o, &s) in dst.iter_mut().zip(src) {
                        *o = *o + w * s;
                    }
                }
            }
        }
        Ok(Self { dims, data: out })
    }

    /// `self ×₁ a ×₂ b ×₃ c`.
    pub fn tucker_product(
        &self,
        a: &ComplexMatrix<T>,
        b: &ComplexMatrix<T>,
        c: &ComplexMatrix<T>,
    ) -> Result<Self> {
        self.mode_product(a, 1)?.mode_product(b, 2)?.mode_product(c, 3)
    }

    /// `self ×₁ aᴴ ×₂ bᴴ ×₃ cᴴ`.
    pub fn tucker_adjoint_product(
        &self,
        a: &ComplexMatrix<T>,
        b: &ComplexMatrix<T>,
        c: &ComplexMatrix<T>,
    ) -> Result<Self> {
        self.tucker_product(&a.adjoint(), &b.adjoint(), &c.adjoint())
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sqr().sqrt()
    }

    /// `⟨a, b⟩ = Σ conj(aᵢ)·bᵢ`.
    pub fn inner_product(&self, other: &Self) -> Result<C<T>> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).fold(czero(), |acc, (a, b)| acc + a.conj() * b))
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self { dims: self.dims, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape(format!("tensor dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    /// Squared Frobenius norm of every slice along `mode`
    /// (`result[i] = ‖X(i,:,:)‖²` for mode 1, and so on).
    pub fn slice_norms_sqr(&self, mode: Mode) -> Result<Vec<T>> {
        let n = check_mode(mode)?;
        let mut out = vec![T::zero(); self.dims[n]];
        let [d1, d2, _] = self.dims;
        for (lin, z) in self.data.iter().enumerate() {
            let idx = match n {
                0 => lin % d1,
                1 => (lin / d1) % d2,
                _ => lin / (d1 * d2),
            };
            out[idx] = out[idx] + z.norm_sqr();
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dims, other.dims, "max_abs_diff on mismatched dims");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_error(&self, reference: &Self) -> T {
        let num: T = self.data.iter().zip(&reference.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        (num / reference.frobenius_norm_sqr()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    fn random_tensor(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Tensor3<f64> {
        Tensor3::from_fn(dims, |_, _, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_matrix(r: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(r, cols, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn one_to_eight() -> Tensor3<f64> {
        Tensor3::new([2, 2, 2], (1..=8).map(|v| c(v as f64)).collect()).unwrap()
    }

    #[test]
    fn mode1_unfolding_of_one_to_eight() {
        let m = one_to_eight().unfold(1).unwrap();
        let expected =
            ComplexMatrix::from_rows(&[vec![c(1.), c(3.), c(5.), c(7.)], vec![c(2.), c(4.), c(6.), c(8.)]]).unwrap();
        assert_eq!(m, expected);
        // index map oracle (i1, i2, i3) -> (i1, i2 + i3·I2)
        let t = one_to_eight();
        for i1 in 0..2 {
            for i2 in 0..2 {
                for i3 in 0..2 {
                    assert_eq!(m[(i1, i2 + 2 * i3)], t.get(i1, i2, i3));
                }
            }
        }
    }

    #[test]
    fn fold_recovers_canonical_layout() {
        let m = one_to_eight().unfold(1).unwrap();
        let t = Tensor3::fold(&m, 1, [2, 2, 2]).unwrap();
        let expected: Vec<_> = (1..=8).map(|v| c(v as f64)).collect();
        assert_eq!(t.data(), &expected[..]);
    }

    #[test]
    fn fold_rejects_bad_shape() {
        let m = ComplexMatrix::<f64>::zeros(2, 5);
        assert!(matches!(Tensor3::fold(&m, 1, [2, 2, 2]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn invalid_mode_rejected() {
        let t = one_to_eight();
        assert!(matches!(t.unfold(0), Err(Error::InvalidMode(0))));
        assert!(matches!(t.unfold(4), Err(Error::InvalidMode(4))));
    }

    #[test]
    fn unfold_shapes() {
        let t = Tensor3::<f64>::zeros([4, 16, 4]);
        assert_eq!(t.unfold(1).unwrap().shape(), (4, 64));
        assert_eq!(t.unfold(2).unwrap().shape(), (16, 16));
        assert_eq!(t.unfold(3).unwrap().shape(), (4, 64));
    }

    #[test]
    fn identity_mode_product_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor([2, 3, 4], &mut rng);
        for n in 1..=3 {
            let id = ComplexMatrix::identity(t.dims()[n - 1]);
            assert_eq!(t.mode_product(&id, n).unwrap(), t);
        }
    }

    #[test]
    fn mode_product_shape_and_mismatch() {
        let g = Tensor3::<f64>::zeros([4, 8, 4]);
        let vt = ComplexMatrix::zeros(16, 8);
        assert_eq!(g.mode_product(&vt, 2).unwrap().dims(), [4, 16, 4]);
        assert!(g.mode_product(&ComplexMatrix::zeros(3, 5), 2).is_err());
    }

    #[test]
    fn mode2_product_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor([2, 2, 2], &mut rng);
        let m = random_matrix(3, 2, &mut rng);
        let r = t.mode_product(&m, 2).unwrap();
        for i1 in 0..2 {
            for j in 0..3 {
                for i3 in 0..2 {
                    let expected = (0..2).fold(C::new(0.0, 0.0), |acc, k| acc + m[(j, k)] * t.get(i1, k, i3));
                    assert!((r.get(i1, j, i3) - expected).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn norms_and_inner_products() {
        assert_eq!(Tensor3::<f64>::zeros([2, 3, 2]).frobenius_norm(), 0.0);
        let ones = Tensor3::from_fn([2, 2, 2], |_, _, _| c(1.0));
        assert!((ones.frobenius_norm() - 8f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_tensor([3, 2, 4], &mut rng);
        let ones = Tensor3::from_fn(a.dims(), |_, _, _| c(1.0));
        let ip = a.inner_product(&ones.hadamard(&a).unwrap()).unwrap();
        assert!((ip.re - a.frobenius_norm_sqr()).abs() < 1e-12);
        assert!(ip.im.abs() < 1e-12);
        assert!(a.inner_product(&Tensor3::zeros([1, 1, 1])).is_err());
    }

    #[test]
    fn slice_norms_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_tensor([2, 3, 4], &mut rng);
        let s2 = t.slice_norms_sqr(2).unwrap();
        for (i2, &s) in s2.iter().enumerate() {
            let mut acc = 0.0;
            for i1 in 0..2 {
                for i3 in 0..4 {
                    acc += t.get(i1, i2, i3).norm_sqr();
                }
            }
            assert!((acc - s).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn fold_unfold_round_trip(d1 in 1usize..5, d2 in 1usize..5, d3 in 1usize..5, seed in any::<u64>(), mode in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor([d1, d2, d3], &mut rng);
            let back = Tensor3::fold(&t.unfold(mode).unwrap(), mode, t.dims()).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn mode_products_on_distinct_modes_commute(d1 in 1usize..5, d2 in 1usize..5, d3 in 1usize..5, r1 in 1usize..5, r2 in 1usize..5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor([d1, d2, d3], &mut rng);
            let a = random_matrix(r1, d1, &mut rng);
            let b = random_matrix(r2, d2, &mut rng);
            let x = t.mode_product(&a, 1).unwrap().mode_product(&b, 2).unwrap();
            let y = t.mode_product(&b, 2).unwrap().mode_product(&a, 1).unwrap();
            prop_assert!(x.max_abs_diff(&y) < 1e-12);
        }

        #[test]
        fn mode_product_equals_fold_of_matrix_product(d1 in 1usize..5, d2 in 1usize..5, d3 in 1usize..5, r in 1usize..5, seed in any::<u64>(), mode in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor([d1, d2, d3], &mut rng);
            let m = random_matrix(r, t.dims()[mode - 1], &mut rng);
            let mut dims = t.dims();
            dims[mode - 1] = r;
            let via_unfold = Tensor3::fold(&m.matmul(&t.unfold(mode).unwrap()).unwrap(), mode, dims).unwrap();
            prop_assert!(t.mode_product(&m, mode).unwrap().max_abs_diff(&via_unfold) < 1e-12);
        }
    }
}
