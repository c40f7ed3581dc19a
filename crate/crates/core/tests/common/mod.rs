#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlirs::{ComplexMatrix, Tensor3, C};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cval(rng: &mut ChaCha8Rng) -> C<f64> {
    C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn tensor(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Tensor3<f64> {
    Tensor3::from_fn(dims, |_, _, _| cval(rng))
}

pub fn matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
    ComplexMatrix::from_fn(rows, cols, |_, _| cval(rng))
}

pub fn factors(data: [usize; 3], core: [usize; 3], rng: &mut ChaCha8Rng) -> [ComplexMatrix<f64>; 3] {
    [matrix(data[0], core[0], rng), matrix(data[1], core[1], rng), matrix(data[2], core[2], rng)]
}

/// `t[i1,i2,i3] = Σ a[i1,j1] b[i2,j2] c[i3,j3] z[j1,j2,j3]`, by brute force.
pub fn tucker_brute(z: &Tensor3<f64>, a: &[ComplexMatrix<f64>; 3]) -> Tensor3<f64> {
    let [g1, g2, g3] = z.dims();
    let dims = [a[0].rows(), a[1].rows(), a[2].rows()];
    Tensor3::from_fn(dims, |i1, i2, i3| {
        let mut s = C::new(0.0, 0.0);
        for j1 in 0..g1 {
            for j2 in 0..g2 {
                for j3 in 0..g3 {
                    s += a[0][(i1, j1)] * a[1][(i2, j2)] * a[2][(i3, j3)] * z.get(j1, j2, j3);
                }
            }
        }
        s
    })
}

/// Slice energy of `z` through index `i` along `mode`, by brute force.
pub fn slice_energy(z: &Tensor3<f64>, mode: usize, i: usize) -> f64 {
    let [d1, d2, d3] = z.dims();
    let mut s = 0.0;
    for a in 0..d1 {
        for b in 0..d2 {
            for c in 0..d3 {
                let idx = [a, b, c][mode - 1];
                if idx == i {
                    s += z.get(a, b, c).norm_sqr();
                }
            }
        }
    }
    s
}

pub fn rel_diff(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}
