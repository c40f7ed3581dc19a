//! Dense complex factorizations: Householder QR, one-sided Jacobi SVD,
//! Cholesky and pivoted LU.
//!
//! Singular values are reported in descending order; equal values keep the
//! order in which the Jacobi sweep left them (first occurrence first).

use crate::error::{shape, Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::{cone, czero, creal, Real, C};

const MAX_JACOBI_SWEEPS: usize = 80;

/// Thin Householder QR of a matrix with `rows >= cols`.
///
/// Returns `(Q, R)` with `Q` of shape `rows x cols` having orthonormal columns
/// and `R` upper triangular `cols x cols`. Rank-deficient input is fine: `Q`
/// stays orthonormal.
pub fn householder_qr<T: Real>(a: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(shape(format!("thin QR needs rows >= cols, got {m}x{n}")));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Option<Vec<C<T>>>> = Vec::with_capacity(n);
    for k in 0..n {
        let norm_x = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if norm_x == T::zero() {
            reflectors.push(None);
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { cone() };
        let alpha = -phase * norm_x;
        let mut v: Vec<C<T>> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            reflectors.push(None);
            continue;
        }
        for z in &mut v {
            *z = *z / vnorm;
        }
        apply_reflector(&mut r, &v, k, k);
        reflectors.push(Some(v));
    }
    let mut q = ComplexMatrix::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = cone();
    }
    for k in (0..n).rev() {
        if let Some(v) = &reflectors[k] {
            apply_reflector(&mut q, v, k, 0);
        }
    }
    let r = ComplexMatrix::from_fn(n, n, |i, j| if i <= j { r[(i, j)] } else { czero() });
    Ok((q, r))
}

/// Applies `I - 2vvᴴ` to rows `k..` of columns `col0..` of `a`.
fn apply_reflector<T: Real>(a: &mut ComplexMatrix<T>, v: &[C<T>], k: usize, col0: usize) {
    let two = T::lit(2.0);
    for j in col0..a.cols() {
        let col = a.column_mut(j);
        let dot = v.iter().zip(&col[k..]).fold(czero(), |acc, (vi, xi)| acc + vi.conj() * xi);
        let f = dot * two;
        for (xi, vi) in col[k..].iter_mut().zip(v) {
            *xi = *xi - vi * f;
        }
    }
}

/// Left singular vectors and singular values of `x`.
///
/// Returns `(U, sigma)` with `U` of shape `rows x min(rows, cols)`, orthonormal
/// columns, and `sigma` sorted in descending order.
pub fn left_singular<T: Real>(x: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, Vec<T>)> {
    if !x.is_finite() {
        return Err(Error::Linalg("SVD input contains non-finite entries".into()));
    }
    let (m, n) = x.shape();
    if m <= n {
        jacobi_left(x)
    } else {
        let (q, r) = householder_qr(x)?;
        let (w, sigma) = jacobi_left(&r)?;
        Ok((q.matmul(&w)?, sigma))
    }
}

/// One-sided Jacobi on the rows of a wide (or square) matrix.
fn jacobi_left<T: Real>(x: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, Vec<T>)> {
    let k = x.rows();
    let mut rows: Vec<Vec<C<T>>> = (0..k).map(|i| x.row(i)).collect();
    let mut w: Vec<Vec<C<T>>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { cone() } else { czero() }).collect())
        .collect();
    // rounding in the row inner products grows with the row length
    let tol = T::epsilon() * T::from_count(x.cols().max(4));
    let floor = x.frobenius_norm_sqr() * T::epsilon() * T::epsilon();
    let mut converged = k < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha: T = rows[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = rows[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma = rows[i]
                    .iter()
                    .zip(&rows[j])
                    .fold(czero(), |acc, (a, b)| acc + a * b.conj());
                let g = gamma.norm();
                if g <= floor || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut rows, i, j, c, s, phase);
                rotate_pair(&mut w, i, j, c, s, phase);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Linalg(format!("Jacobi SVD did not converge in {MAX_JACOBI_SWEEPS} sweeps")));
    }
    let mut order: Vec<(usize, T)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()))
        .collect();
    // stable sort keeps first occurrence first on ties
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let u = ComplexMatrix::from_fn(k, k, |r, col| w[order[col].0][r].conj());
    Ok((u, order.into_iter().map(|(_, s)| s).collect()))
}

fn rotate_pair<T: Real>(rows: &mut [Vec<C<T>>], i: usize, j: usize, c: T, s: T, phase: C<T>) {
    let (lo, hi) = rows.split_at_mut(j);
    let ri = &mut lo[i];
    let rj = &mut hi[0];
    let sp = phase * s;
    let sm = phase.conj() * s;
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x * c - sp * y;
        *b = sm * x + y * c;
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky<T: Real>(h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = h.rows();
    if h.cols() != n {
        return Err(shape("cholesky needs a square matrix"));
    }
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d = d - l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Linalg(format!("matrix is not positive definite (pivot {j})")));
        }
        let djj = d.sqrt();
        l[(j, j)] = creal(djj);
        for i in (j + 1)..n {
            let mut v = h[(i, j)];
            for k in 0..j {
                v = v - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

/// Solves `H x = b` given the Cholesky factor `L` of `H`.
pub fn cholesky_solve<T: Real>(l: &ComplexMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v = v - l[(i, k)] * y[k];
        }
        y[i] = v / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v = v - l[(k, i)].conj() * y[k];
        }
        y[i] = v / l[(i, i)];
    }
    y
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse<T: Real>(h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let l = cholesky(h)?;
    let n = h.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut e = vec![czero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|z| *z = czero());
        e[j] = cone();
        let x = cholesky_solve(&l, &e);
        inv.column_mut(j).copy_from_slice(&x);
    }
    Ok(inv)
}

/// Solves the general square system `A X = B` by LU with partial pivoting.
pub fn lu_solve<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(shape(format!("lu_solve with A {:?} and B {:?}", a.shape(), b.shape())));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.data().iter().map(|z| z.norm()).fold(T::zero(), T::max);
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= T::epsilon() * scale * T::from_count(n) {
            return Err(Error::Linalg("singular matrix in LU solve".into()));
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = tmp;
            }
        }
        let piv = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - f * v;
            }
            for j in 0..x.cols() {
                let v = x[(k, j)];
                x[(i, j)] = x[(i, j)] - f * v;
            }
        }
    }
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut v = x[(i, j)];
            for k in (i + 1)..n {
                v = v - lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = v / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Moore–Penrose pseudoinverse of a full-column-rank matrix (`rows >= cols`),
/// computed as `R⁻¹ Qᴴ` from a thin QR.
pub fn pinv_full_column_rank<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(shape(format!("pseudoinverse needs rows >= cols, got {m}x{n}")));
    }
    let (q, r) = householder_qr(a)?;
    let rmax = (0..n).map(|i| r[(i, i)].norm()).fold(T::zero(), T::max);
    let tol = rmax * T::epsilon() * T::from_count(m.max(n)) * T::lit(16.0);
    if (0..n).any(|i| r[(i, i)].norm() <= tol) {
        return Err(Error::Linalg("matrix is column rank deficient".into()));
    }
    let qh = q.adjoint();
    let mut out = ComplexMatrix::zeros(n, m);
    for col in 0..m {
        let b = qh.column(col);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v = v - r[(i, k)] * x[k];
            }
            x[i] = v / r[(i, i)];
        }
        out.column_mut(col).copy_from_slice(&x);
    }
    Ok(out)
}
