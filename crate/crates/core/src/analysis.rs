//! Accuracy metrics, the Cramér–Rao bound, a least-squares reference
//! estimator and operation counts.

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{invalid, shape, Error, Result};
use crate::estimator::Hyperparams;
use crate::linalg::{hpd_inverse, pinv_full_column_rank};
use crate::matrix::ComplexMatrix;
use crate::scalar::{creal, Real};
use crate::tensor::Tensor3;

/// Largest `N_z·N_y·N_r` for which the FIM may be formed densely.
pub const DENSE_FIM_LIMIT: usize = 512;

/// `(1/M) Σₘ ‖Ĝₘ − Gₘ‖² / ‖Gₘ‖²`.
pub fn nmse<T: Real>(estimates: &[Tensor3<T>], truths: &[Tensor3<T>]) -> Result<f64> {
    if estimates.len() != truths.len() || truths.is_empty() {
        return Err(shape(format!("{} estimates for {} truths", estimates.len(), truths.len())));
    }
    let mut total = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        let energy = t.frobenius_norm_sqr().to_f64_lossy();
        if !(energy > 0.0) {
            return Err(invalid("NMSE is undefined for an all-zero true channel"));
        }
        total += e.sub(t)?.frobenius_norm_sqr().to_f64_lossy() / energy;
    }
    Ok(total / truths.len() as f64)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Dimensions and noise level entering the bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrlbInputs {
    pub noise_power: f64,
    pub subcarriers: usize,
    pub n_z: usize,
    pub n_y: usize,
    pub n_r: usize,
    pub pilots: usize,
}

impl CrlbInputs {
    pub fn from_config(cfg: &SystemConfig, noise_power: f64) -> Self {
        Self { noise_power, subcarriers: cfg.subcarriers, n_z: cfg.n_z, n_y: cfg.n_y, n_r: cfg.n_r(), pilots: cfg.pilots }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power >= 0.0) {
            return Err(invalid(format!("noise power must be non-negative, got {}", self.noise_power)));
        }
        if [self.subcarriers, self.n_z, self.n_y, self.n_r, self.pilots].contains(&0) {
            return Err(invalid("CRLB dimensions must be positive"));
        }
        if self.pilots < self.n_r {
            return Err(invalid(format!("P = {} < N_r = {}: no orthogonal schedule exists", self.pilots, self.n_r)));
        }
        Ok(())
    }
}

/// Bound on the summed MSE over all subcarriers under an orthogonal
/// schedule: `σ² M N_z N_y N_r / P`.
pub fn crlb(inp: &CrlbInputs) -> f64 {
    inp.subcarriers as f64 * crlb_per_subcarrier(inp)
}

/// Single-subcarrier bound `σ² N_z N_y N_r / P`.
pub fn crlb_per_subcarrier(inp: &CrlbInputs) -> f64 {
    inp.noise_power * (inp.n_z * inp.n_y * inp.n_r) as f64 / inp.pilots as f64
}

/// Fisher information `I_{N_y} ⊗ (V* Vᵀ / σ²) ⊗ I_{N_z}` for the vectorized
/// model `vec(Y) = (I ⊗ Vᵀ ⊗ I) vec(G) + noise`, stored by its middle factor.
#[derive(Clone, Debug)]
pub struct KroneckerFim<T> {
    /// `V* Vᵀ / σ²`, `N_r x N_r`.
    pub middle: ComplexMatrix<T>,
    pub n_z: usize,
    pub n_y: usize,
}

impl<T: Real> KroneckerFim<T> {
    pub fn dim(&self) -> usize {
        self.n_z * self.n_y * self.middle.rows()
    }

    /// Dense matrix, only for small test problems.
    pub fn to_dense(&self) -> Result<ComplexMatrix<T>> {
        if self.dim() > DENSE_FIM_LIMIT {
            return Err(invalid(format!("dense FIM of size {} exceeds {DENSE_FIM_LIMIT}", self.dim())));
        }
        Ok(ComplexMatrix::identity(self.n_y).kron(&self.middle).kron(&ComplexMatrix::identity(self.n_z)))
    }

    /// `Tr(FIM⁻¹) = N_z N_y Tr(middle⁻¹)`.
    pub fn trace_of_inverse(&self) -> Result<T> {
        let inv = hpd_inverse(&self.middle)?;
        Ok(T::from_count(self.n_z * self.n_y) * inv.trace().re)
    }
}

pub fn fim<T: Real>(v: &ComplexMatrix<T>, noise_power: f64, n_z: usize, n_y: usize) -> Result<KroneckerFim<T>> {
    if !(noise_power > 0.0) {
        return Err(invalid("FIM needs a positive noise power"));
    }
    let middle = v.conj().matmul(&v.transpose())?.scale(creal(T::lit(1.0 / noise_power)));
    Ok(KroneckerFim { middle, n_z, n_y })
}

/// Both sides of `Tr{(V*Vᵀ)⁻¹} ≥ N_r² / Tr{V*Vᵀ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs` and `rhs` agree within 1e-9.
    pub equality: bool,
}

pub fn trace_bound_check<T: Real>(v: &ComplexMatrix<T>) -> Result<TraceBound> {
    let gram = v.conj().matmul(&v.transpose())?;
    let inv = hpd_inverse(&gram).map_err(|_| Error::Linalg("pilot Gram matrix V*Vᵀ is singular".into()))?;
    let n_r = v.rows() as f64;
    let lhs = inv.trace().re.to_f64_lossy();
    let rhs = n_r * n_r / gram.trace().re.to_f64_lossy();
    let equality = (lhs - rhs).abs() <= 1e-9 * rhs.max(1.0);
    if lhs < rhs - 1e-9 * rhs.max(1.0) {
        return Err(Error::Linalg(format!("trace bound violated: {lhs} < {rhs}, Gram inverse inaccurate")));
    }
    Ok(TraceBound { lhs, rhs, equality })
}

/// Least-squares channel estimate `Y ×₂ pinv(Vᵀ)`.
pub fn ls_oracle_estimate<T: Real>(y: &Tensor3<T>, v: &ComplexMatrix<T>) -> Result<Tensor3<T>> {
    if v.cols() < v.rows() {
        return Err(invalid(format!(
            "least-squares recovery needs P ≥ N_r, got P = {} < N_r = {}",
            v.cols(),
            v.rows()
        )));
    }
    if y.dims()[1] != v.cols() {
        return Err(shape(format!("observation has {} pilots, schedule has {}", y.dims()[1], v.cols())));
    }
    y.mode_product(&pinv_full_column_rank(&v.transpose())?, 2)
}

/// Per-step multiply counts of the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// `P (N_z N_y)²`, once per subcarrier.
    pub hosvd: f64,
    /// Core update: `G_z G_r G_y N_z + N_z G_r G_y P + N_p G_y`, `N_p = N_z P N_y`.
    pub core: f64,
    /// Factor update: `P N_b G_z G_r G_y + (G_z² + G_r² + G_y²) P N_b + G_z³N_z + G_r³P + G_y³N_y`.
    pub factors: f64,
    /// Channel recovery `P N_r²`.
    pub recovery: f64,
    /// `(factors + recovery) · M · t_max`, the overall figure.
    pub total: f64,
    /// `log10(total)`, `-inf` when zero.
    pub log10_total: f64,
    pub mode_ranks: [usize; 3],
}

/// Mode ranks of the full HOSVD of an `N_z x P x N_y` observation.
pub fn full_mode_ranks(cfg: &SystemConfig) -> [usize; 3] {
    let (nz, p, ny) = (cfg.n_z, cfg.pilots, cfg.n_y);
    [nz.min(p * ny), p.min(nz * ny), ny.min(nz * p)]
}

pub fn complexity_estimate(cfg: &SystemConfig, hp: &Hyperparams) -> ComplexityReport {
    let ranks = hp.mode_ranks.unwrap_or_else(|| full_mode_ranks(cfg));
    let [gz, gr, gy] = ranks.map(|g| g as f64);
    let (nz, ny, p) = (cfg.n_z as f64, cfg.n_y as f64, cfg.pilots as f64);
    let nb = nz * ny;
    let nr = cfg.n_r() as f64;
    let np = nz * p * ny;
    let hosvd = p * nb * nb;
    let core = gz * gr * gy * nz + nz * gr * gy * p + np * gy;
    let factors = p * nb * gz * gr * gy
        + (gz * gz + gr * gr + gy * gy) * p * nb
        + gz.powi(3) * nz
        + gr.powi(3) * p
        + gy.powi(3) * ny;
    let recovery = p * nr * nr;
    let total = (factors + recovery) * cfg.subcarriers as f64 * hp.t_max as f64;
    ComplexityReport { hosvd, core, factors, recovery, total, log10_total: total.log10(), mode_ranks: ranks }
}

/// Summary statistics of one batch of trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmse_linear: f64,
    pub nmse_db: f64,
    pub crlb: f64,
    pub mse: f64,
    pub trials: usize,
}

impl MetricReport {
    /// Averages linear NMSE and summed MSE over trials.
    pub fn from_trials<T: Real>(estimates: &[Vec<Tensor3<T>>], truths: &[Vec<Tensor3<T>>], crlb: f64) -> Result<Self> {
        if estimates.len() != truths.len() || truths.is_empty() {
            return Err(shape("trial counts of estimates and truths differ"));
        }
        let mut n = 0.0;
        let mut mse = 0.0;
        for (e, t) in estimates.iter().zip(truths) {
            n += nmse(e, t)?;
            for (a, b) in e.iter().zip(t) {
                mse += a.sub(b)?.frobenius_norm_sqr().to_f64_lossy();
            }
        }
        let trials = truths.len();
        let nmse_linear = n / trials as f64;
        Ok(Self { nmse_linear, nmse_db: to_db(nmse_linear), crlb, mse: mse / trials as f64, trials })
    }
}
