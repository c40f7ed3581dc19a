//! Pilot observations: IRS phase schedules, the noiseless forward model and
//! calibrated noise.
//!
//! With unit pilots the received tensor at subcarrier `m` is
//! `Y_m = G_m ×₂ Vᵀ + N_m`, where column `p` of `V` holds the IRS phase
//! shifts used for pilot symbol `p`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, shape, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::{complex_gaussian, derive_seed, rng_from_seed};
use crate::scalar::{cis, Real};
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `N_r` distinct rows of the `P`-point DFT matrix.
    OrthogonalDft,
    /// I.i.d. phases uniform on `[0, 2π)`.
    RandomPhase,
}

/// IRS phase shifts over the pilot block, `N_r x P`, unit modulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PhaseSchedule<T> {
    pub v: ComplexMatrix<T>,
    pub kind: ScheduleKind,
}

impl<T: Real> PhaseSchedule<T> {
    pub fn n_r(&self) -> usize {
        self.v.rows()
    }

    pub fn pilots(&self) -> usize {
        self.v.cols()
    }

    /// `V* Vᵀ`, the `N_r x N_r` pilot Gram matrix.
    pub fn gram(&self) -> ComplexMatrix<T> {
        self.v.conj().matmul(&self.v.transpose()).expect("conformant by construction")
    }
}

pub fn build_phase_schedule<T: Real>(n_r: usize, pilots: usize, kind: ScheduleKind, seed: u64) -> Result<PhaseSchedule<T>> {
    if n_r == 0 || pilots == 0 {
        return Err(invalid("phase schedule needs N_r ≥ 1 and P ≥ 1"));
    }
    let v = match kind {
        ScheduleKind::OrthogonalDft => {
            if pilots < n_r {
                return Err(invalid(format!(
                    "orthogonal schedule needs P ≥ N_r, got P = {pilots} < N_r = {n_r}"
                )));
            }
            ComplexMatrix::from_fn(n_r, pilots, |i, p| {
                let k = (i * p) % pilots;
                cis(T::lit(-2.0 * PI * k as f64 / pilots as f64))
            })
        }
        ScheduleKind::RandomPhase => {
            let mut rng = rng_from_seed(seed);
            let mut data = Vec::with_capacity(n_r * pilots);
            // column-major fill: one pilot's phase vector at a time
            for _ in 0..n_r * pilots {
                data.push(cis(T::lit(rng.random_range(0.0..2.0 * PI))));
            }
            ComplexMatrix::from_col_major(n_r, pilots, data)?
        }
    };
    Ok(PhaseSchedule { v, kind })
}

/// Pilot observations for every subcarrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ObservationSet<T> {
    /// `N_z x P x N_y` per subcarrier.
    pub tensors: Vec<Tensor3<T>>,
    pub schedule: PhaseSchedule<T>,
    pub noise_power: f64,
    pub snr_db: f64,
}

/// Noiseless received tensor `G ×₂ Vᵀ`.
pub fn forward<T: Real>(g: &Tensor3<T>, schedule: &PhaseSchedule<T>) -> Result<Tensor3<T>> {
    if g.dims()[1] != schedule.n_r() {
        return Err(shape(format!(
            "channel has {} IRS elements, schedule has {}",
            g.dims()[1],
            schedule.n_r()
        )));
    }
    g.mode_product(&schedule.v.transpose(), 2)
}

fn check_noise(noise_power: f64) -> Result<()> {
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        return Err(invalid(format!("noise power must be finite and non-negative, got {noise_power}")));
    }
    Ok(())
}

/// Received tensors `G_m ×₂ Vᵀ + N_m` with i.i.d. `CN(0, σ²)` noise.
///
/// Subcarrier `m` draws its noise from a stream derived from `seed` and `m`,
/// so the result does not depend on evaluation order.
pub fn observe<T: Real>(
    ch: &ChannelRealization<T>,
    schedule: &PhaseSchedule<T>,
    noise_power: f64,
    seed: u64,
) -> Result<ObservationSet<T>> {
    check_noise(noise_power)?;
    let tensors = ch
        .tensors
        .par_iter()
        .enumerate()
        .map(|(m, g)| {
            let mut y = forward(g, schedule)?;
            if noise_power > 0.0 {
                let mut rng = rng_from_seed(derive_seed(seed, &[m as u64]));
                for z in y.data_mut() {
                    *z = *z + complex_gaussian::<T>(&mut rng, noise_power);
                }
            }
            Ok(y)
        })
        .collect::<Result<Vec<_>>>()?;
    let snr_db = match signal_power(ch, schedule) {
        Ok(p) if noise_power > 0.0 => 10.0 * (p / noise_power).log10(),
        _ => f64::INFINITY,
    };
    Ok(ObservationSet { tensors, schedule: schedule.clone(), noise_power, snr_db })
}

/// Mean per-entry power of the noiseless received tensors.
pub fn signal_power<T: Real>(ch: &ChannelRealization<T>, schedule: &PhaseSchedule<T>) -> Result<f64> {
    if ch.tensors.is_empty() {
        return Err(invalid("channel has no subcarriers"));
    }
    let mut total = 0.0;
    for g in &ch.tensors {
        let y = forward(g, schedule)?;
        total += y.frobenius_norm_sqr().to_f64_lossy() / y.len() as f64;
    }
    Ok(total / ch.tensors.len() as f64)
}

/// Noise variance giving the requested SNR on the noiseless received tensors.
pub fn snr_to_noise_power<T: Real>(ch: &ChannelRealization<T>, schedule: &PhaseSchedule<T>, snr_db: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let p = signal_power(ch, schedule)?;
    if !(p > 0.0) {
        return Err(invalid("received signal power is zero; SNR is undefined"));
    }
    Ok(p / 10f64.powf(snr_db / 10.0))
}

/// Observation at a target SNR.
pub fn observe_at_snr<T: Real>(
    ch: &ChannelRealization<T>,
    schedule: &PhaseSchedule<T>,
    snr_db: f64,
    seed: u64,
) -> Result<ObservationSet<T>> {
    let sigma2 = snr_to_noise_power(ch, schedule, snr_db)?;
    let mut obs = observe(ch, schedule, sigma2, seed)?;
    obs.snr_db = snr_db;
    Ok(obs)
}
