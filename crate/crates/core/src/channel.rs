//! Near-field XL-IRS cascaded channel model.
//!
//! The BS is a far-field `N_z x N_y` UPA, the IRS a near-field
//! `Nr_z x Nr_y` UPA whose response depends on angle and distance. IRS
//! elements are vectorized with `n_y` fastest, then `n_z`; BS antennas with
//! `n_z` fastest, then `n_y` (so `a_b = a_Ny ⊗ a_Nz`).

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::{complex_gaussian, rng_from_seed};
use crate::scalar::{cis, Real, C};
use crate::tensor::Tensor3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default IRS-to-BS distance (m).
pub const DEFAULT_BS_IRS_DISTANCE: f64 = 7.2153;

/// Array geometry, frequency plan and pilot length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS UPA rows.
    pub n_z: usize,
    /// BS UPA columns.
    pub n_y: usize,
    /// IRS rows.
    pub nr_z: usize,
    /// IRS columns.
    pub nr_y: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    /// Pilot OFDM symbols per subcarrier.
    pub pilots: usize,
    /// Element spacing (m), both arrays.
    pub spacing_m: f64,
    pub light_speed: f64,
}

impl SystemConfig {
    /// Simulation parameters of the reference XL-IRS setup: 5x5 BS, 64x4 IRS,
    /// 28 GHz carrier, 2 GHz bandwidth, 6 subcarriers, 280 pilots.
    pub fn paper() -> Self {
        Self::with_half_wavelength(5, 5, 64, 4, 28e9, 2e9, 6, 280)
    }

    /// Small configuration for fast tests and CI.
    pub fn desk() -> Self {
        Self::with_half_wavelength(4, 4, 8, 4, 28e9, 2e9, 2, 64)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_half_wavelength(
        n_z: usize,
        n_y: usize,
        nr_z: usize,
        nr_y: usize,
        carrier_hz: f64,
        bandwidth_hz: f64,
        subcarriers: usize,
        pilots: usize,
    ) -> Self {
        Self {
            n_z,
            n_y,
            nr_z,
            nr_y,
            carrier_hz,
            bandwidth_hz,
            subcarriers,
            pilots,
            spacing_m: SPEED_OF_LIGHT / carrier_hz / 2.0,
            light_speed: SPEED_OF_LIGHT,
        }
    }

    pub fn n_b(&self) -> usize {
        self.n_z * self.n_y
    }

    pub fn n_r(&self) -> usize {
        self.nr_z * self.nr_y
    }

    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.carrier_hz
    }

    /// Frequency of subcarrier `m ∈ 1..=M`: `f_c + (2m − M)/(2M)·B`.
    pub fn subcarrier_freq(&self, m: usize) -> f64 {
        let mm = self.subcarriers as f64;
        self.carrier_hz + (2.0 * m as f64 - mm) / (2.0 * mm) * self.bandwidth_hz
    }

    /// Effective IRS aperture: diagonal of the element grid.
    pub fn irs_aperture(&self) -> f64 {
        let dz = (self.nr_z as f64 - 1.0) * self.spacing_m;
        let dy = (self.nr_y as f64 - 1.0) * self.spacing_m;
        (dz * dz + dy * dy).sqrt()
    }

    pub fn irs_rayleigh_distance(&self) -> f64 {
        2.0 * self.irs_aperture().powi(2) / self.wavelength()
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_z", self.n_z),
            ("n_y", self.n_y),
            ("nr_z", self.nr_z),
            ("nr_y", self.nr_y),
            ("subcarriers", self.subcarriers),
            ("pilots", self.pilots),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(invalid(format!("{name} must be at least 1")));
        }
        if !(self.bandwidth_hz > 0.0 && self.carrier_hz > self.bandwidth_hz / 2.0) {
            return Err(invalid("carrier must exceed half the bandwidth, and the bandwidth must be positive"));
        }
        if !(self.spacing_m > 0.0) || !(self.light_speed > 0.0) {
            return Err(invalid("spacing and light speed must be positive"));
        }
        Ok(())
    }

    pub(crate) fn check_subcarrier(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.subcarriers {
            return Err(invalid(format!("subcarrier {m} outside 1..={}", self.subcarriers)));
        }
        Ok(())
    }
}

/// LOS IRS-to-BS link parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsIrsLink {
    pub gain: C<f64>,
    /// BS elevation AoA ψ_e.
    pub bs_elevation: f64,
    /// BS azimuth AoA φ_a.
    pub bs_azimuth: f64,
    /// IRS elevation AoD θ_e.
    pub irs_elevation: f64,
    /// IRS azimuth AoD.
    pub irs_azimuth: f64,
    /// Reference IRS element to BS distance u (m).
    pub distance: f64,
}

impl BsIrsLink {
    /// Propagation delay `u / c`.
    pub fn delay(&self, light_speed: f64) -> f64 {
        self.distance / light_speed
    }
}

/// One UE-to-IRS propagation path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UePath {
    pub gain: C<f64>,
    /// Path delay ζ (s).
    pub delay: f64,
    /// IRS elevation AoA.
    pub elevation: f64,
    /// IRS azimuth AoA.
    pub azimuth: f64,
    /// Reference IRS element to UE distance r (m).
    pub distance: f64,
}

/// Ground-truth channel: path parameters and one cascaded tensor per subcarrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ChannelRealization<T> {
    pub link: BsIrsLink,
    pub paths: Vec<UePath>,
    /// `N_z x N_r x N_y` cascaded channel per subcarrier.
    pub tensors: Vec<Tensor3<T>>,
}

impl<T: Real> ChannelRealization<T> {
    /// Builds the per-subcarrier tensors for the given parameters.
    pub fn build(cfg: &SystemConfig, link: BsIrsLink, paths: Vec<UePath>) -> Result<Self> {
        cfg.validate()?;
        if paths.is_empty() {
            return Err(invalid("a channel needs at least one UE path"));
        }
        if !(link.distance > 0.0) || paths.iter().any(|p| !(p.distance > 0.0) || p.delay < 0.0) {
            return Err(invalid("distances must be positive and delays non-negative"));
        }
        let mut ch = Self { link, paths, tensors: Vec::with_capacity(cfg.subcarriers) };
        for m in 1..=cfg.subcarriers {
            let g = cascaded_channel_tensor(cfg, &ch, m)?;
            ch.tensors.push(g);
        }
        Ok(ch)
    }

    /// `β_l = α_l·γ`.
    pub fn cascaded_gains(&self) -> Vec<C<f64>> {
        self.paths.iter().map(|p| p.gain * self.link.gain).collect()
    }

    /// `τ_l = ξ + ζ_l`.
    pub fn cascaded_delays(&self, light_speed: f64) -> Vec<f64> {
        let xi = self.link.delay(light_speed);
        self.paths.iter().map(|p| xi + p.delay).collect()
    }

    /// Gain-delay term `κ_{l,m} = β_l·exp(−j2π f_m τ_l)`.
    pub fn gain_delay(&self, cfg: &SystemConfig, l: usize, m: usize) -> C<f64> {
        let beta = self.paths[l].gain * self.link.gain;
        let tau = self.link.delay(cfg.light_speed) + self.paths[l].delay;
        beta * cis(-2.0 * PI * wrapped_cycles(cfg.subcarrier_freq(m) * tau))
    }
}

/// Fractional part of a cycle count, so large `f·τ` products keep their phase.
fn wrapped_cycles(cycles: f64) -> f64 {
    cycles - cycles.round()
}

/// Path-length difference between IRS element `(n_y, n_z)` (1-based) and the
/// reference element for a source at angles `(θ_e, φ_a)` and distance `u`.
pub fn nf_delta_distance(
    cfg: &SystemConfig,
    n_y: usize,
    n_z: usize,
    elevation: f64,
    azimuth: f64,
    distance: f64,
) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(invalid(format!("distance must be positive, got {distance}")));
    }
    if n_y == 0 || n_y > cfg.nr_y || n_z == 0 || n_z > cfg.nr_z {
        return Err(invalid(format!("IRS element ({n_y}, {n_z}) outside the {}x{} grid", cfg.nr_y, cfg.nr_z)));
    }
    let d = cfg.spacing_m;
    let dy = (n_y as f64 - 1.0) * d;
    let dz = (n_z as f64 - 1.0) * d;
    let q = dy * dy + dz * dz
        - 2.0 * dy * distance * elevation.sin() * azimuth.sin()
        - 2.0 * dz * distance * elevation.cos();
    // sqrt(u² + q) − u without cancellation
    Ok(q / ((distance * distance + q).sqrt() + distance))
}

/// Near-field IRS array response at subcarrier `m`, length `N_r`.
pub fn nf_response<T: Real>(
    cfg: &SystemConfig,
    elevation: f64,
    azimuth: f64,
    distance: f64,
    m: usize,
) -> Result<Vec<C<T>>> {
    cfg.check_subcarrier(m)?;
    let k = cfg.subcarrier_freq(m) / cfg.light_speed;
    let mut out = Vec::with_capacity(cfg.n_r());
    for n_z in 1..=cfg.nr_z {
        for n_y in 1..=cfg.nr_y {
            let du = nf_delta_distance(cfg, n_y, n_z, elevation, azimuth, distance)?;
            out.push(cis(T::lit(-2.0 * PI * wrapped_cycles(k * du))));
        }
    }
    Ok(out)
}

fn ula_response<T: Real>(n: usize, cycles_per_element: f64) -> Vec<C<T>> {
    (0..n).map(|i| cis(T::lit(-2.0 * PI * wrapped_cycles(i as f64 * cycles_per_element)))).collect()
}

/// BS row response `a_Ny`, length `N_y`.
pub fn ff_row_response<T: Real>(cfg: &SystemConfig, elevation: f64, azimuth: f64, m: usize) -> Result<Vec<C<T>>> {
    cfg.check_subcarrier(m)?;
    let k = cfg.subcarrier_freq(m) / cfg.light_speed * cfg.spacing_m;
    Ok(ula_response(cfg.n_y, k * elevation.sin() * azimuth.sin()))
}

/// BS column response `a_Nz`, length `N_z`.
pub fn ff_col_response<T: Real>(cfg: &SystemConfig, elevation: f64, m: usize) -> Result<Vec<C<T>>> {
    cfg.check_subcarrier(m)?;
    let k = cfg.subcarrier_freq(m) / cfg.light_speed * cfg.spacing_m;
    Ok(ula_response(cfg.n_z, k * elevation.cos()))
}

/// Full BS UPA response `a_Ny ⊗ a_Nz`, length `N_b`.
pub fn bs_response<T: Real>(cfg: &SystemConfig, elevation: f64, azimuth: f64, m: usize) -> Result<Vec<C<T>>> {
    let row = ff_row_response::<T>(cfg, elevation, azimuth, m)?;
    let col = ff_col_response::<T>(cfg, elevation, m)?;
    Ok(row.iter().flat_map(|&r| col.iter().map(move |&c| r * c)).collect())
}

/// IRS incident-reflective response `conj(a_r(p)) ⊙ a_r(q)`.
pub fn incident_reflect_response<T: Real>(
    cfg: &SystemConfig,
    path: &UePath,
    link: &BsIrsLink,
    m: usize,
) -> Result<Vec<C<T>>> {
    let incident = nf_response::<T>(cfg, path.elevation, path.azimuth, path.distance, m)?;
    let reflect = nf_response::<T>(cfg, link.irs_elevation, link.irs_azimuth, link.distance, m)?;
    Ok(incident.iter().zip(&reflect).map(|(a, b)| a.conj() * b).collect())
}

/// Cascaded channel tensor `N_z x N_r x N_y` at subcarrier `m`.
///
/// The IRS fiber of each path is the conjugate of the incident-reflective
/// response, so that `G(n_z, r, n_y)` equals entry `(n_z + n_y·N_z, r)` of the
/// `N_b x N_r` matrix `Σ κ a_b (conj(a_r(p)) ⊙ a_r(q))ᴴ`, which is the matrix
/// the pilots are multiplied with.
pub fn cascaded_channel_tensor<T: Real>(cfg: &SystemConfig, ch: &ChannelRealization<T>, m: usize) -> Result<Tensor3<T>> {
    if ch.paths.is_empty() {
        return Err(invalid("a channel needs at least one UE path"));
    }
    let link = &ch.link;
    let a_z = ff_col_response::<T>(cfg, link.bs_elevation, m)?;
    let a_y = ff_row_response::<T>(cfg, link.bs_elevation, link.bs_azimuth, m)?;
    let mut irs = vec![C::new(T::zero(), T::zero()); cfg.n_r()];
    for (l, path) in ch.paths.iter().enumerate() {
        let kappa = ch.gain_delay(cfg, l, m);
        let kappa = C::new(T::lit(kappa.re), T::lit(kappa.im));
        let b = incident_reflect_response::<T>(cfg, path, link, m)?;
        for (acc, v) in irs.iter_mut().zip(&b) {
            *acc = *acc + kappa * v.conj();
        }
    }
    Ok(Tensor3::outer(&a_z, &irs, &a_y))
}

/// Cascaded channel as the `N_b x N_r` matrix (BS index `n_z + n_y·N_z`).
pub fn cascaded_channel_matrix<T: Real>(g: &Tensor3<T>) -> ComplexMatrix<T> {
    let [nz, nr, ny] = g.dims();
    ComplexMatrix::from_fn(nz * ny, nr, |b, r| g.get(b % nz, r, b / nz))
}

/// Rayleigh distance `2D²/λ`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if aperture < 0.0 || !(wavelength > 0.0) {
        return Err(invalid("aperture must be non-negative and wavelength positive"));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Random scenario description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Number of UE-IRS paths L.
    pub paths: usize,
    /// UE-IRS distance range (m), sampled uniformly.
    pub ue_distance: (f64, f64),
    /// IRS-BS distance (m).
    pub bs_irs_distance: f64,
}

impl ScenarioSpec {
    pub fn paper() -> Self {
        Self { paths: 2, ue_distance: (5.0, 10.0), bs_irs_distance: DEFAULT_BS_IRS_DISTANCE }
    }
}

/// Draws a channel: complex Gaussian gains, angles uniform on `(0, 2π)`,
/// UE distances uniform on the configured range, delays `distance / c`.
pub fn sample_scenario<T: Real>(cfg: &SystemConfig, spec: &ScenarioSpec, seed: u64) -> Result<ChannelRealization<T>> {
    cfg.validate()?;
    if spec.paths == 0 {
        return Err(invalid("at least one path is required"));
    }
    let (lo, hi) = spec.ue_distance;
    let rayleigh = cfg.irs_rayleigh_distance();
    if !(lo > 0.0 && lo <= hi && hi < rayleigh) {
        return Err(invalid(format!(
            "UE distance range ({lo}, {hi}) must lie within (0, {rayleigh:.4}) m, the IRS Rayleigh distance"
        )));
    }
    if !(spec.bs_irs_distance > 0.0) {
        return Err(invalid("IRS-BS distance must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let angle = |rng: &mut crate::rng::SimRng| rng.random_range(0.0..2.0 * PI);
    let link = BsIrsLink {
        gain: complex_gaussian(&mut rng, 1.0),
        bs_elevation: angle(&mut rng),
        bs_azimuth: angle(&mut rng),
        irs_elevation: angle(&mut rng),
        irs_azimuth: angle(&mut rng),
        distance: spec.bs_irs_distance,
    };
    let paths = (0..spec.paths)
        .map(|_| {
            let gain = complex_gaussian(&mut rng, 1.0);
            let elevation = angle(&mut rng);
            let azimuth = angle(&mut rng);
            let distance = if hi > lo { rng.random_range(lo..hi) } else { lo };
            UePath { gain, delay: distance / cfg.light_speed, elevation, azimuth, distance }
        })
        .collect();
    ChannelRealization::build(cfg, link, paths)
}
