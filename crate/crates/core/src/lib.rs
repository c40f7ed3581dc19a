//! Near-field XL-IRS cascaded channel simulation and off-grid sparse Tucker
//! channel estimation.
//!
//! The crate is layered bottom-up:
//!
//! - [`tensor`], [`matrix`], [`linalg`], [`hosvd`]: dense complex tensor and
//!   matrix algebra, generic over `f32`/`f64` through [`scalar::Real`].
//! - [`channel`]: UPA/near-field array responses and per-subcarrier cascaded
//!   channel tensors.
//! - [`observation`]: IRS phase schedules and noisy pilot observations.
//! - [`estimator`]: the majorization-minimization estimator with its
//!   accelerated proximal core solver and ridge factor updates.
//! - [`analysis`]: NMSE, Cramér–Rao bound, least-squares reference and
//!   operation counts.
//! - [`harness`]: configurable, seeded sweeps with CSV output.
//!
//! ```
//! use xlirs::analysis::{nmse, to_db};
//! use xlirs::channel::sample_scenario;
//! use xlirs::estimator::estimate_all;
//! use xlirs::harness::ExperimentConfig;
//! use xlirs::observation::{build_phase_schedule, observe_at_snr, ScheduleKind};
//!
//! # fn main() -> xlirs::Result<()> {
//! let cfg = ExperimentConfig::desk();
//! let ch = sample_scenario::<f64>(&cfg.system, &cfg.scenario, 1)?;
//! let v = build_phase_schedule(cfg.system.n_r(), cfg.system.pilots, ScheduleKind::OrthogonalDft, 0)?;
//! let obs = observe_at_snr(&ch, &v, 20.0, 2)?;
//! let est = estimate_all(&obs, &cfg.hyper)?;
//! assert!(to_db(nmse(&est.channels, &ch.tensors)?) < -20.0);
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod hosvd;
pub mod linalg;
pub mod matrix;
pub mod observation;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use scalar::{Real, C};
pub use tensor::Tensor3;

pub type Tensor3F64 = Tensor3<f64>;
pub type Tensor3F32 = Tensor3<f32>;
pub type ComplexMatrixF64 = ComplexMatrix<f64>;
pub type ComplexMatrixF32 = ComplexMatrix<f32>;
pub type ChannelF64 = channel::ChannelRealization<f64>;
pub type ObservationSetF64 = observation::ObservationSet<f64>;
pub type EstimatorStateF64 = estimator::EstimatorState<f64>;
