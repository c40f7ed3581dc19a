//! Off-grid sparse Tucker estimator.
//!
//! Each subcarrier's observation `Y ≈ Z ×₁ A⁽¹⁾ ×₂ A⁽²⁾ ×₃ A⁽³⁾` is fitted by
//! minimizing
//!
//! ```text
//! L(Z, A) = Σₙ Σᵢ log(‖Z slice i along mode n‖² + δ)
//!         + λ1 ‖Y − Z ×₁ A⁽¹⁾ ×₂ A⁽²⁾ ×₃ A⁽³⁾‖² + λ2 Σₙ ‖A⁽ⁿ⁾‖²
//! ```
//!
//! by majorization-minimization: the log-sum term is replaced by its tangent
//! upper bound, which is a weighted quadratic `⟨Z, D∗Z⟩`. The core is then
//! updated by a monotone, over-relaxed accelerated proximal gradient loop and
//! each factor row by a ridge-regularized least-squares solve. The channel
//! is recovered from the fitted received tensor through the pseudoinverse of
//! `Vᵀ` on mode 2.
//!
//! Complex gradients use the conjugate convention `∂f/∂Re + j·∂f/∂Im`, so a
//! step along `−grad` is a descent step.

mod objective;
mod solver;

pub use objective::{grad_f2, inner_objective, objective_lo, prox_step, surrogate_sn, weight_tensor};
pub use solver::{
    build_xi, estimate, estimate_all, initialize, lipschitz_constant, momentum_update, monotone_select, recover_channel,
    update_core, update_factor_row, update_factors, EstimationResult, EstimatorState, SubcarrierEstimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inner step size: fixed, or derived from the Lipschitz constant of the
/// data-fit gradient at each outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize {
    Fixed(f64),
    Auto(AutoStep),
}

/// Keyword for [`StepSize::AUTO`], spelled `"auto"` in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoStep {
    Auto,
}

impl StepSize {
    pub const AUTO: StepSize = StepSize::Auto(AutoStep::Auto);
}

/// Scaling applied to the observation before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Unit mean power per entry, `‖Y‖² = entry count`.
    UnitRms,
    /// Unit Frobenius norm.
    UnitFrobenius,
}

/// Safety factor applied to `1 / L` when the step size is automatic.
pub const AUTO_STEP_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    /// Data-fit weight λ1.
    pub lambda1: f64,
    /// Factor ridge weight λ2.
    pub lambda2: f64,
    /// Log-sum smoothing δ.
    pub delta: f64,
    /// Inner step size λ3.
    pub lambda3: StepSize,
    /// Over-relaxation balance ρ.
    pub rho: f64,
    pub t_max: usize,
    pub k_max: usize,
    /// Outer loop stops once the relative objective change drops below this.
    pub rel_tol: f64,
    /// Optional `(G_z, G_r, G_y)` truncation of the initial HOSVD.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_ranks: Option<[usize; 3]>,
    pub normalization: Normalization,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lambda1: 0.3,
            lambda2: 1.0,
            delta: 1e-10,
            lambda3: StepSize::AUTO,
            rho: 0.5,
            t_max: 500,
            k_max: 10,
            rel_tol: 1e-4,
            mode_ranks: None,
            normalization: Normalization::UnitRms,
        }
    }
}

impl Hyperparams {
    /// Mode ranks used for the complexity study of the reference setup.
    pub const REFERENCE_MODE_RANKS: [usize; 3] = [5, 280, 5];

    pub fn validate(&self) -> Result<()> {
        let positive = [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("delta", self.delta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if let StepSize::Fixed(s) = self.lambda3 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(format!("lambda3 must be positive or \"auto\", got {s}")));
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.t_max == 0 || self.k_max == 0 {
            return Err(invalid("t_max and k_max must be at least 1"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(invalid(format!("rel_tol must be non-negative, got {}", self.rel_tol)));
        }
        if let Some(r) = self.mode_ranks {
            if r.contains(&0) {
                return Err(invalid(format!("mode ranks must be positive, got {r:?}")));
            }
        }
        Ok(())
    }
}
