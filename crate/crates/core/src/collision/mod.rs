//! Collision machinery: cross section, pre/post-collision velocity maps, the
//! collision frequency, the linearized kernel with its tabulated operator,
//! and the quadratic bilinear form.

mod e_delta;
mod frequency;
mod gamma;
mod grid;
mod kernel;
mod maps;

pub use e_delta::{e_delta, e_delta_factored};
pub use frequency::{collision_frequency, collision_frequency_at_rest};
pub use gamma::{gamma_bilinear, gamma_gain, gamma_loss, GammaOutput, SigmaRule};
pub use grid::{InterpOrder, VelocityGrid, VelocityGridConfig};
pub use kernel::{
    apply_k, apply_k_at, assemble_kernel_table, kernel_k, kernel_k_gain, kernel_k_loss,
    CollisionKernelTable, KernelAssembly,
};
pub use maps::{post_collision, sigma_post_collision, sphere_min_integral, SphereMinIntegral};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Collision cross section `B0 * |zeta - zeta_*|^gamma * sin(theta) cos(theta)`.
///
/// `gamma = 1` is the hard-sphere model, `gamma = 0` Maxwell molecules, and
/// intermediate exponents are hard potentials with angular cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub b0: f64,
    pub gamma: f64,
}

impl CrossSection {
    pub fn new(b0: f64, gamma: f64) -> Result<Self> {
        let cs = Self { b0, gamma };
        cs.validate()?;
        Ok(cs)
    }

    pub fn hard_sphere(b0: f64) -> Self {
        Self { b0, gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(Error::Config(format!("B0 must be positive, got {}", self.b0)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// `B0 * v^gamma`, with the `0^0 = 1` convention at `gamma = 0` so that
    /// Maxwell molecules keep a constant cross section at zero relative speed.
    #[inline]
    pub fn relative_speed_factor(&self, v: f64) -> f64 {
        if self.gamma == 0.0 {
            self.b0
        } else {
            self.b0 * v.powf(self.gamma)
        }
    }
}
