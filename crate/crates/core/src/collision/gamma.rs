//! Quadratic collision form `Gamma(h1, h2)` on a velocity grid, split into
//! its gain and loss terms.
//!
//! The gain term averages the product of post-collision values over the unit
//! sphere of deflection directions,
//!
//! ```text
//! gain(z) = ∫ e^{-|z_*|^2/2} (B0 |z - z_*|^gamma / 4)
//!             ∫_{S^2} h1(z'(s)) h2(z_*'(s)) dΣ(s) dz_*,
//! ```
//!
//! the loss term is the plain weighted convolution
//!
//! ```text
//! loss(z) = pi B0 h1(z) ∫ e^{-|z_*|^2/2} h2(z_*) |z - z_*|^gamma dz_*,
//! ```
//!
//! and the full form is `pi^{-3/4} (gain - loss)`. Off-grid post-collision
//! velocities are interpolated by the grid rule; queries beyond the cutoff
//! use the grid's Gaussian-tail continuation and are counted as truncation
//! events.

use super::{sigma_post_collision, CrossSection, VelocityGrid};
use crate::error::Result;
use crate::vec3::{self, Vec3};
use rayon::prelude::*;

/// Sphere rule for the deflection average.
#[derive(Debug, Clone)]
pub struct SigmaRule {
    pub nodes: Vec<(Vec3, f64)>,
}

impl SigmaRule {
    pub fn new(n_mu: usize, n_phi: usize) -> Self {
        Self {
            nodes: crate::quad::sphere_rule(n_mu, n_phi),
        }
    }
}

impl Default for SigmaRule {
    fn default() -> Self {
        Self::new(6, 12)
    }
}

/// Output of the bilinear form: combined values plus the raw gain and loss
/// terms and the truncation counter.
#[derive(Debug, Clone)]
pub struct GammaOutput {
    /// `pi^{-3/4} (gain - loss)` per velocity node.
    pub values: Vec<f64>,
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
    /// Number of post-collision evaluations that fell beyond the cutoff.
    pub clamped: usize,
}

/// Gain term per node, with the count of beyond-cutoff truncations.
pub fn gamma_gain(
    cs: &CrossSection,
    grid: &VelocityGrid,
    h1: &[f64],
    h2: &[f64],
    rule: &SigmaRule,
) -> Result<(Vec<f64>, usize)> {
    grid.check_len(h1)?;
    grid.check_len(h2)?;
    let n = grid.len();
    let results: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = grid.nodes[i];
            let mut acc = 0.0;
            let mut clamped = 0usize;
            for l in 0..n {
                let zl = grid.nodes[l];
                let weight = grid.weights[l] * grid.half_maxwellian[l];
                if l == i {
                    // Zero relative speed: both outgoing velocities coincide
                    // with the node. Only Maxwell molecules contribute.
                    if cs.gamma == 0.0 {
                        acc += weight * std::f64::consts::PI * cs.b0 * h1[i] * h2[i];
                    }
                    continue;
                }
                let v = vec3::dist(zi, zl);
                let factor = weight * cs.relative_speed_factor(v) * 0.25;
                let mut sphere = 0.0;
                for (sigma, ws) in &rule.nodes {
                    let (zp, zsp) = sigma_post_collision(zi, zl, *sigma)
                        .expect("distinct velocities");
                    let (a, trunc_a) = grid.interpolate_weighted_extrapolating(h1, zp);
                    let (b, trunc_b) = grid.interpolate_weighted_extrapolating(h2, zsp);
                    clamped += trunc_a as usize + trunc_b as usize;
                    sphere += ws * a * b;
                }
                acc += factor * sphere;
            }
            (acc, clamped)
        })
        .collect();
    let clamped = results.iter().map(|r| r.1).sum();
    Ok((results.into_iter().map(|r| r.0).collect(), clamped))
}

/// Loss term per node.
pub fn gamma_loss(
    cs: &CrossSection,
    grid: &VelocityGrid,
    h1: &[f64],
    h2: &[f64],
) -> Result<Vec<f64>> {
    grid.check_len(h1)?;
    grid.check_len(h2)?;
    let n = grid.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let zi = grid.nodes[i];
            let mut conv = 0.0;
            for l in 0..n {
                let v = vec3::dist(zi, grid.nodes[l]);
                conv += grid.weights[l]
                    * grid.half_maxwellian[l]
                    * h2[l]
                    * cs.relative_speed_factor(v);
            }
            std::f64::consts::PI * h1[i] * conv
        })
        .collect())
}

/// Full bilinear form `pi^{-3/4} (gain - loss)`.
pub fn gamma_bilinear(
    cs: &CrossSection,
    grid: &VelocityGrid,
    h1: &[f64],
    h2: &[f64],
    rule: &SigmaRule,
) -> Result<GammaOutput> {
    let (gain, clamped) = gamma_gain(cs, grid, h1, h2, rule)?;
    let loss = gamma_loss(cs, grid, h1, h2)?;
    let pref = std::f64::consts::PI.powf(-0.75);
    let values = gain
        .iter()
        .zip(&loss)
        .map(|(g, l)| pref * (g - l))
        .collect();
    Ok(GammaOutput {
        values,
        gain,
        loss,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::VelocityGridConfig;

    fn grid() -> VelocityGrid {
        VelocityGrid::new(VelocityGridConfig {
            radial_order: 16,
            n_mu: 3,
            n_phi: 6,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn vanishes_on_zero_input() {
        let cs = CrossSection::hard_sphere(1.0);
        let g = grid();
        let zero = vec![0.0; g.len()];
        let out = gamma_bilinear(&cs, &g, &zero, &zero, &SigmaRule::default()).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn annihilates_half_maxwellians_to_machine_precision() {
        // h = c m with m = e^{-|z|^2/2}: gain and loss collapse to the same
        // grid sum because the weighted interpolation is exact on m and the
        // product of post-collision half-Maxwellians equals the incoming one.
        let cs = CrossSection::hard_sphere(1.0);
        let g = grid();
        let c = 2.3;
        let h: Vec<f64> = g.half_maxwellian.iter().map(|m| c * m).collect();
        let out = gamma_bilinear(&cs, &g, &h, &h, &SigmaRule::default()).unwrap();
        let alpha = 0.25;
        let sup = out
            .values
            .iter()
            .zip(&g.speeds)
            .map(|(v, s)| v.abs() * (alpha * s * s).exp())
            .fold(0.0f64, f64::max);
        assert!(sup <= 1e-10 * c * c, "weighted sup {sup}");
    }

    #[test]
    fn maxwell_molecule_loss_for_flat_inputs_is_gaussian_mass() {
        // gamma = 0, h1 = h2 = 1: loss = pi B0 (2 pi)^{3/2}, constant.
        let cs = CrossSection::new(1.0, 0.0).unwrap();
        let g = grid();
        let ones = vec![1.0; g.len()];
        let loss = gamma_loss(&cs, &g, &ones, &ones).unwrap();
        let want = std::f64::consts::PI * (2.0 * std::f64::consts::PI).powf(1.5);
        for (i, l) in loss.iter().enumerate() {
            assert!(
                ((l - want) / want).abs() < 1e-6,
                "node {i}: got {l}, want {want}"
            );
        }
    }

    #[test]
    fn truncation_is_counted_for_energetic_pairs() {
        let cs = CrossSection::hard_sphere(1.0);
        let g = grid();
        let ones = vec![1.0; g.len()];
        let (_, clamped) = gamma_gain(&cs, &g, &ones, &ones, &SigmaRule::default()).unwrap();
        assert!(clamped > 0, "expected beyond-cutoff evaluations on a truncated grid");
    }
}
