//! Truncated velocity-space quadrature grid.
//!
//! Nodes are a product of a radial Gauss–Legendre rule on `[0, cutoff]` and a
//! product sphere rule (Gauss–Legendre in the polar cosine, uniform in
//! azimuth). The same structure drives interpolation: values are stored
//! nodewise and interpolated radially-linearly (optionally cubically) and
//! bilinearly in the two sphere angles, in an exponentially weighted
//! representation that is exact on Maxwellian-shaped data.

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Radial interpolation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterpOrder {
    #[default]
    Linear,
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityGridConfig {
    /// Speed cutoff; Gaussian mass beyond 6 is below 1e-15.
    pub cutoff: f64,
    /// Radial Gauss–Legendre order.
    pub radial_order: usize,
    /// Polar Gauss–Legendre order of the sphere rule.
    pub n_mu: usize,
    /// Azimuthal points of the sphere rule.
    pub n_phi: usize,
    #[serde(default)]
    pub interp_order: InterpOrder,
}

impl Default for VelocityGridConfig {
    fn default() -> Self {
        Self {
            cutoff: 6.0,
            radial_order: 16,
            n_mu: 4,
            n_phi: 8,
            interp_order: InterpOrder::Linear,
        }
    }
}

/// Flattened node list with combined quadrature weights.
///
/// Node `i = ir * n_mu * n_phi + im * n_phi + ip` sits at speed
/// `radial_nodes[ir]` in direction `(mu[im], phi[ip])`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub config: VelocityGridConfig,
    pub nodes: Vec<Vec3>,
    /// Combined weights `w_r * r^2 * w_sphere`; sums approximate volume
    /// integrals over the truncated ball.
    pub weights: Vec<f64>,
    pub speeds: Vec<f64>,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub mus: Vec<f64>,
    pub phis: Vec<f64>,
    /// Half-exponential weight `exp(-|zeta_i|^2 / 2)` per node.
    pub half_maxwellian: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(config: VelocityGridConfig) -> Result<Self> {
        if config.cutoff <= 0.0 || config.radial_order < 2 || config.n_mu < 2 || config.n_phi < 4 {
            return Err(Error::Config(format!(
                "velocity grid orders too small (need radial_order >= 2, n_mu >= 2, n_phi >= 4): {config:?}"
            )));
        }
        let gl = GaussLegendre::new(config.radial_order);
        let half = 0.5 * config.cutoff;
        let radial_nodes: Vec<f64> = gl.nodes.iter().map(|x| half * (x + 1.0)).collect();
        let radial_weights: Vec<f64> = gl.weights.iter().map(|w| half * w).collect();

        let sphere = crate::quad::sphere_rule(config.n_mu, config.n_phi);
        let gl_mu = GaussLegendre::new(config.n_mu);
        let mus = gl_mu.nodes.clone();
        let dphi = 2.0 * std::f64::consts::PI / config.n_phi as f64;
        let phis: Vec<f64> = (0..config.n_phi).map(|j| dphi * (j as f64 + 0.5)).collect();

        let n = radial_nodes.len() * sphere.len();
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut speeds = Vec::with_capacity(n);
        for (r, wr) in radial_nodes.iter().zip(&radial_weights) {
            for (u, wu) in &sphere {
                nodes.push([r * u[0], r * u[1], r * u[2]]);
                weights.push(wr * r * r * wu);
                speeds.push(*r);
            }
        }
        let half_maxwellian = speeds.iter().map(|s| (-0.5 * s * s).exp()).collect();
        let grid = Self {
            config,
            nodes,
            weights,
            speeds,
            radial_nodes,
            radial_weights,
            mus,
            phis,
            half_maxwellian,
        };
        grid.self_test()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_angular(&self) -> usize {
        self.config.n_mu * self.config.n_phi
    }

    /// Grid self-test: the Gaussian must integrate to its truncated-ball
    /// value within 1e-8 relative. The reference is an independent dense
    /// radial rule.
    fn self_test(&self) -> Result<()> {
        let got: f64 = self
            .weights
            .iter()
            .zip(&self.speeds)
            .map(|(w, s)| w * (-s * s).exp())
            .sum();
        let dense = GaussLegendre::new(200);
        let want = 4.0
            * std::f64::consts::PI
            * dense.integrate(0.0, self.config.cutoff, |r| r * r * (-r * r).exp());
        let rel = ((got - want) / want).abs();
        if rel > 1e-8 {
            return Err(Error::Grid(format!(
                "velocity grid self-test failed: Gaussian mass off by {rel:.3e} relative \
                 (radial order {} is too low for cutoff {})",
                self.config.radial_order, self.config.cutoff
            )));
        }
        if self.speeds.iter().any(|s| *s <= 0.0) {
            return Err(Error::Grid("velocity grid has a node at the origin".into()));
        }
        Ok(())
    }

    /// Quadrature of a nodewise sampled function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Checks that a value vector belongs to this grid.
    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Grid(format!(
                "field has {} velocity values, grid has {} nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Fills `(ir, t)` bracketing data for radial linear interpolation with
    /// clamping below the first node.
    fn radial_bracket(&self, r: f64) -> (usize, f64) {
        let rn = &self.radial_nodes;
        if r <= rn[0] {
            return (0, 0.0);
        }
        let last = rn.len() - 1;
        if r >= rn[last] {
            return (last - 1, 1.0);
        }
        let mut i = rn.partition_point(|x| *x < r);
        i = i.clamp(1, last);
        let (a, b) = (rn[i - 1], rn[i]);
        (i - 1, (r - a) / (b - a))
    }

    fn mu_bracket(&self, mu: f64) -> (usize, f64) {
        let ms = &self.mus;
        if mu <= ms[0] {
            return (0, 0.0);
        }
        let last = ms.len() - 1;
        if mu >= ms[last] {
            return (last - 1, 1.0);
        }
        let mut i = ms.partition_point(|x| *x < mu);
        i = i.clamp(1, last);
        (i - 1, (mu - ms[i - 1]) / (ms[i] - ms[i - 1]))
    }

    fn phi_bracket(&self, phi: f64) -> (usize, usize, f64) {
        let n = self.phis.len();
        let dphi = 2.0 * std::f64::consts::PI / n as f64;
        let mut p = (phi - 0.5 * dphi) / dphi;
        p = p.rem_euclid(n as f64);
        let j0 = p.floor() as usize % n;
        let j1 = (j0 + 1) % n;
        (j0, j1, p - p.floor())
    }

    /// Interpolates nodal values at an arbitrary velocity, working on the
    /// exponentially weighted representation `v_i * exp(+|zeta_i|^2/2)` and
    /// undoing the weight at the query point. This keeps Maxwellian-shaped
    /// data exact under interpolation.
    ///
    /// Queries beyond the cutoff are truncated (`None`): the grid carries no
    /// information there. Consumers that need a continuation should use
    /// [`Self::interpolate_weighted_extrapolating`]. Queries below the first
    /// radial node clamp radially.
    pub fn interpolate_weighted(&self, values: &[f64], zeta: Vec3) -> Option<f64> {
        let r = crate::vec3::norm(zeta);
        if r > self.config.cutoff {
            return None;
        }
        let na = self.n_angular();
        let angular = |ir: usize, mu_t: (usize, f64), phi_t: (usize, usize, f64)| -> f64 {
            let (im, tm) = mu_t;
            let (j0, j1, tp) = phi_t;
            let base = ir * na;
            let np = self.phis.len();
            let g = |im_: usize, ip_: usize| -> f64 {
                let idx = base + im_ * np + ip_;
                values[idx] * (0.5 * self.speeds[idx] * self.speeds[idx]).exp()
            };
            let lo = g(im, j0) * (1.0 - tp) + g(im, j1) * tp;
            let hi = g(im + 1, j0) * (1.0 - tp) + g(im + 1, j1) * tp;
            lo * (1.0 - tm) + hi * tm
        };
        let (mu, phi) = if r < 1e-14 {
            (0.0, 0.0)
        } else {
            (zeta[2] / r, zeta[1].atan2(zeta[0]))
        };
        let mb = self.mu_bracket(mu);
        let pb = self.phi_bracket(phi);
        let w = match self.config.interp_order {
            InterpOrder::Linear => {
                let (ir, t) = self.radial_bracket(r);
                angular(ir, mb, pb) * (1.0 - t) + angular(ir + 1, mb, pb) * t
            }
            InterpOrder::Cubic => self.radial_cubic(r, |ir| angular(ir, mb, pb)),
        };
        Some(w * (-0.5 * r * r).exp())
    }

    /// Like [`Self::interpolate_weighted`], but continues beyond the cutoff
    /// by freezing the weighted representation at the outermost shell, i.e. a
    /// Gaussian-decay tail. The flag reports whether the continuation was
    /// used. Exact on Maxwellian-shaped data on the whole space.
    pub fn interpolate_weighted_extrapolating(&self, values: &[f64], zeta: Vec3) -> (f64, bool) {
        let r = crate::vec3::norm(zeta);
        if r <= self.config.cutoff {
            return (
                self.interpolate_weighted(values, zeta)
                    .expect("inside the cutoff"),
                false,
            );
        }
        // Pull strictly inside the rim so rounding cannot push the query
        // back over the cutoff.
        let rim = self.config.cutoff * (1.0 - 1e-12);
        let clamped = crate::vec3::scale(rim / r, zeta);
        let at_rim = self
            .interpolate_weighted(values, clamped)
            .expect("on the cutoff sphere");
        (at_rim * (-0.5 * (r * r - rim * rim)).exp(), true)
    }

    /// Four-point Lagrange interpolation in the radial coordinate.
    fn radial_cubic<F: Fn(usize) -> f64>(&self, r: f64, shell_value: F) -> f64 {
        let rn = &self.radial_nodes;
        let n = rn.len();
        if n < 4 {
            let (ir, t) = self.radial_bracket(r);
            return shell_value(ir) * (1.0 - t) + shell_value(ir + 1) * t;
        }
        let (ir, _) = self.radial_bracket(r);
        let i0 = ir.saturating_sub(1).min(n - 4);
        let xs = [rn[i0], rn[i0 + 1], rn[i0 + 2], rn[i0 + 3]];
        let r_clamped = r.max(rn[0]);
        let mut acc = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (r_clamped - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += l * shell_value(i0 + a);
        }
        acc
    }
}
