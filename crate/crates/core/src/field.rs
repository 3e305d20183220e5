//! Spatial grids and phase-space fields.
//!
//! Spatial nodes live on concentric shells of the (scaled) domain: the shell
//! radii are Gauss–Legendre nodes on `[0, 1]` in the unit-ball coordinates of
//! the body, combined with a product sphere grid. The same layout provides
//! volume quadrature weights and trilinear interpolation in the scaled
//! `(r, mu, phi)` coordinates; radial queries beyond the outermost shell
//! clamp to it, which is the discrete stand-in for the boundary trace.

use crate::collision::VelocityGrid;
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::quad::GaussLegendre;
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGridConfig {
    pub shells: usize,
    pub n_mu: usize,
    pub n_phi: usize,
}

impl Default for SpatialGridConfig {
    fn default() -> Self {
        Self {
            shells: 9,
            n_mu: 4,
            n_phi: 8,
        }
    }
}

/// Shell-structured spatial grid over a convex body.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub dom: DomainGeometry,
    pub config: SpatialGridConfig,
    /// Shell radii in scaled (unit-ball) coordinates, strictly inside (0, 1).
    pub radii: Vec<f64>,
    pub mus: Vec<f64>,
    pub phis: Vec<f64>,
    /// Physical node positions.
    pub nodes: Vec<Vec3>,
    /// Physical volume quadrature weights.
    pub weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(dom: DomainGeometry, config: SpatialGridConfig) -> Result<Self> {
        dom.validate()?;
        if config.shells < 2 || config.n_mu < 2 || config.n_phi < 2 {
            return Err(Error::Config(format!("spatial grid too small: {config:?}")));
        }
        let gl = GaussLegendre::new(config.shells);
        let radii: Vec<f64> = gl.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let radial_weights: Vec<f64> = gl.weights.iter().map(|w| 0.5 * w).collect();
        let sphere = crate::quad::sphere_rule(config.n_mu, config.n_phi);
        let gl_mu = GaussLegendre::new(config.n_mu);
        let mus = gl_mu.nodes.clone();
        let dphi = 2.0 * std::f64::consts::PI / config.n_phi as f64;
        let phis: Vec<f64> = (0..config.n_phi).map(|j| dphi * (j as f64 + 0.5)).collect();

        let c = dom.center();
        let a = dom.semi_axes();
        let jac = a[0] * a[1] * a[2];
        let mut nodes = Vec::with_capacity(radii.len() * sphere.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (r, wr) in radii.iter().zip(&radial_weights) {
            for (u, wu) in &sphere {
                nodes.push([
                    c[0] + a[0] * r * u[0],
                    c[1] + a[1] * r * u[1],
                    c[2] + a[2] * r * u[2],
                ]);
                weights.push(jac * wr * r * r * wu);
            }
        }
        Ok(Self {
            dom,
            config,
            radii,
            mus,
            phis,
            nodes,
            weights,
        })
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

    /// Smallest shell-to-shell spacing in physical units, used as the
    /// finite-difference scale for gradient estimators.
    pub fn min_radial_spacing(&self) -> f64 {
        let a = self.dom.semi_axes();
        let amin = a[0].min(a[1]).min(a[2]);
        let mut gap = f64::INFINITY;
        for w in self.radii.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        gap * amin
    }

    fn bracket(nodes: &[f64], x: f64) -> (usize, f64) {
        if x <= nodes[0] {
            return (0, 0.0);
        }
        let last = nodes.len() - 1;
        if x >= nodes[last] {
            return (last - 1, 1.0);
        }
        let i = nodes.partition_point(|v| *v < x).clamp(1, last);
        (i - 1, (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1]))
    }

    /// Trilinear interpolation in scaled `(r, mu, phi)`; `value(index)` reads
    /// the nodal data. Radial queries clamp at both ends (boundary trace
    /// outside the outermost shell, innermost shell around the center).
    pub fn interpolate_with<F: Fn(usize) -> f64>(&self, x: Vec3, value: F) -> f64 {
        let c = self.dom.center();
        let a = self.dom.semi_axes();
        let xs = [
            (x[0] - c[0]) / a[0],
            (x[1] - c[1]) / a[1],
            (x[2] - c[2]) / a[2],
        ];
        let r = vec3::norm(xs);
        let (mu, phi) = if r < 1e-14 {
            (0.0, 0.0)
        } else {
            (xs[2] / r, xs[1].atan2(xs[0]))
        };
        let (ir, tr) = Self::bracket(&self.radii, r);
        let (im, tm) = Self::bracket(&self.mus, mu);
        let np = self.phis.len();
        let dphi = 2.0 * std::f64::consts::PI / np as f64;
        let p = (phi - 0.5 * dphi) / dphi;
        let pw = p.rem_euclid(np as f64);
        let j0 = pw.floor() as usize % np;
        let j1 = (j0 + 1) % np;
        let tp = pw - pw.floor();

        let na = self.n_angular();
        let corner = |ir_: usize, im_: usize, ip_: usize| value(ir_ * na + im_ * np + ip_);
        let mut acc = 0.0;
        for (dr, wr) in [(0usize, 1.0 - tr), (1, tr)] {
            for (dm, wm) in [(0usize, 1.0 - tm), (1, tm)] {
                let blend = corner(ir + dr, im + dm, j0) * (1.0 - tp)
                    + corner(ir + dr, im + dm, j1) * tp;
                acc += wr * wm * blend;
            }
        }
        acc
    }
}

/// Values of a distribution perturbation on spatial nodes x velocity nodes.
#[derive(Debug, Clone)]
pub struct PhaseSpaceField {
    pub spatial: Arc<SpatialGrid>,
    pub velocity: Arc<VelocityGrid>,
    /// `values[ix * nv + iv]`.
    pub values: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn zeros(spatial: Arc<SpatialGrid>, velocity: Arc<VelocityGrid>) -> Self {
        let n = spatial.len() * velocity.len();
        Self {
            spatial,
            velocity,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn<F: Fn(Vec3, Vec3) -> f64>(
        spatial: Arc<SpatialGrid>,
        velocity: Arc<VelocityGrid>,
        f: F,
    ) -> Self {
        let nv = velocity.len();
        let mut values = vec![0.0; spatial.len() * nv];
        for (ix, x) in spatial.nodes.iter().enumerate() {
            for (iv, z) in velocity.nodes.iter().enumerate() {
                values[ix * nv + iv] = f(*x, *z);
            }
        }
        Self {
            spatial,
            velocity,
            values,
        }
    }

    pub fn n_spatial(&self) -> usize {
        self.spatial.len()
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.len()
    }

    #[inline]
    pub fn value(&self, ix: usize, iv: usize) -> f64 {
        self.values[ix * self.n_velocity() + iv]
    }

    pub fn node_slice(&self, ix: usize) -> &[f64] {
        let nv = self.n_velocity();
        &self.values[ix * nv..(ix + 1) * nv]
    }

    /// Checks that another field shares both grids (by size).
    pub fn check_compatible(&self, other: &PhaseSpaceField) -> Result<()> {
        if self.values.len() != other.values.len()
            || self.n_velocity() != other.n_velocity()
        {
            return Err(Error::Grid("phase-space fields on different grids".into()));
        }
        Ok(())
    }

    /// Weighted sup norm `sup |f| e^{alpha |zeta|^2}` over the nodes.
    pub fn linf_alpha(&self, alpha: f64) -> f64 {
        let nv = self.n_velocity();
        let mut worst: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let s = self.velocity.speeds[i % nv];
            worst = worst.max(v.abs() * (alpha * s * s).exp());
        }
        worst
    }

    /// Source-type weighted norm `sup |f| / (1 + |zeta|) e^{alpha |zeta|^2}`.
    pub fn linf_alpha_source(&self, alpha: f64) -> f64 {
        let nv = self.n_velocity();
        let mut worst: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let s = self.velocity.speeds[i % nv];
            worst = worst.max(v.abs() / (1.0 + s) * (alpha * s * s).exp());
        }
        worst
    }

    /// Spatial interpolation at an arbitrary point for a fixed velocity node.
    pub fn eval_spatial(&self, x: Vec3, iv: usize) -> f64 {
        let nv = self.n_velocity();
        self.spatial
            .interpolate_with(x, |ix| self.values[ix * nv + iv])
    }

    /// Velocity interpolation at an arbitrary velocity for a fixed spatial
    /// node (`None` beyond the cutoff).
    pub fn eval_velocity(&self, ix: usize, zeta: Vec3) -> Option<f64> {
        self.velocity
            .interpolate_weighted(self.node_slice(ix), zeta)
    }

    pub fn add_scaled(&mut self, c: f64, other: &PhaseSpaceField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a *= c;
        }
    }

    /// `sup |self - other| e^{alpha |zeta|^2}`.
    pub fn diff_linf_alpha(&self, other: &PhaseSpaceField, alpha: f64) -> f64 {
        let nv = self.n_velocity();
        let mut worst: f64 = 0.0;
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let s = self.velocity.speeds[i % nv];
            worst = worst.max((a - b).abs() * (alpha * s * s).exp());
        }
        worst
    }
}
