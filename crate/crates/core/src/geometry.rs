//! Backward-exit geometry of convex domains with curved boundary.
//!
//! Everything downstream (transport, solver, regularity weights) is built on
//! four queries: the backward exit time `tau_minus` along a characteristic,
//! the exit point `q`, the normal cosine `N` at the exit point, and the
//! boundary distance `d_x`. For balls and ellipsoids all four are available
//! in closed form or by a short Newton polish, so the solver never pays for
//! iterative ray marching.

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, GaussLegendre, Grading};
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};

/// Points closer to the boundary than this (in physical distance) are
/// rejected as boundary points: the exit-time quadratic loses all significant
/// digits there.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// A convex body with strictly positive boundary curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainGeometry {
    Ball {
        #[serde(default = "zero3")]
        center: [f64; 3],
        radius: f64,
    },
    Ellipsoid {
        #[serde(default = "zero3")]
        center: [f64; 3],
        semi_axes: [f64; 3],
    },
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

/// Backward exit data along the characteristic `s -> x - s*zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitData {
    /// First time the backward characteristic leaves the domain.
    pub tau_minus: f64,
    /// Exit point `x - tau_minus * zeta` on the boundary.
    pub q: Vec3,
    /// Outward unit normal at `q`.
    pub normal: Vec3,
    /// Normal cosine `|n(q) . zeta| / |zeta|`, in `(0, 1]`.
    pub n_cos: f64,
}

/// Two-point geometry used by the pairwise Hölder weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    /// `min(N(x, zeta), N(y, zeta))`.
    pub n_min: f64,
    /// `min(d_x, d_y)`.
    pub d_min: f64,
    /// `|zeta|^sigma / (1 + |zeta|) * n_min`.
    pub w_sigma: f64,
}

impl DomainGeometry {
    pub fn unit_ball() -> Self {
        DomainGeometry::Ball {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    /// Validates shape parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainGeometry::Ball { radius, .. } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
                }
            }
            DomainGeometry::Ellipsoid { semi_axes, .. } => {
                if semi_axes.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(Error::Config(format!(
                        "ellipsoid semi-axes must be positive, got {semi_axes:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        match self {
            DomainGeometry::Ball { center, .. } => *center,
            DomainGeometry::Ellipsoid { center, .. } => *center,
        }
    }

    /// Semi-axes; a ball reports `[r, r, r]`.
    pub fn semi_axes(&self) -> Vec3 {
        match self {
            DomainGeometry::Ball { radius, .. } => [*radius; 3],
            DomainGeometry::Ellipsoid { semi_axes, .. } => *semi_axes,
        }
    }

    pub fn diameter(&self) -> f64 {
        let a = self.semi_axes();
        2.0 * a[0].max(a[1]).max(a[2])
    }

    /// Coordinates in which the body is the unit ball.
    #[inline]
    fn to_scaled(&self, x: Vec3) -> Vec3 {
        let c = self.center();
        let a = self.semi_axes();
        [
            (x[0] - c[0]) / a[0],
            (x[1] - c[1]) / a[1],
            (x[2] - c[2]) / a[2],
        ]
    }

    #[inline]
    fn direction_scaled(&self, zeta: Vec3) -> Vec3 {
        let a = self.semi_axes();
        [zeta[0] / a[0], zeta[1] / a[1], zeta[2] / a[2]]
    }

    /// Outward unit normal at a boundary point (gradient of the implicit
    /// equation, renormalized).
    pub fn normal_at(&self, q: Vec3) -> Vec3 {
        let c = self.center();
        let a = self.semi_axes();
        vec3::normalize([
            (q[0] - c[0]) / (a[0] * a[0]),
            (q[1] - c[1]) / (a[1] * a[1]),
            (q[2] - c[2]) / (a[2] * a[2]),
        ])
    }

    /// Residual of the implicit boundary equation, zero on the boundary.
    pub fn implicit(&self, x: Vec3) -> f64 {
        vec3::norm2(self.to_scaled(x)) - 1.0
    }

    /// True when `x` is strictly interior with margin `BOUNDARY_TOL`.
    pub fn is_strictly_interior(&self, x: Vec3) -> bool {
        self.boundary_distance(x).map(|d| d > 0.0).unwrap_or(false)
    }

    fn require_interior(&self, x: Vec3) -> Result<()> {
        let d = self.distance_signed(x);
        if d <= BOUNDARY_TOL {
            return Err(Error::Domain { point: x, margin: d });
        }
        Ok(())
    }

    /// Distance to the boundary, positive inside, negative outside.
    fn distance_signed(&self, x: Vec3) -> f64 {
        match self {
            DomainGeometry::Ball { center, radius } => radius - vec3::dist(x, *center),
            DomainGeometry::Ellipsoid { center, semi_axes } => {
                ellipsoid_signed_distance(vec3::sub(x, *center), *semi_axes)
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: Vec3) -> Result<f64> {
        let d = self.distance_signed(x);
        if d <= BOUNDARY_TOL {
            return Err(Error::Domain { point: x, margin: d });
        }
        Ok(d)
    }

    /// Backward exit data for an interior point and nonzero velocity.
    pub fn exit_data(&self, x: Vec3, zeta: Vec3) -> Result<ExitData> {
        self.require_interior(x)?;
        let speed2 = vec3::norm2(zeta);
        if speed2 == 0.0 {
            return Err(Error::DegenerateVelocity);
        }
        let xs = self.to_scaled(x);
        let ds = self.direction_scaled(zeta);
        // |xs - s*ds|^2 = 1; the positive root is the backward exit time.
        let b = vec3::dot(xs, ds);
        let dd = vec3::norm2(ds);
        let disc = (b * b + dd * (1.0 - vec3::norm2(xs))).max(0.0);
        let tau = (b + disc.sqrt()) / dd;
        let q = vec3::axpy(-tau, zeta, x);
        let normal = self.normal_at(q);
        let n_cos = vec3::dot(normal, zeta).abs() / speed2.sqrt();
        Ok(ExitData {
            tau_minus: tau,
            q,
            normal,
            n_cos,
        })
    }

    /// Normal cosine `N(x, zeta)` at the backward exit point.
    pub fn n_cos(&self, x: Vec3, zeta: Vec3) -> Result<f64> {
        Ok(self.exit_data(x, zeta)?.n_cos)
    }

    /// Forward exit time (backward exit time of `-zeta`).
    pub fn tau_plus(&self, x: Vec3, zeta: Vec3) -> Result<f64> {
        Ok(self.exit_data(x, [-zeta[0], -zeta[1], -zeta[2]])?.tau_minus)
    }

    /// Degeneracy weight `|zeta|/(1+|zeta|) * N(x, zeta)`, in `(0, 1)`.
    pub fn weight_w(&self, x: Vec3, zeta: Vec3) -> Result<f64> {
        let speed = vec3::norm(zeta);
        let n = self.n_cos(x, zeta)?;
        Ok(speed / (1.0 + speed) * n)
    }

    /// Pairwise geometry for the two-point Hölder weights.
    pub fn pair_geometry(&self, x: Vec3, y: Vec3, zeta: Vec3, sigma: f64) -> Result<PairGeometry> {
        if !(0.0 < sigma && sigma <= 1.0) {
            return Err(Error::Config(format!("sigma must lie in (0, 1], got {sigma}")));
        }
        let nx = self.n_cos(x, zeta)?;
        let ny = self.n_cos(y, zeta)?;
        let dx = self.boundary_distance(x)?;
        let dy = self.boundary_distance(y)?;
        let n_min = nx.min(ny);
        let speed = vec3::norm(zeta);
        Ok(PairGeometry {
            n_min,
            d_min: dx.min(dy),
            w_sigma: speed.powf(sigma) / (1.0 + speed) * n_min,
        })
    }

    /// Chord length through the domain from a boundary point `y` in direction
    /// `zeta` with `n(y) . zeta < 0` (forward flight of an entering particle).
    pub fn chord_from_boundary(&self, y: Vec3, zeta: Vec3) -> Result<f64> {
        if vec3::norm2(zeta) == 0.0 {
            return Err(Error::DegenerateVelocity);
        }
        let ys = self.to_scaled(y);
        let ds = self.direction_scaled(zeta);
        let b = vec3::dot(ys, ds);
        if b >= 0.0 {
            return Err(Error::Config(
                "chord_from_boundary requires an incoming velocity".into(),
            ));
        }
        Ok(-2.0 * b / vec3::norm2(ds))
    }

    /// Uniform sample of the interior (uniform w.r.t. volume), kept a small
    /// margin away from the boundary.
    pub fn sample_interior<R: rand::Rng>(&self, rng: &mut R) -> Vec3 {
        let c = self.center();
        let a = self.semi_axes();
        loop {
            let u: Vec3 = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let r2 = vec3::norm2(u);
            if r2 < 1.0 {
                let x = [c[0] + a[0] * u[0], c[1] + a[1] * u[1], c[2] + a[2] * u[2]];
                if self.distance_signed(x) > 10.0 * BOUNDARY_TOL {
                    return x;
                }
            }
        }
    }

    /// Random boundary point (uniform in the scaled-sphere parameter, not in
    /// surface area) with its outward normal.
    pub fn sample_boundary<R: rand::Rng>(&self, rng: &mut R) -> (Vec3, Vec3) {
        let c = self.center();
        let a = self.semi_axes();
        let u = loop {
            let v: Vec3 = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = vec3::norm(v);
            if n > 1e-3 && n < 1.0 {
                break vec3::scale(1.0 / n, v);
            }
        };
        let y = [c[0] + a[0] * u[0], c[1] + a[1] * u[1], c[2] + a[2] * u[2]];
        (y, self.normal_at(y))
    }

    /// Boundary quadrature: nodes, outward normals and surface-measure
    /// weights from the scaled-sphere parametrization.
    pub fn boundary_quadrature(&self, n_mu: usize, n_phi: usize) -> Vec<(Vec3, Vec3, f64)> {
        let c = self.center();
        let a = self.semi_axes();
        let abc = a[0] * a[1] * a[2];
        crate::quad::sphere_rule(n_mu, n_phi)
            .into_iter()
            .map(|(u, w)| {
                let y = [c[0] + a[0] * u[0], c[1] + a[1] * u[1], c[2] + a[2] * u[2]];
                let jac = abc
                    * ((u[0] / a[0]).powi(2) + (u[1] / a[1]).powi(2) + (u[2] / a[2]).powi(2))
                        .sqrt();
                (y, self.normal_at(y), w * jac)
            })
            .collect()
    }
}

/// Exact signed distance from a centered point to an axis-aligned ellipsoid
/// boundary. Multi-start Newton on the first-order conditions of
/// `min |y - z|^2` over the boundary; the starts cover every basin so the
/// global minimizer is found also on symmetry axes.
fn ellipsoid_signed_distance(z: Vec3, axes: Vec3) -> f64 {
    let inside = {
        let s = [z[0] / axes[0], z[1] / axes[1], z[2] / axes[2]];
        vec3::norm2(s) < 1.0
    };
    if vec3::norm(z) < 1e-14 {
        let d = axes[0].min(axes[1]).min(axes[2]);
        return d;
    }
    let mut best = f64::INFINITY;
    for u0 in start_directions(z, axes) {
        if let Some(d) = nearest_point_newton(z, axes, u0) {
            best = best.min(d);
        }
    }
    if !best.is_finite() {
        // Newton failed from every start; fall back to dense sampling.
        let mut bd = f64::INFINITY;
        for (u, _) in crate::quad::sphere_rule(24, 48) {
            let y = [axes[0] * u[0], axes[1] * u[1], axes[2] * u[2]];
            bd = bd.min(vec3::dist(y, z));
        }
        best = bd;
    }
    if inside {
        best
    } else {
        -best
    }
}

fn start_directions(z: Vec3, axes: Vec3) -> Vec<Vec3> {
    let mut dirs = vec![vec3::normalize([
        z[0] / axes[0],
        z[1] / axes[1],
        z[2] / axes[2],
    ])];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                dirs.push(vec3::normalize([sx, sy, sz]));
            }
        }
    }
    for k in 0..3 {
        for s in [-1.0, 1.0] {
            let mut d = [0.0; 3];
            d[k] = s;
            dirs.push(d);
        }
    }
    dirs
}

/// Newton iteration on the stationarity system for the nearest boundary
/// point: `a (.) r = (mu/2) u`, `|u| = 1` with `y = a (.) u`, `r = y - z`.
fn nearest_point_newton(z: Vec3, a: Vec3, mut u: Vec3) -> Option<f64> {
    let y = |u: Vec3| [a[0] * u[0], a[1] * u[1], a[2] * u[2]];
    let mut mu = {
        let r = vec3::sub(y(u), z);
        2.0 * vec3::dot([a[0] * r[0], a[1] * r[1], a[2] * r[2]], u)
    };
    for _ in 0..60 {
        let r = vec3::sub(y(u), z);
        let g = [
            a[0] * r[0] - 0.5 * mu * u[0],
            a[1] * r[1] - 0.5 * mu * u[1],
            a[2] * r[2] - 0.5 * mu * u[2],
            0.5 * (vec3::norm2(u) - 1.0),
        ];
        let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]).sqrt();
        if gn < 1e-14 {
            return Some(vec3::dist(y(u), z));
        }
        // 4x4 Newton system, solved by Gaussian elimination.
        let mut m = [
            [a[0] * a[0] - 0.5 * mu, 0.0, 0.0, -0.5 * u[0], -g[0]],
            [0.0, a[1] * a[1] - 0.5 * mu, 0.0, -0.5 * u[1], -g[1]],
            [0.0, 0.0, a[2] * a[2] - 0.5 * mu, -0.5 * u[2], -g[2]],
            [u[0], u[1], u[2], 0.0, -g[3]],
        ];
        for col in 0..4 {
            let piv = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
            if m[piv][col].abs() < 1e-300 {
                return None;
            }
            m.swap(col, piv);
            for row in 0..4 {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..5 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        let du = [m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2]];
        let dmu = m[3][4] / m[3][3];
        // Damped step keeps u away from the origin.
        let mut step = 1.0;
        for _ in 0..30 {
            let un = vec3::add(u, vec3::scale(step, du));
            if vec3::norm(un) > 0.3 {
                u = un;
                mu += step * dmu;
                break;
            }
            step *= 0.5;
        }
        u = vec3::normalize(u);
    }
    None
}

// ---------------------------------------------------------------------------
// Probe helpers shared by the verification scenarios and the test suite.
// ---------------------------------------------------------------------------

/// Central finite-difference gradient of `tau_minus` in the velocity
/// variable, step `1e-5 * max(1, |zeta|)` per component.
pub fn tau_minus_grad_zeta_fd(dom: &DomainGeometry, x: Vec3, zeta: Vec3) -> Result<Vec3> {
    let h = 1e-5 * vec3::norm(zeta).max(1.0);
    let mut g = [0.0; 3];
    for k in 0..3 {
        let mut zp = zeta;
        let mut zm = zeta;
        zp[k] += h;
        zm[k] -= h;
        let tp = dom.exit_data(x, zp)?.tau_minus;
        let tm = dom.exit_data(x, zm)?.tau_minus;
        g[k] = (tp - tm) / (2.0 * h);
    }
    Ok(g)
}

/// Line integral `∫_0^{|x - q(x, dir)|} d(x - t*dir)^{-power} dt` along a unit
/// direction, by graded adaptive quadrature (the integrand blows up at the
/// exit point).
pub fn ray_distance_integral(
    dom: &DomainGeometry,
    x: Vec3,
    dir: Vec3,
    power: f64,
    tol: f64,
) -> Result<f64> {
    let unit = vec3::normalize(dir);
    let exit = dom.exit_data(x, unit)?;
    let length = exit.tau_minus;
    let rule = GaussLegendre::new(8);
    integrate_adaptive(&rule, 0.0, length, tol, Grading::Right, |t| {
        let p = vec3::axpy(-t, unit, x);
        match dom.boundary_distance(p) {
            Ok(d) => d.powf(-power),
            Err(_) => 0.0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn unit_ball() -> DomainGeometry {
        DomainGeometry::unit_ball()
    }

    #[test]
    fn exit_from_center_along_axis() {
        let dom = unit_ball();
        let e = dom.exit_data([0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!((e.tau_minus - 1.0).abs() < 1e-14);
        assert!(vec3::dist(e.q, [-1.0, 0.0, 0.0]) < 1e-14);
        assert!((e.n_cos - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exit_time_scales_with_speed() {
        let dom = unit_ball();
        let e = dom.exit_data([0.0; 3], [0.0, 2.0, 0.0]).unwrap();
        assert!((e.tau_minus - 0.5).abs() < 1e-14);
        assert!(vec3::dist(e.q, [0.0, -1.0, 0.0]) < 1e-14);
        assert!((e.n_cos - 1.0).abs() < 1e-14);
    }

    #[test]
    fn off_center_exit_matches_hand_solution() {
        // From (0.8, 0, 0) backward along (0, 1, 0): q = (0.8, -0.6, 0).
        let dom = unit_ball();
        let e = dom.exit_data([0.8, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert!((e.tau_minus - 0.6).abs() < 1e-14);
        assert!(vec3::dist(e.q, [0.8, -0.6, 0.0]) < 1e-14);
        assert!((e.n_cos - 0.6).abs() < 1e-14);
        assert!(vec3::dot(e.normal, [0.0, 1.0, 0.0]) < 0.0);
    }

    #[test]
    fn exit_invariants_on_random_samples() {
        let dom = DomainGeometry::Ellipsoid {
            center: [0.1, -0.2, 0.3],
            semi_axes: [2.0, 1.0, 1.0],
        };
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let x = dom.sample_interior(&mut rng);
            let zeta = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            if vec3::norm(zeta) < 1e-3 {
                continue;
            }
            let e = dom.exit_data(x, zeta).unwrap();
            // q = x - tau * zeta and q lies on the boundary.
            assert!(vec3::dist(e.q, vec3::axpy(-e.tau_minus, zeta, x)) < 1e-12);
            assert!(dom.implicit(e.q).abs() < 1e-10);
            // Backward exit point sees the velocity as incoming.
            assert!(vec3::dot(e.normal, zeta) < 0.0);
            assert!(e.n_cos > 0.0 && e.n_cos <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn rejects_exterior_and_boundary_points() {
        let dom = unit_ball();
        assert!(matches!(
            dom.exit_data([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            dom.exit_data([0.0, 2.0, 0.0], [1.0, 0.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            dom.exit_data([0.0, 1.0 - 1e-12, 0.0], [1.0, 0.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            dom.exit_data([0.0; 3], [0.0; 3]),
            Err(Error::DegenerateVelocity)
        ));
    }

    #[test]
    fn ball_distance_is_exact() {
        let dom = unit_ball();
        assert!((dom.boundary_distance([0.0; 3]).unwrap() - 1.0).abs() < 1e-15);
        assert!((dom.boundary_distance([0.5, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_distance_center_and_axis_points() {
        let dom = DomainGeometry::Ellipsoid {
            center: [0.0; 3],
            semi_axes: [2.0, 1.0, 1.0],
        };
        // Center: shortest semi-axis.
        assert!((dom.boundary_distance([0.0; 3]).unwrap() - 1.0).abs() < 1e-10);
        // On the major axis inside the evolute the nearest point is off-axis:
        // for (0.5, 0, 0) the 2D reduction gives cos(t) = 1/3 and
        // d^2 = (2/3 - 1/2)^2 + 8/9.
        let want = ((2.0 / 3.0f64 - 0.5).powi(2) + 8.0 / 9.0).sqrt();
        let got = dom.boundary_distance([0.5, 0.0, 0.0]).unwrap();
        assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn ellipsoid_distance_agrees_with_dense_sampling() {
        let dom = DomainGeometry::Ellipsoid {
            center: [0.0; 3],
            semi_axes: [2.0, 1.0, 0.7],
        };
        let mut rng = StdRng::seed_from_u64(11);
        let fine = crate::quad::sphere_rule(120, 240);
        for _ in 0..40 {
            let x = dom.sample_interior(&mut rng);
            let d = dom.boundary_distance(x).unwrap();
            let mut dense = f64::INFINITY;
            for (u, _) in &fine {
                let y = [2.0 * u[0], 1.0 * u[1], 0.7 * u[2]];
                dense = dense.min(vec3::dist(y, x));
            }
            // The dense scan is an upper bound; its own error is quadratic
            // in the surface spacing and inflates near the boundary.
            assert!(d <= dense + 1e-9, "d={d} dense={dense}");
            if d > 0.1 {
                assert!(dense - d < 1e-3, "d={d} dense={dense}");
            }
        }
    }

    #[test]
    fn weight_values() {
        let dom = unit_ball();
        assert!((dom.weight_w([0.0; 3], [1.0, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-14);
        assert!((dom.weight_w([0.0; 3], [3.0, 0.0, 0.0]).unwrap() - 0.75).abs() < 1e-14);
        let w = dom.weight_w([0.8, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert!((w - 0.3).abs() < 1e-14);
    }

    #[test]
    fn weight_is_invariant_along_the_ray() {
        let dom = unit_ball();
        let x = [0.3, -0.2, 0.4];
        let zeta = [0.7, 1.1, -0.4];
        let e = dom.exit_data(x, zeta).unwrap();
        let w0 = dom.weight_w(x, zeta).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let xt = vec3::axpy(-t * e.tau_minus, zeta, x);
            let wt = dom.weight_w(xt, zeta).unwrap();
            assert!((wt - w0).abs() < 1e-11, "t={t}: {wt} vs {w0}");
        }
    }

    #[test]
    fn pair_geometry_combines_pointwise_quantities() {
        let dom = unit_ball();
        let x = [0.0; 3];
        let y = [0.8, 0.0, 0.0];
        let zeta = [0.0, 1.0, 0.0];
        let p = dom.pair_geometry(x, y, zeta, 1.0).unwrap();
        assert!((p.n_min - 0.6).abs() < 1e-14);
        assert!((p.d_min - 0.2).abs() < 1e-14);
        // sigma = 1, |zeta| = 1: w_sigma = n_min / 2.
        assert!((p.w_sigma - 0.3).abs() < 1e-14);
        // x = y degenerates to the single-point values.
        let q = dom.pair_geometry(x, x, zeta, 0.75).unwrap();
        assert!((q.n_min - dom.n_cos(x, zeta).unwrap()).abs() < 1e-14);
        assert!((q.d_min - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chord_matches_exit_geometry() {
        let dom = unit_ball();
        let y = [0.0, -1.0, 0.0];
        let chord = dom.chord_from_boundary(y, [0.0, 1.0, 0.0]).unwrap();
        assert!((chord - 2.0).abs() < 1e-14);
        assert!(dom.chord_from_boundary(y, [0.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn boundary_quadrature_reproduces_surface_area() {
        let ball = DomainGeometry::Ball {
            center: [0.0; 3],
            radius: 2.0,
        };
        let area: f64 = ball.boundary_quadrature(16, 32).iter().map(|t| t.2).sum();
        assert!((area - 16.0 * std::f64::consts::PI).abs() < 1e-9);

        // Prolate spheroid (a, b, b) with a > b has a closed-form area.
        let (a, b) = (2.0, 1.0);
        let dom = DomainGeometry::Ellipsoid {
            center: [0.0; 3],
            semi_axes: [a, b, b],
        };
        let e = (1.0 - (b * b) / (a * a)).sqrt();
        let want = 2.0 * std::f64::consts::PI * b * b * (1.0 + a / (b * e) * e.asin());
        let got: f64 = dom.boundary_quadrature(48, 96).iter().map(|t| t.2).sum();
        assert!((got - want).abs() < 1e-6 * want, "got {got}, want {want}");
    }

    #[test]
    fn grad_zeta_tau_minus_respects_the_geometric_bound() {
        let dom = unit_ball();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let x = dom.sample_interior(&mut rng);
            let zeta = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let speed = vec3::norm(zeta);
            if speed < 0.05 {
                continue;
            }
            let e = dom.exit_data(x, zeta).unwrap();
            if e.n_cos < 0.05 {
                continue; // finite differences are unreliable in grazing geometry
            }
            let g = tau_minus_grad_zeta_fd(&dom, x, zeta).unwrap();
            let bound = e.tau_minus / (e.n_cos * speed);
            assert!(
                vec3::norm(g) <= bound * (1.0 + 1e-3) + 1e-8,
                "grad {:?} exceeds bound {bound}",
                g
            );
        }
    }
}
