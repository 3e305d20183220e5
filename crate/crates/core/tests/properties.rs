//! Property tests for the structural invariants: conservation laws, basis
//! independence of angular averages, interpolation exactness, algebraic
//! identities.

use kinetic_fredholm::collision::{
    e_delta, e_delta_factored, post_collision, sigma_post_collision, VelocityGrid,
    VelocityGridConfig,
};
use kinetic_fredholm::geometry::DomainGeometry;
use kinetic_fredholm::transport::{apply_s, ConstNu};
use kinetic_fredholm::vec3::{self, Vec3};
use proptest::prelude::*;
use std::sync::OnceLock;

fn vel() -> impl Strategy<Value = Vec3> {
    [-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64]
}

fn nondegenerate(z: Vec3, zs: Vec3) -> bool {
    vec3::dist(z, zs) > 1e-3
}

fn shared_grid() -> &'static VelocityGrid {
    static GRID: OnceLock<VelocityGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        VelocityGrid::new(VelocityGridConfig {
            radial_order: 16,
            n_mu: 3,
            n_phi: 6,
            ..Default::default()
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn post_collision_conserves_momentum_and_energy(
        z in vel(),
        zs in vel(),
        theta in 0.0..std::f64::consts::FRAC_PI_2,
        phi in 0.0..(2.0 * std::f64::consts::PI),
    ) {
        prop_assume!(nondegenerate(z, zs));
        let (zp, zsp) = post_collision(z, zs, theta, phi, None).unwrap();
        let scale = 1.0 + vec3::norm2(z) + vec3::norm2(zs);
        prop_assert!(vec3::dist(vec3::add(zp, zsp), vec3::add(z, zs)) <= 1e-12 * scale);
        prop_assert!(
            (vec3::norm2(zp) + vec3::norm2(zsp) - vec3::norm2(z) - vec3::norm2(zs)).abs()
                <= 1e-12 * scale
        );
    }

    #[test]
    fn sigma_map_conserves_momentum_and_energy(
        z in vel(),
        zs in vel(),
        mu in -1.0..1.0f64,
        phi in 0.0..(2.0 * std::f64::consts::PI),
    ) {
        prop_assume!(nondegenerate(z, zs));
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let (zp, zsp) = sigma_post_collision(z, zs, [s * phi.cos(), s * phi.sin(), mu]).unwrap();
        let scale = 1.0 + vec3::norm2(z) + vec3::norm2(zs);
        prop_assert!(vec3::dist(vec3::add(zp, zsp), vec3::add(z, zs)) <= 1e-12 * scale);
        prop_assert!(
            (vec3::norm2(zp) + vec3::norm2(zsp) - vec3::norm2(z) - vec3::norm2(zs)).abs()
                <= 1e-12 * scale
        );
    }

    /// Angular averages of deflection data do not depend on the choice of
    /// the orthonormal completion: the azimuth sweeps the full circle.
    #[test]
    fn angular_average_is_basis_invariant(
        z in vel(),
        zs in vel(),
        tilt in 0.05..3.0f64,
    ) {
        prop_assume!(nondegenerate(z, zs));
        let u = vec3::normalize(vec3::sub(zs, z));
        let (e2_default, e3_default) = vec3::orthonormal_complement(u);
        // A second completion, rotated by `tilt` around u.
        let (c, s) = tilt.sin_cos();
        let e2_alt = vec3::add(vec3::scale(c, e2_default), vec3::scale(s, e3_default));

        let smooth = |v: Vec3| (1.0 + 0.5 * v[0] - 0.2 * v[1]) * (-0.2 * vec3::norm2(v)).exp();
        let average = |e2: Option<Vec3>| -> f64 {
            let n_t = 8;
            let n_p = 16;
            let mut acc = 0.0;
            for i in 0..n_t {
                let theta = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / n_t as f64;
                for j in 0..n_p {
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_p as f64;
                    let (zp, zsp) = post_collision(z, zs, theta, phi, e2).unwrap();
                    acc += smooth(zp) * smooth(zsp) * theta.sin() * theta.cos();
                }
            }
            acc
        };
        let a = average(None);
        let b = average(Some(e2_alt));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-9), "{a} vs {b}");
    }

    #[test]
    fn comparison_factorization_identity(
        z in vel(),
        zs in vel(),
        delta in 0.05..0.95f64,
        a_frac in 0.0..0.999f64,
    ) {
        prop_assume!(nondegenerate(z, zs));
        let a = a_frac * (1.0 - delta) / 2.0 * 0.999;
        let direct = e_delta(z, zs, delta).unwrap();
        let factored = e_delta_factored(z, zs, delta, a).unwrap();
        prop_assert!((direct - factored).abs() <= 1e-12 * direct.max(1e-300));
    }

    /// Weighted interpolation reproduces Maxwellian-shaped data anywhere in
    /// the truncated ball.
    #[test]
    fn weighted_interpolation_exact_on_gaussians(
        c in -3.0..3.0f64,
        z in vel(),
    ) {
        prop_assume!(vec3::norm(z) > 1e-6 && vec3::norm(z) < 5.9);
        let grid = shared_grid();
        let vals: Vec<f64> = grid.speeds.iter().map(|s| c * (-0.5 * s * s).exp()).collect();
        let got = grid.interpolate_weighted(&vals, z).unwrap();
        let want = c * (-0.5 * vec3::norm2(z)).exp();
        prop_assert!((got - want).abs() <= 1e-11 * want.abs().max(1e-12));
    }

    /// The exit weight lies in (0, 1) and is constant along the backward ray.
    #[test]
    fn weight_range_and_ray_invariance(
        x_raw in [-0.9..0.9f64, -0.9..0.9f64, -0.9..0.9f64],
        z in vel(),
        t in 0.05..0.95f64,
    ) {
        let dom = DomainGeometry::unit_ball();
        prop_assume!(vec3::norm(x_raw) < 0.93 && vec3::norm(z) > 0.05);
        let w = dom.weight_w(x_raw, z).unwrap();
        prop_assert!(w > 0.0 && w < 1.0);
        let exit = dom.exit_data(x_raw, z).unwrap();
        let xt = vec3::axpy(-t * exit.tau_minus * 0.999, z, x_raw);
        let wt = dom.weight_w(xt, z).unwrap();
        prop_assert!((w - wt).abs() <= 1e-9);
    }

    /// The damped line integral sees the integrand only along the backward
    /// segment: values elsewhere cannot change the result.
    #[test]
    fn line_integral_ray_locality(
        x_raw in [-0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64],
        z in vel(),
        off_value in -10.0..10.0f64,
    ) {
        let dom = DomainGeometry::unit_ball();
        prop_assume!(vec3::norm(x_raw) < 0.55 && vec3::norm(z) > 0.1);
        let exit = dom.exit_data(x_raw, z).unwrap();
        let on_segment = move |p: Vec3| {
            // Distance from p to the segment [q, x]: p must sit on the ray.
            let d = vec3::sub(p, exit.q);
            let seg = vec3::sub(x_raw, exit.q);
            let t = vec3::dot(d, seg) / vec3::norm2(seg);
            (-0.05..=1.05).contains(&t)
                && vec3::dist(p, vec3::axpy(t, seg, exit.q)) < 1e-7
        };
        let base = apply_s(&dom, &ConstNu(1.0), |p, _| if on_segment(p) { 1.0 } else { 0.0 },
            x_raw, z, 1e-9).unwrap();
        let poisoned = apply_s(&dom, &ConstNu(1.0), |p, _| if on_segment(p) { 1.0 } else { off_value },
            x_raw, z, 1e-9).unwrap();
        prop_assert!((base - poisoned).abs() <= 1e-12 * base.abs().max(1e-12));
    }
}

/// Ellipsoid exit data satisfies the implicit equation and incoming-normal
/// condition everywhere.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn ellipsoid_exit_invariants(
        u in [-0.95..0.95f64, -0.95..0.95f64, -0.95..0.95f64],
        z in vel(),
    ) {
        prop_assume!(vec3::norm(u) < 0.95 && vec3::norm(z) > 0.05);
        let dom = DomainGeometry::Ellipsoid {
            center: [0.2, -0.1, 0.05],
            semi_axes: [2.0, 1.0, 0.8],
        };
        let x = [0.2 + 2.0 * u[0], -0.1 + 1.0 * u[1], 0.05 + 0.8 * u[2]];
        let e = dom.exit_data(x, z).unwrap();
        prop_assert!(dom.implicit(e.q).abs() < 1e-10);
        prop_assert!(vec3::dot(e.normal, z) < 0.0);
        prop_assert!(vec3::dist(e.q, vec3::axpy(-e.tau_minus, z, x)) < 1e-12 * (1.0 + e.tau_minus * vec3::norm(z)));
    }
}
