//! Pre/post-collision velocity maps and the sphere integral of the inverse
//! post-collision speed.

use crate::error::{Error, Result};
use crate::quad::{GaussLegendre, Grading};
use crate::vec3::{self, Vec3};

const DEGENERATE_REL: f64 = 1e-14;

fn relative_velocity(zeta: Vec3, zeta_star: Vec3) -> Result<(Vec3, f64)> {
    let diff = vec3::sub(zeta_star, zeta);
    let v = vec3::norm(diff);
    let scale = vec3::norm(zeta).max(vec3::norm(zeta_star)).max(1.0);
    if v <= DEGENERATE_REL * scale {
        return Err(Error::DegenerateCollision);
    }
    Ok((diff, v))
}

/// Deflection map in the scattering-angle parametrization.
///
/// The impact direction is
/// `omega = cos(theta) u + sin(theta) cos(phi) e2 + sin(theta) sin(phi) e3`
/// with `u = (zeta_* - zeta)/|zeta_* - zeta|`; `e2` may be pinned explicitly
/// (it is projected orthogonal to `u` and normalized), otherwise a
/// deterministic completion is used. The map exchanges the momentum component
/// along `omega`.
pub fn post_collision(
    zeta: Vec3,
    zeta_star: Vec3,
    theta: f64,
    phi: f64,
    basis_e2: Option<Vec3>,
) -> Result<(Vec3, Vec3)> {
    let (diff, v) = relative_velocity(zeta, zeta_star)?;
    let u = vec3::scale(1.0 / v, diff);
    let (e2, e3) = match basis_e2 {
        None => vec3::orthonormal_complement(u),
        Some(raw) => {
            let proj = vec3::axpy(-vec3::dot(raw, u), u, raw);
            let n = vec3::norm(proj);
            if n < 1e-12 {
                return Err(Error::Config(
                    "basis vector e2 is parallel to the relative velocity".into(),
                ));
            }
            let e2 = vec3::scale(1.0 / n, proj);
            (e2, vec3::cross(u, e2))
        }
    };
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let omega = [
        ct * u[0] + st * cp * e2[0] + st * sp * e3[0],
        ct * u[1] + st * cp * e2[1] + st * sp * e3[1],
        ct * u[2] + st * cp * e2[2] + st * sp * e3[2],
    ];
    let transfer = vec3::dot(diff, omega);
    let zeta_prime = vec3::axpy(transfer, omega, zeta);
    let zeta_star_prime = vec3::axpy(-transfer, omega, zeta_star);
    Ok((zeta_prime, zeta_star_prime))
}

/// Deflection map in the unit-vector parametrization:
/// `zeta' = (zeta + zeta_*)/2 + (|zeta_* - zeta|/2) sigma`.
///
/// Consistent with [`post_collision`] under `psi = 2 theta`.
pub fn sigma_post_collision(zeta: Vec3, zeta_star: Vec3, sigma: Vec3) -> Result<(Vec3, Vec3)> {
    let (_, v) = relative_velocity(zeta, zeta_star)?;
    let mid = vec3::scale(0.5, vec3::add(zeta, zeta_star));
    let half = 0.5 * v;
    Ok((
        vec3::axpy(half, sigma, mid),
        vec3::axpy(-half, sigma, mid),
    ))
}

/// Result of [`sphere_min_integral`]: the closed form
/// `2 pi min(1/|zeta + zeta_*|, 1/|zeta - zeta_*|)` against angular
/// quadratures of `1/|zeta'|` and `1/|zeta_*'|`.
#[derive(Debug, Clone, Copy)]
pub struct SphereMinIntegral {
    pub closed_form: f64,
    pub quadrature: f64,
    pub quadrature_star: f64,
}

/// Evaluates `∫_0^{2pi} ∫_0^{pi/2} sin(theta) cos(theta) / |zeta'| dtheta dphi`
/// (and the `zeta_*'` twin) by nested adaptive quadrature, together with the
/// closed form.
///
/// The post-collision speed can (nearly) vanish at one point of the angular
/// domain — exactly when `|zeta + zeta_*|` approaches `|zeta - zeta_*|` —
/// leaving an integrable spike. Its location is known in closed form (the
/// deflection that sends `zeta'` to the minimizer of `|m + r sigma|` over the
/// sphere), so panels are graded toward it in both angles.
pub fn sphere_min_integral(zeta: Vec3, zeta_star: Vec3) -> Result<SphereMinIntegral> {
    let (diff, v) = relative_velocity(zeta, zeta_star)?;
    let sum = vec3::norm(vec3::add(zeta, zeta_star));
    let inv_sum = if sum > 0.0 { 1.0 / sum } else { f64::INFINITY };
    let closed_form = 2.0 * std::f64::consts::PI * (1.0 / v).min(inv_sum);

    let mid = vec3::scale(0.5, vec3::add(zeta, zeta_star));
    let u = vec3::scale(1.0 / v, diff);
    let (e2, e3) = vec3::orthonormal_complement(u);
    let theta_rule = GaussLegendre::new(12);
    let phi_rule = GaussLegendre::new(10);

    let eval = |star: bool| -> Result<f64> {
        // Minimizer of the post-collision speed: sigma = -sign * mid/|mid|.
        let sign = if star { -1.0 } else { 1.0 };
        let (theta_dip, phi_dip) = if vec3::norm(mid) < 1e-14 {
            // Antipodal incoming pair: the speed is constant over the sphere.
            (std::f64::consts::FRAC_PI_4, 0.0)
        } else {
            let m_hat = vec3::normalize(mid);
            let sigma_dip = vec3::scale(-sign, m_hat);
            let cos_psi = vec3::dot(sigma_dip, u).clamp(-1.0, 1.0);
            let psi = cos_psi.acos();
            let phi = vec3::dot(sigma_dip, e3).atan2(vec3::dot(sigma_dip, e2));
            (0.5 * psi, phi)
        };
        let speed_at = |theta: f64, phi: f64| -> f64 {
            let psi = 2.0 * theta;
            let (sp, cp) = psi.sin_cos();
            let (sf, cf) = phi.sin_cos();
            let sigma = [
                cp * u[0] + sp * (cf * e2[0] + sf * e3[0]),
                cp * u[1] + sp * (cf * e2[1] + sf * e3[1]),
                cp * u[2] + sp * (cf * e2[2] + sf * e3[2]),
            ];
            vec3::norm(vec3::axpy(sign * 0.5 * v, sigma, mid))
        };
        // Azimuthal integral with panels graded toward the dip longitude
        // (both ends of the periodic window starting at phi_dip).
        let f_theta = |theta: f64| -> f64 {
            let lo = phi_dip;
            let hi = phi_dip + 2.0 * std::f64::consts::PI;
            let az = crate::quad::integrate_graded(&phi_rule, lo, hi, 24, Grading::Both, |phi| {
                1.0 / speed_at(theta, phi).max(1e-14)
            });
            let (st, ct) = theta.sin_cos();
            az * st * ct
        };
        // Polar integral split at the dip latitude.
        let t = theta_dip.clamp(0.0, std::f64::consts::FRAC_PI_2);
        let left = crate::quad::integrate_adaptive(&theta_rule, 0.0, t, 1e-8, Grading::Both, f_theta)?;
        let right = crate::quad::integrate_adaptive(
            &theta_rule,
            t,
            std::f64::consts::FRAC_PI_2,
            1e-8,
            Grading::Both,
            f_theta,
        )?;
        Ok(left + right)
    };
    let quadrature = eval(false)?;
    let quadrature_star = eval(true)?;
    Ok(SphereMinIntegral {
        closed_form,
        quadrature,
        quadrature_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{dist, norm2};

    #[test]
    fn theta_zero_exchanges_velocities() {
        let z = [0.4, -1.0, 2.0];
        let zs = [1.0, 0.5, -0.3];
        let (zp, zsp) = post_collision(z, zs, 0.0, 1.234, None).unwrap();
        assert!(dist(zp, zs) < 1e-14);
        assert!(dist(zsp, z) < 1e-14);
    }

    #[test]
    fn theta_right_angle_is_identity() {
        let z = [0.4, -1.0, 2.0];
        let zs = [1.0, 0.5, -0.3];
        let (zp, zsp) = post_collision(z, zs, std::f64::consts::FRAC_PI_2, 0.77, None).unwrap();
        assert!(dist(zp, z) < 1e-14);
        assert!(dist(zsp, zs) < 1e-14);
    }

    #[test]
    fn hand_evaluated_quarter_turn() {
        // zeta = 0, zeta_* = (0, 0, 2), theta = pi/4, phi = 0, e2 = (1, 0, 0)
        // maps to zeta' = (1, 0, 1), zeta_*' = (-1, 0, 1).
        let (zp, zsp) = post_collision(
            [0.0; 3],
            [0.0, 0.0, 2.0],
            std::f64::consts::FRAC_PI_4,
            0.0,
            Some([1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(dist(zp, [1.0, 0.0, 1.0]) < 1e-14, "{zp:?}");
        assert!(dist(zsp, [-1.0, 0.0, 1.0]) < 1e-14, "{zsp:?}");
    }

    #[test]
    fn sigma_map_aligned_cases() {
        let z = [0.2, 0.3, -0.4];
        let zs = [1.2, -0.3, 0.6];
        let u = crate::vec3::normalize(crate::vec3::sub(zs, z));
        let (zp, _) = sigma_post_collision(z, zs, u).unwrap();
        assert!(dist(zp, zs) < 1e-14);
        let (zp, _) = sigma_post_collision(z, zs, crate::vec3::scale(-1.0, u)).unwrap();
        assert!(dist(zp, z) < 1e-14);
        let (zp, zsp) =
            sigma_post_collision([0.0; 3], [0.0, 0.0, 2.0], [1.0, 0.0, 0.0]).unwrap();
        assert!(dist(zp, [1.0, 0.0, 1.0]) < 1e-14);
        assert!(dist(zsp, [-1.0, 0.0, 1.0]) < 1e-14);
    }

    #[test]
    fn conservation_on_random_inputs() {
        use rand::Rng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        use rand::SeedableRng;
        for _ in 0..2000 {
            let z: Vec3 = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let zs: Vec3 = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            if dist(z, zs) < 1e-6 {
                continue;
            }
            let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let (zp, zsp) = post_collision(z, zs, theta, phi, None).unwrap();
            let dp = dist(crate::vec3::add(zp, zsp), crate::vec3::add(z, zs));
            let de = (norm2(zp) + norm2(zsp) - norm2(z) - norm2(zs)).abs();
            let scale = 1.0 + norm2(z) + norm2(zs);
            assert!(dp < 1e-12 * scale);
            assert!(de < 1e-12 * scale);
        }
    }

    #[test]
    fn sigma_matches_theta_under_angle_doubling() {
        let z = [0.5, -0.7, 1.1];
        let zs = [-1.0, 0.2, 0.4];
        let u = crate::vec3::normalize(crate::vec3::sub(zs, z));
        let (e2, e3) = crate::vec3::orthonormal_complement(u);
        for &(theta, phi) in &[(0.3, 1.0), (0.7, 4.2), (1.2, 2.5)] {
            let (zp_t, zsp_t) = post_collision(z, zs, theta, phi, Some(e2)).unwrap();
            let psi = 2.0 * theta;
            let sigma = [
                psi.cos() * u[0] + psi.sin() * (phi.cos() * e2[0] + phi.sin() * e3[0]),
                psi.cos() * u[1] + psi.sin() * (phi.cos() * e2[1] + phi.sin() * e3[1]),
                psi.cos() * u[2] + psi.sin() * (phi.cos() * e2[2] + phi.sin() * e3[2]),
            ];
            let (zp_s, zsp_s) = sigma_post_collision(z, zs, sigma).unwrap();
            assert!(dist(zp_t, zp_s) < 1e-12, "theta {theta}");
            assert!(dist(zsp_t, zsp_s) < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn degenerate_collision_is_rejected() {
        let z = [1.0, 2.0, 3.0];
        assert!(matches!(
            post_collision(z, z, 0.3, 0.1, None),
            Err(Error::DegenerateCollision)
        ));
        assert!(matches!(
            sigma_post_collision(z, z, [1.0, 0.0, 0.0]),
            Err(Error::DegenerateCollision)
        ));
        assert!(matches!(
            sphere_min_integral(z, z),
            Err(Error::DegenerateCollision)
        ));
    }

    #[test]
    fn sphere_integral_reference_values() {
        // Antipodal pair: the shorter branch is 1/|zeta - zeta_*| = 1/2.
        let r = sphere_min_integral([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]).unwrap();
        assert!((r.closed_form - std::f64::consts::PI).abs() < 1e-12);
        assert!((r.quadrature - r.closed_form).abs() < 1e-6 * r.closed_form);
        assert!((r.quadrature_star - r.closed_form).abs() < 1e-6 * r.closed_form);

        let r = sphere_min_integral([2.0, 0.0, 0.0], [0.0; 3]).unwrap();
        assert!((r.closed_form - std::f64::consts::PI).abs() < 1e-12);
        assert!((r.quadrature - r.closed_form).abs() < 1e-6 * r.closed_form);

        let r = sphere_min_integral([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let want = 2.0 * std::f64::consts::PI / 2.0f64.sqrt();
        assert!((r.closed_form - want).abs() < 1e-12);
        assert!((r.quadrature - want).abs() < 1e-6 * want);
        assert!((r.quadrature_star - want).abs() < 1e-6 * want);
    }
}
