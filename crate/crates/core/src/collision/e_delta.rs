//! The Gaussian comparison factor that controls the kernel bounds,
//!
//! ```text
//! E_delta(zeta, zeta_*) = exp( -(1-delta)/4 * ( |zeta-zeta_*|^2
//!                         + ((|zeta|^2 - |zeta_*|^2)/|zeta-zeta_*|)^2 ) ),
//! ```
//!
//! and its algebraic factorization that peels off `exp(-a |zeta|^2)` on one
//! side and `exp(+a |zeta_*|^2)` on the other.

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

fn split(zeta: Vec3, zeta_star: Vec3) -> Result<(f64, f64, f64)> {
    let diff = vec3::sub(zeta, zeta_star);
    let w = vec3::norm(diff);
    let scale = vec3::norm(zeta).max(vec3::norm(zeta_star)).max(1.0);
    if w <= 1e-14 * scale {
        return Err(Error::DegenerateCollision);
    }
    let s = (vec3::norm2(zeta) - vec3::norm2(zeta_star)) / w;
    // Projection of zeta_* onto the difference direction.
    let p = vec3::dot(diff, zeta_star) / w;
    Ok((w, s, p))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Direct evaluation.
pub fn e_delta(zeta: Vec3, zeta_star: Vec3, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (w, s, _) = split(zeta, zeta_star)?;
    Ok((-(1.0 - delta) * 0.25 * (w * w + s * s)).exp())
}

/// Factored evaluation
/// `e^{-a|zeta|^2} e^{-alpha1 |zeta-zeta_*|^2} e^{-(1-delta)(p + alpha2 |zeta-zeta_*|)^2} e^{+a|zeta_*|^2}`
/// with `alpha1 = (1-delta+2a)(1-delta-2a)/(4(1-delta))` and
/// `alpha2 = (1-delta-2a)/(2(1-delta))`.
///
/// Requires `0 <= a < (1-delta)/2` so that `alpha1 > 0`; under that
/// constraint the product equals [`e_delta`] identically.
pub fn e_delta_factored(zeta: Vec3, zeta_star: Vec3, delta: f64, a: f64) -> Result<f64> {
    check_delta(delta)?;
    let one = 1.0 - delta;
    if !(0.0..=one / 2.0).contains(&a) || a == one / 2.0 {
        return Err(Error::Config(format!(
            "a must lie in [0, (1-delta)/2) = [0, {}), got {a}",
            one / 2.0
        )));
    }
    let (w, _, p) = split(zeta, zeta_star)?;
    let alpha1 = (one + 2.0 * a) * (one - 2.0 * a) / (4.0 * one);
    let alpha2 = (one - 2.0 * a) / (2.0 * one);
    let z2 = vec3::norm2(zeta);
    let zs2 = vec3::norm2(zeta_star);
    let quad = p + alpha2 * w;
    Ok((-a * z2 - alpha1 * w * w - one * quad * quad + a * zs2).exp())
}
