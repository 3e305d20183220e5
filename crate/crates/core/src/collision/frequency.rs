//! Collision frequency `nu(|zeta|)`: the multiplication part of the
//! linearized collision operator,
//!
//! ```text
//! nu(c) = B0 * pi * pi^{-3/2} * ∫ e^{-|u|^2} |zeta - u|^gamma du.
//! ```
//!
//! The angular part of the integral has a closed form, so only a radial
//! quadrature remains; the integrand has a kink at `r = |zeta|` and the
//! interval is split there.

use super::CrossSection;
use crate::quad::{GaussLegendre, Grading};

/// Closed-form value at rest: `nu(0) = 2 sqrt(pi) * B0 * Gamma((3+gamma)/2)`.
pub fn collision_frequency_at_rest(cs: &CrossSection) -> f64 {
    2.0 * std::f64::consts::PI.sqrt() * cs.b0 * gamma_fn(0.5 * (3.0 + cs.gamma))
}

/// Collision frequency at a given speed.
pub fn collision_frequency(cs: &CrossSection, speed: f64) -> f64 {
    debug_assert!(speed >= 0.0);
    let gamma = cs.gamma;
    if gamma == 0.0 {
        // ∫ e^{-|u|^2} du = pi^{3/2} exactly.
        return std::f64::consts::PI * cs.b0;
    }
    if speed < 1e-8 {
        return collision_frequency_at_rest(cs);
    }
    let c = speed;
    let p = gamma + 2.0;
    // Angular reduction: ∫_{S^2} |zeta - r w|^gamma dΣ(w)
    //   = 2 pi [ (c+r)^{p} - |c-r|^{p} ] / (c r p).
    // so the radial integrand (including r^2 from the volume element) is
    //   2 pi r e^{-r^2} [ (c+r)^p - |c-r|^p ] / (c p).
    let integrand = |r: f64| -> f64 {
        let a = (c + r).powf(p) - (c - r).abs().powf(p);
        2.0 * std::f64::consts::PI * r * (-r * r).exp() * a / (c * p)
    };
    let rule = GaussLegendre::new(16);
    let upper = c + 12.0;
    let lower = crate::quad::integrate_adaptive(&rule, 0.0, c.min(upper), 1e-11, Grading::Both, integrand)
        .expect("radial quadrature converges");
    let tail = crate::quad::integrate_adaptive(&rule, c.min(upper), upper, 1e-11, Grading::Both, integrand)
        .expect("radial quadrature converges");
    let integral = lower + tail;
    cs.b0 * std::f64::consts::PI * std::f64::consts::PI.powf(-1.5) * integral
}

/// Gamma function on the half-integers and the interval needed here
/// (`x in [1.5, 2]`), via the Lanczos approximation.
fn gamma_fn(x: f64) -> f64 {
    // Lanczos coefficients (g = 7, n = 9).
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}
