//! Quadrature building blocks: Gauss–Legendre rules, graded adaptive panel
//! integration for boundary-singular line integrals, and the scaled modified
//! Bessel function used by the kernel reduction.

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on the Legendre
    /// polynomial, seeded with the Chebyshev estimate of the roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P'_n(x).
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

/// Which endpoint of the interval needs geometric panel grading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    None,
    /// Panels accumulate toward the right endpoint.
    Right,
    /// Panels accumulate toward both endpoints.
    Both,
}

/// Integrates `f` over `[a, b]` with `panels` geometrically graded panels and
/// a fixed-order rule per panel.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    grading: Grading,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    match grading {
        Grading::None => {
            let h = (b - a) / panels as f64;
            let mut acc = 0.0;
            for p in 0..panels {
                acc += rule.integrate(a + p as f64 * h, a + (p + 1) as f64 * h, &mut f);
            }
            acc
        }
        Grading::Right => graded_right(rule, a, b, panels, &mut f),
        Grading::Both => {
            let mid = 0.5 * (a + b);
            // Left half reflected so the grading hugs `a`.
            let mut reflected = |t: f64| f(a + mid - t);
            let left = graded_right(rule, a, mid, panels, &mut reflected);
            left + graded_right(rule, mid, b, panels, &mut f)
        }
    }
}

/// Geometric panels accumulating toward `b`. Grading stops once panels reach
/// floating-point resolution: refining further would evaluate the integrand
/// at the (possibly singular) endpoint itself.
fn graded_right(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    f: &mut dyn FnMut(f64) -> f64,
) -> f64 {
    let len = b - a;
    let min_len = 1e-13 * b.abs().max(a.abs()).max(1e-3);
    let mut acc = 0.0;
    let mut left = a;
    for p in 1..=panels {
        let tail = len * 0.5f64.powi(p as i32);
        let right = if p == panels || tail <= min_len {
            b
        } else {
            b - tail
        };
        acc += rule.integrate(left, right, &mut *f);
        if right == b {
            break;
        }
        left = right;
    }
    acc
}

/// Graded panel integration with doubling until two successive refinements
/// agree to `tol` (relative, with an absolute floor).
///
/// Geometric gradings saturate at floating-point resolution; when the
/// tolerance is still not met at saturation the integral is reported as
/// non-convergent rather than silently truncated.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    grading: Grading,
    mut f: F,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let min_len = 1e-13 * b.abs().max(a.abs()).max(1e-3);
    let saturation = match grading {
        Grading::None => usize::MAX,
        Grading::Right | Grading::Both => ((b - a) / min_len).log2().ceil().max(4.0) as usize,
    };
    let mut panels = 2;
    let mut prev = integrate_graded(rule, a, b, panels, grading, &mut f);
    let mut last_err = f64::INFINITY;
    for _ in 0..16 {
        panels *= 2;
        let next = integrate_graded(rule, a, b, panels, grading, &mut f);
        last_err = (next - prev).abs();
        if last_err <= tol * next.abs().max(1e-30) + tol * 1e-12 {
            return Ok(next);
        }
        prev = next;
        if panels >= saturation {
            break;
        }
    }
    Err(Error::Quadrature {
        estimate: last_err,
        tolerance: tol,
        panels,
    })
}

/// Product quadrature rule on the unit sphere: Gauss–Legendre in the polar
/// cosine times a uniform periodic rule in azimuth. Weights sum to `4*pi`;
/// the rule is exact for spherical harmonics of polar degree `< 2*n_mu` and
/// azimuthal order `< n_phi`.
pub fn sphere_rule(n_mu: usize, n_phi: usize) -> Vec<([f64; 3], f64)> {
    let gl = GaussLegendre::new(n_mu);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_mu * n_phi);
    for (mu, wmu) in gl.nodes.iter().zip(&gl.weights) {
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = dphi * (j as f64 + 0.5);
            out.push(([s * phi.cos(), s * phi.sin(), *mu], wmu * dphi));
        }
    }
    out
}

/// Scaled modified Bessel function `I_0(x) e^{-x}` for `x >= 0`.
///
/// Power series below the crossover (all terms positive, no cancellation),
/// asymptotic expansion above; relative accuracy is ~1e-11 or better on the
/// whole half line.
pub fn i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 20.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let inv = 1.0 / x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1u32..12 {
            let kf = k as f64;
            term *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) * inv / (8.0 * kf);
            sum += term;
            if term < sum * 1e-16 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}
