//! Minimal 3-vector helpers on `[f64; 3]`.
//!
//! Kernel assembly evaluates these in very hot loops; everything is inlined
//! and allocation free.

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    norm2(a).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn axpy(s: f64, a: Vec3, b: Vec3) -> Vec3 {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2]]
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(1.0 / n, a)
}

/// Completes `u` (assumed unit) to a right-handed orthonormal basis `(u, e2, e3)`.
///
/// Deterministic: picks the coordinate axis least aligned with `u`.
pub fn orthonormal_complement(u: Vec3) -> (Vec3, Vec3) {
    let ax = [u[0].abs(), u[1].abs(), u[2].abs()];
    let pick = if ax[0] <= ax[1] && ax[0] <= ax[2] {
        [1.0, 0.0, 0.0]
    } else if ax[1] <= ax[2] {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e2 = normalize(cross(u, pick));
    let e3 = cross(u, e2);
    (e2, e3)
}
