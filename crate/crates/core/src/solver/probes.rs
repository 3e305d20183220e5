//! Numerical probes of the solvability machinery: velocity-tail decay of the
//! double collision sweep, its spatial smoothing modulus, coercivity of the
//! collision form, and discrete injectivity of the integral-equation
//! operator.

use super::LinearOperator;
use crate::collision::CollisionKernelTable;
use crate::error::{Error, Result};
use crate::field::PhaseSpaceField;
use crate::quad::{integrate_graded, GaussLegendre, Grading};
use crate::vec3::{self, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random sign field of unit weighted sup norm: `±exp(-alpha |zeta|^2)`.
pub fn random_unit_field(op: &LinearOperator, rng: &mut impl Rng) -> PhaseSpaceField {
    let alpha = op.config.alpha;
    let nv = op.velocity.len();
    let mut f = op.zero_field();
    for (i, v) in f.values.iter_mut().enumerate() {
        let s = op.velocity.speeds[i % nv];
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        *v = sign * (-alpha * s * s).exp();
    }
    f
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TailNormProbe {
    pub radii: Vec<f64>,
    /// Weighted sup of `K S K u` beyond each speed radius, maximized over the
    /// random batch.
    pub estimates: Vec<f64>,
    /// Least-squares slope of `ln(estimate)` against `ln(1 + R)` over the
    /// nonzero estimates.
    pub slope: f64,
}

/// Estimates the velocity-tail decay of the double sweep `K S K`.
pub fn tail_norm_probe(
    op: &LinearOperator,
    radii: &[f64],
    batch: usize,
    seed: u64,
) -> TailNormProbe {
    let alpha = op.config.alpha;
    let nv = op.velocity.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = vec![0.0f64; radii.len()];
    for _ in 0..batch {
        let u = random_unit_field(op, &mut rng);
        let y = op.apply_k_field(&op.apply_s_field(&op.apply_k_field(&u)));
        for (ri, r) in radii.iter().enumerate() {
            let mut sup: f64 = 0.0;
            for (i, v) in y.values.iter().enumerate() {
                let s = op.velocity.speeds[i % nv];
                if s > *r {
                    sup = sup.max(v.abs() * (alpha * s * s).exp());
                }
            }
            estimates[ri] = estimates[ri].max(sup);
        }
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&estimates)
        .filter(|(_, e)| **e > 0.0)
        .map(|(r, e)| ((1.0 + r).ln(), e.ln()))
        .collect();
    TailNormProbe {
        radii: radii.to_vec(),
        estimates,
        slope: least_squares_slope(&pts),
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SmoothingProbe {
    /// Dyadic exponents `k` (separation `2^-k`).
    pub scales: Vec<u32>,
    /// Max over sampled pairs of
    /// `sup_zeta |G(x) - G(y)| e^{alpha |zeta|^2} / (|x-y| (1 + |ln |x-y||))`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `ratio / mean(ratio)` against `k`: a flat
    /// profile means the log-Lipschitz modulus captures the smoothing.
    pub normalized_slope: f64,
}

/// Modulus-of-continuity probe for `G = K S K f`.
///
/// Pairs are stratified in boundary distance; at each dyadic scale half the
/// pairs sit within a few separations of the boundary, where the modulus is
/// expected to be saturated.
pub fn smoothing_probe(
    op: &LinearOperator,
    f: &PhaseSpaceField,
    scales: std::ops::RangeInclusive<u32>,
    pairs_per_scale: usize,
    seed: u64,
) -> SmoothingProbe {
    let alpha = op.config.alpha;
    let kf = op.apply_k_field(f);
    let nv = op.velocity.len();
    let apply = op.table.apply_matrix();
    let ray_rule = GaussLegendre::new(op.config.ray_order);

    // S K f at an arbitrary point, per velocity node, then the outer K.
    let g_at = |x: Vec3| -> Vec<f64> {
        let mut skf = vec![0.0; nv];
        for (iv, slot) in skf.iter_mut().enumerate() {
            let zeta = op.velocity.nodes[iv];
            if let Ok(exit) = op.dom.exit_data(x, zeta) {
                let nu = op.table.nu[iv];
                *slot = integrate_graded(
                    &ray_rule,
                    0.0,
                    exit.tau_minus,
                    op.config.ray_panels,
                    Grading::Right,
                    |s| (-nu * s).exp() * kf.eval_spatial(vec3::axpy(-s, zeta, x), iv),
                );
            }
        }
        (0..nv)
            .map(|i| {
                apply[i * nv..(i + 1) * nv]
                    .iter()
                    .zip(&skf)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    };

    let ks: Vec<u32> = scales.collect();
    let ratios: Vec<f64> = ks
        .par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((*k as u64) << 32));
            let delta = 0.5f64.powi(*k as i32) * op.dom.diameter();
            let mut worst: f64 = 0.0;
            for p in 0..pairs_per_scale {
                let near_boundary = p % 2 == 0;
                let (x, y) = match sample_pair(op, &mut rng, delta, near_boundary) {
                    Some(pair) => pair,
                    None => continue,
                };
                let gx = g_at(x);
                let gy = g_at(y);
                let mut sup: f64 = 0.0;
                for i in 0..nv {
                    let s = op.velocity.speeds[i];
                    sup = sup.max((gx[i] - gy[i]).abs() * (alpha * s * s).exp());
                }
                let d = vec3::dist(x, y);
                worst = worst.max(sup / (d * (1.0 + d.ln().abs())));
            }
            worst
        })
        .collect();

    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(&ratios)
        .map(|(k, r)| (*k as f64, r / mean.max(1e-300)))
        .collect();
    SmoothingProbe {
        scales: ks,
        ratios,
        normalized_slope: least_squares_slope(&pts),
    }
}

fn sample_pair(
    op: &LinearOperator,
    rng: &mut impl Rng,
    delta: f64,
    near_boundary: bool,
) -> Option<(Vec3, Vec3)> {
    for _ in 0..200 {
        let x = if near_boundary {
            // Pull an interior sample toward the boundary until its distance
            // is comparable to the separation.
            let raw = op.dom.sample_interior(rng);
            let c = op.dom.center();
            let dir = vec3::normalize(vec3::sub(raw, c));
            let exit = op.dom.exit_data(c, vec3::scale(-1.0, dir)).ok()?;
            let target = delta * rng.gen_range(0.5..4.0);
            vec3::axpy(-(target), dir, exit.q)
        } else {
            op.dom.sample_interior(rng)
        };
        if !op.dom.is_strictly_interior(x) {
            continue;
        }
        let dir = random_direction(rng);
        let y = vec3::axpy(delta, dir, x);
        if op.dom.is_strictly_interior(y) {
            return Some((x, y));
        }
    }
    None
}

fn random_direction(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = vec3::norm(v);
        if n > 1e-3 && n <= 1.0 {
            return vec3::scale(1.0 / n, v);
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CoercivityProbe {
    /// `-<L f, f>` under the grid inner product.
    pub dirichlet: f64,
    /// `||(Id - P) f||^2` with `P` the projection onto the five collision
    /// invariants.
    pub defect: f64,
}

fn invariant_basis(table: &CollisionKernelTable) -> Vec<Vec<f64>> {
    let grid = &table.grid;
    (0..5)
        .map(|c| {
            grid.nodes
                .iter()
                .zip(&grid.half_maxwellian)
                .map(|(z, m)| match c {
                    0 => *m,
                    1..=3 => z[c - 1] * m,
                    _ => vec3::norm2(*z) * m,
                })
                .collect()
        })
        .collect()
}

fn grid_dot(table: &CollisionKernelTable, a: &[f64], b: &[f64]) -> f64 {
    table
        .grid
        .weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

/// Orthogonal projection coefficients onto the invariant span, via the 5x5
/// Gram system. Errors out when the Gram matrix is ill conditioned.
fn invariant_projection(table: &CollisionKernelTable, f: &[f64]) -> Result<Vec<f64>> {
    let basis = invariant_basis(table);
    let mut gram = nalgebra::SMatrix::<f64, 5, 5>::zeros();
    let mut rhs = nalgebra::SVector::<f64, 5>::zeros();
    for i in 0..5 {
        for j in 0..5 {
            gram[(i, j)] = grid_dot(table, &basis[i], &basis[j]);
        }
        rhs[i] = grid_dot(table, &basis[i], f);
    }
    let eig = gram.symmetric_eigenvalues();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in eig.iter() {
        lo = lo.min(e.abs());
        hi = hi.max(e.abs());
    }
    let condition = hi / lo.max(1e-300);
    if condition > 1e8 {
        return Err(Error::Basis { condition });
    }
    let coeff = gram
        .cholesky()
        .ok_or(Error::Basis { condition })?
        .solve(&rhs);
    let n = f.len();
    let mut proj = vec![0.0; n];
    for (c, b) in coeff.iter().zip(&basis) {
        for i in 0..n {
            proj[i] += c * b[i];
        }
    }
    Ok(proj)
}

/// Random velocity-indexed noise with Gaussian decay `e^{-|zeta|^2/2}`:
/// the decaying class the coercivity estimate addresses. Raw nodal noise
/// without decay is dominated by quadrature noise at the truncation edge and
/// does not represent any square-integrable perturbation.
pub fn random_decayed_velocity_field(
    table: &CollisionKernelTable,
    rng: &mut impl Rng,
) -> Vec<f64> {
    table
        .grid
        .half_maxwellian
        .iter()
        .map(|m| m * rng.gen_range(-1.0..1.0))
        .collect()
}

/// Removes the invariant components of a velocity-indexed vector.
pub fn project_out_invariants(table: &CollisionKernelTable, f: &[f64]) -> Result<Vec<f64>> {
    let proj = invariant_projection(table, f)?;
    Ok(f.iter().zip(&proj).map(|(a, b)| a - b).collect())
}

/// Dirichlet form and invariant defect of a velocity-indexed vector.
pub fn coercivity_probe(table: &CollisionKernelTable, f: &[f64]) -> Result<CoercivityProbe> {
    table.grid.check_len(f)?;
    let kf = crate::collision::apply_k(table, f)?;
    // -<Lf, f> = <nu f, f> - <K f, f>.
    let nu_part: f64 = table
        .grid
        .weights
        .iter()
        .zip(table.nu.iter().zip(f))
        .map(|(w, (nu, x))| w * nu * x * x)
        .sum();
    let k_part = grid_dot(table, &kf, f);
    let proj = invariant_projection(table, f)?;
    let defect_vec: Vec<f64> = f.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let defect = grid_dot(table, &defect_vec, &defect_vec);
    Ok(CoercivityProbe {
        dirichlet: nu_part - k_part,
        defect,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InjectivityProbe {
    pub sigma_min: f64,
    pub unknowns: usize,
    pub iterations: usize,
}

/// Smallest singular value of the dense discretization of `Id - S K` by
/// inverse power iteration on the normal operator.
pub fn injectivity_probe(op: &LinearOperator, max_unknowns: usize) -> Result<InjectivityProbe> {
    let n = op.spatial.len() * op.velocity.len();
    if n > max_unknowns {
        return Err(Error::Config(format!(
            "dense probe needs {n} unknowns > cap {max_unknowns}; use a coarser grid"
        )));
    }
    // Assemble columns of Id - SK.
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = PhaseSpaceField::zeros(op.spatial.clone(), op.velocity.clone());
            e.values[j] = 1.0;
            let sk = op.apply_sk(&e);
            let mut col: Vec<f64> = sk.values.iter().map(|v| -v).collect();
            col[j] += 1.0;
            col
        })
        .collect();
    let a = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| cols[j][i]);
    let normal = a.transpose() * &a;
    let chol = match normal.clone().cholesky() {
        Some(c) => c,
        None => {
            return Err(Error::ProbeInconclusive(
                "normal operator is numerically singular".into(),
            ))
        }
    };
    let mut v = nalgebra::DVector::<f64>::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda_prev = 0.0;
    for it in 1..=200 {
        let w = chol.solve(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::ProbeInconclusive("inverse iteration collapsed".into()));
        }
        v = w / norm;
        // Rayleigh quotient of the normal operator at the current iterate.
        let lambda = (v.transpose() * &normal * &v)[(0, 0)];
        if it > 3 && (lambda - lambda_prev).abs() <= 1e-10 * lambda.abs() {
            return Ok(InjectivityProbe {
                sigma_min: lambda.max(0.0).sqrt(),
                unknowns: n,
                iterations: it,
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::ProbeInconclusive(
        "inverse power iteration did not settle in 200 steps".into(),
    ))
}
