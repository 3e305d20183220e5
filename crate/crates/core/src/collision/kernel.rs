//! The linearized collision kernel `k(zeta, zeta_*)` and its tabulated
//! operator.
//!
//! The kernel splits into a gain part and a smooth cross-loss part,
//!
//! ```text
//! k = k_gain - k_loss,
//! k_loss(z, v) = pi B0 pi^{-3/2} e^{-(|z|^2+|v|^2)/2} |z - v|^gamma,
//! k_gain(z, v) = 2 B0 pi^{-3/2} (1/w) e^{-(w^2+s^2)/4} J_gamma(w, rho0),
//! ```
//!
//! where `w = |z - v|`, `s = (|z|^2 - |v|^2)/w`, `rho0` is the length of the
//! component of `z` orthogonal to `z - v`, and
//!
//! ```text
//! J_gamma(w, rho0) = ∫_{R^2} (w^2 + |u|^2)^{(gamma-1)/2} e^{-|u - p|^2} du,
//! |p| = rho0.
//! ```
//!
//! `J_gamma` is what remains of the deflection average once the post-collision
//! constraint is resolved on the plane orthogonal to `z - v`; for hard
//! spheres (`gamma = 1`) it collapses to `pi`, which is the closed-form fast
//! path. For `gamma < 1` the angular integral of the plane is a scaled
//! Bessel function and a single radial quadrature remains.
//!
//! Tabulated application: the kernel's `1/w` diagonal singularity is never
//! sampled. The table keeps a zero diagonal; the quadrature mass the excluded
//! diagonal cell would carry is restored by a symmetric rank-5 update of the
//! weighted operator that pins the five collision invariants
//! (`K psi = nu psi` for `psi` in the Maxwellian-mode span) exactly. The
//! update size and the pre-update residual are reported in the assembly
//! metadata.

use super::{collision_frequency, CrossSection, VelocityGrid};
use crate::error::{Error, Result};
use crate::quad::{i0_scaled, GaussLegendre};
use crate::vec3::{self, Vec3};
use rayon::prelude::*;

/// Plane integral `J_gamma(w, rho0)`; exact (`pi`) for hard spheres,
/// Bessel-weighted radial quadrature otherwise.
pub(crate) fn plane_integral(gamma: f64, w: f64, rho0: f64) -> f64 {
    if gamma >= 1.0 {
        return std::f64::consts::PI;
    }
    let power = 0.5 * (gamma - 1.0);
    // The azimuthal factor is 2 pi I0(2 rho rho0); in the scaled form the
    // Gaussian collapses to e^{-(rho - rho0)^2}.
    let integrand = |rho: f64| -> f64 {
        rho * (w * w + rho * rho).powf(power)
            * i0_scaled(2.0 * rho * rho0)
            * (-(rho - rho0) * (rho - rho0)).exp()
    };
    let lo = (rho0 - 8.5).max(0.0);
    let hi = rho0 + 8.5;
    // Panel breakpoints: the Gaussian bump around rho0 and, when the window
    // reaches the origin, the kink scale w of the algebraic factor.
    let mut breaks = vec![lo, hi, (rho0 - 2.0).max(lo), (rho0 + 2.0).min(hi), rho0];
    if lo == 0.0 {
        breaks.push(w.min(1.0));
        breaks.push((4.0 * w).min(2.0));
    }
    breaks.retain(|b| (lo..=hi).contains(b));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let rule = GaussLegendre::new(24);
    let mut acc = 0.0;
    for pair in breaks.windows(2) {
        acc += rule.integrate(pair[0], pair[1], integrand);
    }
    2.0 * std::f64::consts::PI * acc
}

fn pair_geometry(zeta: Vec3, zeta_star: Vec3) -> Result<(f64, f64, f64)> {
    let diff = vec3::sub(zeta, zeta_star);
    let w = vec3::norm(diff);
    let scale = vec3::norm(zeta).max(vec3::norm(zeta_star)).max(1.0);
    if w <= 1e-14 * scale {
        return Err(Error::DegenerateCollision);
    }
    let s = (vec3::norm2(zeta) - vec3::norm2(zeta_star)) / w;
    let along = vec3::dot(zeta, diff) / w;
    let rho0 = (vec3::norm2(zeta) - along * along).max(0.0).sqrt();
    Ok((w, s, rho0))
}

/// Gain part of the kernel.
pub fn kernel_k_gain(cs: &CrossSection, zeta: Vec3, zeta_star: Vec3) -> Result<f64> {
    let (w, s, rho0) = pair_geometry(zeta, zeta_star)?;
    let pref = 2.0 * cs.b0 * std::f64::consts::PI.powf(-1.5) / w;
    Ok(pref * (-(w * w + s * s) * 0.25).exp() * plane_integral(cs.gamma, w, rho0))
}

/// Smooth cross-loss part of the kernel.
pub fn kernel_k_loss(cs: &CrossSection, zeta: Vec3, zeta_star: Vec3) -> f64 {
    let w = vec3::dist(zeta, zeta_star);
    std::f64::consts::PI
        * std::f64::consts::PI.powf(-1.5)
        * cs.relative_speed_factor(w)
        * (-0.5 * (vec3::norm2(zeta) + vec3::norm2(zeta_star))).exp()
}

/// Full kernel value at distinct velocities.
pub fn kernel_k(cs: &CrossSection, zeta: Vec3, zeta_star: Vec3) -> Result<f64> {
    Ok(kernel_k_gain(cs, zeta, zeta_star)? - kernel_k_loss(cs, zeta, zeta_star))
}

/// Assembly metadata recorded with every table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct KernelAssembly {
    pub gamma: f64,
    pub b0: f64,
    pub cutoff: f64,
    pub radial_order: usize,
    pub n_mu: usize,
    pub n_phi: usize,
    /// max_ij |k_ij - k_ji| / (1 + |k_ij|), both sides computed independently.
    pub max_asymmetry_rel: f64,
    /// Worst relative residual of the five collision invariants before the
    /// conservation update.
    pub invariant_residual_raw: f64,
    /// Same residual after the update (machine-level).
    pub invariant_residual_corrected: f64,
    /// Max-norm of the conservation update relative to the operator.
    pub correction_rel: f64,
}

/// Dense kernel table with collision frequencies and the ready-to-use
/// application operator.
#[derive(Debug, Clone)]
pub struct CollisionKernelTable {
    pub grid: VelocityGrid,
    pub cross_section: CrossSection,
    /// Collision frequency at each node.
    pub nu: Vec<f64>,
    /// Raw kernel values `k(zeta_i, zeta_j)`, zero diagonal, no quadrature
    /// weights baked in.
    kmat: Vec<f64>,
    /// Application operator rows: `(K h)_i = sum_j apply[i*n+j] h_j`.
    apply: Vec<f64>,
    pub assembly: KernelAssembly,
}

impl CollisionKernelTable {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn kernel_value(&self, i: usize, j: usize) -> f64 {
        self.kmat[i * self.n() + j]
    }

    pub fn kmat(&self) -> &[f64] {
        &self.kmat
    }

    pub fn apply_matrix(&self) -> &[f64] {
        &self.apply
    }

    /// Raw parts for persistence.
    pub fn into_parts(self) -> (VelocityGrid, CrossSection, Vec<f64>, Vec<f64>, Vec<f64>, KernelAssembly) {
        (self.grid, self.cross_section, self.nu, self.kmat, self.apply, self.assembly)
    }

    /// Rebuilds a table from persisted parts, checking dimensions.
    pub fn from_parts(
        grid: VelocityGrid,
        cross_section: CrossSection,
        nu: Vec<f64>,
        kmat: Vec<f64>,
        apply: Vec<f64>,
        assembly: KernelAssembly,
    ) -> Result<Self> {
        let n = grid.len();
        if nu.len() != n || kmat.len() != n * n || apply.len() != n * n {
            return Err(Error::Grid(format!(
                "kernel table parts do not match grid size {n}"
            )));
        }
        Ok(Self {
            grid,
            cross_section,
            nu,
            kmat,
            apply,
            assembly,
        })
    }
}

/// Assembles the dense table on a velocity grid: kernel values for all pairs,
/// collision frequencies per node, and the corrected application operator.
pub fn assemble_kernel_table(cs: &CrossSection, grid: &VelocityGrid) -> Result<CollisionKernelTable> {
    cs.validate()?;
    let n = grid.len();
    let n_ang = grid.n_angular();

    // Collision frequency depends on speed only: one quadrature per shell.
    let nu_radial: Vec<f64> = grid
        .radial_nodes
        .par_iter()
        .map(|r| collision_frequency(cs, *r))
        .collect();
    let nu: Vec<f64> = (0..n).map(|i| nu_radial[i / n_ang]).collect();

    // Kernel values; both triangles computed independently so the symmetry
    // defect reported below is a real check of the evaluation.
    let mut kmat = vec![0.0f64; n * n];
    kmat.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let zi = grid.nodes[i];
        for (j, slot) in row.iter_mut().enumerate() {
            if i != j {
                *slot = kernel_k(cs, zi, grid.nodes[j]).expect("distinct grid nodes");
            }
        }
    });
    let max_asymmetry_rel = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut m: f64 = 0.0;
            for j in (i + 1)..n {
                let a = kmat[i * n + j];
                let b = kmat[j * n + i];
                m = m.max((a - b).abs() / (1.0 + a.abs()));
            }
            m
        })
        .reduce(|| 0.0, f64::max);

    // Application operator: plain weighted quadrature with zero diagonal;
    // conservation is restored by the rank-5 update below.
    let m = &grid.half_maxwellian;
    let w = &grid.weights;
    let mut apply = vec![0.0f64; n * n];
    apply.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            if j != i {
                row[j] = w[j] * kmat[i * n + j];
            }
        }
    });

    // Collision invariants in nodal form.
    let psis: Vec<Vec<f64>> = (0..5)
        .map(|c| {
            (0..n)
                .map(|i| match c {
                    0 => m[i],
                    1..=3 => grid.nodes[i][c - 1] * m[i],
                    _ => vec3::norm2(grid.nodes[i]) * m[i],
                })
                .collect()
        })
        .collect();

    let matvec = |mat: &[f64], x: &[f64]| -> Vec<f64> {
        mat.par_chunks(n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    };

    let residual_rel = |mat: &[f64]| -> f64 {
        psis.iter()
            .map(|psi| {
                let got = matvec(mat, psi);
                let mut worst: f64 = 0.0;
                let scale = psi
                    .iter()
                    .zip(&nu)
                    .map(|(p, nu_i)| (p * nu_i).abs())
                    .fold(0.0f64, f64::max);
                for i in 0..n {
                    worst = worst.max((got[i] - nu[i] * psi[i]).abs());
                }
                worst / scale
            })
            .fold(0.0f64, f64::max)
    };
    let invariant_residual_raw = residual_rel(&apply);

    // Symmetric rank-5 conservation update in sqrt-weight coordinates.
    let sqw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let ys: Vec<Vec<f64>> = psis
        .iter()
        .map(|psi| psi.iter().zip(&sqw).map(|(p, s)| p * s).collect())
        .collect();
    // Residual columns r^m = D nu psi^m - D (A psi^m).
    let rs: Vec<Vec<f64>> = psis
        .iter()
        .map(|psi| {
            let a_psi = matvec(&apply, psi);
            (0..n).map(|i| sqw[i] * (nu[i] * psi[i] - a_psi[i])).collect()
        })
        .collect();
    let mut gram = nalgebra::SMatrix::<f64, 5, 5>::zeros();
    let mut m5 = nalgebra::SMatrix::<f64, 5, 5>::zeros();
    for a in 0..5 {
        for b in 0..5 {
            gram[(a, b)] = dot_slice(&ys[a], &ys[b]);
            m5[(a, b)] = dot_slice(&ys[a], &rs[b]);
        }
    }
    m5 = 0.5 * (m5 + m5.transpose());
    // Pseudo-inverse: degenerate grids can make invariant directions
    // numerically dependent; those directions are dropped.
    let gram_inv = {
        let eig = gram.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let mut inv = nalgebra::SMatrix::<f64, 5, 5>::zeros();
        for k in 0..5 {
            let l = eig.eigenvalues[k];
            if l > 1e-12 * lmax {
                let v = eig.eigenvectors.column(k);
                inv += v * v.transpose() / l;
            }
        }
        inv
    };
    // P = R G^{-1}, Q = Y G^{-1}, and the mixed 5x5 block Q M5.
    let mut ps = vec![vec![0.0f64; n]; 5];
    let mut qs = vec![vec![0.0f64; n]; 5];
    for mcol in 0..5 {
        for k in 0..5 {
            let g = gram_inv[(k, mcol)];
            if g != 0.0 {
                for i in 0..n {
                    ps[mcol][i] += rs[k][i] * g;
                    qs[mcol][i] += ys[k][i] * g;
                }
            }
        }
    }
    let correction_scale: f64 = apply.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max);
    let correction_rel = {
        let max_delta = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut qm = [0.0f64; 5];
                for nn in 0..5 {
                    for mm in 0..5 {
                        qm[nn] += qs[mm][i] * m5[(mm, nn)];
                    }
                }
                let mut worst: f64 = 0.0;
                for j in 0..n {
                    let mut d = 0.0;
                    for mm in 0..5 {
                        d += ps[mm][i] * ys[mm][j] + qs[mm][i] * rs[mm][j] - qm[mm] * qs[mm][j];
                    }
                    worst = worst.max(d.abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        max_delta / correction_scale
    };
    apply.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let mut qm = [0.0f64; 5];
        for nn in 0..5 {
            for mm in 0..5 {
                qm[nn] += qs[mm][i] * m5[(mm, nn)];
            }
        }
        let si = sqw[i];
        for (j, slot) in row.iter_mut().enumerate() {
            let mut d = 0.0;
            for mm in 0..5 {
                d += ps[mm][i] * ys[mm][j] + qs[mm][i] * rs[mm][j] - qm[mm] * qs[mm][j];
            }
            *slot += d * sqw[j] / si;
        }
    });
    let invariant_residual_corrected = residual_rel(&apply);

    let assembly = KernelAssembly {
        gamma: cs.gamma,
        b0: cs.b0,
        cutoff: grid.config.cutoff,
        radial_order: grid.config.radial_order,
        n_mu: grid.config.n_mu,
        n_phi: grid.config.n_phi,
        max_asymmetry_rel,
        invariant_residual_raw,
        invariant_residual_corrected,
        correction_rel,
    };
    Ok(CollisionKernelTable {
        grid: grid.clone(),
        cross_section: *cs,
        nu,
        kmat,
        apply,
        assembly,
    })
}

fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies the tabulated operator to nodewise values.
pub fn apply_k(table: &CollisionKernelTable, h: &[f64]) -> Result<Vec<f64>> {
    table.grid.check_len(h)?;
    let n = table.n();
    Ok(table
        .apply
        .par_chunks(n)
        .map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

/// Evaluates `K h` at an arbitrary velocity (not necessarily a node) by the
/// plain quadrature sum. Queries should keep some distance from grid nodes:
/// the kernel is integrable-singular on the diagonal, so a query on top of a
/// node would see a spike.
pub fn apply_k_at(table: &CollisionKernelTable, h: &[f64], zeta: Vec3) -> Result<f64> {
    table.grid.check_len(h)?;
    let grid = &table.grid;
    let cs = &table.cross_section;
    let mut acc = 0.0;
    for j in 0..grid.len() {
        let kj = kernel_k(cs, zeta, grid.nodes[j])?;
        acc += grid.weights[j] * kj * h[j];
    }
    Ok(acc)
}
