//! Named check suites behind the verification scenarios.
//!
//! Each check compares an observed quantity against a bound or fits a
//! constant and tests its stability; outcomes carry a stable anchor string so
//! report entries are traceable to the estimate they probe.

use crate::collision::{
    self, assemble_kernel_table, collision_frequency, e_delta, e_delta_factored, gamma_bilinear,
    kernel_k, post_collision, sigma_post_collision, sphere_min_integral, CollisionKernelTable,
    CrossSection, SigmaRule, VelocityGrid,
};
use crate::error::Result;
use crate::geometry::{ray_distance_integral, tau_minus_grad_zeta_fd, DomainGeometry};
use crate::transport::{apply_s, ConstNu};
use crate::vec3::{self, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Stable identifier of the estimate the check probes.
    pub anchor: String,
    pub observed: f64,
    /// Bound the observation is compared against, when one exists;
    /// fitted constants are reported with `bound: None`.
    pub bound: Option<f64>,
    pub pass: bool,
    pub details: String,
}

impl CheckOutcome {
    fn bounded(name: &str, anchor: &str, observed: f64, bound: f64, details: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound: Some(bound),
            pass: observed <= bound,
            details,
        }
    }

    fn fitted(name: &str, anchor: &str, observed: f64, details: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound: None,
            pass: observed.is_finite(),
            details,
        }
    }
}

pub fn all_passed(checks: &[CheckOutcome]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn random_velocity(rng: &mut impl Rng, scale: f64) -> Vec3 {
    loop {
        let z: Vec3 = [
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        ];
        if vec3::norm(z) >= crate::regularity::SPEED_FLOOR {
            return z;
        }
    }
}

// ---------------------------------------------------------------------------
// Geometry suite
// ---------------------------------------------------------------------------

/// Exit-geometry inequality suite on random samples of one domain.
pub fn geometry_suite(dom: &DomainGeometry, samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let slack = 1.0 + 1e-9;

    // Two-point Lipschitz bounds for the exit point and exit time.
    let mut q_violations = 0usize;
    let mut tau_violations = 0usize;
    for _ in 0..samples {
        let x = dom.sample_interior(&mut rng);
        let y = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 3.0);
        let (ex, ey) = (dom.exit_data(x, zeta)?, dom.exit_data(y, zeta)?);
        let n_min = ex.n_cos.min(ey.n_cos);
        let sep = vec3::dist(x, y);
        if sep < 1e-12 {
            continue;
        }
        if vec3::dist(ex.q, ey.q) > slack * sep / n_min {
            q_violations += 1;
        }
        let speed = vec3::norm(zeta);
        if (ex.tau_minus - ey.tau_minus).abs() > slack * 2.0 * sep / (n_min * speed) {
            tau_violations += 1;
        }
    }
    checks.push(CheckOutcome::bounded(
        "exit-point-lipschitz",
        "exit-point-two-point-bound",
        q_violations as f64,
        0.0,
        format!("violations over {samples} samples"),
    ));
    checks.push(CheckOutcome::bounded(
        "exit-time-lipschitz",
        "exit-time-two-point-bound",
        tau_violations as f64,
        0.0,
        format!("violations over {samples} samples"),
    ));

    // Curvature lower bound d_x^{1/2} <= C N(x, zeta): fitted constant,
    // stable under a 10x larger sample.
    let fit_curvature = |rng: &mut ChaCha8Rng, n: usize| -> Result<f64> {
        let mut c: f64 = 0.0;
        for _ in 0..n {
            let x = dom.sample_interior(rng);
            let zeta = random_velocity(rng, 3.0);
            let e = dom.exit_data(x, zeta)?;
            c = c.max(dom.boundary_distance(x)?.sqrt() / e.n_cos);
        }
        Ok(c)
    };
    let c_small = fit_curvature(&mut rng, samples / 10)?;
    let c_large = fit_curvature(&mut rng, samples)?;
    let drift = (c_large / c_small - 1.0).abs();
    checks.push(CheckOutcome {
        name: "curvature-normal-bound".into(),
        anchor: "distance-sqrt-vs-normal-cosine".into(),
        observed: c_large,
        bound: None,
        pass: drift <= 0.10,
        details: format!("fitted C = {c_large:.4}, drift {drift:.3} under 10x samples"),
    });

    // Chord bound |x - q(x, -zeta)| <= C N(x, zeta) on the incoming set.
    let fit_chord = |rng: &mut ChaCha8Rng, n: usize| -> Result<f64> {
        let mut c: f64 = 0.0;
        let mut kept = 0usize;
        while kept < n {
            let (y, normal) = dom.sample_boundary(rng);
            let zeta = random_velocity(rng, 3.0);
            if vec3::dot(normal, zeta) >= -1e-9 {
                continue;
            }
            kept += 1;
            let chord = dom.chord_from_boundary(y, zeta)? * vec3::norm(zeta);
            let n_cos = vec3::dot(normal, zeta).abs() / vec3::norm(zeta);
            c = c.max(chord / n_cos);
        }
        Ok(c)
    };
    let c_small = fit_chord(&mut rng, samples / 10)?;
    let c_large = fit_chord(&mut rng, samples)?;
    let drift = (c_large / c_small - 1.0).abs();
    checks.push(CheckOutcome {
        name: "incoming-chord-bound".into(),
        anchor: "chord-vs-normal-cosine".into(),
        observed: c_large,
        bound: None,
        pass: drift <= 0.10,
        details: format!("fitted C = {c_large:.4}, drift {drift:.3} under 10x samples"),
    });

    // Interpolation monotonicity of the boundary distance and normal cosine.
    let mut d_violations = 0usize;
    let mut n_violations = 0usize;
    for _ in 0..samples / 4 {
        let x = dom.sample_interior(&mut rng);
        let y = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 3.0);
        let d_pair = dom.boundary_distance(x)?.min(dom.boundary_distance(y)?);
        let n_pair = dom.n_cos(x, zeta)?.min(dom.n_cos(y, zeta)?);
        for k in 1..10 {
            let t = k as f64 / 10.0;
            let xt = vec3::axpy(t, vec3::sub(y, x), x);
            if dom.boundary_distance(xt)? < d_pair - 1e-10 {
                d_violations += 1;
            }
            if dom.n_cos(xt, zeta)? < n_pair - 1e-10 {
                n_violations += 1;
            }
        }
    }
    checks.push(CheckOutcome::bounded(
        "distance-interpolation-monotone",
        "segment-distance-lower-bound",
        d_violations as f64,
        0.0,
        format!("violations over a 9-point segment grid, {} pairs", samples / 4),
    ));
    checks.push(CheckOutcome::bounded(
        "normal-cosine-interpolation-monotone",
        "segment-normal-cosine-lower-bound",
        n_violations as f64,
        0.0,
        format!("violations over a 9-point segment grid, {} pairs", samples / 4),
    ));

    // Line integrals of inverse powers of the boundary distance.
    let mut c_eps: f64 = 0.0;
    for _ in 0..64 {
        let x = dom.sample_interior(&mut rng);
        let dir = vec3::normalize(random_velocity(&mut rng, 1.0));
        let val = ray_distance_integral(dom, x, dir, 0.5 - 0.05, 1e-6)?;
        c_eps = c_eps.max(val);
    }
    checks.push(CheckOutcome::fitted(
        "ray-inverse-distance-integral",
        "line-integral-inverse-sqrt-distance",
        c_eps,
        "max over 64 random rays of the graded line integral, exponent 0.45".into(),
    ));

    // Velocity gradient of the exit time against its geometric bound.
    let mut grad_violations = 0usize;
    let mut tested = 0usize;
    for _ in 0..samples / 10 {
        let x = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 2.0);
        let e = dom.exit_data(x, zeta)?;
        if e.n_cos < 0.05 {
            continue; // finite differences are unreliable in grazing geometry
        }
        tested += 1;
        let g = tau_minus_grad_zeta_fd(dom, x, zeta)?;
        let bound = e.tau_minus / (e.n_cos * vec3::norm(zeta));
        if vec3::norm(g) > bound * 1.001 + 1e-8 {
            grad_violations += 1;
        }
    }
    checks.push(CheckOutcome::bounded(
        "exit-time-velocity-gradient",
        "exit-time-gradient-bound",
        grad_violations as f64,
        0.0,
        format!("violations over {tested} non-grazing samples"),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// Collision suite
// ---------------------------------------------------------------------------

/// Closed-form and structural checks of the collision machinery.
pub fn collision_suite(
    cs: &CrossSection,
    table: &CollisionKernelTable,
    pairs: usize,
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Sphere average of the inverse post-collision speed vs closed form.
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let z = random_velocity(&mut rng, 3.0);
        let zs = random_velocity(&mut rng, 3.0);
        if vec3::dist(z, zs) < 1e-3 {
            continue;
        }
        let r = sphere_min_integral(z, zs)?;
        worst = worst.max(((r.quadrature - r.closed_form) / r.closed_form).abs());
        worst = worst.max(((r.quadrature_star - r.closed_form) / r.closed_form).abs());
    }
    checks.push(CheckOutcome::bounded(
        "sphere-inverse-speed-average",
        "sphere-min-closed-form",
        worst,
        1e-6,
        format!("max relative deviation over {pairs} pairs, both outgoing branches"),
    ));

    // Gaussian comparison factor: direct vs factored evaluation.
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let z = random_velocity(&mut rng, 4.0);
        let zs = random_velocity(&mut rng, 4.0);
        if vec3::dist(z, zs) < 1e-6 {
            continue;
        }
        let d = e_delta(z, zs, 0.25)?;
        let f = e_delta_factored(z, zs, 0.25, 0.25)?;
        worst = worst.max((d - f).abs() / d.max(1e-300));
    }
    checks.push(CheckOutcome::bounded(
        "gaussian-comparison-factorization",
        "comparison-factor-identity",
        worst,
        1e-12,
        "max relative deviation over 1e5 samples, delta = a = 0.25".into(),
    ));

    // Momentum and energy conservation of both deflection maps.
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let z = random_velocity(&mut rng, 3.0);
        let zs = random_velocity(&mut rng, 3.0);
        if vec3::dist(z, zs) < 1e-6 {
            continue;
        }
        let scale = 1.0 + vec3::norm2(z) + vec3::norm2(zs);
        let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let (zp, zsp) = post_collision(z, zs, theta, phi, None)?;
        let dp = vec3::dist(vec3::add(zp, zsp), vec3::add(z, zs));
        let de = (vec3::norm2(zp) + vec3::norm2(zsp) - vec3::norm2(z) - vec3::norm2(zs)).abs();
        worst = worst.max(dp / scale).max(de / scale);
        let mu = rng.gen_range(-1.0f64..1.0);
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let sigma = [s * phi.cos(), s * phi.sin(), mu];
        let (zp, zsp) = sigma_post_collision(z, zs, sigma)?;
        let dp = vec3::dist(vec3::add(zp, zsp), vec3::add(z, zs));
        let de = (vec3::norm2(zp) + vec3::norm2(zsp) - vec3::norm2(z) - vec3::norm2(zs)).abs();
        worst = worst.max(dp / scale).max(de / scale);
    }
    checks.push(CheckOutcome::bounded(
        "collision-conservation",
        "momentum-energy-conservation",
        worst,
        1e-12,
        "max relative defect over 1e5 samples of both maps".into(),
    ));

    // The quadratic form annihilates half-Maxwellian inputs.
    let grid = &table.grid;
    let c = 1.0;
    let h: Vec<f64> = grid.half_maxwellian.iter().map(|m| c * m).collect();
    let out = gamma_bilinear(cs, grid, &h, &h, &SigmaRule::default())?;
    let sup = out
        .values
        .iter()
        .zip(&grid.speeds)
        .map(|(v, s)| v.abs() * (0.25 * s * s).exp())
        .fold(0.0f64, f64::max);
    checks.push(CheckOutcome::bounded(
        "quadratic-form-equilibrium-annihilation",
        "bilinear-form-maxwellian-zero",
        sup,
        1e-5 * c * c,
        "weighted sup of Gamma(c m, c m) relative to c^2".into(),
    ));

    // Kernel symmetry on the assembled table.
    checks.push(CheckOutcome::bounded(
        "kernel-symmetry",
        "kernel-symmetric",
        table.assembly.max_asymmetry_rel,
        1e-6,
        "max |k_ij - k_ji| / (1 + |k_ij|) over the full table".into(),
    ));

    // Envelope bound |k| |z - z_*| / E_delta <= C.
    let n = table.n();
    let mut c_env: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let k = table.kernel_value(i, j);
            if k == 0.0 {
                continue;
            }
            let w = vec3::dist(grid.nodes[i], grid.nodes[j]);
            let e = e_delta(grid.nodes[i], grid.nodes[j], 0.25)?;
            c_env = c_env.max(k.abs() * w / e.max(1e-300));
        }
    }
    checks.push(CheckOutcome::fitted(
        "kernel-envelope-constant",
        "kernel-envelope-bound",
        c_env,
        "fitted C with delta = 0.25 over all table pairs".into(),
    ));

    // Collision frequency closed forms.
    let maxwell = CrossSection::new(cs.b0, 0.0)?;
    let mut worst: f64 = 0.0;
    for speed in [0.0, 0.5, 1.0, 2.5, 5.0] {
        let nu = collision_frequency(&maxwell, speed);
        worst = worst.max((nu - std::f64::consts::PI * cs.b0).abs() / (std::f64::consts::PI * cs.b0));
    }
    checks.push(CheckOutcome::bounded(
        "frequency-maxwell-molecules",
        "frequency-constant-closed-form",
        worst,
        1e-8,
        "relative deviation of nu from pi B0 at gamma = 0".into(),
    ));
    let hard = CrossSection::hard_sphere(cs.b0);
    let nu0 = collision_frequency(&hard, 0.0);
    let want = 2.0 * std::f64::consts::PI.sqrt() * cs.b0;
    checks.push(CheckOutcome::bounded(
        "frequency-hard-sphere-at-rest",
        "frequency-rest-closed-form",
        ((nu0 - want) / want).abs(),
        1e-6,
        "relative deviation of nu(0) from 2 sqrt(pi) B0 at gamma = 1".into(),
    ));

    // Frequency envelope nu0 <= nu <= nu1 (1 + |zeta|): fitted envelope.
    let n_ang = grid.n_angular();
    let mut nu_lo = f64::INFINITY;
    let mut nu_hi: f64 = 0.0;
    for (ir, r) in grid.radial_nodes.iter().enumerate() {
        let nu = table.nu[ir * n_ang];
        nu_lo = nu_lo.min(nu);
        nu_hi = nu_hi.max(nu / (1.0 + r));
    }
    checks.push(CheckOutcome::fitted(
        "frequency-envelope",
        "frequency-growth-envelope",
        nu_hi,
        format!("fitted nu0 = {nu_lo:.4}, nu1 = {nu_hi:.4} on the grid shells"),
    ));

    // Weighted kernel row sums: sum_j w_j (1+|z_j|)/|z_j|^sigma |k_ij| e^{-a|z_j|^2}
    // <= C e^{-a |z_i|^2} with a = 0.25.
    let a = 0.25;
    for sigma in [0.0, 0.5, 1.0] {
        let mut c_fit: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let s = grid.speeds[j];
                acc += grid.weights[j] * (1.0 + s) / s.powf(sigma)
                    * table.kernel_value(i, j).abs()
                    * (-a * s * s).exp();
            }
            let si = grid.speeds[i];
            c_fit = c_fit.max(acc * (a * si * si).exp());
        }
        checks.push(CheckOutcome::fitted(
            &format!("weighted-kernel-row-sum-sigma-{sigma}"),
            "kernel-weighted-integrability",
            c_fit,
            format!("fitted C_a, a = {a}, small-speed exponent sigma = {sigma}"),
        ));
    }

    // Kernel gradient envelope by central differences.
    let mut c_grad: f64 = 0.0;
    for _ in 0..2000 {
        let z = random_velocity(&mut rng, 3.0);
        let zs = random_velocity(&mut rng, 3.0);
        let w = vec3::dist(z, zs);
        if w < 0.2 {
            continue;
        }
        let h = 1e-5 * (1.0 + vec3::norm(z));
        let mut g2 = 0.0;
        for k in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let dk = (kernel_k(cs, zp, zs)? - kernel_k(cs, zm, zs)?) / (2.0 * h);
            g2 += dk * dk;
        }
        let envelope =
            (1.0 + vec3::norm(z)) / (w * w) * e_delta(z, zs, 0.25)?;
        c_grad = c_grad.max(g2.sqrt() / envelope.max(1e-300));
    }
    checks.push(CheckOutcome::fitted(
        "kernel-gradient-envelope",
        "kernel-gradient-bound",
        c_grad,
        "fitted C_delta over 2000 finite-difference samples, delta = 0.25".into(),
    ));
    Ok(checks)
}

/// Angular Lipschitz bound of the tabulated operator and the weighted decay
/// of its application.
pub fn collision_operator_suite(
    table: &CollisionKernelTable,
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = &table.grid;
    let alpha = 0.25;
    let mut checks = Vec::new();

    // Decay of K h in the weighted norm with the extra (1 + |zeta|) factor.
    let h: Vec<f64> = grid
        .speeds
        .iter()
        .map(|s| (-alpha * s * s).exp() * rng.gen_range(-1.0f64..1.0))
        .collect();
    let h_norm = h
        .iter()
        .zip(&grid.speeds)
        .map(|(v, s)| v.abs() * (alpha * s * s).exp())
        .fold(0.0f64, f64::max);
    let kh = collision::apply_k(table, &h)?;
    let mut c_decay: f64 = 0.0;
    for (i, v) in kh.iter().enumerate() {
        let s = grid.speeds[i];
        c_decay = c_decay.max(v.abs() * (alpha * s * s).exp() * (1.0 + s) / h_norm);
    }
    checks.push(CheckOutcome::fitted(
        "collision-application-decay",
        "kernel-application-decay-bound",
        c_decay,
        "fitted C_a at a = 0.25 for a random decayed field".into(),
    ));

    // Angular Lipschitz bound of off-grid applications on spheres.
    let mut c_lip: f64 = 0.0;
    let smooth: Vec<f64> = grid
        .nodes
        .iter()
        .map(|z| (1.0 + 0.3 * z[0]) * (-alpha * vec3::norm2(*z)).exp())
        .collect();
    let smooth_norm = smooth
        .iter()
        .zip(&grid.speeds)
        .map(|(v, s)| v.abs() * (alpha * s * s).exp())
        .fold(0.0f64, f64::max);
    for _ in 0..60 {
        let rho = rng.gen_range(0.3..4.0);
        let d1 = vec3::normalize(random_velocity(&mut rng, 1.0));
        let d2 = vec3::normalize(random_velocity(&mut rng, 1.0));
        if vec3::dist(d1, d2) < 1e-3 {
            continue;
        }
        let k1 = collision::apply_k_at(table, &smooth, vec3::scale(rho, d1))?;
        let k2 = collision::apply_k_at(table, &smooth, vec3::scale(rho, d2))?;
        let ratio = (k1 - k2).abs()
            / (smooth_norm * rho * vec3::dist(d1, d2) * (-alpha * rho * rho).exp());
        c_lip = c_lip.max(ratio);
    }
    checks.push(CheckOutcome::fitted(
        "collision-application-angular-lipschitz",
        "kernel-application-angular-lipschitz",
        c_lip,
        "fitted C over 60 random sphere pairs".into(),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// Transport suite
// ---------------------------------------------------------------------------

/// Damped line-integral estimates along random characteristics.
pub fn transport_suite(dom: &DomainGeometry, samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let nu0 = 1.0;

    // S applied to a constant has the closed form (1 - e^{-nu tau}) / nu.
    let mut worst: f64 = 0.0;
    for _ in 0..samples.min(200) {
        let x = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 3.0);
        let exit = dom.exit_data(x, zeta)?;
        let want = (1.0 - (-nu0 * exit.tau_minus).exp()) / nu0;
        let got = apply_s(dom, &ConstNu(nu0), |_, _| 1.0, x, zeta, 1e-10)?;
        worst = worst.max((got - want).abs() / want.max(1e-12));
    }
    checks.push(CheckOutcome::bounded(
        "line-integral-constant-closed-form",
        "damped-line-integral-closed-form",
        worst,
        1e-8,
        "relative deviation over random characteristics".into(),
    ));

    // Decay: |S h| <= C ||h|| e^{-alpha |zeta|^2} for h in the source class.
    let alpha = 0.25;
    let mut c_decay: f64 = 0.0;
    for _ in 0..samples.min(400) {
        let x = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 5.0);
        let h = |_: Vec3, z: Vec3| (1.0 + vec3::norm(z)) * (-alpha * vec3::norm2(z)).exp();
        let got = apply_s(dom, &ConstNu(nu0), h, x, zeta, 1e-9)?;
        c_decay = c_decay.max(got.abs() * (alpha * vec3::norm2(zeta)).exp());
    }
    checks.push(CheckOutcome::fitted(
        "line-integral-decay-constant",
        "damped-line-integral-decay",
        c_decay,
        "fitted C for unit-norm source-class data".into(),
    ));

    // Exponential-difference bound between neighbouring exit times.
    for sigma in [0.5, 1.0] {
        let mut c_fit: f64 = 0.0;
        for _ in 0..samples.min(500) {
            let x = dom.sample_interior(&mut rng);
            let y = dom.sample_interior(&mut rng);
            let zeta = random_velocity(&mut rng, 3.0);
            let (ex, ey) = (dom.exit_data(x, zeta)?, dom.exit_data(y, zeta)?);
            let (lo, hi) = if ex.tau_minus <= ey.tau_minus {
                (ex.tau_minus, ey.tau_minus)
            } else {
                (ey.tau_minus, ex.tau_minus)
            };
            let integral = ((-nu0 * lo).exp() - (-nu0 * hi).exp()) / nu0;
            let n_min = ex.n_cos.min(ey.n_cos);
            let speed = vec3::norm(zeta);
            let rhs = vec3::dist(x, y).powf(sigma) / (speed.powf(sigma) * n_min);
            c_fit = c_fit.max(integral / rhs.max(1e-300));
        }
        checks.push(CheckOutcome::fitted(
            &format!("exit-time-exponential-difference-sigma-{sigma}"),
            "exponential-difference-bound",
            c_fit,
            format!("fitted C_sigma at sigma = {sigma}"),
        ));
    }

    // Weighted line bound: ∫ e^{-nu t} d^{-1/2} <= C |zeta|^{-sigma} d_x^{sigma-1}.
    let sigma = 0.75;
    let mut c_fit: f64 = 0.0;
    for _ in 0..samples.min(300) {
        let x = dom.sample_interior(&mut rng);
        let zeta = random_velocity(&mut rng, 3.0);
        let got = apply_s(
            dom,
            &ConstNu(nu0),
            |p, _| dom.boundary_distance(p).map(|d| d.powf(-0.5)).unwrap_or(0.0),
            x,
            zeta,
            1e-6,
        )?;
        let speed = vec3::norm(zeta);
        let dx = dom.boundary_distance(x)?;
        c_fit = c_fit.max(got * speed.powf(sigma) * dx.powf(1.0 - sigma));
    }
    checks.push(CheckOutcome::fitted(
        "weighted-line-integral-bound",
        "inverse-sqrt-distance-line-bound",
        c_fit,
        format!("fitted C_sigma at sigma = {sigma}"),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// Grid-certification helper used by the collision scenario
// ---------------------------------------------------------------------------

/// Compares the tabulated application on smooth test data across two angular
/// orders of the velocity grid; reports the relative disagreement.
pub fn angular_order_certification(
    cs: &CrossSection,
    coarse: &VelocityGrid,
    fine_n_mu: usize,
    fine_n_phi: usize,
) -> Result<CheckOutcome> {
    let fine = VelocityGrid::new(crate::collision::VelocityGridConfig {
        n_mu: fine_n_mu,
        n_phi: fine_n_phi,
        ..coarse.config.clone()
    })?;
    let table_c = assemble_kernel_table(cs, coarse)?;
    let table_f = assemble_kernel_table(cs, &fine)?;
    let test = |z: Vec3| (1.0 + 0.2 * z[0] + 0.1 * z[1] * z[2]) * (-0.3 * vec3::norm2(z)).exp();
    let hc: Vec<f64> = coarse.nodes.iter().map(|z| test(*z)).collect();
    let hf: Vec<f64> = fine.nodes.iter().map(|z| test(*z)).collect();
    let kc = collision::apply_k(&table_c, &hc)?;
    let kf = collision::apply_k(&table_f, &hf)?;
    // Compare on the coarse radial shells along the polar axis-free nodes by
    // interpolating the fine result at coarse nodes.
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for v in &kf {
        scale = scale.max(v.abs());
    }
    for (i, z) in coarse.nodes.iter().enumerate() {
        if let Some(fine_val) = fine.interpolate_weighted(&kf, *z) {
            worst = worst.max((kc[i] - fine_val).abs() / scale);
        }
    }
    Ok(CheckOutcome::fitted(
        "angular-order-certification",
        "kernel-quadrature-certification",
        worst,
        format!(
            "relative disagreement of K on smooth data, angular {}x{} vs {}x{}",
            coarse.config.n_mu, coarse.config.n_phi, fine_n_mu, fine_n_phi
        ),
    ))
}
