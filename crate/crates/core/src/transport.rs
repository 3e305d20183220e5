//! Free streaming along backward characteristics: the damped boundary-trace
//! operator `J`, the damped line integral `S`, and the phase-space
//! change-of-variables integrator.

use crate::collision::{collision_frequency, CrossSection, VelocityGrid};
use crate::error::Result;
use crate::field::PhaseSpaceField;
use crate::geometry::DomainGeometry;
use crate::quad::{integrate_adaptive, GaussLegendre, Grading};
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};

/// Collision-frequency provider; tests inject constants, production uses the
/// cross-section quadrature or tabulated per-shell values.
pub trait NuProvider: Sync {
    fn nu(&self, speed: f64) -> f64;
}

/// Constant collision frequency (closed-form reference cases).
#[derive(Debug, Clone, Copy)]
pub struct ConstNu(pub f64);

impl NuProvider for ConstNu {
    fn nu(&self, _speed: f64) -> f64 {
        self.0
    }
}

impl NuProvider for CrossSection {
    fn nu(&self, speed: f64) -> f64 {
        collision_frequency(self, speed)
    }
}

/// Collision frequency tabulated on a grid's radial shells, linear in speed
/// between shells. Exact at grid nodes, cheap inside hot loops.
#[derive(Debug, Clone)]
pub struct TabulatedNu {
    pub speeds: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedNu {
    pub fn from_table(table: &crate::collision::CollisionKernelTable) -> Self {
        let n_ang = table.grid.n_angular();
        let speeds = table.grid.radial_nodes.clone();
        let values = (0..speeds.len()).map(|ir| table.nu[ir * n_ang]).collect();
        Self { speeds, values }
    }
}

impl NuProvider for TabulatedNu {
    fn nu(&self, speed: f64) -> f64 {
        let s = &self.speeds;
        if speed <= s[0] {
            return self.values[0];
        }
        let last = s.len() - 1;
        if speed >= s[last] {
            return self.values[last];
        }
        let i = s.partition_point(|x| *x < speed).clamp(1, last);
        let t = (speed - s[i - 1]) / (s[i] - s[i - 1]);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// Built-in source families used for boundary data and volumetric sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SourceFamily {
    Constant { value: f64 },
    /// `amplitude * exp(-decay |zeta|^2)`.
    GaussianVelocity { amplitude: f64, decay: f64 },
    /// `amplitude * cos(k . x) * exp(-decay |zeta|^2)`.
    Separable {
        amplitude: f64,
        decay: f64,
        wavenumber: [f64; 3],
    },
}

impl SourceFamily {
    pub fn eval(&self, x: Vec3, zeta: Vec3) -> f64 {
        match self {
            SourceFamily::Constant { value } => *value,
            SourceFamily::GaussianVelocity { amplitude, decay } => {
                amplitude * (-decay * vec3::norm2(zeta)).exp()
            }
            SourceFamily::Separable {
                amplitude,
                decay,
                wavenumber,
            } => {
                amplitude * vec3::dot(*wavenumber, x).cos() * (-decay * vec3::norm2(zeta)).exp()
            }
        }
    }

    /// Scales the amplitude in place.
    pub fn rescale(&mut self, factor: f64) {
        match self {
            SourceFamily::Constant { value } => *value *= factor,
            SourceFamily::GaussianVelocity { amplitude, .. }
            | SourceFamily::Separable { amplitude, .. } => *amplitude *= factor,
        }
    }
}

/// Incoming boundary data `f0(X, zeta)` on the incoming set, with the
/// declared Gaussian decay rate of the norm it is measured in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySource {
    #[serde(flatten)]
    pub family: SourceFamily,
    pub alpha: f64,
}

impl BoundarySource {
    pub fn eval(&self, boundary_point: Vec3, zeta: Vec3) -> f64 {
        self.family.eval(boundary_point, zeta)
    }

    /// Sampled `sup |f0| e^{alpha |zeta|^2}` over boundary points and grid
    /// velocities.
    pub fn linf_alpha_norm<R: rand::Rng>(
        &self,
        dom: &DomainGeometry,
        grid: &VelocityGrid,
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let (y, _) = dom.sample_boundary(rng);
            for (z, s) in grid.nodes.iter().zip(&grid.speeds) {
                worst = worst.max(self.eval(y, *z).abs() * (self.alpha * s * s).exp());
            }
        }
        worst
    }

    /// Sampled Lipschitz-and-gradient norm: the sup norm plus the weighted
    /// tangential Lipschitz quotient plus the weighted velocity gradient
    /// (finite differences).
    pub fn b_alpha_tilde_norm<R: rand::Rng>(
        &self,
        dom: &DomainGeometry,
        grid: &VelocityGrid,
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let sup = self.linf_alpha_norm(dom, grid, samples, rng);
        let mut lip: f64 = 0.0;
        let mut grad: f64 = 0.0;
        for _ in 0..samples {
            let (y1, _) = dom.sample_boundary(rng);
            let (y2, _) = dom.sample_boundary(rng);
            let d = vec3::dist(y1, y2);
            for (z, s) in grid.nodes.iter().zip(&grid.speeds) {
                let w = (self.alpha * s * s).exp();
                if d > 1e-9 {
                    lip = lip.max((self.eval(y1, *z) - self.eval(y2, *z)).abs() / d * w);
                }
                let h = 1e-5 * (1.0 + s);
                let mut g2 = 0.0;
                for k in 0..3 {
                    let mut zp = *z;
                    let mut zm = *z;
                    zp[k] += h;
                    zm[k] -= h;
                    let dk = (self.eval(y1, zp) - self.eval(y1, zm)) / (2.0 * h);
                    g2 += dk * dk;
                }
                grad = grad.max(g2.sqrt() * w);
            }
        }
        sup + lip + grad
    }
}

/// Volumetric source `phi(x, zeta)` with the declared decay rate of its
/// norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumetricSource {
    #[serde(flatten)]
    pub family: SourceFamily,
    pub alpha: f64,
}

impl VolumetricSource {
    pub fn eval(&self, x: Vec3, zeta: Vec3) -> f64 {
        self.family.eval(x, zeta)
    }
}

/// Damped boundary trace `J f0 (x, zeta) = e^{-nu tau_-} f0(q, zeta)`.
pub fn apply_j(
    dom: &DomainGeometry,
    nu: &impl NuProvider,
    f0: &BoundarySource,
    x: Vec3,
    zeta: Vec3,
) -> Result<f64> {
    let exit = dom.exit_data(x, zeta)?;
    let speed = vec3::norm(zeta);
    Ok((-nu.nu(speed) * exit.tau_minus).exp() * f0.eval(exit.q, zeta))
}

/// Damped line integral
/// `S h (x, zeta) = ∫_0^{tau_-} e^{-nu s} h(x - s zeta, zeta) ds`
/// by graded adaptive panels (doubling until 1e-9 agreement unless a looser
/// tolerance is requested).
pub fn apply_s<H: Fn(Vec3, Vec3) -> f64>(
    dom: &DomainGeometry,
    nu: &impl NuProvider,
    h: H,
    x: Vec3,
    zeta: Vec3,
    tol: f64,
) -> Result<f64> {
    let exit = dom.exit_data(x, zeta)?;
    let speed = vec3::norm(zeta);
    let nu_v = nu.nu(speed);
    let rule = GaussLegendre::new(8);
    integrate_adaptive(&rule, 0.0, exit.tau_minus, tol, Grading::Right, |s| {
        (-nu_v * s).exp() * h(vec3::axpy(-s, zeta, x), zeta)
    })
}

/// Both sides of the phase-space change of variables: the direct volume
/// integral of `|f|`-like integrands and its boundary-flux parametrization
/// along incoming chords.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSpaceIntegral {
    pub direct: f64,
    pub boundary_form: f64,
}

/// Integrates a phase-space field over the domain and the truncated velocity
/// ball in the two equivalent parametrizations. The boundary form walks
/// incoming chords and weighs by the normal flux `|n . zeta|`; field values
/// along chords come from spatial interpolation.
pub fn phase_space_integral(
    dom: &DomainGeometry,
    f: &PhaseSpaceField,
    boundary_n_mu: usize,
    boundary_n_phi: usize,
    chord_points: usize,
) -> Result<PhaseSpaceIntegral> {
    let vg = &f.velocity;
    let nv = vg.len();
    // Direct form: tensor quadrature on the grids.
    let mut direct = 0.0;
    for ix in 0..f.n_spatial() {
        let slice = f.node_slice(ix);
        let mut vel = 0.0;
        for iv in 0..nv {
            vel += vg.weights[iv] * slice[iv];
        }
        direct += f.spatial.weights[ix] * vel;
    }
    // Boundary form.
    let rule = GaussLegendre::new(chord_points);
    let mut boundary_form = 0.0;
    for (y, normal, wy) in dom.boundary_quadrature(boundary_n_mu, boundary_n_phi) {
        for iv in 0..nv {
            let zeta = vg.nodes[iv];
            let flux = vec3::dot(normal, zeta);
            if flux >= 0.0 {
                continue;
            }
            let chord = dom.chord_from_boundary(y, zeta)?;
            let line = rule.integrate(0.0, chord, |t| {
                f.eval_spatial(vec3::axpy(t, zeta, y), iv)
            });
            boundary_form += wy * vg.weights[iv] * (-flux) * line;
        }
    }
    Ok(PhaseSpaceIntegral {
        direct,
        boundary_form,
    })
}
