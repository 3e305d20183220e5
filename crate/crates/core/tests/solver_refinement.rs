//! Refinement and threshold oracles for the solver probes: the discrete
//! injectivity margin and the quadratic recursion constant are checked for
//! stability across grid resolutions, and the empirical smallness threshold
//! of the nonlinear iteration is bracketed by bisection.

use kinetic_fredholm::collision::{
    assemble_kernel_table, CrossSection, VelocityGrid, VelocityGridConfig,
};
use kinetic_fredholm::field::{SpatialGrid, SpatialGridConfig};
use kinetic_fredholm::geometry::DomainGeometry;
use kinetic_fredholm::solver::{
    empirical_contraction_threshold, injectivity_probe, picard_solve, quadratic_bound_fit,
    LinearOperator, PicardConfig, SolveConfig,
};
use kinetic_fredholm::transport::{BoundarySource, SourceFamily};
use rand::SeedableRng;
use std::sync::Arc;

fn operator(vg: (usize, usize, usize), sp: (usize, usize, usize)) -> LinearOperator {
    let dom = DomainGeometry::unit_ball();
    let grid = VelocityGrid::new(VelocityGridConfig {
        radial_order: vg.0,
        n_mu: vg.1,
        n_phi: vg.2,
        ..Default::default()
    })
    .unwrap();
    let table = assemble_kernel_table(&CrossSection::hard_sphere(0.5), &grid).unwrap();
    let spatial = SpatialGrid::new(
        dom.clone(),
        SpatialGridConfig {
            shells: sp.0,
            n_mu: sp.1,
            n_phi: sp.2,
        },
    )
    .unwrap();
    LinearOperator::new(dom, Arc::new(table), Arc::new(spatial), SolveConfig::default()).unwrap()
}

fn gaussian(amplitude: f64) -> BoundarySource {
    BoundarySource {
        family: SourceFamily::GaussianVelocity {
            amplitude,
            decay: 0.25,
        },
        alpha: 0.25,
    }
}

#[test]
fn injectivity_margin_is_stable_under_refinement() {
    let coarse = operator((16, 2, 4), (2, 2, 2));
    let fine = operator((16, 2, 4), (3, 2, 4));
    let p1 = injectivity_probe(&coarse, 20_000).unwrap();
    let p2 = injectivity_probe(&fine, 20_000).unwrap();
    assert!(p1.sigma_min > 0.0 && p2.sigma_min > 0.0);
    let drift = (p2.sigma_min / p1.sigma_min - 1.0).abs();
    println!(
        "sigma_min {:.4} ({} unknowns) -> {:.4} ({} unknowns), drift {:.3}",
        p1.sigma_min, p1.unknowns, p2.sigma_min, p2.unknowns, drift
    );
    assert!(drift <= 0.30, "drift {drift}");
}

#[test]
fn quadratic_constant_is_stable_across_resolutions() {
    let cfg = PicardConfig {
        sigma_n_mu: 4,
        sigma_n_phi: 8,
        ..Default::default()
    };
    let f0 = gaussian(0.01);
    let mut cs = Vec::new();
    for op in [operator((16, 2, 4), (3, 2, 4)), operator((16, 3, 6), (4, 2, 4))] {
        let (_, report) = picard_solve(&op, &f0, &cfg).unwrap();
        assert!(report.converged);
        let norms: Vec<f64> = report.steps.iter().map(|s| s.norm).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let data_norm =
            f0.b_alpha_tilde_norm(&DomainGeometry::unit_ball(), &op.velocity, 100, &mut rng);
        cs.push(quadratic_bound_fit(&norms, data_norm).unwrap());
    }
    let drift = (cs[1] / cs[0] - 1.0).abs();
    println!("quadratic constant {:.6} -> {:.6}, drift {:.3}", cs[0], cs[1], drift);
    assert!(cs.iter().all(|c| c.is_finite() && *c > 1.0));
    assert!(drift <= 0.20, "drift {drift}");
}

#[test]
fn contraction_threshold_bracketing() {
    let op = operator((16, 2, 4), (2, 2, 2));
    let cfg = PicardConfig {
        sigma_n_mu: 4,
        sigma_n_phi: 8,
        max_steps: 12,
        ..Default::default()
    };
    let threshold =
        empirical_contraction_threshold(&op, &gaussian(1.0), 0.01, 50.0, 3, &cfg).unwrap();
    println!("empirical smallness threshold ~ {threshold:.3}");
    assert!(threshold > 0.01 && threshold < 50.0);
}
