//! Fixed-point solvers for the integral formulation and the operator probes
//! behind the solvability analysis.

mod linear;
mod nonlinear;
mod probes;

pub use linear::{solve_linear, solve_with_source_field, LinearOperator, SolveConfig, SolveFlags, SolveReport};
pub use nonlinear::{
    empirical_contraction_threshold, nonlinear_residual, picard_solve, quadratic_bound_fit,
    PicardConfig, PicardReport, PicardStep,
};
pub use probes::{
    coercivity_probe, injectivity_probe, project_out_invariants, random_decayed_velocity_field,
    random_unit_field,
    smoothing_probe, tail_norm_probe, CoercivityProbe, InjectivityProbe, SmoothingProbe,
    TailNormProbe,
};
