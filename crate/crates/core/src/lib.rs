//! Dynamical optimal transport on truncated Poisson configuration spaces.
//!
//! The crate builds a finite lattice of occupancy vectors carrying a
//! product-Poisson reference measure, the non-local difference calculus on it,
//! the Ornstein–Uhlenbeck semigroup, time-discrete solutions of the non-local
//! continuity equation, a convex solver for the Benamou–Brenier-type distance
//! `𝒲` and the entropic cost `𝒥_ε`, and a harness that checks the functional
//! inequalities tying these objects together (MLSI, de Bruijn, Talagrand,
//! contraction, EVI, geodesic convexity, HWI).

pub mod calculus;
pub mod config_space;
pub mod continuity;
pub mod error;
pub mod inequalities;
pub mod io;
pub mod logmean;
pub mod semigroup;
pub mod solver;

pub use calculus::{
    difference, entropy, fisher, flux_divergence, flux_mass_bound_check, generator_apply, lagrangian,
    rho_hat, skorokhod_div, FluxBoundReport, FluxMeasure,
};
pub use config_space::{
    campbell_density, campbell_measure, intensity_measure, ConfigLattice, Density, Edge, PoissonSpace,
    ReferenceMeasure, SiteSpace,
};
pub use error::{Error, Result};
pub use logmean::log_mean;
pub use semigroup::{
    be_commutation_residual, dual_apply, evolve, expm_kernel, kernel_discrepancy, mehler_kernel, semigroup_apply,
    edge_kernels, edge_site_generator, KernelDiscrepancy, KernelMethod, SemigroupOperator,
};
pub use continuity::{
    ce_defect_rate, ce_residual, SOLVER_CE_TOL, concatenate, entropy_production_check, intensity_evolution_check, ou_path,
    path_length, path_speed, push_semigroup, reparametrize, CEPath, EntropyProductionReport, IntensityReport,
};
pub use solver::{
    action, action_entropic, geodesic, project_gradient, project_to_feasible, refine, refine_entropic, richardson,
    solve_distance, solve_entropic, solve_warm, two_point_density, two_point_oracle, BarrierSchedule, Geodesic,
    GradientProjection, InitMode, RefinementRow, RefinementTable, Solution, SolverConfig, SolverReport, SolverStatus,
};
pub use inequalities::{
    check_be, check_contraction, check_de_bruijn, check_descending_slope, check_de_bruijn_integrated, check_evi, check_exp_decay,
    check_gamma_convergence, check_geodesic_convexity, check_hwi, check_mlsi, check_quasi_triangle,
    check_speed_bound, check_talagrand, check_talagrand_flow, estimate_distance, random_density, random_function,
    random_interior_function, CheckPoint, DistanceEstimate, Tolerance, VerificationReport, Verdict,
};
