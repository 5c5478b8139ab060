//! Weighted D-/G-optimal experimental designs for polynomial regression on
//! compact design spaces, Kiefer–Wolfowitz certificates, approximate Fekete
//! points, and the convergence of optimal designs to equilibrium measures.

pub mod asymptotics;
pub mod basis;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod fekete;
pub mod gram;
pub mod linalg;
pub mod measure;
pub mod optimal;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod simulate;

pub use basis::{degree_sum, eval_basis, space_dimension, vandermonde, MultiIndex, PolyBasis, Point};
pub use error::{Error, Result};
pub use gram::{christoffel, moment_matrix, orthonormal_factor, ChristoffelEvaluator, MomentMatrix};
pub use measure::{
    check_admissible, make_design, prune_and_merge, uniform_design, DesignSpace, DiscreteDesign,
    WeightFunction,
};
pub use optimal::{certify, d_optimal, g_value, vdm_integral_christoffel, vdm_integral_det, Certificate, Init, OptimalResult, SolverOptions};
pub use fekete::{approx_fekete, exhaustive_fekete, sth_diameter, tfd_table, FeketeOptions, FeketeResult, TfdRow};
pub use equilibrium::{weighted_ball_green, EquilibriumKind, EquilibriumMeasure};
pub use asymptotics::{concavity_probe, convergence_sweep, f_of_t, first_derivative_residual, ks_distance, moment_distance, scalar_field, ConvergenceReport, ScalarField};
pub use simulate::{apportion, confidence_volume_proxy, simulate_regression, variance_identity_check, ExperimentStats, RegressionExperiment};
