//! Separability criteria and constructions for labeled point clouds and
//! the networks acting on them.
//!
//! - Voronoi rule on the output simplex ([`simplex_class`], [`check_voronoi`]).
//! - Disjoint-disc certificate from minimum enclosing balls
//!   ([`check_disc_separation`]).
//! - Distance-ratio Urysohn separators ([`urysohn_binary`], [`urysohn_multiclass`]).
//! - Kernel witnesses against bottleneck first layers ([`kernel_witness`]).
//! - Activation-cloud diagnostics ([`linear_rank`], [`component_count`]).

mod ball;
mod diagnostics;
mod report;
mod urysohn;
mod voronoi;
mod witness;

pub use ball::{
    check_disc_separation, enclosing_ball_solvers, min_enclosing_ball, AutoBall, BadoiuClarkson,
    Disc, DiscSeparation, EnclosingBallSolver, Welzl, ITERATIVE_SLACK,
};
pub use diagnostics::{component_count, linear_rank, singular_values};
pub use report::{
    check_separability, criteria, DiscCriterion, SeparabilityCriterion, SeparabilityReport,
    Violation, VoronoiCriterion,
};
pub use urysohn::{
    urysohn_binary, urysohn_multiclass, ScalarField, UrysohnBinary, UrysohnMulticlass,
};
pub use voronoi::{check_voronoi, simplex_class, strict_argmax, SimplexClass, BOUNDARY_TOL};
pub use witness::{
    kernel_witness, net_witness, KernelWitness, NetWitness, DEFAULT_INNER_R, DEFAULT_OUTER_R,
};
