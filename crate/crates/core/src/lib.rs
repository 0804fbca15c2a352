//! Random predator–prey model with disease in the prey: nonautonomous
//! recruitment driven by bounded noise, forward-invariant regions, extinction
//! and persistence conditions, and numerical random attractors computed by
//! pullback.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod pullback;
pub mod responses;
pub mod scenario;
pub mod submodels;

pub use dynamics::{Dynamics, Variant};
pub use error::{Error, Result};
pub use integrator::{flow_phi, integrate, solve_endpoint, IntegratorConfig, Method, Trajectory};
pub use model::{
    compute_thresholds, extinction_criterion, holling1_extinction_criterion, persistence_bound, CriterionReport,
    ModelParams, State, Thresholds,
};
pub use noise::{sample_realization, NoiseKind, NoiseRealization, NoiseSpec};
pub use pullback::{
    estimate_attractor_section, hausdorff_semidist, pullback_state, s_star, AbsorbingRegion, AttractorEstimate,
    PullbackConfig,
};
pub use responses::{check_hypotheses, FunctionalResponse, HypothesisReport, ResponseSpec};
