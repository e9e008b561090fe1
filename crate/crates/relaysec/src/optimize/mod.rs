//! Joint source/relay beamformer design: relay-structure reductions,
//! log-barrier relay search, fractional source search, signal alignment,
//! and the two alternating algorithms.

mod align;
mod algorithms;
mod barrier;
mod fractional;
mod structure;

pub use align::signal_align;
pub use algorithms::{algorithm1, algorithm2, OptimizeOutcome2P, OptimizeOutcome3P};
pub use barrier::{
    barrier_grad_2p, barrier_grad_3p, barrier_value_2p, barrier_value_3p, optimize_a_barrier,
    optimize_a_barrier_3p, Barrier2p, Barrier3p,
};
pub use fractional::{optimize_qb_fractional, FractionalProblem};
pub use structure::{
    assemble_f_2p, assemble_f_3p, coefficients_2p, orthonormality_defect, project_f_2p,
    project_f_3p, structure_2p, structure_3p, StructureBasis2P, StructureBasis3P,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("zero effective uplink: H_i q_i vanishes")]
    ZeroBeamformer,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("relay power budget must be positive, got {0}")]
    InfeasibleBudget(f64),
    #[error("relay budget leaves no slack for this source vector")]
    InfeasibleRelayBudget,
    #[error("signal alignment infeasible: N_A + N_B <= N_R")]
    AlignmentInfeasible,
    #[error(transparent)]
    Mat(#[from] crate::matkit::MatError),
    #[error(transparent)]
    Scheme(#[from] crate::schemes::SchemeError),
}

/// Knobs for the barrier search and the alternating algorithms.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub barrier_mu0: f64,
    pub barrier_shrink: f64,
    /// barrier suboptimality is O(mu_floor); tighten for tiny rates
    pub barrier_mu_floor: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub rate_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            barrier_mu0: 1.0,
            barrier_shrink: 0.1,
            barrier_mu_floor: 1e-6,
            step_init: 1.0,
            armijo_c: 1e-4,
            max_inner_iters: 40,
            max_outer_iters: 50,
            rate_tol: 1e-4,
            restarts: 5,
            seed: 0,
        }
    }
}
