//! Drift estimation for discretely observed ergodic jump-diffusions
//!
//! ```text
//! dX_t = b(θ, X_t) dt + a(X_t) dW_t + ∫ γ(X_{t-}) z μ̃(dt, dz)
//! ```
//!
//! by minimising a contrast in which each increment is weighted by a
//! truncation kernel and centred by an approximation of the filtered
//! conditional mean.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod contrast;
pub mod error;
pub mod harness;
pub mod io;
pub mod jet;
pub mod kernels;
pub mod levy_integrals;
pub mod model;
pub mod moment;
pub mod optim;
pub mod quadrature;
pub mod rng;
pub mod sim;

pub use config::{preset, ExperimentConfig, PRESETS};
pub use contrast::{
    check_step_condition, contrast_value, estimate_theta2_stable, minimize_contrast,
    minimize_prepared, ContrastConfig, EstimateResult, FitOptions, PreparedContrast, StableTheta2,
    StepCondition, ThetaBox,
};
pub use error::{Error, Result};
pub use harness::{
    fisher_reference, run_experiment, summarize, ExperimentOutput, FisherReference, FisherSource,
    ReplicationRow, SummaryRow,
};
pub use kernels::{KernelKind, TruncationKernel};
pub use levy_integrals::{gamma_tail, kernel_fractional_moment, trunc_compensator};
pub use model::{Drift, DriftFunction, LevyMeasure, ModelSpec, StateCoeff, StateFunction, Theta};
pub use moment::{m_theta_grad, MomentApprox, OracleConfig, OracleEstimate};
pub use quadrature::QuadResult;
pub use sim::{simulate_path, uniform_grid, SamplePath, SimScheme};
