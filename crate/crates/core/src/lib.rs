//! Gradient-aligned multi-objective optimization over partitioned
//! parameter vectors.
//!
//! The parameter vector is split into a block shared by every objective
//! and one specific block per domain ([`param`]). Each domain contributes a
//! loss ([`objective::DomainObjective`]). [`optimizer::pga_step`] updates
//! all blocks with gradients evaluated at shifted points so that the
//! update also raises the cosine similarity between the shared-block
//! gradients of different domains and penalizes each domain's gradient
//! norm, without forming any Hessian.
//!
//! [`testbeds`] holds two small experiments (a spurious-correlation
//! adaptation task and ZDT-1), [`diagnostics`] the per-iteration trace and
//! derived metrics, and [`cli`] the config-driven experiment runner behind
//! the `pga` binary.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod format;
pub mod gradcheck;
pub mod objective;
pub mod optimizer;
pub mod param;
pub mod testbeds;
pub mod vector;

pub use error::{Error, Result};
pub use objective::{Batch, DomainObjective, Evaluation, ObjectiveFn};
pub use optimizer::{erm_step, pga_step, Method, Objectives, PgaConfig, Schedule, StepBatches};
pub use param::{BlockId, Domain, GradSlices, ParamLayout, ParamVector};
