//! Ensemble design: Monte-Carlo density evolution and differential
//! evolution over variable-side degree distributions.

pub mod de;
pub mod mcde;

use thiserror::Error;

use crate::channel::ChannelError;
use crate::code::CodeError;

pub use de::{de_optimize, repair_genome, AuditEntry, DeAudit, DeConfig, DeResult};
pub use mcde::{
    default_grid, mcde_run, mcde_threshold, message_entropy, GridBoundary, Mcde, McdeConfig, McdeRun, PointVerdict,
    ThresholdEstimate, ThresholdSearch, DEFAULT_ENTROPY_EPSILON,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate message pool: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}
