//! Frequency-constrained unit commitment.
//!
//! An instance (generators, wind farms, demand, scenario tree) is assembled
//! into a MILP with the RoCoF, quasi-steady-state and nadir-plane rows, then
//! solved by an in-crate branch-and-bound or exported as fixed-format MPS.

pub mod bnb;
pub mod desk;
mod instance;
pub mod lp;
pub mod milp;
mod model;
pub mod mps;
mod solve;

pub use instance::*;
pub use model::*;
pub use solve::*;

use thiserror::Error;

use crate::nadir_geom::GeomError;
use crate::windfarm::FarmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfeasibleCause {
    /// Demand exceeds all generation plus available wind in some period.
    Capacity,
    /// Commitment and dispatch are feasible, but not with the frequency rows.
    Frequency,
    /// Balance cannot be met under unit limits and min up/down times.
    Balance,
}

#[derive(Debug, Error)]
pub enum UcError {
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("malformed scenario tree: {0}")]
    Tree(String),
    #[error("model is infeasible ({0:?})")]
    Infeasible(InfeasibleCause),
    #[error("invalid option: {0}")]
    Options(String),
    #[error(transparent)]
    Planes(#[from] GeomError),
    #[error(transparent)]
    Farm(#[from] FarmError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
