//! Frequency-constrained unit commitment with synthetic inertia from
//! variable-speed wind turbines.
//!
//! The crate is organised bottom-up: a single-turbine model, farm
//! aggregation over a wind distribution, frequency dynamics (closed form and
//! time-domain), the piecewise-linear nadir region, and the MILP scheduler
//! that consumes all of them.

pub mod frequency;
pub mod nadir_geom;
pub mod scheduler;
pub mod system;
pub mod turbine;
pub mod windfarm;

mod digest;

pub use digest::sha256_hex;
pub use system::SystemParams;
