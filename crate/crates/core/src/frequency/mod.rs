//! Post-disturbance frequency dynamics: closed-form metrics of the
//! linearised swing equation, a fixed-step time-domain simulator with the
//! turbine branch in three fidelity modes, and schedule certification.

mod analytic;
mod certify;
mod sim;

pub use analytic::*;
pub use certify::*;
pub use sim::*;

use thiserror::Error;

use crate::windfarm::FarmError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrequencyError {
    #[error("total inertia must be positive, got {0}")]
    NonPositiveInertia(f64),
    #[error("effective damping D′ must be positive, got {0}")]
    NonPositiveDamping(f64),
    #[error("effective damping {d_eff} exceeds load damping {damping}")]
    DampingAboveLoad { d_eff: f64, damping: f64 },
    #[error("PFR must be non-negative, got {0}")]
    NegativePfr(f64),
    #[error("nadir requires positive PFR")]
    NoPfr,
    #[error("t = {t} s lies beyond the nadir time {t_nadir} s")]
    BeyondNadir { t: f64, t_nadir: f64 },
    #[error("nadir at {t_nadir} s occurs after PFR delivery time {t_d} s")]
    NadirAfterDelivery { t_nadir: f64, t_d: f64 },
    #[error("invalid simulation setting: {0}")]
    BadSetting(String),
    #[error("scheduled SI {h_syn} differs from the fleet total {fleet}")]
    InconsistentInertia { h_syn: f64, fleet: f64 },
    #[error("rotor stall in farm {farm} at t = {time} s")]
    RotorStall { time: f64, farm: usize },
    #[error("rotor speed of farm {farm} fell to {ratio:.4}·ω_r,min at t = {time} s")]
    RotorFloor { time: f64, farm: usize, ratio: f64 },
    #[error("integration diverged at t = {time} s")]
    Diverged { time: f64 },
    #[error(transparent)]
    Farm(#[from] FarmError),
}
