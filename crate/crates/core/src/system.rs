//! Power-system constants shared by every frequency computation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SystemError {
    #[error("system parameter `{0}` must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("steady-state limit {ss} Hz must not exceed the nadir limit {nadir} Hz")]
    SteadyStateAboveNadir { ss: f64, nadir: f64 },
}

/// Deviations are in Hz, powers in MW, inertia in MW·s/Hz, damping in MW/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Nominal frequency [Hz].
    pub f0: f64,
    /// Load damping D [MW/Hz].
    pub damping: f64,
    /// Largest credible infeed loss ΔP_L [MW].
    pub delta_p: f64,
    /// Primary-response delivery time T_d [s].
    pub t_d: f64,
    /// Nadir limit |Δf_lim| [Hz].
    pub df_lim: f64,
    /// RoCoF limit [Hz/s].
    pub rocof_lim: f64,
    /// Quasi-steady-state limit [Hz].
    pub df_ss_lim: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), SystemError> {
        for (name, v) in [
            ("f0", self.f0),
            ("damping", self.damping),
            ("delta_p", self.delta_p),
            ("t_d", self.t_d),
            ("df_lim", self.df_lim),
            ("rocof_lim", self.rocof_lim),
            ("df_ss_lim", self.df_ss_lim),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SystemError::NonPositive(name, v));
            }
        }
        if self.df_ss_lim > self.df_lim {
            return Err(SystemError::SteadyStateAboveNadir {
                ss: self.df_ss_lim,
                nadir: self.df_lim,
            });
        }
        Ok(())
    }

    /// Great Britain-like 2030 system: 1.8 GW loss, 10 s delivery,
    /// 0.8 Hz / 0.5 Hz/s / 0.5 Hz limits, damping 0.5 % of 40 GW per Hz.
    pub fn gb_reference() -> Self {
        SystemParams {
            f0: 50.0,
            damping: 0.005 * 40_000.0,
            delta_p: 1800.0,
            t_d: 10.0,
            df_lim: 0.8,
            rocof_lim: 0.5,
            df_ss_lim: 0.5,
        }
    }
}
