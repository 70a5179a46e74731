use serde::{Deserialize, Serialize};

use super::FrequencyError;
use crate::system::SystemParams;

/// Aggregate quantities that enter the closed-form response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyInputs {
    pub h_total: f64,
    pub pfr_r: f64,
    pub d_eff: f64,
    pub h_conv: f64,
    pub h_syn: f64,
}

impl FrequencyInputs {
    pub fn new(
        h_conv: f64,
        h_syn: f64,
        pfr_r: f64,
        d_eff: f64,
        sys: &SystemParams,
    ) -> Result<Self, FrequencyError> {
        let h_total = h_conv + h_syn;
        if !(h_total > 0.0) || h_conv < 0.0 || h_syn < 0.0 {
            return Err(FrequencyError::NonPositiveInertia(h_total));
        }
        if !(d_eff > 0.0) {
            return Err(FrequencyError::NonPositiveDamping(d_eff));
        }
        if d_eff > sys.damping * (1.0 + 1e-12) {
            return Err(FrequencyError::DampingAboveLoad {
                d_eff,
                damping: sys.damping,
            });
        }
        if !(pfr_r >= 0.0) {
            return Err(FrequencyError::NegativePfr(pfr_r));
        }
        Ok(FrequencyInputs {
            h_total,
            pfr_r,
            d_eff,
            h_conv,
            h_syn,
        })
    }

    /// D′ = D − Σ γ_j H_sj².
    pub fn effective_damping(sys: &SystemParams, gammas: &[f64], h_s: &[f64]) -> f64 {
        sys.damping - gammas.iter().zip(h_s).map(|(g, h)| g * h * h).sum::<f64>()
    }

    /// T_d·D′·ΔP/(2HR), the argument of the nadir logarithm.
    fn a(&self, sys: &SystemParams) -> f64 {
        sys.t_d * self.d_eff * sys.delta_p / (2.0 * self.h_total * self.pfr_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMetrics {
    pub rocof_max: f64,
    pub f_ss_dev: f64,
    pub t_nadir: f64,
    pub f_nadir_dev: f64,
}

/// Initial RoCoF −ΔP/(2H) [Hz/s].
pub fn rocof_max(inputs: &FrequencyInputs, sys: &SystemParams) -> f64 {
    -sys.delta_p / (2.0 * inputs.h_total)
}

/// Quasi-steady-state deviation (R − ΔP)/D′ [Hz].
pub fn steady_state_dev(
    inputs: &FrequencyInputs,
    sys: &SystemParams,
) -> Result<f64, FrequencyError> {
    if !(inputs.d_eff > 0.0) {
        return Err(FrequencyError::NonPositiveDamping(inputs.d_eff));
    }
    Ok((inputs.pfr_r - sys.delta_p) / inputs.d_eff)
}

/// 1 − ln(1+a)/a, accurate for small a.
fn one_minus_log1p_ratio(a: f64) -> f64 {
    if a < 1e-4 {
        a * (0.5 - a * (1.0 / 3.0 - a * (0.25 - a / 5.0)))
    } else {
        1.0 - a.ln_1p() / a
    }
}

/// (e^{−x} − 1 + x)/x², accurate for small x.
fn psi(x: f64) -> f64 {
    if x < 1e-3 {
        0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0
    } else {
        (x + (-x).exp_m1()) / (x * x)
    }
}

/// Time of the nadir under the ramp-then-hold PFR model, without checking
/// that it precedes full delivery.
pub fn nadir_time_unchecked(
    inputs: &FrequencyInputs,
    sys: &SystemParams,
) -> Result<f64, FrequencyError> {
    if !(inputs.pfr_r > 0.0) {
        return Err(FrequencyError::NoPfr);
    }
    if !(inputs.d_eff > 0.0) {
        return Err(FrequencyError::NonPositiveDamping(inputs.d_eff));
    }
    Ok(2.0 * inputs.h_total / inputs.d_eff * inputs.a(sys).ln_1p())
}

/// Nadir time; errors if the nadir would fall after T_d.
pub fn nadir_time(inputs: &FrequencyInputs, sys: &SystemParams) -> Result<f64, FrequencyError> {
    let t_nadir = nadir_time_unchecked(inputs, sys)?;
    if t_nadir > sys.t_d {
        return Err(FrequencyError::NadirAfterDelivery {
            t_nadir,
            t_d: sys.t_d,
        });
    }
    Ok(t_nadir)
}

/// Closed-form nadir deviation, evaluated regardless of whether the nadir
/// precedes T_d.
pub fn nadir_formula(inputs: &FrequencyInputs, sys: &SystemParams) -> Result<f64, FrequencyError> {
    if !(inputs.d_eff > 0.0) {
        return Err(FrequencyError::NonPositiveDamping(inputs.d_eff));
    }
    if inputs.pfr_r == 0.0 {
        return Ok(-sys.delta_p / inputs.d_eff);
    }
    if inputs.pfr_r < 0.0 {
        return Err(FrequencyError::NegativePfr(inputs.pfr_r));
    }
    Ok(-sys.delta_p / inputs.d_eff * one_minus_log1p_ratio(inputs.a(sys)))
}

/// Nadir deviation; errors if the nadir would fall after T_d.
pub fn nadir(inputs: &FrequencyInputs, sys: &SystemParams) -> Result<f64, FrequencyError> {
    nadir_time(inputs, sys)?;
    nadir_formula(inputs, sys)
}

/// Largest deviation of the linear model under ramp-then-hold PFR: the
/// closed-form nadir if it occurs before T_d, otherwise the monotone
/// approach to the steady state.
pub fn peak_deviation(inputs: &FrequencyInputs, sys: &SystemParams) -> Result<f64, FrequencyError> {
    if inputs.pfr_r > 0.0 && nadir_time_unchecked(inputs, sys)? <= sys.t_d {
        nadir_formula(inputs, sys)
    } else {
        steady_state_dev(inputs, sys)
    }
}

/// Δf(t) on [0, t_n].
pub fn freq_trajectory(
    inputs: &FrequencyInputs,
    sys: &SystemParams,
    t: f64,
) -> Result<f64, FrequencyError> {
    if inputs.pfr_r > 0.0 {
        let t_nadir = nadir_time_unchecked(inputs, sys)?;
        if t > t_nadir * (1.0 + 1e-12) {
            return Err(FrequencyError::BeyondNadir { t, t_nadir });
        }
    }
    Ok(trajectory_unchecked(inputs, sys, t))
}

/// Δf(t) of the linear model while PFR ramps (t ≤ T_d), in a form that
/// stays accurate as D′ → 0.
pub fn trajectory_unchecked(inputs: &FrequencyInputs, sys: &SystemParams, t: f64) -> f64 {
    let h2 = 2.0 * inputs.h_total;
    let x = inputs.d_eff * t / h2;
    let decay = if x < 1e-8 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    };
    -sys.delta_p * t / h2 * decay + inputs.pfr_r * t * t * psi(x) / (h2 * sys.t_d)
}

/// All four closed-form metrics; nadir fields follow `peak_deviation`.
pub fn metrics(
    inputs: &FrequencyInputs,
    sys: &SystemParams,
) -> Result<FrequencyMetrics, FrequencyError> {
    let f_ss_dev = steady_state_dev(inputs, sys)?;
    let (t_nadir, f_nadir_dev) = if inputs.pfr_r > 0.0 {
        let tn = nadir_time_unchecked(inputs, sys)?;
        if tn <= sys.t_d {
            (tn, nadir_formula(inputs, sys)?)
        } else {
            (f64::INFINITY, f_ss_dev)
        }
    } else {
        (f64::INFINITY, f_ss_dev)
    };
    Ok(FrequencyMetrics {
        rocof_max: rocof_max(inputs, sys),
        f_ss_dev,
        t_nadir,
        f_nadir_dev,
    })
}
