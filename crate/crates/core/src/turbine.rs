//! Single variable-speed wind turbine: aerodynamics, MPPT operating point,
//! kinetic-energy extraction for synthetic inertia (SI) and the resulting
//! aerodynamic power loss together with its damping-style approximation.
//!
//! Units: MW, MJ, rad/s, Hz, and inertia `J` in 10⁶ kg·m² so that
//! `½Jω²` is directly in MJ.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TurbineError {
    #[error("power coefficient undefined: 1/λi denominator vanishes (λ={lambda}, θ={theta})")]
    CpDomain { lambda: f64, theta: f64 },
    #[error("turbine parameter `{0}` must be positive and finite, got {1}")]
    BadParam(&'static str, f64),
    #[error("ω_r,min = {omega_min} rad/s is not below the rated MPPT speed {omega_rated} rad/s")]
    OmegaMinTooHigh { omega_min: f64, omega_rated: f64 },
    #[error("wind speed {0} m/s outside the KE-extraction range (0, rated]")]
    NotKeMode(f64),
    #[error("MPPT power coefficient is negative ({0})")]
    NegativeCp(f64),
    #[error("rotor would stall: 4HΔf/J + ω0² = {0} < 0")]
    RotorStall(f64),
    #[error("rotor speed {omega} rad/s below ω_r,min = {omega_min} rad/s")]
    MechanicalLimit { omega: f64, omega_min: f64 },
}

/// Physical constants of one turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineParams {
    /// Lumped drive-train inertia [10⁶ kg·m²].
    pub inertia_j: f64,
    pub air_density_rho: f64,
    pub rotor_radius: f64,
    /// Lowest permitted rotor speed [rad/s].
    pub omega_r_min: f64,
    /// Converter rating [MW].
    pub p_rated_max: f64,
    pub rated_wind_speed: f64,
    #[serde(default = "default_cut_in")]
    pub cut_in_speed: f64,
    #[serde(default = "default_cut_out")]
    pub cut_out_speed: f64,
}

fn default_cut_in() -> f64 {
    3.0
}
fn default_cut_out() -> f64 {
    25.0
}

impl Default for TurbineParams {
    /// A 5 MW class, 126 m rotor (non-authoritative): lumped inertia of
    /// rotor plus generator referred to the low-speed shaft, minimum speed
    /// 6.9 rpm, converter rated 10 % above the mechanical rating.
    fn default() -> Self {
        TurbineParams {
            inertia_j: 43.8,
            air_density_rho: 1.225,
            rotor_radius: 63.0,
            omega_r_min: 6.9 * std::f64::consts::PI / 30.0,
            p_rated_max: 5.5,
            rated_wind_speed: 11.4,
            cut_in_speed: 3.0,
            cut_out_speed: 25.0,
        }
    }
}

impl TurbineParams {
    pub fn validate(&self) -> Result<(), TurbineError> {
        for (name, v) in [
            ("inertia_j", self.inertia_j),
            ("air_density_rho", self.air_density_rho),
            ("rotor_radius", self.rotor_radius),
            ("omega_r_min", self.omega_r_min),
            ("p_rated_max", self.p_rated_max),
            ("rated_wind_speed", self.rated_wind_speed),
            ("cut_in_speed", self.cut_in_speed),
            ("cut_out_speed", self.cut_out_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TurbineError::BadParam(name, v));
            }
        }
        let omega_rated = optimal_tip_ratio() * self.rated_wind_speed / self.rotor_radius;
        if self.omega_r_min >= omega_rated {
            return Err(TurbineError::OmegaMinTooHigh {
                omega_min: self.omega_r_min,
                omega_rated,
            });
        }
        Ok(())
    }

    /// Aerodynamic scale factor πρR²v³/(2·10⁶) [MW].
    pub fn eta_a(&self, vw: f64) -> f64 {
        std::f64::consts::PI * self.air_density_rho * self.rotor_radius.powi(2) * vw.powi(3) / 2e6
    }

    /// Mechanical power at rated wind under MPPT [MW].
    pub fn rated_mech_power(&self) -> f64 {
        self.eta_a(self.rated_wind_speed) * max_power_coefficient()
    }
}

/// Cp(λ, θ) including pitch.
pub fn power_coefficient(lambda: f64, theta: f64) -> Result<f64, TurbineError> {
    let den = lambda + 0.08 * theta;
    if den == 0.0 || !(lambda > 0.0) {
        return Err(TurbineError::CpDomain { lambda, theta });
    }
    let inv_li = 1.0 / den - 0.035 / (theta.powi(3) + 1.0);
    Ok(0.22 * (116.0 * inv_li - 0.4 * theta - 5.0) * (-12.5 * inv_li).exp())
}

/// Cp at zero pitch in the simplified form used for the loss model.
pub fn cp_zero_pitch(lambda: f64) -> f64 {
    0.22 * (116.0 / lambda - 9.06) * (0.4375 - 12.5 / lambda).exp()
}

/// dCp/dλ at zero pitch.
fn cp_zero_pitch_d1(lambda: f64) -> f64 {
    0.22 * (0.4375 - 12.5 / lambda).exp() / lambda.powi(2) * (1450.0 / lambda - 229.25)
}

/// Tip ratio maximising Cp(λ, 0): the root of dCp/dλ, by bisection to
/// 1e-12. (Searching on Cp itself cannot resolve the flat peak below √ε.)
pub fn optimal_tip_ratio() -> f64 {
    static LAMBDA_STAR: OnceLock<f64> = OnceLock::new();
    *LAMBDA_STAR.get_or_init(|| {
        let (mut lo, mut hi) = (1.0, 20.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if cp_zero_pitch_d1(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

pub fn max_power_coefficient() -> f64 {
    cp_zero_pitch(optimal_tip_ratio())
}

/// Control regime of the pre-disturbance operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Below cut-in or above cut-out: no output, no SI.
    Stopped,
    /// Below rated wind: MPPT, SI from rotor kinetic energy.
    KeExtraction,
    /// Above rated wind: speed and power held by pitch; SI only limited by
    /// converter headroom and with no aerodynamic loss.
    Pitch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub wind_speed_vw: f64,
    /// Stored as 0: the pitch angle is not resolved in the pitch regime.
    pub pitch_theta: f64,
    pub omega_r0: f64,
    pub tip_ratio_lambda: f64,
    pub p0: f64,
    pub p_a0: f64,
    pub eta_a: f64,
    pub regime: Regime,
}

/// MPPT state at `vw`; only valid in the KE-extraction range.
pub fn mppt_operating_point(
    params: &TurbineParams,
    vw: f64,
) -> Result<OperatingPoint, TurbineError> {
    if !(vw > 0.0 && vw <= params.rated_wind_speed) {
        return Err(TurbineError::NotKeMode(vw));
    }
    let lambda = optimal_tip_ratio();
    let cp = cp_zero_pitch(lambda);
    if cp < 0.0 {
        return Err(TurbineError::NegativeCp(cp));
    }
    let eta = params.eta_a(vw);
    let regime = if vw < params.cut_in_speed {
        Regime::Stopped
    } else {
        Regime::KeExtraction
    };
    let p = if regime == Regime::Stopped {
        0.0
    } else {
        eta * cp
    };
    Ok(OperatingPoint {
        wind_speed_vw: vw,
        pitch_theta: 0.0,
        omega_r0: lambda * vw / params.rotor_radius,
        tip_ratio_lambda: lambda,
        p0: p,
        p_a0: p,
        eta_a: eta,
        regime,
    })
}

/// Operating point for any wind speed, covering stopped and pitch regimes.
pub fn operating_point(params: &TurbineParams, vw: f64) -> OperatingPoint {
    let vw = vw.max(0.0);
    if vw < params.cut_in_speed || vw >= params.cut_out_speed {
        return OperatingPoint {
            wind_speed_vw: vw,
            pitch_theta: 0.0,
            omega_r0: 0.0,
            tip_ratio_lambda: 0.0,
            p0: 0.0,
            p_a0: 0.0,
            eta_a: params.eta_a(vw),
            regime: Regime::Stopped,
        };
    }
    if vw <= params.rated_wind_speed {
        return mppt_operating_point(params, vw).expect("vw in KE range");
    }
    let omega = optimal_tip_ratio() * params.rated_wind_speed / params.rotor_radius;
    let p = params.rated_mech_power();
    OperatingPoint {
        wind_speed_vw: vw,
        pitch_theta: 0.0,
        omega_r0: omega,
        tip_ratio_lambda: omega * params.rotor_radius / vw,
        p0: p,
        p_a0: p,
        eta_a: params.eta_a(vw),
        regime: Regime::Pitch,
    }
}

/// ω_r² after a deviation `df` with SI `h_s` (may be negative: stall).
pub fn rotor_speed_squared(df: f64, h_s: f64, op: &OperatingPoint, params: &TurbineParams) -> f64 {
    4.0 * h_s * df / params.inertia_j + op.omega_r0 * op.omega_r0
}

/// Rotor speed after releasing the kinetic energy that backs `h_s` over a
/// deviation `df` (≤ 0).
pub fn rotor_speed_from_freq(
    df: f64,
    h_s: f64,
    op: &OperatingPoint,
    params: &TurbineParams,
) -> Result<f64, TurbineError> {
    let w2 = rotor_speed_squared(df, h_s, op, params);
    if w2 < 0.0 {
        return Err(TurbineError::RotorStall(w2));
    }
    let w = w2.sqrt();
    // Rounding slack so that the capacity-defining corner maps onto ω_min.
    if w < params.omega_r_min * (1.0 - 1e-12) && h_s > 0.0 && df < 0.0 {
        return Err(TurbineError::MechanicalLimit {
            omega: w,
            omega_min: params.omega_r_min,
        });
    }
    Ok(w)
}

/// SI implied by a rotor-speed change over a frequency deviation.
pub fn si_from_rotor_speeds(omega: f64, omega0: f64, df: f64, params: &TurbineParams) -> f64 {
    params.inertia_j * (omega * omega - omega0 * omega0) / (4.0 * df)
}

/// Aerodynamic power change at a given rotor speed (≤ 0 around MPPT).
pub fn power_loss_at_speed(omega: f64, op: &OperatingPoint, params: &TurbineParams) -> f64 {
    if op.regime != Regime::KeExtraction {
        return 0.0;
    }
    if omega == op.omega_r0 {
        return 0.0;
    }
    let lambda = params.rotor_radius * omega / op.wind_speed_vw;
    op.eta_a * cp_zero_pitch(lambda) - op.p_a0
}

/// ΔP̃_a: aerodynamic power change caused by SI provision at deviation `df`.
pub fn mech_power_loss(
    df: f64,
    h_s: f64,
    op: &OperatingPoint,
    params: &TurbineParams,
) -> Result<f64, TurbineError> {
    if op.regime != Regime::KeExtraction || h_s == 0.0 || df == 0.0 {
        return Ok(0.0);
    }
    let w = rotor_speed_from_freq(df, h_s, op, params)?;
    Ok(power_loss_at_speed(w, op, params))
}

/// First and second derivative of ΔP̃_a with respect to Δf.
pub fn mech_power_loss_derivatives(
    df: f64,
    h_s: f64,
    op: &OperatingPoint,
    params: &TurbineParams,
) -> Result<(f64, f64), TurbineError> {
    if op.regime != Regime::KeExtraction || h_s == 0.0 {
        return Ok((0.0, 0.0));
    }
    let w = rotor_speed_from_freq(df, h_s, op, params)?;
    let lambda = params.rotor_radius * w / op.wind_speed_vw;
    let k = params.rotor_radius / op.wind_speed_vw;
    let dw = 2.0 * h_s / (params.inertia_j * w);
    let first = op.eta_a * cp_zero_pitch_d1(lambda) * k * dw;
    let second = op.eta_a * (k * dw).powi(2) * curvature_g1(lambda) * curvature_g2(lambda);
    Ok((first, second))
}

/// Positive prefactor of the curvature of Cp(λ(ω_r)) along the SI path.
pub fn curvature_g1(lambda: f64) -> f64 {
    0.22 * (0.4375 - 12.5 / lambda).exp() / lambda.powi(4)
}

/// Sign-carrying factor of the curvature; negative for λ ∈ (2.648, 9.952).
pub fn curvature_g2(lambda: f64) -> f64 {
    18125.0 / lambda + 687.75 * lambda - 8665.625
}

/// D_s = ΔP̃_a(−Δf_lim)/(−Δf_lim).
pub fn damping_coefficient(
    h_s: f64,
    op: &OperatingPoint,
    params: &TurbineParams,
    df_lim: f64,
) -> Result<f64, TurbineError> {
    let loss = mech_power_loss(-df_lim, h_s, op, params)?;
    Ok((loss / -df_lim).max(0.0))
}

/// γ such that γH² matches D_s at H ∈ {0, H_s,max}; 0 when there is no SI.
pub fn gamma_fit(
    h_s_max: f64,
    op: &OperatingPoint,
    params: &TurbineParams,
    df_lim: f64,
) -> Result<f64, TurbineError> {
    if h_s_max <= 0.0 {
        return Ok(0.0);
    }
    Ok(damping_coefficient(h_s_max, op, params, df_lim)? / (h_s_max * h_s_max))
}

/// Largest SI the turbine can commit to: bounded by rotor kinetic energy
/// above ω_r,min and by converter headroom against the RoCoF limit.
pub fn si_capacity_single(
    op: &OperatingPoint,
    params: &TurbineParams,
    df_lim: f64,
    rocof_lim: f64,
) -> f64 {
    let converter = ((params.p_rated_max - op.p0) / (2.0 * rocof_lim)).max(0.0);
    match op.regime {
        Regime::Stopped => 0.0,
        Regime::Pitch => converter,
        Regime::KeExtraction => {
            let ke = params.inertia_j * (op.omega_r0.powi(2) - params.omega_r_min.powi(2))
                / (4.0 * df_lim);
            ke.max(0.0).min(converter)
        }
    }
}

/// SI state of one turbine with its linear loss approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiApprox {
    pub h_s: f64,
    pub h_s_max: f64,
    pub d_s: f64,
    pub gamma: f64,
}

impl SiApprox {
    pub fn new(
        h_s: f64,
        op: &OperatingPoint,
        params: &TurbineParams,
        df_lim: f64,
        rocof_lim: f64,
    ) -> Result<Self, TurbineError> {
        let h_s_max = si_capacity_single(op, params, df_lim, rocof_lim);
        let h_s = h_s.clamp(0.0, h_s_max);
        Ok(SiApprox {
            h_s,
            h_s_max,
            d_s: damping_coefficient(h_s, op, params, df_lim)?,
            gamma: gamma_fit(h_s_max, op, params, df_lim)?,
        })
    }
}
