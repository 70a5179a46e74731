//! Turbine curves: SI capability over wind speed, D_s(H_s) and the
//! aerodynamic loss against its linear approximation.

use std::fmt::Write;
use std::path::Path;

use serde::Deserialize;
use siuc_core::turbine::{self, Regime, TurbineParams};
use siuc_core::SystemParams;

use crate::config::{check_system, gb, parse, Range};
use crate::error::{schema, CliError};
use crate::output::{Meta, OutDir};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TurbineConfig {
    #[serde(default)]
    turbine: TurbineParams,
    /// Supplies Δf_lim and the RoCoF limit.
    #[serde(default = "gb")]
    system: SystemParams,
    wind_speeds: Range,
    /// Speeds at which the D_s and loss grids are evaluated.
    #[serde(default)]
    loss_speeds: Vec<f64>,
    #[serde(default = "df_points")]
    df_points: usize,
    #[serde(default = "hs_points")]
    hs_points: usize,
    #[serde(default)]
    seed: u64,
}

fn df_points() -> usize {
    200
}
fn hs_points() -> usize {
    50
}

pub fn run(bytes: &[u8], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let cfg: TurbineConfig = parse(bytes)?;
    check_system(&cfg.system)?;
    cfg.turbine
        .validate()
        .map_err(|e| schema(format!("turbine: {e}")))?;
    if cfg.df_points < 2 || cfg.hs_points < 1 {
        return Err(schema("df_points must be ≥ 2 and hs_points ≥ 1"));
    }
    let speeds = cfg.wind_speeds.values()?;
    let (p, sys) = (&cfg.turbine, &cfg.system);
    let seed = seed.unwrap_or(cfg.seed);
    let mut dir = OutDir::create(out, Meta::new("turbine", bytes, seed))?;

    let mut cap =
        String::from("wind_speed,regime,omega_r0,tip_ratio,p0_mw,h_s_max,d_s_at_max,gamma\n");
    for &vw in &speeds {
        let op = turbine::operating_point(p, vw);
        let h = turbine::si_capacity_single(&op, p, sys.df_lim, sys.rocof_lim);
        let approx = turbine::SiApprox::new(h, &op, p, sys.df_lim, sys.rocof_lim)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let _ = writeln!(
            cap,
            "{vw},{},{},{},{},{},{},{}",
            regime_name(op.regime),
            op.omega_r0,
            op.tip_ratio_lambda,
            op.p0,
            h,
            approx.d_s,
            approx.gamma
        );
    }
    dir.csv("capability.csv", &cap)?;

    let mut damping = String::from("wind_speed,h_s,d_s,gamma_h2\n");
    let mut loss = String::from("wind_speed,h_s,df_hz,loss_mw,linear_mw\n");
    for &vw in &cfg.loss_speeds {
        let op = turbine::operating_point(p, vw);
        let h_max = turbine::si_capacity_single(&op, p, sys.df_lim, sys.rocof_lim);
        let gamma = turbine::gamma_fit(h_max, &op, p, sys.df_lim)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for k in 0..=cfg.hs_points {
            let h = h_max * k as f64 / cfg.hs_points as f64;
            let d = turbine::damping_coefficient(h, &op, p, sys.df_lim)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let _ = writeln!(damping, "{vw},{h},{d},{}", gamma * h * h);
        }
        let d_s = turbine::damping_coefficient(h_max, &op, p, sys.df_lim)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for i in 0..cfg.df_points {
            let df = -sys.df_lim * i as f64 / (cfg.df_points - 1) as f64;
            let l = turbine::mech_power_loss(df, h_max, &op, p)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let _ = writeln!(loss, "{vw},{h_max},{df},{l},{}", d_s * df);
        }
    }
    dir.csv("damping.csv", &damping)?;
    dir.csv("loss.csv", &loss)?;
    Ok(format!(
        "{} wind speeds, {} loss grids",
        speeds.len(),
        cfg.loss_speeds.len()
    ))
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Stopped => "stopped",
        Regime::KeExtraction => "ke-extraction",
        Regime::Pitch => "pitch",
    }
}
