//! Time-domain response to the design contingency.

use std::path::Path;

use serde::{Deserialize, Serialize};
use siuc_core::frequency::{self, FrequencyInputs, FrequencyMetrics, NadirEvent, SimOptions};
use siuc_core::SystemParams;

use crate::config::{check_system, gb, parse, FarmConfig};
use crate::error::{schema, CliError};
use crate::output::{Meta, OutDir};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(default = "gb")]
    system: SystemParams,
    /// Conventional inertia [MW·s/Hz].
    h_conv: f64,
    /// Primary response [MW].
    pfr_r: f64,
    #[serde(default)]
    farms: Vec<FarmConfig>,
    #[serde(default)]
    sim: SimOptions,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct Simulated {
    min_df: f64,
    t_min_df: f64,
    nadir: Option<NadirEvent>,
    post_nadir_min: Option<f64>,
    final_df: f64,
    max_abs_rocof: f64,
    min_rotor_ratio: Vec<f64>,
}

#[derive(Serialize)]
struct Metrics {
    inputs: FrequencyInputs,
    sim: SimOptions,
    /// Closed form with D′ = D − Σγ_j·H_sj².
    analytic: Option<FrequencyMetrics>,
    analytic_error: Option<String>,
    simulated: Simulated,
}

pub fn run(bytes: &[u8], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let cfg: SimulateConfig = parse(bytes)?;
    let sys = &cfg.system;
    check_system(sys)?;
    let farms = cfg
        .farms
        .iter()
        .map(|f| f.build(sys))
        .collect::<Result<Vec<_>, _>>()?;
    let h_syn: f64 = farms.iter().map(|f| f.h_sj).sum();
    let gammas: Vec<f64> = farms.iter().map(|f| f.gamma_j).collect();
    let hs: Vec<f64> = farms.iter().map(|f| f.h_sj).collect();
    let d_eff = FrequencyInputs::effective_damping(sys, &gammas, &hs);
    let inputs = FrequencyInputs::new(cfg.h_conv, h_syn, cfg.pfr_r, d_eff, sys)
        .map_err(|e| schema(e.to_string()))?;
    let st = frequency::simulate(&farms, &inputs, sys, &cfg.sim)
        .map_err(|e| CliError::Validation(format!("simulation: {e}")))?;
    let analytic = frequency::metrics(&inputs, sys);
    let m = Metrics {
        inputs,
        sim: cfg.sim,
        analytic_error: analytic.as_ref().err().map(|e| e.to_string()),
        analytic: analytic.ok(),
        simulated: Simulated {
            min_df: st.min_df,
            t_min_df: st.t_min_df,
            nadir: st.nadir,
            post_nadir_min: st.post_nadir_min(),
            final_df: st.final_df(),
            max_abs_rocof: st.max_abs_rocof(),
            min_rotor_ratio: st.min_rotor_ratio.clone(),
        },
    };
    let mut dir = OutDir::create(out, Meta::new("simulate", bytes, seed.unwrap_or(cfg.seed)))?;
    dir.csv("trajectory.csv", &st.to_csv())?;
    dir.json("metrics.json", &m)?;
    Ok(format!(
        "{} samples, deepest deviation {:.4} Hz",
        st.time.len(),
        st.min_df
    ))
}
