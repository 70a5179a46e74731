//! A synthetic desk-scale test system: ten conventional units, one wind farm,
//! 24 hourly periods. Non-authoritative numbers chosen so that the
//! frequency rows bind at low demand and high wind.

use serde::{Deserialize, Serialize};

use super::instance::{FarmSpec, GeneratorUnit, ScenarioNode, UcInstance, UcMode};
use crate::system::SystemParams;
use crate::turbine::TurbineParams;
use crate::windfarm::WindSpeedDistribution;

/// Knobs of the desk system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeskConfig {
    pub periods: usize,
    /// Multiplies the wind-speed profile.
    pub wind_level: f64,
    pub n_turbines: u32,
    pub si_penetration: f64,
    /// Add a second, calmer scenario (two-stage mode).
    pub two_stage: bool,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            periods: 24,
            wind_level: 1.0,
            n_turbines: 1200,
            si_penetration: 0.2,
            two_stage: false,
        }
    }
}

pub fn desk_system() -> SystemParams {
    SystemParams {
        f0: 50.0,
        damping: 250.0,
        delta_p: 300.0,
        t_d: 10.0,
        df_lim: 0.8,
        rocof_lim: 0.5,
        df_ss_lim: 0.5,
    }
}

/// A light 3 MW class turbine with a narrow speed range, so that SI is
/// useful but costly in underproduction.
pub fn desk_turbine() -> TurbineParams {
    TurbineParams {
        inertia_j: 4.5,
        air_density_rho: 1.225,
        rotor_radius: 45.0,
        omega_r_min: 0.76,
        p_rated_max: 3.3,
        rated_wind_speed: 12.0,
        cut_in_speed: 3.0,
        cut_out_speed: 25.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn unit(
    name: &str,
    h_g: f64,
    p_max: f64,
    p_min: f64,
    marginal_cost: f64,
    no_load_cost: f64,
    startup_cost: f64,
    min_up: usize,
    min_down: usize,
    max_pfr_share: f64,
    initial_on: bool,
) -> GeneratorUnit {
    GeneratorUnit {
        name: name.into(),
        h_g,
        p_max,
        p_min,
        marginal_cost,
        no_load_cost,
        startup_cost,
        min_up,
        min_down,
        max_pfr_share,
        initial_on,
    }
}

pub fn desk_generators() -> Vec<GeneratorUnit> {
    vec![
        unit(
            "nuclear", 5.0, 1200.0, 1000.0, 10.0, 1500.0, 60000.0, 24, 24, 0.0, true,
        ),
        unit(
            "coal-1", 5.5, 600.0, 250.0, 33.0, 4000.0, 20000.0, 6, 6, 0.15, true,
        ),
        unit(
            "coal-2", 6.0, 500.0, 200.0, 36.0, 3500.0, 16000.0, 6, 6, 0.15, false,
        ),
        unit(
            "ccgt-1", 4.5, 800.0, 350.0, 39.0, 3400.0, 14000.0, 4, 4, 0.2, true,
        ),
        unit(
            "ccgt-2", 4.0, 650.0, 300.0, 42.0, 2600.0, 11000.0, 4, 4, 0.22, false,
        ),
        unit(
            "ccgt-3", 5.0, 500.0, 200.0, 45.0, 2000.0, 9000.0, 3, 3, 0.25, false,
        ),
        unit(
            "ccgt-4", 3.5, 400.0, 150.0, 48.0, 1500.0, 7000.0, 3, 3, 0.25, false,
        ),
        unit(
            "ocgt-1", 3.0, 300.0, 60.0, 85.0, 1200.0, 2500.0, 1, 1, 0.5, false,
        ),
        unit(
            "ocgt-2", 2.5, 200.0, 40.0, 95.0, 900.0, 1500.0, 1, 1, 0.5, false,
        ),
        unit(
            "hydro", 3.5, 300.0, 0.0, 60.0, 300.0, 500.0, 1, 1, 0.6, false,
        ),
    ]
}

/// Demand shape over a day, as a fraction of the 5 GW peak.
const DEMAND_SHAPE: [f64; 24] = [
    0.62, 0.58, 0.55, 0.54, 0.55, 0.58, 0.66, 0.76, 0.84, 0.87, 0.88, 0.88, 0.87, 0.86, 0.85, 0.86,
    0.90, 0.97, 1.00, 0.96, 0.89, 0.80, 0.72, 0.66,
];

/// Wind-speed multiplier over a day: windy night, calmer afternoon.
const WIND_SHAPE: [f64; 24] = [
    1.20, 1.22, 1.25, 1.25, 1.22, 1.18, 1.12, 1.05, 0.98, 0.92, 0.88, 0.85, 0.82, 0.80, 0.80, 0.82,
    0.86, 0.92, 0.98, 1.04, 1.10, 1.14, 1.17, 1.19,
];

pub fn desk_instance(cfg: &DeskConfig) -> UcInstance {
    let t_n = cfg.periods;
    let demand: Vec<f64> = (0..t_n).map(|t| 5000.0 * DEMAND_SHAPE[t % 24]).collect();
    let wind: Vec<f64> = (0..t_n)
        .map(|t| cfg.wind_level * WIND_SHAPE[t % 24])
        .collect();
    let scenarios = if cfg.two_stage {
        vec![
            ScenarioNode {
                probability: 0.6,
                wind_scale: vec![wind.clone()],
            },
            ScenarioNode {
                probability: 0.4,
                wind_scale: vec![wind.iter().map(|w| 0.8 * w).collect()],
            },
        ]
    } else {
        vec![ScenarioNode {
            probability: 1.0,
            wind_scale: vec![wind],
        }]
    };
    UcInstance {
        horizon: t_n,
        demand,
        generators: desk_generators(),
        farms: vec![FarmSpec {
            name: "farm".into(),
            n_turbines: cfg.n_turbines,
            turbine: desk_turbine(),
            distribution: WindSpeedDistribution::Histogram(vec![
                (6.5, 0.2),
                (7.5, 0.3),
                (8.5, 0.3),
                (9.5, 0.2),
            ]),
            si_penetration: cfg.si_penetration,
        }],
        system: desk_system(),
        scenarios,
        mode: if cfg.two_stage {
            UcMode::TwoStage
        } else {
            UcMode::Deterministic
        },
        planes: None,
    }
}
