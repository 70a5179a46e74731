//! Shared pieces of the per-command JSON configs.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use siuc_core::turbine::TurbineParams;
use siuc_core::windfarm::{FarmModel, WindSpeedDistribution};
use siuc_core::SystemParams;

use crate::error::{schema, CliError};

/// Parses a config document; unknown fields are rejected.
pub fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| schema(e.to_string()))
}

pub fn gb() -> SystemParams {
    SystemParams::gb_reference()
}

pub fn check_system(sys: &SystemParams) -> Result<(), CliError> {
    sys.validate().map_err(|e| schema(format!("system: {e}")))
}

/// A farm of identical turbines providing a fraction of its SI capacity.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmConfig {
    pub n_turbines: u32,
    #[serde(default)]
    pub turbine: TurbineParams,
    pub distribution: WindSpeedDistribution,
    /// Scheduled SI as a fraction of the farm's capacity.
    #[serde(default = "one")]
    pub si_fraction: f64,
}

fn one() -> f64 {
    1.0
}

impl FarmConfig {
    pub fn build(&self, sys: &SystemParams) -> Result<FarmModel, CliError> {
        if !(0.0..=1.0).contains(&self.si_fraction) {
            return Err(schema(format!(
                "si_fraction {} outside [0, 1]",
                self.si_fraction
            )));
        }
        let mut farm = FarmModel::new(
            self.n_turbines,
            self.turbine.clone(),
            self.distribution.clone(),
            sys.df_lim,
            sys.rocof_lim,
        )
        .map_err(|e| schema(format!("farm: {e}")))?;
        farm.set_si(self.si_fraction * farm.si_capacity)
            .map_err(|e| schema(format!("farm: {e}")))?;
        Ok(farm)
    }
}

/// Evenly spaced values `from, from + step, …, ≤ to`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0
            && self.from.is_finite()
            && self.to.is_finite()
            && self.from <= self.to)
        {
            return Err(schema(format!("empty or invalid range {self:?}")));
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.from + k as f64 * self.step).collect())
    }
}
