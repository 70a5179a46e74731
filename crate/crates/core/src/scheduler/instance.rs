//! Unit-commitment instance data.

use serde::{Deserialize, Serialize};

use super::UcError;
use crate::nadir_geom::{DomainBox, LinearizerConfig, PlaneSet};
use crate::system::SystemParams;
use crate::turbine::TurbineParams;
use crate::windfarm::{FarmModel, WindSpeedDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorUnit {
    pub name: String,
    /// Inertia constant [s] on the unit's own rating.
    pub h_g: f64,
    pub p_max: f64,
    pub p_min: f64,
    /// [£/MWh]
    pub marginal_cost: f64,
    /// [£/h]
    pub no_load_cost: f64,
    /// [£]
    pub startup_cost: f64,
    /// [h]
    pub min_up: usize,
    /// [h]
    pub min_down: usize,
    /// Fraction of committed headroom deliverable as PFR.
    pub max_pfr_share: f64,
    /// Commitment state before the first period.
    #[serde(default)]
    pub initial_on: bool,
}

impl GeneratorUnit {
    pub fn validate(&self) -> Result<(), UcError> {
        let bad = |what: &str| {
            Err(UcError::Instance(format!(
                "generator `{}`: {what}",
                self.name
            )))
        };
        let finite = [
            self.h_g,
            self.p_max,
            self.p_min,
            self.marginal_cost,
            self.no_load_cost,
            self.startup_cost,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("parameters must be finite and non-negative");
        }
        if self.p_min > self.p_max {
            return bad("p_min exceeds p_max");
        }
        if !(0.0..=1.0).contains(&self.max_pfr_share) {
            return bad("max_pfr_share must lie in [0, 1]");
        }
        Ok(())
    }

    /// Stored kinetic energy over nominal frequency, H_g·P_max/f₀ [MW·s/Hz].
    pub fn inertia(&self, f0: f64) -> f64 {
        self.h_g * self.p_max / f0
    }
}

/// A wind farm of identical turbines; per-period availability comes from
/// scaling the speed distribution by the scenario's wind factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmSpec {
    pub name: String,
    pub n_turbines: u32,
    pub turbine: TurbineParams,
    pub distribution: WindSpeedDistribution,
    /// Fraction of turbines with SI control.
    #[serde(default = "full_penetration")]
    pub si_penetration: f64,
}

fn full_penetration() -> f64 {
    1.0
}

impl FarmSpec {
    /// Number of SI-capable turbines.
    pub fn si_turbines(&self) -> u32 {
        (self.si_penetration * self.n_turbines as f64).round() as u32
    }
}

/// One farm in one period of one scenario. `si` models the SI-capable
/// turbines only; the others stay on MPPT and neither help nor lose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmPeriod {
    pub si: FarmModel,
    /// Expected available power of the whole farm [MW].
    pub available_mw: f64,
    /// Installed capacity of the whole farm [MW].
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioNode {
    pub probability: f64,
    /// Wind-speed multiplier per farm, per period.
    pub wind_scale: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UcMode {
    Deterministic,
    TwoStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcInstance {
    /// Number of hourly periods.
    pub horizon: usize,
    pub demand: Vec<f64>,
    pub generators: Vec<GeneratorUnit>,
    pub farms: Vec<FarmSpec>,
    pub system: SystemParams,
    pub scenarios: Vec<ScenarioNode>,
    pub mode: UcMode,
    #[serde(default)]
    pub planes: Option<PlaneSet>,
}

/// Farm models for every scenario, farm and period: `[s][j][t]`.
pub type FarmGrid = Vec<Vec<Vec<FarmPeriod>>>;

impl UcInstance {
    pub fn validate(&self) -> Result<(), UcError> {
        let bad = |m: String| Err(UcError::Instance(m));
        self.system
            .validate()
            .map_err(|e| UcError::Instance(e.to_string()))?;
        if self.generators.is_empty() {
            return bad("instance has no generators".into());
        }
        if self.horizon == 0 || self.demand.len() != self.horizon {
            return bad(format!(
                "demand has {} entries for horizon {}",
                self.demand.len(),
                self.horizon
            ));
        }
        if self.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("demand must be finite and non-negative".into());
        }
        for g in &self.generators {
            g.validate()?;
        }
        for f in &self.farms {
            if !(0.0..=1.0).contains(&f.si_penetration) {
                return bad(format!(
                    "farm `{}`: si_penetration must lie in [0, 1]",
                    f.name
                ));
            }
        }
        self.validate_tree()?;
        if let Some(p) = &self.planes {
            p.verify()?;
        }
        Ok(())
    }

    /// Scenario tree checks (the malformed-tree errors of scenario expansion).
    pub fn validate_tree(&self) -> Result<(), UcError> {
        let bad = |m: String| Err(UcError::Tree(m));
        if self.scenarios.is_empty() {
            return bad("no scenarios".into());
        }
        if self.mode == UcMode::Deterministic && self.scenarios.len() != 1 {
            return bad(format!(
                "deterministic mode takes one scenario, got {}",
                self.scenarios.len()
            ));
        }
        let mut total = 0.0;
        for (s, sc) in self.scenarios.iter().enumerate() {
            if !(sc.probability > 0.0 && sc.probability <= 1.0) {
                return bad(format!(
                    "scenario {s} probability {} outside (0, 1]",
                    sc.probability
                ));
            }
            total += sc.probability;
            if sc.wind_scale.len() != self.farms.len() {
                return bad(format!(
                    "scenario {s} has wind for {} farms, expected {}",
                    sc.wind_scale.len(),
                    self.farms.len()
                ));
            }
            for (j, w) in sc.wind_scale.iter().enumerate() {
                if w.len() != self.horizon {
                    return bad(format!(
                        "scenario {s} farm {j}: {} periods, expected {}",
                        w.len(),
                        self.horizon
                    ));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return bad(format!(
                        "scenario {s} farm {j}: wind scale must be finite and non-negative"
                    ));
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("scenario probabilities sum to {total}"));
        }
        Ok(())
    }

    pub fn farm_grid(&self) -> Result<FarmGrid, UcError> {
        let sys = &self.system;
        self.scenarios
            .iter()
            .map(|sc| {
                self.farms
                    .iter()
                    .zip(&sc.wind_scale)
                    .map(|(spec, scales)| {
                        scales
                            .iter()
                            .map(|&k| {
                                let whole = FarmModel::with_wind_scale(
                                    spec.n_turbines,
                                    spec.turbine.clone(),
                                    spec.distribution.clone(),
                                    k,
                                    sys.df_lim,
                                    sys.rocof_lim,
                                )?;
                                let si = FarmModel::with_wind_scale(
                                    spec.si_turbines(),
                                    spec.turbine.clone(),
                                    spec.distribution.clone(),
                                    k,
                                    sys.df_lim,
                                    sys.rocof_lim,
                                )?;
                                Ok(FarmPeriod {
                                    si,
                                    available_mw: whole.expected_power(),
                                    capacity_mw: whole.capacity_mw,
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Underproduction coefficient per farm used for the plane set: the
    /// largest γ_j over all periods and scenarios.
    pub fn plane_gammas(grid: &FarmGrid, n_farms: usize) -> Vec<f64> {
        (0..n_farms)
            .map(|j| {
                grid.iter()
                    .flat_map(|s| s[j].iter().map(|f| f.si.gamma_j))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Box containing every (H, R, H_s) the model can schedule.
    pub fn plane_domain(&self, grid: &FarmGrid) -> DomainBox {
        let sys = &self.system;
        let hs: Vec<(f64, f64)> = (0..self.farms.len())
            .map(|j| {
                let cap = grid
                    .iter()
                    .flat_map(|s| s[j].iter().map(|f| f.si.si_capacity))
                    .fold(0.0, f64::max);
                (0.0, cap)
            })
            .collect();
        let h_conv: f64 = self.generators.iter().map(|g| g.inertia(sys.f0)).sum();
        let h_hi = h_conv + hs.iter().map(|x| x.1).sum::<f64>();
        let r_hi: f64 = self
            .generators
            .iter()
            .map(|g| g.max_pfr_share * g.p_max)
            .sum();
        let h_lo = (sys.delta_p / (2.0 * sys.rocof_lim)).min(h_hi);
        let r_lo = (sys.delta_p - sys.df_ss_lim * sys.damping).clamp(0.0, r_hi);
        DomainBox {
            h: (h_lo, h_hi),
            r: (r_lo, r_hi),
            hs,
        }
    }

    /// Generates and certifies the nadir plane set for this instance. With
    /// `underproduction = false` the SI damping term is dropped (γ = 0),
    /// which is unsafe and exists only to demonstrate that.
    pub fn linearize(
        &self,
        n_layers: usize,
        m_planes: usize,
        n_samples: usize,
        seed: u64,
        underproduction: bool,
    ) -> Result<PlaneSet, UcError> {
        self.validate()?;
        let grid = self.farm_grid()?;
        let mut gammas = Self::plane_gammas(&grid, self.farms.len());
        if !underproduction {
            gammas.iter_mut().for_each(|g| *g = 0.0);
        }
        let domain = self.plane_domain(&grid);
        check_damping(&self.system, &gammas, &domain)?;
        let cfg = LinearizerConfig::new(n_layers, m_planes, domain);
        Ok(PlaneSet::build(
            &self.system,
            &gammas,
            cfg,
            n_samples,
            seed,
        )?)
    }
}

/// D − Σγ_j·max(H_sj)² must stay positive over the domain.
pub(crate) fn check_damping(
    sys: &SystemParams,
    gammas: &[f64],
    domain: &DomainBox,
) -> Result<(), UcError> {
    let worst = sys.damping
        - gammas
            .iter()
            .zip(&domain.hs)
            .map(|(g, h)| g * h.1 * h.1)
            .sum::<f64>();
    if worst <= 0.0 {
        return Err(UcError::Instance(format!(
            "effective damping reaches {worst} MW/Hz at full SI; reduce SI capacity or raise D"
        )));
    }
    Ok(())
}
