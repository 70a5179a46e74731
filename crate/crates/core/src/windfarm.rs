//! Farm-level aggregation of turbine SI capability and aerodynamic loss over
//! a wind-speed distribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::turbine::{self, OperatingPoint, Regime, TurbineError, TurbineParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FarmError {
    #[error("invalid wind distribution: {0}")]
    Distribution(String),
    #[error("quadrature did not converge: {coarse} vs {fine} (relative {rel:.2e})")]
    Quadrature { coarse: f64, fine: f64, rel: f64 },
    #[error("farm SI {requested} exceeds capacity {capacity}")]
    OverCapacity { requested: f64, capacity: f64 },
    #[error(transparent)]
    Turbine(#[from] TurbineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Weibull,
}

/// κ_j(v_w): either explicit (speed, probability) pairs or a parametric law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindSpeedDistribution {
    Histogram(Vec<(f64, f64)>),
    Parametric {
        family: Family,
        shape: f64,
        scale: f64,
    },
}

const SIMPSON_NODES: usize = 401;
const SIMPSON_CHECK_NODES: usize = 201;
const QUAD_RTOL: f64 = 1e-3;

impl WindSpeedDistribution {
    pub fn point(speed: f64) -> Self {
        WindSpeedDistribution::Histogram(vec![(speed, 1.0)])
    }

    pub fn validate(&self) -> Result<(), FarmError> {
        match self {
            WindSpeedDistribution::Histogram(bins) => {
                if bins.is_empty() {
                    return Err(FarmError::Distribution("empty histogram".into()));
                }
                let mut total = 0.0;
                for &(v, p) in bins {
                    if !(v >= 0.0 && v.is_finite()) || !(p >= 0.0 && p.is_finite()) {
                        return Err(FarmError::Distribution(format!("bad bin ({v}, {p})")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(FarmError::Distribution(format!(
                        "probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
            WindSpeedDistribution::Parametric { shape, scale, .. } => {
                if !(*shape >= 1.0 && shape.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return Err(FarmError::Distribution(format!(
                        "Weibull needs shape ≥ 1 and scale > 0, got ({shape}, {scale})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Quadrature nodes (speed, weight) with weights summing to one.
    pub fn nodes(&self, turbine: &TurbineParams) -> Result<Vec<(f64, f64)>, FarmError> {
        self.validate()?;
        match self {
            WindSpeedDistribution::Histogram(bins) => Ok(bins.clone()),
            WindSpeedDistribution::Parametric { shape, scale, .. } => {
                Ok(weibull_nodes(*shape, *scale, turbine, SIMPSON_NODES))
            }
        }
    }
}

fn weibull_cdf(v: f64, k: f64, c: f64) -> f64 {
    -(-(v / c).powf(k)).exp_m1()
}

fn weibull_pdf(v: f64, k: f64, c: f64) -> f64 {
    if v <= 0.0 {
        return if k == 1.0 { 1.0 / c } else { 0.0 };
    }
    (k / c) * (v / c).powf(k - 1.0) * (-(v / c).powf(k)).exp()
}

/// Composite Simpson on [0, 1.5·rated] plus tail nodes for the pitch
/// region and for speeds beyond cut-out. The Simpson part is renormalised to
/// the exact CDF so the weights sum to one.
fn weibull_nodes(k: f64, c: f64, turbine: &TurbineParams, n: usize) -> Vec<(f64, f64)> {
    debug_assert!(n % 2 == 1);
    let upper = 1.5 * turbine.rated_wind_speed;
    let h = upper / (n - 1) as f64;
    let mut nodes: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = i as f64 * h;
            let s = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (v, s * h / 3.0 * weibull_pdf(v, k, c))
        })
        .collect();
    let raw: f64 = nodes.iter().map(|n| n.1).sum();
    let body = weibull_cdf(upper, k, c);
    if raw > 0.0 {
        for node in &mut nodes {
            node.1 *= body / raw;
        }
    }
    let cut_out = turbine.cut_out_speed.max(upper);
    nodes.push((upper, weibull_cdf(cut_out, k, c) - body));
    nodes.push((cut_out, 1.0 - weibull_cdf(cut_out, k, c)));
    nodes
}

/// One quadrature node: turbines seeing the same wind speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmNode {
    pub weight: f64,
    pub op: OperatingPoint,
    /// Per-turbine H_s,max at this speed.
    pub h_max: f64,
    /// Per-turbine SI share under the current farm schedule.
    pub h_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmModel {
    pub n_turbines: u32,
    pub turbine: TurbineParams,
    pub distribution: WindSpeedDistribution,
    /// Multiplier applied to every speed of the distribution.
    pub wind_scale: f64,
    pub capacity_mw: f64,
    pub si_capacity: f64,
    pub gamma_j: f64,
    pub h_sj: f64,
    pub df_lim: f64,
    pub rocof_lim: f64,
    pub nodes: Vec<FarmNode>,
}

impl FarmModel {
    pub fn new(
        n_turbines: u32,
        turbine: TurbineParams,
        distribution: WindSpeedDistribution,
        df_lim: f64,
        rocof_lim: f64,
    ) -> Result<Self, FarmError> {
        Self::with_wind_scale(n_turbines, turbine, distribution, 1.0, df_lim, rocof_lim)
    }

    pub fn with_wind_scale(
        n_turbines: u32,
        turbine: TurbineParams,
        distribution: WindSpeedDistribution,
        wind_scale: f64,
        df_lim: f64,
        rocof_lim: f64,
    ) -> Result<Self, FarmError> {
        turbine.validate()?;
        if !(wind_scale >= 0.0 && wind_scale.is_finite()) {
            return Err(FarmError::Distribution(format!(
                "bad wind scale {wind_scale}"
            )));
        }
        let raw = distribution.nodes(&turbine)?;
        let nodes = build_nodes(&raw, &turbine, wind_scale, df_lim, rocof_lim);
        if let WindSpeedDistribution::Parametric { shape, scale, .. } = distribution {
            let coarse_nodes = build_nodes(
                &weibull_nodes(shape, scale, &turbine, SIMPSON_CHECK_NODES),
                &turbine,
                wind_scale,
                df_lim,
                rocof_lim,
            );
            let fine: f64 = nodes.iter().map(|n| n.weight * n.h_max).sum();
            let coarse: f64 = coarse_nodes.iter().map(|n| n.weight * n.h_max).sum();
            let rel = (fine - coarse).abs() / fine.abs().max(1e-12);
            if fine > 0.0 && rel > QUAD_RTOL {
                return Err(FarmError::Quadrature { coarse, fine, rel });
            }
        }
        let n = n_turbines as f64;
        let mut farm = FarmModel {
            n_turbines,
            capacity_mw: n * turbine.p_rated_max,
            si_capacity: n * nodes.iter().map(|nd| nd.weight * nd.h_max).sum::<f64>(),
            turbine,
            distribution,
            wind_scale,
            gamma_j: 0.0,
            h_sj: 0.0,
            df_lim,
            rocof_lim,
            nodes,
        };
        farm.gamma_j = if farm.si_capacity > 0.0 {
            farm.damping_at(farm.si_capacity)? / farm.si_capacity.powi(2)
        } else {
            0.0
        };
        Ok(farm)
    }

    /// Expected pre-disturbance output [MW]: the farm's wind availability.
    pub fn expected_power(&self) -> f64 {
        self.n_turbines as f64 * self.nodes.iter().map(|n| n.weight * n.op.p0).sum::<f64>()
    }

    /// Set the scheduled farm SI and allocate it over the turbines.
    pub fn set_si(&mut self, h_sj: f64) -> Result<(), FarmError> {
        let tol = 1e-9 * self.si_capacity.max(1.0);
        if !(h_sj >= 0.0) || h_sj > self.si_capacity + tol {
            return Err(FarmError::OverCapacity {
                requested: h_sj,
                capacity: self.si_capacity,
            });
        }
        let h_sj = h_sj.min(self.si_capacity);
        let shares = self.allocate(h_sj);
        for (node, s) in self.nodes.iter_mut().zip(shares) {
            node.h_share = s;
        }
        self.h_sj = h_sj;
        Ok(())
    }

    /// Water-filling: every turbine gets the same share `level`, clamped at
    /// its own H_s,max, with `level` chosen so the farm total is `h_sj`.
    pub fn allocate(&self, h_sj: f64) -> Vec<f64> {
        let n = self.n_turbines as f64;
        if h_sj <= 0.0 || n == 0.0 {
            return vec![0.0; self.nodes.len()];
        }
        let total = |level: f64| -> f64 {
            n * self
                .nodes
                .iter()
                .map(|nd| nd.weight * nd.h_max.min(level))
                .sum::<f64>()
        };
        if h_sj >= self.si_capacity {
            return self.nodes.iter().map(|nd| nd.h_max).collect();
        }
        // Piecewise-linear in `level`: walk the sorted breakpoints.
        let mut caps: Vec<f64> = self
            .nodes
            .iter()
            .map(|nd| nd.h_max)
            .filter(|&h| h > 0.0)
            .collect();
        caps.sort_by(|a, b| a.total_cmp(b));
        let mut lo = 0.0;
        let mut level = 0.0;
        for &cap in &caps {
            let at_cap = total(cap);
            if at_cap >= h_sj {
                let at_lo = total(lo);
                level = lo + (h_sj - at_lo) / (at_cap - at_lo) * (cap - lo);
                break;
            }
            lo = cap;
        }
        self.nodes.iter().map(|nd| nd.h_max.min(level)).collect()
    }

    /// Summed aerodynamic power change [MW] at deviation `df` for the
    /// current allocation.
    pub fn power_loss(&self, df: f64) -> Result<f64, FarmError> {
        self.loss_with_shares(
            df,
            &self.nodes.iter().map(|n| n.h_share).collect::<Vec<_>>(),
        )
    }

    fn loss_with_shares(&self, df: f64, shares: &[f64]) -> Result<f64, FarmError> {
        let mut sum = 0.0;
        for (node, &h) in self.nodes.iter().zip(shares) {
            if node.weight > 0.0 && h > 0.0 {
                sum += node.weight * turbine::mech_power_loss(df, h, &node.op, &self.turbine)?;
            }
        }
        Ok(self.n_turbines as f64 * sum)
    }

    /// Farm damping D_sj(H) for farm SI `h` under water-filling.
    pub fn damping_at(&self, h: f64) -> Result<f64, FarmError> {
        let shares = self.allocate(h);
        Ok((self.loss_with_shares(-self.df_lim, &shares)? / -self.df_lim).max(0.0))
    }

    /// Linear loss model γ_j·h_sj²·Δf.
    pub fn linear_loss(&self, df: f64) -> f64 {
        self.gamma_j * self.h_sj * self.h_sj * df
    }
}

fn build_nodes(
    raw: &[(f64, f64)],
    turbine: &TurbineParams,
    wind_scale: f64,
    df_lim: f64,
    rocof_lim: f64,
) -> Vec<FarmNode> {
    raw.iter()
        .map(|&(v, w)| {
            let op = turbine::operating_point(turbine, v * wind_scale);
            let h_max = if op.regime == Regime::Stopped {
                0.0
            } else {
                turbine::si_capacity_single(&op, turbine, df_lim, rocof_lim)
            };
            FarmNode {
                weight: w,
                op,
                h_max,
                h_share: 0.0,
            }
        })
        .collect()
}

/// Σ_j H^C_sj.
pub fn farm_si_capacity(farm: &FarmModel) -> f64 {
    farm.si_capacity
}

/// γ_j.
pub fn farm_power_loss_coeff(farm: &FarmModel) -> f64 {
    farm.gamma_j
}
