//! Solving, solution extraction and SI-time-constant bookkeeping.

use serde::{Deserialize, Serialize};

use super::bnb::{branch_and_bound, BnbOptions, MilpStatus};
use super::model::{build_model, SiPolicy, UcModel, UcOptions};
use super::{FarmPeriod, InfeasibleCause, UcError, UcInstance};
use crate::frequency::{CertCase, FrequencyInputs};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub bnb: BnbOptions,
    /// Optional commitment pattern `[g][t]` used as the first incumbent.
    pub start: Option<Vec<Vec<bool>>>,
}

/// Second-stage outcome for one period of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSolution {
    pub period: usize,
    pub scenario: usize,
    pub dispatch: Vec<f64>,
    pub pfr: Vec<f64>,
    pub wind_used: Vec<f64>,
    pub wind_curtailed: Vec<f64>,
    pub h_sj: Vec<f64>,
    pub h_conv: f64,
    pub h_syn: f64,
    pub pfr_total: f64,
    /// D − Σγ_j H_sj².
    pub d_eff: f64,
    /// SI time constant 𝐇_s [s].
    pub si_time_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub status: MilpStatus,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub branchings: usize,
    /// `[g][t]`
    pub commitment: Vec<Vec<bool>>,
    pub startups: Vec<Vec<bool>>,
    pub nodes: Vec<NodeSolution>,
    #[serde(skip)]
    pub x: Vec<f64>,
}

impl ScheduleSolution {
    /// Replay cases for the frequency certifier, one per period and scenario.
    pub fn cert_cases(&self, model: &UcModel) -> Result<Vec<CertCase>, UcError> {
        let mut cases = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let mut farms = Vec::with_capacity(n.h_sj.len());
            for (j, &h) in n.h_sj.iter().enumerate() {
                let mut f = model.farms[n.scenario][j][n.period].si.clone();
                f.set_si(h.clamp(0.0, f.si_capacity))?;
                farms.push(f);
            }
            cases.push(CertCase {
                period: n.period,
                scenario: n.scenario,
                h_conv: n.h_conv,
                pfr_r: n.pfr_total,
                farms,
            });
        }
        Ok(cases)
    }

    /// Per-period dispatch summary as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,period,committed,thermal_mw,wind_mw,curtailed_mw,h_conv,h_syn,pfr_mw,d_eff,si_time_constant_s\n");
        for n in &self.nodes {
            let committed = self.commitment.iter().filter(|row| row[n.period]).count();
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                n.scenario,
                n.period,
                committed,
                n.dispatch.iter().sum::<f64>(),
                n.wind_used.iter().sum::<f64>(),
                n.wind_curtailed.iter().sum::<f64>(),
                n.h_conv,
                n.h_syn,
                n.pfr_total,
                n.d_eff,
                n.si_time_constant
            ));
        }
        out
    }
}

/// Total SI time constant H̄_s·f₀/ΣP^c_j [s].
pub fn si_time_constant(h_syn_total: f64, farms: &[FarmPeriod], f0: f64) -> Result<f64, UcError> {
    let capacity: f64 = farms.iter().map(|f| f.capacity_mw).sum();
    if capacity <= 0.0 {
        return Err(UcError::Instance("no installed wind capacity".into()));
    }
    Ok(h_syn_total * f0 / capacity)
}

/// Branch-and-bound on the assembled model.
pub fn solve(model: &UcModel, opts: &SolveOptions) -> Result<ScheduleSolution, UcError> {
    let start = opts.start.as_ref().map(|c| model.start_from_commitment(c));
    let res = branch_and_bound(&model.milp, &opts.bnb, start.as_deref())?;
    match res.status {
        MilpStatus::Infeasible => return Err(UcError::Infeasible(diagnose(model, &opts.bnb)?)),
        MilpStatus::Unbounded => return Err(UcError::Instance("model is unbounded".into())),
        _ => {}
    }
    let Some(x) = res.x else {
        // Limit reached before any incumbent was found.
        return Err(UcError::Options(format!(
            "no incumbent within the limits ({:?})",
            res.status
        )));
    };
    extract(
        model,
        x,
        res.status,
        res.objective,
        res.bound,
        res.gap,
        res.nodes,
        res.branchings,
    )
}

fn diagnose(model: &UcModel, bnb: &BnbOptions) -> Result<InfeasibleCause, UcError> {
    if !model.options.frequency_constraints {
        return Ok(InfeasibleCause::Balance);
    }
    let relaxed = build_model(&model.instance, &UcOptions::no_frequency())?;
    let res = branch_and_bound(&relaxed.milp, bnb, None)?;
    Ok(if res.x.is_some() {
        InfeasibleCause::Frequency
    } else {
        InfeasibleCause::Balance
    })
}

#[allow(clippy::too_many_arguments)]
fn extract(
    model: &UcModel,
    x: Vec<f64>,
    status: MilpStatus,
    objective: f64,
    bound: f64,
    gap: f64,
    nodes_explored: usize,
    branchings: usize,
) -> Result<ScheduleSolution, UcError> {
    let inst = &model.instance;
    let idx = &model.index;
    let f0 = inst.system.f0;
    let commitment: Vec<Vec<bool>> = idx
        .u
        .iter()
        .map(|row| row.iter().map(|&c| x[c] > 0.5).collect())
        .collect();
    let startups = idx
        .startup
        .iter()
        .map(|row| row.iter().map(|&c| x[c] > 0.5).collect())
        .collect();
    let n_j = inst.farms.len();
    let mut nodes = Vec::new();
    for s in 0..model.n_scenarios() {
        for t in 0..inst.horizon {
            let farms: Vec<&FarmPeriod> = (0..n_j).map(|j| &model.farms[s][j][t]).collect();
            let h_sj: Vec<f64> = (0..n_j).map(|j| x[idx.hs[s][j][t]].max(0.0)).collect();
            let wind_used: Vec<f64> = (0..n_j).map(|j| x[idx.wind[s][j][t]].max(0.0)).collect();
            let h_conv: f64 = inst
                .generators
                .iter()
                .enumerate()
                .filter(|(g, _)| commitment[*g][t])
                .map(|(_, u)| u.inertia(f0))
                .sum();
            let h_syn = h_sj.iter().sum();
            let gammas: Vec<f64> = farms.iter().map(|f| f.si.gamma_j).collect();
            let capacity: f64 = farms.iter().map(|f| f.capacity_mw).sum();
            let si_tc = if capacity > 0.0 {
                h_syn * f0 / capacity
            } else {
                0.0
            };
            nodes.push(NodeSolution {
                period: t,
                scenario: s,
                dispatch: (0..inst.generators.len())
                    .map(|g| x[idx.p[s][g][t]])
                    .collect(),
                pfr: (0..inst.generators.len())
                    .map(|g| x[idx.r[s][g][t]].max(0.0))
                    .collect(),
                wind_curtailed: farms
                    .iter()
                    .zip(&wind_used)
                    .map(|(f, w)| (f.available_mw - w).max(0.0))
                    .collect(),
                wind_used,
                d_eff: FrequencyInputs::effective_damping(&inst.system, &gammas, &h_sj),
                h_sj,
                h_conv,
                h_syn,
                pfr_total: x[idx.pfr_total[s][t]].max(0.0),
                si_time_constant: si_tc,
            });
        }
    }
    Ok(ScheduleSolution {
        status,
        objective,
        bound,
        gap,
        nodes_explored,
        branchings,
        commitment,
        startups,
        nodes,
        x,
    })
}

/// Builds and solves in one step.
pub fn schedule(
    instance: &UcInstance,
    uc: &UcOptions,
    opts: &SolveOptions,
) -> Result<ScheduleSolution, UcError> {
    solve(&build_model(instance, uc)?, opts)
}

/// Schedule with a fixed SI time constant applied in every period.
pub fn fixed_si_mode(
    instance: &UcInstance,
    time_constant: f64,
    opts: &SolveOptions,
) -> Result<ScheduleSolution, UcError> {
    schedule(
        instance,
        &UcOptions::with_si(SiPolicy::Fixed { time_constant }),
        opts,
    )
}

/// Expands the scenario tree: the node-indexed data the model is built on,
/// with first-stage commitment shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedNode {
    pub scenario: usize,
    pub period: usize,
    pub probability: f64,
    pub demand: f64,
    /// Available wind per farm [MW].
    pub wind_available: Vec<f64>,
    /// H^C_sj per farm.
    pub si_capacity: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn scenario_expand(instance: &UcInstance) -> Result<Vec<ExpandedNode>, UcError> {
    instance.validate_tree()?;
    let grid = instance.farm_grid()?;
    let mut out = Vec::new();
    for (s, sc) in instance.scenarios.iter().enumerate() {
        for t in 0..instance.horizon {
            let farms = grid[s].iter().map(|f| &f[t]);
            out.push(ExpandedNode {
                scenario: s,
                period: t,
                probability: sc.probability,
                demand: instance.demand[t],
                wind_available: farms.clone().map(|f| f.available_mw).collect(),
                si_capacity: farms.clone().map(|f| f.si.si_capacity).collect(),
                gamma: farms.map(|f| f.si.gamma_j).collect(),
            });
        }
    }
    Ok(out)
}
