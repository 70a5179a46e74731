//! MILP assembly.

use serde::{Deserialize, Serialize};

use super::instance::{check_damping, FarmGrid, UcInstance};
use super::milp::{Milp, Sense};
use super::{InfeasibleCause, UcError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SiPolicy {
    /// Farms provide no SI.
    Disabled,
    /// H_sj is a decision variable in [0, H^C_sj].
    Optimal,
    /// Fixed SI time constant [s]: H_sj = min(𝐇·P^c_j/f₀, H^C_sj).
    Fixed { time_constant: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcOptions {
    pub frequency_constraints: bool,
    pub si: SiPolicy,
    /// Whether the SI damping term γ_j·H_sj² is modelled. Dropping it is
    /// unsafe and only meant for demonstrating the consequence.
    pub underproduction: bool,
}

impl Default for UcOptions {
    fn default() -> Self {
        UcOptions {
            frequency_constraints: true,
            si: SiPolicy::Optimal,
            underproduction: true,
        }
    }
}

impl UcOptions {
    pub fn no_frequency() -> Self {
        UcOptions {
            frequency_constraints: false,
            si: SiPolicy::Disabled,
            underproduction: true,
        }
    }

    pub fn with_si(si: SiPolicy) -> Self {
        UcOptions {
            si,
            ..Self::default()
        }
    }
}

/// Column indices of the assembled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIndex {
    /// `[g][t]`
    pub u: Vec<Vec<usize>>,
    pub startup: Vec<Vec<usize>>,
    pub shutdown: Vec<Vec<usize>>,
    /// `[s][g][t]`
    pub p: Vec<Vec<Vec<usize>>>,
    pub r: Vec<Vec<Vec<usize>>>,
    /// `[s][j][t]`
    pub wind: Vec<Vec<Vec<usize>>>,
    pub hs: Vec<Vec<Vec<usize>>>,
    /// `[s][t]`
    pub h_total: Vec<Vec<usize>>,
    pub pfr_total: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct UcModel {
    pub milp: Milp,
    pub index: ModelIndex,
    pub options: UcOptions,
    pub instance: UcInstance,
    pub farms: FarmGrid,
}

const HOURS_PER_PERIOD: f64 = 1.0;

impl UcModel {
    /// A full-length start vector carrying a commitment pattern `[g][t]`.
    pub fn start_from_commitment(&self, commit: &[Vec<bool>]) -> Vec<f64> {
        let mut x = vec![0.0; self.milp.columns.len()];
        for (g, row) in self.index.u.iter().enumerate() {
            for (t, &c) in row.iter().enumerate() {
                x[c] = if commit[g][t] { 1.0 } else { 0.0 };
            }
        }
        x
    }

    pub fn n_scenarios(&self) -> usize {
        self.instance.scenarios.len()
    }
}

/// Scheduled farm SI under a fixed time constant, before any capacity clamp.
pub fn fixed_si_target(time_constant: f64, capacity_mw: f64, f0: f64) -> f64 {
    time_constant * capacity_mw / f0
}

/// Assembles the MILP for `instance` under `opts`.
pub fn build_model(instance: &UcInstance, opts: &UcOptions) -> Result<UcModel, UcError> {
    instance.validate()?;
    if let SiPolicy::Fixed { time_constant } = opts.si {
        if !(time_constant >= 0.0 && time_constant.is_finite()) {
            return Err(UcError::Options(format!(
                "fixed SI time constant {time_constant} must be ≥ 0"
            )));
        }
    }
    let sys = instance.system;
    let farms = instance.farm_grid()?;
    let n_g = instance.generators.len();
    let n_j = instance.farms.len();
    let n_t = instance.horizon;
    let n_s = instance.scenarios.len();

    // Capacity screen: all units plus every available MW of wind.
    let p_all: f64 = instance.generators.iter().map(|g| g.p_max).sum();
    for s in 0..n_s {
        for t in 0..n_t {
            let wind: f64 = (0..n_j).map(|j| farms[s][j][t].available_mw).sum();
            if p_all + wind < instance.demand[t] - 1e-9 {
                return Err(UcError::Infeasible(InfeasibleCause::Capacity));
            }
        }
    }

    let planes = if opts.frequency_constraints {
        let set = instance.planes.as_ref().ok_or_else(|| {
            UcError::Options("frequency constraints need a certified plane set".into())
        })?;
        let mut expect = UcInstance::plane_gammas(&farms, n_j);
        if !opts.underproduction {
            expect.iter_mut().for_each(|g| *g = 0.0);
        }
        let got = set.coeffs.gammas(&sys);
        let matches = got.len() == expect.len()
            && got
                .iter()
                .zip(&expect)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1e-300));
        if set.system != sys || !matches {
            return Err(UcError::Options(
                "plane set was built for a different system or underproduction setting".into(),
            ));
        }
        check_damping(&sys, &got, &set.config.domain)?;
        Some(set)
    } else {
        None
    };

    let mut m = Milp::default();
    let gen = &instance.generators;
    let mut idx = ModelIndex {
        u: vec![vec![0; n_t]; n_g],
        startup: vec![vec![0; n_t]; n_g],
        shutdown: vec![vec![0; n_t]; n_g],
        p: vec![vec![vec![0; n_t]; n_g]; n_s],
        r: vec![vec![vec![0; n_t]; n_g]; n_s],
        wind: vec![vec![vec![0; n_t]; n_j]; n_s],
        hs: vec![vec![vec![0; n_t]; n_j]; n_s],
        h_total: vec![vec![0; n_t]; n_s],
        pfr_total: vec![vec![0; n_t]; n_s],
    };

    // First stage: commitment and transitions.
    for (g, unit) in gen.iter().enumerate() {
        for t in 0..n_t {
            idx.u[g][t] = m.add_col(
                format!("u[{g},{t}]"),
                0.0,
                1.0,
                unit.no_load_cost * HOURS_PER_PERIOD,
                true,
            );
            idx.startup[g][t] =
                m.add_col(format!("v[{g},{t}]"), 0.0, 1.0, unit.startup_cost, false);
            idx.shutdown[g][t] = m.add_col(format!("w[{g},{t}]"), 0.0, 1.0, 0.0, false);
        }
    }
    for (g, unit) in gen.iter().enumerate() {
        let init = if unit.initial_on { 1.0 } else { 0.0 };
        for t in 0..n_t {
            let mut coefs = vec![
                (idx.startup[g][t], 1.0),
                (idx.shutdown[g][t], -1.0),
                (idx.u[g][t], -1.0),
            ];
            let rhs = if t == 0 {
                -init
            } else {
                coefs.push((idx.u[g][t - 1], 1.0));
                0.0
            };
            m.add_row(format!("trans[{g},{t}]"), coefs, Sense::Eq, rhs);
            if unit.min_up > 1 {
                let from = (t + 1).saturating_sub(unit.min_up);
                let mut c: Vec<_> = (from..=t).map(|k| (idx.startup[g][k], 1.0)).collect();
                c.push((idx.u[g][t], -1.0));
                m.add_row(format!("minup[{g},{t}]"), c, Sense::Le, 0.0);
            }
            if unit.min_down > 1 {
                let from = (t + 1).saturating_sub(unit.min_down);
                let mut c: Vec<_> = (from..=t).map(|k| (idx.shutdown[g][k], 1.0)).collect();
                c.push((idx.u[g][t], 1.0));
                m.add_row(format!("mindown[{g},{t}]"), c, Sense::Le, 1.0);
            }
        }
    }

    // Second stage, per scenario.
    for s in 0..n_s {
        let pi = instance.scenarios[s].probability;
        for t in 0..n_t {
            for (g, unit) in gen.iter().enumerate() {
                let p = m.add_col(
                    format!("p[{s},{g},{t}]"),
                    0.0,
                    unit.p_max,
                    pi * unit.marginal_cost * HOURS_PER_PERIOD,
                    false,
                );
                let r = m.add_col(
                    format!("r[{s},{g},{t}]"),
                    0.0,
                    unit.max_pfr_share * unit.p_max,
                    0.0,
                    false,
                );
                idx.p[s][g][t] = p;
                idx.r[s][g][t] = r;
                let u = idx.u[g][t];
                m.add_row(
                    format!("pmax[{s},{g},{t}]"),
                    vec![(p, 1.0), (u, -unit.p_max)],
                    Sense::Le,
                    0.0,
                );
                m.add_row(
                    format!("pmin[{s},{g},{t}]"),
                    vec![(p, 1.0), (u, -unit.p_min)],
                    Sense::Ge,
                    0.0,
                );
                let k = unit.max_pfr_share;
                m.add_row(
                    format!("pfr[{s},{g},{t}]"),
                    vec![(r, 1.0), (p, k), (u, -k * unit.p_max)],
                    Sense::Le,
                    0.0,
                );
            }
            let mut balance: Vec<(usize, f64)> = (0..n_g).map(|g| (idx.p[s][g][t], 1.0)).collect();
            for j in 0..n_j {
                let farm = &farms[s][j][t];
                let w = m.add_col(
                    format!("wind[{s},{j},{t}]"),
                    0.0,
                    farm.available_mw,
                    0.0,
                    false,
                );
                idx.wind[s][j][t] = w;
                balance.push((w, 1.0));
                let cap = farm.si.si_capacity;
                let (lo, hi) = match (opts.frequency_constraints, opts.si) {
                    (_, SiPolicy::Disabled) => (0.0, 0.0),
                    (_, SiPolicy::Optimal) => (0.0, cap),
                    (_, SiPolicy::Fixed { time_constant }) => {
                        let v = fixed_si_target(time_constant, farm.capacity_mw, sys.f0).min(cap);
                        (v, v)
                    }
                };
                idx.hs[s][j][t] = m.add_col(format!("hs[{s},{j},{t}]"), lo, hi, 0.0, false);
            }
            m.add_row(
                format!("balance[{s},{t}]"),
                balance,
                Sense::Eq,
                instance.demand[t],
            );

            let (h_lo, h_hi, r_lo, r_hi) = match planes {
                Some(set) => {
                    let d = &set.config.domain;
                    (d.h.0, d.h.1, d.r.0, d.r.1)
                }
                None => (0.0, f64::INFINITY, 0.0, f64::INFINITY),
            };
            let ht = m.add_col(format!("htot[{s},{t}]"), h_lo, h_hi, 0.0, false);
            let rr = m.add_col(format!("rtot[{s},{t}]"), r_lo, r_hi, 0.0, false);
            idx.h_total[s][t] = ht;
            idx.pfr_total[s][t] = rr;
            let mut hrow = vec![(ht, 1.0)];
            for (g, unit) in gen.iter().enumerate() {
                hrow.push((idx.u[g][t], -unit.inertia(sys.f0)));
            }
            for j in 0..n_j {
                hrow.push((idx.hs[s][j][t], -1.0));
            }
            m.add_row(format!("inertia[{s},{t}]"), hrow, Sense::Eq, 0.0);
            let mut rrow = vec![(rr, 1.0)];
            for g in 0..n_g {
                rrow.push((idx.r[s][g][t], -1.0));
            }
            m.add_row(format!("pfrsum[{s},{t}]"), rrow, Sense::Eq, 0.0);

            if let Some(set) = planes {
                m.add_row(
                    format!("rocof[{s},{t}]"),
                    vec![(ht, 1.0)],
                    Sense::Ge,
                    sys.delta_p / (2.0 * sys.rocof_lim),
                );
                // (ΔP − R)/D′ ≤ Δf_ss with D′ = D − Σγ_j H_sj²; the square is
                // replaced by its secant H^C_sj·H_sj, which bounds it from above.
                let mut ss = vec![(rr, 1.0)];
                if opts.underproduction {
                    for j in 0..n_j {
                        let f = &farms[s][j][t].si;
                        ss.push((idx.hs[s][j][t], -sys.df_ss_lim * f.gamma_j * f.si_capacity));
                    }
                }
                m.add_row(
                    format!("steady[{s},{t}]"),
                    ss,
                    Sense::Ge,
                    sys.delta_p - sys.df_ss_lim * sys.damping,
                );
                for (k, plane) in set.planes.iter().enumerate() {
                    let mut c = vec![(ht, plane.a), (rr, plane.b)];
                    for j in 0..n_j {
                        c.push((idx.hs[s][j][t], plane.c[j]));
                    }
                    m.add_row(format!("nadir[{s},{t},{k}]"), c, Sense::Le, -plane.d);
                }
            }
        }
    }

    Ok(UcModel {
        milp: m,
        index: idx,
        options: *opts,
        instance: instance.clone(),
        farms,
    })
}
