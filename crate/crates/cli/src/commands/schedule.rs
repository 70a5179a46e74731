//! Build, solve and (optionally) certify a unit-commitment instance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use siuc_core::frequency::{certify_schedule, CertReport, SimOptions};
use siuc_core::nadir_geom::GeomError;
use siuc_core::scheduler::bnb::{BnbOptions, MilpStatus};
use siuc_core::scheduler::desk::{desk_instance, DeskConfig};
use siuc_core::scheduler::{
    build_model, mps, solve, NodeSolution, ScheduleSolution, SiPolicy, SolveOptions, UcError,
    UcInstance, UcOptions,
};

use crate::config::parse;
use crate::error::{schema, CliError};
use crate::output::{Meta, OutDir};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleConfig {
    /// Full instance; or give `desk` for the built-in desk system.
    #[serde(default)]
    instance: Option<UcInstance>,
    #[serde(default)]
    desk: Option<DeskConfig>,
    #[serde(default)]
    options: UcOptions,
    /// Used when frequency rows are on and the instance carries no planes.
    #[serde(default)]
    planes: PlaneConfig,
    #[serde(default)]
    solver: BnbOptions,
    /// Also solve no-FC, FC without SI and FC with SI and report all three.
    #[serde(default)]
    compare: bool,
    #[serde(default = "yes")]
    certify: bool,
    #[serde(default)]
    export_mps: bool,
    #[serde(default)]
    seed: u64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlaneConfig {
    n_layers: usize,
    m_planes: usize,
    n_samples: usize,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        PlaneConfig {
            n_layers: 4,
            m_planes: 12,
            n_samples: 10_000,
        }
    }
}

#[derive(Serialize)]
struct Comparison {
    no_fc: f64,
    fc_no_si: f64,
    fc_si: f64,
}

#[derive(Serialize)]
struct Solution<'a> {
    options: UcOptions,
    status: MilpStatus,
    objective: f64,
    bound: f64,
    gap: f64,
    nodes_explored: usize,
    branchings: usize,
    plane_set_digest: Option<&'a str>,
    commitment: &'a [Vec<bool>],
    startups: &'a [Vec<bool>],
    nodes: &'a [NodeSolution],
    comparison: Option<Comparison>,
    certification: Option<&'a CertReport>,
}

fn uc_error(e: UcError) -> CliError {
    match e {
        UcError::Infeasible(cause) => CliError::Infeasible(format!("{cause:?}")),
        UcError::Planes(
            g @ (GeomError::NotCertified(_)
            | GeomError::AlphaNonPositive(_)
            | GeomError::EmptyPlaneSet),
        ) => CliError::Validation(g.to_string()),
        UcError::Lp(e) => CliError::Validation(e.to_string()),
        UcError::Io(e) => CliError::Io(e.to_string()),
        other => schema(other.to_string()),
    }
}

/// Solver-side failures other than infeasibility (limits, LP trouble).
fn solve_error(e: UcError) -> CliError {
    match e {
        UcError::Options(m) => CliError::Validation(m),
        other => uc_error(other),
    }
}

fn run_case(
    inst: &UcInstance,
    uc: UcOptions,
    bnb: &BnbOptions,
    start: Option<&ScheduleSolution>,
) -> Result<ScheduleSolution, CliError> {
    let model = build_model(inst, &uc).map_err(uc_error)?;
    let opts = SolveOptions {
        bnb: bnb.clone(),
        start: start.map(|s| s.commitment.clone()),
    };
    solve(&model, &opts).map_err(solve_error)
}

pub fn run(bytes: &[u8], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let cfg: ScheduleConfig = parse(bytes)?;
    let seed = seed.unwrap_or(cfg.seed);
    let mut inst = match (cfg.instance, &cfg.desk) {
        (Some(i), None) => i,
        (None, Some(d)) => desk_instance(d),
        _ => return Err(schema("give exactly one of `instance` or `desk`")),
    };
    inst.validate().map_err(uc_error)?;
    if cfg.options.frequency_constraints && inst.planes.is_none() {
        let p = &cfg.planes;
        inst.planes = Some(
            inst.linearize(
                p.n_layers,
                p.m_planes,
                p.n_samples,
                seed,
                cfg.options.underproduction,
            )
            .map_err(uc_error)?,
        );
    }

    let model = build_model(&inst, &cfg.options).map_err(uc_error)?;
    let sol = solve(
        &model,
        &SolveOptions {
            bnb: cfg.solver.clone(),
            start: None,
        },
    )
    .map_err(solve_error)?;

    let comparison = if cfg.compare {
        if inst.planes.is_none() {
            return Err(schema(
                "`compare` needs frequency constraints (a plane set)",
            ));
        }
        // Warm-start each run from the next more constrained one.
        let fc_no_si = run_case(
            &inst,
            UcOptions::with_si(SiPolicy::Disabled),
            &cfg.solver,
            None,
        )?;
        let fc_si = run_case(&inst, UcOptions::default(), &cfg.solver, Some(&fc_no_si))?;
        let no_fc = run_case(&inst, UcOptions::no_frequency(), &cfg.solver, Some(&fc_si))?;
        Some(Comparison {
            no_fc: no_fc.objective,
            fc_no_si: fc_no_si.objective,
            fc_si: fc_si.objective,
        })
    } else {
        None
    };

    let report = if cfg.certify && cfg.options.frequency_constraints {
        let cases = sol.cert_cases(&model).map_err(uc_error)?;
        Some(certify_schedule(
            &cases,
            &inst.system,
            &SimOptions::default(),
        ))
    } else {
        None
    };

    let mut dir = OutDir::create(out, Meta::new("schedule", bytes, seed))?;
    dir.json(
        "solution.json",
        &Solution {
            options: cfg.options,
            status: sol.status,
            objective: sol.objective,
            bound: sol.bound,
            gap: sol.gap,
            nodes_explored: sol.nodes_explored,
            branchings: sol.branchings,
            plane_set_digest: inst.planes.as_ref().map(|p| p.digest.as_str()),
            commitment: &sol.commitment,
            startups: &sol.startups,
            nodes: &sol.nodes,
            comparison,
            certification: report.as_ref(),
        },
    )?;
    dir.csv("dispatch.csv", &sol.to_csv())?;
    if cfg.export_mps {
        dir.mps(
            "model.mps",
            &mps::to_mps(&model.milp, "SIUC").map_err(uc_error)?,
        )?;
    }
    if let Some(r) = &report {
        if !r.all_pass() {
            return Err(CliError::Validation(format!(
                "schedule replay: {} nadir, {} RoCoF, {} steady-state, {} rotor violations, {} errors",
                r.nadir_violations, r.rocof_violations, r.steady_state_violations, r.rotor_violations, r.errors
            )));
        }
    }
    Ok(format!(
        "objective {:.2} ({:?}, gap {:.2e})",
        sol.objective, sol.status, sol.gap
    ))
}
