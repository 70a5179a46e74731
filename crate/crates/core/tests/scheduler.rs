mod common;

use std::process::Command;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siuc_core::scheduler::bnb::{branch_and_bound, BnbOptions, MilpStatus};
use siuc_core::scheduler::desk::{self, desk_instance, DeskConfig};
use siuc_core::scheduler::lp::{DenseSimplex, LpBackend, LpStatus, MicroLp};
use siuc_core::scheduler::milp::{Milp, Sense};
use siuc_core::scheduler::mps::{self, format_number, to_mps};
use siuc_core::scheduler::*;
use siuc_core::windfarm::{FarmModel, WindSpeedDistribution};

use common::{enumerate_optimum, tiny_instance};

fn exact() -> SolveOptions {
    SolveOptions {
        bnb: BnbOptions {
            gap_tol: 1e-9,
            ..BnbOptions::default()
        },
        start: None,
    }
}

fn unit(name: &str, p_max: f64, mc: f64) -> GeneratorUnit {
    GeneratorUnit {
        name: name.into(),
        h_g: 4.0,
        p_max,
        p_min: 0.0,
        marginal_cost: mc,
        no_load_cost: 0.0,
        startup_cost: 0.0,
        min_up: 1,
        min_down: 1,
        max_pfr_share: 0.2,
        initial_on: false,
    }
}

fn plain_instance(generators: Vec<GeneratorUnit>, demand: Vec<f64>) -> UcInstance {
    UcInstance {
        horizon: demand.len(),
        demand,
        generators,
        farms: vec![],
        system: desk::desk_system(),
        scenarios: vec![ScenarioNode {
            probability: 1.0,
            wind_scale: vec![],
        }],
        mode: UcMode::Deterministic,
        planes: None,
    }
}

/// Random bounded LP whose origin is feasible.
fn random_lp(seed: u64) -> Milp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..9);
    let mut m = Milp::default();
    for j in 0..n {
        m.add_col(
            format!("x{j}"),
            0.0,
            rng.gen_range(1.0..10.0),
            rng.gen_range(-5.0..5.0),
            false,
        );
    }
    for i in 0..rng.gen_range(1..8) {
        let coefs = (0..n).map(|j| (j, rng.gen_range(-3.0..3.0))).collect();
        m.add_row(format!("r{i}"), coefs, Sense::Le, rng.gen_range(0.5..20.0));
    }
    // An equality through a known interior point keeps phase one honest.
    let x0: Vec<f64> = m.columns.iter().map(|c| 0.5 * c.hi).collect();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let rhs = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
    if m.max_violation(&x0) <= 0.0 {
        m.add_row("eq", a.into_iter().enumerate().collect(), Sense::Eq, rhs);
    }
    m
}

#[test]
fn lp_engines_agree() {
    for seed in 0..200 {
        let m = random_lp(seed);
        let lo: Vec<f64> = m.columns.iter().map(|c| c.lo).collect();
        let hi: Vec<f64> = m.columns.iter().map(|c| c.hi).collect();
        let a = DenseSimplex::default().solve(&m, &lo, &hi).unwrap();
        let b = MicroLp.solve(&m, &lo, &hi).unwrap();
        assert_eq!(a.status, LpStatus::Optimal, "seed {seed}");
        assert_eq!(b.status, LpStatus::Optimal, "seed {seed}");
        assert!(
            (a.objective - b.objective).abs() <= 1e-7 * (1.0 + a.objective.abs()),
            "seed {seed}: {} vs {}",
            a.objective,
            b.objective
        );
        assert!(m.max_violation(&a.x) < 1e-7);
    }
}

#[test]
fn dense_simplex_detects_infeasible_and_unbounded() {
    let mut m = Milp::default();
    let x = m.add_col("x", 0.0, 1.0, 1.0, false);
    m.add_row("r", vec![(x, 1.0)], Sense::Ge, 2.0);
    let out = DenseSimplex::default().solve(&m, &[0.0], &[1.0]).unwrap();
    assert_eq!(out.status, LpStatus::Infeasible);

    let mut m = Milp::default();
    m.add_col("x", 0.0, f64::INFINITY, -1.0, false);
    let out = DenseSimplex::default()
        .solve(&m, &[0.0], &[f64::INFINITY])
        .unwrap();
    assert_eq!(out.status, LpStatus::Unbounded);
}

#[test]
fn lp_integral_instance_needs_no_branching() {
    let mut m = Milp::default();
    let x = m.add_col("x", 0.0, 5.0, 1.0, true);
    let y = m.add_col("y", 0.0, 5.0, 2.0, true);
    m.add_row("cover", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 3.0);
    m.add_row("cap", vec![(x, 1.0)], Sense::Le, 2.0);
    let res = branch_and_bound(&m, &BnbOptions::default(), None).unwrap();
    assert_eq!(res.status, MilpStatus::Optimal);
    assert_eq!(res.branchings, 0);
    assert_relative_eq!(res.objective, 4.0, max_relative = 1e-12);
}

#[test]
fn knapsack_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let n = 10;
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
        let cap = 0.4 * w.iter().sum::<f64>();
        let mut m = Milp::default();
        for j in 0..n {
            m.add_col(format!("x{j}"), 0.0, 1.0, -v[j], true);
        }
        m.add_row(
            "cap",
            w.iter().copied().enumerate().collect(),
            Sense::Le,
            cap,
        );
        let best = (0u32..1 << n)
            .filter(|s| {
                (0..n)
                    .filter(|j| s >> j & 1 == 1)
                    .map(|j| w[j])
                    .sum::<f64>()
                    <= cap
            })
            .map(|s| {
                -(0..n)
                    .filter(|j| s >> j & 1 == 1)
                    .map(|j| v[j])
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let opts = BnbOptions {
            gap_tol: 1e-9,
            ..BnbOptions::default()
        };
        let res = branch_and_bound(&m, &opts, None).unwrap();
        assert_relative_eq!(res.objective, best, max_relative = 1e-9);
    }
}

#[test]
fn merit_order_dispatch() {
    let gens = vec![
        unit("dear", 100.0, 50.0),
        unit("cheap", 100.0, 10.0),
        unit("mid", 100.0, 30.0),
    ];
    let inst = plain_instance(gens, vec![170.0]);
    let sol = schedule(&inst, &UcOptions::no_frequency(), &exact()).unwrap();
    let p = &sol.nodes[0].dispatch;
    assert!((p[1] - 100.0).abs() < 1e-6);
    assert!((p[2] - 70.0).abs() < 1e-6);
    assert!(p[0].abs() < 1e-6);
    assert_relative_eq!(
        sol.objective,
        100.0 * 10.0 + 70.0 * 30.0,
        max_relative = 1e-9
    );
}

#[test]
fn three_unit_single_period_matches_enumeration() {
    let mut gens = vec![
        unit("a", 120.0, 20.0),
        unit("b", 90.0, 35.0),
        unit("c", 200.0, 28.0),
    ];
    gens[0].no_load_cost = 900.0;
    gens[1].no_load_cost = 150.0;
    gens[2].no_load_cost = 2500.0;
    gens[2].p_min = 80.0;
    gens[0].startup_cost = 400.0;
    let inst = plain_instance(gens, vec![150.0]);
    let model = build_model(&inst, &UcOptions::no_frequency()).unwrap();
    let oracle = enumerate_optimum(&model).unwrap();
    let sol = solve(&model, &exact()).unwrap();
    assert_relative_eq!(sol.objective, oracle, max_relative = 1e-9);
}

#[test]
fn random_tiny_instances_match_enumeration() {
    for seed in 0..6 {
        let tiny = tiny_instance(1000 + seed);
        let model = match build_model(&tiny.instance, &tiny.options) {
            Ok(m) => m,
            Err(UcError::Infeasible(_)) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        match (enumerate_optimum(&model), solve(&model, &exact())) {
            (Some(o), Ok(sol)) => assert!(
                (sol.objective - o).abs() <= 1e-6 * o.abs().max(1.0),
                "seed {seed}: {} vs {o}",
                sol.objective
            ),
            (None, Err(UcError::Infeasible(_))) => {}
            (o, s) => panic!(
                "seed {seed}: enumeration {o:?} vs solver {:?}",
                s.map(|s| s.objective)
            ),
        }
    }
}

#[test]
fn infeasibility_is_diagnosed() {
    let inst = plain_instance(vec![unit("a", 100.0, 10.0)], vec![150.0]);
    assert!(matches!(
        build_model(&inst, &UcOptions::no_frequency()),
        Err(UcError::Infeasible(InfeasibleCause::Capacity))
    ));
    // Enough capacity, but the minimum up time keeps the unit above demand.
    let mut h = unit("h", 100.0, 10.0);
    h.p_min = 80.0;
    h.initial_on = true;
    h.min_up = 2;
    let inst = plain_instance(vec![h], vec![90.0, 20.0]);
    let model = build_model(&inst, &UcOptions::no_frequency()).unwrap();
    assert!(matches!(
        solve(&model, &exact()),
        Err(UcError::Infeasible(InfeasibleCause::Balance))
    ));
}

#[test]
fn frequency_rows_need_planes() {
    let inst = plain_instance(vec![unit("a", 400.0, 10.0)], vec![100.0]);
    assert!(matches!(
        build_model(&inst, &UcOptions::default()),
        Err(UcError::Options(_))
    ));
}

#[test]
fn empty_generator_list_rejected() {
    let inst = plain_instance(vec![], vec![100.0]);
    assert!(matches!(
        build_model(&inst, &UcOptions::no_frequency()),
        Err(UcError::Instance(_))
    ));
    assert!(to_mps(&Milp::default(), "empty").is_err());
}

fn small_desk() -> UcInstance {
    let mut inst = desk_instance(&DeskConfig {
        periods: 4,
        ..DeskConfig::default()
    });
    inst.planes = Some(inst.linearize(2, 6, 2000, 3, true).unwrap());
    inst
}

#[test]
fn mps_is_deterministic_and_well_formed() {
    let inst = small_desk();
    let a = to_mps(
        &build_model(&inst, &UcOptions::default()).unwrap().milp,
        "desk",
    )
    .unwrap();
    let b = to_mps(
        &build_model(&inst, &UcOptions::default()).unwrap().milp,
        "desk",
    )
    .unwrap();
    assert_eq!(a, b);
    let sections: Vec<&str> = a
        .lines()
        .filter(|l| !l.starts_with(' ') && !l.starts_with('*'))
        .collect();
    assert_eq!(
        sections,
        [
            "NAME          desk",
            "ROWS",
            "COLUMNS",
            "RHS",
            "BOUNDS",
            "ENDATA"
        ]
    );
    assert_eq!(a.matches("'INTORG'").count(), a.matches("'INTEND'").count());
    assert!(a.lines().all(|l| l.len() <= 80 || l.starts_with('*')));
}

#[test]
fn number_field_fits_and_round_trips() {
    for v in [
        0.0,
        1.0,
        -2.5,
        1e-12,
        123456789012345.0,
        -3.3333333333333335,
        6.02214076e23,
        1.0 / 3.0,
        2.5e-310,
    ] {
        let s = format_number(v);
        assert!(s.len() <= 12, "{s}");
        let back: f64 = s.parse().unwrap();
        assert!((back - v).abs() <= 1e-7 * v.abs().max(1e-300), "{v} -> {s}");
    }
}

fn highs(model: &std::path::Path, solve: bool) -> Option<serde_json::Value> {
    let script = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scripts/crosscheck_mps.py"
    );
    let mut cmd = Command::new("python3");
    cmd.arg(script).arg(model);
    if !solve {
        cmd.arg("--no-solve");
    }
    let out = cmd.output().ok()?;
    if !out.status.success() {
        eprintln!(
            "HiGHS cross-check skipped: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        );
        return None;
    }
    serde_json::from_slice(&out.stdout).ok()
}

#[test]
fn external_solver_agrees() {
    let inst = small_desk();
    let model = build_model(&inst, &UcOptions::default()).unwrap();
    let path = std::env::temp_dir().join(format!("siuc-desk-{}.mps", std::process::id()));
    mps::export_model(&model.milp, "desk", &path).unwrap();
    let Some(rep) = highs(&path, true) else {
        return;
    };
    let _ = std::fs::remove_file(&path);
    assert_eq!(
        rep["rows"].as_u64().unwrap() as usize,
        model.milp.rows.len()
    );
    assert_eq!(
        rep["cols"].as_u64().unwrap() as usize,
        model.milp.columns.len()
    );
    assert_eq!(
        rep["integers"].as_u64().unwrap() as usize,
        model.milp.integer_columns().len()
    );
    let ours = solve(&model, &SolveOptions::default()).unwrap().objective;
    let theirs = rep["objective"].as_f64().unwrap();
    println!("objective: ours {ours:.2}, HiGHS {theirs:.2}");
    assert!(
        (ours - theirs).abs() <= 1e-3 * theirs.abs(),
        "ours {ours} vs HiGHS {theirs}"
    );
}

#[test]
fn single_scenario_expansion() {
    let inst = desk_instance(&DeskConfig {
        periods: 3,
        ..DeskConfig::default()
    });
    let nodes = scenario_expand(&inst).unwrap();
    assert_eq!(nodes.len(), 3);
    for (t, n) in nodes.iter().enumerate() {
        assert_eq!((n.scenario, n.period, n.probability), (0, t, 1.0));
        assert_eq!(n.demand, inst.demand[t]);
        assert!(n.si_capacity[0] > 0.0 && n.gamma[0] > 0.0);
    }
}

#[test]
fn malformed_trees_rejected() {
    let base = desk_instance(&DeskConfig {
        periods: 3,
        two_stage: true,
        ..DeskConfig::default()
    });
    let mut bad = base.clone();
    bad.scenarios[0].probability = 0.7;
    assert!(matches!(scenario_expand(&bad), Err(UcError::Tree(_))));
    let mut bad = base.clone();
    bad.scenarios[1].wind_scale[0].pop();
    assert!(matches!(scenario_expand(&bad), Err(UcError::Tree(_))));
    let mut bad = base.clone();
    bad.mode = UcMode::Deterministic;
    assert!(matches!(scenario_expand(&bad), Err(UcError::Tree(_))));
    let mut bad = base;
    bad.scenarios.clear();
    assert!(matches!(scenario_expand(&bad), Err(UcError::Tree(_))));
}

#[test]
fn identical_scenarios_equal_deterministic() {
    let det = desk_instance(&DeskConfig {
        periods: 4,
        ..DeskConfig::default()
    });
    let mut two = det.clone();
    two.mode = UcMode::TwoStage;
    two.scenarios = vec![
        ScenarioNode {
            probability: 0.5,
            ..det.scenarios[0].clone()
        };
        2
    ];
    let a = schedule(&det, &UcOptions::no_frequency(), &exact()).unwrap();
    let b = schedule(&two, &UcOptions::no_frequency(), &exact()).unwrap();
    assert_relative_eq!(a.objective, b.objective, max_relative = 1e-7);
}

fn farm_period(n: u32, capacity_mw: f64) -> FarmPeriod {
    FarmPeriod {
        si: FarmModel::new(
            n,
            desk::desk_turbine(),
            WindSpeedDistribution::point(8.0),
            0.8,
            0.5,
        )
        .unwrap(),
        available_mw: 0.5 * capacity_mw,
        capacity_mw,
    }
}

#[test]
fn si_time_constant_basics() {
    let farms = [farm_period(100, 330.0), farm_period(50, 165.0)];
    assert_eq!(si_time_constant(0.0, &farms, 50.0).unwrap(), 0.0);
    let a = si_time_constant(10.0, &farms, 50.0).unwrap();
    assert_relative_eq!(a, 10.0 * 50.0 / 495.0, max_relative = 1e-12);
    let doubled = [farm_period(200, 660.0), farm_period(100, 330.0)];
    assert_relative_eq!(
        si_time_constant(20.0, &doubled, 50.0).unwrap(),
        a,
        max_relative = 1e-12
    );
    assert!(si_time_constant(1.0, &[], 50.0).is_err());
    assert!(si_time_constant(1.0, &[farm_period(0, 0.0)], 50.0).is_err());
}

#[test]
fn fixed_target_inverts_time_constant() {
    assert_relative_eq!(
        fixed_si_target(2.0, 500.0, 50.0),
        20.0,
        max_relative = 1e-12
    );
    let inst = small_desk();
    assert!(fixed_si_mode(&inst, -1.0, &exact()).is_err());
}

/// Tiny random instances that carry a farm and frequency rows.
fn tiny_with_planes() -> Vec<UcInstance> {
    (0..60)
        .map(|s| tiny_instance(5000 + s))
        .filter(|t| t.options.frequency_constraints && !t.instance.farms.is_empty())
        .map(|t| t.instance)
        .take(6)
        .collect()
}

#[test]
fn si_never_increases_cost_and_zero_constant_is_no_si() {
    let insts = tiny_with_planes();
    assert!(insts.len() >= 3);
    for inst in insts {
        let run = |si| schedule(&inst, &UcOptions::with_si(si), &exact());
        let (no_si, opt) = match (run(SiPolicy::Disabled), run(SiPolicy::Optimal)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(UcError::Infeasible(_)), _) => continue,
            (a, b) => panic!(
                "{:?} / {:?}",
                a.map(|s| s.objective),
                b.map(|s| s.objective)
            ),
        };
        assert!(opt.objective <= no_si.objective * (1.0 + 1e-9) + 1e-9);
        let zero = fixed_si_mode(&inst, 0.0, &exact()).unwrap();
        assert_relative_eq!(zero.objective, no_si.objective, max_relative = 1e-7);
        assert!(zero.nodes.iter().all(|n| n.h_sj.iter().all(|h| *h <= 1e-9)));
        let fixed = fixed_si_mode(&inst, 1.0, &exact());
        if let Ok(f) = fixed {
            assert!(opt.objective <= f.objective * (1.0 + 1e-9) + 1e-9);
        }
    }
}

#[test]
fn solutions_respect_frequency_rows() {
    for inst in tiny_with_planes() {
        let Ok(sol) = schedule(&inst, &UcOptions::default(), &exact()) else {
            continue;
        };
        let sys = inst.system;
        let model = build_model(&inst, &UcOptions::default()).unwrap();
        assert!(model.milp.max_violation(&sol.x) < 1e-6);
        for n in &sol.nodes {
            let h = n.h_conv + n.h_syn;
            assert!(2.0 * h * sys.rocof_lim >= sys.delta_p * (1.0 - 1e-7));
            let cap = &model.farms[n.scenario];
            for (j, hs) in n.h_sj.iter().enumerate() {
                assert!(*hs <= cap[j][n.period].si.si_capacity * (1.0 + 1e-9));
            }
            let planes = &inst.planes.as_ref().unwrap().planes;
            let tol = 1e-6 * h.max(1.0);
            assert!(planes.iter().all(|p| p.a * h
                + p.b * n.pfr_total
                + p.c.iter().zip(&n.h_sj).map(|(c, x)| c * x).sum::<f64>()
                + p.d
                <= tol * p.a.abs().max(1.0)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cost_ordering_on_random_instances(seed in 0u64..10_000) {
        let tiny = tiny_instance(seed);
        prop_assume!(tiny.options.frequency_constraints);
        let inst = tiny.instance;
        let si = if inst.farms.is_empty() { SiPolicy::Disabled } else { SiPolicy::Optimal };
        let free = schedule(&inst, &UcOptions::no_frequency(), &exact());
        let fc = schedule(&inst, &UcOptions::with_si(si), &exact());
        let fc_nosi = schedule(&inst, &UcOptions::with_si(SiPolicy::Disabled), &exact());
        if let (Ok(a), Ok(b), Ok(c)) = (&free, &fc, &fc_nosi) {
            prop_assert!(a.objective <= b.objective * (1.0 + 1e-9) + 1e-9);
            prop_assert!(b.objective <= c.objective * (1.0 + 1e-9) + 1e-9);
        }
        // Feasible with constraints implies feasible without.
        prop_assert!(fc.is_err() || free.is_ok());
    }
}
