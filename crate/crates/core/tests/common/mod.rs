//! Shared fixtures: tiny random unit-commitment instances and a brute-force
//! commitment enumerator that solves each fixed pattern with the dense LP.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siuc_core::scheduler::desk::desk_turbine;
use siuc_core::scheduler::lp::{DenseSimplex, LpBackend, LpStatus};
use siuc_core::scheduler::*;
use siuc_core::windfarm::WindSpeedDistribution;
use siuc_core::SystemParams;

pub struct Tiny {
    pub instance: UcInstance,
    pub options: UcOptions,
}

/// At most 4 units, 3 periods and 2 scenarios; frequency rows on most.
pub fn tiny_instance(seed: u64) -> Tiny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_g = rng.gen_range(2..=4);
    let horizon = rng.gen_range(1..=3);
    let n_s = rng.gen_range(1..=2);
    let generators: Vec<GeneratorUnit> = (0..n_g)
        .map(|g| {
            let p_max = rng.gen_range(80.0..300.0);
            GeneratorUnit {
                name: format!("g{g}"),
                h_g: rng.gen_range(2.0..6.0),
                p_max,
                p_min: rng.gen_range(0.2..0.5) * p_max,
                marginal_cost: rng.gen_range(10.0..80.0),
                no_load_cost: rng.gen_range(100.0..1500.0),
                startup_cost: rng.gen_range(0.0..5000.0),
                min_up: rng.gen_range(1..=3),
                min_down: rng.gen_range(1..=3),
                max_pfr_share: rng.gen_range(0.1..0.5),
                initial_on: rng.gen_bool(0.5),
            }
        })
        .collect();
    let total: f64 = generators.iter().map(|g| g.p_max).sum();
    // Size the contingency against the fleet's stored energy so that the
    // frequency rows bind for some commitments but not all.
    let h_all: f64 = generators.iter().map(|g| g.inertia(50.0)).sum();
    let delta_p = rng.gen_range(0.3..0.7) * h_all;
    let system = SystemParams {
        f0: 50.0,
        damping: rng.gen_range(0.2..0.6) * delta_p / 0.8,
        delta_p,
        t_d: 10.0,
        df_lim: 0.8,
        rocof_lim: 0.5,
        df_ss_lim: 0.5,
    };
    let demand = (0..horizon)
        .map(|_| rng.gen_range(0.3..0.8) * total)
        .collect();
    let with_farm = rng.gen_bool(0.6);
    let farms = if with_farm {
        vec![FarmSpec {
            name: "w".into(),
            n_turbines: rng.gen_range(3..15),
            turbine: desk_turbine(),
            distribution: WindSpeedDistribution::Histogram(vec![(7.0, 0.5), (9.0, 0.5)]),
            si_penetration: 1.0,
        }]
    } else {
        vec![]
    };
    let p0 = if n_s == 1 {
        1.0
    } else {
        rng.gen_range(0.2..0.8)
    };
    let scenarios = (0..n_s)
        .map(|s| ScenarioNode {
            probability: if s == 0 { p0 } else { 1.0 - p0 },
            wind_scale: farms
                .iter()
                .map(|_| (0..horizon).map(|_| rng.gen_range(0.7..1.3)).collect())
                .collect(),
        })
        .collect();
    let mut instance = UcInstance {
        horizon,
        demand,
        generators,
        farms,
        system,
        scenarios,
        mode: if n_s == 1 {
            UcMode::Deterministic
        } else {
            UcMode::TwoStage
        },
        planes: None,
    };
    let mut options = UcOptions::no_frequency();
    if rng.gen_bool(0.7) {
        if let Ok(set) = instance.linearize(2, 6, 500, seed, true) {
            instance.planes = Some(set);
            options = UcOptions::default();
            if !with_farm {
                options.si = SiPolicy::Disabled;
            }
        }
    }
    Tiny { instance, options }
}

/// Best objective over every commitment pattern, or `None` if none is
/// feasible. Each pattern fixes the binaries and solves the remaining LP.
pub fn enumerate_optimum(model: &UcModel) -> Option<f64> {
    let u: Vec<usize> = model.index.u.iter().flatten().copied().collect();
    let lp = DenseSimplex::default();
    let base_lo: Vec<f64> = model.milp.columns.iter().map(|c| c.lo).collect();
    let base_hi: Vec<f64> = model.milp.columns.iter().map(|c| c.hi).collect();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << u.len()) {
        let (mut lo, mut hi) = (base_lo.clone(), base_hi.clone());
        for (k, &c) in u.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            lo[c] = v;
            hi[c] = v;
        }
        let out = lp.solve(&model.milp, &lo, &hi).expect("dense simplex");
        if out.status == LpStatus::Optimal {
            best = Some(best.map_or(out.objective, |b: f64| b.min(out.objective)));
        }
    }
    best
}
