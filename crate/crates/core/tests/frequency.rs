use approx::assert_relative_eq;
use proptest::prelude::*;
use siuc_core::frequency::*;
use siuc_core::scheduler::desk::desk_turbine;
use siuc_core::turbine::TurbineParams;
use siuc_core::windfarm::{FarmModel, WindSpeedDistribution};
use siuc_core::SystemParams;

fn gb() -> SystemParams {
    SystemParams::gb_reference()
}

fn inputs(h: f64, r: f64, d: f64, sys: &SystemParams) -> FrequencyInputs {
    FrequencyInputs::new(h, 0.0, r, d, sys).unwrap()
}

/// Independent RK4 of 2H·ḟ = −ΔP + R·min(t/T_d, 1) − D′·f.
fn rk4_linear(
    h: f64,
    r: f64,
    d: f64,
    sys: &SystemParams,
    step: f64,
    t_end: f64,
) -> Vec<(f64, f64)> {
    let rhs = |t: f64, f: f64| (-sys.delta_p + r * (t / sys.t_d).min(1.0) - d * f) / (2.0 * h);
    let mut out = vec![(0.0, 0.0)];
    let (mut t, mut f) = (0.0, 0.0);
    while t < t_end - 1e-12 {
        let k1 = rhs(t, f);
        let k2 = rhs(t + step / 2.0, f + step / 2.0 * k1);
        let k3 = rhs(t + step / 2.0, f + step / 2.0 * k2);
        let k4 = rhs(t + step, f + step * k3);
        f += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
        out.push((t, f));
    }
    out
}

#[test]
fn rocof_examples() {
    let sys = gb();
    assert_relative_eq!(
        rocof_max(&inputs(1800.0, 2000.0, 100.0, &sys), &sys),
        -0.5,
        max_relative = 1e-12
    );
    let h = 1800.0 / (2.0 * 0.17);
    assert_relative_eq!(
        rocof_max(&inputs(h, 2000.0, 100.0, &sys), &sys),
        -0.17,
        max_relative = 1e-12
    );
    let a = rocof_max(&inputs(3000.0, 2000.0, 100.0, &sys), &sys);
    let b = rocof_max(&inputs(6000.0, 2000.0, 100.0, &sys), &sys);
    assert_relative_eq!(a, 2.0 * b, max_relative = 1e-12);
}

#[test]
fn steady_state_examples() {
    let mut sys = gb();
    sys.damping = 1000.0;
    assert_eq!(
        steady_state_dev(&inputs(4000.0, 1800.0, 600.0, &sys), &sys).unwrap(),
        0.0
    );
    assert_relative_eq!(
        steady_state_dev(&inputs(4000.0, 1500.0, 600.0, &sys), &sys).unwrap(),
        -0.5,
        max_relative = 1e-12
    );
    let a = steady_state_dev(&inputs(4000.0, 1500.0, 600.0, &sys), &sys).unwrap();
    let b = steady_state_dev(&inputs(4000.0, 1500.0, 300.0, &sys), &sys).unwrap();
    assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
}

#[test]
fn trajectory_start_and_slope() {
    let sys = gb();
    let i = inputs(4000.0, 2200.0, 150.0, &sys);
    assert_eq!(freq_trajectory(&i, &sys, 0.0).unwrap(), 0.0);
    let e = 1e-7;
    let slope = freq_trajectory(&i, &sys, e).unwrap() / e;
    assert_relative_eq!(slope, rocof_max(&i, &sys), max_relative = 1e-5);
}

#[test]
fn trajectory_matches_rk4() {
    let sys = gb();
    let (h, r, d) = (4500.0, 2400.0, 180.0);
    let i = inputs(h, r, d, &sys);
    let tn = nadir_time(&i, &sys).unwrap();
    let mut worst: f64 = 0.0;
    for (t, f) in rk4_linear(h, r, d, &sys, 1e-3, tn) {
        if t <= tn {
            worst = worst.max((freq_trajectory(&i, &sys, t).unwrap() - f).abs());
        }
    }
    assert!(worst < 1e-8, "max error {worst}");
    assert!(matches!(
        freq_trajectory(&i, &sys, tn + 0.1),
        Err(FrequencyError::BeyondNadir { .. })
    ));
}

#[test]
fn nadir_time_limits_and_monotonicity() {
    let sys = gb();
    let r = 2500.0;
    let small = inputs(4000.0, r, 1e-9, &sys);
    assert_relative_eq!(
        nadir_time(&small, &sys).unwrap(),
        sys.t_d * sys.delta_p / r,
        max_relative = 1e-6
    );
    let mut prev = f64::INFINITY;
    for k in 0..10 {
        let t = nadir_time(
            &inputs(4000.0, 2000.0 + 100.0 * k as f64, 200.0, &sys),
            &sys,
        )
        .unwrap();
        assert!(t < prev);
        prev = t;
    }
}

#[test]
fn nadir_time_matches_rk4_extremum() {
    let sys = gb();
    let (h, r, d) = (4000.0, 2300.0, 200.0);
    let i = inputs(h, r, d, &sys);
    let traj = rk4_linear(h, r, d, &sys, 1e-4, sys.t_d);
    let (t_min, f_min) = traj
        .iter()
        .fold((0.0, 0.0), |a, &(t, f)| if f < a.1 { (t, f) } else { a });
    assert!((nadir_time(&i, &sys).unwrap() - t_min).abs() < 2e-4);
    assert!((nadir(&i, &sys).unwrap() - f_min).abs() < 1e-8);
}

#[test]
fn nadir_equals_trajectory_at_nadir_time() {
    let sys = gb();
    let i = inputs(4000.0, 2300.0, 200.0, &sys);
    let tn = nadir_time(&i, &sys).unwrap();
    assert_relative_eq!(
        nadir(&i, &sys).unwrap(),
        freq_trajectory(&i, &sys, tn).unwrap(),
        max_relative = 1e-10
    );
}

#[test]
fn nadir_zero_damping_bound() {
    // With D′ → 0 the nadir is ΔP²·T_d/(4HR).
    let sys = gb();
    let (h, r) = (4000.0, 2500.0);
    let bound = sys.delta_p.powi(2) * sys.t_d / (4.0 * h * r);
    let n0 = nadir_formula(&inputs(h, r, 1e-9, &sys), &sys).unwrap();
    assert_relative_eq!(-n0, bound, max_relative = 1e-6);
    let n1 = nadir_formula(&inputs(h, r, 150.0, &sys), &sys).unwrap();
    assert!(-n1 <= bound);
}

#[test]
fn nadir_after_delivery_rejected() {
    let sys = gb();
    let i = inputs(4000.0, 1500.0, 150.0, &sys);
    assert!(matches!(
        nadir(&i, &sys),
        Err(FrequencyError::NadirAfterDelivery { .. })
    ));
    assert_eq!(
        peak_deviation(&i, &sys).unwrap(),
        steady_state_dev(&i, &sys).unwrap()
    );
}

#[test]
fn input_validation() {
    let sys = gb();
    assert!(FrequencyInputs::new(0.0, 0.0, 1.0, 1.0, &sys).is_err());
    assert!(FrequencyInputs::new(1.0, 0.0, 1.0, 0.0, &sys).is_err());
    assert!(FrequencyInputs::new(1.0, 0.0, -1.0, 1.0, &sys).is_err());
    assert!(FrequencyInputs::new(1.0, 0.0, 1.0, sys.damping * 2.0, &sys).is_err());
}

fn linear_sim_opts() -> SimOptions {
    SimOptions {
        mode: SimMode::LinearDamping,
        horizon: 20.0,
        ..SimOptions::default()
    }
}

#[test]
fn simulator_linear_matches_closed_form() {
    let sys = gb();
    let i = inputs(4200.0, 2300.0, sys.damping, &sys);
    let st = simulate(&[], &i, &sys, &linear_sim_opts()).unwrap();
    let tn = nadir_time(&i, &sys).unwrap();
    let mut worst: f64 = 0.0;
    for (t, f) in st.time.iter().zip(&st.df) {
        if *t <= tn {
            worst = worst.max((freq_trajectory(&i, &sys, *t).unwrap() - f).abs());
        }
    }
    assert!(worst < 1e-6, "max error {worst}");
    assert!((st.min_df - nadir(&i, &sys).unwrap()).abs() < 1e-6);
}

#[test]
fn simulator_zero_disturbance_is_flat() {
    let mut sys = gb();
    sys.delta_p = 0.0;
    let i = inputs(4000.0, 0.0, sys.damping, &sys);
    let st = simulate(&[], &i, &sys, &SimOptions::default()).unwrap();
    assert!(st.df.iter().all(|f| *f == 0.0));
}

#[test]
fn simulator_rejects_inconsistent_inertia() {
    let sys = gb();
    let i = FrequencyInputs::new(4000.0, 100.0, 2000.0, 100.0, &sys).unwrap();
    assert!(matches!(
        simulate(&[], &i, &sys, &SimOptions::default()),
        Err(FrequencyError::InconsistentInertia { .. })
    ));
    let bad = SimOptions {
        step: 0.0,
        ..SimOptions::default()
    };
    let i = inputs(4000.0, 2000.0, 100.0, &sys);
    assert!(simulate(&[], &i, &sys, &bad).is_err());
}

/// A GB-scale wind fleet with a sizeable SI commitment.
fn fleet(frac: f64) -> Vec<FarmModel> {
    let d = WindSpeedDistribution::Histogram(vec![(7.0, 0.3), (8.5, 0.4), (10.0, 0.3)]);
    let mut farm = FarmModel::new(2000, TurbineParams::default(), d, 0.8, 0.5).unwrap();
    farm.set_si(frac * farm.si_capacity).unwrap();
    vec![farm]
}

#[test]
fn no_mpe_secondary_dip() {
    // Light turbines at moderate wind, full SI, on a GB-scale system.
    let sys = gb();
    let mut farm = FarmModel::new(
        3000,
        desk_turbine(),
        WindSpeedDistribution::point(8.0),
        0.8,
        0.5,
    )
    .unwrap();
    farm.set_si(farm.si_capacity).unwrap();
    let i = FrequencyInputs::new(2500.0, farm.h_sj, 2400.0, sys.damping, &sys).unwrap();
    let f = vec![farm];
    let mpe = simulate(&f, &i, &sys, &SimOptions::default()).unwrap();
    let nompe = simulate(
        &f,
        &i,
        &sys,
        &SimOptions {
            mode: SimMode::NoMpe,
            ..SimOptions::default()
        },
    )
    .unwrap();
    let first = nompe.nadir.unwrap().df;
    assert!(nompe.post_nadir_min().unwrap() < first - 0.05);
    assert!(nompe.min_df < mpe.min_df);
    assert!(mpe.post_nadir_min().unwrap() >= mpe.nadir.unwrap().df);
}

#[test]
fn zero_wind_fleet_is_inert() {
    let sys = gb();
    let d = WindSpeedDistribution::point(0.0);
    let farm = FarmModel::new(100, TurbineParams::default(), d, 0.8, 0.5).unwrap();
    assert_eq!(farm.si_capacity, 0.0);
    let i = inputs(4000.0, 2300.0, sys.damping, &sys);
    let with = simulate(&[farm], &i, &sys, &SimOptions::default()).unwrap();
    let without = simulate(&[], &i, &sys, &SimOptions::default()).unwrap();
    assert_eq!(with.df, without.df);
}

#[test]
fn certify_flags_violations() {
    let sys = gb();
    let good = CertCase {
        period: 0,
        scenario: 0,
        h_conv: 5000.0,
        pfr_r: 2500.0,
        farms: vec![],
    };
    let bad = CertCase {
        period: 1,
        scenario: 0,
        h_conv: 1500.0,
        pfr_r: 1000.0,
        farms: vec![],
    };
    let rep = certify_schedule(&[good, bad], &sys, &SimOptions::default());
    assert!(rep.entries[0].passed());
    assert!(!rep.entries[1].passed());
    assert_eq!(rep.nadir_violations, 1);
    assert_eq!(rep.rocof_violations, 1);
    assert_eq!(rep.steady_state_violations, 1);
    assert!(!rep.all_pass());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_nadir_no_shallower_than_droop_free_sim(h in 3000.0f64..6000.0, r in 1900.0f64..2800.0, d in 20.0f64..200.0) {
        let mut sys = gb();
        sys.damping = d;
        let i = inputs(h, r, d, &sys);
        prop_assume!(nadir_time(&i, &sys).is_ok());
        let st = simulate(&[], &i, &sys, &linear_sim_opts()).unwrap();
        prop_assert!((st.min_df - nadir(&i, &sys).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn nadir_monotone_in_inertia_and_pfr(h in 3000.0f64..6000.0, r in 1900.0f64..2800.0, d in 20.0f64..200.0) {
        let sys = gb();
        let a = nadir_formula(&inputs(h, r, d, &sys), &sys).unwrap();
        let b = nadir_formula(&inputs(h * 1.1, r, d, &sys), &sys).unwrap();
        let c = nadir_formula(&inputs(h, r * 1.1, d, &sys), &sys).unwrap();
        prop_assert!(b >= a && c >= a);
    }

    #[test]
    fn linear_mode_bounds_nonlinear(frac in 0.1f64..1.0, hc in 2500.0f64..5000.0) {
        // The quadratic damping overstates the loss, so replaying with the
        // true curve never gives a deeper nadir.
        let sys = gb();
        let f = fleet(frac);
        let hs = f[0].h_sj;
        let d_eff = FrequencyInputs::effective_damping(&sys, &[f[0].gamma_j], &[hs]);
        prop_assume!(d_eff > 0.0);
        let i = FrequencyInputs::new(hc, hs, 2400.0, d_eff, &sys).unwrap();
        let lin = simulate(&f, &i, &sys, &SimOptions { mode: SimMode::LinearDamping, ..SimOptions::default() }).unwrap();
        let mpe = simulate(&f, &i, &sys, &SimOptions::default()).unwrap();
        let first_nadir = |s: &SimulatorState| s.nadir.map(|n| n.df).unwrap_or(s.min_df);
        prop_assert!(first_nadir(&mpe) >= first_nadir(&lin) - 1e-9);
    }
}
