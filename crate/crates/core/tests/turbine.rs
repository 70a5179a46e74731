use approx::assert_relative_eq;
use proptest::prelude::*;
use siuc_core::turbine::*;

// 40-digit evaluations of the Cp curve (mpmath).
const CP_AT_8: f64 = 0.388_544_072_934_472_956_621_131_146_927;
const CP_MAX: f64 = 0.438_209_010_598_031_228_915_633_443_735;

fn params() -> TurbineParams {
    TurbineParams::default()
}

fn op(vw: f64) -> OperatingPoint {
    mppt_operating_point(&params(), vw).unwrap()
}

#[test]
fn cp_vanishing_inner_ratio() {
    let cp = power_coefficient(200.0 / 7.0, 0.0).unwrap();
    assert_relative_eq!(cp, -1.1, max_relative = 1e-12);
}

#[test]
fn cp_high_precision_point() {
    assert_relative_eq!(
        power_coefficient(8.0, 0.0).unwrap(),
        CP_AT_8,
        max_relative = 1e-14
    );
    assert_relative_eq!(cp_zero_pitch(8.0), CP_AT_8, max_relative = 1e-14);
}

#[test]
fn cp_domain_error() {
    assert!(matches!(
        power_coefficient(0.0, 0.0),
        Err(TurbineError::CpDomain { .. })
    ));
    assert!(matches!(
        power_coefficient(0.8, -10.0),
        Err(TurbineError::CpDomain { .. })
    ));
}

#[test]
fn optimal_tip_ratio_matches_closed_form_and_grid() {
    let closed = 11600.0 / 1834.0;
    assert_relative_eq!(optimal_tip_ratio(), closed, max_relative = 1e-12);
    assert_relative_eq!(max_power_coefficient(), CP_MAX, max_relative = 1e-12);

    // Dense scan over the validity range; the argmax is unique.
    let (lo, hi, n) = (0.21, 45.88, 1_000_000);
    let step = (hi - lo) / n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut peaks = 0;
    let mut prev = power_coefficient(lo, 0.0).unwrap();
    let mut rising = true;
    for i in 1..=n {
        let l = lo + i as f64 * step;
        let c = power_coefficient(l, 0.0).unwrap();
        if c > best.0 {
            best = (c, l);
        }
        if rising && c < prev {
            peaks += 1;
            rising = false;
        } else if !rising && c > prev {
            rising = true;
        }
        prev = c;
    }
    assert_eq!(peaks, 1);
    assert!((best.1 - optimal_tip_ratio()).abs() <= step);
}

#[test]
fn optimal_tip_ratio_matches_golden_section() {
    // A search on Cp itself resolves the flat peak only to about √ε.
    let f = |l: f64| power_coefficient(l, 0.0).unwrap();
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.21, 45.88);
    while b - a > 1e-10 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    assert_relative_eq!(0.5 * (a + b), optimal_tip_ratio(), max_relative = 1e-7);
}

#[test]
fn mppt_scaling() {
    let a = op(5.0);
    let b = op(10.0);
    assert_relative_eq!(b.omega_r0, 2.0 * a.omega_r0, max_relative = 1e-12);
    assert_relative_eq!(b.p_a0, 8.0 * a.p_a0, max_relative = 1e-12);
    assert_eq!(a.regime, Regime::KeExtraction);
    assert!(matches!(
        mppt_operating_point(&params(), 0.0),
        Err(TurbineError::NotKeMode(_))
    ));
    assert!(matches!(
        mppt_operating_point(&params(), 20.0),
        Err(TurbineError::NotKeMode(_))
    ));
}

#[test]
fn operating_regimes() {
    let p = params();
    assert_eq!(operating_point(&p, 1.0).regime, Regime::Stopped);
    assert_eq!(operating_point(&p, 30.0).regime, Regime::Stopped);
    let pitch = operating_point(&p, 18.0);
    assert_eq!(pitch.regime, Regime::Pitch);
    assert_relative_eq!(pitch.p0, p.rated_mech_power(), max_relative = 1e-12);
}

#[test]
fn rotor_speed_fixed_points() {
    let p = params();
    let o = op(9.0);
    assert_eq!(rotor_speed_from_freq(0.0, 3.0, &o, &p).unwrap(), o.omega_r0);
    assert_eq!(
        rotor_speed_from_freq(-0.5, 0.0, &o, &p).unwrap(),
        o.omega_r0
    );
    let h = p.inertia_j * (o.omega_r0.powi(2) - p.omega_r_min.powi(2)) / (4.0 * 0.8);
    assert_relative_eq!(
        rotor_speed_from_freq(-0.8, h, &o, &p).unwrap(),
        p.omega_r_min,
        max_relative = 1e-12
    );
    assert!(matches!(
        rotor_speed_from_freq(-0.8, 1.5 * h, &o, &p),
        Err(TurbineError::MechanicalLimit { .. })
    ));
}

#[test]
fn rotor_speed_round_trip() {
    let p = params();
    let o = op(8.0);
    let w = rotor_speed_from_freq(-0.3, 2.0, &o, &p).unwrap();
    assert_relative_eq!(
        si_from_rotor_speeds(w, o.omega_r0, -0.3, &p),
        2.0,
        max_relative = 1e-10
    );
}

#[test]
fn power_loss_zero_cases() {
    let p = params();
    let o = op(8.0);
    assert_eq!(mech_power_loss(0.0, 3.0, &o, &p).unwrap(), 0.0);
    for df in [-0.1, -0.4, -0.8] {
        assert_eq!(mech_power_loss(df, 0.0, &o, &p).unwrap(), 0.0);
    }
    assert_eq!(
        mech_power_loss(-0.8, 3.0, &operating_point(&p, 18.0), &p).unwrap(),
        0.0
    );
}

#[test]
fn power_loss_matches_composed_formula() {
    let p = params();
    let o = op(8.0);
    let h_max = si_capacity_single(&o, &p, 0.8, 0.5);
    let h = 0.5 * h_max;
    // Compose independently: kinetic-energy balance → rotor speed → tip ratio → Cp.
    let w = (o.omega_r0.powi(2) - 4.0 * h * 0.8 / p.inertia_j).sqrt();
    let lambda = p.rotor_radius * w / 8.0;
    let eta = std::f64::consts::PI * p.air_density_rho * p.rotor_radius.powi(2) * 512.0 / 2e6;
    let oracle = eta
        * (power_coefficient(lambda, 0.0).unwrap()
            - power_coefficient(o.tip_ratio_lambda, 0.0).unwrap());
    let got = mech_power_loss(-0.8, h, &o, &p).unwrap();
    assert!(got < 0.0);
    assert_relative_eq!(got, oracle, max_relative = 1e-9);
}

#[test]
fn damping_coefficient_properties() {
    let p = params();
    let o = op(8.0);
    let h_max = si_capacity_single(&o, &p, 0.8, 0.5);
    assert_eq!(damping_coefficient(0.0, &o, &p, 0.8).unwrap(), 0.0);
    let d = damping_coefficient(h_max, &o, &p, 0.8).unwrap();
    assert_relative_eq!(
        d * -0.8,
        mech_power_loss(-0.8, h_max, &o, &p).unwrap(),
        max_relative = 1e-12
    );
    let mut prev = 0.0;
    for i in 1..=200 {
        let di = damping_coefficient(h_max * i as f64 / 200.0, &o, &p, 0.8).unwrap();
        assert!(di > prev);
        prev = di;
    }
}

#[test]
fn gamma_fit_endpoints_and_quality() {
    let p = params();
    for vw in [5.0, 7.0, 9.0, 11.0] {
        let o = op(vw);
        let h_max = si_capacity_single(&o, &p, 0.8, 0.5);
        let g = gamma_fit(h_max, &o, &p, 0.8).unwrap();
        assert_relative_eq!(
            g * h_max * h_max,
            damping_coefficient(h_max, &o, &p, 0.8).unwrap(),
            max_relative = 1e-12
        );
        assert_eq!(g * 0.0, 0.0);
        let mut worst: f64 = 0.0;
        for i in 1..=50 {
            let h = h_max * i as f64 / 51.0;
            let d = damping_coefficient(h, &o, &p, 0.8).unwrap();
            worst = worst.max((g * h * h - d).abs() / d);
        }
        // The quadratic is a fit, not an identity: it overstates the loss
        // at partial SI. Report the error and gate it loosely.
        println!("vw {vw}: worst interior relative fit error {worst:.3}");
        assert!(worst < 0.5, "vw {vw}: fit error {worst}");
    }
    assert_eq!(gamma_fit(0.0, &op(8.0), &p, 0.8).unwrap(), 0.0);
}

#[test]
fn si_capacity_zero_terms() {
    let mut p = params();
    // ω_r0 = ω_min
    let o = op(8.0);
    p.omega_r_min = o.omega_r0;
    assert_eq!(si_capacity_single(&o, &p, 0.8, 0.5), 0.0);
    let p = params();
    let mut o = op(8.0);
    o.p0 = p.p_rated_max;
    assert_eq!(si_capacity_single(&o, &p, 0.8, 0.5), 0.0);
}

#[test]
fn si_capacity_curve_shape() {
    let p = params();
    let speeds: Vec<f64> = (0..=240).map(|i| 3.0 + i as f64 * 0.1).collect();
    let caps: Vec<f64> = speeds
        .iter()
        .map(|&v| si_capacity_single(&operating_point(&p, v), &p, 0.8, 0.5))
        .collect();
    let (imax, cmax) = caps
        .iter()
        .enumerate()
        .fold((0, 0.0), |a, (i, &c)| if c > a.1 { (i, c) } else { a });
    assert!(cmax > 0.0);
    assert!(speeds[imax] < p.rated_wind_speed);
    // Rises to the peak, then falls, then is flat above rated.
    assert!(caps[..imax].windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let above: Vec<f64> = speeds
        .iter()
        .zip(&caps)
        .filter(|(v, _)| **v > p.rated_wind_speed && **v < p.cut_out_speed)
        .map(|(_, c)| *c)
        .collect();
    assert!(above.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    assert!(caps[imax] > above[0]);
}

#[test]
fn curvature_sign_and_derivative_oracle() {
    let p = params();
    let o = op(8.0);
    let h_max = si_capacity_single(&o, &p, 0.8, 0.5);
    let h = 0.7 * h_max;
    for i in 1..40 {
        let df = -0.8 * i as f64 / 40.0;
        let (d1, d2) = mech_power_loss_derivatives(df, h, &o, &p).unwrap();
        let e = 1e-4;
        let f = |x: f64| mech_power_loss(x, h, &o, &p).unwrap();
        let fd1 = (f(df + e) - f(df - e)) / (2.0 * e);
        let fd2 = (f(df + e) - 2.0 * f(df) + f(df - e)) / (e * e);
        assert_relative_eq!(d1, fd1, max_relative = 1e-6);
        assert_relative_eq!(d2, fd2, max_relative = 1e-3);
        assert!(d2 < 0.0);
    }
}

#[test]
fn si_approx_clamps() {
    let p = params();
    let o = op(8.0);
    let a = SiApprox::new(1e9, &o, &p, 0.8, 0.5).unwrap();
    assert_eq!(a.h_s, a.h_s_max);
    assert_relative_eq!(a.d_s, a.gamma * a.h_s_max * a.h_s_max, max_relative = 1e-12);
}

#[test]
fn params_validate() {
    assert!(params().validate().is_ok());
    let mut p = params();
    p.inertia_j = -1.0;
    assert!(p.validate().is_err());
    let mut p = params();
    p.omega_r_min = 100.0;
    assert!(matches!(
        p.validate(),
        Err(TurbineError::OmegaMinTooHigh { .. })
    ));
}

proptest! {
    #[test]
    fn loss_below_linear_chord(vw in 4.0f64..11.4, frac in 0.01f64..1.0, x in 0.0f64..1.0) {
        let p = params();
        let o = op(vw);
        let h_max = si_capacity_single(&o, &p, 0.8, 0.5);
        let h = frac * h_max;
        let d = damping_coefficient(h, &o, &p, 0.8).unwrap();
        let df = -0.8 * x;
        let loss = mech_power_loss(df, h, &o, &p).unwrap();
        prop_assert!(loss <= 0.0);
        prop_assert!(loss >= d * df - 1e-9 * (1.0 + (d * df).abs()));
    }

    #[test]
    fn curvature_factors_signed(lambda in 2.65f64..9.95) {
        prop_assert!(curvature_g1(lambda) > 0.0);
        prop_assert!(curvature_g2(lambda) < 0.0);
    }

    #[test]
    fn capacity_within_limits(vw in 0.0f64..30.0) {
        let p = params();
        let o = operating_point(&p, vw);
        let c = si_capacity_single(&o, &p, 0.8, 0.5);
        prop_assert!(c >= 0.0);
        prop_assert!(c <= (p.p_rated_max - o.p0).max(0.0) / (2.0 * 0.5) + 1e-12);
        if o.regime == Regime::KeExtraction && c > 0.0 {
            prop_assert!(rotor_speed_from_freq(-0.8, c, &o, &p).is_ok());
        }
    }
}
