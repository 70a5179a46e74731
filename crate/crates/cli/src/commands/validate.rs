//! Sweep of (H, R, H_s) samples comparing the closed-form response with the
//! time-domain simulator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use siuc_core::frequency::{self, FrequencyInputs, SimMode, SimOptions};
use siuc_core::SystemParams;

use crate::config::{check_system, gb, parse, FarmConfig};
use crate::error::{schema, CliError};
use crate::output::{Meta, OutDir};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateConfig {
    #[serde(default = "gb")]
    system: SystemParams,
    /// SI source; `si_fraction` is ignored, each sample sets its own H_s.
    #[serde(default)]
    farm: Option<FarmConfig>,
    #[serde(default)]
    ranges: Ranges,
    #[serde(default = "samples")]
    n_samples: usize,
    #[serde(default = "step")]
    step: f64,
    /// Allowed closed-form vs linear-simulator nadir difference [Hz].
    #[serde(default = "tol")]
    tolerance_hz: f64,
    #[serde(default)]
    seed: u64,
}

/// Total inertia H (incl. SI) [MW·s/Hz], PFR R [MW] and SI H_s [MW·s/Hz].
#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Ranges {
    h: (f64, f64),
    r: (f64, f64),
    hs: (f64, f64),
}

impl Default for Ranges {
    fn default() -> Self {
        Ranges {
            h: (3710.0, 5730.0),
            r: (1660.0, 2710.0),
            hs: (0.0, 0.0),
        }
    }
}

fn samples() -> usize {
    200
}
fn step() -> f64 {
    1e-3
}
fn tol() -> f64 {
    1e-6
}

#[derive(Default, Serialize)]
struct Stats {
    min: f64,
    mean: f64,
    max: f64,
}

impl Stats {
    fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        Some(Stats {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Serialize)]
struct Report {
    ranges: Ranges,
    samples: usize,
    /// Samples outside the model's validity (D′ ≤ 0 or H_conv < 0).
    skipped: usize,
    /// Nadir inside the delivery window: compared against the linear simulator.
    compared: usize,
    worst_nadir_error_hz: f64,
    worst_rocof_error_hzps: f64,
    /// Nonlinear simulated |nadir| above the closed-form bound.
    conservativeness_failures: usize,
    /// |nadir| statistics [Hz], closed form and nonlinear simulation.
    analytic_nadir: Option<Stats>,
    simulated_nadir: Option<Stats>,
    passed: bool,
}

pub fn run(bytes: &[u8], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let cfg: ValidateConfig = parse(bytes)?;
    let sys = &cfg.system;
    check_system(sys)?;
    let seed = seed.unwrap_or(cfg.seed);
    let rg = &cfg.ranges;
    for (name, (lo, hi)) in [("h", rg.h), ("r", rg.r), ("hs", rg.hs)] {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(schema(format!("range `{name}` must satisfy 0 ≤ lo ≤ hi")));
        }
    }
    if cfg.n_samples == 0 || !(cfg.step > 0.0) {
        return Err(schema("n_samples must be positive and step > 0"));
    }
    let farm = match &cfg.farm {
        Some(f) => {
            let m = f.build(sys)?;
            if m.si_capacity < rg.hs.1 {
                return Err(schema(format!(
                    "farm SI capacity {:.1} below the H_s range",
                    m.si_capacity
                )));
            }
            Some(m)
        }
        None if rg.hs.1 > 0.0 => return Err(schema("an H_s range needs a `farm`")),
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if hi > lo {
            rng.gen_range(lo..=hi)
        } else {
            lo
        }
    };
    let (mut skipped, mut compared, mut failures) = (0, 0, 0);
    let (mut worst_nadir, mut worst_rocof) = (0.0f64, 0.0f64);
    let (mut analytic, mut simulated) = (Vec::new(), Vec::new());
    for _ in 0..cfg.n_samples {
        let (h, r, hs) = (
            draw(&mut rng, rg.h),
            draw(&mut rng, rg.r),
            draw(&mut rng, rg.hs),
        );
        let mut fleet = Vec::new();
        let mut d_eff = sys.damping;
        if let Some(f) = &farm {
            let mut f = f.clone();
            f.set_si(hs).map_err(|e| schema(e.to_string()))?;
            d_eff -= f.gamma_j * hs * hs;
            fleet.push(f);
        }
        let Ok(inputs) = FrequencyInputs::new(h - hs, hs, r, d_eff, sys) else {
            skipped += 1;
            continue;
        };
        let peak = frequency::peak_deviation(&inputs, sys)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        analytic.push(peak.abs());
        if let Ok(n) = frequency::nadir(&inputs, sys) {
            let opts = SimOptions {
                mode: SimMode::LinearDamping,
                step: cfg.step,
                stop_after_nadir: Some(0.0),
                record_every: usize::MAX,
                ..SimOptions::default()
            };
            let lin = frequency::simulate(&fleet, &inputs, sys, &opts)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(ev) = lin.nadir {
                compared += 1;
                worst_nadir = worst_nadir.max((ev.df - n).abs());
                worst_rocof = worst_rocof
                    .max((lin.max_abs_rocof() - frequency::rocof_max(&inputs, sys).abs()).abs());
            }
        }
        let opts = SimOptions {
            step: cfg.step,
            record_every: usize::MAX,
            ..SimOptions::default()
        };
        let st = frequency::simulate(&fleet, &inputs, sys, &opts)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        simulated.push(st.min_df.abs());
        if st.min_df.abs() > peak.abs() + cfg.tolerance_hz {
            failures += 1;
        }
    }
    let passed = worst_nadir <= cfg.tolerance_hz && failures == 0 && worst_rocof <= 1e-9;
    let report = Report {
        ranges: cfg.ranges,
        samples: cfg.n_samples,
        skipped,
        compared,
        worst_nadir_error_hz: worst_nadir,
        worst_rocof_error_hzps: worst_rocof,
        conservativeness_failures: failures,
        analytic_nadir: Stats::of(&analytic),
        simulated_nadir: Stats::of(&simulated),
        passed,
    };
    let mut dir = OutDir::create(out, Meta::new("validate", bytes, seed))?;
    dir.json("validation.json", &report)?;
    let summary = format!("{compared} compared, worst nadir error {worst_nadir:.2e} Hz, {failures} conservativeness failures");
    if passed {
        Ok(summary)
    } else {
        Err(CliError::Validation(summary))
    }
}
