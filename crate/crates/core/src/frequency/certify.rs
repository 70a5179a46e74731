use serde::{Deserialize, Serialize};

use super::{
    peak_deviation, rocof_max, simulate, steady_state_dev, FrequencyError, FrequencyInputs,
    SimMode, SimOptions,
};
use crate::system::SystemParams;
use crate::windfarm::FarmModel;

/// One scheduled operating state to replay.
#[derive(Debug, Clone)]
pub struct CertCase {
    pub period: usize,
    pub scenario: usize,
    pub h_conv: f64,
    pub pfr_r: f64,
    /// Farms with the scheduled `h_sj` already applied.
    pub farms: Vec<FarmModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertEntry {
    pub period: usize,
    pub scenario: usize,
    pub h_total: f64,
    pub pfr_r: f64,
    pub d_eff: f64,
    pub rocof: f64,
    pub steady_state: f64,
    pub analytic_nadir: f64,
    pub sim_nadir: f64,
    pub sim_t_nadir: Option<f64>,
    pub sim_final: f64,
    pub min_rotor_ratio: f64,
    pub pass_rocof: bool,
    pub pass_steady_state: bool,
    pub pass_nadir: bool,
    pub pass_rotor: bool,
    /// Set when the replay itself failed (stall, divergence, bad inputs).
    pub error: Option<String>,
}

impl CertEntry {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.pass_rocof
            && self.pass_steady_state
            && self.pass_nadir
            && self.pass_rotor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub entries: Vec<CertEntry>,
    pub nadir_violations: usize,
    pub rocof_violations: usize,
    pub steady_state_violations: usize,
    pub rotor_violations: usize,
    pub errors: usize,
}

impl CertReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(CertEntry::passed)
    }
}

/// Absolute slack applied to every limit comparison (numerical noise only).
const LIMIT_TOL: f64 = 1e-9;

/// Replays every case through the nonlinear simulator and checks the
/// nadir, RoCoF, steady-state and rotor-speed limits. The steady state is
/// judged with the scheduled effective damping D′ = D − Σγ_j H_sj², since
/// the simulator does not model rotor recovery after the SI cut-off.
pub fn certify_schedule(cases: &[CertCase], sys: &SystemParams, opts: &SimOptions) -> CertReport {
    let mut entries = Vec::with_capacity(cases.len());
    for case in cases {
        entries.push(certify_case(case, sys, opts));
    }
    let count = |f: fn(&CertEntry) -> bool| {
        entries
            .iter()
            .filter(|e| e.error.is_none() && !f(e))
            .count()
    };
    CertReport {
        nadir_violations: count(|e| e.pass_nadir),
        rocof_violations: count(|e| e.pass_rocof),
        steady_state_violations: count(|e| e.pass_steady_state),
        rotor_violations: count(|e| e.pass_rotor),
        errors: entries.iter().filter(|e| e.error.is_some()).count(),
        entries,
    }
}

fn certify_case(case: &CertCase, sys: &SystemParams, opts: &SimOptions) -> CertEntry {
    let h_syn: f64 = case.farms.iter().map(|f| f.h_sj).sum();
    let gammas: Vec<f64> = case.farms.iter().map(|f| f.gamma_j).collect();
    let hs: Vec<f64> = case.farms.iter().map(|f| f.h_sj).collect();
    let d_eff = FrequencyInputs::effective_damping(sys, &gammas, &hs);
    let mut entry = CertEntry {
        period: case.period,
        scenario: case.scenario,
        h_total: case.h_conv + h_syn,
        pfr_r: case.pfr_r,
        d_eff,
        rocof: f64::NAN,
        steady_state: f64::NAN,
        analytic_nadir: f64::NAN,
        sim_nadir: f64::NAN,
        sim_t_nadir: None,
        sim_final: f64::NAN,
        min_rotor_ratio: f64::NAN,
        pass_rocof: false,
        pass_steady_state: false,
        pass_nadir: false,
        pass_rotor: false,
        error: None,
    };
    let mut run = || -> Result<(), FrequencyError> {
        let inputs = FrequencyInputs::new(case.h_conv, h_syn, case.pfr_r, d_eff, sys)?;
        entry.steady_state = steady_state_dev(&inputs, sys)?;
        entry.analytic_nadir = peak_deviation(&inputs, sys)?;
        let sim_opts = SimOptions {
            mode: SimMode::NonlinearMpe,
            ..*opts
        };
        let st = simulate(&case.farms, &inputs, sys, &sim_opts)?;
        entry.rocof = -st.max_abs_rocof().max(rocof_max(&inputs, sys).abs());
        entry.sim_nadir = st.min_df;
        entry.sim_t_nadir = st.nadir.map(|n| n.time);
        entry.sim_final = st.final_df();
        entry.min_rotor_ratio = st
            .min_rotor_ratio
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(())
    };
    match run() {
        Ok(()) => {
            entry.pass_rocof = entry.rocof.abs() <= sys.rocof_lim + LIMIT_TOL;
            // Only the under-frequency side: PFR beyond ΔP_L is not a shortfall.
            entry.pass_steady_state = entry.steady_state >= -sys.df_ss_lim - LIMIT_TOL;
            entry.pass_nadir = entry.sim_nadir.abs() <= sys.df_lim + LIMIT_TOL;
            entry.pass_rotor = entry.min_rotor_ratio >= 1.0 - LIMIT_TOL;
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    entry
}
