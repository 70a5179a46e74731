use serde::{Deserialize, Serialize};

use super::{FrequencyError, FrequencyInputs};
use crate::system::SystemParams;
use crate::turbine::{self, Regime};
use crate::windfarm::FarmModel;

/// Fidelity of the turbine branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Aerodynamic loss from the Cp curve at the rotor speed implied by the
    /// released energy, fed to the grid continuously.
    NonlinearMpe,
    /// Loss approximated by γ_j·H_sj²·Δf.
    LinearDamping,
    /// Rotor dynamics integrated explicitly; the grid only sees the
    /// inertial injection until the nadir, then the accumulated loss as a step.
    NoMpe,
}

/// Primary-response model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Governor {
    /// R·min(t/T_d, 1): the delivery profile assumed by the closed form.
    Ramp,
    /// Droop gain [MW/Hz] through a first-order lag [s], saturating at R.
    DroopLag { gain: f64, lag: f64 },
}

impl Governor {
    /// A droop/lag pair whose response roughly follows the ramp: full
    /// output at half the nadir limit, lag of T_d/4.
    pub fn droop_default(inputs: &FrequencyInputs, sys: &SystemParams) -> Self {
        Governor::DroopLag {
            gain: 2.0 * inputs.pfr_r / sys.df_lim,
            lag: sys.t_d / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub mode: SimMode,
    pub governor: Governor,
    pub step: f64,
    pub horizon: f64,
    /// Abort when any rotor drops below ω_r,min instead of reporting it.
    pub strict_rotor_floor: bool,
    /// Stop this many seconds after the nadir event (None: run to horizon).
    pub stop_after_nadir: Option<f64>,
    /// Keep every k-th sample in the recorded series.
    pub record_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: SimMode::NonlinearMpe,
            governor: Governor::Ramp,
            step: 1e-3,
            horizon: 30.0,
            strict_rotor_floor: false,
            stop_after_nadir: None,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NadirEvent {
    pub time: f64,
    pub df: f64,
    /// Δḟ one step before and one step after the SI cut-off.
    pub rocof_before: f64,
    pub rocof_after: f64,
}

/// Recorded trajectory and summary of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorState {
    pub mode: SimMode,
    pub governor: Governor,
    pub step: f64,
    pub time: Vec<f64>,
    pub df: Vec<f64>,
    pub rocof: Vec<f64>,
    pub d_r: Vec<f64>,
    /// Total turbine power change seen by the grid.
    pub d_pw: Vec<f64>,
    /// Per farm: inertial injection −2H_sj·Δḟ.
    pub p_si: Vec<Vec<f64>>,
    /// Per farm: aerodynamic power change.
    pub d_pa: Vec<Vec<f64>>,
    /// Per farm: slowest rotor among turbines providing SI.
    pub omega_r: Vec<Vec<f64>>,
    pub nadir: Option<NadirEvent>,
    /// Deepest deviation over the whole run (includes any secondary dip).
    pub min_df: f64,
    pub t_min_df: f64,
    /// Per farm: min over time of ω_r/ω_r,min (∞ when no SI is provided).
    pub min_rotor_ratio: Vec<f64>,
}

impl SimulatorState {
    pub fn final_df(&self) -> f64 {
        *self.df.last().unwrap_or(&0.0)
    }

    pub fn max_abs_rocof(&self) -> f64 {
        self.rocof.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Deepest deviation after the first nadir, if any.
    pub fn post_nadir_min(&self) -> Option<f64> {
        let ev = self.nadir?;
        self.time
            .iter()
            .zip(&self.df)
            .filter(|(t, _)| **t > ev.time)
            .map(|(_, f)| *f)
            .reduce(f64::min)
    }

    /// CSV with one row per recorded sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,df_hz,rocof_hzps,dR_mw,dPw_mw");
        for j in 0..self.omega_r.len() {
            out.push_str(&format!(",omega_r_{j},p_si_{j},dPa_{j}"));
        }
        out.push('\n');
        for k in 0..self.time.len() {
            out.push_str(&format!(
                "{:.6},{:.9},{:.9},{:.6},{:.6}",
                self.time[k], self.df[k], self.rocof[k], self.d_r[k], self.d_pw[k]
            ));
            for j in 0..self.omega_r.len() {
                out.push_str(&format!(
                    ",{:.9},{:.6},{:.6}",
                    self.omega_r[j][k], self.p_si[j][k], self.d_pa[j][k]
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Turbines sharing one wind speed, flattened across farms.
struct Node {
    farm: usize,
    count: f64,
    h: f64,
    j: f64,
    omega0: f64,
    omega_min: f64,
    radius: f64,
    op: turbine::OperatingPoint,
}

impl Node {
    /// Aerodynamic power change of all turbines in the node at speed `w`.
    fn loss(&self, w: f64) -> f64 {
        if self.op.regime != Regime::KeExtraction || w == self.omega0 {
            return 0.0;
        }
        let lambda = self.radius * w / self.op.wind_speed_vw;
        self.count * (self.op.eta_a * turbine::cp_zero_pitch(lambda) - self.op.p_a0)
    }
}

struct Model<'a> {
    sys: &'a SystemParams,
    mode: SimMode,
    governor: Governor,
    h_conv: f64,
    h_syn: f64,
    pfr_r: f64,
    gammas: Vec<f64>,
    h_farm: Vec<f64>,
    nodes: Vec<Node>,
    n_farms: usize,
}

/// State layout: [Δf, governor output, ω of each node (no-MPE only)].
#[derive(Clone, Copy, PartialEq)]
enum Phase {
    BeforeNadir,
    /// Turbine contribution frozen at the given value after cut-off.
    AfterNadir(f64),
}

struct Eval {
    dfdt: f64,
    d_r: f64,
}

impl Model<'_> {
    fn ramp(&self, t: f64, y: &[f64]) -> f64 {
        match self.governor {
            Governor::Ramp => self.pfr_r * (t / self.sys.t_d).min(1.0),
            Governor::DroopLag { .. } => y[1],
        }
    }

    /// Loss per node at deviation `df`: algebraic rotor speed (MPE).
    fn mpe_loss(&self, df: f64, per_farm: Option<&mut [f64]>) -> Result<f64, usize> {
        let mut total = 0.0;
        let mut per_farm = per_farm;
        for nd in &self.nodes {
            let w2 = nd.omega0 * nd.omega0 + 4.0 * nd.h * df / nd.j;
            if w2 < 0.0 {
                return Err(nd.farm);
            }
            let l = nd.loss(w2.sqrt());
            total += l;
            if let Some(pf) = per_farm.as_deref_mut() {
                pf[nd.farm] += l;
            }
        }
        Ok(total)
    }

    fn turbine_loss(&self, y: &[f64], phase: Phase) -> Result<f64, usize> {
        match phase {
            Phase::AfterNadir(frozen) => Ok(frozen),
            Phase::BeforeNadir => match self.mode {
                SimMode::NonlinearMpe => self.mpe_loss(y[0], None),
                SimMode::LinearDamping => Ok(self
                    .gammas
                    .iter()
                    .zip(&self.h_farm)
                    .map(|(g, h)| g * h * h)
                    .sum::<f64>()
                    * y[0]),
                SimMode::NoMpe => Ok(0.0),
            },
        }
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64], phase: Phase) -> Result<Eval, usize> {
        let d_r = self.ramp(t, y);
        let loss = self.turbine_loss(y, phase)?;
        let h = match phase {
            Phase::BeforeNadir => self.h_conv + self.h_syn,
            Phase::AfterNadir(_) => self.h_conv,
        };
        let dfdt = (-self.sys.damping * y[0] + d_r - self.sys.delta_p + loss) / (2.0 * h);
        dy[0] = dfdt;
        dy[1] = match self.governor {
            Governor::Ramp => 0.0,
            Governor::DroopLag { gain, lag } => {
                ((gain * -y[0]).clamp(0.0, self.pfr_r) - y[1]) / lag
            }
        };
        if self.mode == SimMode::NoMpe {
            for (k, nd) in self.nodes.iter().enumerate() {
                let w = y[2 + k];
                dy[2 + k] = match phase {
                    Phase::BeforeNadir => {
                        if w <= 0.0 {
                            return Err(nd.farm);
                        }
                        let pa = nd.loss(w) / nd.count;
                        (pa + 2.0 * nd.h * dfdt) / (nd.j * w)
                    }
                    Phase::AfterNadir(_) => 0.0,
                };
            }
        }
        Ok(Eval { dfdt, d_r })
    }

    fn rk4(
        &self,
        t: f64,
        y: &[f64],
        h: f64,
        phase: Phase,
        scratch: &mut Rk4Scratch,
    ) -> Result<Vec<f64>, usize> {
        let n = y.len();
        let Rk4Scratch {
            k1,
            k2,
            k3,
            k4,
            tmp,
        } = scratch;
        self.eval(t, y, k1, phase)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        self.eval(t + 0.5 * h, tmp, k2, phase)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        self.eval(t + 0.5 * h, tmp, k3, phase)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        self.eval(t + h, tmp, k4, phase)?;
        Ok((0..n)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// Per-farm slowest rotor speed and its ratio to ω_r,min.
    fn rotor_speeds(&self, y: &[f64], phase_df: f64) -> Vec<(f64, f64)> {
        let mut out = vec![(f64::INFINITY, f64::INFINITY); self.n_farms];
        for (k, nd) in self.nodes.iter().enumerate() {
            let w = if self.mode == SimMode::NoMpe {
                y[2 + k]
            } else {
                (nd.omega0 * nd.omega0 + 4.0 * nd.h * phase_df / nd.j)
                    .max(0.0)
                    .sqrt()
            };
            let e = &mut out[nd.farm];
            e.0 = e.0.min(w);
            e.1 = e.1.min(w / nd.omega_min);
        }
        out
    }
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Root in [0, 1] of the derivative of the cubic Hermite interpolant
/// through (0, f0, d0) and (1, f1, d1) (derivatives scaled to the unit step).
fn hermite_stationary(f0: f64, d0: f64, f1: f64, d1: f64) -> f64 {
    // p'(s) = A s² + B s + C
    let a = 6.0 * (f0 - f1) + 3.0 * (d0 + d1);
    let b = -6.0 * (f0 - f1) - 4.0 * d0 - 2.0 * d1;
    let c = d0;
    let s = if a.abs() < 1e-14 * (b.abs() + c.abs()).max(1e-300) {
        -c / b
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let q = -0.5 * (b + b.signum() * disc);
        let r1 = q / a;
        let r2 = if q != 0.0 { c / q } else { r1 };
        let in_range = |r: f64| (-1e-9..=1.0 + 1e-9).contains(&r);
        match (in_range(r1), in_range(r2)) {
            (true, false) => r1,
            (false, true) => r2,
            (true, true) => r1.min(r2),
            _ => -c / (d1 - d0),
        }
    };
    s.clamp(0.0, 1.0)
}

/// Fixed-step RK4 simulation of the centre-of-inertia swing equation after
/// losing ΔP_L at t = 0. Farm SI is taken from each farm's `h_sj` and its
/// per-turbine allocation.
pub fn simulate(
    fleet: &[FarmModel],
    gens: &FrequencyInputs,
    sys: &SystemParams,
    opts: &SimOptions,
) -> Result<SimulatorState, FrequencyError> {
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(FrequencyError::BadSetting(format!("step {}", opts.step)));
    }
    if !(opts.horizon >= sys.t_d) {
        return Err(FrequencyError::BadSetting(format!(
            "horizon {} shorter than T_d {}",
            opts.horizon, sys.t_d
        )));
    }
    if let Governor::DroopLag { gain, lag } = opts.governor {
        if !(gain > 0.0 && lag > 0.0) {
            return Err(FrequencyError::BadSetting(
                "droop gain and lag must be positive".into(),
            ));
        }
    }
    let fleet_h: f64 = fleet.iter().map(|f| f.h_sj).sum();
    if (fleet_h - gens.h_syn).abs() > 1e-9 * fleet_h.max(gens.h_syn).max(1.0) {
        return Err(FrequencyError::InconsistentInertia {
            h_syn: gens.h_syn,
            fleet: fleet_h,
        });
    }
    if !(gens.h_conv > 0.0) {
        return Err(FrequencyError::NonPositiveInertia(gens.h_conv));
    }

    let mut nodes = Vec::new();
    for (j, farm) in fleet.iter().enumerate() {
        for nd in &farm.nodes {
            if nd.weight > 0.0 && nd.h_share > 0.0 && nd.op.regime != Regime::Stopped {
                nodes.push(Node {
                    farm: j,
                    count: farm.n_turbines as f64 * nd.weight,
                    h: nd.h_share,
                    j: farm.turbine.inertia_j,
                    omega0: nd.op.omega_r0,
                    omega_min: farm.turbine.omega_r_min,
                    radius: farm.turbine.rotor_radius,
                    op: nd.op.clone(),
                });
            }
        }
    }
    let model = Model {
        sys,
        mode: opts.mode,
        governor: opts.governor,
        h_conv: gens.h_conv,
        h_syn: fleet_h,
        pfr_r: gens.pfr_r,
        gammas: fleet.iter().map(|f| f.gamma_j).collect(),
        h_farm: fleet.iter().map(|f| f.h_sj).collect(),
        n_farms: fleet.len(),
        nodes,
    };

    let nstate = 2 + if opts.mode == SimMode::NoMpe {
        model.nodes.len()
    } else {
        0
    };
    let mut y = vec![0.0; nstate];
    for (k, nd) in model.nodes.iter().enumerate() {
        if opts.mode == SimMode::NoMpe {
            y[2 + k] = nd.omega0;
        }
    }
    let mut scratch = Rk4Scratch::new(nstate);
    let mut dy = vec![0.0; nstate];
    let h = opts.step;
    let n_steps = (opts.horizon / h).round() as usize;
    let every = opts.record_every.max(1);

    let mut st = SimulatorState {
        mode: opts.mode,
        governor: opts.governor,
        step: h,
        time: Vec::new(),
        df: Vec::new(),
        rocof: Vec::new(),
        d_r: Vec::new(),
        d_pw: Vec::new(),
        p_si: vec![Vec::new(); fleet.len()],
        d_pa: vec![Vec::new(); fleet.len()],
        omega_r: vec![Vec::new(); fleet.len()],
        nadir: None,
        min_df: 0.0,
        t_min_df: 0.0,
        min_rotor_ratio: vec![f64::INFINITY; fleet.len()],
    };

    let mut phase = Phase::BeforeNadir;
    let mut frozen_farm = vec![0.0; fleet.len()];
    let mut df_nadir = 0.0;
    let mut stop_at = f64::INFINITY;

    let stall = |farm: usize, time: f64| FrequencyError::RotorStall { time, farm };

    // Records the sample at (t, y) and checks rotor limits.
    let record = |st: &mut SimulatorState,
                  t: f64,
                  y: &[f64],
                  phase: Phase,
                  frozen_farm: &[f64],
                  df_nadir: f64,
                  dy: &mut [f64],
                  force: bool,
                  k: usize|
     -> Result<(), FrequencyError> {
        let ev = model.eval(t, y, dy, phase).map_err(|f| stall(f, t))?;
        let df_for_rotor = match phase {
            Phase::BeforeNadir => y[0],
            Phase::AfterNadir(_) => df_nadir,
        };
        let speeds = model.rotor_speeds(y, df_for_rotor);
        for (j, &(_, ratio)) in speeds.iter().enumerate() {
            st.min_rotor_ratio[j] = st.min_rotor_ratio[j].min(ratio);
            if opts.strict_rotor_floor && ratio < 1.0 - 1e-9 {
                return Err(FrequencyError::RotorFloor {
                    time: t,
                    farm: j,
                    ratio,
                });
            }
        }
        if y[0] < st.min_df {
            st.min_df = y[0];
            st.t_min_df = t;
        }
        if !(force || k % every == 0) {
            return Ok(());
        }
        let mut per_farm = vec![0.0; model.n_farms];
        match phase {
            Phase::AfterNadir(_) => per_farm.copy_from_slice(frozen_farm),
            Phase::BeforeNadir => match model.mode {
                SimMode::NonlinearMpe => {
                    model
                        .mpe_loss(y[0], Some(&mut per_farm))
                        .map_err(|f| stall(f, t))?;
                }
                SimMode::LinearDamping => {
                    for j in 0..model.n_farms {
                        per_farm[j] = model.gammas[j] * model.h_farm[j].powi(2) * y[0];
                    }
                }
                SimMode::NoMpe => {
                    for (k, nd) in model.nodes.iter().enumerate() {
                        per_farm[nd.farm] += nd.loss(y[2 + k]);
                    }
                }
            },
        }
        st.time.push(t);
        st.df.push(y[0]);
        st.rocof.push(ev.dfdt);
        st.d_r.push(ev.d_r);
        let mut pw = 0.0;
        for j in 0..model.n_farms {
            let p_si = match phase {
                Phase::BeforeNadir => -2.0 * model.h_farm[j] * ev.dfdt,
                Phase::AfterNadir(_) => 0.0,
            };
            let pa = per_farm[j];
            st.p_si[j].push(p_si);
            st.d_pa[j].push(pa);
            st.omega_r[j].push(speeds[j].0);
            pw += p_si
                + match (model.mode, phase) {
                    (SimMode::NoMpe, Phase::BeforeNadir) => 0.0,
                    _ => pa,
                };
        }
        st.d_pw.push(pw);
        Ok(())
    };

    record(
        &mut st,
        0.0,
        &y,
        phase,
        &frozen_farm,
        df_nadir,
        &mut dy,
        true,
        0,
    )?;
    let mut prev_rocof = *st.rocof.last().unwrap();
    for k in 0..n_steps {
        let t = k as f64 * h;
        if t >= stop_at {
            break;
        }
        let y_next = model
            .rk4(t, &y, h, phase, &mut scratch)
            .map_err(|f| stall(f, t))?;
        if !y_next.iter().all(|v| v.is_finite()) || y_next[0].abs() > 1e3 {
            return Err(FrequencyError::Diverged { time: t + h });
        }
        if phase == Phase::BeforeNadir {
            let ev = model
                .eval(t + h, &y_next, &mut dy, phase)
                .map_err(|f| stall(f, t + h))?;
            if prev_rocof < 0.0 && ev.dfdt >= 0.0 {
                // Locate the stationary point and re-step onto it.
                let s = hermite_stationary(y[0], prev_rocof * h, y_next[0], ev.dfdt * h);
                let tau = s * h;
                let y_ev = if tau > 0.0 {
                    model
                        .rk4(t, &y, tau, phase, &mut scratch)
                        .map_err(|f| stall(f, t))?
                } else {
                    y.clone()
                };
                let t_ev = t + tau;
                // Turbine output frozen at its value at the nadir.
                let frozen_total = match model.mode {
                    SimMode::NonlinearMpe => {
                        frozen_farm.iter_mut().for_each(|v| *v = 0.0);
                        model
                            .mpe_loss(y_ev[0], Some(&mut frozen_farm))
                            .map_err(|f| stall(f, t_ev))?
                    }
                    SimMode::LinearDamping => {
                        for j in 0..model.n_farms {
                            frozen_farm[j] = model.gammas[j] * model.h_farm[j].powi(2) * y_ev[0];
                        }
                        frozen_farm.iter().sum()
                    }
                    SimMode::NoMpe => {
                        frozen_farm.iter_mut().for_each(|v| *v = 0.0);
                        for (k, nd) in model.nodes.iter().enumerate() {
                            frozen_farm[nd.farm] += nd.loss(y_ev[2 + k]);
                        }
                        frozen_farm.iter().sum()
                    }
                };
                record(
                    &mut st,
                    t_ev,
                    &y_ev,
                    phase,
                    &frozen_farm,
                    df_nadir,
                    &mut dy,
                    true,
                    k + 1,
                )?;
                df_nadir = y_ev[0];
                phase = Phase::AfterNadir(frozen_total);
                record(
                    &mut st,
                    t_ev,
                    &y_ev,
                    phase,
                    &frozen_farm,
                    df_nadir,
                    &mut dy,
                    true,
                    k + 1,
                )?;
                // Finish the interrupted step under post-nadir dynamics.
                let rest = h - tau;
                let y_end = if rest > 0.0 {
                    model
                        .rk4(t_ev, &y_ev, rest, phase, &mut scratch)
                        .map_err(|f| stall(f, t_ev))?
                } else {
                    y_ev.clone()
                };
                let after = model.eval(t_ev + 0.5 * h, &y_end, &mut dy, phase);
                st.nadir = Some(NadirEvent {
                    time: t_ev,
                    df: y_ev[0],
                    rocof_before: model
                        .eval(t, &y, &mut dy, Phase::BeforeNadir)
                        .map(|e| e.dfdt)
                        .unwrap_or(f64::NAN),
                    rocof_after: after.map(|e| e.dfdt).unwrap_or(f64::NAN),
                });
                if let Some(extra) = opts.stop_after_nadir {
                    stop_at = t_ev + extra;
                }
                y = y_end;
                record(
                    &mut st,
                    t + h,
                    &y,
                    phase,
                    &frozen_farm,
                    df_nadir,
                    &mut dy,
                    false,
                    k + 1,
                )?;
                continue;
            }
            prev_rocof = ev.dfdt;
        }
        y = y_next;
        record(
            &mut st,
            t + h,
            &y,
            phase,
            &frozen_farm,
            df_nadir,
            &mut dy,
            k + 1 == n_steps,
            k + 1,
        )?;
    }
    Ok(st)
}
