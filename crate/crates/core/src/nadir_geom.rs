//! Inner polyhedral approximation of the frequency-nadir region.
//!
//! The nadir requirement with SI damping, HR ≥ α + Σ β_j H_sj², is a convex
//! region bounded by one sheet of a hyperboloid. In rotated coordinates
//! x₁ = (H+R)/√2, x₂ = (H−R)/√2 and scaled SI coordinates z_j = √(2β_j)·H_sj
//! it reads x₁ ≥ √(2α + ‖z‖²) with z = (x₂, z₁, …). The planes built here are
//! chords of that surface: radially between nested layers, angularly with a
//! covering-radius correction, so every point they admit (inside the domain
//! box) satisfies the nonlinear requirement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frequency::{peak_deviation, FrequencyInputs};
use crate::system::SystemParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("α = {0} ≤ 0: the nadir requirement is vacuous for these limits")]
    AlphaNonPositive(f64),
    #[error("invalid linearizer config: {0}")]
    BadConfig(String),
    #[error(
        "{m} planes per layer cannot cover {farms} farm directions (covering angle {delta} rad)"
    )]
    TooFewPlanes { m: usize, farms: usize, delta: f64 },
    #[error("plane set is empty: the linearized region is vacuous")]
    EmptyPlaneSet,
    #[error("plane set is not certified: {0}")]
    NotCertified(String),
    #[error("plane set digest mismatch")]
    DigestMismatch,
    #[error("plane set JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperboloidCoeffs {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

/// HR threshold with no damping: ΔP²T_d/(4Δf_lim).
pub fn nadir_rhs_no_damping(sys: &SystemParams) -> f64 {
    sys.delta_p * sys.delta_p * sys.t_d / (4.0 * sys.df_lim)
}

/// HR threshold with effective damping D′, a chord of the exact threshold.
pub fn nadir_rhs_with_damping(sys: &SystemParams, d_eff: f64) -> f64 {
    nadir_rhs_no_damping(sys) - sys.delta_p * sys.t_d / 4.0 * d_eff
}

/// α and β_j for load damping D and farm coefficients γ_j.
pub fn to_standard_form(
    sys: &SystemParams,
    gammas: &[f64],
) -> Result<HyperboloidCoeffs, GeomError> {
    let alpha = nadir_rhs_with_damping(sys, sys.damping);
    if !(alpha > 0.0) {
        return Err(GeomError::AlphaNonPositive(alpha));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(GeomError::BadConfig(format!(
            "γ must be non-negative, got {g}"
        )));
    }
    Ok(HyperboloidCoeffs {
        alpha,
        beta: gammas
            .iter()
            .map(|g| sys.delta_p * sys.t_d * g / 4.0)
            .collect(),
    })
}

impl HyperboloidCoeffs {
    /// γ_j recovered from β_j.
    pub fn gammas(&self, sys: &SystemParams) -> Vec<f64> {
        self.beta
            .iter()
            .map(|b| 4.0 * b / (sys.delta_p * sys.t_d))
            .collect()
    }

    /// HR − α − Σβ_j H_sj²; non-negative exactly when the point is feasible.
    pub fn margin(&self, h: f64, r: f64, hs: &[f64]) -> f64 {
        h * r
            - self.alpha
            - self
                .beta
                .iter()
                .zip(hs)
                .map(|(b, x)| b * x * x)
                .sum::<f64>()
    }

    /// Standard-form residual Σ β_j x̃_j²/α + x₂²/(2α) − x₁²/(2α) + 1 (≤ 0 feasible).
    pub fn standard_residual(&self, x1: f64, x2: f64, xs: &[f64]) -> f64 {
        self.beta
            .iter()
            .zip(xs)
            .map(|(b, x)| b * x * x)
            .sum::<f64>()
            / self.alpha
            + (x2 * x2 - x1 * x1) / (2.0 * self.alpha)
            + 1.0
    }
}

/// (H, R) → (x₁, x₂); the map is symmetric orthonormal and its own inverse.
pub fn rotate(h: f64, r: f64) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (s * (h + r), s * (h - r))
}

/// (x₁, x₂) → (H, R).
pub fn unrotate(x1: f64, x2: f64) -> (f64, f64) {
    rotate(x1, x2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub h: (f64, f64),
    pub r: (f64, f64),
    pub hs: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn contains(&self, h: f64, r: f64, hs: &[f64]) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(h, self.h)
            && inside(r, self.r)
            && hs.iter().zip(&self.hs).all(|(v, b)| inside(*v, *b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizerConfig {
    pub n_layers: usize,
    pub m_planes: usize,
    pub domain: DomainBox,
    /// Geometric spacing of layer levels toward the apex.
    #[serde(default = "default_ratio")]
    pub layer_ratio: f64,
}

fn default_ratio() -> f64 {
    0.6
}

impl LinearizerConfig {
    pub fn new(n_layers: usize, m_planes: usize, domain: DomainBox) -> Self {
        LinearizerConfig {
            n_layers,
            m_planes,
            domain,
            layer_ratio: default_ratio(),
        }
    }

    pub fn validate(&self, n_farms: usize) -> Result<(), GeomError> {
        if self.n_layers < 1 || self.m_planes < 3 {
            return Err(GeomError::BadConfig(format!(
                "need n ≥ 1 and m ≥ 3, got n = {}, m = {}",
                self.n_layers, self.m_planes
            )));
        }
        if !(self.layer_ratio > 0.0 && self.layer_ratio < 1.0) {
            return Err(GeomError::BadConfig(format!(
                "layer ratio {}",
                self.layer_ratio
            )));
        }
        if self.domain.hs.len() != n_farms {
            return Err(GeomError::BadConfig(format!(
                "domain has {} SI ranges for {} farms",
                self.domain.hs.len(),
                n_farms
            )));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo;
        if !(ok(self.domain.h) && ok(self.domain.r) && self.domain.hs.iter().all(|b| ok(*b))) {
            return Err(GeomError::BadConfig(
                "domain bounds must be finite, ordered and ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

/// a·H + b·R + Σ c_j H_sj + d ≤ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
    pub d: f64,
}

impl Hyperplane {
    pub fn eval(&self, h: f64, r: f64, hs: &[f64]) -> f64 {
        self.a * h + self.b * r + self.c.iter().zip(hs).map(|(c, x)| c * x).sum::<f64>() + self.d
    }
}

/// Admissibility tolerance, relative to the plane constant.
fn plane_tol(p: &Hyperplane) -> f64 {
    1e-12 * p.d.abs().max(1.0)
}

pub fn satisfies_all(planes: &[Hyperplane], h: f64, r: f64, hs: &[f64]) -> bool {
    planes.iter().all(|p| p.eval(h, r, hs) <= plane_tol(p))
}

/// Angular cells over the half-sphere {u : u_j ≥ 0 for j ≥ 1} in `dim`
/// dimensions: cell centres and a certified covering angle.
///
/// Hyperspherical angles φ₁ ∈ [0, π], φ₂.. ∈ [0, π/2]; the metric of these
/// coordinates is dominated by the Euclidean one in angle space, so every
/// direction in a cell lies within half the cell diagonal of its centre.
fn angular_cells(dim: usize, m: usize) -> (Vec<Vec<f64>>, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    let n_angles = dim - 1;
    let ranges: Vec<f64> = (0..n_angles)
        .map(|k| if k == 0 { PI } else { FRAC_PI_2 })
        .collect();
    // Choose the factorisation of m over the angles that minimises the bound.
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut counts = vec![1usize; n_angles];
    fn search(
        k: usize,
        rem: usize,
        counts: &mut Vec<usize>,
        ranges: &[f64],
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if k + 1 == counts.len() {
            counts[k] = rem;
            let delta = 0.5
                * counts
                    .iter()
                    .zip(ranges)
                    .map(|(c, r)| (r / *c as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
            if best.as_ref().is_none_or(|(d, _)| delta < *d - 1e-15) {
                *best = Some((delta, counts.clone()));
            }
            return;
        }
        for c in (1..=rem).filter(|c| rem % c == 0) {
            counts[k] = c;
            search(k + 1, rem / c, counts, ranges, best);
        }
    }
    search(0, m, &mut counts, &ranges, &mut best);
    let (delta, counts) = best.expect("m ≥ 1");
    let mut dirs = Vec::with_capacity(m);
    let mut idx = vec![0usize; n_angles];
    loop {
        let angles: Vec<f64> = idx
            .iter()
            .zip(&counts)
            .zip(&ranges)
            .map(|((i, c), r)| (*i as f64 + 0.5) * r / *c as f64)
            .collect();
        let mut u = vec![0.0; dim];
        let mut sin_prod = 1.0;
        for k in 0..n_angles {
            u[k] = sin_prod * angles[k].cos();
            sin_prod *= angles[k].sin();
        }
        u[n_angles] = sin_prod;
        dirs.push(u);
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == n_angles {
                return (dirs, delta);
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// x₁ levels and radii of the apex (index 0) and the n layers.
fn layers(
    coeffs: &HyperboloidCoeffs,
    cfg: &LinearizerConfig,
) -> Result<Vec<(f64, f64)>, GeomError> {
    let d = &cfg.domain;
    let x2max = (d.h.1 - d.r.0).abs().max((d.r.1 - d.h.0).abs()) * std::f64::consts::FRAC_1_SQRT_2;
    let r_max2 = x2max * x2max
        + coeffs
            .beta
            .iter()
            .zip(&d.hs)
            .map(|(b, (_, hi))| 2.0 * b * hi * hi)
            .sum::<f64>();
    if !(r_max2 > 0.0) {
        return Err(GeomError::BadConfig(
            "domain box has zero extent in the cone radius".into(),
        ));
    }
    let l0 = (2.0 * coeffs.alpha).sqrt();
    let ln = (2.0 * coeffs.alpha + r_max2).sqrt();
    let n = cfg.n_layers;
    let mut out = vec![(l0, 0.0)];
    for k in 1..=n {
        let level = if k == n {
            ln
        } else {
            l0 + (ln - l0) * cfg.layer_ratio.powi((n - k) as i32)
        };
        let radius = (level * level - 2.0 * coeffs.alpha).max(0.0).sqrt();
        out.push((level, radius));
    }
    for w in out.windows(2) {
        if !(w[1].1 > w[0].1 * (1.0 + 1e-12)) {
            return Err(GeomError::BadConfig("consecutive layers coincide".into()));
        }
    }
    Ok(out)
}

/// Builds n·m inner planes in (H, R, H_s) coordinates.
pub fn generate_planes(
    coeffs: &HyperboloidCoeffs,
    cfg: &LinearizerConfig,
) -> Result<Vec<Hyperplane>, GeomError> {
    let n_farms = coeffs.beta.len();
    cfg.validate(n_farms)?;
    // With no farm the SI axis is a phantom dimension whose coefficient is
    // dropped; this keeps the count at n·m and the directions identical to
    // the one-farm case.
    let dim = 1 + n_farms.max(1);
    let (dirs, delta) = angular_cells(dim, cfg.m_planes);
    if delta >= std::f64::consts::FRAC_PI_2 * 0.999 {
        return Err(GeomError::TooFewPlanes {
            m: cfg.m_planes,
            farms: n_farms,
            delta,
        });
    }
    let inflate = 1.0 / delta.cos();
    let lay = layers(coeffs, cfg)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut planes = Vec::with_capacity(cfg.n_layers * cfg.m_planes);
    for k in 1..lay.len() {
        let (l_in, r_in) = lay[k - 1];
        let (l_out, r_out) = lay[k];
        let slope = (l_out - l_in) / (r_out - r_in);
        let sigma = slope * inflate;
        for u in &dirs {
            // −x₁ + σ⟨u, z⟩ + (L_in − slope·r_in) ≤ 0
            let a = s * (-1.0 + sigma * u[0]);
            let b = s * (-1.0 - sigma * u[0]);
            let c: Vec<f64> = (0..n_farms)
                .map(|j| sigma * u[1 + j] * (2.0 * coeffs.beta[j]).sqrt())
                .collect();
            let d = l_in - slope * r_in;
            let norm = (a * a + b * b + c.iter().map(|x| x * x).sum::<f64>()).sqrt();
            planes.push(Hyperplane {
                a: a / norm,
                b: b / norm,
                c: c.iter().map(|x| x / norm).collect(),
                d: d / norm,
            });
        }
    }
    Ok(planes)
}

/// One point of the linearized feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqSample {
    pub h: f64,
    pub r: f64,
    pub hs: Vec<f64>,
}

/// Effective damping at a sample.
pub fn sample_d_eff(sys: &SystemParams, gammas: &[f64], hs: &[f64]) -> f64 {
    FrequencyInputs::effective_damping(sys, gammas, hs)
}

/// Companion linear requirements every schedule carries alongside the
/// planes: RoCoF and the quasi-steady-state deviation at the sample's D′.
pub fn companion_ok(sys: &SystemParams, gammas: &[f64], s: &FreqSample) -> bool {
    let d_eff = sample_d_eff(sys, gammas, &s.hs);
    d_eff > 0.0
        && 2.0 * s.h * sys.rocof_lim >= sys.delta_p
        && sys.delta_p - s.r <= sys.df_ss_lim * d_eff
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Rejection-samples up to `n` points of box ∩ planes ∩ companion rows.
pub fn sample_linearized_set(
    planes: &[Hyperplane],
    coeffs: &HyperboloidCoeffs,
    sys: &SystemParams,
    domain: &DomainBox,
    n: usize,
    seed: u64,
) -> (Vec<FreqSample>, usize) {
    let gammas = coeffs.gammas(sys);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let max_draws = n.saturating_mul(400).max(1000);
    let mut draws = 0;
    while out.len() < n && draws < max_draws {
        draws += 1;
        let s = FreqSample {
            h: uniform(&mut rng, domain.h),
            r: uniform(&mut rng, domain.r),
            hs: domain.hs.iter().map(|b| uniform(&mut rng, *b)).collect(),
        };
        if satisfies_all(planes, s.h, s.r, &s.hs) && companion_ok(sys, &gammas, &s) {
            out.push(s);
        }
    }
    (out, draws)
}

/// Smallest H admitted by the planes at fixed (R, H_s), clipped to the box;
/// None if the planes admit no H inside the box there.
pub fn boundary_h(planes: &[Hyperplane], domain: &DomainBox, r: f64, hs: &[f64]) -> Option<f64> {
    let (mut lo, mut hi) = domain.h;
    for p in planes {
        let rest = p.b * r + p.c.iter().zip(hs).map(|(c, x)| c * x).sum::<f64>() + p.d;
        if p.a < 0.0 {
            lo = lo.max(-rest / p.a);
        } else if p.a > 0.0 {
            hi = hi.min(-rest / p.a);
        } else if rest > plane_tol(p) {
            return None;
        }
    }
    (lo <= hi).then_some(lo)
}

/// Nadir slack Δf_lim − |peak deviation| at the plane boundary for each
/// (R, H_s) pair; None where the planes or companion rows exclude the pair.
pub fn boundary_gaps(
    planes: &[Hyperplane],
    coeffs: &HyperboloidCoeffs,
    sys: &SystemParams,
    domain: &DomainBox,
    points: &[(f64, Vec<f64>)],
) -> Vec<Option<f64>> {
    let gammas = coeffs.gammas(sys);
    points
        .iter()
        .map(|(r, hs)| {
            let h = boundary_h(planes, domain, *r, hs)?;
            let s = FreqSample {
                h,
                r: *r,
                hs: hs.clone(),
            };
            if !companion_ok(sys, &gammas, &s) {
                return None;
            }
            let inputs =
                FrequencyInputs::new(h, 0.0, *r, sample_d_eff(sys, &gammas, hs), sys).ok()?;
            let peak = peak_deviation(&inputs, sys).ok()?;
            Some(sys.df_lim - peak.abs())
        })
        .collect()
}

/// Uniform (R, H_s) draws for gap evaluation.
pub fn gap_points(domain: &DomainBox, n: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = uniform(&mut rng, domain.r);
            let hs = domain.hs.iter().map(|b| uniform(&mut rng, *b)).collect();
            (r, hs)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub n_samples: usize,
    pub seed: u64,
    pub accepted: usize,
    pub draws: usize,
    /// Samples violating HR ≥ α + Σβ_j H_sj².
    pub eq29_violations: usize,
    /// Samples whose closed-form peak deviation exceeds Δf_lim.
    pub nadir_violations: usize,
    /// Samples where D′ ≤ 0 (outside the model's validity).
    pub damping_violations: usize,
    /// Mean Δf_lim − |nadir| at plane-boundary points [Hz].
    pub mean_gap_hz: f64,
    pub boundary_points: usize,
    pub worst_nadir_hz: f64,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.accepted > 0
            && self.eq29_violations == 0
            && self.nadir_violations == 0
            && self.damping_violations == 0
    }
}

/// Monte-Carlo check that the planes are an inner approximation: every
/// sample they admit satisfies the nonlinear HR requirement and the
/// closed-form nadir limit.
pub fn certify_planes(
    planes: &[Hyperplane],
    coeffs: &HyperboloidCoeffs,
    sys: &SystemParams,
    cfg: &LinearizerConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Certification, GeomError> {
    if planes.is_empty() {
        return Err(GeomError::EmptyPlaneSet);
    }
    let gammas = coeffs.gammas(sys);
    let (samples, draws) = sample_linearized_set(planes, coeffs, sys, &cfg.domain, n_samples, seed);
    let mut cert = Certification {
        n_samples,
        seed,
        accepted: samples.len(),
        draws,
        eq29_violations: 0,
        nadir_violations: 0,
        damping_violations: 0,
        mean_gap_hz: f64::NAN,
        boundary_points: 0,
        worst_nadir_hz: 0.0,
    };
    for s in &samples {
        let scale = (s.h * s.r).max(coeffs.alpha);
        if coeffs.margin(s.h, s.r, &s.hs) < -1e-12 * scale {
            cert.eq29_violations += 1;
        }
        let d_eff = sample_d_eff(sys, &gammas, &s.hs);
        match FrequencyInputs::new(s.h, 0.0, s.r, d_eff, sys).and_then(|i| peak_deviation(&i, sys))
        {
            Ok(peak) => {
                cert.worst_nadir_hz = cert.worst_nadir_hz.max(peak.abs());
                if peak.abs() > sys.df_lim + 1e-9 {
                    cert.nadir_violations += 1;
                }
            }
            Err(_) => cert.damping_violations += 1,
        }
    }
    let points = gap_points(&cfg.domain, n_samples, seed ^ 0x9e37_79b9_7f4a_7c15);
    let gaps: Vec<f64> = boundary_gaps(planes, coeffs, sys, &cfg.domain, &points)
        .into_iter()
        .flatten()
        .collect();
    cert.boundary_points = gaps.len();
    if !gaps.is_empty() {
        cert.mean_gap_hz = gaps.iter().sum::<f64>() / gaps.len() as f64;
    }
    Ok(cert)
}

/// A generated, certified plane set ready for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSet {
    pub config: LinearizerConfig,
    pub coeffs: HyperboloidCoeffs,
    pub system: SystemParams,
    pub planes: Vec<Hyperplane>,
    pub certification: Certification,
    pub digest: String,
}

#[derive(Serialize)]
struct DigestView<'a> {
    config: &'a LinearizerConfig,
    coeffs: &'a HyperboloidCoeffs,
    system: &'a SystemParams,
    planes: &'a [Hyperplane],
    certification: &'a Certification,
}

impl PlaneSet {
    /// Generate and certify; fails if certification finds any violation.
    pub fn build(
        sys: &SystemParams,
        gammas: &[f64],
        cfg: LinearizerConfig,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, GeomError> {
        let coeffs = to_standard_form(sys, gammas)?;
        let planes = generate_planes(&coeffs, &cfg)?;
        let certification = certify_planes(&planes, &coeffs, sys, &cfg, n_samples, seed)?;
        let mut set = PlaneSet {
            config: cfg,
            coeffs,
            system: *sys,
            planes,
            certification,
            digest: String::new(),
        };
        if !set.certification.passed() {
            return Err(GeomError::NotCertified(format!("{:?}", set.certification)));
        }
        set.digest = set.compute_digest();
        Ok(set)
    }

    fn compute_digest(&self) -> String {
        let view = DigestView {
            config: &self.config,
            coeffs: &self.coeffs,
            system: &self.system,
            planes: &self.planes,
            certification: &self.certification,
        };
        crate::sha256_hex(
            serde_json::to_string(&view)
                .expect("serialisable")
                .as_bytes(),
        )
    }

    /// Checks the stored certification and digest.
    pub fn verify(&self) -> Result<(), GeomError> {
        if !self.certification.passed() {
            return Err(GeomError::NotCertified(
                "stored certification failed".into(),
            ));
        }
        if self.digest != self.compute_digest() {
            return Err(GeomError::DigestMismatch);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, GeomError> {
        self.verify()?;
        serde_json::to_string_pretty(self).map_err(|e| GeomError::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, GeomError> {
        let set: PlaneSet =
            serde_json::from_str(text).map_err(|e| GeomError::Json(e.to_string()))?;
        set.verify()?;
        Ok(set)
    }
}
