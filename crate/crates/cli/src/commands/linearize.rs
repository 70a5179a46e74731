//! Nadir plane generation and Monte-Carlo certification.

use std::path::Path;

use serde::{Deserialize, Serialize};
use siuc_core::nadir_geom::{Certification, DomainBox, GeomError, LinearizerConfig, PlaneSet};
use siuc_core::SystemParams;

use crate::config::{check_system, gb, parse, FarmConfig};
use crate::error::{schema, CliError};
use crate::output::{Meta, OutDir};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearizeConfig {
    #[serde(default = "gb")]
    system: SystemParams,
    /// Underproduction coefficients, one per farm; or give `farms`.
    #[serde(default)]
    gammas: Option<Vec<f64>>,
    #[serde(default)]
    farms: Option<Vec<FarmConfig>>,
    domain: DomainBox,
    n_layers: usize,
    m_planes: usize,
    #[serde(default)]
    layer_ratio: Option<f64>,
    #[serde(default = "samples")]
    n_samples: usize,
    #[serde(default)]
    seed: u64,
}

fn samples() -> usize {
    10_000
}

#[derive(Serialize)]
struct Report<'a> {
    n_planes: usize,
    gammas: Vec<f64>,
    certification: &'a Certification,
    plane_set_digest: &'a str,
}

pub fn run(bytes: &[u8], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let cfg: LinearizeConfig = parse(bytes)?;
    check_system(&cfg.system)?;
    let gammas = match (&cfg.gammas, &cfg.farms) {
        (Some(g), None) => g.clone(),
        (None, Some(f)) => f
            .iter()
            .map(|f| f.build(&cfg.system).map(|m| m.gamma_j))
            .collect::<Result<_, _>>()?,
        _ => return Err(schema("give exactly one of `gammas` or `farms`")),
    };
    let seed = seed.unwrap_or(cfg.seed);
    let mut lin = LinearizerConfig::new(cfg.n_layers, cfg.m_planes, cfg.domain);
    if let Some(r) = cfg.layer_ratio {
        lin.layer_ratio = r;
    }
    let set =
        PlaneSet::build(&cfg.system, &gammas, lin, cfg.n_samples, seed).map_err(|e| match &e {
            GeomError::BadConfig(_) | GeomError::TooFewPlanes { .. } => schema(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        })?;
    let mut dir = OutDir::create(out, Meta::new("linearize", bytes, seed))?;
    dir.json("planes.json", &set)?;
    dir.json(
        "certification.json",
        &Report {
            n_planes: set.planes.len(),
            gammas,
            certification: &set.certification,
            plane_set_digest: &set.digest,
        },
    )?;
    let c = &set.certification;
    Ok(format!(
        "{} planes certified on {} samples, mean gap {:.4} Hz",
        set.planes.len(),
        c.accepted,
        c.mean_gap_hz
    ))
}
