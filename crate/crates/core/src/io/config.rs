//! Run configuration: one JSON document, unknown keys rejected.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{PerifluxError, Result};
use crate::geometry::{make_profile, GeometryKind, PipeProfile, ProfileKind};
use crate::harmonic::{FluxSignal, Method};

use super::tables::{flux_from_table, parse_flux_table, parse_profile_samples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub tasks: Vec<Task>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("periflux-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub profile: ProfileConfig,
    pub kind: GeometryKind,
    pub nxi: usize,
    pub nzeta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(rename = "L")]
    pub length: f64,
    /// Inline `[z, r]` pairs for tabulated walls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
    /// Two-column `z, r` file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nu: f64,
    #[serde(rename = "T")]
    pub period: f64,
    pub flux: FluxConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FluxConfig {
    /// `g(t) = g0`.
    Constant { g0: f64 },
    /// `g(t) = mean + amplitude cos(2 pi k t / T)`.
    Cosine {
        amplitude: f64,
        #[serde(default)]
        mean: f64,
        #[serde(default = "first")]
        k: usize,
    },
    /// Uniform samples `[t, g]` over one period, inline or from a file.
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
    },
}

fn first() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Eig,
    Stokes,
    Ns,
    OracleCompare,
    Estimates,
    SwirlCheck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eig => "eig",
            Task::Stokes => "stokes",
            Task::Ns => "ns",
            Task::OracleCompare => "oracle-compare",
            Task::Estimates => "estimates",
            Task::SwirlCheck => "swirl-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Number of Stokes eigenpairs.
    pub m: usize,
    /// Harmonic count override for tabulated flux.
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub method: Method,
    pub eig_tol: f64,
    pub picard_tol: f64,
    pub maxit: usize,
    pub seed: u64,
    /// Flux error bound relative to `max |g|`.
    pub flux_tol: f64,
    /// Momentum residual bound for the Stokes solve.
    pub residual_tol: f64,
    /// Relative L2 bound for the oracle comparison.
    pub oracle_tol: f64,
    /// Relative L2 bound for the time-stepping comparison on wavy pipes.
    pub stepper_tol: f64,
    /// Radial nodes of the straight-pipe oracle.
    pub oracle_nr: usize,
    /// Time steps per period of the stepping oracle (per harmonic).
    pub steps_per_harmonic: usize,
    pub max_periods: usize,
    pub period_tol: f64,
    /// Time samples per period in reports and snapshots.
    pub snapshots: usize,
    pub swirl_dt: f64,
    pub swirl_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m: 64,
            k: None,
            method: Method::Resolvent,
            eig_tol: 1e-8,
            picard_tol: 1e-10,
            maxit: 50,
            seed: 0,
            flux_tol: 1e-8,
            residual_tol: 1e-8,
            oracle_tol: 1e-3,
            stepper_tol: 1e-2,
            oracle_nr: 1024,
            steps_per_harmonic: 256,
            max_periods: 400,
            period_tol: 1e-10,
            snapshots: 8,
            swirl_dt: 1e-3,
            swirl_steps: 200,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> PerifluxError {
    PerifluxError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Parses a config document; the error names the offending key path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(if path.is_empty() || path == "?" { "." } else { &path }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| bad("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let p = &g.profile;
        positive("geometry.profile.L", p.length)?;
        positive("geometry.profile.r0", p.r0)?;
        if !(0.0..=0.5).contains(&p.eps) {
            return Err(bad("geometry.profile.eps", "must lie in [0, 0.5]"));
        }
        if p.kind == ProfileKind::Tabulated && (p.samples.is_some() == p.samples_file.is_some()) {
            return Err(bad("geometry.profile.samples", "tabulated profiles need exactly one of samples, samples_file"));
        }
        if p.kind != ProfileKind::Tabulated && (p.samples.is_some() || p.samples_file.is_some()) {
            return Err(bad("geometry.profile.samples", "only tabulated profiles take samples"));
        }
        for (key, n) in [("geometry.nxi", g.nxi), ("geometry.nzeta", g.nzeta)] {
            if n < 8 || n % 2 != 0 {
                return Err(bad(key, format!("grid size must be even and at least 8, got {n}")));
            }
        }
        positive("physics.nu", self.physics.nu)?;
        positive("physics.T", self.physics.period)?;
        match &self.physics.flux {
            FluxConfig::Constant { g0 } if !g0.is_finite() => return Err(bad("physics.flux.g0", "must be finite")),
            FluxConfig::Cosine { amplitude, mean, k } => {
                if !(amplitude.is_finite() && mean.is_finite()) {
                    return Err(bad("physics.flux.amplitude", "must be finite"));
                }
                if *k == 0 {
                    return Err(bad("physics.flux.k", "harmonic index must be at least 1"));
                }
            }
            FluxConfig::Table { samples, file } if samples.is_some() == file.is_some() => {
                return Err(bad("physics.flux", "a table needs exactly one of samples, file"));
            }
            _ => {}
        }
        let s = &self.solver;
        for (key, v) in [
            ("solver.eig_tol", s.eig_tol),
            ("solver.picard_tol", s.picard_tol),
            ("solver.flux_tol", s.flux_tol),
            ("solver.residual_tol", s.residual_tol),
            ("solver.oracle_tol", s.oracle_tol),
            ("solver.stepper_tol", s.stepper_tol),
            ("solver.period_tol", s.period_tol),
            ("solver.swirl_dt", s.swirl_dt),
        ] {
            positive(key, v)?;
        }
        for (key, v, min) in [
            ("solver.m", s.m, 1),
            ("solver.maxit", s.maxit, 1),
            ("solver.oracle_nr", s.oracle_nr, crate::oracles::MIN_RADIAL_NODES),
            ("solver.steps_per_harmonic", s.steps_per_harmonic, 64),
            ("solver.max_periods", s.max_periods, 1),
            ("solver.snapshots", s.snapshots, 1),
            ("solver.swirl_steps", s.swirl_steps, 1),
        ] {
            if v < min {
                return Err(bad(key, format!("must be at least {min}, got {v}")));
            }
        }
        if s.k == Some(0) {
            return Err(bad("solver.K", "must be at least 1"));
        }
        if self.tasks.is_empty() {
            return Err(bad("tasks", "at least one task is required"));
        }
        if self.tasks.contains(&Task::SwirlCheck) && g.kind != GeometryKind::Axisym {
            return Err(bad("tasks", "swirl-check needs an AXISYM geometry"));
        }
        Ok(())
    }

    /// Tasks deduplicated and in dependency order, with the Stokes solve
    /// (and the eigenbasis for the Galerkin method) added where needed.
    pub fn ordered_tasks(&self) -> Vec<Task> {
        let mut t = self.tasks.clone();
        if t.iter().any(|x| matches!(x, Task::OracleCompare | Task::Estimates)) {
            t.push(Task::Stokes);
        }
        if t.contains(&Task::Stokes) && self.solver.method == Method::Galerkin {
            t.push(Task::Eig);
        }
        t.sort();
        t.dedup();
        t
    }

    /// Wall profile; relative sample files resolve against `base`.
    pub fn profile(&self, base: &Path) -> Result<PipeProfile> {
        let p = &self.geometry.profile;
        let samples = match (&p.samples, &p.samples_file) {
            (Some(s), _) => Some(s.iter().map(|v| (v[0], v[1])).collect()),
            (None, Some(f)) => {
                let path = base.join(f);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| bad("geometry.profile.samples_file", format!("{}: {e}", path.display())))?;
                Some(parse_profile_samples(&text).map_err(|e| bad("geometry.profile.samples_file", e.to_string()))?)
            }
            (None, None) => None,
        };
        make_profile(p.kind, p.r0, p.eps, p.length, samples).map_err(|e| bad("geometry.profile", e.to_string()))
    }

    pub fn flux(&self, base: &Path) -> Result<FluxSignal> {
        let t = self.physics.period;
        let sig = match &self.physics.flux {
            FluxConfig::Constant { g0 } => FluxSignal::constant(t, *g0),
            FluxConfig::Cosine { amplitude, mean, k } => {
                let mut p = vec![0.0; *k];
                p[k - 1] = *amplitude;
                FluxSignal::new(t, *mean, p, vec![0.0; *k])
            }
            FluxConfig::Table { samples, file } => {
                let pairs = match (samples, file) {
                    (Some(s), _) => s.iter().map(|v| (v[0], v[1])).collect(),
                    (None, Some(f)) => {
                        let path = base.join(f);
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| bad("physics.flux.file", format!("{}: {e}", path.display())))?;
                        parse_flux_table(&text).map_err(|e| bad("physics.flux.file", e.to_string()))?
                    }
                    (None, None) => Vec::new(),
                };
                flux_from_table(&pairs, t, self.solver.k)
            }
        };
        sig.map_err(|e| bad("physics.flux", e.to_string()))
    }
}
