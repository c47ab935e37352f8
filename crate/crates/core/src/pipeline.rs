//! Batch runs: executes the configured tasks, checks their assertions and
//! writes the summary and field files.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::error::{PerifluxError, Result};
use crate::fields::{DivFreeSpace, VectorField};
use crate::geometry::{build_grid, GeometryKind, MappedGrid};
use crate::harmonic::{
    axial_variation, momentum_residual, solve_periodic_stokes, verify_estimates, EstimateReport, FluxSignal,
    HarmonicSolution, Method,
};
use crate::io::{field_to_csv, series_to_csv, write_atomic, RunConfig, Task};
use crate::modes::{assemble_mode, mode_estimate_check};
use crate::nonlinear::{solve_ns, NsReport};
use crate::oracles::{
    compare_series, contraction_factor, max_swirl, require_straight, swirl_decay_check, timestep_periodic,
    womersley_radial, DiffReport, Drive, SwirlReport,
};
use crate::spectrum::SpectralBasis;

/// Bound on the axial variation of solutions in straight pipes.
pub const Z_VARIANCE_TOL: f64 = 1e-9;
/// Bound on swirl coefficients of computed solutions.
pub const SWIRL_TOL: f64 = 1e-12;
/// Relative bound on the measured period-map contraction.
pub const CONTRACTION_TOL: f64 = 0.3;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub task: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub kind: GeometryKind,
    pub nxi: usize,
    pub nzeta: usize,
    pub straight: bool,
    pub raw_measure: f64,
    pub min_jacobian: f64,
    pub reduced_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub c0: f64,
    pub c1: f64,
    pub pez_norm: f64,
    /// `None` until eigenpairs are computed.
    pub bar_e_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigSummary {
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub gram_defect: f64,
    pub bar_e_norm_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub k: usize,
    pub residual: f64,
    pub flux_error_a: f64,
    pub flux_error_b: f64,
    pub physical_residual: Option<f64>,
    pub estimate_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StokesSummary {
    pub method: Method,
    pub harmonics: usize,
    pub c_tilde: f64,
    pub psi0: f64,
    pub flux_error: f64,
    /// Momentum residual of the mean and of each harmonic.
    pub momentum_residuals: Vec<f64>,
    pub z_variance: Option<f64>,
    pub max_swirl: Option<f64>,
    pub modes: Vec<ModeRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    /// `radial` for straight pipes, `stepper` otherwise.
    pub oracle: &'static str,
    pub diff: DiffReport,
    pub periods_run: Option<usize>,
    pub contraction: Option<f64>,
    pub contraction_expected: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwirlSummary {
    pub steps: usize,
    pub monotone: bool,
    pub midpoint_defect: f64,
    pub trapezoid_defect: f64,
    pub final_ratio: f64,
}

impl From<&SwirlReport> for SwirlSummary {
    fn from(r: &SwirlReport) -> Self {
        SwirlSummary {
            steps: r.steps,
            monotone: r.monotone,
            midpoint_defect: r.midpoint_defect,
            trapezoid_defect: r.trapezoid_defect,
            final_ratio: r.final_ratio,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub tasks: Vec<Task>,
    pub grid: GridSummary,
    pub flux: FluxSignal,
    pub constants: Constants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eig: Option<EigSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stokes: Option<StokesSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<NsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swirl: Option<SwirlSummary>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub passed: bool,
}

impl Summary {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: Option<PathBuf>,
    grid: MappedGrid,
    space: DivFreeSpace,
    flux: FluxSignal,
    basis: SpectralBasis,
    has_eig: bool,
    stokes: Option<HarmonicSolution>,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn check(&mut self, task: Task, name: &str, value: f64, bound: f64) {
        let passed = value <= bound;
        if !passed {
            log::warn!("{}: {name} = {value:.3e} exceeds {bound:.3e}", task.name());
        }
        self.checks.push(Check {
            task: task.name(),
            name: name.into(),
            value,
            bound,
            passed,
        });
    }

    fn flag(&mut self, task: Task, name: &str, ok: bool) {
        self.check(task, name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    fn write(&mut self, name: String, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            write_atomic(&dir.join(&name), contents.as_bytes())?;
            self.artifacts.push(name);
        }
        Ok(())
    }

    fn write_field(&mut self, name: String, v: &VectorField) -> Result<()> {
        if self.out.is_some() {
            let text = field_to_csv(&self.grid, v)?;
            self.write(name, &text)?;
        }
        Ok(())
    }

    fn snapshot_times(&self) -> Vec<f64> {
        let n = self.cfg.solver.snapshots;
        (0..n).map(|i| self.flux.period * i as f64 / n as f64).collect()
    }

    fn series_samples(&self) -> usize {
        (8 * self.flux.harmonics()).max(64)
    }

    fn write_solution(&mut self, prefix: &str, sol: &HarmonicSolution) -> Result<()> {
        if self.out.is_none() {
            return Ok(());
        }
        for (i, t) in self.snapshot_times().into_iter().enumerate() {
            let v = sol.evaluate(&self.space, t);
            self.write_field(format!("{prefix}_t{i:03}.csv"), &v)?;
        }
        let n = self.series_samples();
        let ts: Vec<f64> = (0..n).map(|i| sol.period * i as f64 / n as f64).collect();
        let g: Vec<f64> = ts.iter().map(|t| self.flux.eval(*t)).collect();
        let psi: Vec<f64> = ts.iter().map(|t| sol.psi(*t)).collect();
        self.write(format!("{prefix}_psi.csv"), &series_to_csv(&ts, &g, &psi))
    }

    fn eig(&mut self) -> Result<EigSummary> {
        let s = &self.cfg.solver;
        log::info!("eig: {} eigenpairs", s.m);
        self.basis = SpectralBasis::compute(&self.space, s.m, s.eig_tol)?;
        self.has_eig = true;
        let b = &self.basis;
        let out = EigSummary {
            m: b.m,
            eigenvalues: b.eigenvalues.clone(),
            residuals: b.residuals.clone(),
            c_hat: b.c_hat.clone(),
            gram_defect: b.orthonormality_defect(&self.space),
            bar_e_norm_sq: b.bar_e_norm_sq,
        };
        let worst = out.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        self.check(Task::Eig, "max eigen-residual", worst, s.eig_tol);
        self.check(Task::Eig, "gram defect", out.gram_defect, 1e-10);
        self.flag(Task::Eig, "bar_e_norm < 1", out.bar_e_norm_sq < 1.0);
        if self.out.is_some() {
            for j in 0..self.basis.m {
                let v = self.basis.eigenfield(&self.space, j);
                self.write_field(format!("eigenfield_{j:03}.csv"), &v)?;
            }
        }
        Ok(out)
    }

    fn stokes(&mut self) -> Result<StokesSummary> {
        let s = &self.cfg.solver;
        let nu = self.cfg.physics.nu;
        log::info!("stokes: {} harmonics, {:?}", self.flux.harmonics(), s.method);
        let sol = solve_periodic_stokes(&self.space, &self.basis, &self.flux, nu, s.method)?;
        let flux_error = sol.max_flux_error(&self.space, &self.flux, self.series_samples())?;
        let momentum_residuals = (0..=sol.harmonics.len())
            .map(|k| momentum_residual(&self.space, &sol, k))
            .collect::<Result<Vec<_>>>()?;
        let z_variance = if self.grid.profile.is_straight() {
            let mut worst: f64 = 0.0;
            for t in self.snapshot_times() {
                let v = sol.evaluate(&self.space, t);
                worst = worst.max(axial_variation(&self.grid, &v)?);
            }
            Some(worst)
        } else {
            None
        };
        let swirl = self.grid.kind.has_swirl().then(|| max_swirl(&self.space, &sol));
        let mut modes = Vec::new();
        for h in &sol.harmonics {
            if let Some(m) = &h.mode {
                let sys = assemble_mode(&self.basis, h.k, nu, sol.period, sol.kappa, h.p, h.q)?;
                modes.push(ModeRow {
                    k: h.k,
                    residual: m.residual,
                    flux_error_a: m.flux_error_a,
                    flux_error_b: m.flux_error_b,
                    physical_residual: m.physical_residual,
                    estimate_ratio: mode_estimate_check(m, &sys),
                });
            }
        }
        let (flux_tol, residual_tol) = (s.flux_tol, s.residual_tol);
        self.check(Task::Stokes, "flux error", flux_error, flux_tol);
        let worst = momentum_residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        if s.method == Method::Resolvent {
            self.check(Task::Stokes, "momentum residual", worst, residual_tol);
        }
        if let Some(z) = z_variance {
            self.check(Task::Stokes, "z-variance", z, Z_VARIANCE_TOL);
        }
        if let Some(w) = swirl {
            self.check(Task::Stokes, "max swirl", w, SWIRL_TOL);
        }
        self.write_solution("stokes", &sol)?;
        let out = StokesSummary {
            method: sol.method,
            harmonics: sol.harmonics.len(),
            c_tilde: sol.c_tilde,
            psi0: sol.psi0,
            flux_error,
            momentum_residuals,
            z_variance,
            max_swirl: swirl,
            modes,
        };
        self.stokes = Some(sol);
        Ok(out)
    }

    fn ns(&mut self) -> Result<NsReport> {
        let s = &self.cfg.solver;
        log::info!("ns: Picard to {:.1e}", s.picard_tol);
        let (sol, rep) = solve_ns(&self.space, &self.basis, &self.flux, self.cfg.physics.nu, s.picard_tol, s.maxit)?;
        self.check(Task::Ns, "contraction ratio", rep.q_bar, 1.0);
        self.check(Task::Ns, "fixed-point residual", rep.fixed_point_residual, s.picard_tol.max(1e-8));
        self.check(Task::Ns, "momentum residual", rep.momentum_residual, 1e-6);
        let err = sol.max_flux_error(&self.space, &self.flux, self.series_samples())?;
        self.check(Task::Ns, "flux error", err, s.flux_tol);
        self.write_solution("ns", &sol)?;
        Ok(rep)
    }

    fn oracle(&mut self) -> Result<OracleSummary> {
        let sol = self.stokes.clone().ok_or_else(|| PerifluxError::invalid("tasks", "oracle-compare needs a Stokes solution"))?;
        let s = self.cfg.solver.clone();
        let nu = self.cfg.physics.nu;
        if require_straight(&self.grid).is_ok() {
            log::info!("oracle-compare: radial oracle, {} nodes", s.oracle_nr);
            let o = womersley_radial(self.grid.kind, self.grid.profile.r0, nu, &self.flux, s.oracle_nr)?;
            let times = self.snapshot_times();
            let a: Vec<VectorField> = times.iter().map(|t| sol.evaluate(&self.space, *t)).collect();
            let b = times.iter().map(|t| o.field(&self.grid, *t)).collect::<Result<Vec<_>>>()?;
            let diff = compare_series(&self.grid, &a, &b)?;
            self.check(Task::OracleCompare, "radial rel L2", diff.rel_l2, s.oracle_tol);
            for (i, v) in b.iter().enumerate() {
                self.write_field(format!("oracle_t{i:03}.csv"), v)?;
            }
            return Ok(OracleSummary {
                oracle: "radial",
                diff,
                periods_run: None,
                contraction: None,
                contraction_expected: None,
            });
        }
        let k = self.flux.harmonics().max(1);
        let dt = self.flux.period / (s.steps_per_harmonic * k) as f64;
        log::info!("oracle-compare: stepping with dt = {dt:.3e}");
        let orbit = timestep_periodic(&self.space, Drive::Flux(&self.flux), nu, dt, s.max_periods, s.period_tol, None)?;
        let steps = orbit.steps_per_period;
        let stride = (steps / 64).max(1);
        let idx: Vec<usize> = (0..steps).step_by(stride).collect();
        let a: Vec<VectorField> = idx.iter().map(|i| sol.evaluate(&self.space, orbit.dt * *i as f64)).collect();
        let b: Vec<VectorField> = idx.iter().map(|i| self.space.field(&orbit.states[*i])).collect();
        let diff = compare_series(&self.grid, &a, &b)?;
        self.check(Task::OracleCompare, "stepper rel L2", diff.rel_l2, s.stepper_tol);
        let q = contraction_factor(&self.space, nu, self.flux.period, dt, 8, s.seed)?;
        let expected = self
            .has_eig
            .then(|| (-nu * self.basis.eigenvalues[0] * self.flux.period).exp());
        if let Some(e) = expected {
            self.check(Task::OracleCompare, "contraction vs exp(-nu lambda1 T)", (q / e - 1.0).abs(), CONTRACTION_TOL);
        }
        for (n, t) in self.snapshot_times().into_iter().enumerate() {
            let i = ((t / orbit.dt).round() as usize).min(steps);
            let v = self.space.field(&orbit.states[i]);
            self.write_field(format!("oracle_t{n:03}.csv"), &v)?;
        }
        Ok(OracleSummary {
            oracle: "stepper",
            diff,
            periods_run: Some(orbit.periods_run),
            contraction: Some(q),
            contraction_expected: expected,
        })
    }

    fn estimates(&mut self) -> Result<EstimateReport> {
        let sol = self.stokes.as_ref().ok_or_else(|| PerifluxError::invalid("tasks", "estimates need a Stokes solution"))?;
        let r = verify_estimates(&self.space, sol, &self.flux, self.series_samples());
        let finite = [r.r1, r.r1_stokes, r.r2, r.r3, r.r3_sup].iter().all(|v| v.is_finite());
        self.flag(Task::Estimates, "ratios finite", finite);
        if self.out.is_some() {
            let text = serde_json::to_string_pretty(&r).expect("report serializes") + "\n";
            self.write("estimates.json".into(), &text)?;
        }
        Ok(r)
    }

    fn swirl(&mut self) -> Result<SwirlSummary> {
        let s = &self.cfg.solver;
        let init = VectorField::random(&self.grid, s.seed);
        let r = swirl_decay_check(&self.space, &init, self.cfg.physics.nu, s.swirl_dt, s.swirl_steps)?;
        self.flag(Task::SwirlCheck, "energy monotone", r.monotone);
        self.check(Task::SwirlCheck, "midpoint energy defect", r.midpoint_defect, 1e-10);
        if let Some(sol) = &self.stokes {
            let w = max_swirl(&self.space, sol);
            self.check(Task::SwirlCheck, "solution swirl", w, SWIRL_TOL);
        }
        Ok(SwirlSummary::from(&r))
    }
}

/// Runs every task of `cfg`. Relative table paths resolve against `base`;
/// files go to `out` when given, nothing is written otherwise.
pub fn run(cfg: &RunConfig, base: &Path, out: Option<&Path>) -> Result<Summary> {
    cfg.validate()?;
    let profile = cfg.profile(base)?;
    let flux = cfg.flux(base)?;
    let g = &cfg.geometry;
    let grid = build_grid(&profile, g.kind, g.nxi, g.nzeta).map_err(|e| PerifluxError::Config {
        key: "geometry".into(),
        reason: e.to_string(),
    })?;
    let space = DivFreeSpace::new(&grid)?;
    let basis = SpectralBasis::constants_only(&space, cfg.solver.eig_tol)?;
    let tasks = cfg.ordered_tasks();
    let grid_summary = GridSummary {
        kind: grid.kind,
        nxi: grid.nxi,
        nzeta: grid.nzeta,
        straight: grid.profile.is_straight(),
        raw_measure: grid.raw_measure(),
        min_jacobian: grid.min_jacobian(),
        reduced_dim: space.dim(),
    };
    let mut run = Run {
        cfg,
        out: out.map(Path::to_path_buf),
        grid,
        space,
        flux: flux.clone(),
        basis,
        has_eig: false,
        stokes: None,
        checks: Vec::new(),
        artifacts: Vec::new(),
    };
    let (mut eig, mut stokes, mut ns, mut oracle, mut estimates, mut swirl) = (None, None, None, None, None, None);
    for t in &tasks {
        match t {
            Task::Eig => eig = Some(run.eig()?),
            Task::Stokes => stokes = Some(run.stokes()?),
            Task::Ns => ns = Some(run.ns()?),
            Task::OracleCompare => oracle = Some(run.oracle()?),
            Task::Estimates => estimates = Some(run.estimates()?),
            Task::SwirlCheck => swirl = Some(run.swirl()?),
        }
    }
    let b = &run.basis;
    let constants = Constants {
        c0: b.c0sq.sqrt(),
        c1: b.c1sq.sqrt(),
        pez_norm: b.pez_norm,
        bar_e_norm: run.has_eig.then(|| b.bar_e_norm_sq.sqrt()),
    };
    let mut summary = Summary {
        config: cfg.clone(),
        tasks,
        grid: grid_summary,
        flux,
        constants,
        eig,
        stokes,
        ns,
        oracle,
        estimates,
        swirl,
        passed: run.checks.iter().all(|c| c.passed),
        checks: run.checks,
        artifacts: run.artifacts,
    };
    if let Some(dir) = out {
        summary.artifacts.push("summary.json".into());
        write_atomic(&dir.join("summary.json"), summary.to_json().as_bytes())?;
    }
    Ok(summary)
}
