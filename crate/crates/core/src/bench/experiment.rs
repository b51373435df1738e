use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::problem::{outward_normal, relative_l2_error, Example, ProblemSpec};
use crate::adaptive::{theta_default, Scaling};
use crate::bddc::{build_bddc, solve_full, Bddc, BddcOptions, SolveStats};
use crate::error::{Error, Result, StageExt};
use crate::linalg::CVec;
use crate::mesh::{build_mesh, CoarsePartition, RectMesh};
use crate::pwls::{assemble_rhs, PlaneWaveSpace};
use crate::schur::Substructure;

/// One run: problem, discretization, partition and solver settings.
/// Every field has a default so a JSON file may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: Example,
    pub omega_over_pi: f64,
    pub p: usize,
    /// Subdomains per direction.
    pub nd: usize,
    /// Complete elements per subdomain side.
    pub n_side: usize,
    pub scaling: Scaling,
    /// Overrides `1 + ln(min n_x)`.
    pub theta: Option<f64>,
    pub levels: usize,
    pub tol: f64,
    pub inner_tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub matrix_market: Option<PathBuf>,
    pub partition: Option<PathBuf>,
    pub face_csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            example: Example::Constant,
            omega_over_pi: 20.0,
            p: 13,
            nd: 4,
            n_side: 8,
            scaling: Scaling::Multiplicity,
            theta: None,
            levels: 2,
            tol: 1e-5,
            inner_tol: 1e-2,
            maxit: 100,
            seed: 0,
            out: None,
            matrix_market: None,
            partition: None,
            face_csv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn omega(&self) -> f64 {
        self.omega_over_pi * PI
    }

    /// Elements per direction.
    pub fn elements_per_axis(&self) -> usize {
        crate::mesh::elements_per_axis(self.nd, self.n_side)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.omega_over_pi > 0.0 && self.omega_over_pi.is_finite()) {
            return bad(format!("omega/pi must be positive, got {}", self.omega_over_pi));
        }
        if let Some(t) = self.theta {
            if !(t >= 1.0 && t.is_finite()) {
                return bad(format!("theta must be at least 1, got {t}"));
            }
        }
        if self.levels < 2 {
            return bad(format!("levels must be at least 2, got {}", self.levels));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) || !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return bad("tolerances must lie in (0, 1)".into());
        }
        if self.maxit == 0 {
            return bad("maxit must be positive".into());
        }
        Ok(())
    }
}

/// Per-run record, serialized with the keys of the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub example: Example,
    pub omega: f64,
    pub p: usize,
    /// Total element count.
    pub nh: usize,
    /// Total subdomain count.
    pub nd: usize,
    pub n_side: usize,
    pub scaling: Scaling,
    pub theta: f64,
    /// Face primal constraints.
    pub pnum: usize,
    /// Coarse dimension including the vertex blocks.
    pub coarse_dim: usize,
    pub n_faces: usize,
    pub ppnum: f64,
    pub avg_per_interface: f64,
    pub iter: usize,
    pub converged: bool,
    pub residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rel_l2_error: Option<f64>,
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coarsest_dofs: Option<usize>,
    pub wall_time_s: f64,
}

impl Report {
    /// Same numbers, ignoring the timing.
    pub fn same_numbers(&self, other: &Report) -> bool {
        let mut a = self.clone();
        a.wall_time_s = other.wall_time_s;
        a == *other
    }
}

/// Mesh, partition, space and substructuring data of a configuration.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: ProblemSpec,
    pub mesh: RectMesh,
    pub part: CoarsePartition,
    pub space: PlaneWaveSpace,
    pub sub: Substructure,
    pub rhs: CVec,
    pub theta: f64,
}

pub struct Outcome {
    pub report: Report,
    pub solution: CVec,
    pub stats: SolveStats,
    pub bddc: Bddc,
}

impl Experiment {
    pub fn setup(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = ProblemSpec::new(config.example, config.omega(), config.seed).stage("problem")?;
        let (mesh, part) = build_mesh(problem.domain, config.nd, config.nd, config.n_side).stage("mesh")?;
        let space = problem.space(&mesh, config.p).stage("space")?;
        let domain = problem.domain;
        let rhs = assemble_rhs(&mesh, &space, &|x| problem.boundary_data(x, outward_normal(&domain, x)));
        let sub = Substructure::from_mesh(&mesh, &part, &space).stage("substructuring")?;
        let theta = config.theta.unwrap_or_else(|| theta_default(&part));
        Ok(Self {
            config: config.clone(),
            problem,
            mesh,
            part,
            space,
            sub,
            rhs,
            theta,
        })
    }

    pub fn options(&self) -> BddcOptions {
        BddcOptions {
            scaling: self.config.scaling,
            theta: self.theta,
            levels: self.config.levels,
            inner_tol: self.config.inner_tol,
            inner_maxit: self.config.maxit,
            seed: self.config.seed,
        }
    }

    /// Builds the preconditioner, solves, and fills the report. A capped
    /// PCG run is not an error here; see `Report::converged`.
    pub fn solve(&self) -> Result<Outcome> {
        let start = Instant::now();
        let bddc = build_bddc(&self.sub, &self.options()).stage("preconditioner")?;
        let (solution, stats) = solve_full(&self.sub, &bddc, &self.rhs, self.config.tol, self.config.maxit).stage("solve")?;
        let wall_time_s = start.elapsed().as_secs_f64();
        let rel_l2_error = match &self.problem.exact {
            Some(u) => Some(relative_l2_error(&solution, Some(u), &self.mesh, &self.space).stage("error")?),
            None => None,
        };
        let cs = &bddc.cs;
        let report = Report {
            example: self.config.example,
            omega: self.config.omega(),
            p: self.config.p,
            nh: self.mesh.n_elements(),
            nd: self.part.n_subdomains(),
            n_side: self.config.n_side,
            scaling: self.config.scaling,
            theta: self.theta,
            pnum: cs.face_pnum(),
            coarse_dim: cs.pnum,
            n_faces: cs.n_faces(),
            ppnum: cs.ppnum(),
            avg_per_interface: cs.avg_per_interface(),
            iter: stats.iterations,
            converged: stats.converged,
            residual: stats.final_residual(),
            lambda_min: stats.lambda_min,
            lambda_max: stats.lambda_max,
            rel_l2_error,
            levels: self.config.levels,
            coarsest_dofs: (self.config.levels > 2).then(|| bddc.coarsest_dofs()),
            wall_time_s,
        };
        Ok(Outcome {
            report,
            solution,
            stats,
            bddc,
        })
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    Ok(Experiment::setup(config)?.solve()?.report)
}
