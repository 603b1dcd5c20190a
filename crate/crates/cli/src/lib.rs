//! Command line front end for the `damped-eb-core` solvers.
//!
//! Each command reads a [`config::RunConfig`], runs the solver or study it
//! names and writes its artifacts into an output directory.

pub mod config;
pub mod parallel;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use damped_eb_core::damping::validate_law;
use damped_eb_core::harness::{self, EnergyReport, Executor, StudyPlan};
use damped_eb_core::operators::CgOptions;
use damped_eb_core::stepper1d;
use damped_eb_core::stepper2d;
use damped_eb_core::{Grid1D, Grid2D, TimeGrid};
use thiserror::Error;

use crate::config::{Command, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] damped_eb_core::Error),
}

/// Files written by a command and whether an acceptance check failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Set when the run completed but violated an energy or law check.
    pub violation: Option<String>,
}

/// Default relative residual for step solves during studies, one digit
/// tighter than single runs so iteration noise stays below the 2D spatial
/// errors.
const STUDY_CG_TOL: f64 = 1e-13;

fn cg_options(config: &RunConfig, default_tol: f64) -> CgOptions {
    CgOptions {
        tol: config.cg_tol.unwrap_or(default_tol),
        max_iterations: None,
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

fn square_grid_j(config: &RunConfig, j: usize) -> Result<usize, CliError> {
    match config.j2 {
        Some(j2) if j2 != j => Err(CliError::Invalid(
            "the energy study runs on a square grid; remove `J2` or set it equal to `J`".into(),
        )),
        _ => Ok(j),
    }
}

fn energy_violation(report: &EnergyReport) -> Option<String> {
    if let Err(v) = &report.stability {
        return Some(format!(
            "stability bound violated at n = {}: {:e} > {:e}",
            v.n, v.value, v.limit
        ));
    }
    if report.unforced {
        if let Err(v) = &report.dissipation {
            return Some(format!(
                "energy increased without forcing at n = {}: {:e} > {:e}",
                v.n, v.value, v.limit
            ));
        }
    }
    None
}

/// Runs `command` and writes its artifacts to `out`.
pub fn execute(
    command: Command,
    config: &RunConfig,
    out: &Path,
    exec: &impl Executor,
) -> Result<Outcome, CliError> {
    let plan = config.profile.plan();
    let mut w = Writer::new(out)?;
    let header = report::Header::new(command, config);
    let (summary, violation) = match command {
        Command::Simulate => simulate(config, &header, &mut w)?,
        Command::TemporalStudy => temporal(config, &plan, &header, &mut w, exec)?,
        Command::SpatialStudy => spatial(config, &plan, &header, &mut w, exec)?,
        Command::EnergyStudy => energy(config, &plan, &header, &mut w)?,
        Command::ValidateLaw => law(config, &header, &mut w)?,
    };
    Ok(Outcome {
        files: w.files,
        summary,
        violation,
    })
}

type Done = (String, Option<String>);

fn simulate(config: &RunConfig, header: &report::Header, w: &mut Writer) -> Result<Done, CliError> {
    let j = config.require_j()?;
    let tg = TimeGrid::new(config.require_n()?, config.t_final).map_err(damped_eb_core::Error::from)?;
    let (energy, solution, norm) = if config.dimension == 1 {
        let p = config.problem_1d()?;
        let grid = Grid1D::new(j).map_err(damped_eb_core::Error::from)?;
        let out = stepper1d::run(&p, grid, &tg)?;
        let norm = out.state.u().norm(config.norm).map_err(damped_eb_core::Error::from)?;
        let solution = report::solution_csv_1d(header, out.state.u(), out.state.v());
        (EnergyReport::from_records(1, tg.tau(), out.records, config.unforced()), solution, norm)
    } else {
        let p = config.problem_2d()?;
        let grid = Grid2D::new(j, config.j2.unwrap_or(j)).map_err(damped_eb_core::Error::from)?;
        let out = stepper2d::run_with(&p, grid, &tg, cg_options(config, 1e-12), |_| {})?;
        let norm = out.state.u().norm(config.norm).map_err(damped_eb_core::Error::from)?;
        let solution = report::solution_csv_2d(header, out.state.u(), out.state.v());
        (EnergyReport::from_records(2, tg.tau(), out.records, config.unforced()), solution, norm)
    };
    w.write("solution.csv", &solution)?;
    w.write("report.csv", &report::energy_csv(header, &energy))?;
    w.write("report.md", &report::simulation_md(header, &energy, config.norm, norm))?;
    let summary = format!(
        "U at T = {}: {:?} norm {:e}; final energy {:e}",
        config.t_final,
        config.norm,
        norm,
        energy.records.last().map_or(0.0, |r| r.energy)
    );
    Ok((summary, energy_violation(&energy)))
}

fn temporal(
    config: &RunConfig,
    plan: &StudyPlan,
    header: &report::Header,
    w: &mut Writer,
    exec: &impl Executor,
) -> Result<Done, CliError> {
    let report = if config.dimension == 1 {
        let steps = config.steps.clone().unwrap_or_else(|| plan.temporal_steps_1d.clone());
        let j = config.study_j.unwrap_or(plan.temporal_j_1d);
        harness::temporal_study_1d(&config.problem_1d()?, j, &steps, exec)?
    } else {
        let steps = config.steps.clone().unwrap_or_else(|| plan.temporal_steps_2d.clone());
        let j = config.study_j.unwrap_or(plan.temporal_j_2d);
        harness::temporal_study_2d(&config.problem_2d()?, j, &steps, cg_options(config, STUDY_CG_TOL), exec)?
    };
    w.write("report.csv", &report::study_csv(header, &report))?;
    w.write("report.md", &report::study_md(header, &report))?;
    Ok((report::study_summary(&report), None))
}

fn spatial(
    config: &RunConfig,
    plan: &StudyPlan,
    header: &report::Header,
    w: &mut Writer,
    exec: &impl Executor,
) -> Result<Done, CliError> {
    let report = if config.dimension == 1 {
        let intervals = config.intervals.clone().unwrap_or_else(|| plan.spatial_intervals_1d.clone());
        let n = config.study_n.unwrap_or(plan.spatial_n_1d);
        harness::spatial_study_1d(&config.problem_1d()?, n, &intervals, exec)?
    } else {
        let intervals = config.intervals.clone().unwrap_or_else(|| plan.spatial_intervals_2d.clone());
        let n = config.study_n.unwrap_or(plan.spatial_n_2d);
        harness::spatial_study_2d(&config.problem_2d()?, n, &intervals, cg_options(config, STUDY_CG_TOL), exec)?
    };
    w.write("report.csv", &report::study_csv(header, &report))?;
    w.write("report.md", &report::study_md(header, &report))?;
    Ok((report::study_summary(&report), None))
}

fn energy(config: &RunConfig, plan: &StudyPlan, header: &report::Header, w: &mut Writer) -> Result<Done, CliError> {
    let report = if config.dimension == 1 {
        let j = config.j.unwrap_or(plan.energy_1d.0);
        let n = config.n.unwrap_or(plan.energy_1d.1);
        harness::energy_study_1d(&config.problem_1d()?, j, n)?
    } else {
        let j = square_grid_j(config, config.j.unwrap_or(plan.energy_2d.0))?;
        let n = config.n.unwrap_or(plan.energy_2d.1);
        harness::energy_study_2d(&config.problem_2d()?, j, n, cg_options(config, 1e-12))?
    };
    w.write("report.csv", &report::energy_csv(header, &report))?;
    w.write("report.md", &report::energy_md(header, &report))?;
    w.write("energy.svg", &report::energy_svg(&report, &header.caption()))?;
    let summary = format!(
        "{} levels, energy {:e} -> {:e}, largest increase {:e}",
        report.records.len(),
        report.records.first().map_or(0.0, |r| r.energy),
        report.records.last().map_or(0.0, |r| r.energy),
        report.max_increase.max(0.0)
    );
    Ok((summary, energy_violation(&report)))
}

fn law(config: &RunConfig, header: &report::Header, w: &mut Writer) -> Result<Done, CliError> {
    let report = validate_law(&config.law, config.z_max, config.samples);
    w.write("report.csv", &report::law_csv(header, &config.law, &report))?;
    w.write("report.md", &report::law_md(header, &config.law, &report))?;
    let violation = (!report.is_clean()).then(|| {
        format!(
            "law `{}` violates its assumptions ({} issues, first: {:?})",
            config.law.name(),
            report.violations.len(),
            report.violations[0]
        )
    });
    let summary = format!(
        "law `{}` on [0, {}]: min {:e}, max slope {:e}",
        config.law.name(),
        report.z_max,
        report.min_value,
        report.max_slope
    );
    Ok((summary, violation))
}
