//! Convergence and energy studies.
//!
//! Errors are estimated by comparison with a refined run, so no exact
//! solution is needed:
//!
//! * temporal: `F_U(N) = ‖U_N^{N+1} - U_{2N}^{2N+1}‖` at fixed `J`;
//! * spatial: `G_U(J) = ‖U_J - R U_{2J}‖` at fixed `N`, where `R` keeps the
//!   nodes of the coarse grid.
//!
//! Independent runs are dispatched through an [`Executor`], so a front end
//! can evaluate them in parallel.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::mesh::{Grid1D, Grid2D, GridFn1D, GridFn2D, TimeGrid};
use crate::operators::CgOptions;
use crate::stepper1d::{self, BoundViolation, EnergyRecord, Problem1D};
use crate::stepper2d::{self, Problem2D};

/// Evaluates independent jobs `0..count`; results come back in job order.
pub trait Executor {
    fn execute<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn execute<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(job).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Temporal,
    Spatial,
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    /// `N` for temporal studies, `2J` (interval count) for spatial ones.
    pub param: usize,
    /// Time step of the coarse run.
    pub tau: f64,
    /// Mesh width of the coarse run.
    pub h: f64,
    pub error: f64,
    /// `log2(e_{k-1} / e_k)`; absent on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub kind: StudyKind,
    pub dimension: usize,
    pub law: String,
    /// The parameter held fixed: `J` for temporal, `N` for spatial studies.
    pub fixed: usize,
    pub t_final: f64,
    pub rows: Vec<StudyRow>,
    /// Largest conjugate gradient iteration count over all runs (2D only).
    pub max_cg_iterations: usize,
}

impl ConvergenceReport {
    /// Order predicted by the error analysis: 2 in time, 4 in space.
    pub fn theoretical_order(&self) -> f64 {
        match self.kind {
            StudyKind::Temporal => 2.0,
            StudyKind::Spatial => 4.0,
        }
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

fn with_orders(mut rows: Vec<StudyRow>) -> Vec<StudyRow> {
    for k in 1..rows.len() {
        let (prev, cur) = (rows[k - 1].error, rows[k].error);
        rows[k].order = if prev > 0.0 && cur > 0.0 {
            Some(math::log2(prev / cur))
        } else {
            None
        };
    }
    rows
}

/// Sorted, deduplicated union of `params` and their doubles.
fn run_set(params: &[usize]) -> Vec<usize> {
    let mut all: Vec<usize> = params.iter().flat_map(|&p| [p, 2 * p]).collect();
    all.sort_unstable();
    all.dedup();
    all
}

fn position(set: &[usize], p: usize) -> usize {
    set.binary_search(&p).expect("parameter missing from run set")
}

fn first_error<T>(results: Vec<Result<T, Error>>) -> Result<Vec<T>, Error> {
    results.into_iter().collect()
}

/// Discrete L2 distance between the nodes of `coarse` and the matching
/// nodes of `fine` (same grid or one uniform refinement).
pub fn restricted_distance_1d(coarse: &GridFn1D, fine: &GridFn1D) -> f64 {
    let stride = fine.grid().intervals() / coarse.grid().intervals();
    let h = coarse.grid().h();
    let s: f64 = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = c - fine.values()[i * stride];
            d * d
        })
        .sum();
    math::sqrt(h * s)
}

/// 2D counterpart of [`restricted_distance_1d`], weighted by `h1 h2`.
pub fn restricted_distance_2d(coarse: &GridFn2D, fine: &GridFn2D) -> f64 {
    let (cg, fg) = (coarse.grid(), fine.grid());
    let sx = fg.x_grid().intervals() / cg.x_grid().intervals();
    let sy = fg.y_grid().intervals() / cg.y_grid().intervals();
    let mut s = 0.0;
    for i in 0..cg.nx() {
        for j in 0..cg.ny() {
            let d = coarse.values()[cg.index(i, j)] - fine.values()[fg.index(i * sx, j * sy)];
            s += d * d;
        }
    }
    math::sqrt(cg.h1() * cg.h2() * s)
}

fn even_intervals(intervals: &[usize]) -> Result<(), Error> {
    if intervals.iter().any(|&m| m < 4 || m % 2 != 0) {
        return Err(Error::InvalidProblem("interval counts must be even and at least 4"));
    }
    Ok(())
}

fn final_1d(problem: &Problem1D, j: usize, n: usize) -> Result<GridFn1D, Error> {
    let grid = Grid1D::new(j)?;
    let tg = TimeGrid::new(n, problem.t_final)?;
    Ok(stepper1d::run(problem, grid, &tg)?.state.u().clone())
}

fn final_2d(problem: &Problem2D, j: usize, n: usize, cg: CgOptions) -> Result<(GridFn2D, usize), Error> {
    let grid = Grid2D::square(j)?;
    let tg = TimeGrid::new(n, problem.t_final)?;
    let out = stepper2d::run_with(problem, grid, &tg, cg, |_| {})?;
    Ok((out.state.u().clone(), out.max_cg_iterations))
}

/// Temporal study at `J` half intervals for each `N` in `steps`.
pub fn temporal_study_1d(
    problem: &Problem1D,
    j: usize,
    steps: &[usize],
    exec: &impl Executor,
) -> Result<ConvergenceReport, Error> {
    let set = run_set(steps);
    let finals = first_error(exec.execute(set.len(), |k| final_1d(problem, j, set[k])))?;
    let h = Grid1D::new(j)?.h();
    let rows = steps
        .iter()
        .map(|&n| {
            let coarse = &finals[position(&set, n)];
            let fine = &finals[position(&set, 2 * n)];
            StudyRow {
                param: n,
                tau: problem.t_final / (n + 1) as f64,
                h,
                error: restricted_distance_1d(coarse, fine),
                order: None,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        kind: StudyKind::Temporal,
        dimension: 1,
        law: problem.law.name().into(),
        fixed: j,
        t_final: problem.t_final,
        rows: with_orders(rows),
        max_cg_iterations: 0,
    })
}

/// Spatial study at `N` steps for each interval count `2J` in `intervals`.
pub fn spatial_study_1d(
    problem: &Problem1D,
    n: usize,
    intervals: &[usize],
    exec: &impl Executor,
) -> Result<ConvergenceReport, Error> {
    even_intervals(intervals)?;
    let set = run_set(intervals);
    let finals = first_error(exec.execute(set.len(), |k| final_1d(problem, set[k] / 2, n)))?;
    let rows = intervals
        .iter()
        .map(|&m| StudyRow {
            param: m,
            tau: problem.t_final / (n + 1) as f64,
            h: 1.0 / m as f64,
            error: restricted_distance_1d(&finals[position(&set, m)], &finals[position(&set, 2 * m)]),
            order: None,
        })
        .collect();
    Ok(ConvergenceReport {
        kind: StudyKind::Spatial,
        dimension: 1,
        law: problem.law.name().into(),
        fixed: n,
        t_final: problem.t_final,
        rows: with_orders(rows),
        max_cg_iterations: 0,
    })
}

pub fn temporal_study_2d(
    problem: &Problem2D,
    j: usize,
    steps: &[usize],
    cg: CgOptions,
    exec: &impl Executor,
) -> Result<ConvergenceReport, Error> {
    let set = run_set(steps);
    let finals = first_error(exec.execute(set.len(), |k| final_2d(problem, j, set[k], cg)))?;
    let h = Grid1D::new(j)?.h();
    let rows = steps
        .iter()
        .map(|&n| StudyRow {
            param: n,
            tau: problem.t_final / (n + 1) as f64,
            h,
            error: restricted_distance_2d(&finals[position(&set, n)].0, &finals[position(&set, 2 * n)].0),
            order: None,
        })
        .collect();
    Ok(ConvergenceReport {
        kind: StudyKind::Temporal,
        dimension: 2,
        law: problem.law.name().into(),
        fixed: j,
        t_final: problem.t_final,
        rows: with_orders(rows),
        max_cg_iterations: finals.iter().map(|f| f.1).max().unwrap_or(0),
    })
}

pub fn spatial_study_2d(
    problem: &Problem2D,
    n: usize,
    intervals: &[usize],
    cg: CgOptions,
    exec: &impl Executor,
) -> Result<ConvergenceReport, Error> {
    even_intervals(intervals)?;
    let set = run_set(intervals);
    let finals = first_error(exec.execute(set.len(), |k| final_2d(problem, set[k] / 2, n, cg)))?;
    let rows = intervals
        .iter()
        .map(|&m| StudyRow {
            param: m,
            tau: problem.t_final / (n + 1) as f64,
            h: 1.0 / m as f64,
            error: restricted_distance_2d(&finals[position(&set, m)].0, &finals[position(&set, 2 * m)].0),
            order: None,
        })
        .collect();
    Ok(ConvergenceReport {
        kind: StudyKind::Spatial,
        dimension: 2,
        law: problem.law.name().into(),
        fixed: n,
        t_final: problem.t_final,
        rows: with_orders(rows),
        max_cg_iterations: finals.iter().map(|f| f.1).max().unwrap_or(0),
    })
}

/// Energy history of one run together with both energy checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub dimension: usize,
    pub tau: f64,
    pub records: Vec<EnergyRecord>,
    /// Largest `Ê^{n+1} - Ê^n`; at most rounding noise when `f = 0`.
    pub max_increase: f64,
    /// Non-increase check, only meaningful for unforced problems.
    pub dissipation: Result<(), BoundViolation>,
    pub stability: Result<(), BoundViolation>,
    pub unforced: bool,
}

impl EnergyReport {
    /// Evaluates both checks on a recorded history. The non-increase slack
    /// is [`DISSIPATION_TOL_1D`] or [`DISSIPATION_TOL_2D`] by `dimension`.
    pub fn from_records(dimension: usize, tau: f64, records: Vec<EnergyRecord>, unforced: bool) -> Self {
        let diss_tol = if dimension == 1 {
            DISSIPATION_TOL_1D
        } else {
            DISSIPATION_TOL_2D
        };
        let max_increase = records
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            dimension,
            tau,
            dissipation: stepper1d::dissipation_check(&records, diss_tol),
            stability: stepper1d::stability_check(&records, STABILITY_TOL),
            records,
            max_increase,
            unforced,
        }
    }

    /// Fails only if the energy grew without forcing or the bound broke.
    pub fn passed(&self) -> bool {
        self.stability.is_ok() && (!self.unforced || self.dissipation.is_ok())
    }
}

/// Relative slack of the stability bound check.
pub const STABILITY_TOL: f64 = 1e-10;
/// Relative slack of the 1D energy non-increase check.
pub const DISSIPATION_TOL_1D: f64 = 1e-12;
/// The 2D check absorbs the iterative solve residual.
pub const DISSIPATION_TOL_2D: f64 = 1e-11;

pub fn energy_study_1d(problem: &Problem1D, j: usize, n: usize) -> Result<EnergyReport, Error> {
    let grid = Grid1D::new(j)?;
    let tg = TimeGrid::new(n, problem.t_final)?;
    let out = stepper1d::run(problem, grid, &tg)?;
    Ok(EnergyReport::from_records(1, tg.tau(), out.records, problem.f.is_literal_zero()))
}

pub fn energy_study_2d(problem: &Problem2D, j: usize, n: usize, cg: CgOptions) -> Result<EnergyReport, Error> {
    let grid = Grid2D::square(j)?;
    let tg = TimeGrid::new(n, problem.t_final)?;
    let out = stepper2d::run_with(problem, grid, &tg, cg, |_| {})?;
    Ok(EnergyReport::from_records(2, tg.tau(), out.records, problem.f.is_literal_zero()))
}

/// Named parameter sets for the standard studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// The published table parameters.
    Paper,
    /// Coarser time grid for the 2D spatial study; everything else equal.
    Fast,
}

/// Parameters of the standard studies under a [`Profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub temporal_j_1d: usize,
    pub temporal_steps_1d: Vec<usize>,
    pub spatial_n_1d: usize,
    pub spatial_intervals_1d: Vec<usize>,
    pub temporal_j_2d: usize,
    pub temporal_steps_2d: Vec<usize>,
    pub spatial_n_2d: usize,
    pub spatial_intervals_2d: Vec<usize>,
    pub energy_1d: (usize, usize),
    pub energy_2d: (usize, usize),
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Profile::Paper),
            "fast" => Some(Profile::Fast),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Fast => "fast",
        }
    }

    pub fn plan(self) -> StudyPlan {
        let pow2 = |lo: u32, hi: u32| (lo..=hi).map(|k| 1usize << k).collect::<Vec<_>>();
        StudyPlan {
            temporal_j_1d: 1 << 6,
            temporal_steps_1d: pow2(7, 10),
            spatial_n_1d: 1 << 15,
            spatial_intervals_1d: pow2(3, 6),
            temporal_j_2d: 1 << 4,
            temporal_steps_2d: pow2(8, 11),
            spatial_n_2d: match self {
                Profile::Paper => 10_000,
                Profile::Fast => 2_000,
            },
            spatial_intervals_2d: pow2(3, 6),
            energy_1d: (1 << 4, 1 << 15),
            energy_2d: (1 << 5, 1 << 7),
        }
    }
}
