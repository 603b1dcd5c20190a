//! Two-dimensional analogue of [`crate::stepper1d`] on the unit square.
//!
//! `H = A_x B_y` takes the role of `A` and `Φ = B_y D_x + A_x D_y` that of
//! `D`. Since `H` and `Φ` commute, the same elimination applies and each
//! step solves `(a H² + ½ Φ²) U^{n+1} = rhs` by preconditioned conjugate
//! gradients, warm-started from the linear extrapolation `2U^n - U^{n-1}`.

use alloc::vec::Vec;

use crate::damping::{q_coefficient_2d, DampingLaw};
use crate::error::{Error, MeshError};
use crate::expr::{Expression, Var};
use crate::math;
use crate::mesh::{Grid2D, GridFn2D, TimeGrid};
use crate::operators::{
    apply_h, apply_phi, solve_h, solve_step_2d, CgOptions, CgStats, CompactSolver2D,
    StepOperator2D,
};

pub use crate::stepper1d::{dissipation_check, stability_check, BoundViolation, EnergyRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Problem2D {
    pub u0: Expression,
    pub u1: Expression,
    pub f: Expression,
    pub law: DampingLaw,
    pub t_final: f64,
    /// Analytic `Δu0`.
    pub lap_u0: Option<Expression>,
    /// Analytic `Δ²u0`.
    pub bilap_u0: Option<Expression>,
}

impl Problem2D {
    pub fn new(
        u0: Expression,
        u1: Expression,
        f: Expression,
        law: DampingLaw,
        t_final: f64,
    ) -> Result<Self, Error> {
        let p = Self {
            u0,
            u1,
            f,
            law,
            t_final,
            lap_u0: None,
            bilap_u0: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_analytic_laplacians(
        mut self,
        lap_u0: Option<Expression>,
        bilap_u0: Option<Expression>,
    ) -> Result<Self, Error> {
        self.lap_u0 = lap_u0;
        self.bilap_u0 = bilap_u0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let initial = [Some(&self.u0), Some(&self.u1), self.lap_u0.as_ref(), self.bilap_u0.as_ref()];
        if initial.iter().flatten().any(|e| e.depends_on(Var::T)) {
            return Err(Error::InvalidProblem("initial data must not depend on t"));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidProblem("final time must be positive"));
        }
        Ok(())
    }

    pub fn forcing(&self, grid: Grid2D, t: f64) -> Result<GridFn2D, Error> {
        if self.f.is_literal_zero() {
            Ok(GridFn2D::zeros(grid))
        } else {
            Ok(GridFn2D::sample(grid, &self.f, t)?)
        }
    }
}

/// Sliding window `(U^{n-1}, U^n, V^{n-1}, V^n)` at time index `n`.
#[derive(Debug, Clone)]
pub struct StepperState2D {
    n: usize,
    u_prev: GridFn2D,
    u_curr: GridFn2D,
    v_prev: GridFn2D,
    v_curr: GridFn2D,
    q_curr: f64,
    compact: CompactSolver2D,
    cg: CgOptions,
    last_cg: Option<CgStats>,
}

impl StepperState2D {
    pub fn from_levels(
        n: usize,
        u_prev: GridFn2D,
        u_curr: GridFn2D,
        v_prev: GridFn2D,
        v_curr: GridFn2D,
        law: &DampingLaw,
    ) -> Result<Self, Error> {
        let grid = u_curr.grid();
        for g in [u_prev.grid(), v_prev.grid(), v_curr.grid()] {
            if g != grid {
                return Err(MeshError::GridMismatch.into());
            }
        }
        let q_curr = q_coefficient_2d(&v_curr, law)?;
        Ok(Self {
            n,
            u_prev,
            u_curr,
            v_prev,
            v_curr,
            q_curr,
            compact: CompactSolver2D::new(grid),
            cg: CgOptions::default(),
            last_cg: None,
        })
    }

    /// Sets the conjugate gradient options used by subsequent steps.
    pub fn with_cg_options(mut self, cg: CgOptions) -> Self {
        self.cg = cg;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Grid2D {
        self.u_curr.grid()
    }

    pub fn u_prev(&self) -> &GridFn2D {
        &self.u_prev
    }

    pub fn u(&self) -> &GridFn2D {
        &self.u_curr
    }

    pub fn v_prev(&self) -> &GridFn2D {
        &self.v_prev
    }

    pub fn v(&self) -> &GridFn2D {
        &self.v_curr
    }

    pub fn q(&self) -> f64 {
        self.q_curr
    }

    /// Statistics of the most recent step solve.
    pub fn last_cg(&self) -> Option<CgStats> {
        self.last_cg
    }

    pub fn step(&mut self, law: &DampingLaw, f_n: &GridFn2D, tau: f64) -> Result<CgStats, Error> {
        let q = self.q_curr;
        let a = 1.0 / (tau * tau) + q / (2.0 * tau);
        let op = StepOperator2D::new(a, self.grid())?;

        let mut w = f_n.clone();
        w.add_scaled(2.0 / (tau * tau), &self.u_curr)?;
        w.add_scaled(q / (2.0 * tau) - 1.0 / (tau * tau), &self.u_prev)?;
        let mut rhs = apply_h(&apply_h(&w));
        rhs.add_scaled(-1.0, &apply_phi(&apply_h(&self.v_prev)))?;
        rhs.add_scaled(0.5, &apply_phi(&apply_phi(&self.u_prev)))?;

        let mut guess = self.u_curr.scaled(2.0);
        guess.add_scaled(-1.0, &self.u_prev)?;
        let (u_next, stats) = solve_step_2d(&op, &rhs, Some(&guess), self.cg)?;

        let mut v_next = apply_phi(&u_next.sub(&self.u_prev)?);
        self.compact.solve_in_place(&mut v_next);
        v_next.add_scaled(1.0, &self.v_prev)?;

        self.q_curr = q_coefficient_2d(&v_next, law)?;
        self.u_prev = core::mem::replace(&mut self.u_curr, u_next);
        self.v_prev = core::mem::replace(&mut self.v_curr, v_next);
        self.n += 1;
        self.last_cg = Some(stats);
        Ok(stats)
    }

    /// `sqrt(‖H δ_t U^n‖² + ½(‖H V^n‖² + ‖H V^{n-1}‖²))`.
    pub fn energy(&self, tau: f64) -> Result<f64, Error> {
        let vel = self.u_curr.sub(&self.u_prev)?.scaled(1.0 / tau);
        let kinetic = apply_h(&vel).l2_sq();
        let potential = 0.5 * (apply_h(&self.v_curr).l2_sq() + apply_h(&self.v_prev).l2_sq());
        Ok(math::sqrt(kinetic + potential))
    }
}

pub fn init(problem: &Problem2D, grid: Grid2D, tg: &TimeGrid) -> Result<StepperState2D, Error> {
    let tau = tg.tau();
    let compact = CompactSolver2D::new(grid);
    let u0 = GridFn2D::sample(grid, &problem.u0, 0.0)?;
    let u1 = GridFn2D::sample(grid, &problem.u1, 0.0)?;
    let v0 = match &problem.lap_u0 {
        Some(lap) => GridFn2D::sample(grid, lap, 0.0)?,
        None => compact.solve(&apply_phi(&u0)),
    };
    let q0 = q_coefficient_2d(&v0, &problem.law)?;
    let bilap = match &problem.bilap_u0 {
        Some(b) => GridFn2D::sample(grid, b, 0.0)?,
        None => compact.solve(&apply_phi(&v0)),
    };
    let mut u2 = problem.forcing(grid, 0.0)?;
    u2.add_scaled(-q0, &u1)?;
    u2.add_scaled(-1.0, &bilap)?;

    let mut u_first = u0.clone();
    u_first.add_scaled(tau, &u1)?;
    u_first.add_scaled(0.5 * tau * tau, &u2)?;
    let v_first = compact.solve(&apply_phi(&u_first));
    StepperState2D::from_levels(1, u0, u_first, v0, v_first, &problem.law)
}

#[derive(Debug, Clone)]
pub struct RunOutput2D {
    pub state: StepperState2D,
    pub records: Vec<EnergyRecord>,
    pub forcing_norms: Vec<f64>,
    pub steps: usize,
    /// Largest iteration count over all step solves.
    pub max_cg_iterations: usize,
    pub total_cg_iterations: usize,
}

pub fn run_with(
    problem: &Problem2D,
    grid: Grid2D,
    tg: &TimeGrid,
    cg: CgOptions,
    mut observer: impl FnMut(&StepperState2D),
) -> Result<RunOutput2D, Error> {
    let tau = tg.tau();
    let mut state = init(problem, grid, tg)?.with_cg_options(cg);
    observer(&state);
    let e0 = state.energy(tau)?;
    let mut records = Vec::with_capacity(tg.steps() + 1);
    records.push(EnergyRecord {
        n: 0,
        energy: e0,
        c_norm: e0,
        bound: e0,
    });
    let mut forcing_norms = Vec::with_capacity(tg.steps());
    let mut forcing_sum = 0.0;
    let (mut max_it, mut total_it) = (0, 0);
    for n in 1..=tg.steps() {
        let f_n = problem.forcing(grid, tg.t(n))?;
        let f_norm = f_n.l2();
        forcing_norms.push(f_norm);
        forcing_sum += f_norm;
        let stats = state.step(&problem.law, &f_n, tau)?;
        max_it = max_it.max(stats.iterations);
        total_it += stats.iterations;
        observer(&state);
        let e = state.energy(tau)?;
        records.push(EnergyRecord {
            n,
            energy: e,
            c_norm: e,
            bound: e0 + 2.0 * tau * forcing_sum,
        });
    }
    Ok(RunOutput2D {
        state,
        records,
        forcing_norms,
        steps: tg.steps(),
        max_cg_iterations: max_it,
        total_cg_iterations: total_it,
    })
}

pub fn run(problem: &Problem2D, grid: Grid2D, tg: &TimeGrid) -> Result<RunOutput2D, Error> {
    run_with(problem, grid, tg, CgOptions::default(), |_| {})
}

/// `Δ_h u = H⁻¹ Φ u`, the compact discrete Laplacian.
pub fn compact_laplacian(u: &GridFn2D) -> GridFn2D {
    solve_h(&apply_phi(u))
}
