//! Fully discrete compact scheme for the damped beam.
//!
//! Unknowns are the displacement `U^n` and the discrete curvature `V^n`
//! (`A V ≈ D U`). For `n ≥ 1`
//!
//! ```text
//! A δ_t² U^n + P(‖V^n‖_B²) A δ̄_t U^n + D (V^{n+1} + V^{n-1})/2 = A f^n
//! A (V^{n+1} - V^{n-1}) = D (U^{n+1} - U^{n-1})
//! ```
//!
//! Substituting the second relation into the first (premultiplied by `A`)
//! leaves `(a A² + ½ D²) U^{n+1} = rhs` with `a = 1/τ² + q_n/(2τ)`, after
//! which `V^{n+1}` follows from one tridiagonal solve.

use alloc::vec::Vec;

use crate::damping::{q_coefficient_1d, DampingLaw};
use crate::error::Error;
use crate::expr::{Expression, Var};
use crate::math;
use crate::mesh::{Grid1D, GridFn1D, TimeGrid};
use crate::operators::{apply_a, apply_d, build_step_matrix_1d, solve_a, solve_step_1d};

/// Initial-boundary value problem on `(0, 1)` with hinged ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem1D {
    pub u0: Expression,
    pub u1: Expression,
    pub f: Expression,
    pub law: DampingLaw,
    pub t_final: f64,
    /// Analytic `u0''`; replaces the discrete `A⁻¹ D U⁰` for `V⁰`.
    pub lap_u0: Option<Expression>,
    /// Analytic `u0''''`; replaces `A⁻¹ D V⁰` in the startup acceleration.
    pub bilap_u0: Option<Expression>,
}

impl Problem1D {
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

    /// Samples the forcing at `t`, skipping evaluation for a literal zero.
    pub fn forcing(&self, grid: Grid1D, t: f64) -> Result<GridFn1D, Error> {
        if self.f.is_literal_zero() {
            Ok(GridFn1D::zeros(grid))
        } else {
            Ok(GridFn1D::sample(grid, &self.f, t)?)
        }
    }
}

/// Sliding window `(U^{n-1}, U^n, V^{n-1}, V^n)` at time index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState1D {
    n: usize,
    u_prev: GridFn1D,
    u_curr: GridFn1D,
    v_prev: GridFn1D,
    v_curr: GridFn1D,
    q_curr: f64,
}

impl StepperState1D {
    /// Builds a state from explicit levels; `q` is recomputed from `v_curr`.
    pub fn from_levels(
        n: usize,
        u_prev: GridFn1D,
        u_curr: GridFn1D,
        v_prev: GridFn1D,
        v_curr: GridFn1D,
        law: &DampingLaw,
    ) -> Result<Self, Error> {
        let grid = u_curr.grid();
        for g in [u_prev.grid(), v_prev.grid(), v_curr.grid()] {
            if g != grid {
                return Err(crate::error::MeshError::GridMismatch.into());
            }
        }
        let q_curr = q_coefficient_1d(&v_curr, law)?;
        Ok(Self {
            n,
            u_prev,
            u_curr,
            v_prev,
            v_curr,
            q_curr,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Grid1D {
        self.u_curr.grid()
    }

    /// `U^{n-1}`.
    pub fn u_prev(&self) -> &GridFn1D {
        &self.u_prev
    }

    /// `U^n`.
    pub fn u(&self) -> &GridFn1D {
        &self.u_curr
    }

    pub fn v_prev(&self) -> &GridFn1D {
        &self.v_prev
    }

    pub fn v(&self) -> &GridFn1D {
        &self.v_curr
    }

    /// Damping coefficient `P(‖V^n‖_B²)`.
    pub fn q(&self) -> f64 {
        self.q_curr
    }

    /// Advances from `n` to `n + 1` given `f^n` (sampled at `t_n`).
    pub fn step(&mut self, law: &DampingLaw, f_n: &GridFn1D, tau: f64) -> Result<(), Error> {
        let q = self.q_curr;
        let a = 1.0 / (tau * tau) + q / (2.0 * tau);
        let m = build_step_matrix_1d(a, self.grid())?;

        // w = f + (2U^n - U^{n-1})/τ² + q/(2τ) U^{n-1}
        let mut w = f_n.clone();
        w.add_scaled(2.0 / (tau * tau), &self.u_curr)?;
        w.add_scaled(q / (2.0 * tau) - 1.0 / (tau * tau), &self.u_prev)?;
        // rhs = A² w - D A V^{n-1} + ½ D² U^{n-1}
        let mut rhs = apply_a(&apply_a(&w));
        rhs.add_scaled(-1.0, &apply_d(&apply_a(&self.v_prev)))?;
        rhs.add_scaled(0.5, &apply_d(&apply_d(&self.u_prev)))?;

        let u_next = solve_step_1d(&m, &rhs);
        let mut v_next = solve_a(&apply_d(&u_next.sub(&self.u_prev)?));
        v_next.add_scaled(1.0, &self.v_prev)?;

        self.q_curr = q_coefficient_1d(&v_next, law)?;
        self.u_prev = core::mem::replace(&mut self.u_curr, u_next);
        self.v_prev = core::mem::replace(&mut self.v_curr, v_next);
        self.n += 1;
        Ok(())
    }

    /// `Ê^{n-1} = sqrt(‖A δ_t U^n‖² + ½(‖A V^n‖² + ‖A V^{n-1}‖²))`, which is
    /// also `‖U^{n-1}‖_C`.
    pub fn energy(&self, tau: f64) -> Result<f64, Error> {
        let mut vel = self.u_curr.sub(&self.u_prev)?;
        vel = vel.scaled(1.0 / tau);
        let kinetic = apply_a(&vel).l2_sq();
        let potential = 0.5 * (apply_a(&self.v_curr).l2_sq() + apply_a(&self.v_prev).l2_sq());
        Ok(math::sqrt(kinetic + potential))
    }
}

/// Initial levels `U⁰, U¹, V⁰, V¹`; the returned state sits at `n = 1`.
pub fn init(problem: &Problem1D, grid: Grid1D, tg: &TimeGrid) -> Result<StepperState1D, Error> {
    let tau = tg.tau();
    let u0 = GridFn1D::sample(grid, &problem.u0, 0.0)?;
    let u1 = GridFn1D::sample(grid, &problem.u1, 0.0)?;
    let v0 = match &problem.lap_u0 {
        Some(lap) => GridFn1D::sample(grid, lap, 0.0)?,
        None => solve_a(&apply_d(&u0)),
    };
    let q0 = q_coefficient_1d(&v0, &problem.law)?;
    let bilap = match &problem.bilap_u0 {
        Some(b) => GridFn1D::sample(grid, b, 0.0)?,
        None => solve_a(&apply_d(&v0)),
    };
    // u_2 = -q(0) u_1 - Δ²u_0 + f(0)
    let mut u2 = problem.forcing(grid, 0.0)?;
    u2.add_scaled(-q0, &u1)?;
    u2.add_scaled(-1.0, &bilap)?;

    let mut u_first = u0.clone();
    u_first.add_scaled(tau, &u1)?;
    u_first.add_scaled(0.5 * tau * tau, &u2)?;
    let v_first = solve_a(&apply_d(&u_first));
    StepperState1D::from_levels(1, u0, u_first, v0, v_first, &problem.law)
}

/// Per-level energy and the accumulated stability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    /// Level index `n` of `Ê^n`.
    pub n: usize,
    pub energy: f64,
    /// `‖U^n‖_C`; identical to `energy` by definition.
    pub c_norm: f64,
    /// `‖U^0‖_C + 2τ Σ_{j=1}^{n} ‖f^j‖`.
    pub bound: f64,
}

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput1D {
    /// State at `n = N + 1`: `u()` is `U^{N+1}`.
    pub state: StepperState1D,
    /// `Ê^0 … Ê^N`.
    pub records: Vec<EnergyRecord>,
    /// `‖f^n‖` for `n = 1..=N`.
    pub forcing_norms: Vec<f64>,
    pub steps: usize,
}

/// Runs `N` steps from the startup levels, calling `observer` after init and
/// after every step.
pub fn run_with(
    problem: &Problem1D,
    grid: Grid1D,
    tg: &TimeGrid,
    mut observer: impl FnMut(&StepperState1D),
) -> Result<RunOutput1D, Error> {
    let tau = tg.tau();
    let mut state = init(problem, grid, tg)?;
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
    for n in 1..=tg.steps() {
        let f_n = problem.forcing(grid, tg.t(n))?;
        let f_norm = f_n.l2();
        forcing_norms.push(f_norm);
        forcing_sum += f_norm;
        state.step(&problem.law, &f_n, tau)?;
        observer(&state);
        let e = state.energy(tau)?;
        records.push(EnergyRecord {
            n,
            energy: e,
            c_norm: e,
            bound: e0 + 2.0 * tau * forcing_sum,
        });
    }
    Ok(RunOutput1D {
        state,
        records,
        forcing_norms,
        steps: tg.steps(),
    })
}

pub fn run(problem: &Problem1D, grid: Grid1D, tg: &TimeGrid) -> Result<RunOutput1D, Error> {
    run_with(problem, grid, tg, |_| {})
}

/// Offending level of a failed energy or stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub n: usize,
    pub value: f64,
    pub limit: f64,
}

impl BoundViolation {
    pub fn margin(&self) -> f64 {
        self.value - self.limit
    }
}

/// Checks `‖U^n‖_C ≤ ‖U^0‖_C + 2τ Σ ‖f^j‖` at every level with absolute
/// slack `rel_tol · (1 + ‖U^0‖_C)`.
pub fn stability_check(records: &[EnergyRecord], rel_tol: f64) -> Result<(), BoundViolation> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let slack = rel_tol * (1.0 + first.c_norm);
    for r in records {
        if r.c_norm > r.bound + slack {
            return Err(BoundViolation {
                n: r.n,
                value: r.c_norm,
                limit: r.bound + slack,
            });
        }
    }
    Ok(())
}

/// Checks `Ê^{n+1} ≤ Ê^n + rel_tol · (1 + Ê^0)` for consecutive records.
pub fn dissipation_check(records: &[EnergyRecord], rel_tol: f64) -> Result<(), BoundViolation> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let slack = rel_tol * (1.0 + first.energy);
    for pair in records.windows(2) {
        if pair[1].energy > pair[0].energy + slack {
            return Err(BoundViolation {
                n: pair[1].n,
                value: pair[1].energy,
                limit: pair[0].energy + slack,
            });
        }
    }
    Ok(())
}

/// Semi-discrete state `(U, U', V)` of the method-of-lines reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MolState {
    pub t: f64,
    pub u: GridFn1D,
    pub w: GridFn1D,
    pub v: GridFn1D,
}

impl MolState {
    /// `sqrt(‖A U'‖² + ‖A V‖²)`, non-increasing in time when `f = 0`.
    pub fn energy(&self) -> f64 {
        math::sqrt(apply_a(&self.w).l2_sq() + apply_a(&self.v).l2_sq())
    }
}

/// Classical RK4 on the semi-discrete system
///
/// ```text
/// U' = W,   W' = f - P(‖V‖_B²) W - A⁻¹ D V,   V' = A⁻¹ D W
/// ```
///
/// used as an independent reference for the fully discrete scheme.
#[derive(Debug, Clone)]
pub struct MolIntegrator<'p> {
    problem: &'p Problem1D,
    state: MolState,
}

impl<'p> MolIntegrator<'p> {
    pub fn new(problem: &'p Problem1D, grid: Grid1D) -> Result<Self, Error> {
        let u = GridFn1D::sample(grid, &problem.u0, 0.0)?;
        let w = GridFn1D::sample(grid, &problem.u1, 0.0)?;
        let v = match &problem.lap_u0 {
            Some(lap) => GridFn1D::sample(grid, lap, 0.0)?,
            None => solve_a(&apply_d(&u)),
        };
        Ok(Self {
            problem,
            state: MolState { t: 0.0, u, w, v },
        })
    }

    pub fn state(&self) -> &MolState {
        &self.state
    }

    fn rhs(
        &self,
        t: f64,
        u: &GridFn1D,
        w: &GridFn1D,
        v: &GridFn1D,
    ) -> Result<(GridFn1D, GridFn1D, GridFn1D), Error> {
        let _ = u;
        let grid = w.grid();
        let q = q_coefficient_1d(v, &self.problem.law)?;
        let mut dw = self.problem.forcing(grid, t)?;
        dw.add_scaled(-q, w)?;
        dw.add_scaled(-1.0, &solve_a(&apply_d(v)))?;
        let dv = solve_a(&apply_d(w));
        Ok((w.clone(), dw, dv))
    }

    /// One RK4 step of size `dt`.
    pub fn step(&mut self, dt: f64) -> Result<(), Error> {
        let s = &self.state;
        let t = s.t;
        let shifted = |base: &GridFn1D, k: &GridFn1D, c: f64| -> Result<GridFn1D, Error> {
            let mut out = base.clone();
            out.add_scaled(c, k)?;
            Ok(out)
        };
        let (k1u, k1w, k1v) = self.rhs(t, &s.u, &s.w, &s.v)?;
        let (k2u, k2w, k2v) = self.rhs(
            t + 0.5 * dt,
            &shifted(&s.u, &k1u, 0.5 * dt)?,
            &shifted(&s.w, &k1w, 0.5 * dt)?,
            &shifted(&s.v, &k1v, 0.5 * dt)?,
        )?;
        let (k3u, k3w, k3v) = self.rhs(
            t + 0.5 * dt,
            &shifted(&s.u, &k2u, 0.5 * dt)?,
            &shifted(&s.w, &k2w, 0.5 * dt)?,
            &shifted(&s.v, &k2v, 0.5 * dt)?,
        )?;
        let (k4u, k4w, k4v) = self.rhs(
            t + dt,
            &shifted(&s.u, &k3u, dt)?,
            &shifted(&s.w, &k3w, dt)?,
            &shifted(&s.v, &k3v, dt)?,
        )?;
        let combine = |base: &GridFn1D,
                       k1: &GridFn1D,
                       k2: &GridFn1D,
                       k3: &GridFn1D,
                       k4: &GridFn1D|
         -> Result<GridFn1D, Error> {
            let mut out = base.clone();
            out.add_scaled(dt / 6.0, k1)?;
            out.add_scaled(dt / 3.0, k2)?;
            out.add_scaled(dt / 3.0, k3)?;
            out.add_scaled(dt / 6.0, k4)?;
            Ok(out)
        };
        let u = combine(&s.u, &k1u, &k2u, &k3u, &k4u)?;
        let w = combine(&s.w, &k1w, &k2w, &k3w, &k4w)?;
        let v = combine(&s.v, &k1v, &k2v, &k3v, &k4v)?;
        let finite = [&u, &w, &v]
            .iter()
            .all(|g| g.values().iter().all(|x| x.is_finite() && x.abs() < 1e150));
        if !finite {
            return Err(Error::Unstable { time: t + dt });
        }
        self.state = MolState { t: t + dt, u, w, v };
        Ok(())
    }

    /// Integrates to `t_end` with steps no larger than `dt_max`, landing
    /// exactly on `t_end`.
    pub fn advance_to(&mut self, t_end: f64, dt_max: f64) -> Result<(), Error> {
        let remaining = t_end - self.state.t;
        if remaining <= 0.0 {
            return Ok(());
        }
        let steps = libm::ceil(remaining / dt_max).max(1.0) as usize;
        let dt = remaining / steps as f64;
        for _ in 0..steps {
            self.step(dt)?;
        }
        self.state.t = t_end;
        Ok(())
    }
}

/// RK4 reference solution `(U, U', V)` at `t_end`.
pub fn mol_reference(
    problem: &Problem1D,
    grid: Grid1D,
    t_end: f64,
    dt: f64,
) -> Result<MolState, Error> {
    if !(dt > 0.0) {
        return Err(Error::InvalidProblem("reference step must be positive"));
    }
    let mut integrator = MolIntegrator::new(problem, grid)?;
    integrator.advance_to(t_end, dt)?;
    Ok(integrator.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use core::f64::consts::PI;

    fn example_one(law: DampingLaw) -> Problem1D {
        Problem1D::new(
            parse("sin(pi*x)").unwrap(),
            parse("0").unwrap(),
            parse("t^3*sin(pi*x)").unwrap(),
            law,
            1.0,
        )
        .unwrap()
    }

    fn zero_problem() -> Problem1D {
        Problem1D::new(
            parse("0").unwrap(),
            parse("0").unwrap(),
            parse("0").unwrap(),
            DampingLaw::sqrt(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn initial_data_may_not_depend_on_time() {
        let err = Problem1D::new(
            parse("t*x").unwrap(),
            parse("0").unwrap(),
            parse("0").unwrap(),
            DampingLaw::linear(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidProblem(_)));
        let p = zero_problem();
        assert!(p
            .clone()
            .with_analytic_laplacians(Some(parse("t").unwrap()), None)
            .is_err());
        let mut q = zero_problem();
        q.t_final = -1.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = zero_problem();
        let grid = Grid1D::new(4).unwrap();
        let tg = TimeGrid::new(5, 1.0).unwrap();
        let out = run(&p, grid, &tg).unwrap();
        assert_eq!(out.state.u(), &GridFn1D::zeros(grid));
        assert_eq!(out.state.v(), &GridFn1D::zeros(grid));
        assert!(out.records.iter().all(|r| r.energy == 0.0));
        assert_eq!(out.state.n(), 6);
    }

    #[test]
    fn single_step_run() {
        let p = example_one(DampingLaw::sqrt());
        let grid = Grid1D::new(4).unwrap();
        let tg = TimeGrid::new(1, 1.0).unwrap();
        let mut calls = 0;
        let out = run_with(&p, grid, &tg, |_| calls += 1).unwrap();
        assert_eq!(out.steps, 1);
        assert_eq!(calls, 2);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.state.n(), 2);
    }

    #[test]
    fn discrete_curvature_of_sine_is_fourth_order() {
        let p = example_one(DampingLaw::sqrt());
        let grid = Grid1D::new(32).unwrap();
        let tg = TimeGrid::new(10, 1.0).unwrap();
        let s = init(&p, grid, &tg).unwrap();
        let h = grid.h();
        let sn = math::sin(PI * h / 2.0);
        let mu = -4.0 / (h * h) * sn * sn;
        let lam = 1.0 + h * h / 12.0 * mu;
        let mut max_err: f64 = 0.0;
        for j in 1..grid.intervals() {
            let exact_mode = mu / lam * math::sin(PI * grid.x(j));
            assert!((s.v_prev().values()[j] - exact_mode).abs() < 1e-10);
            let err = (s.v_prev().values()[j] + PI * PI * math::sin(PI * grid.x(j))).abs();
            max_err = max_err.max(err);
        }
        let c = max_err / h.powi(4);
        assert!(c < 10.0, "observed constant {c}");
    }

    #[test]
    fn startup_without_velocity_ignores_the_law() {
        let grid = Grid1D::new(8).unwrap();
        let tg = TimeGrid::new(16, 1.0).unwrap();
        let mut p = example_one(DampingLaw::sqrt());
        p.f = parse("0").unwrap();
        let a = init(&p, grid, &tg).unwrap();
        p.law = DampingLaw::constant(50.0);
        let b = init(&p, grid, &tg).unwrap();
        assert_eq!(a.u(), b.u());
        // U¹ - U⁰ = (τ²/2)(-A⁻¹ D V⁰)
        let tau = tg.tau();
        let expected = solve_a(&apply_d(a.v_prev())).scaled(-0.5 * tau * tau);
        let diff = a.u().sub(a.u_prev()).unwrap();
        for (x, y) in diff.values().iter().zip(expected.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_overrides_are_used() {
        let grid = Grid1D::new(16).unwrap();
        let tg = TimeGrid::new(16, 1.0).unwrap();
        let p = example_one(DampingLaw::linear())
            .with_analytic_laplacians(
                Some(parse("-pi^2*sin(pi*x)").unwrap()),
                Some(parse("pi^4*sin(pi*x)").unwrap()),
            )
            .unwrap();
        let s = init(&p, grid, &tg).unwrap();
        let x = grid.x(3);
        assert!((s.v_prev().values()[3] + PI * PI * math::sin(PI * x)).abs() < 1e-14);
        let discrete = init(&example_one(DampingLaw::linear()), grid, &tg).unwrap();
        let gap = s.u().sub(discrete.u()).unwrap().max_abs();
        assert!(gap > 0.0 && gap < 1e-5);
    }

    #[test]
    fn stability_and_dissipation_checks_flag_corruption() {
        let p = example_one(DampingLaw::sqrt());
        let grid = Grid1D::new(8).unwrap();
        let tg = TimeGrid::new(32, 1.0).unwrap();
        let out = run(&p, grid, &tg).unwrap();
        assert!(stability_check(&out.records, 1e-10).is_ok());
        let mut bad = out.records.clone();
        bad[10].c_norm *= 2.0;
        bad[10].energy *= 2.0;
        let v = stability_check(&bad, 1e-10).unwrap_err();
        assert_eq!(v.n, 10);
        assert!(v.margin() > 0.0);
        assert!(dissipation_check(&bad, 1e-12).is_err());
    }

    #[test]
    fn mol_zero_data_is_zero() {
        let p = zero_problem();
        let grid = Grid1D::new(4).unwrap();
        let s = mol_reference(&p, grid, 0.5, 1e-3).unwrap();
        assert_eq!(s.u, GridFn1D::zeros(grid));
        assert_eq!(s.t, 0.5);
        assert!(mol_reference(&p, grid, 0.5, 0.0).is_err());
    }

    #[test]
    fn mol_detects_blow_up() {
        let p = example_one(DampingLaw::sqrt());
        let grid = Grid1D::new(16).unwrap();
        let err = mol_reference(&p, grid, 1.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }
}
