use damped_eb_core::expr::parse;
use damped_eb_core::operators::{apply_a, apply_d, apply_h, apply_phi};
use damped_eb_core::stepper1d::{self, Problem1D};
use damped_eb_core::stepper2d::{self, Problem2D};
use damped_eb_core::{DampingLaw, Grid1D, Grid2D, GridFn1D, TimeGrid};

fn beam(u0: &str, u1: &str, f: &str, law: DampingLaw) -> Problem1D {
    Problem1D::new(parse(u0).unwrap(), parse(u1).unwrap(), parse(f).unwrap(), law, 1.0).unwrap()
}

fn plate(u0: &str, u1: &str, f: &str, law: DampingLaw) -> Problem2D {
    Problem2D::new(parse(u0).unwrap(), parse(u1).unwrap(), parse(f).unwrap(), law, 1.0).unwrap()
}

fn example_one(law: DampingLaw) -> Problem1D {
    beam("sin(pi*x)", "0", "t^3*sin(pi*x)", law)
}

fn combine(parts: &[(f64, &GridFn1D)]) -> GridFn1D {
    let mut out = GridFn1D::zeros(parts[0].1.grid());
    for (c, u) in parts {
        out.add_scaled(*c, u).unwrap();
    }
    out
}

#[test]
fn beam_step_satisfies_unreduced_equations() {
    let p = example_one(DampingLaw::sqrt());
    let grid = Grid1D::new(8).unwrap();
    let tg = TimeGrid::new(8, 1.0).unwrap();
    let tau = tg.tau();
    let mut s = stepper1d::init(&p, grid, &tg).unwrap();
    for n in 1..=4 {
        let before = s.clone();
        let f = p.forcing(grid, tg.t(n)).unwrap();
        s.step(&p.law, &f, tau).unwrap();

        let (um, u, up) = (before.u_prev(), before.u(), s.u());
        let (vm, vp) = (before.v_prev(), s.v());
        let accel = combine(&[(1.0 / (tau * tau), up), (-2.0 / (tau * tau), u), (1.0 / (tau * tau), um)]);
        let vel = combine(&[(0.5 / tau, up), (-0.5 / tau, um)]);
        let mut momentum = apply_a(&accel);
        momentum.add_scaled(before.q(), &apply_a(&vel)).unwrap();
        momentum.add_scaled(0.5, &apply_d(&combine(&[(1.0, vp), (1.0, vm)]))).unwrap();
        momentum.add_scaled(-1.0, &apply_a(&f)).unwrap();
        assert!(momentum.max_abs() <= 1e-10, "momentum residual {}", momentum.max_abs());

        let curvature = apply_a(&vp.sub(vm).unwrap()).sub(&apply_d(&up.sub(um).unwrap())).unwrap();
        assert!(curvature.max_abs() <= 1e-10, "curvature residual {}", curvature.max_abs());
    }
}

#[test]
fn plate_step_satisfies_unreduced_equations() {
    let p = plate("sin(pi*x)*sin(pi*y)", "x*y*(1-x)*(1-y)", "t^3*sin(pi*x)*sin(pi*y)", DampingLaw::linear());
    let grid = Grid2D::square(4).unwrap();
    let tg = TimeGrid::new(8, 1.0).unwrap();
    let tau = tg.tau();
    let mut s = stepper2d::init(&p, grid, &tg).unwrap();
    for n in 1..=3 {
        let before = s.clone();
        let f = p.forcing(grid, tg.t(n)).unwrap();
        s.step(&p.law, &f, tau).unwrap();
        let (um, u, up) = (before.u_prev(), before.u(), s.u());
        let (vm, vp) = (before.v_prev(), s.v());

        let mut accel = up.scaled(1.0 / (tau * tau));
        accel.add_scaled(-2.0 / (tau * tau), u).unwrap();
        accel.add_scaled(1.0 / (tau * tau), um).unwrap();
        let vel = up.sub(um).unwrap().scaled(0.5 / tau);
        let mut vsum = vp.clone();
        vsum.add_scaled(1.0, vm).unwrap();
        let mut momentum = apply_h(&accel);
        momentum.add_scaled(before.q(), &apply_h(&vel)).unwrap();
        momentum.add_scaled(0.5, &apply_phi(&vsum)).unwrap();
        momentum.add_scaled(-1.0, &apply_h(&f)).unwrap();
        assert!(momentum.max_abs() <= 1e-8, "momentum residual {}", momentum.max_abs());

        let curvature = apply_h(&vp.sub(vm).unwrap()).sub(&apply_phi(&up.sub(um).unwrap())).unwrap();
        assert!(curvature.max_abs() <= 1e-9, "curvature residual {}", curvature.max_abs());
    }
}

#[test]
fn constant_damping_superposes() {
    let law = DampingLaw::constant(0.7);
    let grid = Grid1D::new(8).unwrap();
    let tg = TimeGrid::new(40, 1.0).unwrap();
    let a = beam("sin(pi*x)", "0", "t*x*(1-x)", law.clone());
    let b = beam("x^2*(1-x)", "sin(2*pi*x)", "cos(3*t)", law.clone());
    let sum = beam(
        "sin(pi*x) + x^2*(1-x)",
        "sin(2*pi*x)",
        "t*x*(1-x) + cos(3*t)",
        law,
    );
    let ua = stepper1d::run(&a, grid, &tg).unwrap().state;
    let ub = stepper1d::run(&b, grid, &tg).unwrap().state;
    let us = stepper1d::run(&sum, grid, &tg).unwrap().state;
    let gap = us.u().sub(&combine(&[(1.0, ua.u()), (1.0, ub.u())])).unwrap().max_abs();
    assert!(gap <= 1e-11, "superposition gap {gap}");
}

#[test]
fn nonlinear_damping_does_not_superpose() {
    let grid = Grid1D::new(8).unwrap();
    let tg = TimeGrid::new(40, 1.0).unwrap();
    let law = DampingLaw::linear();
    let one = stepper1d::run(&beam("sin(pi*x)", "0", "0", law.clone()), grid, &tg).unwrap();
    let two = stepper1d::run(&beam("2*sin(pi*x)", "0", "0", law), grid, &tg).unwrap();
    let gap = two.state.u().sub(&one.state.u().scaled(2.0)).unwrap().max_abs();
    assert!(gap > 1e-4);
}

#[test]
fn swapping_axes_transposes_the_solution() {
    let grid = Grid2D::square(4).unwrap();
    let tg = TimeGrid::new(12, 1.0).unwrap();
    let law = DampingLaw::sqrt();
    let p = plate("sin(pi*x)*sin(2*pi*y)", "x*(1-x)*y^2*(1-y)", "t*sin(pi*x)*y*(1-y)", law.clone());
    let q = plate("sin(pi*y)*sin(2*pi*x)", "y*(1-y)*x^2*(1-x)", "t*sin(pi*y)*x*(1-x)", law);
    let a = stepper2d::run(&p, grid, &tg).unwrap();
    let b = stepper2d::run(&q, grid, &tg).unwrap();
    let gap = a.state.u().transposed().sub(b.state.u()).unwrap().max_abs();
    assert!(gap <= 1e-10, "transpose gap {gap}");
}

#[test]
fn unforced_energy_never_increases() {
    let p = beam("sin(pi*x) + 0.3*sin(3*pi*x)", "x*(1-x)", "0", DampingLaw::sqrt());
    let out = stepper1d::run(&p, Grid1D::new(8).unwrap(), &TimeGrid::new(400, 2.0).unwrap()).unwrap();
    stepper1d::dissipation_check(&out.records, 1e-12).unwrap();
    assert!(out.records.last().unwrap().energy < 0.5 * out.records[0].energy);

    let p = plate("sin(pi*x)*sin(pi*y)", "0", "0", DampingLaw::linear());
    let out = stepper2d::run(&p, Grid2D::square(4).unwrap(), &TimeGrid::new(64, 1.0).unwrap()).unwrap();
    stepper2d::dissipation_check(&out.records, 1e-11).unwrap();
}

#[test]
fn forced_runs_respect_the_stability_bound() {
    let p = beam("sin(pi*x)", "sin(2*pi*x)", "10*t*sin(3*pi*x)", DampingLaw::linear());
    let out = stepper1d::run(&p, Grid1D::new(16).unwrap(), &TimeGrid::new(200, 1.0).unwrap()).unwrap();
    stepper1d::stability_check(&out.records, 1e-10).unwrap();
    assert_eq!(out.forcing_norms.len(), 200);
}

#[test]
fn fully_discrete_solution_approaches_the_semi_discrete_reference() {
    let p = example_one(DampingLaw::sqrt());
    let grid = Grid1D::new(8).unwrap();
    let reference = stepper1d::mol_reference(&p, grid, 1.0, 2.5e-4).unwrap();
    let errors: Vec<f64> = [64usize, 128, 256, 512]
        .iter()
        .map(|&n| {
            let out = stepper1d::run(&p, grid, &TimeGrid::new(n, 1.0).unwrap()).unwrap();
            out.state.u().sub(&reference.u).unwrap().l2()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.3..=4.7).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn semi_discrete_energy_decays() {
    let p = beam("sin(pi*x)", "0", "0", DampingLaw::linear());
    let mut mol = stepper1d::MolIntegrator::new(&p, Grid1D::new(8).unwrap()).unwrap();
    let mut last = mol.state().energy();
    for k in 1..=20 {
        mol.advance_to(0.05 * k as f64, 1e-3).unwrap();
        let e = mol.state().energy();
        assert!(e <= last * (1.0 + 1e-9));
        last = e;
    }
}
