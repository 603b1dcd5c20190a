use damped_eb_core::damping::{simpson_of_square_1d, simpson_of_square_2d};
use damped_eb_core::expr::{parse, Expression};
use damped_eb_core::operators::{apply_a, apply_d, apply_h, apply_phi, solve_a, solve_h};
use damped_eb_core::{Grid1D, Grid2D, GridFn1D, GridFn2D};
use proptest::prelude::*;

fn field_1d() -> impl Strategy<Value = GridFn1D> {
    (2usize..=32).prop_flat_map(|j| {
        let grid = Grid1D::new(j).unwrap();
        prop::collection::vec(-1.0f64..1.0, grid.interior_count())
            .prop_map(move |v| GridFn1D::from_interior(grid, &v).unwrap())
    })
}

fn pair_1d() -> impl Strategy<Value = (GridFn1D, GridFn1D)> {
    (2usize..=32).prop_flat_map(|j| {
        let grid = Grid1D::new(j).unwrap();
        let n = grid.interior_count();
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(a, b)| {
                (
                    GridFn1D::from_interior(grid, &a).unwrap(),
                    GridFn1D::from_interior(grid, &b).unwrap(),
                )
            })
    })
}

fn field_2d_on(grid: Grid2D) -> impl Strategy<Value = GridFn2D> {
    let count = grid.interior_count();
    prop::collection::vec(-1.0f64..1.0, count).prop_map(move |vals| {
        let mut it = vals.into_iter();
        GridFn2D::from_fn(grid, |_, _| it.next().unwrap())
    })
}

fn pair_2d() -> impl Strategy<Value = (GridFn2D, GridFn2D)> {
    (2usize..=8, 2usize..=8).prop_flat_map(|(j1, j2)| {
        let grid = Grid2D::new(j1, j2).unwrap();
        (field_2d_on(grid), field_2d_on(grid))
    })
}

/// Composite Simpson weights `(1, 4, 2, ..., 4, 1) / 3` times `h`.
fn simpson_weights(grid: Grid1D) -> Vec<f64> {
    let last = grid.intervals();
    (0..=last)
        .map(|k| {
            let w = if k == 0 || k == last {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * grid.h() / 3.0
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simpson_reproduces_b_norm(v in field_1d()) {
        let w = simpson_weights(v.grid());
        let direct: f64 = v.values().iter().zip(&w).map(|(x, w)| w * x * x).sum();
        prop_assert!(rel_close(direct, v.norm_b_sq(), 1e-13));
        prop_assert!(rel_close(simpson_of_square_1d(&v), v.norm_b_sq(), 1e-13));
    }

    #[test]
    fn tensor_simpson_reproduces_f_norm((v, _) in pair_2d()) {
        let g = v.grid();
        let (wx, wy) = (simpson_weights(g.x_grid()), simpson_weights(g.y_grid()));
        let mut direct = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                direct += wx[i] * wy[j] * v.get(i, j).powi(2);
            }
        }
        prop_assert!(rel_close(direct, v.norm_f_sq(), 1e-13));
        prop_assert!(rel_close(simpson_of_square_2d(&v), v.norm_f_sq(), 1e-13));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn compact_and_second_difference_commute_in_the_inner_product((u, v) in pair_1d()) {
        let lhs = apply_a(&u).inner(&apply_d(&v)).unwrap();
        let rhs = apply_d(&u).inner(&apply_a(&v)).unwrap();
        let scale = apply_a(&u).l2() * apply_d(&v).l2();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn compact_operator_bounds(u in field_1d()) {
        let (n, na) = (u.l2(), apply_a(&u).l2());
        prop_assert!(3f64.sqrt() / 3.0 * n <= na);
        prop_assert!(na <= n);
    }

    #[test]
    fn weighted_norm_bounds(u in field_1d()) {
        let n = u.l2();
        prop_assert!(u.norm_a_sq().sqrt() <= 2f64.sqrt() * n);
        let b = u.norm_b_sq().sqrt();
        prop_assert!(6f64.sqrt() / 3.0 * n <= b);
        prop_assert!(b <= 2.0 * 3f64.sqrt() / 3.0 * n);
    }

    #[test]
    fn summation_by_parts((v, w) in pair_1d()) {
        let h = v.grid().h();
        let (vv, ww) = (v.values(), w.values());
        let sum: f64 = (0..vv.len() - 1)
            .map(|j| (vv[j + 1] - vv[j]) / h * (ww[j + 1] - ww[j]) / h)
            .sum();
        let lhs = v.inner(&apply_d(&w)).unwrap();
        let scale = v.l2() * apply_d(&w).l2();
        prop_assert!((lhs + h * sum).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn two_dimensional_bounds((u, _) in pair_2d()) {
        let n = u.l2();
        let nh = apply_h(&u).l2();
        prop_assert!(4.0 / 9.0 * n <= nh && nh <= n);
        prop_assert!(u.norm_e_sq().sqrt() <= 2.0 * 3f64.sqrt() / 3.0 * n);
        let f = u.norm_f_sq().sqrt();
        prop_assert!(2.0 / 3.0 * n <= f && f <= 4.0 / 3.0 * n);
    }

    #[test]
    fn h_and_phi_commute_in_the_inner_product((u, v) in pair_2d()) {
        let lhs = apply_h(&u).inner(&apply_phi(&v)).unwrap();
        let rhs = apply_phi(&u).inner(&apply_h(&v)).unwrap();
        let scale = apply_h(&u).l2() * apply_phi(&v).l2();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn solvers_invert_their_operators((u, _) in pair_2d(), w in field_1d()) {
        prop_assert!(solve_h(&apply_h(&u)).sub(&u).unwrap().max_abs() <= 1e-13);
        prop_assert!(solve_a(&apply_a(&w)).sub(&w).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn operators_are_homogeneous((u, v) in pair_1d(), c in -3.0f64..3.0) {
        let lhs = apply_d(&u.scaled(c));
        let rhs = apply_d(&u).scaled(c);
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
        let mut sum = u.clone();
        sum.add_scaled(1.0, &v).unwrap();
        let mut split = apply_a(&u);
        split.add_scaled(1.0, &apply_a(&v)).unwrap();
        prop_assert!(apply_a(&sum).sub(&split).unwrap().max_abs() <= 1e-14);
    }
}

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("t".to_string()),
        Just("pi".to_string()),
        (0.1f64..5.0).prop_map(|c| format!("{c}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just('+'), Just('-'), Just('*')])
                .prop_map(|(a, b, op)| format!("({a}){op}({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner, prop_oneof![Just("sin"), Just("cos")]).prop_map(|(a, f)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn display_round_trips(src in expression(), x in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.0f64..1.0) {
        let e: Expression = parse(&src).unwrap();
        let again = parse(&e.to_string()).unwrap();
        prop_assert_eq!(&again, &e);
        let (a, b) = (e.eval(x, y, t).unwrap(), again.eval(x, y, t).unwrap());
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
