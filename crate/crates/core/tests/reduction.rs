mod common;

use common::{random_problem, reduction_identity_gap, Lcg, Poly, PolyProblem};
use compact9::coefficients::{EquationMode, PointCoefficients};
use compact9::stencil::{reduce_derivative, ReductionRow};
use proptest::prelude::*;

fn xi(row: &ReductionRow, m: usize, n: usize) -> f64 {
    row.xi.iter().find(|(k, _)| *k == (m, n)).unwrap().1.coeff(0)
}

fn eta(row: &ReductionRow, m: usize, n: usize) -> f64 {
    row.eta.iter().find(|(k, _)| *k == (m, n)).unwrap().1.coeff(0)
}

fn random_point(seed: u64) -> PointCoefficients {
    let mut g = Lcg(seed);
    let mut pc = PointCoefficients::zero(EquationMode::Steady, 0.1);
    for k in 0..pc.a.len() {
        pc.a[k] = g.next();
        pc.b[k] = g.next();
    }
    pc
}

#[test]
fn fourth_x_derivative_matches_the_printed_coefficients() {
    for seed in 1..6 {
        let pc = random_point(seed);
        let (a, b) = (pc.a(0, 0), pc.b(0, 0));
        let (a10, a01, a20, a02) = (pc.a(1, 0), pc.a(0, 1), pc.a(2, 0), pc.a(0, 2));
        let (b10, b01, b20, b02) = (pc.b(1, 0), pc.b(0, 1), pc.b(2, 0), pc.b(0, 2));
        let row = reduce_derivative(&pc, 4, 0, 7).unwrap();
        let expected = [
            ((0, 1), 2.0 * a10 * b - a * a * b + b01 * b + a * b10 + b02 - b20),
            ((0, 2), 2.0 * a10 - a * a + b * b + 2.0 * b01),
            ((0, 3), 2.0 * b),
            ((0, 4), 1.0),
            ((1, 0), 3.0 * a * a10 - a * a * a + a01 * b + a02 - a20),
            ((1, 1), 2.0 * a * b + 2.0 * a01 - 2.0 * b10),
            ((1, 2), 2.0 * a),
        ];
        for ((m, n), want) in expected {
            assert!((xi(&row, m, n) - want).abs() < 1e-12, "xi ({m},{n})");
        }
        assert_eq!(xi(&row, 0, 0), 0.0);
        assert!((eta(&row, 0, 0) - (a * a - 2.0 * a10)).abs() < 1e-12);
        assert!((eta(&row, 1, 0) + a).abs() < 1e-12);
        assert!((eta(&row, 0, 1) + b).abs() < 1e-12);
        assert_eq!(eta(&row, 2, 0), 1.0);
        assert_eq!(eta(&row, 0, 2), -1.0);
        assert_eq!(eta(&row, 1, 1), 0.0);
    }
}

#[test]
fn fourth_x_derivative_with_constant_coefficients() {
    let pc = PointCoefficients::constant(EquationMode::Steady, 0.1, 2.0, 3.0, 0.0, 0.0);
    let row = reduce_derivative(&pc, 4, 0, 7).unwrap();
    assert_eq!(xi(&row, 1, 0), -8.0);
    assert_eq!(xi(&row, 1, 1), 12.0);
    assert_eq!(xi(&row, 0, 2), 5.0);
}

#[test]
fn third_derivative_with_one_y_derivative() {
    // u^(3,1) from the q = 1 instance of the u^(3,q) recursion.
    let pc = random_point(11);
    let a = |m, n| pc.a(m, n);
    let b = |m, n| pc.b(m, n);
    let row = reduce_derivative(&pc, 3, 1, 7).unwrap();
    let ab_b10 = a(0, 0) * b(0, 0) - b(1, 0);
    let ab_b10_y = a(0, 1) * b(0, 0) + a(0, 0) * b(0, 1) - b(1, 1);
    let a2_a10 = a(0, 0) * a(0, 0) - a(1, 0);
    let a2_a10_y = 2.0 * a(0, 0) * a(0, 1) - a(1, 1);
    let expected = [
        ((0, 1), ab_b10_y),
        ((0, 2), ab_b10 + a(0, 1)),
        ((0, 3), a(0, 0)),
        ((1, 0), a2_a10_y),
        ((1, 1), a2_a10 - b(0, 1)),
        ((1, 2), -b(0, 0)),
        ((1, 3), -1.0),
    ];
    for ((m, n), want) in expected {
        assert!((xi(&row, m, n) - want).abs() < 1e-12, "xi ({m},{n})");
    }
    assert!((eta(&row, 0, 0) + a(0, 1)).abs() < 1e-12);
    assert!((eta(&row, 0, 1) + a(0, 0)).abs() < 1e-12);
    assert_eq!(eta(&row, 1, 1), 1.0);
}

#[test]
fn identity_holds_for_a_fixed_steady_instance() {
    let p = random_problem(EquationMode::Steady, 0.1, 7);
    assert!(reduction_identity_gap(&p) < 1e-12);
}

#[test]
fn reaction_term_enters_with_inverse_h() {
    // u = exp-like data is irrelevant here: only the coefficient of u in u^(2,0).
    let mut pc = PointCoefficients::constant(EquationMode::Helmholtz, 0.25, 0.0, 0.0, 3.0, 0.0);
    pc.h = 0.25;
    let row = reduce_derivative(&pc, 2, 0, 7).unwrap();
    let c00 = &row.xi.iter().find(|(k, _)| *k == (0, 0)).unwrap().1;
    assert_eq!(c00.coeff(-1), -3.0);
    assert_eq!(c00.eval(0.25), -12.0);
}

fn poly(deg: usize) -> impl Strategy<Value = Poly> {
    proptest::collection::vec(-1.0..1.0f64, 66).prop_map(move |v| {
        let mut it = v.into_iter();
        Poly::from_fn(deg, || it.next().unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduction_identity_steady(a in poly(5), b in poly(5), u in poly(10)) {
        let p = PolyProblem::new(EquationMode::Steady, 0.1, a, b, Poly::zero(), u);
        prop_assert!(reduction_identity_gap(&p) < 1e-8);
    }

    #[test]
    fn reduction_identity_with_reaction(
        a in poly(5), b in poly(5), c in poly(5), u in poly(10), h in 0.01..0.5f64,
    ) {
        let p = PolyProblem::new(EquationMode::Helmholtz, h, a, b, c, u);
        prop_assert!(reduction_identity_gap(&p) < 1e-8);
    }
}
