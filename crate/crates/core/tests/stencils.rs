mod common;

use common::{random_problem, stencil_residual, with_h, Poly, PolyProblem};
use compact9::coefficients::EquationMode;
use compact9::stencil::reduced::LEADING;
use compact9::stencil::{build_stencil, StencilVariant, NEIGHBORS};

fn order(variant: StencilVariant, prob: &PolyProblem, hs: [f64; 2]) -> f64 {
    let r = hs.map(|h| {
        let p = with_h(prob, h);
        stencil_residual(&p, &build_stencil(&p.point(), variant).unwrap()).abs()
    });
    (r[0] / r[1]).log2() / (hs[0] / hs[1]).log2()
}

/// Keeps the coefficients small so that the asymptotic range starts early.
fn tame(prob: &PolyProblem, s: f64) -> PolyProblem {
    PolyProblem::new(prob.mode, prob.h, prob.a.scale(s), prob.b.scale(s), prob.c.scale(s), prob.u)
}

#[test]
fn general_stencil_is_fourth_order_on_polynomial_data() {
    for seed in 1..5 {
        let p = tame(&random_problem(EquationMode::Steady, 0.1, seed), 0.5);
        let q = order(StencilVariant::General4, &p, [0.02, 0.01]);
        assert!(q > 3.7, "seed {seed}: {q}");
    }
}

#[test]
fn special_stencil_is_fourth_order_when_a_equals_b() {
    for seed in 1..5 {
        let r = tame(&random_problem(EquationMode::Steady, 0.1, seed), 0.5);
        let p = PolyProblem::new(EquationMode::Steady, 0.1, r.a, r.a, Poly::zero(), r.u);
        let q = order(StencilVariant::Special4, &p, [0.02, 0.01]);
        assert!(q > 3.7, "seed {seed}: {q}");
    }
}

#[test]
fn reduced_stencils_are_fourth_order() {
    for seed in 1..5 {
        for (mode, variant) in [
            (EquationMode::Steady, StencilVariant::ReducedElliptic),
            (EquationMode::Helmholtz, StencilVariant::ReducedHelmholtz),
        ] {
            let p = tame(&random_problem(mode, 0.1, seed), 0.5);
            let q = order(variant, &p, [0.02, 0.01]);
            assert!(q > 3.7, "{variant:?} seed {seed}: {q}");
        }
    }
}

#[test]
fn reduced_leading_error_term() {
    // residual / h^4 -> (a^(0,1) - b^(1,0)) u^(1,3) / 90 with an h^2
    // correction. Much below h = 0.02 the rounding in sum C_kl, divided by
    // h^6, swamps the signal, so extrapolate from two moderate steps.
    for seed in 1..5 {
        let p = tame(&random_problem(EquationMode::Steady, 0.1, seed), 0.5);
        let predicted = (p.a.deriv(0, 1) - p.b.deriv(1, 0)) * p.u.deriv(1, 3) / 90.0;
        let [coarse, fine] = [0.04, 0.02].map(|h| {
            let q = with_h(&p, h);
            let st = build_stencil(&q.point(), StencilVariant::ReducedElliptic).unwrap();
            stencil_residual(&q, &st) / h.powi(4)
        });
        let observed = (4.0 * fine - coarse) / 3.0;
        assert!(
            (observed - predicted).abs() < 0.02 * predicted.abs(),
            "seed {seed}: {observed} vs {predicted}"
        );
    }
}

#[test]
fn weights_tend_to_the_classical_laplacian() {
    for seed in 1..4 {
        for (mode, variant) in [
            (EquationMode::Steady, StencilVariant::General4),
            (EquationMode::Steady, StencilVariant::ReducedElliptic),
            (EquationMode::Helmholtz, StencilVariant::ReducedHelmholtz),
        ] {
            let p = random_problem(mode, 0.05, seed);
            let st = build_stencil(&p.point(), variant).unwrap();
            if let Some(c) = st.c_klp {
                for kl in 0..9 {
                    assert_eq!(c[kl][0], LEADING[kl]);
                }
            }
            let tiny = with_h(&p, 1e-9);
            let st = build_stencil(&tiny.point(), variant).unwrap();
            for (kl, &(k, l)) in NEIGHBORS.iter().enumerate() {
                assert!((st.weight(k, l) - LEADING[kl]).abs() < 1e-6, "{variant:?} ({k},{l})");
            }
        }
    }
}

#[test]
fn matching_residual_stays_small() {
    for seed in 1..20 {
        for (mode, variant) in [
            (EquationMode::Steady, StencilVariant::ReducedElliptic),
            (EquationMode::Helmholtz, StencilVariant::ReducedHelmholtz),
        ] {
            let p = random_problem(mode, 0.03, seed);
            let st = build_stencil(&p.point(), variant).unwrap();
            assert!(st.match_residual <= 1e-9, "{variant:?} seed {seed}: {}", st.match_residual);
        }
    }
}

