use compact9::cases::{lookup_case, CaseRegistry};
use compact9::grid::GridSpec;
use compact9::jet::Jet;

#[test]
fn flux_derivatives_match_finite_differences() {
    for name in CaseRegistry::builtin().names() {
        let case = lookup_case(&name).unwrap();
        let fl = &case.flux;
        for k in -20..=20 {
            let u = k as f64 * 0.1;
            let d = 1e-5;
            let da = ((fl.alpha)(u + d) - (fl.alpha)(u - d)) / (2.0 * d);
            let db = ((fl.beta)(u + d) - (fl.beta)(u - d)) / (2.0 * d);
            assert!((da - (fl.alpha_u)(u)).abs() < 1e-8, "{name} alpha' at {u}");
            assert!((db - (fl.beta_u)(u)).abs() < 1e-8, "{name} beta' at {u}");
        }
    }
}

#[test]
fn jet_forms_agree_with_the_plain_functions() {
    let grid = GridSpec::new(8).unwrap();
    for name in CaseRegistry::builtin().names() {
        let case = lookup_case(&name).unwrap();
        let an = case.analytic.as_ref().expect("built-in cases carry jets");
        for t in [0.0, 0.5, 1.0] {
            for j in 0..=8 {
                for i in 0..=8 {
                    let (x, y) = (grid.coord(i), grid.coord(j));
                    let (jx, jy) = (Jet::constant(x), Jet::constant(y));
                    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
                    assert!(close((an.kappa)(jx, jy, t).value(), (case.kappa)(x, y, t)), "{name} kappa");
                    assert!(close((an.source_f)(jx, jy, t).value(), (case.source_f)(x, y, t)), "{name} f");
                    assert!(close((an.exact_u)(jx, jy, t).value(), (case.exact_u)(x, y, t)), "{name} u");
                }
            }
        }
    }
}

#[test]
fn jet_derivatives_of_kappa_match_finite_differences() {
    for name in CaseRegistry::builtin().names() {
        let case = lookup_case(&name).unwrap();
        let an = case.analytic.as_ref().unwrap();
        let (x, y, t) = (0.37, 0.61, 0.5);
        let k = (an.kappa)(Jet::var_x(x), Jet::var_y(y), t);
        let d = 1e-5;
        let kx = ((case.kappa)(x + d, y, t) - (case.kappa)(x - d, y, t)) / (2.0 * d);
        let ky = ((case.kappa)(x, y + d, t) - (case.kappa)(x, y - d, t)) / (2.0 * d);
        assert!((k.derivative(1, 0) - kx).abs() < 1e-8, "{name}");
        assert!((k.derivative(0, 1) - ky).abs() < 1e-8, "{name}");
    }
}
