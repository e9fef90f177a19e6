use cvqkd_core::attack::{max_correlation_on_ray, AttackClass, Criterion, TwoModeAttackParams};
use cvqkd_core::gaussian::symplectic_eigenvalues;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = TwoModeAttackParams> {
    (1.0..5.0f64, 1.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
        .prop_map(|(v1, v2, cx, cp)| TwoModeAttackParams::new(v1, v2, cx, cp).unwrap())
}

fn physical_params() -> impl Strategy<Value = TwoModeAttackParams> {
    (1.0..5.0f64, 1.0..5.0f64, 0.0..std::f64::consts::TAU, 0.0..1.0f64).prop_map(|(v1, v2, angle, frac)| {
        let dir = (angle.cos(), angle.sin());
        let t = max_correlation_on_ray(v1, v2, dir, Criterion::Physical).unwrap() * frac;
        TwoModeAttackParams::new(v1, v2, t * dir.0, t * dir.1).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn classification_symmetries(p in params()) {
        let class = p.classify();
        let swapped = TwoModeAttackParams { c_x: p.c_p, c_p: p.c_x, ..p };
        let flipped = TwoModeAttackParams { c_x: -p.c_x, c_p: -p.c_p, ..p };
        prop_assert_eq!(swapped.classify(), class);
        prop_assert_eq!(flipped.classify(), class);
    }

    #[test]
    fn closed_form_nu_matches_spectrum(p in physical_params()) {
        prop_assert!(p.is_physical());
        let nu = symplectic_eigenvalues(&p.to_state()).unwrap();
        prop_assert!((nu[1] - p.nu_minus().unwrap()).abs() <= 1e-9, "{nu:?} {p}");
    }

    #[test]
    fn symmetric_line_closed_forms(v in 1.05..5.0f64, c in -5.0..5.0f64) {
        let diag = TwoModeAttackParams::new(v, v, c, c).unwrap();
        let anti = TwoModeAttackParams::new(v, v, c, -c).unwrap();
        let margin = 1e-6;
        if c.abs() < v - 1.0 - margin {
            prop_assert!(diag.is_physical());
        } else if c.abs() > v - 1.0 + margin {
            prop_assert!(!diag.is_physical());
        }
        let phys = (v * v - 1.0).sqrt();
        if c.abs() < phys - margin {
            prop_assert!(anti.is_physical());
        } else if c.abs() > phys + margin {
            prop_assert!(!anti.is_physical());
        }
        if c.abs() < v - 1.0 - margin {
            prop_assert!(anti.is_separable());
        } else if c.abs() > v - 1.0 + margin && c.abs() < phys - margin {
            prop_assert_eq!(anti.classify(), AttackClass::Entangled);
        }
    }

    #[test]
    fn bisection_matches_closed_forms(v in 1.05..5.0f64) {
        let diag = max_correlation_on_ray(v, v, (1.0, 1.0), Criterion::Physical).unwrap();
        prop_assert!((diag - (v - 1.0)).abs() <= 1e-8);
        let anti = max_correlation_on_ray(v, v, (1.0, -1.0), Criterion::Physical).unwrap();
        prop_assert!((anti - (v * v - 1.0).sqrt()).abs() <= 1e-7);
        let sep = max_correlation_on_ray(v, v, (1.0, -1.0), Criterion::Separable).unwrap();
        prop_assert!((sep - (v - 1.0)).abs() <= 1e-7);
    }

    #[test]
    fn ray_boundary_is_certified(
        v1 in 1.01..5.0f64, v2 in 1.01..5.0f64, ux in -1.0..1.0f64, up in -1.0..1.0f64, sep in any::<bool>(),
    ) {
        prop_assume!(ux.abs().max(up.abs()) > 1e-3);
        let crit = if sep { Criterion::Separable } else { Criterion::Physical };
        let t = max_correlation_on_ray(v1, v2, (ux, up), crit).unwrap();
        let at = |t: f64| TwoModeAttackParams::new(v1, v2, t * ux, t * up).unwrap();
        let holds = |p: TwoModeAttackParams| if sep { p.is_separable() } else { p.is_physical() };
        prop_assert!(holds(at(t)));
        prop_assert!(!holds(at(t + 1e-6)));
    }
}
