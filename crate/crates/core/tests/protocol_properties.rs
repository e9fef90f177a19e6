use cvqkd_core::attack::{max_correlation_on_ray, Criterion, TwoModeAttackParams};
use cvqkd_core::gaussian::{entropy_from_spectrum, von_neumann_entropy};
use cvqkd_core::protocol::{
    closed_form_cm, key_rate, mutual_information, propagate_full, ProtocolParams,
};
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = (ProtocolParams, TwoModeAttackParams)> {
    (
        1.0..30.0f64,
        1.0..30.0f64,
        0.0..=1.0f64,
        0.01..0.99f64,
        0.0..1.0f64,
        0.0..std::f64::consts::TAU,
        0.0..0.98f64,
    )
        .prop_map(|(va, vb, eta, t, eps, angle, frac)| {
            let p = ProtocolParams::new(va, vb, eta, 1.0, t, eps).unwrap();
            let ve = p.ancilla_variance();
            let dir = (angle.cos(), angle.sin());
            let c = max_correlation_on_ray(ve, ve, dir, Criterion::Physical).unwrap() * frac;
            let attack = p.attack(c * dir.0, c * dir.1).unwrap();
            (p, attack)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn propagation_matches_closed_form_and_stays_pure((p, attack) in scenario()) {
        let prop = propagate_full(&p, &attack).unwrap();
        let closed = closed_form_cm(&p, &attack).unwrap();
        prop_assert!(prop.trusted().cm().max_abs_diff(closed.cm()) <= 1e-9);
        prop_assert!(prop.state.is_pure(1e-8));
    }

    #[test]
    fn eve_entropy_equals_trusted_entropy((p, attack) in scenario()) {
        let prop = propagate_full(&p, &attack).unwrap();
        let s_ab = von_neumann_entropy(&prop.trusted()).unwrap();
        let s_e = von_neumann_entropy(&prop.eve()).unwrap();
        prop_assert!((s_ab - s_e).abs() <= 1e-7, "{s_ab} vs {s_e}");
    }

    #[test]
    fn report_is_well_formed((p, attack) in scenario()) {
        let r = key_rate(&p, &attack).unwrap();
        prop_assert!(r.i_ab >= 0.0);
        prop_assert!(r.chi_be >= -1e-9);
        prop_assert_eq!(r.spectrum_unconditioned.len(), 4);
        prop_assert_eq!(r.spectrum_conditioned.len(), 4);
        prop_assert!(r.spectrum_unconditioned.iter().chain(&r.spectrum_conditioned).all(|&l| l >= 1.0 - 1e-9));
        let s14 = entropy_from_spectrum(&r.spectrum_unconditioned).unwrap();
        let s58 = entropy_from_spectrum(&r.spectrum_conditioned).unwrap();
        prop_assert!(s58 <= s14 + 1e-9);
        prop_assert!((r.key_rate - (p.beta * r.i_ab - r.chi_be)).abs() <= 1e-15);
    }

    #[test]
    fn bisector_symmetry((p, attack) in scenario()) {
        let swapped = TwoModeAttackParams { c_x: attack.c_p, c_p: attack.c_x, ..attack };
        let a = key_rate(&p, &attack).unwrap().key_rate;
        let b = key_rate(&p, &swapped).unwrap().key_rate;
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

#[test]
fn rate_does_not_increase_with_noise() {
    let t = 10f64.powf(-0.2);
    for (cx, cp) in [(0.0, 0.0), (0.05, 0.05), (0.1, -0.2), (-0.03, 0.0)] {
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let eps = 0.02 + 0.025 * i as f64;
            let p = ProtocolParams::new(20.0, 20.0, 0.75, 1.0, t, eps).unwrap();
            let attack = p.attack(cx, cp).unwrap();
            if !attack.is_physical() {
                continue;
            }
            let k = key_rate(&p, &attack).unwrap().key_rate;
            assert!(k <= prev + 1e-12, "K rose from {prev} to {k} at eps={eps}, c=({cx},{cp})");
            prev = k;
        }
    }
}

#[test]
fn default_estimator_is_near_variance_optimal() {
    for d in [2.0, 10.0, 30.0] {
        let t = 10f64.powf(-0.02 * d);
        let p = ProtocolParams::new(20.0, 20.0, 0.75, 1.0, t, 0.2).unwrap();
        let attack = p.attack(0.0, 0.0).unwrap();
        let k0 = p.estimator_coefficient();
        let (_, (v_default, _)) = mutual_information(&p, &attack).unwrap();
        let best = (0..=200)
            .map(|i| {
                let k = k0 * i as f64 / 100.0;
                let q = p.with_k_override(Some(k)).unwrap();
                mutual_information(&q, &attack).unwrap().1 .0
            })
            .fold(f64::INFINITY, f64::min);
        assert!(v_default <= 1.05 * best, "d={d}: {v_default} vs grid minimum {best}");
    }
}

#[test]
fn flat_bob_modulation_needs_no_estimator() {
    let p = ProtocolParams::new(20.0, 1.0, 0.75, 1.0, 0.5, 0.1).unwrap();
    let attack = p.attack(0.0, 0.0).unwrap();
    let a = mutual_information(&p, &attack).unwrap().0;
    let b = mutual_information(&p.with_k_override(Some(0.0)).unwrap(), &attack).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn channel_limits() {
    let opaque = ProtocolParams::new(20.0, 20.0, 0.75, 1.0, 1e-9, 0.1).unwrap();
    let (i, _) = mutual_information(&opaque, &opaque.attack(0.0, 0.0).unwrap()).unwrap();
    assert!(i < 1e-6, "{i}");

    // Nearly lossless, noiseless: B₃ carries Bob's and Alice's modulation undisturbed.
    let clear = ProtocolParams::new(20.0, 20.0, 0.75, 1.0, 1.0 - 1e-9, 0.0).unwrap();
    let prop = propagate_full(&clear, &clear.attack(0.0, 0.0).unwrap()).unwrap();
    let v_b3 = prop.state.cm()[(6, 6)];
    let expected = 0.75 * 20.0 + 0.25 * 20.0;
    assert!((v_b3 - expected).abs() < 1e-6, "{v_b3}");
}
