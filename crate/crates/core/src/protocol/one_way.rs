use alloc::format;

use super::{form_covariance, gaussian_information, KeyRateReport};
use crate::error::{invalid, Result};
use crate::gaussian::{
    apply_symplectic, beam_splitter, condition_on_linear_outcomes, entropy_from_spectrum,
    epr_state, heterodyne_dilate, reduce, symplectic_eigenvalues, tensor, BeamSplitterConvention,
    LinearOutcome,
};

/// One-way baseline: Alice's EPR pair of variance `v_mod`, one arm sent
/// through a thermal-loss channel (transmittance `T`, purified thermal
/// ancilla of variance `1 + T·ε/(1 − T)`), heterodyne detection at both
/// ends, reverse reconciliation.
pub fn one_way_key_rate(
    v_mod: f64,
    transmittance: f64,
    excess_noise: f64,
    beta: f64,
) -> Result<KeyRateReport> {
    if !(transmittance > 0.0 && transmittance < 1.0) {
        return Err(invalid(format!(
            "transmittance must lie in (0, 1), got {transmittance}"
        )));
    }
    if !(excess_noise >= 0.0) || !excess_noise.is_finite() {
        return Err(invalid("excess noise must be finite and >= 0"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta must lie in [0, 1]"));
    }
    let t = transmittance;
    let w = 1.0 + t * excess_noise / (1.0 - t);
    // 0 A, 1 B, 2 E, 3 E′
    let state = tensor(&epr_state(v_mod)?, &epr_state(w)?);
    let state = apply_symplectic(
        &state,
        &beam_splitter(4, t, 1, 2, BeamSplitterConvention::Rotation)?,
    )?;
    let unconditioned = symplectic_eigenvalues(&reduce(&state, &[0, 1])?)?;

    let (s, bob) = heterodyne_dilate(&state, 1)?;
    let (s, alice) = heterodyne_dilate(&s, 0)?;
    let cm = s.cm();
    let mut i_ab = 0.0;
    let mut cond = [0.0; 2];
    let mut alice_var = [0.0; 2];
    for (k, (a, b)) in [(alice.x, bob.x), (alice.p, bob.p)].into_iter().enumerate() {
        let (info, c) = gaussian_information(
            cm[(a, a)],
            cm[(b, b)],
            form_covariance(cm, &[(a, 1.0)], &[(b, 1.0)]),
        )?;
        i_ab += info;
        cond[k] = c;
        alice_var[k] = cm[(a, a)];
    }

    let eve = condition_on_linear_outcomes(
        &s,
        &[LinearOutcome::single(bob.x), LinearOutcome::single(bob.p)],
        &[2, 3],
    )?;
    let conditioned = symplectic_eigenvalues(&eve.state)?;
    let chi = entropy_from_spectrum(&unconditioned)? - entropy_from_spectrum(&conditioned)?;
    Ok(KeyRateReport {
        i_ab,
        chi_be: chi,
        key_rate: beta * i_ab - chi,
        spectrum_unconditioned: unconditioned,
        spectrum_conditioned: conditioned,
        conditional_variances: (cond[0], cond[1]),
        alice_variances: (alice_var[0], alice_var[1]),
        attack: None,
    })
}
