//! The two-way protocol in its entanglement-based form.
//!
//! Bob prepares an EPR pair `(B₁, B₂)` and sends `B₂` through the forward
//! channel. Alice holds an EPR pair `(A₁, A₂)` and couples `A₂` into the
//! received mode on a beam splitter of transmittance `η`; one output `A₃`
//! stays with her and the other returns through the backward channel to
//! become `B₃`. Both channels have transmittance `T` and are attacked by
//! Eve's correlated ancillas `E₁` (forward) and `E₂` (backward).
//!
//! Alice heterodynes `A₁`; Bob heterodynes `B₁` and `B₃` and combines them
//! into the estimators `x_B3 − g·x_B1` and `p_B3 + g·p_B1`. The key is
//! distilled in reverse reconciliation.

mod one_way;

use alloc::format;
use alloc::vec::Vec;

use crate::attack::{dilate_attack, TwoModeAttackParams};
use crate::error::{invalid, Result};
use crate::gaussian::{
    apply_symplectic, beam_splitter, condition_on_linear_outcomes, entropy_from_spectrum,
    epr_state, heterodyne_dilate, permute, reduce, symplectic_eigenvalues, tensor,
    BeamSplitterConvention, GaussianState, HeterodyneReadout, LinearOutcome,
};
use crate::linalg::Matrix;

pub use one_way::one_way_key_rate;

/// Mode indices of the propagated eight-mode state.
pub mod modes {
    pub const B1: usize = 0;
    pub const A1: usize = 1;
    pub const A3: usize = 2;
    pub const B3: usize = 3;
    /// Eve's forward ancilla after the channel.
    pub const E1: usize = 4;
    /// Eve's backward ancilla after the channel.
    pub const E2: usize = 5;
    /// Purifications of Eve's ancilla pair.
    pub const F1: usize = 6;
    pub const F2: usize = 7;
    pub const LABELS: [&str; 8] = ["B1", "A1", "A3", "B3", "E1'", "E2'", "e1", "e2"];
    pub const TRUSTED: [usize; 4] = [B1, A1, A3, B3];
    pub const EVE: [usize; 4] = [E1, E2, F1, F2];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Variance of Alice's EPR pair.
    pub v_a: f64,
    /// Variance of Bob's EPR pair.
    pub v_b: f64,
    /// Transmittance of Alice's coupler.
    pub eta: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    /// Transmittance of each channel, `0 < T < 1`.
    pub transmittance: f64,
    /// Channel excess noise referred to the input.
    pub excess_noise: f64,
    /// Variance added to each of Bob's heterodyne outcomes.
    pub detector_electronic_noise: f64,
    /// Replaces the default estimator coefficient `k`.
    pub k_override: Option<f64>,
}

impl ProtocolParams {
    pub fn new(
        v_a: f64,
        v_b: f64,
        eta: f64,
        beta: f64,
        transmittance: f64,
        excess_noise: f64,
    ) -> Result<Self> {
        let p = ProtocolParams {
            v_a,
            v_b,
            eta,
            beta,
            transmittance,
            excess_noise,
            detector_electronic_noise: 0.0,
            k_override: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_transmittance(mut self, transmittance: f64) -> Result<Self> {
        self.transmittance = transmittance;
        self.validate()?;
        Ok(self)
    }

    pub fn with_excess_noise(mut self, excess_noise: f64) -> Result<Self> {
        self.excess_noise = excess_noise;
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_electronic_noise(mut self, variance: f64) -> Result<Self> {
        self.detector_electronic_noise = variance;
        self.validate()?;
        Ok(self)
    }

    pub fn with_k_override(mut self, k: Option<f64>) -> Result<Self> {
        self.k_override = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite, got {v}")))
            }
        };
        finite("v_a", self.v_a)?;
        finite("v_b", self.v_b)?;
        if !(self.v_a >= 1.0) || !(self.v_b >= 1.0) {
            return Err(invalid(format!(
                "EPR variances must be >= 1, got v_a={} v_b={}",
                self.v_a, self.v_b
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.transmittance > 0.0 && self.transmittance < 1.0) {
            return Err(invalid(format!(
                "transmittance must lie in (0, 1), got {}",
                self.transmittance
            )));
        }
        finite("excess_noise", self.excess_noise)?;
        if !(self.excess_noise >= 0.0) {
            return Err(invalid(format!(
                "excess noise must be >= 0, got {}",
                self.excess_noise
            )));
        }
        finite("detector_electronic_noise", self.detector_electronic_noise)?;
        if !(self.detector_electronic_noise >= 0.0) {
            return Err(invalid("detector electronic noise must be >= 0"));
        }
        if let Some(k) = self.k_override {
            finite("k_override", k)?;
        }
        Ok(())
    }

    /// `V_E = 1 + T·ε/(1 − T)`.
    pub fn ancilla_variance(&self) -> f64 {
        let t = self.transmittance;
        1.0 + t * self.excess_noise / (1.0 - t)
    }

    /// `k = √(½·T²·η·(V_B − 1)/(V_B + 1))`, or the override.
    pub fn estimator_coefficient(&self) -> f64 {
        self.k_override.unwrap_or_else(|| {
            let t = self.transmittance;
            libm::sqrt(0.5 * t * t * self.eta * (self.v_b - 1.0) / (self.v_b + 1.0))
        })
    }

    /// Gain applied to Bob's raw `B₁` heterodyne readout: `√2·k`.
    ///
    /// `k` is defined against a unit-gain heterodyne of `B₁` (outcome
    /// variance `V_B + 1`); the readouts here carry the `1/√2` of a
    /// balanced dilation, hence the factor.
    pub fn readout_gain(&self) -> f64 {
        core::f64::consts::SQRT_2 * self.estimator_coefficient()
    }

    /// Symmetric attack with both ancillas at [`Self::ancilla_variance`].
    pub fn attack(&self, c_x: f64, c_p: f64) -> Result<TwoModeAttackParams> {
        TwoModeAttackParams::symmetric(self.ancilla_variance(), c_x, c_p)
    }
}

/// Modes `(B₁, A₁, A₂, B₂)` before transmission: EPR pairs `(B₁, B₂)` of
/// variance `V_B` and `(A₁, A₂)` of variance `V_A`.
pub fn initial_cm(v_a: f64, v_b: f64) -> Result<GaussianState> {
    let bob = epr_state(v_b)?;
    let alice = epr_state(v_a)?;
    // tensor order: B₁, B₂, A₁, A₂
    permute(&tensor(&bob, &alice), &[0, 2, 3, 1])
}

/// Global pure state after both channel uses, with modes as in [`modes`].
#[derive(Debug, Clone)]
pub struct PropagatedState {
    pub state: GaussianState,
}

impl PropagatedState {
    pub fn labels(&self) -> [&'static str; 8] {
        modes::LABELS
    }

    /// `(B₁, A₁, A₃, B₃)` marginal.
    pub fn trusted(&self) -> GaussianState {
        reduce(&self.state, &modes::TRUSTED).expect("valid modes")
    }

    /// `(E₁′, E₂′, e₁, e₂)` marginal.
    pub fn eve(&self) -> GaussianState {
        reduce(&self.state, &modes::EVE).expect("valid modes")
    }
}

/// Propagates the protocol with an explicit four-mode attack dilation
/// `(E₁, E₂, e₁, e₂)`.
pub fn propagate_with_dilation(
    params: &ProtocolParams,
    dilation: &GaussianState,
) -> Result<PropagatedState> {
    params.validate()?;
    if dilation.n_modes() != 4 {
        return Err(invalid(format!(
            "attack dilation must have 4 modes, got {}",
            dilation.n_modes()
        )));
    }
    let rot = BeamSplitterConvention::Rotation;
    let t = params.transmittance;
    // 0 B₁, 1 A₁, 2 A₂, 3 B₂, 4 E₁, 5 E₂, 6 e₁, 7 e₂
    let mut state = tensor(&initial_cm(params.v_a, params.v_b)?, dilation);
    // Forward channel: index 3 becomes A_in, index 4 becomes E₁′.
    state = apply_symplectic(&state, &beam_splitter(8, t, 3, 4, rot)?)?;
    // Alice's coupler: index 3 becomes A_out, index 2 becomes A₃.
    state = apply_symplectic(&state, &beam_splitter(8, params.eta, 3, 2, rot)?)?;
    // Backward channel: index 3 becomes B₃, index 5 becomes E₂′.
    state = apply_symplectic(&state, &beam_splitter(8, t, 3, 5, rot)?)?;
    Ok(PropagatedState { state })
}

/// Propagates the protocol under `attack`, dilated by purification.
pub fn propagate_full(
    params: &ProtocolParams,
    attack: &TwoModeAttackParams,
) -> Result<PropagatedState> {
    propagate_with_dilation(params, &dilate_attack(attack)?)
}

/// `(B₁, A₁, A₃, B₃)` covariance matrix assembled entry by entry from the
/// channel relations, for a symmetric attack (`V_E1 = V_E2`).
pub fn closed_form_cm(params: &ProtocolParams, attack: &TwoModeAttackParams) -> Result<GaussianState> {
    params.validate()?;
    if (attack.v_e1 - attack.v_e2).abs() > 1e-12 * attack.v_e1 {
        return Err(invalid("the closed form needs V_E1 = V_E2"));
    }
    if !attack.is_physical() {
        return Err(invalid(format!("unphysical attack {attack}")));
    }
    let (va, vb, eta, t, ve) = (params.v_a, params.v_b, params.eta, params.transmittance, attack.v_e1);
    let tp = libm::sqrt(t * (1.0 - eta));
    let ca = libm::sqrt(va * va - 1.0);
    let cb = libm::sqrt(vb * vb - 1.0);
    let se = libm::sqrt(eta);
    let mix = libm::sqrt(t * eta * (1.0 - eta));
    let v_prime =
        t * (1.0 - eta) * va + t * t * eta * vb + (1.0 - t * (1.0 - eta * (1.0 - t))) * ve;
    let c_prime = mix * va - t * mix * vb - (1.0 - t) * mix * ve;
    let v_a3 = eta * va + (1.0 - eta) * (t * vb + (1.0 - t) * ve);
    let v_b3 = |c: f64| v_prime + 2.0 * c * (1.0 - t) * libm::sqrt(t * eta);
    let c_a3b3 = |c: f64| c_prime - c * (1.0 - t) * libm::sqrt(1.0 - eta);

    let scalar = |v: f64| Matrix::identity(2).scale(v);
    let sz = |v: f64| Matrix::from_diagonal(&[v, -v]);
    let diag = |x: f64, p: f64| Matrix::from_diagonal(&[x, p]);

    let blocks: [[Matrix; 4]; 4] = [
        [scalar(vb), scalar(0.0), sz(-tp * cb), sz(se * t * cb)],
        [scalar(0.0), scalar(va), sz(se * ca), sz(tp * ca)],
        [sz(-tp * cb), sz(se * ca), scalar(v_a3), diag(c_a3b3(attack.c_x), c_a3b3(attack.c_p))],
        [sz(se * t * cb), sz(tp * ca), diag(c_a3b3(attack.c_x), c_a3b3(attack.c_p)), diag(v_b3(attack.c_x), v_b3(attack.c_p))],
    ];
    let mut cm = Matrix::zeros(8, 8);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            cm.set_block(2 * i, 2 * j, b);
        }
    }
    GaussianState::new(cm)
}

/// Secret key rate and its ingredients, in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateReport {
    pub i_ab: f64,
    pub chi_be: f64,
    /// `β·I(A:B) − χ(B:E)`, not clamped.
    pub key_rate: f64,
    /// Symplectic spectrum of the trusted modes (equivalently of Eve's
    /// unconditioned modes), descending.
    pub spectrum_unconditioned: Vec<f64>,
    /// Symplectic spectrum of Eve's modes conditioned on Bob's outcomes.
    pub spectrum_conditioned: Vec<f64>,
    /// Alice's heterodyne readout variances conditioned on Bob's x and p
    /// outcomes.
    pub conditional_variances: (f64, f64),
    /// Alice's unconditioned readout variances.
    pub alice_variances: (f64, f64),
    /// `None` for the one-way baseline.
    pub attack: Option<TwoModeAttackParams>,
}

impl KeyRateReport {
    pub fn entropy_unconditioned(&self) -> f64 {
        entropy_from_spectrum(&self.spectrum_unconditioned).unwrap_or(f64::NAN)
    }

    pub fn entropy_conditioned(&self) -> f64 {
        entropy_from_spectrum(&self.spectrum_conditioned).unwrap_or(f64::NAN)
    }
}

/// `Σ_{ij} aᵢ γᵢⱼ bⱼ` for sparse linear forms.
pub(crate) fn form_covariance(cm: &Matrix, a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    a.iter()
        .map(|&(i, ca)| b.iter().map(|&(j, cb)| ca * cb * cm[(i, j)]).sum::<f64>())
        .sum()
}

/// `½·log₂(V_a / V_{a|m})` from the classical covariance of two outcomes.
/// Returns the information and the conditional variance.
pub(crate) fn gaussian_information(var_a: f64, var_m: f64, cov_am: f64) -> Result<(f64, f64)> {
    if !(var_m > 0.0) || !(var_a > 0.0) {
        return Err(crate::Error::DegenerateMeasurement(format!(
            "outcome variance is not positive ({var_m:e})"
        )));
    }
    let cond = var_a - cov_am * cov_am / var_m;
    if !(cond > 0.0) {
        return Err(crate::Error::DegenerateMeasurement(format!(
            "conditional variance is not positive ({cond:e})"
        )));
    }
    Ok((0.5 * libm::log2(var_a / cond), cond))
}

/// The propagated state with all three heterodynes dilated, and Bob's two
/// estimator outcomes.
struct Measured {
    state: GaussianState,
    alice: HeterodyneReadout,
    outcome_x: LinearOutcome,
    outcome_p: LinearOutcome,
}

fn measure(params: &ProtocolParams, propagated: &PropagatedState) -> Result<Measured> {
    let (s, b1) = heterodyne_dilate(&propagated.state, modes::B1)?;
    let (s, b3) = heterodyne_dilate(&s, modes::B3)?;
    let (s, alice) = heterodyne_dilate(&s, modes::A1)?;
    let g = params.readout_gain();
    let noise = params.detector_electronic_noise * (1.0 + g * g);
    // The p estimator uses B₁'s conjugate sign: EPR correlations flip sign
    // on p, so `+g` is what cancels Bob's own modulation.
    let outcome_x = LinearOutcome::new(alloc::vec![(b3.x, 1.0), (b1.x, -g)]).with_noise(noise);
    let outcome_p = LinearOutcome::new(alloc::vec![(b3.p, 1.0), (b1.p, g)]).with_noise(noise);
    Ok(Measured {
        state: s,
        alice,
        outcome_x,
        outcome_p,
    })
}

struct Information {
    i_ab: f64,
    conditional: (f64, f64),
    alice: (f64, f64),
}

fn information(m: &Measured) -> Result<Information> {
    let cm = m.state.cm();
    let mut total = 0.0;
    let mut cond = [0.0; 2];
    let mut alice = [0.0; 2];
    for (k, (a, out)) in [(m.alice.x, &m.outcome_x), (m.alice.p, &m.outcome_p)]
        .into_iter()
        .enumerate()
    {
        let var_a = cm[(a, a)];
        let var_m = form_covariance(cm, &out.terms, &out.terms) + out.added_noise;
        let cov = form_covariance(cm, &[(a, 1.0)], &out.terms);
        let (info, c) = gaussian_information(var_a, var_m, cov)?;
        total += info;
        cond[k] = c;
        alice[k] = var_a;
    }
    Ok(Information {
        i_ab: total,
        conditional: (cond[0], cond[1]),
        alice: (alice[0], alice[1]),
    })
}

struct Holevo {
    chi: f64,
    unconditioned: Vec<f64>,
    conditioned: Vec<f64>,
}

fn holevo(propagated: &PropagatedState, m: &Measured) -> Result<Holevo> {
    let unconditioned = symplectic_eigenvalues(&propagated.trusted())?;
    let conditioned = condition_on_linear_outcomes(
        &m.state,
        &[m.outcome_x.clone(), m.outcome_p.clone()],
        &modes::EVE,
    )?;
    let conditioned = symplectic_eigenvalues(&conditioned.state)?;
    let chi = entropy_from_spectrum(&unconditioned)? - entropy_from_spectrum(&conditioned)?;
    Ok(Holevo {
        chi,
        unconditioned,
        conditioned,
    })
}

/// `I(A:B)` from the three heterodynes, with the conditional variances
/// `(V_{A1x|Bx}, V_{A1p|Bp})`.
pub fn mutual_information(
    params: &ProtocolParams,
    attack: &TwoModeAttackParams,
) -> Result<(f64, (f64, f64))> {
    let propagated = propagate_full(params, attack)?;
    let info = information(&measure(params, &propagated)?)?;
    Ok((info.i_ab, info.conditional))
}

/// `χ(B:E)` in reverse reconciliation, with the unconditioned and
/// conditioned symplectic spectra.
pub fn holevo_rr(
    params: &ProtocolParams,
    attack: &TwoModeAttackParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let propagated = propagate_full(params, attack)?;
    let h = holevo(&propagated, &measure(params, &propagated)?)?;
    Ok((h.chi, h.unconditioned, h.conditioned))
}

/// Key rate under `attack`.
pub fn key_rate(params: &ProtocolParams, attack: &TwoModeAttackParams) -> Result<KeyRateReport> {
    key_rate_with_dilation(params, attack, &dilate_attack(attack)?)
}

/// Key rate with an explicitly supplied dilation of `attack`.
pub fn key_rate_with_dilation(
    params: &ProtocolParams,
    attack: &TwoModeAttackParams,
    dilation: &GaussianState,
) -> Result<KeyRateReport> {
    let propagated = propagate_with_dilation(params, dilation)?;
    let measured = measure(params, &propagated)?;
    let info = information(&measured)?;
    let h = holevo(&propagated, &measured)?;
    Ok(KeyRateReport {
        i_ab: info.i_ab,
        chi_be: h.chi,
        key_rate: params.beta * info.i_ab - h.chi,
        spectrum_unconditioned: h.unconditioned,
        spectrum_conditioned: h.conditioned,
        conditional_variances: info.conditional,
        alice_variances: info.alice,
        attack: Some(*attack),
    })
}
