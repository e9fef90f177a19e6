//! Gaussian measurements: heterodyne dilation, conditioning on linear
//! combinations of commuting measured quadratures, and homodyne rules.

use alloc::format;
use alloc::vec::Vec;

use super::{
    apply_symplectic, beam_splitter, symplectic_form, tensor, BeamSplitterConvention,
    GaussianState,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;

/// Quadrature indices carrying the two outcomes of a dilated heterodyne.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeterodyneReadout {
    /// Index (into the `2N` quadratures) of the x outcome.
    pub x: usize,
    /// Index of the p outcome.
    pub p: usize,
}

/// Dilates a heterodyne measurement of `mode`: a vacuum mode is appended and
/// mixed with `mode` on a balanced beam splitter so that the outputs are
/// `(q + v)/√2` (kept in place) and `(q − v)/√2` (the new last mode). The x
/// outcome is read from the first output and the p outcome from the second;
/// the two commute and each has variance `(V + 1)/2` for a thermal input.
pub fn heterodyne_dilate(
    state: &GaussianState,
    mode: usize,
) -> Result<(GaussianState, HeterodyneReadout)> {
    state.check_mode(mode)?;
    let n = state.n_modes();
    let extended = tensor(state, &GaussianState::vacuum(1));
    let bs = beam_splitter(n + 1, 0.5, mode, n, BeamSplitterConvention::Reflection)?;
    let out = apply_symplectic(&extended, &bs)?;
    Ok((
        out,
        HeterodyneReadout {
            x: 2 * mode,
            p: 2 * n + 1,
        },
    ))
}

/// A classical outcome `Σ cᵢ q̂ᵢ` over measured quadratures, optionally with
/// independent additive Gaussian noise of the given variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOutcome {
    pub terms: Vec<(usize, f64)>,
    pub added_noise: f64,
}

impl LinearOutcome {
    pub fn new(terms: Vec<(usize, f64)>) -> Self {
        LinearOutcome {
            terms,
            added_noise: 0.0,
        }
    }

    pub fn single(quadrature: usize) -> Self {
        Self::new(alloc::vec![(quadrature, 1.0)])
    }

    pub fn with_noise(mut self, variance: f64) -> Self {
        self.added_noise = variance;
        self
    }

    fn dense(&self, dim: usize) -> Vec<f64> {
        let mut v = alloc::vec![0.0; dim];
        for &(i, c) in &self.terms {
            v[i] += c;
        }
        v
    }
}

/// Result of conditioning on measurement outcomes.
#[derive(Debug, Clone)]
pub struct Conditioned {
    /// Conditional state of the kept modes.
    pub state: GaussianState,
    /// Classical covariance `Γ` of the outcomes.
    pub outcome_covariance: Matrix,
    /// Cross-covariance `Σ` between kept quadratures (rows) and outcomes.
    pub cross_covariance: Matrix,
}

/// Relative threshold below which the outcome covariance counts as singular.
const DEGENERACY_TOL: f64 = 1e-10;

/// Conditions the kept modes on jointly measured linear outcomes:
/// `γ_kept − Σ Γ⁻¹ Σᵀ`.
///
/// The outcomes must be mutually commuting (`ℓᵢᵀ Ω ℓⱼ = 0`) and must not
/// involve quadratures of kept modes.
pub fn condition_on_linear_outcomes(
    state: &GaussianState,
    outcomes: &[LinearOutcome],
    kept_modes: &[usize],
) -> Result<Conditioned> {
    let n = state.n_modes();
    let dim = 2 * n;
    if outcomes.is_empty() {
        return Err(invalid("no outcomes to condition on"));
    }
    if kept_modes.is_empty() {
        return Err(invalid("no kept modes"));
    }
    super::check_distinct_modes(state, kept_modes)?;
    for o in outcomes {
        if !(o.added_noise >= 0.0) {
            return Err(invalid("outcome noise variance must be non-negative"));
        }
        for &(q, _) in &o.terms {
            if q >= dim {
                return Err(invalid(format!("quadrature {q} out of range")));
            }
            if kept_modes.contains(&(q / 2)) {
                return Err(invalid(format!(
                    "outcome involves quadrature {q} of kept mode {}",
                    q / 2
                )));
            }
        }
    }

    let forms: Vec<Vec<f64>> = outcomes.iter().map(|o| o.dense(dim)).collect();
    let omega = symplectic_form(n);
    for i in 0..forms.len() {
        for j in i + 1..forms.len() {
            let comm: f64 = (0..dim)
                .map(|a| forms[i][a] * (0..dim).map(|b| omega[(a, b)] * forms[j][b]).sum::<f64>())
                .sum();
            if comm.abs() > 1e-12 {
                return Err(invalid(format!(
                    "outcomes {i} and {j} do not commute (commutator {comm:e})"
                )));
            }
        }
    }

    let m = outcomes.len();
    let l = Matrix::from_fn(dim, m, |a, k| forms[k][a]);
    let cm = state.cm();
    let mut gamma = l.transpose().matmul(cm).matmul(&l);
    for (k, o) in outcomes.iter().enumerate() {
        gamma[(k, k)] += o.added_noise;
    }
    let gamma = gamma.symmetrized();

    let kept_idx = super::quadrature_indices(kept_modes);
    let all: Vec<usize> = (0..dim).collect();
    let sigma = cm.select(&kept_idx, &all).matmul(&l);

    let (vals, _) = gamma.symmetric_eigen();
    let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = vals.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if !(min > DEGENERACY_TOL * max) || max == 0.0 {
        return Err(Error::DegenerateMeasurement(format!(
            "outcome covariance is singular (eigenvalues {min:e} .. {max:e})"
        )));
    }
    let gamma_inv = gamma.symmetric_function(|v| 1.0 / v);
    let reduction = sigma.matmul(&gamma_inv).matmul(&sigma.transpose());
    let kept = cm.select(&kept_idx, &kept_idx);
    Ok(Conditioned {
        state: GaussianState::from_symmetric(&kept - &reduction),
        outcome_covariance: gamma,
        cross_covariance: sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

/// How a homodyne measurement's singular outcome covariance is handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomodyneRule {
    /// `γ_A − σ (Π γ_B Π)^{MP} σᵀ` with `Π` projecting on the measured
    /// quadrature.
    PseudoInverse,
    /// Both quadratures of the measured mode enter `Γ = Π γ_B Π + ε·tr(γ_B)·I`,
    /// a heterodyne-shaped conditioning that tends to homodyne as `ε → 0`.
    Regularized { epsilon: f64 },
}

/// Conditions `kept_modes` on a homodyne measurement of `quadrature` of
/// `mode`.
pub fn condition_homodyne(
    state: &GaussianState,
    mode: usize,
    quadrature: Quadrature,
    kept_modes: &[usize],
    rule: HomodyneRule,
) -> Result<GaussianState> {
    state.check_mode(mode)?;
    super::check_distinct_modes(state, kept_modes)?;
    if kept_modes.contains(&mode) {
        return Err(invalid("the measured mode cannot be kept"));
    }
    let cm = state.cm();
    let kept_idx = super::quadrature_indices(kept_modes);
    let meas = [2 * mode, 2 * mode + 1];
    let sel = match quadrature {
        Quadrature::X => 0,
        Quadrature::P => 1,
    };
    let block = cm.select(&meas, &meas);
    let sigma = cm.select(&kept_idx, &meas);
    let kept = cm.select(&kept_idx, &kept_idx);

    let pinv = match rule {
        HomodyneRule::PseudoInverse => {
            let v = block[(sel, sel)];
            if !(v > 0.0) {
                return Err(Error::DegenerateMeasurement(
                    "homodyne quadrature has zero variance".into(),
                ));
            }
            let mut p = Matrix::zeros(2, 2);
            p[(sel, sel)] = 1.0 / v;
            p
        }
        HomodyneRule::Regularized { epsilon } => {
            if !(epsilon > 0.0) {
                return Err(invalid("regularization must be positive"));
            }
            let reg = epsilon * block.trace();
            let mut proj = Matrix::zeros(2, 2);
            proj[(sel, sel)] = block[(sel, sel)];
            proj[(0, 0)] += reg;
            proj[(1, 1)] += reg;
            let inv = proj.spd_inverse(0.0)?;
            // Σ Π (ΠγΠ + εI)⁻¹ Π Σᵀ: the unmeasured column does not couple.
            let mut pi = Matrix::zeros(2, 2);
            pi[(sel, sel)] = 1.0;
            pi.matmul(&inv).matmul(&pi)
        }
    };
    let reduction = sigma.matmul(&pinv).matmul(&sigma.transpose());
    Ok(GaussianState::from_symmetric(&kept - &reduction))
}
