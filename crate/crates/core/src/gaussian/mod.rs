//! Zero-mean Gaussian states described by their covariance matrices.
//!
//! Quadratures are interleaved, `(x1, p1, ..., xN, pN)`, in shot-noise units
//! so that the vacuum is the identity. The symplectic form is the direct sum
//! of `[[0, 1], [-1, 0]]` blocks.

mod measurement;
mod williamson;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_positive, Matrix};

pub use measurement::{
    condition_homodyne, condition_on_linear_outcomes, heterodyne_dilate, Conditioned,
    HeterodyneReadout, HomodyneRule, LinearOutcome, Quadrature,
};
pub use williamson::{purify, williamson_decompose, Williamson};

/// Symmetry tolerance used when validating covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// A symplectic eigenvalue this far below 1 is still treated as physical.
pub const PHYSICAL_TOL: f64 = 1e-9;
/// Elementwise tolerance on `S Ω Sᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// `Ω = ⊕ [[0, 1], [-1, 0]]` on `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> Matrix {
    let mut omega = Matrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Covariance matrix of a zero-mean N-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    cm: Matrix,
}

impl GaussianState {
    /// Wraps a covariance matrix. The matrix must be square with even
    /// dimension and symmetric to within [`SYMMETRY_TOL`] (relative to its
    /// largest entry); it is symmetrized exactly on construction.
    pub fn new(cm: Matrix) -> Result<Self> {
        if !cm.is_square() || cm.rows() == 0 || cm.rows() % 2 != 0 {
            return Err(invalid(format!(
                "covariance matrix must be 2N x 2N, got {}x{}",
                cm.rows(),
                cm.cols()
            )));
        }
        if cm.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance matrix has non-finite entries"));
        }
        let tol = SYMMETRY_TOL * cm.max_abs().max(1.0);
        if !cm.is_symmetric(tol) {
            return Err(invalid("covariance matrix is not symmetric"));
        }
        Ok(GaussianState {
            cm: cm.symmetrized(),
        })
    }

    pub(crate) fn from_symmetric(cm: Matrix) -> Self {
        debug_assert!(cm.is_square() && cm.rows() % 2 == 0);
        GaussianState {
            cm: cm.symmetrized(),
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState {
            cm: Matrix::identity(2 * n_modes),
        }
    }

    /// Single-mode thermal state `V · I₂`.
    pub fn thermal(variance: f64) -> Result<Self> {
        if !(variance >= 1.0) {
            return Err(invalid(format!("thermal variance must be >= 1, got {variance}")));
        }
        Ok(GaussianState {
            cm: Matrix::identity(2).scale(variance),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.cm.rows() / 2
    }

    pub fn cm(&self) -> &Matrix {
        &self.cm
    }

    pub fn into_cm(self) -> Matrix {
        self.cm
    }

    /// 2×2 block between modes `i` and `j`.
    pub fn mode_block(&self, i: usize, j: usize) -> Matrix {
        self.cm.block(2 * i, 2 * j, 2, 2)
    }

    /// True when every symplectic eigenvalue is at least `1 - PHYSICAL_TOL`.
    pub fn is_physical(&self) -> bool {
        symplectic_eigenvalues(self)
            .map(|nu| nu.iter().all(|&v| v >= 1.0 - PHYSICAL_TOL))
            .unwrap_or(false)
    }

    /// True when every symplectic eigenvalue is within `tol` of 1.
    pub fn is_pure(&self, tol: f64) -> bool {
        symplectic_eigenvalues(self)
            .map(|nu| nu.iter().all(|&v| (v - 1.0).abs() <= tol))
            .unwrap_or(false)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(invalid(format!(
                "mode {mode} out of range for a {}-mode state",
                self.n_modes()
            )));
        }
        Ok(())
    }
}

/// Two-mode squeezed vacuum with local variance `V`:
/// `[[V·I, √(V²−1)·σz], [√(V²−1)·σz, V·I]]`.
pub fn epr_state(variance: f64) -> Result<GaussianState> {
    if !(variance >= 1.0) || !variance.is_finite() {
        return Err(invalid(format!("EPR variance must be >= 1, got {variance}")));
    }
    let c = libm::sqrt(variance * variance - 1.0);
    let cm = Matrix::from_rows(&[
        &[variance, 0.0, c, 0.0],
        &[0.0, variance, 0.0, -c],
        &[c, 0.0, variance, 0.0],
        &[0.0, -c, 0.0, variance],
    ]);
    Ok(GaussianState { cm })
}

/// A matrix `S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    s: Matrix,
}

impl SymplecticMatrix {
    /// Validates `S Ω Sᵀ = Ω` to [`SYMPLECTIC_TOL`] elementwise.
    pub fn new(s: Matrix) -> Result<Self> {
        if !s.is_square() || s.rows() == 0 || s.rows() % 2 != 0 {
            return Err(invalid("symplectic matrix must be 2N x 2N"));
        }
        let omega = symplectic_form(s.rows() / 2);
        let residual = s.congruence(&omega).max_abs_diff(&omega);
        if residual > SYMPLECTIC_TOL {
            return Err(invalid(format!(
                "matrix is not symplectic (residual {residual:e})"
            )));
        }
        Ok(SymplecticMatrix { s })
    }

    pub(crate) fn new_unchecked(s: Matrix) -> Self {
        SymplecticMatrix { s }
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticMatrix {
            s: Matrix::identity(2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.s.rows() / 2
    }

    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.n_modes() != other.n_modes() {
            return Err(invalid("cannot compose symplectic maps of different size"));
        }
        Ok(SymplecticMatrix {
            s: self.s.matmul(&other.s),
        })
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        SymplecticMatrix {
            s: self.s.transpose(),
        }
    }

    /// Largest entry of `|S Ω Sᵀ − Ω|`.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        self.s.congruence(&omega).max_abs_diff(&omega)
    }
}

/// Output-mode sign convention of a beam splitter with amplitude
/// transmission `t` and reflection `r`, acting on modes `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamSplitterConvention {
    /// `a' = t·a + r·b`, `b' = −r·a + t·b`. This is the convention of the
    /// protocol's channel and Alice's coupler (`A_out`, `A₃`).
    Rotation,
    /// `a' = t·a + r·b`, `b' = r·a − t·b`.
    Reflection,
}

/// Beam splitter of intensity transmittance `transmittance` between
/// `mode_a` and `mode_b` of an `n_modes`-mode system.
pub fn beam_splitter(
    n_modes: usize,
    transmittance: f64,
    mode_a: usize,
    mode_b: usize,
    convention: BeamSplitterConvention,
) -> Result<SymplecticMatrix> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(invalid(format!(
            "beam splitter transmittance must lie in [0, 1], got {transmittance}"
        )));
    }
    if mode_a == mode_b || mode_a >= n_modes || mode_b >= n_modes {
        return Err(invalid(format!(
            "beam splitter needs two distinct modes below {n_modes}, got {mode_a} and {mode_b}"
        )));
    }
    let t = libm::sqrt(transmittance);
    let r = libm::sqrt(1.0 - transmittance);
    let (ba, bb) = match convention {
        BeamSplitterConvention::Rotation => (-r, t),
        BeamSplitterConvention::Reflection => (r, -t),
    };
    let mut s = Matrix::identity(2 * n_modes);
    for q in 0..2 {
        let (ia, ib) = (2 * mode_a + q, 2 * mode_b + q);
        s[(ia, ia)] = t;
        s[(ia, ib)] = r;
        s[(ib, ia)] = ba;
        s[(ib, ib)] = bb;
    }
    Ok(SymplecticMatrix { s })
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})` on `mode`.
pub fn squeezer(n_modes: usize, mode: usize, r: f64) -> Result<SymplecticMatrix> {
    if mode >= n_modes {
        return Err(invalid(format!("mode {mode} out of range")));
    }
    let mut s = Matrix::identity(2 * n_modes);
    s[(2 * mode, 2 * mode)] = libm::exp(-r);
    s[(2 * mode + 1, 2 * mode + 1)] = libm::exp(r);
    Ok(SymplecticMatrix { s })
}

/// Phase rotation by `theta` on `mode`.
pub fn phase_rotation(n_modes: usize, mode: usize, theta: f64) -> Result<SymplecticMatrix> {
    if mode >= n_modes {
        return Err(invalid(format!("mode {mode} out of range")));
    }
    let (s_, c) = (libm::sin(theta), libm::cos(theta));
    let mut s = Matrix::identity(2 * n_modes);
    let i = 2 * mode;
    s[(i, i)] = c;
    s[(i, i + 1)] = s_;
    s[(i + 1, i)] = -s_;
    s[(i + 1, i + 1)] = c;
    Ok(SymplecticMatrix { s })
}

/// `γ' = S γ Sᵀ`.
pub fn apply_symplectic(state: &GaussianState, s: &SymplecticMatrix) -> Result<GaussianState> {
    if s.n_modes() != state.n_modes() {
        return Err(invalid(format!(
            "symplectic map acts on {} modes, state has {}",
            s.n_modes(),
            state.n_modes()
        )));
    }
    Ok(GaussianState::from_symmetric(s.s.congruence(&state.cm)))
}

/// Direct sum `γ_a ⊕ γ_b`.
pub fn tensor(a: &GaussianState, b: &GaussianState) -> GaussianState {
    GaussianState {
        cm: a.cm.direct_sum(&b.cm),
    }
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

fn check_distinct_modes(state: &GaussianState, modes: &[usize]) -> Result<()> {
    for (k, &m) in modes.iter().enumerate() {
        state.check_mode(m)?;
        if modes[..k].contains(&m) {
            return Err(invalid(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

/// Marginal on `kept_modes`, in the listed order.
pub fn reduce(state: &GaussianState, kept_modes: &[usize]) -> Result<GaussianState> {
    if kept_modes.is_empty() {
        return Err(invalid("reduce needs at least one kept mode"));
    }
    check_distinct_modes(state, kept_modes)?;
    let idx = quadrature_indices(kept_modes);
    Ok(GaussianState {
        cm: state.cm.select(&idx, &idx),
    })
}

/// Reorders modes: output mode `k` is input mode `mode_order[k]`.
pub fn permute(state: &GaussianState, mode_order: &[usize]) -> Result<GaussianState> {
    if mode_order.len() != state.n_modes() {
        return Err(invalid(format!(
            "permutation has {} entries for a {}-mode state",
            mode_order.len(),
            state.n_modes()
        )));
    }
    reduce(state, mode_order)
}

/// Symplectic spectrum in descending order.
///
/// Computed as the positive square roots of the eigenvalues of the
/// symmetric matrix `γ^{1/2} Ωᵀ γ Ω γ^{1/2}`, which is similar to
/// `−(Ωγ)²`; each eigenvalue appears twice and the pairs are averaged.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<Vec<f64>> {
    let n = state.n_modes();
    let (vals, vecs) = state.cm.symmetric_eigen();
    check_positive(&vals, 1e-14)?;
    // γ^{1/2} from the decomposition we already have
    let mut half = Matrix::zeros(2 * n, 2 * n);
    for (k, &lam) in vals.iter().enumerate() {
        let sl = libm::sqrt(lam);
        for i in 0..2 * n {
            let vi = vecs[(i, k)] * sl;
            for j in 0..2 * n {
                half[(i, j)] += vi * vecs[(j, k)];
            }
        }
    }
    let omega = symplectic_form(n);
    let inner = omega.transpose().matmul(&state.cm).matmul(&omega);
    let product = half.matmul(&inner).matmul(&half);
    let (sq, _) = product.symmetric_eigen();
    Ok((0..n)
        .map(|k| libm::sqrt((0.5 * (sq[2 * k] + sq[2 * k + 1])).max(0.0)))
        .collect())
}

/// `G(x) = (x+1)·log₂(x+1) − x·log₂(x)`, with `G(0) = 0`.
pub fn g_function(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid(format!("G(x) needs x >= 0, got {x}")));
    }
    Ok(g_unchecked(x))
}

pub(crate) fn g_unchecked(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * libm::log2(x + 1.0) - x * libm::log2(x)
    }
}

/// Entropy in bits of a state with the given symplectic spectrum.
///
/// Eigenvalues in `[1 − PHYSICAL_TOL, 1)` are clipped to 1; anything lower
/// is rejected as unphysical.
pub fn entropy_from_spectrum(spectrum: &[f64]) -> Result<f64> {
    spectrum.iter().try_fold(0.0, |acc, &nu| {
        if nu < 1.0 - PHYSICAL_TOL || !nu.is_finite() {
            return Err(invalid(format!(
                "unphysical state: symplectic eigenvalue {nu} < 1"
            )));
        }
        Ok(acc + g_unchecked((nu.max(1.0) - 1.0) / 2.0))
    })
}

/// Von Neumann entropy in bits, `Σ G((νₖ − 1)/2)`.
pub fn von_neumann_entropy(state: &GaussianState) -> Result<f64> {
    let nu = symplectic_eigenvalues(state).map_err(|e| match e {
        Error::NumericalDomain(m) => invalid(format!("unphysical state: {m}")),
        other => other,
    })?;
    entropy_from_spectrum(&nu)
}
