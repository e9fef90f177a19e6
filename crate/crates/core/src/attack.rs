//! Two-mode Gaussian attacks: Eve's ancilla pair `(E₁, E₂)` with covariance
//!
//! ```text
//! [[V_E1·I, C],
//!  [C,      V_E2·I]],   C = diag(C_x, C_p)
//! ```
//!
//! Physicality and separability are decided by the closed-form smallest
//! symplectic eigenvalue of the state and of its partial transpose.

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{
    apply_symplectic, beam_splitter, epr_state, permute, purify, tensor,
    BeamSplitterConvention, GaussianState, PHYSICAL_TOL,
};
use crate::linalg::Matrix;

/// Correlations at or below this magnitude count as zero.
const ZERO_CORRELATION_TOL: f64 = 1e-12;
/// Bisection tolerance of the boundary search.
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeAttackParams {
    pub v_e1: f64,
    pub v_e2: f64,
    pub c_x: f64,
    pub c_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackClass {
    Unphysical,
    /// Uncorrelated thermal ancillas, `C_x = C_p = 0`.
    SeparableIndependent,
    Separable,
    Entangled,
}

impl AttackClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackClass::Unphysical => "unphysical",
            AttackClass::SeparableIndependent => "independent",
            AttackClass::Separable => "separable",
            AttackClass::Entangled => "entangled",
        }
    }

    pub fn is_physical(self) -> bool {
        self != AttackClass::Unphysical
    }
}

impl core::fmt::Display for AttackClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which region of the correlation plane a boundary search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Physical,
    /// Physical and with a positive partial transpose.
    Separable,
}

impl TwoModeAttackParams {
    pub fn new(v_e1: f64, v_e2: f64, c_x: f64, c_p: f64) -> Result<Self> {
        for (name, v) in [("v_e1", v_e1), ("v_e2", v_e2)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be a finite value >= 1, got {v}")));
            }
        }
        if !c_x.is_finite() || !c_p.is_finite() {
            return Err(invalid("correlations must be finite"));
        }
        Ok(TwoModeAttackParams {
            v_e1,
            v_e2,
            c_x,
            c_p,
        })
    }

    /// Symmetric attack: both ancillas of variance `v_e`, correlations
    /// `(c_x, c_p)`.
    pub fn symmetric(v_e: f64, c_x: f64, c_p: f64) -> Result<Self> {
        Self::new(v_e, v_e, c_x, c_p)
    }

    pub fn to_state(&self) -> GaussianState {
        let (v1, v2, cx, cp) = (self.v_e1, self.v_e2, self.c_x, self.c_p);
        GaussianState::new(Matrix::from_rows(&[
            &[v1, 0.0, cx, 0.0],
            &[0.0, v1, 0.0, cp],
            &[cx, 0.0, v2, 0.0],
            &[0.0, cp, 0.0, v2],
        ]))
        .expect("attack covariance is symmetric by construction")
    }

    /// `V_E1·V_E2 > C_x²` and `V_E1·V_E2 > C_p²`: the matrix is positive
    /// definite.
    pub fn minors_positive(&self) -> bool {
        let prod = self.v_e1 * self.v_e2;
        prod > self.c_x * self.c_x && prod > self.c_p * self.c_p
    }

    fn determinant(&self) -> f64 {
        let prod = self.v_e1 * self.v_e2;
        (prod - self.c_x * self.c_x) * (prod - self.c_p * self.c_p)
    }

    /// Smallest symplectic eigenvalue, `√(½(Δ − √(Δ² − 4 det)))` with
    /// `Δ = V_E1² + V_E2² + 2 C_x C_p`.
    pub fn nu_minus(&self) -> Result<f64> {
        let delta = self.v_e1 * self.v_e1 + self.v_e2 * self.v_e2 + 2.0 * self.c_x * self.c_p;
        smaller_eigenvalue(delta, self.determinant())
    }

    /// Smallest symplectic eigenvalue of the partial transpose (`C_p → −C_p`).
    pub fn nu_tilde_minus(&self) -> Result<f64> {
        let delta = self.v_e1 * self.v_e1 + self.v_e2 * self.v_e2 - 2.0 * self.c_x * self.c_p;
        smaller_eigenvalue(delta, self.determinant())
    }

    pub fn is_physical(&self) -> bool {
        self.minors_positive()
            && self
                .nu_minus()
                .map(|nu| nu >= 1.0 - PHYSICAL_TOL)
                .unwrap_or(false)
    }

    /// [`Error::Unphysical`] naming the violated constraint, if any.
    pub fn check_physical(&self) -> Result<()> {
        if !self.minors_positive() {
            return Err(Error::Unphysical(format!(
                "nu_minus < 1 (covariance not positive definite: V_E1*V_E2 <= max(C_x^2, C_p^2)) at {self}"
            )));
        }
        match self.nu_minus() {
            Ok(nu) if nu >= 1.0 - PHYSICAL_TOL => Ok(()),
            Ok(nu) => Err(Error::Unphysical(format!(
                "nu_minus < 1 (nu_minus = {nu}) at {self}"
            ))),
            Err(_) => Err(Error::Unphysical(format!(
                "nu_minus < 1 (complex symplectic spectrum) at {self}"
            ))),
        }
    }

    pub fn is_separable(&self) -> bool {
        self.is_physical()
            && self
                .nu_tilde_minus()
                .map(|nu| nu >= 1.0 - PHYSICAL_TOL)
                .unwrap_or(false)
    }

    pub fn classify(&self) -> AttackClass {
        if !self.is_physical() {
            return AttackClass::Unphysical;
        }
        match self.nu_tilde_minus() {
            Ok(nu) if nu >= 1.0 - PHYSICAL_TOL => {
                if self.c_x.abs() <= ZERO_CORRELATION_TOL && self.c_p.abs() <= ZERO_CORRELATION_TOL {
                    AttackClass::SeparableIndependent
                } else {
                    AttackClass::Separable
                }
            }
            _ => AttackClass::Entangled,
        }
    }

    fn satisfies(&self, criterion: Criterion) -> bool {
        match criterion {
            Criterion::Physical => self.is_physical(),
            Criterion::Separable => self.is_separable(),
        }
    }
}

impl core::fmt::Display for TwoModeAttackParams {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "(V_E1={}, V_E2={}, C_x={}, C_p={})",
            self.v_e1, self.v_e2, self.c_x, self.c_p
        )
    }
}

fn smaller_eigenvalue(delta: f64, det: f64) -> Result<f64> {
    let inner = delta * delta - 4.0 * det;
    let scale = (delta * delta).max(1.0);
    if inner < -1e-12 * scale {
        return Err(Error::NumericalDomain(format!(
            "negative radicand {inner:e} in symplectic eigenvalue"
        )));
    }
    let outer = 0.5 * (delta - libm::sqrt(inner.max(0.0)));
    if outer < -1e-12 * delta.abs().max(1.0) {
        return Err(Error::NumericalDomain(format!(
            "negative squared symplectic eigenvalue {outer:e}"
        )));
    }
    Ok(libm::sqrt(outer.max(0.0)))
}

/// Largest `t ≥ 0` such that `(C_x, C_p) = t·(u_x, u_p)` satisfies
/// `criterion`, by bisection to `1e-9`. The direction is not normalized.
///
/// Both regions are convex and contain the origin, so the admissible `t`
/// form an interval `[0, t*]`.
pub fn max_correlation_on_ray(
    v_e1: f64,
    v_e2: f64,
    direction: (f64, f64),
    criterion: Criterion,
) -> Result<f64> {
    let (ux, up) = direction;
    if !ux.is_finite() || !up.is_finite() || (ux == 0.0 && up == 0.0) {
        return Err(invalid("ray direction must be finite and non-zero"));
    }
    TwoModeAttackParams::new(v_e1, v_e2, 0.0, 0.0)?;
    // A vacuum ancilla admits no correlation with anything.
    if v_e1 == 1.0 || v_e2 == 1.0 {
        return Ok(0.0);
    }
    let at = |t: f64| TwoModeAttackParams {
        v_e1,
        v_e2,
        c_x: t * ux,
        c_p: t * up,
    };
    let mut lo = 0.0;
    let mut hi = libm::sqrt(v_e1 * v_e2) / ux.abs().max(up.abs());
    while hi - lo > BOUNDARY_TOL {
        let mid = 0.5 * (lo + hi);
        if at(mid).satisfies(criterion) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A pure four-mode state `(E₁, E₂, e₁, e₂)` whose first two modes carry
/// the attack covariance, obtained by purifying its Williamson form.
pub fn dilate_attack(params: &TwoModeAttackParams) -> Result<GaussianState> {
    params
        .check_physical()
        .map_err(|e| invalid(format!("cannot dilate: {e}")))?;
    purify(&params.to_state())
}

/// Explicit dilation of the symmetric attack `C_x = C_p = c`: EPR pairs of
/// variance `V_E + c` and `V_E − c`, with one arm of each mixed on a
/// balanced beam splitter. Modes are returned as `(E₁, E₂, e₁, e₂)`.
pub fn dilate_optimal_symmetric(v_e: f64, c_opt: f64) -> Result<GaussianState> {
    if !v_e.is_finite() || !c_opt.is_finite() {
        return Err(invalid("dilation parameters must be finite"));
    }
    let (v1, v2) = (v_e + c_opt, v_e - c_opt);
    if !(v1 >= 1.0) || !(v2 >= 1.0) {
        return Err(invalid(format!(
            "V_E ± C_opt must both be >= 1, got {v1} and {v2}"
        )));
    }
    // Modes: 0, 1 = first EPR pair; 2, 3 = second.
    let pairs = tensor(&epr_state(v1)?, &epr_state(v2)?);
    let bs = beam_splitter(4, 0.5, 0, 2, BeamSplitterConvention::Reflection)?;
    let mixed = apply_symplectic(&pairs, &bs)?;
    permute(&mixed, &[0, 2, 1, 3])
}
