use alloc::vec::Vec;

use super::{epr_state, GaussianState, SymplecticMatrix, PHYSICAL_TOL};
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_positive, Matrix};

/// `γ = S · (⊕ λₖ I₂) · Sᵀ` with `λ` in descending order.
#[derive(Debug, Clone)]
pub struct Williamson {
    pub symplectic: SymplecticMatrix,
    pub eigenvalues: Vec<f64>,
}

impl Williamson {
    /// `⊕ λₖ I₂`.
    pub fn normal_form(&self) -> Matrix {
        let diag: Vec<f64> = self.eigenvalues.iter().flat_map(|&l| [l, l]).collect();
        Matrix::from_diagonal(&diag)
    }

    /// Largest entry of `|S D Sᵀ − γ|`.
    pub fn reconstruction_residual(&self, state: &GaussianState) -> f64 {
        self.symplectic
            .matrix()
            .congruence(&self.normal_form())
            .max_abs_diff(state.cm())
    }
}

/// Williamson normal form of a positive-definite covariance matrix.
///
/// With `M = γ^{-1/2} Ω γ^{-1/2}` antisymmetric, an orthogonal `O` brings
/// `M` to `⊕ [[0, 1/λₖ], [−1/λₖ, 0]]`; then `S = γ^{1/2} O D^{-1/2}`.
/// `O` is assembled from the eigenvectors of `MᵀM` (eigenvalues `1/λₖ²`,
/// each doubled): for a unit `u` in an eigenspace, its partner is
/// `v = −M u λₖ`.
pub fn williamson_decompose(state: &GaussianState) -> Result<Williamson> {
    let n = state.n_modes();
    let dim = 2 * n;
    let cm = state.cm();
    let (vals, vecs) = cm.symmetric_eigen();
    check_positive(&vals, 1e-14)?;

    let spectral = |f: &dyn Fn(f64) -> f64| {
        let mut out = Matrix::zeros(dim, dim);
        for (k, &lam) in vals.iter().enumerate() {
            let fl = f(lam);
            for i in 0..dim {
                let vi = vecs[(i, k)] * fl;
                for j in 0..dim {
                    out[(i, j)] += vi * vecs[(j, k)];
                }
            }
        }
        out.symmetrized()
    };
    let half = spectral(&|v| libm::sqrt(v));
    let inv_half = spectral(&|v| 1.0 / libm::sqrt(v));

    let omega = super::symplectic_form(n);
    let m = inv_half.matmul(&omega).matmul(&inv_half);
    let mtm = m.transpose().matmul(&m);
    let (mu_sq, basis) = mtm.symmetric_eigen();

    // Smallest μ² first, so that λ = 1/μ comes out in descending order.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| mu_sq[a].total_cmp(&mu_sq[b]));

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut lambdas = Vec::with_capacity(n);
    for &k in &order {
        if columns.len() == dim {
            break;
        }
        let mut u: Vec<f64> = (0..dim).map(|i| basis[(i, k)]).collect();
        if !orthonormalize(&mut u, &columns) {
            continue;
        }
        let mu = libm::sqrt(quadratic_form(&mtm, &u).max(0.0));
        if !(mu > 0.0) {
            return Err(Error::NumericalDomain(
                "degenerate symplectic structure in Williamson decomposition".into(),
            ));
        }
        let mut v: Vec<f64> = (0..dim)
            .map(|i| -(0..dim).map(|j| m[(i, j)] * u[j]).sum::<f64>() / mu)
            .collect();
        columns.push(u);
        if !orthonormalize(&mut v, &columns) {
            return Err(Error::NumericalDomain(
                "failed to complete a symplectic pair in Williamson decomposition".into(),
            ));
        }
        columns.push(v);
        lambdas.push(1.0 / mu);
    }
    if columns.len() != dim {
        return Err(Error::NumericalDomain(
            "Williamson basis construction did not span the phase space".into(),
        ));
    }

    let o = Matrix::from_fn(dim, dim, |i, j| columns[j][i]);
    let d_inv_half: Vec<f64> = lambdas
        .iter()
        .flat_map(|&l| {
            let s = 1.0 / libm::sqrt(l);
            [s, s]
        })
        .collect();
    let s = half.matmul(&o).matmul(&Matrix::from_diagonal(&d_inv_half));

    // Keep the spectrum sorted even if near-degenerate pairs swapped order.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let perm: Vec<usize> = idx.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    let s = s.select(&(0..dim).collect::<Vec<_>>(), &perm);
    let eigenvalues = idx.iter().map(|&k| lambdas[k]).collect();

    Ok(Williamson {
        symplectic: SymplecticMatrix::new_unchecked(s),
        eigenvalues,
    })
}

fn quadratic_form(a: &Matrix, u: &[f64]) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| u[i] * (0..n).map(|j| a[(i, j)] * u[j]).sum::<f64>())
        .sum()
}

/// Gram–Schmidt `u` against `basis` (twice, for stability) and normalize.
/// Returns false if `u` is numerically inside the span of `basis`.
fn orthonormalize(u: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let initial = libm::sqrt(u.iter().map(|x| x * x).sum::<f64>());
    for _ in 0..2 {
        for b in basis {
            let dot: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in u.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
    }
    let norm = libm::sqrt(u.iter().map(|x| x * x).sum::<f64>());
    if !(norm > 1e-6 * initial.max(f64::MIN_POSITIVE)) {
        return false;
    }
    for x in u.iter_mut() {
        *x /= norm;
    }
    true
}

/// Symplectic eigenvalues this close to 1 are treated as exactly 1.
const PURE_SNAP: f64 = 1e-10;

/// Purification of an N-mode state on 2N modes.
///
/// Each Williamson mode `k` of the input is paired with ancilla `N + k` in
/// an EPR state of variance `λₖ`, and the input's symplectic map is applied
/// to the first N modes. The first N modes of the output reproduce the
/// input covariance matrix.
pub fn purify(state: &GaussianState) -> Result<GaussianState> {
    let n = state.n_modes();
    let w = williamson_decompose(state).map_err(|e| match e {
        Error::NumericalDomain(msg) => invalid(alloc::format!("cannot purify: {msg}")),
        other => other,
    })?;
    if w.eigenvalues.iter().any(|&l| l < 1.0 - PHYSICAL_TOL) {
        return Err(invalid("cannot purify an unphysical state"));
    }

    let mut pure = Matrix::zeros(4 * n, 4 * n);
    for (k, &lam) in w.eigenvalues.iter().enumerate() {
        // √(λ² − 1) amplifies roundoff near λ = 1; pure modes get vacuum
        // ancillas.
        let lam = if lam < 1.0 + PURE_SNAP { 1.0 } else { lam };
        let epr = epr_state(lam)?;
        let cm = epr.cm();
        let (a, b) = (2 * k, 2 * (n + k));
        for i in 0..2 {
            for j in 0..2 {
                pure[(a + i, a + j)] = cm[(i, j)];
                pure[(a + i, b + j)] = cm[(i, 2 + j)];
                pure[(b + i, a + j)] = cm[(2 + i, j)];
                pure[(b + i, b + j)] = cm[(2 + i, 2 + j)];
            }
        }
    }
    let lift = w.symplectic.matrix().direct_sum(&Matrix::identity(2 * n));
    Ok(GaussianState::from_symmetric(lift.congruence(&pure)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{reduce, symplectic_eigenvalues, tensor};

    fn attack_cm(v1: f64, v2: f64, cx: f64, cp: f64) -> GaussianState {
        GaussianState::new(Matrix::from_rows(&[
            &[v1, 0.0, cx, 0.0],
            &[0.0, v1, 0.0, cp],
            &[cx, 0.0, v2, 0.0],
            &[0.0, cp, 0.0, v2],
        ]))
        .unwrap()
    }

    #[test]
    fn thermal_decomposition() {
        let st = GaussianState::thermal(4.5).unwrap();
        let w = williamson_decompose(&st).unwrap();
        assert!((w.eigenvalues[0] - 4.5).abs() < 1e-12);
        assert!(w.symplectic.symplectic_residual() < 1e-10);
        assert!(w.reconstruction_residual(&st) <= 1e-8 * st.cm().max_abs());
    }

    #[test]
    fn epr_decomposition() {
        let st = epr_state(7.0).unwrap();
        let w = williamson_decompose(&st).unwrap();
        for l in &w.eigenvalues {
            assert!((l - 1.0).abs() < 1e-9);
        }
        assert!(w.symplectic.symplectic_residual() < 1e-10);
        assert!(w.reconstruction_residual(&st) <= 1e-8 * st.cm().max_abs());
    }

    #[test]
    fn anti_diagonal_attack_state() {
        // ν² = 9 − c² on the anti-diagonal, so c = 1 gives √8 twice.
        let st = attack_cm(3.0, 3.0, 1.0, -1.0);
        let w = williamson_decompose(&st).unwrap();
        assert!(w.symplectic.symplectic_residual() < 1e-10);
        assert!(w.reconstruction_residual(&st) <= 1e-8 * st.cm().max_abs());
        for l in &w.eigenvalues {
            assert!((l - libm::sqrt(8.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_positive_definite() {
        let st = GaussianState::new(Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])).unwrap();
        assert!(matches!(
            williamson_decompose(&st),
            Err(Error::NumericalDomain(_))
        ));
        assert!(matches!(purify(&st), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn purify_examples() {
        let th = GaussianState::thermal(3.0).unwrap();
        let p = purify(&th).unwrap();
        assert!(p.is_pure(1e-8));
        assert!(reduce(&p, &[0]).unwrap().cm().max_abs_diff(th.cm()) < 1e-8);
        assert!((p.cm()[(2, 2)] - 3.0).abs() < 1e-9);

        let epr = epr_state(5.0).unwrap();
        let p = purify(&epr).unwrap();
        let expected = tensor(&epr, &GaussianState::vacuum(2));
        assert!(p.cm().max_abs_diff(expected.cm()) < 1e-8);

        let att = attack_cm(3.0, 3.0, 2.0, 2.0);
        let p = purify(&att).unwrap();
        let nu = symplectic_eigenvalues(&p).unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-8), "{nu:?}");
        assert!(reduce(&p, &[0, 1]).unwrap().cm().max_abs_diff(att.cm()) < 1e-8);
    }

    #[test]
    fn purify_rejects_unphysical() {
        let st = GaussianState::new(Matrix::from_diagonal(&[0.5, 0.5])).unwrap();
        assert!(matches!(purify(&st), Err(Error::InvalidArgument(_))));
    }
}
