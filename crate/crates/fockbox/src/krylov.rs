use crate::sparse::{dot, norm, SparseOperator};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

type C = Complex64;

const KRYLOV_DIM: usize = 30;

/// e^{tA} ψ for a general operator A by a scaled Taylor series; each substep
/// keeps ‖τA‖ below one and sums until terms fall under `tol`·‖ψ‖.
pub fn expm_multiply(a: &SparseOperator, psi: &[C], t: f64, tol: f64) -> Result<Vec<C>> {
    if psi.len() != a.dim() {
        return Err(Error::Invalid(format!("vector of length {} for dimension {}", psi.len(), a.dim())));
    }
    let bound = a.norm_bound() * t.abs();
    let steps = bound.ceil().max(1.0) as usize;
    let tau = t / steps as f64;
    let mut y = psi.to_vec();
    let mut term = vec![C::new(0.0, 0.0); psi.len()];
    let mut next = vec![C::new(0.0, 0.0); psi.len()];
    for _ in 0..steps {
        let scale = norm(&y).max(f64::MIN_POSITIVE);
        term.copy_from_slice(&y);
        for k in 1..200 {
            a.matvec_into(&term, &mut next);
            let f = tau / k as f64;
            term.iter_mut().zip(&next).for_each(|(ti, ni)| *ti = ni * f);
            y.iter_mut().zip(&term).for_each(|(yi, ti)| *yi += ti);
            if norm(&term) < tol * scale {
                break;
            }
        }
    }
    Ok(y)
}

/// e^{−itH} ψ for Hermitian H by adaptive Lanczos substeps. The local error
/// estimate β_m |[e^{−iτT} e₁]_m| is held below `tol`·τ/|t|.
pub fn krylov_propagate(h: &SparseOperator, psi: &[C], t: f64, tol: f64) -> Result<Vec<C>> {
    let dim = h.dim();
    if psi.len() != dim {
        return Err(Error::Invalid(format!("vector of length {} for dimension {dim}", psi.len())));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let total = t.abs();
    let sign = t.signum();
    let mut y = psi.to_vec();
    let mut done = 0.0;
    let mut tau = total.min(1.0 / h.norm_bound().max(1e-300) * 10.0).max(total * 1e-3);
    let min_step = total * 1e-12;
    while done < total {
        tau = tau.min(total - done);
        let beta0 = norm(&y);
        if beta0 == 0.0 {
            return Ok(y);
        }
        let (q, alpha, beta, breakdown) = lanczos_basis(h, &y, beta0);
        let m = alpha.len();
        loop {
            let c = tridiag_exp_e1(&alpha, &beta[..m - 1], sign * tau);
            let err = if breakdown { 0.0 } else { beta[m - 1] * c[m - 1].norm() * beta0 };
            if err <= tol * tau / total.max(f64::MIN_POSITIVE) * beta0.max(1.0) {
                let mut out = vec![C::new(0.0, 0.0); dim];
                for (j, qj) in q.iter().enumerate() {
                    let cj = c[j] * beta0;
                    out.iter_mut().zip(qj).for_each(|(o, v)| *o += v * cj);
                }
                y = out;
                done += tau;
                if err < 0.1 * tol * tau / total {
                    tau *= 1.5;
                }
                break;
            }
            tau *= 0.5;
            if tau < min_step {
                return Err(Error::StepCollapse { step: tau, time: sign * done });
            }
        }
    }
    Ok(y)
}

/// Orthonormal Krylov vectors with the tridiagonal coefficients. `beta` has
/// one entry per vector; the last one couples to the first discarded vector.
fn lanczos_basis(h: &SparseOperator, y: &[C], beta0: f64) -> (Vec<Vec<C>>, Vec<f64>, Vec<f64>, bool) {
    let dim = h.dim();
    let m_cap = KRYLOV_DIM.min(dim);
    let mut q: Vec<Vec<C>> = vec![y.iter().map(|v| v / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![C::new(0.0, 0.0); dim];
    for j in 0..m_cap {
        h.matvec_into(&q[j], &mut w);
        alpha.push(dot(&q[j], &w).re);
        for _ in 0..2 {
            for v in &q {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        beta.push(b);
        if b < 1e-12 {
            return (q, alpha, beta, true);
        }
        if j + 1 < m_cap {
            q.push(w.iter().map(|x| x / b).collect());
        }
    }
    let exhausted = q.len() == dim;
    (q, alpha, beta, exhausted)
}

/// e^{−i s T} e₁ for the real symmetric tridiagonal T.
fn tridiag_exp_e1(alpha: &[f64], beta: &[f64], s: f64) -> Vec<C> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    C::from_polar(v, -s * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

/// e^{−itH} ψ by full Hermitian diagonalization; an oracle for small dimensions.
pub fn dense_propagate(h: &SparseOperator, psi: &[C], t: f64) -> Result<Vec<C>> {
    if h.dim() > 64 {
        return Err(Error::Invalid(format!("dense propagation limited to dimension 64, got {}", h.dim())));
    }
    let eig = SymmetricEigen::new(h.to_dense());
    let u = &eig.eigenvectors;
    let n = h.dim();
    let mut out = vec![C::new(0.0, 0.0); n];
    for k in 0..n {
        let c: C = (0..n).map(|i| u[(i, k)].conj() * psi[i]).sum::<C>() * C::from_polar(1.0, -t * eig.eigenvalues[k]);
        for i in 0..n {
            out[i] += u[(i, k)] * c;
        }
    }
    Ok(out)
}
