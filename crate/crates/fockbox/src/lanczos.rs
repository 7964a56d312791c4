use crate::sparse::{dot, norm, SparseOperator};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

type C = Complex64;

/// Krylov dimension between restarts.
const BLOCK: usize = 60;

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<C>,
    /// ‖H ψ − E ψ‖ for the returned unit vector.
    pub residual: f64,
    /// Matrix-vector products used.
    pub iterations: usize,
}

/// Deterministic start vector with weight on every basis state.
fn start_vector(dim: usize) -> Vec<C> {
    let mut v: Vec<C> = (0..dim)
        .map(|i| {
            let x = i as f64;
            C::new(1.0 / (1.0 + x).sqrt(), 0.1 * (0.37 * x).sin())
        })
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalization. Converged when the residual drops below `tol`.
pub fn lanczos_ground_state(h: &SparseOperator, tol: f64, max_iter: usize) -> Result<GroundState> {
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::Invalid("empty operator".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut v0 = start_vector(dim);
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    loop {
        let m_cap = BLOCK.min(dim);
        let mut basis: Vec<Vec<C>> = vec![v0.clone()];
        let mut alpha = Vec::with_capacity(m_cap);
        let mut beta: Vec<f64> = Vec::with_capacity(m_cap);
        let mut w = vec![C::new(0.0, 0.0); dim];
        for j in 0..m_cap {
            h.matvec_into(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = norm(&w);
            if j + 1 == m_cap || b < 1e-13 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
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
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tridiagonal");
        let mut y = vec![C::new(0.0, 0.0); dim];
        for (i, q) in basis.iter().enumerate().take(m) {
            let c = eig.eigenvectors[(i, imin)];
            y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += qi * c);
        }
        let n = norm(&y);
        y.iter_mut().for_each(|x| *x /= n);
        let hy = h.apply(&y);
        iterations += 1;
        let residual = hy.iter().zip(&y).map(|(a, b)| (a - b * theta).norm_sqr()).sum::<f64>().sqrt();
        best = best.min(residual);
        if residual < tol {
            return Ok(GroundState { energy: theta, vector: y, residual, iterations });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations, residual: best });
        }
        v0 = y;
    }
}
