use crate::basis::FockBasis;
use crate::modes::ModeGrid;
use crate::sparse::SparseOperator;
use crate::{Error, Result};
use nelson_core::model::{coupling_v, Configuration, SystemConfig};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

type C = Complex64;

fn check_len(f: &[C], basis: &FockBasis) -> Result<()> {
    if f.len() != basis.n_modes {
        return Err(Error::Invalid(format!("{} amplitudes for {} modes", f.len(), basis.n_modes)));
    }
    Ok(())
}

/// a(f) = Σ_m f̄_m a_m.
pub fn annihilation_op(f: &[C], basis: &FockBasis) -> Result<SparseOperator> {
    check_len(f, basis)?;
    let mut t = Vec::new();
    let mut occ = vec![0u16; basis.n_modes];
    for j in 0..basis.dim() {
        occ.copy_from_slice(basis.state(j));
        for m in 0..basis.n_modes {
            let n = occ[m];
            if n == 0 || f[m] == C::new(0.0, 0.0) {
                continue;
            }
            occ[m] -= 1;
            if let Some(i) = basis.index_of(&occ) {
                t.push((i, j, f[m].conj() * (n as f64).sqrt()));
            }
            occ[m] += 1;
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), t))
}

/// a(f)† = Σ_m f_m a_m†.
pub fn creation_op(f: &[C], basis: &FockBasis) -> Result<SparseOperator> {
    Ok(annihilation_op(f, basis)?.adjoint())
}

/// Φ(f) = (a(f) + a(f)†)/√2.
pub fn field_op(f: &[C], basis: &FockBasis) -> Result<SparseOperator> {
    let a = annihilation_op(f, basis)?;
    Ok(a.add(&a.adjoint()).scale(C::new(FRAC_1_SQRT_2, 0.0)))
}

/// dΓ(ω) = Σ_m ω_m n_m.
pub fn second_quantization(omega: &[f64], basis: &FockBasis) -> Result<SparseOperator> {
    if omega.len() != basis.n_modes {
        return Err(Error::Invalid(format!("{} frequencies for {} modes", omega.len(), basis.n_modes)));
    }
    let d: Vec<f64> = (0..basis.dim())
        .map(|i| basis.state(i).iter().zip(omega).map(|(&n, w)| n as f64 * w).sum())
        .collect();
    Ok(SparseOperator::diagonal(&d))
}

/// z_m = √w_m |k_m| v(x, k_m) on a 3D grid.
pub fn coupling_amplitudes(x: &Configuration, grid: &ModeGrid, cfg: &SystemConfig) -> Result<Vec<C>> {
    if grid.dim != 3 {
        return Err(Error::Invalid("particle configurations live in 3D; the mode grid must be 3D".into()));
    }
    grid.modes
        .iter()
        .map(|m| {
            let k = [m.k[0], m.k[1], m.k[2]];
            let kabs = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            Ok(coupling_v(x, k, cfg)? * (m.weight.sqrt() * kabs))
        })
        .collect()
}

/// dΓ(ω) + Φ(z).
pub fn van_hove_from_amplitudes(z: &[C], omega: &[f64], basis: &FockBasis) -> Result<SparseOperator> {
    Ok(second_quantization(omega, basis)?.add(&field_op(z, basis)?))
}

/// H_fib(x) = dΓ(ω) + Φ(z(x)).
pub fn van_hove_hamiltonian(
    x: &Configuration,
    grid: &ModeGrid,
    basis: &FockBasis,
    cfg: &SystemConfig,
) -> Result<SparseOperator> {
    if grid.len() != basis.n_modes {
        return Err(Error::Invalid("mode grid and Fock basis disagree on the mode count".into()));
    }
    let z = coupling_amplitudes(x, grid, cfg)?;
    van_hove_from_amplitudes(&z, &grid.omegas(), basis)
}

/// α = −½ Σ_m |z_m|²/ω_m, the bottom of the untruncated fibered spectrum.
pub fn discrete_alpha(z: &[C], omega: &[f64]) -> f64 {
    -0.5 * z.iter().zip(omega).map(|(z, w)| z.norm_sqr() / w).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_matrix_elements() {
        let b = FockBasis::new(1, 4, 4).unwrap();
        let a = annihilation_op(&[C::new(1.0, 0.0)], &b).unwrap();
        assert!((a.get(0, 1) - C::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a.get(1, 2) - C::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(a.apply(&[C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)])[0], C::new(0.0, 0.0));
        let phi = field_op(&[C::new(1.0, 0.0)], &b).unwrap();
        assert!((phi.get(2, 3).re - (3.0f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!(phi.is_hermitian());
        let n = second_quantization(&[0.7], &b).unwrap();
        assert!((n.get(3, 3).re - 2.1).abs() < 1e-15);
        assert_eq!(n.get(0, 0).re, 0.0);
    }

    #[test]
    fn zero_field_is_zero() {
        let b = FockBasis::new(2, 3, 4).unwrap();
        assert_eq!(field_op(&[C::new(0.0, 0.0); 2], &b).unwrap().nnz(), 0);
    }

    #[test]
    fn antilinear_in_the_amplitude() {
        let b = FockBasis::new(1, 3, 3).unwrap();
        let a = annihilation_op(&[C::new(0.0, 2.0)], &b).unwrap();
        assert_eq!(a.get(0, 1), C::new(0.0, -2.0));
    }
}
