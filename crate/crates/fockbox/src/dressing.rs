//! Coherent dressing V = e^{iΦ(iṽ)}, ṽ_m = z_m/ω_m, which diagonalizes the
//! fibered Hamiltonian: H_fib = V dΓ(ω) V† + α.
//!
//! iΦ(iṽ) = Σ_m (β_m a_m† − β̄_m a_m) with β_m = −ṽ_m/√2 is a sum of
//! commuting single-mode generators, so V is a tensor product of
//! single-mode displacements. Each factor is exponentiated in a padded
//! single-mode space and only then restricted to the truncated basis; the
//! restriction is what breaks exact unitarity.

use crate::basis::FockBasis;
use crate::krylov::expm_multiply;
use crate::modes::ModeGrid;
use crate::ops::coupling_amplitudes;
use crate::sparse::SparseOperator;
use crate::{Error, Result};
use nalgebra::DMatrix;
use nelson_core::model::{Configuration, SystemConfig};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

type C = Complex64;

/// Levels added above n_max when exponentiating each single-mode factor.
pub const DEFAULT_PAD: usize = 16;
/// Unitarity defect above which the truncation is flagged.
pub const UNITARITY_TOL: f64 = 1e-6;

/// Coherent amplitudes α_m of V Ω, i.e. a_m V Ω = α_m V Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentVector {
    pub alpha: Vec<C>,
}

impl CoherentVector {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Dressing {
    pub operator: SparseOperator,
    pub coherent: CoherentVector,
    /// max |(V†V − I)_{ij}| over basis states in the vacuum sector.
    pub unitarity_defect: f64,
}

impl Dressing {
    pub fn flagged(&self) -> bool {
        self.unitarity_defect > UNITARITY_TOL
    }

    pub fn checked(self) -> Result<Self> {
        if self.flagged() {
            Err(Error::Truncation { defect: self.unitarity_defect, tol: UNITARITY_TOL })
        } else {
            Ok(self)
        }
    }

    /// max |(V†V − I)_{ij}| over basis states with total occupation ≤ `max_sector`.
    pub fn unitarity_defect_up_to(&self, basis: &FockBasis, max_sector: usize) -> f64 {
        unitarity_defect(&self.operator, basis, max_sector)
    }
}

fn unitarity_defect(v: &SparseOperator, basis: &FockBasis, max_sector: usize) -> f64 {
    let vd = v.to_dense();
    let cols: Vec<usize> = (0..basis.dim()).filter(|&i| basis.sector(i) <= max_sector).collect();
    let mut worst: f64 = 0.0;
    for &i in &cols {
        for &j in &cols {
            let g: C = (0..basis.dim()).map(|r| vd[(r, i)].conj() * vd[(r, j)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// exp(β a† − β̄ a) on the first `levels` oscillator states, by scaling and
/// squaring a Taylor series.
pub fn single_mode_displacement(beta: C, levels: usize) -> DMatrix<C> {
    let mut g = DMatrix::<C>::zeros(levels, levels);
    for n in 0..levels.saturating_sub(1) {
        let s = ((n + 1) as f64).sqrt();
        g[(n + 1, n)] = beta * s;
        g[(n, n + 1)] = -beta.conj() * s;
    }
    expm_dense(&g)
}

/// Dense matrix exponential by scaling and squaring.
pub fn expm_dense(g: &DMatrix<C>) -> DMatrix<C> {
    let n = g.nrows();
    let norm1 = (0..n).map(|c| (0..n).map(|r| g[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = g / C::new(2f64.powi(squarings), 0.0);
    let mut result = DMatrix::<C>::identity(n, n);
    let mut term = DMatrix::<C>::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / C::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// V for displacement amplitudes ṽ (so β = −ṽ/√2), restricted to `basis`.
pub fn dressing_from_amplitudes(v_tilde: &[C], basis: &FockBasis, pad: usize) -> Result<Dressing> {
    if v_tilde.len() != basis.n_modes {
        return Err(Error::Invalid(format!("{} amplitudes for {} modes", v_tilde.len(), basis.n_modes)));
    }
    let levels = basis.n_max + pad + 1;
    let beta: Vec<C> = v_tilde.iter().map(|v| -v * FRAC_1_SQRT_2).collect();
    let factors: Vec<DMatrix<C>> = beta.iter().map(|b| single_mode_displacement(*b, levels)).collect();
    let dim = basis.dim();
    let mut t = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let si = basis.state(i);
        for j in 0..dim {
            let sj = basis.state(j);
            let mut e = C::new(1.0, 0.0);
            for (m, f) in factors.iter().enumerate() {
                e *= f[(si[m] as usize, sj[m] as usize)];
                if e == C::new(0.0, 0.0) {
                    break;
                }
            }
            t.push((i, j, e));
        }
    }
    let operator = SparseOperator::from_triplets(dim, t);
    let unitarity_defect = unitarity_defect(&operator, basis, 0);
    Ok(Dressing { operator, coherent: CoherentVector { alpha: beta }, unitarity_defect })
}

/// V_σ(x) = e^{iΦ(iṽ(x))} with ṽ_m = z_m(x)/ω_m. Needs σ > 0.
pub fn dressing_displacement(
    x: &Configuration,
    grid: &ModeGrid,
    basis: &FockBasis,
    cfg: &SystemConfig,
) -> Result<Dressing> {
    if cfg.form_factor.sigma_ir <= 0.0 {
        return Err(Error::Invalid("the dressing needs an infrared cutoff sigma > 0".into()));
    }
    let z = coupling_amplitudes(x, grid, cfg)?;
    let v: Vec<C> = z.iter().zip(&grid.modes).map(|(z, m)| z / m.omega).collect();
    dressing_from_amplitudes(&v, basis, DEFAULT_PAD)
}

/// The generator iΦ(iṽ) = Σ_m (β_m a_m† − β̄_m a_m) on the truncated basis.
pub fn dressing_generator(v_tilde: &[C], basis: &FockBasis) -> Result<SparseOperator> {
    let beta: Vec<C> = v_tilde.iter().map(|v| -v * FRAC_1_SQRT_2).collect();
    let a = crate::ops::annihilation_op(&beta, basis)?;
    Ok(a.adjoint().sub(&a))
}

/// V ψ without forming V: exponential of the truncated generator times ψ.
pub fn dressing_apply(v_tilde: &[C], basis: &FockBasis, psi: &[C], tol: f64) -> Result<Vec<C>> {
    let g = dressing_generator(v_tilde, basis)?;
    expm_multiply(&g, psi, 1.0, tol)
}

/// max |(H V − V (dΓ(ω) + E))_{ij}| over rows i whose neighbours under the
/// field operator stay inside the basis; zero in the untruncated space.
pub fn intertwining_residual(
    h_fib: &SparseOperator,
    v: &SparseOperator,
    omega: &[f64],
    energy: f64,
    basis: &FockBasis,
) -> f64 {
    let hv = h_fib.matmul(v);
    let free: Vec<f64> = (0..basis.dim())
        .map(|i| basis.state(i).iter().zip(omega).map(|(&n, w)| n as f64 * w).sum::<f64>() + energy)
        .collect();
    let vh = v.matmul(&SparseOperator::diagonal(&free));
    hv.sub(&vh).max_abs_restricted(|r| basis.is_interior(r), |_| true)
}

/// max |V dΓ(ω) V† + E − H_fib| over entries whose row and column lie in
/// sectors ≤ `max_sector`. Entries near the truncation edge are O(1) off
/// because V† V ≠ I there, so pass a sector well below m_max.
pub fn conjugation_residual(
    h_fib: &SparseOperator,
    v: &SparseOperator,
    omega: &[f64],
    energy: f64,
    basis: &FockBasis,
    max_sector: usize,
) -> f64 {
    let free: Vec<f64> = (0..basis.dim())
        .map(|i| basis.state(i).iter().zip(omega).map(|(&n, w)| n as f64 * w).sum::<f64>())
        .collect();
    let conj = v.matmul(&SparseOperator::diagonal(&free)).matmul(&v.adjoint());
    let shifted = conj.add(&SparseOperator::identity(basis.dim()).scale(C::new(energy, 0.0)));
    shifted
        .sub(h_fib)
        .max_abs_restricted(|r| basis.sector(r) <= max_sector, |c| basis.sector(c) <= max_sector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{annihilation_op, van_hove_from_amplitudes};

    #[test]
    fn zero_coupling_is_identity() {
        let b = FockBasis::new(2, 3, 4).unwrap();
        let d = dressing_from_amplitudes(&[C::new(0.0, 0.0); 2], &b, 4).unwrap();
        assert!(d.operator.sub(&SparseOperator::identity(b.dim())).max_abs() < 1e-15);
        assert!(!d.flagged());
    }

    #[test]
    fn displacement_matches_coherent_state() {
        let beta = C::new(0.3, -0.4);
        let d = single_mode_displacement(beta, 40);
        let mut fact = 1.0;
        for n in 0..12 {
            if n > 0 {
                fact *= n as f64;
            }
            let want = (-0.5 * beta.norm_sqr()).exp() * beta.powu(n as u32) / fact.sqrt();
            assert!((d[(n, 0)] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn dressed_vacuum_is_annihilation_eigenvector() {
        let b = FockBasis::new(1, 12, 12).unwrap();
        let z = C::new(0.6, 0.2);
        let w = 0.9;
        let d = dressing_from_amplitudes(&[z / w], &b, DEFAULT_PAD).unwrap();
        let mut e0 = vec![C::new(0.0, 0.0); b.dim()];
        e0[0] = C::new(1.0, 0.0);
        let psi = d.operator.apply(&e0);
        let a = annihilation_op(&[C::new(1.0, 0.0)], &b).unwrap();
        let apsi = a.apply(&psi);
        let alpha = d.coherent.alpha[0];
        assert!((alpha - (-z / (w * 2f64.sqrt()))).norm() < 1e-15);
        for i in 0..b.dim() - 1 {
            assert!((apsi[i] - alpha * psi[i]).norm() < 1e-9);
        }
        let h = van_hove_from_amplitudes(&[z], &[w], &b).unwrap();
        let e = -z.norm_sqr() / (2.0 * w);
        assert!(intertwining_residual(&h, &d.operator, &[w], e, &b) < 1e-9);
    }

    #[test]
    fn action_only_variant_agrees() {
        let b = FockBasis::new(2, 10, 10).unwrap();
        let v = [C::new(0.3, 0.1), C::new(-0.2, 0.25)];
        let d = dressing_from_amplitudes(&v, &b, DEFAULT_PAD).unwrap();
        let mut e0 = vec![C::new(0.0, 0.0); b.dim()];
        e0[0] = C::new(1.0, 0.0);
        let x = dressing_apply(&v, &b, &e0, 1e-13).unwrap();
        let y = d.operator.apply(&e0);
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }
}
