use crate::toy::ToyModelSpec;
use crate::{Error, Result};
use fockbox::dressing::dressing_from_amplitudes;
use fockbox::dressing::DEFAULT_PAD;
use fockbox::SparseOperator;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

type C = Complex64;

/// x-fibered projector Σ_x |x⟩⟨x| ⊗ W(x) W(x)†, where the columns of W(x)
/// are an orthonormal basis of the range of the fiber projector.
#[derive(Clone, Debug)]
pub struct DressedProjector {
    pub sector: usize,
    pub dim_fock: usize,
    pub fibers: Vec<DMatrix<C>>,
    /// Largest dressing unitarity defect over the fibers.
    pub unitarity_defect: f64,
}

impl DressedProjector {
    pub fn dim(&self) -> usize {
        self.fibers.len() * self.dim_fock
    }

    pub fn rank_per_fiber(&self) -> usize {
        self.fibers.first().map_or(0, |w| w.ncols())
    }

    pub fn apply(&self, psi: &[C]) -> Vec<C> {
        let df = self.dim_fock;
        let mut out = vec![C::new(0.0, 0.0); psi.len()];
        out.par_chunks_mut(df).zip(psi.par_chunks(df)).zip(&self.fibers).for_each(|((o, p), w)| {
            for c in 0..w.ncols() {
                let a: C = (0..df).map(|r| w[(r, c)].conj() * p[r]).sum();
                for r in 0..df {
                    o[r] += w[(r, c)] * a;
                }
            }
        });
        out
    }

    /// ‖(I − P) ψ‖, computed from the complement directly.
    pub fn leakage(&self, psi: &[C]) -> f64 {
        let p = self.apply(psi);
        psi.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_operator(&self) -> SparseOperator {
        let df = self.dim_fock;
        let mut t = Vec::new();
        for (x, w) in self.fibers.iter().enumerate() {
            let p = w * w.adjoint();
            for r in 0..df {
                for c in 0..df {
                    t.push((x * df + r, x * df + c, p[(r, c)]));
                }
            }
        }
        SparseOperator::from_triplets(self.dim(), t)
    }

    /// Trace of the fiber projector at grid point `x`.
    pub fn fiber_trace(&self, x: usize) -> f64 {
        let w = &self.fibers[x];
        (0..w.ncols()).map(|c| w.column(c).norm_squared()).sum()
    }

    /// max over fibers of max |P² − P| and max |P − P†|.
    pub fn projector_defects(&self) -> (f64, f64) {
        self.fibers
            .iter()
            .map(|w| {
                let p = w * w.adjoint();
                let idem = (&p * &p - &p).iter().map(|v| v.norm()).fold(0.0, f64::max);
                let herm = (&p - p.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
                (idem, herm)
            })
            .fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }
}

/// Orthonormal basis of the column span via Gram-Schmidt, applied twice.
fn orthonormalize(cols: DMatrix<C>) -> DMatrix<C> {
    let mut q = cols;
    for c in 0..q.ncols() {
        for _ in 0..2 {
            for p in 0..c {
                let a = q.column(p).dotc(&q.column(c));
                let qp = q.column(p).clone_owned();
                q.column_mut(c).axpy(-a, &qp, C::new(1.0, 0.0));
            }
        }
        let n = q.column(c).norm();
        q.column_mut(c).unscale_mut(n);
    }
    q
}

/// π̂^M = ⊕_x V(x) Q_M V(x)† on the toy grid.
pub fn dressed_projector(spec: &ToyModelSpec, sector: usize) -> Result<DressedProjector> {
    spec.validate()?;
    let basis = spec.fock_basis()?;
    let cols = basis.sector_indices(sector);
    if cols.is_empty() {
        return Err(Error::Invalid(format!("sector {sector} is empty in this truncation")));
    }
    let df = basis.dim();
    let fibers: Vec<(DMatrix<C>, f64)> = spec
        .grid()
        .par_iter()
        .map(|&x| {
            let v = spec.dressing_amplitudes(x)?;
            let d = dressing_from_amplitudes(&v, &basis, DEFAULT_PAD)?;
            let vd = d.operator.to_dense();
            let w = DMatrix::from_fn(df, cols.len(), |r, c| vd[(r, cols[c])]);
            Ok((orthonormalize(w), d.unitarity_defect))
        })
        .collect::<Result<_>>()?;
    let unitarity_defect = fibers.iter().map(|f| f.1).fold(0.0, f64::max);
    Ok(DressedProjector { sector, dim_fock: df, fibers: fibers.into_iter().map(|f| f.0).collect(), unitarity_defect })
}

/// The undressed Q_M on every fiber.
pub fn bare_projector(spec: &ToyModelSpec, sector: usize) -> Result<DressedProjector> {
    spec.validate()?;
    let basis = spec.fock_basis()?;
    let cols = basis.sector_indices(sector);
    let df = basis.dim();
    let w = DMatrix::from_fn(df, cols.len(), |r, c| if r == cols[c] { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
    Ok(DressedProjector { sector, dim_fock: df, fibers: vec![w; spec.n_x], unitarity_defect: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ToyModelSpec {
        ToyModelSpec { n_x: 8, length: 10.0, ..ToyModelSpec::default() }
    }

    #[test]
    fn zero_coupling_gives_bare_projector() {
        let s = small().with_charge(0.0);
        let p = dressed_projector(&s, 0).unwrap();
        let q = bare_projector(&s, 0).unwrap();
        assert!(p.to_operator().sub(&q.to_operator()).max_abs() < 1e-15);
    }

    #[test]
    fn projector_contract_and_rank() {
        let s = small();
        let basis = s.fock_basis().unwrap();
        for m in 0..3 {
            let p = dressed_projector(&s, m).unwrap();
            let (idem, herm) = p.projector_defects();
            assert!(idem < 1e-10 && herm < 1e-12, "{idem} {herm}");
            for x in 0..s.n_x {
                assert!((p.fiber_trace(x) - basis.sector_indices(m).len() as f64).abs() < 1e-10);
            }
        }
    }
}
