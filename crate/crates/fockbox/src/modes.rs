use crate::{Error, Result};
use nelson_core::quadrature::ModeQuadrature;

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub k: Vec<f64>,
    pub weight: f64,
    pub omega: f64,
}

/// Discrete photon modes with quadrature weights and dispersion ω = |k|.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    pub modes: Vec<Mode>,
    pub dim: usize,
}

impl ModeGrid {
    pub fn new(modes: Vec<Mode>, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::Invalid(format!("mode dimension must be 1 or 3, got {dim}")));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.k.len() != dim {
                return Err(Error::Invalid(format!("mode {i} has {} components, expected {dim}", m.k.len())));
            }
            if !(m.omega > 0.0) || !(m.weight > 0.0) {
                return Err(Error::Invalid(format!("mode {i} needs omega > 0 and weight > 0")));
            }
        }
        Ok(ModeGrid { modes, dim })
    }

    /// 3D grid from a mode quadrature (nodes with |k| > 0 only).
    pub fn from_quadrature(q: &ModeQuadrature) -> Result<Self> {
        let modes = (0..q.len())
            .map(|i| Mode { k: q.k[i].to_vec(), weight: q.weights[i], omega: q.kabs[i] })
            .collect();
        ModeGrid::new(modes, 3)
    }

    /// One mode of wavevector `k` (3D) with unit weight.
    pub fn single(k: [f64; 3]) -> Result<Self> {
        let omega = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        ModeGrid::new(vec![Mode { k: k.to_vec(), weight: 1.0, omega }], 3)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }
}
