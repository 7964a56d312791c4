use crate::{Error, Result};
use fockbox::{second_quantization, FockBasis, SparseOperator};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModeLayout {
    /// `count` modes at the geometric midpoints of log-spaced shells on
    /// [σ, Λ], each weighted by its shell volume 4πk²Δk.
    LogSpaced { count: usize },
    Explicit { k: Vec<f64>, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModelSpec {
    pub length: f64,
    pub n_x: usize,
    pub charge: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub modes: ModeLayout,
    pub n_max: usize,
    pub m_max: usize,
    pub dim_budget: usize,
}

impl Default for ToyModelSpec {
    fn default() -> Self {
        ToyModelSpec {
            length: 40.0,
            n_x: 256,
            charge: 1.0,
            epsilon: 0.1,
            sigma: 0.1,
            lambda: 1.0,
            modes: ModeLayout::LogSpaced { count: 3 },
            n_max: 2,
            m_max: 6,
            dim_budget: 1 << 16,
        }
    }
}

impl ToyModelSpec {
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ToyModelSpec { epsilon, ..self.clone() }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        ToyModelSpec { sigma, ..self.clone() }
    }

    pub fn with_charge(&self, charge: f64) -> Self {
        ToyModelSpec { charge, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_x.is_power_of_two() || self.n_x < 2 {
            return Err(Error::Invalid(format!("n_x must be a power of two, got {}", self.n_x)));
        }
        if !(self.length > 0.0) {
            return Err(Error::Invalid("grid length must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.sigma > 0.0 && self.sigma < self.lambda) {
            return Err(Error::Invalid(format!("need 0 < sigma < lambda, got {} and {}", self.sigma, self.lambda)));
        }
        let (k, w) = self.mode_set()?;
        for (&k, &w) in k.iter().zip(&w) {
            if k < self.sigma * (1.0 - 1e-12) || k > self.lambda * (1.0 + 1e-12) {
                return Err(Error::Invalid(format!("mode {k} outside [sigma, lambda]")));
            }
            if !(w > 0.0) {
                return Err(Error::Invalid("mode weights must be positive".into()));
            }
        }
        let dim = self.dim()?;
        if dim > self.dim_budget {
            return Err(Error::Budget { dim, budget: self.dim_budget });
        }
        Ok(())
    }

    /// Mode wavenumbers (ω = k) and weights.
    pub fn mode_set(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.modes {
            ModeLayout::LogSpaced { count } => {
                if *count == 0 {
                    return Err(Error::Invalid("at least one mode is required".into()));
                }
                let (a, b) = (self.sigma.ln(), self.lambda.ln());
                let edges: Vec<f64> = (0..=*count).map(|i| (a + (b - a) * i as f64 / *count as f64).exp()).collect();
                let k: Vec<f64> = edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect();
                let w = edges.windows(2).zip(&k).map(|(e, k)| 4.0 * PI * k * k * (e[1] - e[0])).collect();
                Ok((k, w))
            }
            ModeLayout::Explicit { k, weights } => {
                if k.len() != weights.len() || k.is_empty() {
                    return Err(Error::Invalid("explicit modes need matching, non-empty k and weights".into()));
                }
                Ok((k.clone(), weights.clone()))
            }
        }
    }

    pub fn fock_basis(&self) -> Result<FockBasis> {
        let (k, _) = self.mode_set()?;
        Ok(FockBasis::new(k.len(), self.n_max, self.m_max)?)
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.n_x * self.fock_basis()?.dim())
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.length / self.n_x as f64;
        (0..self.n_x).map(|i| i as f64 * h).collect()
    }

    /// z_m(x) = e √w_m (2π)^{-3/2} k_m^{-1/2} e^{i k_m x}.
    pub fn coupling(&self, x: f64) -> Result<Vec<C>> {
        let (k, w) = self.mode_set()?;
        let c = self.charge * (2.0 * PI).powf(-1.5);
        Ok(k.iter().zip(&w).map(|(&k, &w)| C::from_polar(c * w.sqrt() / k.sqrt(), k * x)).collect())
    }

    /// Dressing amplitudes ṽ_m(x) = z_m(x)/ω_m.
    pub fn dressing_amplitudes(&self, x: f64) -> Result<Vec<C>> {
        let (k, _) = self.mode_set()?;
        Ok(self.coupling(x)?.iter().zip(&k).map(|(z, k)| z / k).collect())
    }

    /// Bottom of the untruncated fibered spectrum, −Σ|z_m|²/(2ω_m); constant in x here.
    pub fn fibered_ground_energy(&self, x: f64) -> Result<f64> {
        let (k, _) = self.mode_set()?;
        Ok(fockbox::discrete_alpha(&self.coupling(x)?, &k))
    }

    /// First row of the circulant kinetic matrix ε²p̂²/2, from an inverse FFT
    /// of its Fourier symbol.
    pub fn kinetic_kernel(&self) -> Vec<f64> {
        let n = self.n_x;
        let dq = 2.0 * PI / self.length;
        let mut sym: Vec<C> = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                let q = m * dq;
                C::new(0.5 * self.epsilon * self.epsilon * q * q, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut sym);
        sym.iter().map(|c| c.re / n as f64).collect()
    }
}

/// H = (ε²p̂²/2) ⊗ I + I ⊗ dΓ(ω) + Φ(z(x)), the coupling diagonal in x.
pub fn build_toy_hamiltonian(spec: &ToyModelSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let basis = spec.fock_basis()?;
    let df = basis.dim();
    let n = spec.n_x;
    let (k, _) = spec.mode_set()?;
    let kin = spec.kinetic_kernel();
    let hf = second_quantization(&k, &basis)?;
    let mut t = Vec::with_capacity(n * n * df + n * (hf.nnz() + 2 * df * k.len()));
    for i in 0..n {
        for j in 0..n {
            let c = kin[(i + n - j) % n];
            if c != 0.0 {
                for f in 0..df {
                    t.push((i * df + f, j * df + f, C::new(c, 0.0)));
                }
            }
        }
    }
    let annihilators: Vec<SparseOperator> = (0..k.len())
        .map(|m| {
            let mut e = vec![C::new(0.0, 0.0); k.len()];
            e[m] = C::new(1.0, 0.0);
            fockbox::annihilation_op(&e, &basis)
        })
        .collect::<std::result::Result<_, _>>()?;
    for (i, x) in spec.grid().into_iter().enumerate() {
        let z = spec.coupling(x)?;
        let off = i * df;
        for (r, c, v) in hf.triplets() {
            t.push((off + r, off + c, v));
        }
        for (m, a) in annihilators.iter().enumerate() {
            for (r, c, v) in a.triplets() {
                let g = z[m].conj() * v * FRAC_1_SQRT_2;
                t.push((off + r, off + c, g));
                t.push((off + c, off + r, g.conj()));
            }
        }
    }
    Ok(SparseOperator::from_triplets(n * df, t))
}
