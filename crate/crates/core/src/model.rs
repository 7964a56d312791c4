//! Smeared-charge electrostatics of N particles coupled to a massless scalar
//! field through a sharp-cutoff form factor.
//!
//! Sign convention: the pair potential is the k-integral with a leading minus
//! sign, V_ij = −e_i e_j ∫ (2π)⁻³ e^{ik·r}/|k|², so like charges attract.

use crate::error::{Error, Result};
use crate::special::{darwin_g1, darwin_g2, si_over_x, si_over_x_deriv};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// (2π)^{-3/2}, the height of the form factor inside the shell.
pub const FORM_FACTOR_HEIGHT: f64 = 0.063_493_635_934_240_97;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFactor {
    pub lambda_uv: f64,
    pub sigma_ir: f64,
}

impl FormFactor {
    pub fn new(lambda_uv: f64, sigma_ir: f64) -> Result<Self> {
        if !(lambda_uv > 0.0 && lambda_uv.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_uv must be positive, got {lambda_uv}")));
        }
        if !(sigma_ir >= 0.0 && sigma_ir < lambda_uv) {
            return Err(Error::InvalidParameter(format!(
                "sigma_ir must satisfy 0 <= sigma < lambda, got sigma={sigma_ir}, lambda={lambda_uv}"
            )));
        }
        Ok(FormFactor { lambda_uv, sigma_ir })
    }

    /// φ̂_σ(|k|); the shell is open, so both boundaries map to 0.
    pub fn hat(&self, k_abs: f64) -> f64 {
        form_factor_hat(k_abs, self)
    }
}

pub fn form_factor_hat(k_abs: f64, ff: &FormFactor) -> f64 {
    if k_abs > ff.sigma_ir && k_abs < ff.lambda_uv {
        FORM_FACTOR_HEIGHT
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    pub charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub particles: Vec<ParticleSpec>,
    pub form_factor: FormFactor,
    pub epsilon: f64,
}

impl SystemConfig {
    pub fn new(charges: &[f64], form_factor: FormFactor, epsilon: f64) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::InvalidParameter("at least one particle is required".into()));
        }
        if let Some(c) = charges.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("charge must be finite, got {c}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(SystemConfig {
            particles: charges.iter().map(|&charge| ParticleSpec { charge }).collect(),
            form_factor,
            epsilon,
        })
    }

    pub fn n(&self) -> usize {
        self.particles.len()
    }

    pub fn charge(&self, j: usize) -> f64 {
        self.particles[j].charge
    }

    pub fn charges(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.charge).collect()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        SystemConfig::new(&self.charges(), self.form_factor, epsilon)
    }

    pub fn with_form_factor(&self, ff: FormFactor) -> Self {
        SystemConfig { form_factor: ff, ..self.clone() }
    }
}

/// Particle positions, flattened as x ∈ R^{3N}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<f64>,
}

impl Configuration {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() || !positions.len().is_multiple_of(3) {
            return Err(Error::InvalidParameter(format!(
                "position vector length must be a positive multiple of 3, got {}",
                positions.len()
            )));
        }
        Ok(Configuration { positions })
    }

    pub fn from_points(points: &[[f64; 3]]) -> Self {
        Configuration { positions: points.iter().flatten().copied().collect() }
    }

    pub fn n(&self) -> usize {
        self.positions.len() / 3
    }

    pub fn point(&self, j: usize) -> [f64; 3] {
        [self.positions[3 * j], self.positions[3 * j + 1], self.positions[3 * j + 2]]
    }

    fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.n() != cfg.n() || self.positions.len() != 3 * cfg.n() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} coordinates but the system has {} particles",
                self.positions.len(),
                cfg.n()
            )));
        }
        Ok(())
    }
}

/// A point (x, p) of the effective phase space; p is also the velocity in
/// the leading-order dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: Configuration,
    pub p: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(x: Configuration, p: Vec<f64>) -> Result<Self> {
        if p.len() != x.positions.len() {
            return Err(Error::InvalidParameter(format!(
                "momentum length {} does not match position length {}",
                p.len(),
                x.positions.len()
            )));
        }
        Ok(PhaseSpacePoint { x, p })
    }

    pub fn momentum(&self, j: usize) -> [f64; 3] {
        [self.p[3 * j], self.p[3 * j + 1], self.p[3 * j + 2]]
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// v(x, k) = Σ_j e_j e^{ik·x_j} φ̂_σ(k) / |k|^{3/2}.
pub fn coupling_v(x: &Configuration, k: [f64; 3], cfg: &SystemConfig) -> Result<Complex64> {
    x.check(cfg)?;
    let kabs = norm(k);
    if kabs == 0.0 {
        return Err(Error::Domain("coupling evaluated at k = 0".into()));
    }
    let amp = cfg.form_factor.hat(kabs) / kabs.powf(1.5);
    if amp == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..cfg.n() {
        let xj = x.point(j);
        let ph = k[0] * xj[0] + k[1] * xj[1] + k[2] * xj[2];
        s += Complex64::new(ph.cos(), ph.sin()) * cfg.charge(j);
    }
    Ok(s * amp)
}

/// V_ij(r) = −e_i e_j [Si(Λr) − Si(σr)] / (2π² r), continuous at r = 0.
pub fn pair_potential(r: f64, e_i: f64, e_j: f64, ff: &FormFactor) -> f64 {
    let (l, s) = (ff.lambda_uv, ff.sigma_ir);
    let shell = l * si_over_x(l * r) - if s > 0.0 { s * si_over_x(s * r) } else { 0.0 };
    -e_i * e_j * shell / (2.0 * PI * PI)
}

/// dV_ij/dr.
pub fn pair_potential_deriv(r: f64, e_i: f64, e_j: f64, ff: &FormFactor) -> f64 {
    let (l, s) = (ff.lambda_uv, ff.sigma_ir);
    let shell = l * l * si_over_x_deriv(l * r) - if s > 0.0 { s * s * si_over_x_deriv(s * r) } else { 0.0 };
    -e_i * e_j * shell / (2.0 * PI * PI)
}

/// ẽ_j = e_j² (Λ − σ) / (2π²).
pub fn mass_renorm_etilde(j: usize, cfg: &SystemConfig) -> f64 {
    let ff = &cfg.form_factor;
    let e = cfg.charge(j);
    e * e * (ff.lambda_uv - ff.sigma_ir) / (2.0 * PI * PI)
}

/// Convention for the ε²-order kinetic correction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassConvention {
    /// m_jᵉ = 1 / (1 + ε² ẽ_j / 2).
    #[default]
    Standard,
    /// Kinetic factor 1 − ε² ẽ_j / 3, the value obtained by eliminating the
    /// field from the classical coupled Lagrangian. Diagnostic only.
    FieldElimination,
}

/// m_jᵉ = 1 / (1 + ε² ẽ_j / 2).
pub fn renormalized_mass(j: usize, cfg: &SystemConfig) -> f64 {
    renormalized_mass_with(j, cfg, MassConvention::Standard)
}

pub fn renormalized_mass_with(j: usize, cfg: &SystemConfig, conv: MassConvention) -> f64 {
    let et = mass_renorm_etilde(j, cfg);
    let eps2 = cfg.epsilon * cfg.epsilon;
    match conv {
        MassConvention::Standard => 1.0 / (1.0 + 0.5 * eps2 * et),
        MassConvention::FieldElimination => 1.0 / (1.0 - eps2 * et / 3.0),
    }
}

/// e₀ = −½ Σ_j ẽ_j.
pub fn self_energy_e0(cfg: &SystemConfig) -> f64 {
    -0.5 * (0..cfg.n()).map(|j| mass_renorm_etilde(j, cfg)).sum::<f64>()
}

/// E(x) = ½ Σ_{i≠j} V_ij(|x_i − x_j|) + e₀.
pub fn ground_energy(x: &Configuration, cfg: &SystemConfig) -> Result<f64> {
    x.check(cfg)?;
    let ff = &cfg.form_factor;
    let mut e = self_energy_e0(cfg);
    for i in 0..cfg.n() {
        for j in (i + 1)..cfg.n() {
            let r = norm(sub(x.point(i), x.point(j)));
            e += pair_potential(r, cfg.charge(i), cfg.charge(j), ff);
        }
    }
    Ok(e)
}

/// ∇E ∈ R^{3N}; pair contributions are added antisymmetrically so the
/// components sum to zero up to rounding.
pub fn grad_ground_energy(x: &Configuration, cfg: &SystemConfig) -> Result<Vec<f64>> {
    x.check(cfg)?;
    let ff = &cfg.form_factor;
    let mut g = vec![0.0; x.positions.len()];
    for i in 0..cfg.n() {
        for j in (i + 1)..cfg.n() {
            let r = sub(x.point(i), x.point(j));
            let d = norm(r);
            if d == 0.0 {
                continue;
            }
            let dv = pair_potential_deriv(d, cfg.charge(i), cfg.charge(j), ff) / d;
            for a in 0..3 {
                let f = dv * r[a];
                g[3 * i + a] += f;
                g[3 * j + a] -= f;
            }
        }
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarwinTensor {
    pub value: [[f64; 3]; 3],
}

impl DarwinTensor {
    pub fn trace(&self) -> f64 {
        self.value[0][0] + self.value[1][1] + self.value[2][2]
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let t = &self.value;
        [
            t[0][0] * p[0] + t[0][1] * p[1] + t[0][2] * p[2],
            t[1][0] * p[0] + t[1][1] * p[1] + t[1][2] * p[2],
            t[2][0] * p[0] + t[2][1] * p[1] + t[2][2] * p[2],
        ]
    }

    pub fn bilinear(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let tb = self.apply(b);
        a[0] * tb[0] + a[1] * tb[1] + a[2] * tb[2]
    }
}

/// Radial profile of T(r) = (2π²)⁻¹ [A(ρ) δ − β(ρ) r rᵀ] and the radial
/// derivatives A′, β′.
fn darwin_profile(rho: f64, ff: &FormFactor) -> (f64, f64, f64, f64) {
    let (l, s) = (ff.lambda_uv, ff.sigma_ir);
    let (g1l, d1l) = darwin_g1(l * rho);
    let (g2l, d2l) = darwin_g2(l * rho);
    let mut a = l * g1l;
    let mut da = l * l * d1l;
    let mut b = l.powi(3) * g2l;
    let mut db = l.powi(4) * d2l;
    if s > 0.0 {
        let (g1s, d1s) = darwin_g1(s * rho);
        let (g2s, d2s) = darwin_g2(s * rho);
        a -= s * g1s;
        da -= s * s * d1s;
        b -= s.powi(3) * g2s;
        db -= s.powi(4) * d2s;
    }
    (a, da, b, db)
}

/// T_ab(r) = Re ∫_{σ<|k|<Λ} (2π)⁻³ e^{ik·r} κ_a κ_b / |k|² d³k.
pub fn darwin_tensor(r: [f64; 3], ff: &FormFactor) -> DarwinTensor {
    let rho = norm(r);
    let (a, _, beta, _) = darwin_profile(rho, ff);
    let c = 1.0 / (2.0 * PI * PI);
    let mut value = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { a } else { 0.0 };
            value[i][j] = c * (delta - beta * r[i] * r[j]);
        }
    }
    DarwinTensor { value }
}

/// ∂T_ab/∂r_c, indexed [c][a][b].
pub fn darwin_tensor_gradient(r: [f64; 3], ff: &FormFactor) -> [[[f64; 3]; 3]; 3] {
    let rho = norm(r);
    let (_, da, beta, dbeta) = darwin_profile(rho, ff);
    let c0 = 1.0 / (2.0 * PI * PI);
    let mut out = [[[0.0; 3]; 3]; 3];
    for c in 0..3 {
        let rc = if rho > 0.0 { r[c] / rho } else { 0.0 };
        for a in 0..3 {
            for b in 0..3 {
                let mut v = -dbeta * rc * r[a] * r[b];
                if a == b {
                    v += da * rc;
                }
                if a == c {
                    v -= beta * r[b];
                }
                if b == c {
                    v -= beta * r[a];
                }
                out[c][a][b] = c0 * v;
            }
        }
    }
    out
}

/// D(x, p) = −(ε²/2) Σ_{l≠j} e_l e_j p_l · T(x_j − x_l) p_j.
pub fn darwin_energy(pt: &PhaseSpacePoint, cfg: &SystemConfig) -> Result<f64> {
    pt.x.check(cfg)?;
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut d = 0.0;
    for l in 0..cfg.n() {
        for j in (l + 1)..cfg.n() {
            let t = darwin_tensor(sub(pt.x.point(j), pt.x.point(l)), &cfg.form_factor);
            // both orderings (l, j) and (j, l) give the same value
            d -= eps2 * cfg.charge(l) * cfg.charge(j) * t.bilinear(pt.momentum(l), pt.momentum(j));
        }
    }
    Ok(d)
}
