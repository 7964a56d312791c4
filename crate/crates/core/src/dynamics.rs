//! Classical flows of the effective Hamiltonians
//!
//!   h₀ = Σ p²/2 + E(x)                       (leading order)
//!   H  = Σ p²/(2mᵉ) + E(x) + D(x, p)         (with mass renormalization and Darwin term)
//!
//! Accelerations are stored along the trajectory, computed from the forces
//! and never by differencing positions.

use crate::error::{Error, Result};
use crate::model::{
    darwin_energy, darwin_tensor, darwin_tensor_gradient, grad_ground_energy, ground_energy, renormalized_mass_with,
    Configuration, MassConvention, PhaseSpacePoint, SystemConfig,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Leapfrog,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub darwin_enabled: bool,
    /// Maximum relative energy drift over the run before the step size is
    /// rejected.
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    #[serde(default)]
    pub mass_convention: MassConvention,
}

fn default_energy_tol() -> f64 {
    1e-6
}

impl IntegratorConfig {
    pub fn leapfrog(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            scheme: Scheme::Leapfrog,
            darwin_enabled: false,
            energy_tol: default_energy_tol(),
            mass_convention: MassConvention::Standard,
        }
    }

    pub fn rk4(dt: f64, darwin_enabled: bool) -> Self {
        IntegratorConfig {
            dt,
            scheme: Scheme::Rk4,
            darwin_enabled,
            energy_tol: default_energy_tol(),
            mass_convention: MassConvention::Standard,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseSpacePoint>,
    pub energies: Vec<f64>,
    /// ẍ ∈ R^{3N} at each time.
    pub accelerations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Largest spacing of the time grid.
    pub fn max_dt(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Single charge on x(t) = (A sin ωt, 0, 0), sampled every `dt` on
    /// [0, t_final], with exact velocities and accelerations.
    pub fn oscillator(amplitude: f64, omega: f64, dt: f64, t_final: f64, cfg: &SystemConfig) -> Result<Self> {
        if cfg.n() != 1 {
            return Err(Error::InvalidParameter("the oscillator preset needs exactly one particle".into()));
        }
        let n = steps_for(t_final, dt)?;
        let h = t_final / n as f64;
        let mut traj = Trajectory { times: vec![], states: vec![], energies: vec![], accelerations: vec![] };
        for i in 0..=n {
            let t = i as f64 * h;
            let (s, c) = (omega * t).sin_cos();
            let x = Configuration::from_points(&[[amplitude * s, 0.0, 0.0]]);
            let p = vec![amplitude * omega * c, 0.0, 0.0];
            let pt = PhaseSpacePoint { x, p };
            traj.energies.push(effective_hamiltonian(&pt, cfg, false)?);
            traj.states.push(pt);
            traj.accelerations.push(vec![-amplitude * omega * omega * s, 0.0, 0.0]);
            traj.times.push(t);
        }
        Ok(traj)
    }
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(((t_final / dt) - 1e-9).ceil().max(1.0) as usize)
}

/// h₀ or H at a phase-space point.
pub fn effective_hamiltonian(pt: &PhaseSpacePoint, cfg: &SystemConfig, darwin: bool) -> Result<f64> {
    effective_hamiltonian_with(pt, cfg, darwin, MassConvention::Standard)
}

pub fn effective_hamiltonian_with(
    pt: &PhaseSpacePoint,
    cfg: &SystemConfig,
    darwin: bool,
    conv: MassConvention,
) -> Result<f64> {
    let e = ground_energy(&pt.x, cfg)?;
    let mut kin = 0.0;
    for j in 0..cfg.n() {
        let p = pt.momentum(j);
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let m = if darwin { renormalized_mass_with(j, cfg, conv) } else { 1.0 };
        kin += 0.5 * p2 / m;
    }
    let d = if darwin { darwin_energy(pt, cfg)? } else { 0.0 };
    Ok(kin + e + d)
}

fn kinetic(pt: &PhaseSpacePoint) -> f64 {
    0.5 * pt.p.iter().map(|p| p * p).sum::<f64>()
}

fn sep(x: &Configuration, j: usize, l: usize) -> [f64; 3] {
    let (a, b) = (x.point(j), x.point(l));
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// ẋ = ∂H/∂p.
pub fn velocities(pt: &PhaseSpacePoint, cfg: &SystemConfig, darwin: bool, conv: MassConvention) -> Vec<f64> {
    if !darwin {
        return pt.p.clone();
    }
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut v = vec![0.0; pt.p.len()];
    for j in 0..cfg.n() {
        let m = renormalized_mass_with(j, cfg, conv);
        for a in 0..3 {
            v[3 * j + a] = pt.p[3 * j + a] / m;
        }
        for l in 0..cfg.n() {
            if l == j {
                continue;
            }
            let t = darwin_tensor(sep(&pt.x, j, l), &cfg.form_factor);
            let tp = t.apply(pt.momentum(l));
            let c = eps2 * cfg.charge(j) * cfg.charge(l);
            for a in 0..3 {
                v[3 * j + a] -= c * tp[a];
            }
        }
    }
    v
}

/// ṗ = −∂H/∂x.
pub fn forces(pt: &PhaseSpacePoint, cfg: &SystemConfig, darwin: bool) -> Result<Vec<f64>> {
    let mut f: Vec<f64> = grad_ground_energy(&pt.x, cfg)?.into_iter().map(|g| -g).collect();
    if darwin {
        let eps2 = cfg.epsilon * cfg.epsilon;
        for l in 0..cfg.n() {
            for j in (l + 1)..cfg.n() {
                let g = darwin_tensor_gradient(sep(&pt.x, j, l), &cfg.form_factor);
                let (pl, pj) = (pt.momentum(l), pt.momentum(j));
                let c = eps2 * cfg.charge(l) * cfg.charge(j);
                for cc in 0..3 {
                    let mut s = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            s += pl[a] * g[cc][a][b] * pj[b];
                        }
                    }
                    // D_lj = −c p_l·T(x_j − x_l)p_j, so −∂D/∂x_j = c ∂T
                    f[3 * j + cc] += c * s;
                    f[3 * l + cc] -= c * s;
                }
            }
        }
    }
    Ok(f)
}

/// ẍ along the flow of h₀ (darwin = false) or H (darwin = true).
pub fn accelerations(pt: &PhaseSpacePoint, cfg: &SystemConfig, darwin: bool, conv: MassConvention) -> Result<Vec<f64>> {
    let pdot = forces(pt, cfg, darwin)?;
    if !darwin {
        return Ok(pdot);
    }
    let xdot = velocities(pt, cfg, true, conv);
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut acc = vec![0.0; pt.p.len()];
    for j in 0..cfg.n() {
        let m = renormalized_mass_with(j, cfg, conv);
        for a in 0..3 {
            acc[3 * j + a] = pdot[3 * j + a] / m;
        }
        for l in 0..cfg.n() {
            if l == j {
                continue;
            }
            let r = sep(&pt.x, j, l);
            let t = darwin_tensor(r, &cfg.form_factor);
            let g = darwin_tensor_gradient(r, &cfg.form_factor);
            let rdot: Vec<f64> = (0..3).map(|c| xdot[3 * j + c] - xdot[3 * l + c]).collect();
            let pl = pt.momentum(l);
            let tpd = t.apply([pdot[3 * l], pdot[3 * l + 1], pdot[3 * l + 2]]);
            let c = eps2 * cfg.charge(j) * cfg.charge(l);
            for a in 0..3 {
                let mut dt_p = 0.0;
                for cc in 0..3 {
                    for b in 0..3 {
                        dt_p += g[cc][a][b] * rdot[cc] * pl[b];
                    }
                }
                acc[3 * j + a] -= c * (tpd[a] + dt_p);
            }
        }
    }
    Ok(acc)
}

/// Canonical momenta whose Darwin-flow velocities equal `v`.
pub fn momenta_for_velocities(
    x: &Configuration,
    v: &[f64],
    cfg: &SystemConfig,
    conv: MassConvention,
) -> Result<Vec<f64>> {
    let n = cfg.n();
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut m = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for j in 0..n {
        let mj = renormalized_mass_with(j, cfg, conv);
        for a in 0..3 {
            m[(3 * j + a, 3 * j + a)] = 1.0 / mj;
        }
        for l in 0..n {
            if l == j {
                continue;
            }
            let t = darwin_tensor(sep(x, j, l), &cfg.form_factor);
            let c = eps2 * cfg.charge(j) * cfg.charge(l);
            for a in 0..3 {
                for b in 0..3 {
                    m[(3 * j + a, 3 * l + b)] = -c * t.value[a][b];
                }
            }
        }
    }
    m.lu()
        .solve(&DVector::from_column_slice(v))
        .map(|p| p.as_slice().to_vec())
        .ok_or_else(|| Error::Singular("velocity-to-momentum map".into()))
}

/// Step-size heuristic dt ≈ 0.01 / sqrt(max curvature of E). The curvature of
/// a pair potential is largest at contact, |V″(0)| = |e_i e_j| Λ³/(18π²).
pub fn recommended_dt(cfg: &SystemConfig) -> f64 {
    let l3 = cfg.form_factor.lambda_uv.powi(3);
    let mut worst: f64 = 0.0;
    for j in 0..cfg.n() {
        let s: f64 = (0..cfg.n())
            .filter(|&l| l != j)
            .map(|l| (cfg.charge(j) * cfg.charge(l)).abs() * l3 / (18.0 * PI * PI))
            .sum();
        worst = worst.max(s);
    }
    if worst == 0.0 {
        0.01
    } else {
        (0.01 / worst.sqrt()).min(0.01)
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Integrate the effective flow from `start` over [0, t_final]. The step is
/// shrunk slightly so that an integer number of steps lands on t_final.
pub fn classical_flow(
    start: &PhaseSpacePoint,
    t_final: f64,
    icfg: &IntegratorConfig,
    cfg: &SystemConfig,
) -> Result<Trajectory> {
    if start.x.n() != cfg.n() || start.p.len() != 3 * cfg.n() {
        return Err(Error::InvalidParameter("start point does not match the system size".into()));
    }
    let n = steps_for(t_final, icfg.dt)?;
    let h = t_final / n as f64;
    let darwin = icfg.darwin_enabled;
    let conv = icfg.mass_convention;
    if darwin && icfg.scheme == Scheme::Leapfrog {
        return Err(Error::InvalidParameter(
            "leapfrog needs a separable Hamiltonian; use rk4 when the Darwin term is enabled".into(),
        ));
    }
    let h0 = effective_hamiltonian_with(start, cfg, darwin, conv)?;
    let scale = h0.abs().max(kinetic(start) + ground_energy(&start.x, cfg)?.abs());
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        energies: Vec::with_capacity(n + 1),
        accelerations: Vec::with_capacity(n + 1),
    };
    let mut pt = start.clone();
    let mut acc = accelerations(&pt, cfg, darwin, conv)?;
    traj.times.push(0.0);
    traj.states.push(pt.clone());
    traj.energies.push(h0);
    traj.accelerations.push(acc.clone());
    let mut worst = 0.0f64;
    for i in 1..=n {
        match icfg.scheme {
            Scheme::Leapfrog => {
                // acc holds −∇E at the current point
                let half = axpy(&pt.p, 0.5 * h, &acc);
                let x = Configuration { positions: axpy(&pt.x.positions, h, &half) };
                let f: Vec<f64> = grad_ground_energy(&x, cfg)?.into_iter().map(|g| -g).collect();
                let p = axpy(&half, 0.5 * h, &f);
                pt = PhaseSpacePoint { x, p };
                acc = f;
            }
            Scheme::Rk4 => {
                pt = rk4_step(&pt, h, cfg, darwin, conv)?;
                acc = accelerations(&pt, cfg, darwin, conv)?;
            }
        }
        let e = effective_hamiltonian_with(&pt, cfg, darwin, conv)?;
        worst = worst.max((e - h0).abs() / scale.max(f64::MIN_POSITIVE));
        if worst > icfg.energy_tol {
            return Err(Error::EnergyDrift { drift: worst, tol: icfg.energy_tol });
        }
        traj.times.push(i as f64 * h);
        traj.states.push(pt.clone());
        traj.energies.push(e);
        traj.accelerations.push(acc.clone());
    }
    Ok(traj)
}

fn rk4_step(
    pt: &PhaseSpacePoint,
    h: f64,
    cfg: &SystemConfig,
    darwin: bool,
    conv: MassConvention,
) -> Result<PhaseSpacePoint> {
    let deriv = |q: &PhaseSpacePoint| -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((velocities(q, cfg, darwin, conv), forces(q, cfg, darwin)?))
    };
    let shift = |q: &PhaseSpacePoint, a: f64, k: &(Vec<f64>, Vec<f64>)| PhaseSpacePoint {
        x: Configuration { positions: axpy(&q.x.positions, a, &k.0) },
        p: axpy(&q.p, a, &k.1),
    };
    let k1 = deriv(pt)?;
    let k2 = deriv(&shift(pt, 0.5 * h, &k1))?;
    let k3 = deriv(&shift(pt, 0.5 * h, &k2))?;
    let k4 = deriv(&shift(pt, h, &k3))?;
    let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0).collect()
    };
    let dx = comb(&k1.0, &k2.0, &k3.0, &k4.0);
    let dp = comb(&k1.1, &k2.1, &k3.1, &k4.1);
    Ok(PhaseSpacePoint {
        x: Configuration { positions: axpy(&pt.x.positions, h, &dx) },
        p: axpy(&pt.p, h, &dp),
    })
}

/// d̈(t) = Σ_j e_j ẍ_j(t) at each trajectory time.
pub fn dipole_acceleration(traj: &Trajectory, cfg: &SystemConfig) -> Result<Vec<[f64; 3]>> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    Ok(traj
        .accelerations
        .iter()
        .map(|acc| {
            let mut d = [0.0; 3];
            for j in 0..cfg.n() {
                for a in 0..3 {
                    d[a] += cfg.charge(j) * acc[3 * j + a];
                }
            }
            d
        })
        .collect())
}

/// d(t) = Σ_j e_j x_j(t).
pub fn dipole_moment(traj: &Trajectory, cfg: &SystemConfig) -> Vec<[f64; 3]> {
    traj.states
        .iter()
        .map(|s| {
            let mut d = [0.0; 3];
            for j in 0..cfg.n() {
                let x = s.x.point(j);
                for a in 0..3 {
                    d[a] += cfg.charge(j) * x[a];
                }
            }
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FormFactor;

    fn two_body(eps: f64) -> (SystemConfig, PhaseSpacePoint) {
        let cfg = SystemConfig::new(&[1.0, 1.5], FormFactor::new(1.0, 0.0).unwrap(), eps).unwrap();
        let x = Configuration::from_points(&[[0.0, 0.0, 0.0], [1.2, 0.3, -0.4]]);
        let pt = PhaseSpacePoint::new(x, vec![0.1, 0.5, 0.0, -0.2, -0.3, 0.4]).unwrap();
        (cfg, pt)
    }

    #[test]
    fn hamilton_equations_match_finite_differences() {
        let (cfg, pt) = two_body(0.3);
        let h = 1e-6;
        let v = velocities(&pt, &cfg, true, MassConvention::Standard);
        let f = forces(&pt, &cfg, true).unwrap();
        for i in 0..6 {
            let mut a = pt.clone();
            let mut b = pt.clone();
            a.p[i] += h;
            b.p[i] -= h;
            let fd = (effective_hamiltonian(&a, &cfg, true).unwrap() - effective_hamiltonian(&b, &cfg, true).unwrap()) / (2.0 * h);
            assert!((fd - v[i]).abs() < 1e-9);
            let mut a = pt.clone();
            let mut b = pt.clone();
            a.x.positions[i] += h;
            b.x.positions[i] -= h;
            let fd = (effective_hamiltonian(&a, &cfg, true).unwrap() - effective_hamiltonian(&b, &cfg, true).unwrap()) / (2.0 * h);
            assert!((fd + f[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn darwin_acceleration_matches_velocity_derivative() {
        let (cfg, pt) = two_body(0.3);
        let conv = MassConvention::Standard;
        let acc = accelerations(&pt, &cfg, true, conv).unwrap();
        let h = 1e-5;
        let xdot = velocities(&pt, &cfg, true, conv);
        let pdot = forces(&pt, &cfg, true).unwrap();
        let shifted = |s: f64| PhaseSpacePoint {
            x: Configuration { positions: axpy(&pt.x.positions, s, &xdot) },
            p: axpy(&pt.p, s, &pdot),
        };
        let vp = velocities(&shifted(h), &cfg, true, conv);
        let vm = velocities(&shifted(-h), &cfg, true, conv);
        for i in 0..6 {
            let fd = (vp[i] - vm[i]) / (2.0 * h);
            assert!((fd - acc[i]).abs() < 1e-8, "{i}: {fd} vs {}", acc[i]);
        }
    }

    #[test]
    fn momenta_for_velocities_inverts_velocity_map() {
        let (cfg, pt) = two_body(0.4);
        let v = velocities(&pt, &cfg, true, MassConvention::Standard);
        let p = momenta_for_velocities(&pt.x, &v, &cfg, MassConvention::Standard).unwrap();
        for i in 0..6 {
            assert!((p[i] - pt.p[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn leapfrog_rejects_darwin() {
        let (cfg, pt) = two_body(0.1);
        let mut icfg = IntegratorConfig::leapfrog(0.01);
        icfg.darwin_enabled = true;
        assert!(matches!(classical_flow(&pt, 1.0, &icfg, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let cfg = SystemConfig::new(&[5.0, 5.0], FormFactor::new(4.0, 0.0).unwrap(), 0.1).unwrap();
        let x = Configuration::from_points(&[[0.0; 3], [0.3, 0.0, 0.0]]);
        let pt = PhaseSpacePoint::new(x, vec![0.0; 6]).unwrap();
        let r = classical_flow(&pt, 5.0, &IntegratorConfig::rk4(0.5, true), &cfg);
        assert!(matches!(r, Err(Error::EnergyDrift { .. })));
    }

    #[test]
    fn oscillator_preset_is_consistent() {
        let cfg = SystemConfig::new(&[1.0], FormFactor::new(1.0, 0.0).unwrap(), 0.1).unwrap();
        let t = Trajectory::oscillator(0.5, 2.0, 0.01, 1.0, &cfg).unwrap();
        assert_eq!(t.len(), 101);
        assert!((t.t_final() - 1.0).abs() < 1e-15);
        let d = dipole_acceleration(&t, &cfg).unwrap();
        assert!((d[50][0] + 0.5 * 4.0 * (2.0f64 * 0.5).sin()).abs() < 1e-15);
    }
}
