//! Radiated one-photon amplitude, radiated energy and power along effective
//! classical flows, and the Gaussian phase-space ensembles they are averaged
//! over.
//!
//! Time integrals ∫₀ᵗ e^{is|k|/ε} g(s) ds use cubic Filon weights on the
//! trajectory grid. Mode sums are reduced per radial node in a fixed order
//! with compensated summation, so results do not depend on the thread count.

use crate::dynamics::{classical_flow, dipole_acceleration, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Configuration, PhaseSpacePoint, SystemConfig};
use crate::quadrature::{cubic_interp_weights, filon_weights, neumaier_sum, ModeQuadrature};
use crate::special::si;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceEnsemble {
    pub points: Vec<PhaseSpacePoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
}

/// Product-Gaussian samples around `center` with the given position and
/// momentum standard deviations. Zero spreads are allowed and reproduce the
/// center exactly.
pub fn sample_wigner_gaussian(
    center: &PhaseSpacePoint,
    position_spread: f64,
    momentum_spread: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    if !(position_spread >= 0.0 && momentum_spread >= 0.0) {
        return Err(Error::InvalidParameter("spreads must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = center
            .x
            .positions
            .iter()
            .map(|c| c + position_spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p: Vec<f64> = center.p.iter().map(|c| c + momentum_spread * rng.sample::<f64, _>(StandardNormal)).collect();
        points.push(PhaseSpacePoint { x: Configuration { positions: x }, p });
    }
    Ok(PhaseSpaceEnsemble { points, weights: vec![1.0 / n as f64; n], seed })
}

/// Weighted trajectories, one per ensemble member.
#[derive(Clone, Debug)]
pub struct EnsembleTrajectories {
    pub weights: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

impl EnsembleTrajectories {
    pub fn single(traj: Trajectory) -> Self {
        EnsembleTrajectories { weights: vec![1.0], trajectories: vec![traj] }
    }

    /// Flow every ensemble member; members are integrated in parallel and
    /// collected in input order.
    pub fn from_flows(
        ensemble: &PhaseSpaceEnsemble,
        t_final: f64,
        icfg: &IntegratorConfig,
        cfg: &SystemConfig,
    ) -> Result<Self> {
        let trajectories = ensemble
            .points
            .par_iter()
            .map(|p| classical_flow(p, t_final, icfg, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleTrajectories { weights: ensemble.weights.clone(), trajectories })
    }

    fn weighted<F: Fn(&Trajectory) -> Result<f64>>(&self, f: F) -> Result<f64> {
        let vals = self
            .weights
            .iter()
            .zip(&self.trajectories)
            .map(|(w, t)| Ok(w * f(t)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(neumaier_sum(vals))
    }
}

fn check_covers(traj: &Trajectory, t: f64) -> Result<()> {
    if traj.len() < 2 {
        return Err(Error::InvalidParameter("trajectory needs at least two samples".into()));
    }
    if t < 0.0 || t > traj.t_final() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "time {t} outside trajectory range [0, {}]",
            traj.t_final()
        )));
    }
    Ok(())
}

fn check_resolution(traj: &Trajectory, k_abs: f64, eps: f64) -> Result<()> {
    let limit = eps / (4.0 * k_abs);
    let dt = traj.max_dt();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::UnderResolved { dt, limit });
    }
    Ok(())
}

/// Prefactor −(ε/√2) φ̂_σ(|k|) |k|^{-3/2} of the amplitude.
fn amplitude_prefactor(k_abs: f64, cfg: &SystemConfig) -> f64 {
    -(cfg.epsilon / SQRT_2) * cfg.form_factor.hat(k_abs) / k_abs.powf(1.5)
}

fn dot(a: [f64; 3], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Time integral Σ_j e_j κ·∫₀ᵗ e^{is|k|/ε} e^{−ik·x_j(s)} ẍ_j(s) ds, with the
/// retardation phase dropped under the dipole approximation.
fn source_integral(k: [f64; 3], weights: &[Complex64], traj: &Trajectory, cfg: &SystemConfig, dipole: bool) -> Complex64 {
    let kabs = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let kappa = [k[0] / kabs, k[1] / kabs, k[2] / kabs];
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, w) in weights.iter().enumerate() {
        if *w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut g = Complex64::new(0.0, 0.0);
        for j in 0..cfg.n() {
            let a = &traj.accelerations[n][3 * j..3 * j + 3];
            let proj = cfg.charge(j) * dot(kappa, a);
            if dipole {
                g += proj;
            } else {
                let x = traj.states[n].x.point(j);
                let ph = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
                g += Complex64::new(ph.cos(), ph.sin()) * proj;
            }
        }
        acc += w * g;
    }
    acc
}

/// a(k, t) = −(ε/√2) Σ_j e_j φ̂_σ(k) |k|^{-3/2} κ·∫₀ᵗ e^{is|k|/ε} [e^{−ik·x_j(s)}] ẍ_j(s) ds.
pub fn radiated_amplitude(
    k: [f64; 3],
    t: f64,
    traj: &Trajectory,
    cfg: &SystemConfig,
    dipole_approx: bool,
) -> Result<Complex64> {
    check_covers(traj, t)?;
    let kabs = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    if kabs == 0.0 {
        return Err(Error::Domain("amplitude evaluated at k = 0".into()));
    }
    let pref = amplitude_prefactor(kabs, cfg);
    if pref == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_resolution(traj, kabs, cfg.epsilon)?;
    let w = filon_weights(&traj.times, kabs / cfg.epsilon, t);
    Ok(source_integral(k, &w, traj, cfg, dipole_approx) * pref)
}

/// Angle-integrated spectral density dE_rad/d|k| at each radial node.
pub fn radiated_energy_spectrum(
    t: f64,
    traj: &Trajectory,
    quad: &ModeQuadrature,
    cfg: &SystemConfig,
    dipole_approx: bool,
) -> Result<Vec<(f64, f64)>> {
    check_covers(traj, t)?;
    if let Some(kmax) = quad.radial_nodes.iter().cloned().reduce(f64::max) {
        check_resolution(traj, kmax, cfg.epsilon)?;
    }
    let eps = cfg.epsilon;
    let dens: Vec<f64> = quad
        .radial_nodes
        .par_iter()
        .map(|&kr| {
            let pref = amplitude_prefactor(kr, cfg);
            if pref == 0.0 {
                return 0.0;
            }
            let w = filon_weights(&traj.times, kr / eps, t);
            let terms = quad.sphere.dirs.iter().zip(&quad.sphere.weights).map(|(d, wa)| {
                let k = [kr * d[0], kr * d[1], kr * d[2]];
                let a = source_integral(k, &w, traj, cfg, dipole_approx) * pref;
                wa * kr * kr * kr * a.norm_sqr()
            });
            neumaier_sum(terms)
        })
        .collect();
    Ok(quad.radial_nodes.iter().cloned().zip(dens).collect())
}

/// E_rad(t) = ∫ d³k |k| |a(k, t)|².
pub fn radiated_energy(
    t: f64,
    traj: &Trajectory,
    quad: &ModeQuadrature,
    cfg: &SystemConfig,
    dipole_approx: bool,
) -> Result<f64> {
    let spec = radiated_energy_spectrum(t, traj, quad, cfg, dipole_approx)?;
    Ok(neumaier_sum(spec.iter().zip(&quad.radial_weights).map(|((_, d), w)| w * d)))
}

pub fn radiated_energy_ensemble(
    t: f64,
    ens: &EnsembleTrajectories,
    quad: &ModeQuadrature,
    cfg: &SystemConfig,
    dipole_approx: bool,
) -> Result<f64> {
    ens.weighted(|tr| radiated_energy(t, tr, quad, cfg, dipole_approx))
}

/// Cubic interpolation of d̈ and its time derivative at t.
fn dipole_at(times: &[f64], dd: &[[f64; 3]], t: f64) -> ([f64; 3], [f64; 3]) {
    let (idx, val, der) = cubic_interp_weights(times, t);
    let mut v = [0.0; 3];
    let mut d = [0.0; 3];
    for ((j, wv), wd) in idx.zip(&val).zip(&der) {
        for a in 0..3 {
            v[a] += wv * dd[j][a];
            d[a] += wd * dd[j][a];
        }
    }
    (v, d)
}

fn kernel_power_single(t: f64, traj: &Trajectory, cfg: &SystemConfig) -> Result<f64> {
    check_covers(traj, t)?;
    let dd = dipole_acceleration(traj, cfg)?;
    let eps = cfg.epsilon;
    let (gt, jerk) = dipole_at(&traj.times, &dd, t);
    let g_t = gt[0] * gt[0] + gt[1] * gt[1] + gt[2] * gt[2];
    if t == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-9 * traj.max_dt();
    // h(s) = [G(s) − G(t)] / (t − s), G(s) = d̈(t)·d̈(s); smooth through s = t
    let h: Vec<f64> = traj
        .times
        .iter()
        .zip(&dd)
        .map(|(&s, d)| {
            if (t - s).abs() <= tol {
                -(gt[0] * jerk[0] + gt[1] * jerk[1] + gt[2] * jerk[2])
            } else {
                let g = gt[0] * d[0] + gt[1] * d[1] + gt[2] * d[2];
                (g - g_t) / (t - s)
            }
        })
        .collect();
    let ff = &cfg.form_factor;
    let mut total = 0.0;
    for (cut, sign) in [(ff.lambda_uv, 1.0), (ff.sigma_ir, -1.0)] {
        if cut == 0.0 {
            continue;
        }
        let a = cut / eps;
        // ∫₀ᵗ sin(a(t−s)) h(s) ds = Im[e^{iat} ∫₀ᵗ e^{−ias} h(s) ds]
        let w = filon_weights(&traj.times, -a, t);
        let z: Complex64 = w.iter().zip(&h).map(|(w, h)| w * h).sum();
        let osc = (Complex64::new((a * t).cos(), (a * t).sin()) * z).im;
        total += sign * (g_t * si(a * t) + osc);
    }
    Ok(eps.powi(3) / (6.0 * PI * PI) * total)
}

/// P(t) = ε³/(6π²) Σ_ij e_i e_j ∫₀ᵗ K(t−s) ⟨ẍ_i(t)·ẍ_j(s)⟩ ds with
/// K(u) = [sin(uΛ/ε) − sin(uσ/ε)]/u and K(0) = (Λ − σ)/ε.
pub fn radiated_power_kernel(t: f64, ens: &EnsembleTrajectories, cfg: &SystemConfig) -> Result<f64> {
    ens.weighted(|tr| kernel_power_single(t, tr, cfg))
}

/// P(t) = (ε³/12π) ⟨|d̈(t)|²⟩.
pub fn radiated_power_larmor(t: f64, ens: &EnsembleTrajectories, cfg: &SystemConfig) -> Result<f64> {
    ens.weighted(|tr| {
        check_covers(tr, t)?;
        let dd = dipole_acceleration(tr, cfg)?;
        let (g, _) = dipole_at(&tr.times, &dd, t);
        Ok(cfg.epsilon.powi(3) / (12.0 * PI) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))
    })
}

/// The double-time kernel form of E_rad under the dipole approximation,
/// obtained as ∫₀ᵗ P_kernel(τ) dτ over the trajectory grid.
pub fn radiated_energy_kernel(t: f64, ens: &EnsembleTrajectories, cfg: &SystemConfig) -> Result<f64> {
    ens.weighted(|tr| {
        check_covers(tr, t)?;
        let w = filon_weights(&tr.times, 0.0, t);
        let mut terms = Vec::new();
        for (n, &s) in tr.times.iter().enumerate() {
            if w[n].re != 0.0 {
                terms.push(w[n].re * kernel_power_single(s.min(t), tr, cfg)?);
            }
        }
        Ok(neumaier_sum(terms))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiationSeries {
    pub times: Vec<f64>,
    pub e_rad: Vec<f64>,
    pub p_kernel: Vec<f64>,
    pub p_larmor: Vec<f64>,
}

pub fn radiation_series(
    sample_times: &[f64],
    ens: &EnsembleTrajectories,
    quad: &ModeQuadrature,
    cfg: &SystemConfig,
    dipole_approx: bool,
) -> Result<RadiationSeries> {
    let mut s = RadiationSeries { times: vec![], e_rad: vec![], p_kernel: vec![], p_larmor: vec![] };
    for &t in sample_times {
        s.times.push(t);
        s.e_rad.push(if t == 0.0 { 0.0 } else { radiated_energy_ensemble(t, ens, quad, cfg, dipole_approx)? });
        s.p_kernel.push(radiated_power_kernel(t, ens, cfg)?);
        s.p_larmor.push(radiated_power_larmor(t, ens, cfg)?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FormFactor;
    use crate::quadrature::RadialLayout;

    fn one(eps: f64) -> SystemConfig {
        SystemConfig::new(&[1.0], FormFactor::new(1.0, 0.0).unwrap(), eps).unwrap()
    }

    #[test]
    fn amplitude_vanishes_outside_shell_and_for_free_motion() {
        let cfg = one(0.1);
        let tr = Trajectory::oscillator(0.3, 1.0, 0.01, 1.0, &cfg).unwrap();
        assert_eq!(radiated_amplitude([0.0, 0.0, 1.5], 1.0, &tr, &cfg, true).unwrap(), Complex64::new(0.0, 0.0));
        let free = Trajectory::oscillator(0.0, 1.0, 0.01, 1.0, &cfg).unwrap();
        assert_eq!(radiated_amplitude([0.0, 0.3, 0.4], 1.0, &free, &cfg, false).unwrap().norm(), 0.0);
    }

    #[test]
    fn under_resolved_grid_is_reported() {
        let cfg = one(0.01);
        let tr = Trajectory::oscillator(0.3, 1.0, 0.05, 1.0, &cfg).unwrap();
        assert!(matches!(
            radiated_amplitude([0.0, 0.0, 0.9], 1.0, &tr, &cfg, true),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn energy_zero_at_start_and_nonnegative() {
        let cfg = one(0.1);
        let tr = Trajectory::oscillator(0.3, 2.0, 0.01, 1.0, &cfg).unwrap();
        let q = ModeQuadrature::new(&cfg.form_factor, RadialLayout { panels: 4, nodes_per_panel: 6 }, 3);
        assert_eq!(radiated_energy(0.0, &tr, &q, &cfg, true).unwrap(), 0.0);
        assert!(radiated_energy(0.7, &tr, &q, &cfg, false).unwrap() > 0.0);
    }

    #[test]
    fn zero_spread_ensemble_is_the_center() {
        let x = Configuration::from_points(&[[1.0, 2.0, 3.0]]);
        let c = PhaseSpacePoint::new(x, vec![0.1, 0.2, 0.3]).unwrap();
        let e = sample_wigner_gaussian(&c, 0.0, 0.0, 3, 7).unwrap();
        assert!(e.points.iter().all(|p| *p == c));
        assert!(sample_wigner_gaussian(&c, 1.0, 1.0, 0, 7).is_err());
        assert!(sample_wigner_gaussian(&c, -1.0, 1.0, 2, 7).is_err());
    }

    #[test]
    fn larmor_scales_as_eps_cubed() {
        let a = one(0.1);
        let b = one(0.05);
        let ens = EnsembleTrajectories::single(Trajectory::oscillator(0.3, 1.0, 0.01, 2.0, &a).unwrap());
        let pa = radiated_power_larmor(1.234, &ens, &a).unwrap() / 0.1f64.powi(3);
        let pb = radiated_power_larmor(1.234, &ens, &b).unwrap() / 0.05f64.powi(3);
        assert!((pa - pb).abs() < 1e-14 * pa);
    }
}
