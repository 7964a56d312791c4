//! Classical particles coupled to the scalar field, solved mode by mode.
//!
//! In microscopic units (c = 1, m_j = ε⁻²) each field mode is a driven
//! oscillator, φ̂̈(k) = −|k|² φ̂(k) − ρ̂(k), with source
//! ρ̂(k) = Σ_j e_j φ̂_σ(k) e^{−ik·q_j}, and the particles feel
//! F_j = −Re ∫ d³k (ik) e_j φ̂_σ(k) e^{ik·q_j} φ̂(k).
//! Modes live on the half space k_z > 0 with doubled weights; the other half
//! is the complex conjugate. Macroscopic time is T = εt and macroscopic
//! velocity is dq/dT = q̇/ε.

use crate::dynamics::{classical_flow, momenta_for_velocities, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Configuration, MassConvention, PhaseSpacePoint, SystemConfig};
use crate::quadrature::{neumaier_sum, ModeQuadrature};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: usize = 1024;

/// Field amplitudes and velocities on the half-space modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub phi: Vec<Complex64>,
    pub phi_dot: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    pub field: FieldState,
    /// Positions, flattened.
    pub q: Vec<f64>,
    /// Microscopic velocities dq/dt.
    pub q_dot: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialField {
    /// Equilibrium field with the co-moving field velocity.
    CoMoving,
    /// Zero field; the particles start undressed.
    Bare,
}

/// Half-space modes for the field, built from a full-sphere quadrature whose
/// polar rule is symmetric with an even node count.
pub fn field_modes(quad: &ModeQuadrature) -> ModeQuadrature {
    quad.half_space()
}

fn phase(k: &[f64; 3], q: &[f64]) -> Complex64 {
    let p = k[0] * q[0] + k[1] * q[1] + k[2] * q[2];
    Complex64::new(p.cos(), p.sin())
}

/// ρ̂(k_q) for every mode.
pub fn source(q: &[f64], modes: &ModeQuadrature, cfg: &SystemConfig) -> Vec<Complex64> {
    modes
        .k
        .par_iter()
        .zip(&modes.kabs)
        .map(|(k, &ka)| {
            let f = cfg.form_factor.hat(ka);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..cfg.n() {
                s += phase(k, &q[3 * j..3 * j + 3]).conj() * (cfg.charge(j) * f);
            }
            s
        })
        .collect()
}

/// dρ̂/dt for microscopic particle velocities `q_dot`.
fn source_rate(q: &[f64], q_dot: &[f64], modes: &ModeQuadrature, cfg: &SystemConfig) -> Vec<Complex64> {
    modes
        .k
        .par_iter()
        .zip(&modes.kabs)
        .map(|(k, &ka)| {
            let f = cfg.form_factor.hat(ka);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..cfg.n() {
                let kv = k[0] * q_dot[3 * j] + k[1] * q_dot[3 * j + 1] + k[2] * q_dot[3 * j + 2];
                s += phase(k, &q[3 * j..3 * j + 3]).conj() * Complex64::new(0.0, -kv) * (cfg.charge(j) * f);
            }
            s
        })
        .collect()
}

/// φ̂ = −ρ̂/|k|² with field velocity −ρ̂̇/|k|² for the macroscopic particle
/// velocities `v` (zero velocity if `None`).
pub fn equilibrium_field(x: &Configuration, v: Option<&[f64]>, modes: &ModeQuadrature, cfg: &SystemConfig) -> FieldState {
    let rho = source(&x.positions, modes, cfg);
    let phi = rho.iter().zip(&modes.kabs).map(|(r, k)| -r / (k * k)).collect();
    let phi_dot = match v {
        Some(v) => {
            let micro: Vec<f64> = v.iter().map(|v| cfg.epsilon * v).collect();
            source_rate(&x.positions, &micro, modes, cfg)
                .iter()
                .zip(&modes.kabs)
                .map(|(r, k)| -r / (k * k))
                .collect()
        }
        None => vec![Complex64::new(0.0, 0.0); modes.len()],
    };
    FieldState { phi, phi_dot }
}

/// Force on every particle from the field, fixed-order chunked reduction.
pub fn field_force(field: &FieldState, q: &[f64], modes: &ModeQuadrature, cfg: &SystemConfig) -> Vec<f64> {
    let n = cfg.n();
    let partial: Vec<Vec<f64>> = (0..modes.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut f = vec![0.0; 3 * n];
            for &m in idx {
                let k = &modes.k[m];
                let amp = modes.weights[m] * cfg.form_factor.hat(modes.kabs[m]);
                if amp == 0.0 {
                    continue;
                }
                for j in 0..n {
                    // −Re[i e_j φ̂ e^{ik·q_j} φ̂(k)] k = Im[...] k
                    let z = phase(k, &q[3 * j..3 * j + 3]) * field.phi[m];
                    let s = amp * cfg.charge(j) * z.im;
                    for a in 0..3 {
                        f[3 * j + a] += s * k[a];
                    }
                }
            }
            f
        })
        .collect();
    (0..3 * n).map(|i| neumaier_sum(partial.iter().map(|p| p[i]))).collect()
}

/// Σ ½ m q̇² + ∫ ½(|φ̂̇|² + |k|²|φ̂|²) + ∫ Re(φ̂ ρ̂*), microscopic units.
pub fn total_energy(state: &CoupledState, modes: &ModeQuadrature, cfg: &SystemConfig) -> f64 {
    let m = 1.0 / (cfg.epsilon * cfg.epsilon);
    let kin = 0.5 * m * state.q_dot.iter().map(|v| v * v).sum::<f64>();
    kin + field_energy(&state.field, &state.q, modes, cfg)
}

/// Field plus interaction energy.
pub fn field_energy(field: &FieldState, q: &[f64], modes: &ModeQuadrature, cfg: &SystemConfig) -> f64 {
    let rho = source(q, modes, cfg);
    let terms = (0..modes.len()).map(|m| {
        let k2 = modes.kabs[m] * modes.kabs[m];
        let (p, pd) = (field.phi[m], field.phi_dot[m]);
        modes.weights[m] * (0.5 * (pd.norm_sqr() + k2 * p.norm_sqr()) + (p * rho[m].conj()).re)
    });
    neumaier_sum(terms)
}

/// Field energy per radial node, ∂/∂|k| of the free-field energy.
pub fn field_energy_spectrum(field: &FieldState, modes: &ModeQuadrature) -> Vec<(f64, f64)> {
    let mut dens = vec![0.0; modes.radial_nodes.len()];
    for m in 0..modes.len() {
        let k2 = modes.kabs[m] * modes.kabs[m];
        let r = modes.radial_index[m];
        dens[r] += modes.weights[m] * 0.5 * (field.phi_dot[m].norm_sqr() + k2 * field.phi[m].norm_sqr())
            / modes.radial_weights[r];
    }
    modes.radial_nodes.iter().cloned().zip(dens).collect()
}

/// Σ m q̇ + Re ∫ i k φ̂̇ φ̂*.
pub fn total_momentum(state: &CoupledState, modes: &ModeQuadrature, cfg: &SystemConfig) -> [f64; 3] {
    let m = 1.0 / (cfg.epsilon * cfg.epsilon);
    let mut p = [0.0; 3];
    for a in 0..3 {
        let particles: f64 = (0..cfg.n()).map(|j| m * state.q_dot[3 * j + a]).sum();
        let field = neumaier_sum((0..modes.len()).map(|q| {
            let z = Complex64::new(0.0, 1.0) * state.field.phi_dot[q] * state.field.phi[q].conj();
            modes.weights[q] * modes.k[q][a] * z.re
        }));
        p[a] = particles + field;
    }
    p
}

fn rotate(field: &mut FieldState, rho: &[Complex64], modes: &ModeQuadrature, tau: f64) {
    field
        .phi
        .par_iter_mut()
        .zip(field.phi_dot.par_iter_mut())
        .zip(rho.par_iter().zip(modes.kabs.par_iter()))
        .for_each(|((p, pd), (r, &k))| {
            let eq = -r / (k * k);
            let (s, c) = (k * tau).sin_cos();
            let d = *p - eq;
            *p = eq + d * c + *pd * (s / k);
            *pd = -d * (k * s) + *pd * c;
        });
}

/// One Strang step of microscopic length `dt`: exact mode rotation about
/// the frozen-source equilibrium for dt/2, kick-drift-kick for the
/// particles, rotation with the updated source for dt/2.
pub fn coupled_step(state: &CoupledState, dt: f64, modes: &ModeQuadrature, cfg: &SystemConfig) -> Result<CoupledState> {
    let limit = 0.25 * 2.0 * std::f64::consts::PI / cfg.form_factor.lambda_uv;
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "microscopic step {dt} must lie in (0, {limit}] to resolve the fastest mode"
        )));
    }
    let eps2 = cfg.epsilon * cfg.epsilon;
    let mut s = state.clone();
    let rho = source(&s.q, modes, cfg);
    rotate(&mut s.field, &rho, modes, 0.5 * dt);
    let f = field_force(&s.field, &s.q, modes, cfg);
    for i in 0..s.q.len() {
        s.q_dot[i] += 0.5 * dt * eps2 * f[i];
        s.q[i] += dt * s.q_dot[i];
    }
    let f = field_force(&s.field, &s.q, modes, cfg);
    for i in 0..s.q.len() {
        s.q_dot[i] += 0.5 * dt * eps2 * f[i];
    }
    let rho = source(&s.q, modes, cfg);
    rotate(&mut s.field, &rho, modes, 0.5 * dt);
    Ok(s)
}

/// Coupled run sampled every microscopic step, reported in macroscopic time.
#[derive(Clone, Debug)]
pub struct ClassicalRun {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// Macroscopic velocities dq/dT.
    pub velocities: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub final_field: FieldState,
}

/// Integrate the coupled system from positions `q0` and macroscopic
/// velocities `v0` over macroscopic time `t_macro`. The step is adjusted
/// down so that an integer number of steps reaches `t_macro`. Relative
/// energy drift above `drift_tol` per macroscopic unit time is an error.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    q0: &Configuration,
    v0: &[f64],
    t_macro: f64,
    dt_micro: f64,
    init: InitialField,
    drift_tol: f64,
    modes: &ModeQuadrature,
    cfg: &SystemConfig,
) -> Result<ClassicalRun> {
    if q0.n() != cfg.n() || v0.len() != 3 * cfg.n() {
        return Err(Error::InvalidParameter("initial data do not match the system size".into()));
    }
    let eps = cfg.epsilon;
    let n = micro_steps(t_macro, dt_micro, eps)?;
    let dt = t_macro / (eps * n as f64);
    let field = match init {
        InitialField::CoMoving => equilibrium_field(q0, Some(v0), modes, cfg),
        InitialField::Bare => FieldState {
            phi: vec![Complex64::new(0.0, 0.0); modes.len()],
            phi_dot: vec![Complex64::new(0.0, 0.0); modes.len()],
        },
    };
    let mut state = CoupledState { field, q: q0.positions.clone(), q_dot: v0.iter().map(|v| eps * v).collect() };
    let e0 = total_energy(&state, modes, cfg);
    let kin0 = 0.5 * v0.iter().map(|v| v * v).sum::<f64>();
    let scale = e0.abs().max(kin0 + field_energy(&state.field, &state.q, modes, cfg).abs());
    let mut run = ClassicalRun {
        times: vec![0.0],
        positions: vec![state.q.clone()],
        velocities: vec![v0.to_vec()],
        energies: vec![e0],
        final_field: state.field.clone(),
    };
    for i in 1..=n {
        state = coupled_step(&state, dt, modes, cfg)?;
        let e = total_energy(&state, modes, cfg);
        let t = i as f64 * dt * eps;
        let drift = (e - e0).abs() / scale.max(f64::MIN_POSITIVE) / t.max(1.0);
        if drift > drift_tol {
            return Err(Error::EnergyDrift { drift, tol: drift_tol });
        }
        run.times.push(t);
        run.positions.push(state.q.clone());
        run.velocities.push(state.q_dot.iter().map(|v| v / eps).collect());
        run.energies.push(e);
    }
    run.final_field = state.field;
    Ok(run)
}

fn micro_steps(t_macro: f64, dt_micro: f64, eps: f64) -> Result<usize> {
    if !(t_macro > 0.0 && dt_micro > 0.0) {
        return Err(Error::InvalidParameter("t_macro and dt_micro must be positive".into()));
    }
    Ok((t_macro / (eps * dt_micro) - 1e-9).ceil().max(1.0) as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub deviation_coulomb: f64,
    pub deviation_darwin: f64,
    /// Darwin flow with the field-elimination kinetic correction; diagnostic.
    pub deviation_darwin_field_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub slope_coulomb: f64,
    pub slope_darwin: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

fn max_deviation(run: &ClassicalRun, traj: &Trajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for (q, s) in run.positions.iter().zip(&traj.states) {
        for j in 0..q.len() / 3 {
            let d: f64 = (0..3).map(|a| (q[3 * j + a] - s.x.positions[3 * j + a]).powi(2)).sum();
            worst = worst.max(d.sqrt());
        }
    }
    worst
}

/// For every ε, the largest distance between the coupled-field trajectory
/// and the effective Coulomb and Darwin flows started at the same
/// positions and velocities.
pub fn epsilon_scaling_study(
    eps_list: &[f64],
    t_macro: f64,
    dt_micro: f64,
    q0: &Configuration,
    v0: &[f64],
    modes: &ModeQuadrature,
    template: &SystemConfig,
) -> Result<ScalingTable> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let cfg = template.with_epsilon(eps)?;
        let n = micro_steps(t_macro, dt_micro, eps)?;
        let dt_eff = t_macro / n as f64;
        let run = simulate(q0, v0, t_macro, dt_micro, InitialField::CoMoving, 1e-4, modes, &cfg)?;
        let coul = classical_flow(
            &PhaseSpacePoint::new(q0.clone(), v0.to_vec())?,
            t_macro,
            &IntegratorConfig::rk4(dt_eff, false),
            &cfg,
        )?;
        let darwin = |conv: MassConvention| -> Result<Trajectory> {
            let p = momenta_for_velocities(q0, v0, &cfg, conv)?;
            let mut icfg = IntegratorConfig::rk4(dt_eff, true);
            icfg.mass_convention = conv;
            classical_flow(&PhaseSpacePoint::new(q0.clone(), p)?, t_macro, &icfg, &cfg)
        };
        rows.push(ScalingRow {
            epsilon: eps,
            deviation_coulomb: max_deviation(&run, &coul),
            deviation_darwin: max_deviation(&run, &darwin(MassConvention::Standard)?),
            deviation_darwin_field_mass: max_deviation(&run, &darwin(MassConvention::FieldElimination)?),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let dc: Vec<f64> = rows.iter().map(|r| r.deviation_coulomb).collect();
    let dd: Vec<f64> = rows.iter().map(|r| r.deviation_darwin).collect();
    Ok(ScalingTable { slope_coulomb: loglog_slope(&eps, &dc), slope_darwin: loglog_slope(&eps, &dd), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{grad_ground_energy, ground_energy, FormFactor};
    use crate::quadrature::RadialLayout;

    fn modes(ff: &FormFactor) -> ModeQuadrature {
        field_modes(&ModeQuadrature::new(ff, RadialLayout { panels: 2, nodes_per_panel: 16 }, 16))
    }

    #[test]
    fn static_force_is_minus_gradient() {
        let cfg = SystemConfig::new(&[1.0, -0.7], FormFactor::new(1.0, 0.0).unwrap(), 0.1).unwrap();
        let m = modes(&cfg.form_factor);
        let x = Configuration::from_points(&[[0.0; 3], [1.3, 0.4, -0.7]]);
        let f = field_force(&equilibrium_field(&x, None, &m, &cfg), &x.positions, &m, &cfg);
        let g = grad_ground_energy(&x, &cfg).unwrap();
        for i in 0..6 {
            assert!((f[i] + g[i]).abs() < 1e-9 * g[1].abs().max(g[0].abs()), "{i}: {} vs {}", f[i], -g[i]);
        }
        let state = CoupledState { field: equilibrium_field(&x, None, &m, &cfg), q: x.positions.clone(), q_dot: vec![0.0; 6] };
        let e = ground_energy(&x, &cfg).unwrap();
        assert!((total_energy(&state, &m, &cfg) - e).abs() < 1e-9 * e.abs());
    }

    #[test]
    fn free_modes_keep_their_modulus() {
        let cfg = SystemConfig::new(&[0.0], FormFactor::new(1.0, 0.0).unwrap(), 0.1).unwrap();
        let m = modes(&cfg.form_factor);
        let field = FieldState {
            phi: m.kabs.iter().map(|k| Complex64::new(1.0, 0.5) / k).collect(),
            phi_dot: m.kabs.iter().map(|_| Complex64::new(0.0, 0.0)).collect(),
        };
        let mut s = CoupledState { field, q: vec![0.0; 3], q_dot: vec![0.0; 3] };
        let e0 = total_energy(&s, &m, &cfg);
        for _ in 0..10 {
            s = coupled_step(&s, 0.3, &m, &cfg).unwrap();
        }
        assert!((total_energy(&s, &m, &cfg) - e0).abs() < 1e-12 * e0);
        assert!(coupled_step(&s, 2.0, &m, &cfg).is_err());
    }

    #[test]
    fn dressed_particle_stays_inertial() {
        let cfg = SystemConfig::new(&[1.0], FormFactor::new(1.0, 0.0).unwrap(), 0.1).unwrap();
        let m = modes(&cfg.form_factor);
        let x = Configuration::from_points(&[[0.2, -0.1, 0.3]]);
        let run = simulate(&x, &[0.0; 3], 1.0, 0.25, InitialField::CoMoving, 1e-4, &m, &cfg).unwrap();
        let last = run.positions.last().unwrap();
        for a in 0..3 {
            assert!((last[a] - x.positions[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
