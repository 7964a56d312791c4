use crate::config::RunConfig;
use crate::output::{num, Table};
use adiabatic_lab::{leakage_scan, ModeLayout, ToyModelSpec, Wavepacket};
use anyhow::{ensure, Context, Result};
use fockbox::dressing::{conjugation_residual, dressing_from_amplitudes, intertwining_residual, DEFAULT_PAD};
use fockbox::sparse::{dot, norm};
use fockbox::{discrete_alpha, lanczos_ground_state, van_hove_from_amplitudes, FockBasis};
use nelson_core::classical_field::{epsilon_scaling_study, field_energy_spectrum, field_modes, simulate, InitialField};
use nelson_core::dynamics::{IntegratorConfig, Trajectory};
use nelson_core::model::{pair_potential, Configuration, PhaseSpacePoint};
use nelson_core::quadrature::{ModeQuadrature, RadialLayout};
use nelson_core::radiation::{
    radiated_power_kernel, radiated_power_larmor, radiation_series, sample_wigner_gaussian, EnsembleTrajectories,
};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::f64::consts::PI;

pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn per_particle(n: usize, prefix: &str, unit: &str) -> Vec<String> {
    (0..n).flat_map(|j| AXES.iter().map(move |a| format!("{prefix}_{j}_{a} [{unit}]"))).collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![b];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn potentials(cfg: &RunConfig) -> Result<Outcome> {
    let s = &cfg.system;
    ensure!(s.charges.len() >= 2, "potentials: system.charges needs at least two entries");
    let sys = s.build(&s.charges[..2], s.epsilon)?;
    let (e1, e2) = (s.charges[0], s.charges[1]);
    let p = &cfg.potentials;
    let mut t = Table::new("potentials.csv", &["r [length]", "V_12 [energy]", "coulomb [energy]"]);
    let (la, lb) = (p.r_min.ln(), p.r_max.ln());
    for r in linspace(la, lb, p.points).into_iter().map(f64::exp) {
        t.push_nums(&[r, pair_potential(r, e1, e2, &sys.form_factor), -e1 * e2 / (4.0 * PI * r)]);
    }
    Ok(Outcome { tables: vec![t], summary: json!({ "sigma": sys.form_factor.sigma_ir }) })
}

pub fn trajectories(cfg: &RunConfig) -> Result<Outcome> {
    let tc = &cfg.trajectories;
    let s = &cfg.system;
    ensure!(tc.positions.len() == s.charges.len(), "trajectories: one position per charge in system.charges");
    let sys = s.build(&s.charges, s.epsilon)?;
    let icfg = match tc.scheme.as_str() {
        "leapfrog" => IntegratorConfig::leapfrog(tc.dt),
        _ => IntegratorConfig::rk4(tc.dt, tc.darwin),
    };
    let start = PhaseSpacePoint::new(Configuration::from_points(&tc.positions), tc.momenta.concat())?;
    let ens = sample_wigner_gaussian(&start, tc.position_spread, tc.momentum_spread, tc.ensemble_size.max(1), cfg.seed)?;
    let flows = EnsembleTrajectories::from_flows(&ens, tc.t_final, &icfg, &sys)?;
    let n = sys.n();
    let mut header = vec!["member [index]".to_string(), "t [time]".to_string()];
    header.extend(per_particle(n, "x", "length"));
    header.extend(per_particle(n, "p", "momentum"));
    header.push("H_eff [energy]".into());
    let mut t = Table::with_header("trajectories.csv", header);
    for (m, tr) in flows.trajectories.iter().enumerate() {
        for i in 0..tr.len() {
            let mut row = vec![m.to_string(), num(tr.times[i])];
            row.extend(tr.states[i].x.positions.iter().map(|v| num(*v)));
            row.extend(tr.states[i].p.iter().map(|v| num(*v)));
            row.push(num(tr.energies[i]));
            t.push(row);
        }
    }
    Ok(Outcome { tables: vec![t], summary: json!({ "members": flows.trajectories.len(), "seed": cfg.seed }) })
}

pub fn radiation(cfg: &RunConfig) -> Result<Outcome> {
    let rc = &cfg.radiation;
    let s = &cfg.system;
    let sys = s.build(&s.charges[..1], s.epsilon)?;
    let eps = sys.epsilon;
    let tr = Trajectory::oscillator(rc.amplitude, rc.omega, rc.dt, rc.t_final, &sys)?;
    let ens = EnsembleTrajectories::single(tr);
    let quad = ModeQuadrature::new(
        &sys.form_factor,
        RadialLayout { panels: rc.radial_panels, nodes_per_panel: rc.nodes_per_panel },
        rc.n_theta,
    );
    let times = linspace(0.0, rc.t_final, rc.samples);
    let series = radiation_series(&times, &ens, &quad, &sys, rc.dipole)?;
    let mut t = Table::new("radiation.csv", &["t [time]", "E_rad [energy]", "P_kernel [energy/time]", "P_larmor [energy/time]"]);
    for i in 0..series.times.len() {
        t.push_nums(&[series.times[i], series.e_rad[i], series.p_kernel[i], series.p_larmor[i]]);
    }
    ensure!(rc.average_to <= rc.t_final, "radiation.average_to must not exceed t_final");
    let m = rc.average_samples.max(1);
    let (mut pl, mut pk) = (0.0, 0.0);
    for i in 0..m {
        let tt = rc.average_from + (rc.average_to - rc.average_from) * i as f64 / m as f64;
        pl += radiated_power_larmor(tt, &ens, &sys)? / m as f64;
        pk += radiated_power_kernel(tt, &ens, &sys)? / m as f64;
    }
    let exact = eps.powi(3) * rc.amplitude.powi(2) * rc.omega.powi(4) / (24.0 * PI);
    let mut summary = Table::new(
        "radiation_summary.csv",
        &[
            "epsilon [1]",
            "P_larmor_avg [energy/time]",
            "P_kernel_avg [energy/time]",
            "P_larmor_exact [energy/time]",
            "larmor_rel_error [1]",
            "kernel_rel_deviation [1]",
        ],
    );
    summary.push_nums(&[eps, pl, pk, exact, pl / exact - 1.0, pk / pl - 1.0]);
    Ok(Outcome {
        tables: vec![t, summary],
        summary: json!({ "larmor_rel_error": pl / exact - 1.0, "kernel_rel_deviation": pk / pl - 1.0 }),
    })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let sc = &cfg.spectrum;
    let basis = FockBasis::new(1, sc.n_max, sc.n_max)?;
    let w = sc.omega;
    let mut t = Table::new(
        "spectrum.csv",
        &[
            "coupling_over_omega [1]",
            "ground_energy [energy]",
            "alpha [energy]",
            "abs_error [energy]",
            "intertwining_residual [energy]",
            "conjugation_residual_vacuum [energy]",
            "unitarity_defect [1]",
            "vacuum_fidelity [1]",
        ],
    );
    let mut worst: f64 = 0.0;
    for &c in &sc.couplings {
        let z = Complex64::from_polar(c * w, 0.3);
        let h = van_hove_from_amplitudes(&[z], &[w], &basis)?;
        let g = lanczos_ground_state(&h, 1e-12, 100_000)?;
        let e = discrete_alpha(&[z], &[w]);
        let d = dressing_from_amplitudes(&[z / w], &basis, DEFAULT_PAD)?;
        let inter = intertwining_residual(&h, &d.operator, &[w], e, &basis);
        let conj = conjugation_residual(&h, &d.operator, &[w], e, &basis, 0);
        let mut vac = vec![Complex64::new(0.0, 0.0); basis.dim()];
        vac[0] = Complex64::new(1.0, 0.0);
        let dv = d.operator.apply(&vac);
        let fid = dot(&g.vector, &dv).norm() / norm(&dv);
        worst = worst.max(inter).max(conj);
        t.push_nums(&[c, g.energy, e, (g.energy - e).abs(), inter, conj, d.unitarity_defect, fid]);
    }
    Ok(Outcome { tables: vec![t], summary: json!({ "max_dressing_residual": worst }) })
}

pub fn toy_spec(cfg: &RunConfig) -> ToyModelSpec {
    let a = &cfg.adiabatic;
    ToyModelSpec {
        length: a.length,
        n_x: a.n_x,
        charge: a.charge,
        epsilon: cfg.system.epsilon,
        sigma: a.sigmas.first().copied().unwrap_or(0.1),
        lambda: cfg.system.lambda,
        modes: ModeLayout::LogSpaced { count: a.modes },
        n_max: a.n_max,
        m_max: a.m_max,
        dim_budget: a.dim_budget,
    }
}

pub fn adiabatic(cfg: &RunConfig) -> Result<Outcome> {
    let a = &cfg.adiabatic;
    let spec = toy_spec(cfg);
    let packet = Wavepacket { center: a.packet_center, width: a.packet_width, momentum: a.packet_momentum };
    let cells: Vec<(f64, f64)> = a.epsilons.iter().flat_map(|&e| a.sigmas.iter().map(move |&s| (e, s))).collect();
    let rows = leakage_scan(&spec, &cells, &a.times, &packet, a.sector, a.tolerance)?;
    let mut t = Table::new(
        "leakage.csv",
        &["epsilon [1]", "sigma [1/length]", "t [time]", "leakage_dressed [1]", "leakage_bare [1]", "norm_defect [1]"],
    );
    for r in &rows {
        t.push_nums(&[r.epsilon, r.sigma, r.t, r.leakage_dressed, r.leakage_bare, r.norm_defect]);
    }
    Ok(Outcome { tables: vec![t], summary: json!({ "cells": cells.len(), "dimension": spec.dim()? }) })
}

fn field_setup(cfg: &RunConfig) -> Result<(nelson_core::model::SystemConfig, ModeQuadrature, Configuration, Vec<f64>)> {
    let c = &cfg.classical_field;
    let s = &cfg.system;
    ensure!(c.positions.len() == s.charges.len(), "classical_field: one position per charge in system.charges");
    let sys = s.build(&s.charges, s.epsilon)?;
    let modes = field_modes(&ModeQuadrature::new(
        &sys.form_factor,
        RadialLayout { panels: c.radial_panels, nodes_per_panel: c.nodes_per_panel },
        c.n_theta,
    ));
    Ok((sys, modes, Configuration::from_points(&c.positions), c.velocities.concat()))
}

pub fn classical_field(cfg: &RunConfig) -> Result<Outcome> {
    let c = &cfg.classical_field;
    let (sys, modes, q0, v0) = field_setup(cfg)?;
    let init = if c.initial_field == "bare" { InitialField::Bare } else { InitialField::CoMoving };
    let run = simulate(&q0, &v0, c.t_macro, c.dt_micro, init, c.drift_tolerance, &modes, &sys)?;
    let n = sys.n();
    let mut header = vec!["t [macro time]".to_string()];
    header.extend(per_particle(n, "q", "length"));
    header.extend(per_particle(n, "v", "length/macro time"));
    header.push("energy [energy]".into());
    let mut t = Table::with_header("classical_trajectory.csv", header);
    for i in 0..run.times.len() {
        let mut row = vec![run.times[i]];
        row.extend(&run.positions[i]);
        row.extend(&run.velocities[i]);
        row.push(run.energies[i]);
        t.push_nums(&row);
    }
    let mut spec = Table::new("field_spectrum.csv", &["k [1/length]", "energy_density [energy*length]"]);
    for (k, e) in field_energy_spectrum(&run.final_field, &modes) {
        spec.push_nums(&[k, e]);
    }
    let e0 = run.energies[0];
    let drift = run.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE);
    Ok(Outcome { tables: vec![t, spec], summary: json!({ "relative_energy_drift": drift, "modes": modes.len() }) })
}

pub fn scaling(cfg: &RunConfig) -> Result<Outcome> {
    let c = &cfg.classical_field;
    let (sys, modes, q0, v0) = field_setup(cfg)?;
    let table = epsilon_scaling_study(&cfg.system.epsilons, c.t_macro, c.dt_micro, &q0, &v0, &modes, &sys)
        .context("scaling study")?;
    let mut t = Table::new(
        "scaling.csv",
        &["epsilon [1]", "deviation_coulomb [length]", "deviation_darwin [length]", "deviation_darwin_field_mass [length]"],
    );
    for r in &table.rows {
        t.push_nums(&[r.epsilon, r.deviation_coulomb, r.deviation_darwin, r.deviation_darwin_field_mass]);
    }
    Ok(Outcome {
        tables: vec![t],
        summary: json!({ "slope_coulomb": table.slope_coulomb, "slope_darwin": table.slope_darwin, "sigma": sys.form_factor.sigma_ir }),
    })
}
