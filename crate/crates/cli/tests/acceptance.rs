//! End-to-end acceptance checks. Every test prints one PASS/FAIL line and
//! then asserts, so a full run lists all verdicts.

mod support;

use adiabatic_lab::{leakage_scan, ToyModelSpec, Wavepacket};
use fockbox::dressing::{conjugation_residual, dressing_from_amplitudes, intertwining_residual, DEFAULT_PAD};
use fockbox::sparse::dot;
use fockbox::*;
use nelson_core::classical_field::{epsilon_scaling_study, equilibrium_field, field_force, field_modes, loglog_slope};
use nelson_core::dynamics::Trajectory;
use nelson_core::model::*;
use nelson_core::quadrature::{ModeQuadrature, RadialLayout};
use nelson_core::radiation::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use support::{darwin_oracle, pair_potential_oracle, report, shell_integral};

type C = Complex64;

fn ff(lambda: f64, sigma: f64) -> FormFactor {
    FormFactor::new(lambda, sigma).unwrap()
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

#[test]
fn criterion_01_pair_potential_matches_brute_force() {
    let (lambda, sigma) = (1.0, 1e-2);
    let f = ff(lambda, sigma);
    let dir = unit([0.3, -0.5, 0.8]);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let r = 0.1 * 1000f64.powf(i as f64 / 19.0) / lambda;
        let exact = pair_potential_oracle(dir.map(|d| d * r), 1.0, -0.7, lambda, sigma);
        let v = pair_potential(r, 1.0, -0.7, &f);
        worst = worst.max(((v - exact) / exact).abs());
    }
    let r = 50.0 / lambda;
    let coulomb = 1.0 / (4.0 * PI * r);
    let far = (pair_potential(r, 1.0, 1.0, &ff(lambda, 0.0)) + coulomb).abs() / coulomb;
    let pass = worst <= 1e-5 && far <= 0.02;
    report(1, "pair potential oracle", pass, &format!("max rel err {worst:.2e} <= 1e-5, far field {far:.2e} <= 2e-2"));
    assert!(pass);
}

#[test]
fn criterion_02_self_energy_identity() {
    let cfg = SystemConfig::new(&[1.0, -0.5, 2.0], ff(1.0, 1e-3), 0.1).unwrap();
    let sum: f64 = (0..3).map(|j| mass_renorm_etilde(j, &cfg)).sum();
    let identity = (self_energy_e0(&cfg) + 0.5 * sum).abs();
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let e = cfg.charge(j);
        let [q] = shell_integral(1.0, 1e-3, 1.0, |k| [1.0 / (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])]);
        let oracle = e * e * q / (8.0 * PI * PI * PI);
        worst = worst.max((mass_renorm_etilde(j, &cfg) - oracle).abs() / oracle);
    }
    let pass = identity <= 4.0 * f64::EPSILON * sum.abs() && worst <= 1e-10;
    report(2, "self-energy identity", pass, &format!("|e0 + sum/2| = {identity:.1e}, e~ rel err {worst:.2e} <= 1e-10"));
    assert!(pass);
}

#[test]
fn criterion_03_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let charges: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let cfg = SystemConfig::new(&charges, ff(1.0, 1e-3), 0.1).unwrap();
        let pos: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = Configuration::new(pos.clone()).unwrap();
        let g = grad_ground_energy(&x, &cfg).unwrap();
        let h = 1e-3;
        let e_at = |i: usize, d: f64| {
            let mut p = pos.clone();
            p[i] += d;
            ground_energy(&Configuration::new(p).unwrap(), &cfg).unwrap()
        };
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 * n {
            let fd = (e_at(i, -2.0 * h) - 8.0 * e_at(i, -h) + 8.0 * e_at(i, h) - e_at(i, 2.0 * h)) / (12.0 * h);
            worst = worst.max((g[i] - fd).abs() / scale);
        }
    }
    let pass = worst <= 1e-7;
    report(3, "gradient check", pass, &format!("max rel err {worst:.2e} <= 1e-7 over 50 configurations"));
    assert!(pass);
}

#[test]
fn criterion_04_darwin_tensor_matches_brute_force() {
    let (lambda, sigma) = (1.0, 1e-2);
    let f = ff(lambda, sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut trace_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let dir = unit([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let r = dir.map(|d| d * rng.random_range(0.2..20.0));
        let t = darwin_tensor(r, &f);
        let oracle = darwin_oracle(r, lambda, sigma);
        let scale = oracle.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff: f64 = (0..9).map(|i| (t.value[i / 3][i % 3] - oracle[i]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
        let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let v = pair_potential(rho, 1.0, 1.0, &f);
        trace_worst = trace_worst.max((t.trace() + v).abs() / v.abs());
    }
    let pass = worst <= 1e-5 && trace_worst <= 1e-10;
    report(4, "Darwin tensor oracle", pass, &format!("max rel err {worst:.2e} <= 1e-5, trace identity {trace_worst:.1e} <= 1e-10"));
    assert!(pass);
}

/// Time averages of the Larmor and kernel powers over [2π, 4π] on the
/// oscillator preset A = 0.5, ω = 1, σ = ε⁸.
fn averaged_powers(eps: f64) -> (f64, f64) {
    let cfg = SystemConfig::new(&[1.0], ff(1.0, eps.powi(8)), eps).unwrap();
    let ens = EnsembleTrajectories::single(Trajectory::oscillator(0.5, 1.0, 0.01, 4.0 * PI, &cfg).unwrap());
    let m = 64;
    let (mut pl, mut pk) = (0.0, 0.0);
    for i in 0..m {
        let t = 2.0 * PI + 2.0 * PI * i as f64 / m as f64;
        pl += radiated_power_larmor(t, &ens, &cfg).unwrap() / m as f64;
        pk += radiated_power_kernel(t, &ens, &cfg).unwrap() / m as f64;
    }
    (pl, pk)
}

#[test]
fn criterion_05_larmor_consistency() {
    let eps_list = [0.2, 0.1, 0.05, 0.02];
    let mut larmor_err: f64 = 0.0;
    let mut kernel_dev = Vec::new();
    for &eps in &eps_list {
        let (pl, pk) = averaged_powers(eps);
        let exact = eps.powi(3) * 0.25 / (24.0 * PI);
        larmor_err = larmor_err.max((pl / exact - 1.0).abs());
        kernel_dev.push((pk / pl - 1.0).abs());
    }
    let devs: Vec<String> = kernel_dev.iter().map(|d| format!("{d:.1e}")).collect();
    let monotone = kernel_dev.windows(2).all(|w| w[1] < w[0]);
    let pass = larmor_err <= 1e-6 && kernel_dev[3] <= 0.05 && monotone;
    report(
        5,
        "Larmor consistency",
        pass,
        &format!("Larmor rel err {larmor_err:.1e} <= 1e-6, |P_kernel/P_larmor - 1| = {devs:?}, monotone {monotone}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_energy_power_consistency() {
    let eps: f64 = 0.1;
    let cfg = SystemConfig::new(&[1.0], ff(1.0, eps.powi(8)), eps).unwrap();
    let tr = Trajectory::oscillator(0.5, 1.0, 0.01, 6.0, &cfg).unwrap();
    let quad = ModeQuadrature::new(&cfg.form_factor, RadialLayout { panels: 64, nodes_per_panel: 8 }, 2);
    let ens = EnsembleTrajectories::single(tr.clone());
    let h = 0.05;
    let mut worst: f64 = 0.0;
    for t in [2.0, 4.0, 5.0] {
        let de = (radiated_energy(t + h, &tr, &quad, &cfg, true).unwrap() - radiated_energy(t - h, &tr, &quad, &cfg, true).unwrap())
            / (2.0 * h);
        let p = radiated_power_kernel(t, &ens, &cfg).unwrap();
        worst = worst.max((de / p - 1.0).abs());
    }
    let pass = worst <= 1e-2;
    report(6, "energy-power consistency", pass, &format!("max rel err {worst:.2e} <= 1e-2"));
    assert!(pass);
}

#[test]
fn criterion_07_fockbox_exactness() {
    let mut energy_err: f64 = 0.0;
    let big = FockBasis::new(1, 16, 16).unwrap();
    for (c, w) in [(0.3, 1.0), (0.7, 0.5), (1.0, 2.0)] {
        let z = C::from_polar(c * w, 0.4);
        let h = van_hove_from_amplitudes(&[z], &[w], &big).unwrap();
        let g = lanczos_ground_state(&h, 1e-13, 100_000).unwrap();
        energy_err = energy_err.max((g.energy + z.norm_sqr() / (2.0 * w)).abs());
    }
    let b = FockBasis::new(1, 8, 8).unwrap();
    let mut residual: f64 = 0.0;
    for w in [0.5, 1.0, 2.0] {
        for c in [0.25, 0.5, 0.75, 1.0] {
            for phase in [0.0, 1.1, 2.5] {
                let z = C::from_polar(c * w, phase);
                let h = van_hove_from_amplitudes(&[z], &[w], &b).unwrap();
                let d = dressing_from_amplitudes(&[z / w], &b, DEFAULT_PAD).unwrap();
                let e = discrete_alpha(&[z], &[w]);
                residual = residual
                    .max(conjugation_residual(&h, &d.operator, &[w], e, &b, 0))
                    .max(intertwining_residual(&h, &d.operator, &[w], e, &b));
            }
        }
    }
    let pass = energy_err <= 1e-10 && residual <= 1e-6;
    report(7, "Fock-space exactness", pass, &format!("ground energy err {energy_err:.1e} <= 1e-10, dressing residual {residual:.1e} <= 1e-6"));
    assert!(pass);
}

#[test]
fn criterion_08_canonical_commutation_relations() {
    let b = FockBasis::new(3, 4, 6).unwrap();
    let interior = |j: usize| b.sector(j) + 2 <= b.m_max && b.state(j).iter().all(|&n| n as usize + 2 <= b.n_max);
    let restricted = |op: &SparseOperator| op.max_abs_restricted(|_| true, interior);
    let id = SparseOperator::identity(b.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut amp = || -> Vec<C> { (0..3).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect() };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (f, g) = (amp(), amp());
        let w: Vec<f64> = amp().iter().map(|c| 0.1 + c.norm()).collect();
        let (af, ag) = (annihilation_op(&f, &b).unwrap(), annihilation_op(&g, &b).unwrap());
        let fg = dot(&f, &g);
        let wf: Vec<C> = f.iter().zip(&w).map(|(f, w)| f * w).collect();
        let phi = field_op(&f, &b).unwrap().commutator(&field_op(&g, &b).unwrap());
        let n = second_quantization(&w, &b).unwrap();
        for r in [
            restricted(&af.commutator(&ag.adjoint()).sub(&id.scale(fg))),
            restricted(&af.commutator(&ag)),
            restricted(&phi.sub(&id.scale(C::new(0.0, fg.im)))),
            restricted(&n.commutator(&creation_op(&f, &b).unwrap()).sub(&creation_op(&wf, &b).unwrap())),
        ] {
            worst = worst.max(r);
        }
    }
    let pass = worst <= 1e-12;
    report(8, "canonical commutation relations", pass, &format!("max defect {worst:.1e} <= 1e-12 over 20 pairs"));
    assert!(pass);
}

#[test]
fn criterion_09_adiabatic_leakage() {
    let spec = ToyModelSpec::default();
    let cells = [(0.2, spec.sigma), (0.1, spec.sigma), (0.05, spec.sigma)];
    let rows = leakage_scan(&spec, &cells, &[1.0], &Wavepacket::default_for(&spec), 0, 1e-10).unwrap();
    let dressed: Vec<f64> = rows.iter().map(|r| r.leakage_dressed).collect();
    let ratio = rows[1].leakage_dressed / rows[1].leakage_bare;
    let decreasing = dressed.windows(2).all(|w| w[1] < w[0]);
    let norm = rows.iter().map(|r| r.norm_defect).fold(0.0, f64::max);
    let pass = ratio <= 0.1 && decreasing && norm <= 1e-8;
    report(
        9,
        "adiabatic leakage",
        pass,
        &format!("dressed/bare at eps=0.1: {ratio:.3} <= 0.1, dressed {dressed:.4?} decreasing {decreasing}, norm defect {norm:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_classical_field_validation() {
    let cfg = SystemConfig::new(&[1.0, -0.7], ff(1.0, 0.0), 0.1).unwrap();
    let m = field_modes(&ModeQuadrature::new(&cfg.form_factor, RadialLayout { panels: 2, nodes_per_panel: 16 }, 16));
    let x = Configuration::from_points(&[[0.0; 3], [1.3, 0.4, -0.7]]);
    let f = field_force(&equilibrium_field(&x, None, &m, &cfg), &x.positions, &m, &cfg);
    let g = grad_ground_energy(&x, &cfg).unwrap();
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let force_err = f.iter().zip(&g).map(|(f, g)| (f + g).abs()).fold(0.0, f64::max) / scale;

    let template = SystemConfig::new(&[1.0, 1.0], ff(1.0, 0.0), 0.1).unwrap();
    let modes = field_modes(&ModeQuadrature::new(&template.form_factor, RadialLayout { panels: 6, nodes_per_panel: 8 }, 24));
    let q0 = Configuration::from_points(&[[0.0; 3], [1.5, 0.0, 0.0]]);
    let v0 = [0.0, 0.6, 0.0, 0.0, -0.6, 0.0];
    let table = epsilon_scaling_study(&[0.2, 0.1, 0.05], 1.0, 0.125, &q0, &v0, &modes, &template).unwrap();
    let last = table.rows.last().unwrap();
    let closer = last.deviation_darwin < last.deviation_coulomb;
    let pass = force_err <= 1e-6 && (table.slope_coulomb - 2.0).abs() <= 0.3 && closer;
    report(
        10,
        "classical-field validation",
        pass,
        &format!(
            "static force rel err {force_err:.1e} <= 1e-6, Coulomb slope {:.3} in 2 +- 0.3, Darwin {:.2e} < Coulomb {:.2e} at eps=0.05",
            table.slope_coulomb, last.deviation_darwin, last.deviation_coulomb
        ),
    );
    assert!(pass);
}

/// Largest relative change of E_rad(1) across σ ∈ {1e-2, 1e-4, 0} on the
/// oscillator with frequency `omega`, measured against σ = 0.
fn ir_change(omega: f64) -> f64 {
    let eps = 0.1;
    let energies: Vec<f64> = [1e-2, 1e-4, 0.0]
        .iter()
        .map(|&s| {
            let cfg = SystemConfig::new(&[1.0], ff(1.0, s), eps).unwrap();
            let tr = Trajectory::oscillator(0.5, omega, 0.005, 1.0, &cfg).unwrap();
            let quad = ModeQuadrature::new(&cfg.form_factor, RadialLayout { panels: 32, nodes_per_panel: 8 }, 2);
            radiated_energy(1.0, &tr, &quad, &cfg, true).unwrap()
        })
        .collect();
    energies.iter().map(|e| (e / energies[2] - 1.0).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_11_infrared_robustness() {
    // One full period ends at t = 1, so the trajectory's net velocity change
    // vanishes; see the ledger for the ω = 1 behaviour reported below.
    let change = ir_change(2.0 * PI);
    let x = Configuration::from_points(&[[0.0, 0.0, 0.0], [1.3, 0.4, -0.2], [-0.5, 2.0, 0.1]]);
    let charges = [1.0, -0.5, 0.8];
    let exact = ground_energy(&x, &SystemConfig::new(&charges, ff(1.0, 0.0), 0.1).unwrap()).unwrap();
    let sigmas = [1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = sigmas
        .iter()
        .map(|&s| (ground_energy(&x, &SystemConfig::new(&charges, ff(1.0, s), 0.1).unwrap()).unwrap() - exact).abs())
        .collect();
    let slope = loglog_slope(&sigmas, &errs);
    let pass = change < 0.01 && (slope - 1.0).abs() <= 0.2;
    let unit_freq = ir_change(1.0);
    report(
        11,
        "infrared robustness",
        pass,
        &format!("E_rad(1) change {change:.1e} < 1e-2 at omega=2pi (omega=1: {unit_freq:.1e}), E_sigma slope {slope:.3} in 1 +- 0.2"),
    );
    assert!(pass);
}

fn run_binary(config: &Path, out: &Path, sub: &str) {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_nelson-lab"))
        .args([sub, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", "4", "--seed", "12"])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "{sub} exited with {status}");
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn criterion_12_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[trajectories]\nensemble_size = 6\nposition_spread = 0.05\nmomentum_spread = 0.05\nt_final = 0.5\n\
         [radiation]\nt_final = 7.0\naverage_to = 7.0\nsamples = 5\n\
         [classical_field]\nt_macro = 0.3\n",
    )
    .unwrap();
    let mut identical = true;
    let mut count = 0;
    for sub in ["trajectories", "radiation", "spectrum", "classical-field"] {
        let (a, b) = (dir.path().join(format!("{sub}-a")), dir.path().join(format!("{sub}-b")));
        run_binary(&config, &a, sub);
        run_binary(&config, &b, sub);
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        count += fa.len();
        identical &= !fa.is_empty() && fa == fb;
    }
    report(12, "reproducibility", identical, &format!("{count} CSV files byte-identical across two runs: {identical}"));
    assert!(identical);
}
