//! Gauss–Legendre rules, the mode quadrature over the shell σ < |k| < Λ,
//! compensated summation and cubic Filon weights for ∫ e^{iθs} f(s) ds.

use crate::model::FormFactor;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre on [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect())
}

/// Composite Gauss–Legendre with `n_per` nodes on each of `n_panels`
/// equal panels of [a, b].
pub fn composite_gauss_legendre(n_panels: usize, n_per: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n_per);
    let h = (b - a) / n_panels as f64;
    let mut nodes = Vec::with_capacity(n_panels * n_per);
    let mut weights = Vec::with_capacity(n_panels * n_per);
    for p in 0..n_panels {
        let lo = a + p as f64 * h;
        for (t, v) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (t + 1.0));
            weights.push(0.5 * h * v);
        }
    }
    (nodes, weights)
}

/// Neumaier-compensated sum; the result depends only on the order of `xs`.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Product rule on the unit sphere: Gauss–Legendre in cos θ times a uniform
/// azimuthal rule with twice as many points. Integrates spherical harmonics
/// exactly up to degree 2·n_theta − 1.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(n_theta: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_theta);
        let n_phi = 2 * n_theta;
        let wp = 2.0 * PI / n_phi as f64;
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * wp;
                dirs.push([s * phi.cos(), s * phi.sin(), *c]);
                weights.push(w * wp);
            }
        }
        SphereRule { dirs, weights }
    }

    pub fn degree(&self) -> usize {
        // n_theta recovered from the node count n_theta * 2 n_theta
        let n_theta = ((self.dirs.len() / 2) as f64).sqrt().round() as usize;
        2 * n_theta - 1
    }
}

/// Radial layout of a mode quadrature.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialLayout {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

/// Discretization of ∫ d³k over σ < |k| < Λ. Weights carry the k² Jacobian,
/// so Σ_q w_q f(k_q) ≈ ∫ f(k) d³k.
#[derive(Clone, Debug)]
pub struct ModeQuadrature {
    pub k: Vec<[f64; 3]>,
    pub kabs: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index of the radial node each mode belongs to.
    pub radial_index: Vec<usize>,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub sphere: SphereRule,
}

impl ModeQuadrature {
    pub fn new(ff: &FormFactor, radial: RadialLayout, n_theta: usize) -> Self {
        let (rn, rw) = composite_gauss_legendre(radial.panels, radial.nodes_per_panel, ff.sigma_ir, ff.lambda_uv);
        Self::from_parts(rn, rw, SphereRule::product(n_theta))
    }

    pub fn from_parts(radial_nodes: Vec<f64>, radial_weights: Vec<f64>, sphere: SphereRule) -> Self {
        let n = radial_nodes.len() * sphere.dirs.len();
        let mut k = Vec::with_capacity(n);
        let mut kabs = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut radial_index = Vec::with_capacity(n);
        for (i, (&r, &wr)) in radial_nodes.iter().zip(&radial_weights).enumerate() {
            for (d, &wa) in sphere.dirs.iter().zip(&sphere.weights) {
                k.push([r * d[0], r * d[1], r * d[2]]);
                kabs.push(r);
                weights.push(wr * wa * r * r);
                radial_index.push(i);
            }
        }
        ModeQuadrature { k, kabs, weights, radial_index, radial_nodes, radial_weights, sphere }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Keep the modes with k_z > 0 and double their weights. Exact for
    /// integrands with f(−k) = f(k)*, after taking the real part.
    pub fn half_space(&self) -> ModeQuadrature {
        let mut out = ModeQuadrature {
            k: Vec::new(),
            kabs: Vec::new(),
            weights: Vec::new(),
            radial_index: Vec::new(),
            radial_nodes: self.radial_nodes.clone(),
            radial_weights: self.radial_weights.clone(),
            sphere: self.sphere.clone(),
        };
        for q in 0..self.len() {
            if self.k[q][2] > 0.0 {
                out.k.push(self.k[q]);
                out.kabs.push(self.kabs[q]);
                out.weights.push(2.0 * self.weights[q]);
                out.radial_index.push(self.radial_index[q]);
            }
        }
        out
    }
}

/// Monomial coefficients (in v = (s − t0)/h) of the Lagrange basis through
/// the scaled nodes `v`.
fn lagrange_monomials(v: &[f64]) -> Vec<[f64; 4]> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut poly = [0.0; 4];
        poly[0] = 1.0;
        let mut deg = 0;
        let mut denom = 1.0;
        for m in 0..n {
            if m == k {
                continue;
            }
            // poly *= (v - v_m)
            let mut next = [0.0; 4];
            for d in 0..=deg {
                next[d + 1] += poly[d];
                next[d] -= v[m] * poly[d];
            }
            poly = next;
            deg += 1;
            denom *= v[k] - v[m];
        }
        for c in poly.iter_mut() {
            *c /= denom;
        }
        out.push(poly);
    }
    out
}

/// ∫₀¹ vᵖ e^{iφv} dv for p = 0..=3.
fn unit_moments(phi: f64) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    if phi.abs() < 1.0 {
        // Σ_n (iφ)ⁿ / (n! (p+n+1))
        let iphi = Complex64::new(0.0, phi);
        for (p, mp) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for n in 0..40 {
                if n > 0 {
                    term = term * iphi / n as f64;
                }
                let add = term / (p + n + 1) as f64;
                sum += add;
                if add.norm() < 1e-18 {
                    break;
                }
            }
            *mp = sum;
        }
    } else {
        let e = Complex64::new(phi.cos(), phi.sin());
        let inv = Complex64::new(0.0, -1.0 / phi);
        m[0] = (e - 1.0) * inv;
        for p in 1..4 {
            m[p] = (e - m[p - 1] * p as f64) * inv;
        }
    }
    m
}

/// Stencil of up to four consecutive nodes used for interval `i`.
fn stencil(i: usize, n: usize) -> std::ops::Range<usize> {
    let width = n.min(4);
    let start = i.saturating_sub(1).min(n - width);
    start..start + width
}

/// Weights w_n with Σ_n w_n f(t_n) ≈ ∫_{t_0}^{t_end} e^{iθs} f(s) ds, using a
/// local cubic through four neighbouring samples on each interval and exact
/// oscillatory moments. `t_end` may fall inside an interval.
pub fn filon_weights(times: &[f64], theta: f64, t_end: f64) -> Vec<Complex64> {
    let n = times.len();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    if n < 2 || t_end <= times[0] {
        return w;
    }
    for i in 0..n - 1 {
        let t0 = times[i];
        if t0 >= t_end {
            break;
        }
        let t1 = times[i + 1].min(t_end);
        let h = times[i + 1] - t0;
        let frac = (t1 - t0) / h;
        let idx = stencil(i, n);
        let v: Vec<f64> = idx.clone().map(|j| (times[j] - t0) / h).collect();
        let basis = lagrange_monomials(&v);
        // ∫_{t0}^{t1} e^{iθs} vᵖ ds = h e^{iθt0} frac^{p+1} ∫₀¹ uᵖ e^{iθh·frac·u} du
        let mu = unit_moments(theta * h * frac);
        let phase = Complex64::new((theta * t0).cos(), (theta * t0).sin()) * h;
        let mut scaled = [Complex64::new(0.0, 0.0); 4];
        let mut fp = frac;
        for p in 0..4 {
            scaled[p] = mu[p] * fp;
            fp *= frac;
        }
        for (b, j) in basis.iter().zip(idx) {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..v.len() {
                acc += scaled[p] * b[p];
            }
            w[j] += phase * acc;
        }
    }
    w
}

/// Cubic Lagrange interpolation weights for evaluating at `t` and the
/// derivative at `t`, using the four samples nearest to it.
pub fn cubic_interp_weights(times: &[f64], t: f64) -> (std::ops::Range<usize>, Vec<f64>, Vec<f64>) {
    let n = times.len();
    let i = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(n.saturating_sub(2)),
        Err(i) => i.saturating_sub(1).min(n.saturating_sub(2)),
    };
    let idx = stencil(i, n);
    let t0 = times[i];
    let h = if n > 1 { times[i + 1] - times[i] } else { 1.0 };
    let v: Vec<f64> = idx.clone().map(|j| (times[j] - t0) / h).collect();
    let x = (t - t0) / h;
    let basis = lagrange_monomials(&v);
    let mut val = Vec::with_capacity(v.len());
    let mut der = Vec::with_capacity(v.len());
    for b in &basis {
        val.push(b[0] + x * (b[1] + x * (b[2] + x * b[3])));
        der.push((b[1] + x * (2.0 * b[2] + 3.0 * x * b[3])) / h);
    }
    (idx, val, der)
}
