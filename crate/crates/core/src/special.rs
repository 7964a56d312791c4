//! Sine integral and the spherical-Bessel radial integrals behind the
//! smeared potentials and the Darwin tensor.
//!
//! Every function that appears divided by a power of its argument has a
//! "reduced" form (`si_over_x`, `darwin_g1`, ...) that is evaluated by power
//! series below `SERIES_CUT`, so nothing cancels near the origin.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const SERIES_CUT: f64 = 2.0;
const SERIES_TERMS: usize = 40;

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt, absolute accuracy ~1e-15.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < SERIES_CUT {
        x * si_over_x(x)
    } else {
        si_continued_fraction(x)
    }
}

/// Si(x) = π/2 + Im[e^{-ix} h] with h the Lentz evaluation of the
/// continued fraction for E₁(ix).
fn si_continued_fraction(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(t.cos(), -t.sin()) * h;
    FRAC_PI_2 + h.im
}

/// Si(x)/x, even in x, equal to 1 at the origin.
pub fn si_over_x(x: f64) -> f64 {
    let x = x.abs();
    if x >= SERIES_CUT {
        return si_continued_fraction(x) / x;
    }
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..SERIES_TERMS {
        let m = n as f64;
        term *= -x2 / ((2.0 * m) * (2.0 * m + 1.0));
        let add = term / (2.0 * m + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// d/dx [Si(x)/x] = (sin x − Si(x)) / x².
pub fn si_over_x_deriv(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    if x >= SERIES_CUT {
        return s * (x.sin() - si_continued_fraction(x)) / (x * x);
    }
    let x2 = x * x;
    // (-1)^n 2n x^{2n-1} / ((2n+1)(2n+1)!)
    let mut fact = 1.0; // (-1)^n x^{2n} / (2n+1)!
    let mut sum = 0.0;
    for n in 1..SERIES_TERMS {
        let m = n as f64;
        fact *= -x2 / ((2.0 * m) * (2.0 * m + 1.0));
        let add = 2.0 * m * fact / ((2.0 * m + 1.0) * x);
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    if x == 0.0 {
        0.0
    } else {
        s * sum
    }
}

/// Spherical Bessel j₁.
pub fn sph_j1(u: f64) -> f64 {
    if u.abs() < SERIES_CUT {
        let u2 = u * u;
        let mut term = u / 3.0;
        let mut sum = term;
        for m in 1..SERIES_TERMS {
            let m = m as f64;
            term *= -u2 / (2.0 * m * (2.0 * m + 3.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        u.sin() / (u * u) - u.cos() / u
    }
}

/// Spherical Bessel j₂.
pub fn sph_j2(u: f64) -> f64 {
    if u.abs() < SERIES_CUT {
        let u2 = u * u;
        let mut term = u2 / 15.0;
        let mut sum = term;
        for m in 1..SERIES_TERMS {
            let m = m as f64;
            term *= -u2 / (2.0 * m * (2.0 * m + 5.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (3.0 / (u * u * u) - 1.0 / u) * u.sin() - 3.0 * u.cos() / (u * u)
    }
}

/// g₁(u) = u⁻¹ ∫₀ᵘ j₁(t)/t dt = (Si(u) − j₁(u)) / (2u) and its derivative.
pub fn darwin_g1(u: f64) -> (f64, f64) {
    let u = u.abs();
    if u >= SERIES_CUT {
        let si = si_continued_fraction(u);
        let j1 = sph_j1(u);
        let f1 = 0.5 * (si - j1);
        return (f1 / u, (j1 - f1) / (u * u));
    }
    // (-1)^m (2m+2) u^{2m} / ((2m+1)(2m+3)!)
    let u2 = u * u;
    let mut base = 1.0 / 6.0; // (-1)^m u^{2m} / (2m+3)!
    let mut val = 2.0 * base;
    let mut der = 0.0;
    for m in 1..SERIES_TERMS {
        let mf = m as f64;
        base *= -u2 / ((2.0 * mf + 2.0) * (2.0 * mf + 3.0));
        let coef = (2.0 * mf + 2.0) / (2.0 * mf + 1.0);
        val += coef * base;
        if u > 0.0 {
            der += coef * base * 2.0 * mf / u;
        }
        if (coef * base).abs() < 1e-18 * val.abs() {
            break;
        }
    }
    (val, der)
}

/// g₂(u) = u⁻³ ∫₀ᵘ j₂(t) dt = (Si(u)/2 − 3j₁(u)/2) / u³ and its derivative.
pub fn darwin_g2(u: f64) -> (f64, f64) {
    let u = u.abs();
    if u >= SERIES_CUT {
        let si = si_continued_fraction(u);
        let j1 = sph_j1(u);
        let f2 = 0.5 * si - 1.5 * j1;
        let u3 = u * u * u;
        return (f2 / u3, (u * sph_j2(u) - 3.0 * f2) / (u3 * u));
    }
    // (-1)^m u^{2m} / (2^m m! (2m+5)!! (2m+3))
    let u2 = u * u;
    let mut base = 1.0 / 15.0; // (-1)^m u^{2m} / (2^m m! (2m+5)!!)
    let mut val = base / 3.0;
    let mut der = 0.0;
    for m in 1..SERIES_TERMS {
        let mf = m as f64;
        base *= -u2 / (2.0 * mf * (2.0 * mf + 5.0));
        let t = base / (2.0 * mf + 3.0);
        val += t;
        if u > 0.0 {
            der += t * 2.0 * mf / u;
        }
        if t.abs() < 1e-18 * val.abs() {
            break;
        }
    }
    (val, der)
}
