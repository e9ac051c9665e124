//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's special functions: Bessel functions come
//! from their integral representations and integrals from double-exponential
//! quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

const EULER: f64 = 0.577_215_664_901_532_9;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// `f` receives the abscissa and its distance to the nearer endpoint, so
/// integrands with endpoint singularities can be evaluated without
/// cancellation.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> C64
where
    F: Fn(f64, f64) -> C64,
{
    let half = 0.5 * (b - a);
    let node = |t: f64| -> (f64, f64, f64) {
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        // distance from the nearer endpoint in units of `half`
        let d = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let x = if t < 0.0 { a + half * d } else { b - half * d };
        (x, half * d, w)
    };
    let mut h = 0.5;
    let mut prev = C64::new(f64::NAN, 0.0);
    for _ in 0..12 {
        let mut sum = C64::new(0.0, 0.0);
        let mut k: i64 = 0;
        loop {
            let t = k as f64 * h;
            let mut term = C64::new(0.0, 0.0);
            for s in if k == 0 { vec![0.0] } else { vec![-t, t] } {
                let (x, dist, w) = node(s);
                if dist > 0.0 {
                    term += f(x, dist) * w;
                }
            }
            sum += term;
            if k > 0 && (term.norm() * h < 1e-20 || t > 6.5) {
                break;
            }
            k += 1;
        }
        let est = sum * h * half;
        if (est - prev).norm() <= tol * est.norm().max(1.0) {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
    prev
}

/// Real Gauss-type trapezoid rule on a periodic interval (spectrally accurate
/// for smooth periodic integrands).
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

/// `J_n(x) = (1/π) ∫_0^π cos(nτ − x sin τ) dτ`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    // periodic in τ over [0, 2π] after symmetrization
    periodic_trapezoid(|t| (n as f64 * t - x * t.sin()).cos(), 256) / (2.0 * PI)
}

/// `Y_n(x) = (1/π)∫_0^π sin(x sin θ − nθ) dθ − (1/π)∫_0^∞ (e^{nt} + (−1)^n e^{−nt}) e^{−x sinh t} dt`.
pub fn bessel_y(n: i32, x: f64) -> f64 {
    let first = tanh_sinh(|t, _| C64::new((x * t.sin() - n as f64 * t).sin(), 0.0), 0.0, PI, 1e-15).re;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let upper = (60.0 / x).asinh() + 1.0;
    let second = tanh_sinh(
        |t, _| {
            C64::new(
                ((n as f64 * t).exp() + sign * (-(n as f64) * t).exp()) * (-x * t.sinh()).exp(),
                0.0,
            )
        },
        0.0,
        upper,
        1e-15,
    )
    .re;
    (first - second) / PI
}

/// `H0(ω; r) = −(i/4) H0⁽¹⁾(ωr)` from the integral representations.
pub fn h0_reference(omega: f64, r: f64) -> C64 {
    let z = omega * r;
    C64::new(0.0, -0.25) * C64::new(bessel_j(0, z), bessel_y(0, z))
}

/// `(i/8) ζ H1⁽¹⁾(ζ)`.
pub fn double_layer_reference(zeta: f64) -> C64 {
    C64::new(0.0, 0.125) * zeta * C64::new(bessel_j(1, zeta), bessel_y(1, zeta))
}

/// `∫_0^{2π} k(2|sin(s/2)|) e^{−ins} ds` with tanh-sinh handling the
/// logarithmic endpoint singularities.
pub fn chord_fourier<K: Fn(f64) -> C64>(k: K, n: i64) -> C64 {
    tanh_sinh(
        |s, dist| {
            // ρ = 2 sin(d/2) where d is the distance to the nearer endpoint
            let rho = 2.0 * (0.5 * dist).sin();
            k(rho) * C64::from_polar(1.0, -(n as f64) * s)
        },
        0.0,
        2.0 * PI,
        1e-14,
    )
}

/// `γ − ln 2 − iπ/2`.
pub fn gamma0() -> C64 {
    C64::new(EULER - std::f64::consts::LN_2, -0.5 * PI)
}
