//! Special functions used by the Green's-function and boundary-integral code.
//!
//! Integer-order Bessel functions of the first kind come from Miller's
//! backward recurrence normalized by `J0 + 2 Σ J_2k = 1`; `Y0` and `Y1`
//! follow from their Neumann series in the `J_n`, which stay well
//! conditioned at every argument the solvers use. Exponential integrals
//! `E_n(z)` for real `z > 0` use the ascending series below 1 and a
//! continued fraction above.

use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const RESCALE_LIMIT: f64 = 1e250;

/// `J_0(x), …, J_nmax(x)` for real `x ≥ 0`.
pub fn bessel_j_table(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_table: x = {x}");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-3 {
        // Short ascending series; the backward recurrence would only
        // shuffle huge numbers around here.
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = jn_series(n, x);
        }
        return out;
    }
    let top = start_index(nmax, x);
    let mut buf = vec![0.0; top + 2];
    buf[top + 1] = 0.0;
    buf[top] = 1e-300;
    let mut k = top;
    while k > 0 {
        buf[k - 1] = (2.0 * k as f64 / x) * buf[k] - buf[k + 1];
        k -= 1;
        if buf[k].abs() > RESCALE_LIMIT {
            for v in buf[k..].iter_mut() {
                *v /= RESCALE_LIMIT;
            }
        }
    }
    let mut norm = buf[0];
    let mut i = 2;
    while i <= top {
        norm += 2.0 * buf[i];
        i += 2;
    }
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = if n <= top { buf[n] / norm } else { 0.0 };
    }
    out
}

/// Starting index for Miller's recurrence (even, well beyond the turning point).
pub fn start_index(nmax: usize, x: f64) -> usize {
    let base = (nmax as f64).max(x);
    let m = (base + 10.0 * base.cbrt() + 14.0).ceil() as usize;
    m + (m % 2)
}

fn jn_series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let q = -h * h;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `J_n(x)` for integer `n` and real `x`.
pub fn bessel_jn(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_table(m, x.abs())[m];
    let mut sign = 1.0;
    if n < 0 && m % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && m % 2 == 1 {
        sign = -sign;
    }
    sign * v
}

/// `J_0(x)`.
pub fn bessel_j0(x: f64) -> f64 {
    bessel_j_table(0, x.abs())[0]
}

/// `J_1(x)`.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_jn(1, x)
}

/// `(J_0(x), J_1(x), Y_0(x), Y_1(x))` for `x > 0`, sharing one recurrence.
pub fn bessel_01(x: f64) -> (f64, f64, f64, f64) {
    assert!(x > 0.0, "bessel_01 requires x > 0, got {x}");
    let top = start_index(1, x);
    let j = bessel_j_table(top, x);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k < top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * (lg * j[0] - 2.0 * s0);
    let y1 = 2.0 / PI * (-j[0] / x + lg * j[1] + s1);
    (j[0], j[1], y0, y1)
}

/// `Y_0(x)` for `x > 0`.
pub fn bessel_y0(x: f64) -> f64 {
    bessel_01(x).2
}

/// `Y_1(x)` for `x > 0`.
pub fn bessel_y1(x: f64) -> f64 {
    bessel_01(x).3
}

/// `Y_n(x)` for integer `n` and `x > 0`, by upward recurrence from `Y_0`, `Y_1`.
pub fn bessel_yn(n: i32, x: f64) -> f64 {
    let (_, _, y0, y1) = bessel_01(x);
    let m = n.unsigned_abs();
    let v = match m {
        0 => y0,
        1 => y1,
        _ => {
            let (mut a, mut b) = (y0, y1);
            for k in 1..m {
                let c = 2.0 * k as f64 / x * b - a;
                a = b;
                b = c;
            }
            b
        }
    };
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Digamma at a positive integer: `ψ(k) = −γ + Σ_{s<k} 1/s`.
pub fn digamma_int(k: u32) -> f64 {
    assert!(k >= 1);
    -EULER_GAMMA + (1..k).map(|s| 1.0 / s as f64).sum::<f64>()
}

/// `E_1(z)` for real `z > 0`.
pub fn expint_e1(z: f64) -> f64 {
    assert!(z > 0.0, "expint_e1 requires z > 0, got {z}");
    if z < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let mut k = 1.0;
        loop {
            term *= -z / k;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
            k += 1.0;
        }
        -EULER_GAMMA - z.ln() - sum
    } else {
        continued_fraction_e1(z)
    }
}

fn continued_fraction_e1(z: f64) -> f64 {
    // Modified Lentz evaluation of e^{-z} / (z + 1 - 1²/(z + 3 - 2²/(z + 5 - ...))).
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `E_1(z), …, E_nmax(z)` for real `z > 0`, by upward recurrence
/// `E_{n+1} = (e^{−z} − z E_n)/n`.
///
/// The recurrence loses relative accuracy once `n` falls well below `z`, but
/// the absolute error stays near `1e-16 · e^{-z} z^z / z!`, which is tiny
/// compared with the Ewald tolerances.
pub fn expint_table(nmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax];
    expint_fill(z, &mut out);
    out
}

/// Fills `out[n-1] = E_n(z)` for `n = 1..=out.len()`.
pub fn expint_fill(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let ez = (-z).exp();
    let mut e = expint_e1(z);
    out[0] = e;
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        e = (ez - z * e) / n as f64;
        *slot = e;
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}
