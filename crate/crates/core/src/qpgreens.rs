//! Quasi-periodic Helmholtz Green's function of the honeycomb lattice.
//!
//! `G(κ, ω; x)` solves `(Δ + ω²) G = Σ_e e^{iκ·e} δ(x − e)`. It is evaluated
//! with the two-dimensional Ewald split: a Gaussian-damped spectral series
//!
//! ```text
//! (1/|Y|) Σ_q e^{i(κ+q)·x} exp((ω² − |κ+q|²)/(4η²)) / (ω² − |κ+q|²)
//! ```
//!
//! plus a spatial series `−(1/4π) Σ_e e^{iκ·e} Σ_p (ω/2η)^{2p}/p! E_{p+1}(η²|x−e|²)`.
//! Near the origin the function is split further into the free-space part
//! `H0(ω; x) = −(i/4) H0⁽¹⁾(ω|x|)`, the finite plane-wave sum over a resonant
//! shell, and a smooth remainder.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{BlochVector, LatticeSpec, ResonantShell, Vec2};
use crate::special::{bessel_01, bessel_j_table, expint_fill, start_index, EULER_GAMMA};

/// `γ0 = γ − ln 2 − iπ/2`.
pub fn gamma0() -> C64 {
    C64::new(EULER_GAMMA - std::f64::consts::LN_2, -0.5 * PI)
}

/// Ewald splitting parameter and truncation controls.
///
/// `spectral_radius` and `spatial_radius` cap the number of lattice shells
/// (max-norm in the integer labels); `series_order` caps the order of the
/// spatial exponential-integral series. Sums stop early once two successive
/// shells are bounded by `target_tol / 10`. When `eta` is smaller than
/// `ω/(2√2)` it is raised to that value so that the Gaussian factor
/// `exp(ω²/4η²)` never exceeds `e²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldParams {
    pub eta: f64,
    pub spectral_radius: usize,
    pub spatial_radius: usize,
    pub series_order: usize,
    pub target_tol: f64,
}

impl EwaldParams {
    /// Defaults with `η = 2√π / √|Y|`.
    ///
    /// Twice the value that balances the number of terms in the two series:
    /// spectral terms cost two complex multiplications each, spatial terms an
    /// exponential-integral evaluation, so shifting work to the spectral side
    /// is several times faster at the same accuracy.
    pub fn for_lattice(lattice: &LatticeSpec) -> Self {
        Self {
            eta: 2.0 * (PI / lattice.cell_area).sqrt(),
            spectral_radius: 60,
            spatial_radius: 60,
            series_order: 80,
            target_tol: 1e-13,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.spectral_radius > MAX_SERIES {
            return Err(Error::InvalidParameter(format!(
                "spectral_radius must not exceed {MAX_SERIES}"
            )));
        }
        if self.series_order < 4 {
            return Err(Error::InvalidParameter("series_order must be at least 4".into()));
        }
        if !(self.target_tol >= 1e-14) {
            return Err(Error::InvalidParameter("target_tol must be at least 1e-14".into()));
        }
        Ok(())
    }

    /// The splitting parameter actually used at frequency `omega`.
    pub fn effective_eta(&self, omega: f64) -> f64 {
        self.eta.max(omega.abs() / (2.0 * std::f64::consts::SQRT_2))
    }
}

/// Value and spatial gradient of `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensValue {
    pub value: C64,
    pub grad_x: [C64; 2],
    pub est_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct SpectralTerm {
    l1: i64,
    l2: i64,
    k: Vec2,
    weight: f64,
}

const MAX_SERIES: usize = 128;
const STACK_POWERS: usize = 24;

#[derive(Debug, Clone, Copy)]
struct SpatialTerm {
    e: Vec2,
    phase: C64,
}

/// Precomputed Ewald tables for one `(κ, ω)`, valid for `|x| ≤ radius`.
///
/// When built with a resonant shell, the plane waves of that shell are
/// removed from the spectral series analytically, so the evaluation returns
/// `G − G_shell` without cancellation even at `ω = ω̄`.
#[derive(Debug, Clone)]
pub struct QpGreens {
    pub kappa: BlochVector,
    pub omega: f64,
    pub eta: f64,
    lattice_a: f64,
    spectral: Vec<SpectralTerm>,
    spatial: Vec<SpatialTerm>,
    coeffs: Vec<f64>,
    radius: f64,
    est_error: f64,
    kappa_vec: Vec2,
    k1: Vec2,
    k2: Vec2,
    lmax: i64,
}

fn shell_indices(s: i64) -> Vec<(i64, i64)> {
    if s == 0 {
        return vec![(0, 0)];
    }
    let mut v = Vec::with_capacity(8 * s as usize);
    for l1 in -s..=s {
        v.push((l1, -s));
        v.push((l1, s));
    }
    for l2 in (-s + 1)..s {
        v.push((-s, l2));
        v.push((s, l2));
    }
    v
}

impl QpGreens {
    /// Tables for `G` itself.
    pub fn new(
        lattice: &LatticeSpec,
        kappa: &BlochVector,
        omega: f64,
        params: &EwaldParams,
        radius: f64,
    ) -> Result<Self> {
        Self::build(lattice, kappa, omega, params, radius, None)
    }

    /// Tables for `G − G_shell`.
    pub fn without_shell(
        lattice: &LatticeSpec,
        kappa: &BlochVector,
        omega: f64,
        params: &EwaldParams,
        radius: f64,
        shell: &ResonantShell,
    ) -> Result<Self> {
        Self::build(lattice, kappa, omega, params, radius, Some(shell))
    }

    fn build(
        lattice: &LatticeSpec,
        kappa: &BlochVector,
        omega: f64,
        params: &EwaldParams,
        radius: f64,
        shell: Option<&ResonantShell>,
    ) -> Result<Self> {
        params.validate()?;
        let eta = params.effective_eta(omega);
        let w2 = omega * omega;
        let area = lattice.cell_area;
        let four_eta2 = 4.0 * eta * eta;
        let guard = 1e-8 * lattice.recip_scale();
        let stop = params.target_tol / 10.0;
        let in_shell = |l1: i64, l2: i64| {
            shell.is_some_and(|s| s.members.iter().any(|m| m.l1 == l1 && m.l2 == l2))
        };

        let mut spectral = Vec::new();
        let mut quiet = 0;
        let mut est_spectral = f64::INFINITY;
        for s in 0..=params.spectral_radius as i64 {
            let mut bound = 0.0;
            let mut min_k = f64::INFINITY;
            for (l1, l2) in shell_indices(s) {
                let k = kappa.k + lattice.reciprocal_point(l1, l2);
                let kn = k.norm();
                min_k = min_k.min(kn);
                let d = w2 - kn * kn;
                let weight = if in_shell(l1, l2) {
                    if d == 0.0 {
                        1.0 / (four_eta2 * area)
                    } else {
                        (d / four_eta2).exp_m1() / (area * d)
                    }
                } else {
                    if (kn - omega).abs() <= guard {
                        return Err(Error::SingularFrequency {
                            omega,
                            omega_bar: kn,
                            gap: (kn - omega).abs(),
                        });
                    }
                    (d / four_eta2).exp() / (area * d)
                };
                bound += weight.abs() * (1.0 + kn * radius.max(1.0));
                spectral.push(SpectralTerm { l1, l2, k, weight });
            }
            if bound < stop && min_k > omega {
                quiet += 1;
                if quiet >= 2 {
                    est_spectral = bound;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !est_spectral.is_finite() {
            return Err(Error::NotConverged {
                est_error: f64::INFINITY,
                target_tol: params.target_tol,
            });
        }
        let negligible = 1e-4 * stop;
        spectral.retain(|t| t.weight.abs() * (1.0 + t.k.norm() * radius.max(1.0)) > negligible);
        let lmax = spectral
            .iter()
            .map(|t| t.l1.abs().max(t.l2.abs()))
            .max()
            .unwrap_or(0);

        let ratio = (omega / (2.0 * eta)).powi(2);
        let mut coeffs = vec![1.0];
        let mut c = 1.0;
        let mut p = 0;
        loop {
            p += 1;
            c *= ratio / p as f64;
            if p as f64 > ratio && c / p as f64 * (1.0 + ratio) < 1e-3 * params.target_tol {
                break;
            }
            if p > params.series_order || p + 2 >= MAX_SERIES {
                return Err(Error::NotConverged {
                    est_error: c,
                    target_tol: params.target_tol,
                });
            }
            coeffs.push(c);
        }

        let mut spatial = Vec::new();
        let mut quiet = 0;
        let mut est_spatial = f64::INFINITY;
        let csum: f64 = coeffs.iter().sum();
        for s in 0..=params.spatial_radius as i64 {
            let mut bound = 0.0;
            for (l1, l2) in shell_indices(s) {
                let e = lattice.lattice_point(l1, l2);
                let dist = (e.norm() - radius).max(0.0);
                let z = eta * eta * dist * dist;
                let b = if dist == 0.0 {
                    f64::INFINITY
                } else {
                    // E_{p+1}(z) ≤ e^{-z}/z, with derivative bound e^{-z}/z · (1 + 2η²dist).
                    csum * (-z).exp() / z * (1.0 + 2.0 * eta * eta * dist) / (4.0 * PI)
                };
                bound += b;
                if b > 1e-3 * stop {
                    let phase = C64::from_polar(1.0, kappa.k.dot(&e));
                    spatial.push(SpatialTerm { e, phase });
                }
            }
            if bound < stop {
                quiet += 1;
                if quiet >= 2 {
                    est_spatial = bound;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !est_spatial.is_finite() {
            return Err(Error::NotConverged {
                est_error: f64::INFINITY,
                target_tol: params.target_tol,
            });
        }

        Ok(Self {
            kappa: *kappa,
            omega,
            eta,
            lattice_a: lattice.a,
            spectral,
            spatial,
            coeffs,
            radius,
            est_error: est_spectral + est_spatial,
            kappa_vec: kappa.k,
            k1: lattice.k1,
            k2: lattice.k2,
            lmax,
        })
    }

    /// Number of spectral terms, spatial terms, and series coefficients.
    pub fn table_sizes(&self) -> (usize, usize, usize) {
        (self.spectral.len(), self.spatial.len(), self.coeffs.len())
    }

    /// Estimated truncation error of the tables.
    pub fn est_error(&self) -> f64 {
        self.est_error
    }

    fn check_radius(&self, x: Vec2) -> Result<()> {
        if x.norm() > self.radius * (1.0 + 1e-12) + 1e-14 {
            return Err(Error::InvalidParameter(format!(
                "|x| = {} exceeds the table radius {}",
                x.norm(),
                self.radius
            )));
        }
        Ok(())
    }

    fn spectral_sum(&self, x: Vec2, grad: bool) -> (C64, [C64; 2]) {
        // e^{i(κ + l1 κ1 + l2 κ2)·x} = e^{iκ·x} u1^{l1} u2^{l2}.
        let l = self.lmax as usize;
        let mut s1 = [C64::new(0.0, 0.0); 2 * STACK_POWERS + 1];
        let mut s2 = [C64::new(0.0, 0.0); 2 * STACK_POWERS + 1];
        let (mut h1, mut h2);
        let (p1, p2): (&mut [C64], &mut [C64]) = if l <= STACK_POWERS {
            (&mut s1[..], &mut s2[..])
        } else {
            h1 = vec![C64::new(0.0, 0.0); 2 * l + 1];
            h2 = vec![C64::new(0.0, 0.0); 2 * l + 1];
            (&mut h1[..], &mut h2[..])
        };
        powers(C64::from_polar(1.0, self.k1.dot(&x)), l, p1);
        powers(C64::from_polar(1.0, self.k2.dot(&x)), l, p2);
        let base = C64::from_polar(1.0, self.kappa_vec.dot(&x));
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for t in &self.spectral {
            let ph = p1[(t.l1 + self.lmax) as usize] * p2[(t.l2 + self.lmax) as usize] * t.weight;
            v += ph;
            if grad {
                g[0] += ph * t.k.x;
                g[1] += ph * t.k.y;
            }
        }
        let v = v * base;
        if grad {
            let ib = C64::new(-base.im, base.re);
            g[0] *= ib;
            g[1] *= ib;
        }
        (v, g)
    }

    /// `Σ_p c_p E_{p+1}(z)` and `Σ_p c_p E_p(z)` with `E_0(z) = e^{-z}/z`.
    fn radial_series(&self, z: f64, grad: bool) -> (f64, f64) {
        let n = self.coeffs.len();
        let mut table = [0.0; MAX_SERIES];
        expint_fill(z, &mut table[..n]);
        let s: f64 = self.coeffs.iter().zip(&table[..n]).map(|(c, e)| c * e).sum();
        if !grad {
            return (s, 0.0);
        }
        let mut d = self.coeffs[0] * (-z).exp() / z;
        for p in 1..n {
            d += self.coeffs[p] * table[p - 1];
        }
        (s, d)
    }

    fn spatial_term(&self, t: &SpatialTerm, x: Vec2, grad: bool) -> (C64, [C64; 2]) {
        let d = x - t.e;
        let z = self.eta * self.eta * d.norm_squared();
        if z > 700.0 {
            return (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2]);
        }
        let (s, ds) = self.radial_series(z, grad);
        let v = t.phase * (-s / (4.0 * PI));
        // ∂/∂x E_{p+1}(η²|x−e|²) = −E_p · 2η²(x − e).
        let f = 2.0 * self.eta * self.eta * ds / (4.0 * PI);
        let g = if grad {
            [t.phase * (f * d.x), t.phase * (f * d.y)]
        } else {
            [C64::new(0.0, 0.0); 2]
        };
        (v, g)
    }

    fn is_origin(e: &Vec2) -> bool {
        e.x == 0.0 && e.y == 0.0
    }

    /// Value and gradient at an off-lattice `x`.
    pub fn eval(&self, x: Vec2) -> Result<GreensValue> {
        self.check_radius(x)?;
        let (mut v, mut g) = self.spectral_sum(x, true);
        for t in &self.spatial {
            if (x - t.e).norm() <= 1e-10 * self.lattice_a {
                return Err(Error::OnSourcePoint);
            }
            let (tv, tg) = self.spatial_term(t, x, true);
            v += tv;
            g[0] += tg[0];
            g[1] += tg[1];
        }
        Ok(GreensValue {
            value: v,
            grad_x: g,
            est_error: self.est_error,
        })
    }

    /// Value only, at an off-lattice `x`.
    pub fn value(&self, x: Vec2) -> Result<C64> {
        self.check_radius(x)?;
        let (mut v, _) = self.spectral_sum(x, false);
        for t in &self.spatial {
            if (x - t.e).norm() <= 1e-10 * self.lattice_a {
                return Err(Error::OnSourcePoint);
            }
            v += self.spatial_term(t, x, false).0;
        }
        Ok(v)
    }

    /// `(G − H0)(x)` (or `G − G_shell − H0` for shell-free tables), including `x = 0`.
    pub fn regular_value(&self, x: Vec2) -> Result<C64> {
        self.check_radius(x)?;
        let (mut v, _) = self.spectral_sum(x, false);
        for t in &self.spatial {
            if Self::is_origin(&t.e) {
                v += self.origin_minus_h0(x.norm());
            } else {
                v += self.spatial_term(t, x, false).0;
            }
        }
        Ok(v)
    }

    /// `∇(G − H0)(x)` (or the shell-free variant), including `x = 0`.
    pub fn regular_grad(&self, x: Vec2) -> Result<[C64; 2]> {
        self.check_radius(x)?;
        let (_, mut g) = self.spectral_sum(x, true);
        for t in &self.spatial {
            let tg = if Self::is_origin(&t.e) {
                self.origin_minus_h0_grad(x)
            } else {
                self.spatial_term(t, x, true).1
            };
            g[0] += tg[0];
            g[1] += tg[1];
        }
        Ok(g)
    }

    /// `−(1/4π) Σ_p c_p E_{p+1}(η²r²) − H0(ω r)`, a smooth function of `r²`.
    fn origin_minus_h0(&self, r: f64) -> C64 {
        let w = self.omega;
        if r < 1e-8 * self.lattice_a || w * r == 0.0 {
            let mut tail = 0.0;
            for (p, c) in self.coeffs.iter().enumerate().skip(1) {
                tail += c / p as f64;
            }
            let g0 = gamma0();
            return C64::new(
                (EULER_GAMMA + 2.0 * self.eta.ln()) / (4.0 * PI) - tail / (4.0 * PI),
                0.0,
            ) - (C64::new(w.ln(), 0.0) + g0) / (2.0 * PI);
        }
        let z = self.eta * self.eta * r * r;
        let (s, _) = self.radial_series(z, false);
        -s / (4.0 * PI) - h0_radial(w * r)
    }

    fn origin_minus_h0_grad(&self, x: Vec2) -> [C64; 2] {
        let r = x.norm();
        let w = self.omega;
        if r == 0.0 {
            return [C64::new(0.0, 0.0); 2];
        }
        let z = self.eta * self.eta * r * r;
        let n = self.coeffs.len();
        let mut table = [0.0; MAX_SERIES];
        expint_fill(z, &mut table[..n]);
        let mut tail = 0.0;
        for p in 1..n {
            tail += self.coeffs[p] * table[p - 1];
        }
        // Spatial p = 0 term gives (1/2π) e^{-z} x / r²; ∇H0 = (i/4) ω H1(ωr) x / r
        // = x/(2π r²) + [−(i/4) ω J1 + (1/4) ω Ỹ1] x / r with Ỹ1 = Y1 + 2/(π ω r).
        let (_, j1, _, y1_reg) = bessel_regular_parts(w * r);
        let radial = C64::new((-z).exp_m1() / (2.0 * PI * r * r), 0.0)
            + C64::new(2.0 * self.eta * self.eta * tail / (4.0 * PI), 0.0)
            + C64::new(0.25 * w * y1_reg / r, -0.25 * w * j1 / r);
        [radial * x.x, radial * x.y]
    }
}

fn powers(u: C64, l: usize, out: &mut [C64]) {
    out[l] = C64::new(1.0, 0.0);
    let ui = u.conj();
    for i in 1..=l {
        out[l + i] = out[l + i - 1] * u;
        out[l - i] = out[l - i + 1] * ui;
    }
}

/// `(J0 − 1, J1, Y0, Y1 + 2/(πx))` for `x > 0`.
fn bessel_regular_parts(x: f64) -> (f64, f64, f64, f64) {
    let top = start_index(1, x);
    let j = bessel_j_table(top, x);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut even = 0.0;
    let mut k = 1;
    while 2 * k < top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        even += j[2 * k];
        k += 1;
    }
    let j0m1 = -2.0 * even;
    let y0 = 2.0 / PI * (lg * j[0] - 2.0 * s0);
    let y1_reg = 2.0 / PI * (-j0m1 / x + lg * j[1] + s1);
    (j0m1, j[1], y0, y1_reg)
}

/// `H0` as a function of `ζ = ω r > 0`.
fn h0_radial(zeta: f64) -> C64 {
    let (j0, _, y0, _) = bessel_01(zeta);
    C64::new(0.25 * y0, -0.25 * j0)
}

/// `H0(ω; x) = −(i/4) H0⁽¹⁾(ω|x|)` via Bessel functions.
pub fn h0_free(omega: f64, x: Vec2) -> Result<C64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::OnSourcePoint);
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    Ok(h0_radial(omega * r))
}

/// `∇ₓ H0(ω; x) = (i/4) ω H1⁽¹⁾(ω|x|) x/|x|`.
pub fn h0_free_grad(omega: f64, x: Vec2) -> Result<[C64; 2]> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::OnSourcePoint);
    }
    let (_, j1, _, y1) = bessel_01(omega * r);
    let f = C64::new(0.0, 0.25 * omega) * C64::new(j1, y1) / r;
    Ok([f * x.x, f * x.y])
}

/// Coefficients of the small-argument expansion of `H0`.
#[derive(Debug, Clone, PartialEq)]
pub struct H0SeriesCoeffs {
    pub gamma0: C64,
    /// `b1[p-1] = b_{p,1} = (−1)^p / (2^{2p} (p!)²)`.
    pub b1: Vec<f64>,
    /// `b2[p-1] = b_{p,2} = (γ0 − Σ_{s≤p} 1/s) b_{p,1}`.
    pub b2: Vec<C64>,
    pub order: usize,
}

impl H0SeriesCoeffs {
    pub fn new(order: usize) -> Self {
        let g0 = gamma0();
        let mut b1 = Vec::with_capacity(order);
        let mut b2 = Vec::with_capacity(order);
        let mut b = 1.0;
        let mut harmonic = 0.0;
        for p in 1..=order {
            let pf = p as f64;
            b *= -1.0 / (4.0 * pf * pf);
            harmonic += 1.0 / pf;
            b1.push(b);
            b2.push((g0 - harmonic) * b);
        }
        Self { gamma0: g0, b1, b2, order }
    }

    pub fn b_p1(&self, p: usize) -> f64 {
        self.b1[p - 1]
    }

    pub fn b_p2(&self, p: usize) -> C64 {
        self.b2[p - 1]
    }
}

/// Truncated small-argument expansion of `H0(ω; r)`, valid for `0 < ωr < 1.5`.
pub fn h0_series(omega: f64, r: f64, coeffs: &H0SeriesCoeffs) -> Result<C64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let z = omega * r;
    if !(z > 0.0 && z < 1.5) {
        return Err(Error::SeriesRange { arg: z, limit: 1.5 });
    }
    let lz = z.ln();
    let mut acc = C64::new(r.ln() + omega.ln(), 0.0) + coeffs.gamma0;
    let z2 = z * z;
    let mut zp = 1.0;
    for p in 1..=coeffs.order {
        zp *= z2;
        acc += coeffs.b_p1(p) * zp * lz + coeffs.b_p2(p) * zp;
    }
    Ok(acc / (2.0 * PI))
}

/// `G(κ, ω; x)` with its gradient.
pub fn ewald_green(
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    x: Vec2,
    params: &EwaldParams,
) -> Result<GreensValue> {
    let g = QpGreens::new(lattice, kappa, omega, params, x.norm())?;
    g.eval(x)
}

fn shell_delta(kappa: &BlochVector, omega: f64, q: Vec2, omega_bar: f64) -> Result<(Vec2, f64)> {
    let k = kappa.k + q;
    let d = omega * omega - k.norm_squared();
    if d.abs() <= 1e-14 * omega_bar * omega_bar || !d.is_normal() {
        return Err(Error::SingularFrequency {
            omega,
            omega_bar: k.norm(),
            gap: (omega - k.norm()).abs(),
        });
    }
    Ok((k, d))
}

/// `G_shell(κ, ω; x) = (1/|Y|) Σ_{q ∈ shell} e^{i(κ+q)·x} / (ω² − |κ+q|²)`.
pub fn resonant_sum(
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    x: Vec2,
    shell: &ResonantShell,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for m in &shell.members {
        let (k, d) = shell_delta(kappa, omega, m.q, shell.omega_bar)?;
        acc += C64::from_polar(1.0, k.dot(&x)) / d;
    }
    Ok(acc / lattice.cell_area)
}

/// Partial derivatives of [`resonant_sum`] with respect to `κ1`, `κ2` and `ω`.
pub fn resonant_gradients(
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    x: Vec2,
    shell: &ResonantShell,
) -> Result<(C64, C64, C64)> {
    let mut dk1 = C64::new(0.0, 0.0);
    let mut dk2 = C64::new(0.0, 0.0);
    let mut dw = C64::new(0.0, 0.0);
    for m in &shell.members {
        let (k, d) = shell_delta(kappa, omega, m.q, shell.omega_bar)?;
        let e = C64::from_polar(1.0, k.dot(&x));
        let ie = C64::new(0.0, 1.0) * e;
        dk1 += ie * x.x / d + 2.0 * k.x * e / (d * d);
        dk2 += ie * x.y / d + 2.0 * k.y * e / (d * d);
        dw += -2.0 * omega * e / (d * d);
    }
    let s = 1.0 / lattice.cell_area;
    Ok((dk1 * s, dk2 * s, dw * s))
}

/// `G̃ = G − H0 − G_shell`, finite at `x = 0`.
pub fn smooth_remainder(
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    x: Vec2,
    shell: &ResonantShell,
    params: &EwaldParams,
) -> Result<C64> {
    if x.norm() >= 0.5 * lattice.a {
        return Err(Error::InvalidParameter(
            "the smooth remainder is only evaluated for |x| < a/2".into(),
        ));
    }
    let g = QpGreens::without_shell(lattice, kappa, omega, params, x.norm(), shell)?;
    g.regular_value(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_coefficients() {
        let c = H0SeriesCoeffs::new(4);
        assert_eq!(c.b_p1(1), -0.25);
        assert_eq!(c.b_p1(2), 1.0 / 64.0);
        assert!((c.gamma0.re + 0.115_931_515_658_412_4).abs() < 1e-15);
        assert!((c.gamma0.im + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn regular_parts_match_plain_bessel() {
        for &x in &[0.01, 0.3, 1.7, 4.2] {
            let (j0m1, j1, y0, y1r) = bessel_regular_parts(x);
            let (j0, j1b, y0b, y1) = bessel_01(x);
            assert!((j0m1 + 1.0 - j0).abs() < 1e-15);
            assert!((j1 - j1b).abs() < 1e-16);
            assert!((y0 - y0b).abs() < 1e-15);
            assert!((y1r - 2.0 / (PI * x) - y1).abs() < 1e-13 * (1.0 + y1.abs()));
        }
    }
}
