//! Boundary operators in the Fourier basis of the unit circle.
//!
//! The obstacle boundary is parametrized by `r(t) = (cos t, sin t)` and
//! densities are expanded in `φ_n(t) = e^{int}/√(2π)`, `|n| ≤ N`. For the
//! Dirichlet problem the entries are
//!
//! ```text
//! a_mn = ∫∫ conj(φ_m(t)) G(κ, ω; ε(r(t) − r(τ))) φ_n(τ) dτ dt,
//! ```
//!
//! for the Neumann problem `a_mn = δ_mn/2 + ε (φ_m, K φ_n)` with the
//! double-layer kernel `−∇G(ε(x − y))·y`. In both cases the free-space part
//! `H0` depends on `t − τ` only and is integrated exactly through its
//! logarithmic power series; the remaining smooth kernel is sampled on a
//! tensor grid and transformed with a 2D FFT.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{BlochVector, LatticeSpec, Vec2};
use crate::qpgreens::{gamma0, EwaldParams, H0SeriesCoeffs, QpGreens};
use crate::special::{binomial, digamma_int};

/// First zero of `J0`; `ωε` must stay below it.
pub const J01: f64 = 2.404_825_557_695_773;

/// Minimal distance (in units of `2π/a`) between `ω` and a singular frequency.
pub const SINGULAR_GUARD: f64 = 1e-6;

/// Boundary condition on the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dirichlet => write!(f, "dirichlet"),
            Self::Neumann => write!(f, "neumann"),
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary condition '{other}'"
            ))),
        }
    }
}

/// Retained Fourier modes `−N..=N` and the number of quadrature nodes per angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierTruncation {
    pub n: usize,
    pub quad_points: usize,
}

impl Default for FourierTruncation {
    fn default() -> Self {
        Self { n: 12, quad_points: 64 }
    }
}

impl FourierTruncation {
    pub fn new(n: usize, quad_points: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("truncation N = {n} must be at least 2")));
        }
        if !quad_points.is_power_of_two() || quad_points < 4 * n + 4 {
            return Err(Error::InvalidParameter(format!(
                "quad_points = {quad_points} must be a power of two and at least 4N + 4 = {}",
                4 * n + 4
            )));
        }
        Ok(Self { n, quad_points })
    }

    /// Smallest valid quadrature size for `n` modes, at least `min_quad`.
    pub fn with_modes(n: usize, min_quad: usize) -> Result<Self> {
        let q = (4 * n + 4).max(min_quad).next_power_of_two();
        Self::new(n, q)
    }

    /// Matrix dimension `2N + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Row/column index of mode `m`.
    pub fn index(&self, m: i64) -> usize {
        (m + self.n as i64) as usize
    }

    /// Mode of row/column `i`.
    pub fn mode(&self, i: usize) -> i64 {
        i as i64 - self.n as i64
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let n = self.n as i64;
        -n..=n
    }
}

/// The truncated boundary operator at one `(κ, ω)`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub bc: BoundaryCondition,
    pub kappa: BlochVector,
    pub omega: f64,
    pub epsilon: f64,
    pub at_dirac_point: bool,
    pub trunc: FourierTruncation,
    pub entries: DMatrix<C64>,
}

/// Density coefficients `c_n`, `|n| ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCoefficients {
    pub c: DVector<C64>,
    pub residue_class: Option<i64>,
}

impl DensityCoefficients {
    /// Coefficient of mode `n`.
    pub fn coeff(&self, n: i64) -> C64 {
        let big_n = (self.c.len() as i64 - 1) / 2;
        self.c[(n + big_n) as usize]
    }

    /// `Σ_{n ≡ j (mod 3)} |c_n|²  / ‖c‖²` for `j ∈ {0, 1, −1}`.
    pub fn class_fraction(&self, j: i64) -> f64 {
        let big_n = (self.c.len() as i64 - 1) / 2;
        let total = self.c.norm_squared();
        let mut part = 0.0;
        for (i, v) in self.c.iter().enumerate() {
            if residue(i as i64 - big_n) == residue(j) {
                part += v.norm_sqr();
            }
        }
        part / total
    }
}

/// `n mod 3` mapped to `{−1, 0, 1}`.
pub fn residue(n: i64) -> i64 {
    match n.rem_euclid(3) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    /// `a_{m,n}`.
    pub fn entry(&self, m: i64, n: i64) -> C64 {
        self.entries[(self.trunc.index(m), self.trunc.index(n))]
    }

    /// `max |a_mn|`.
    pub fn norm_max(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.entries.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| a.total_cmp(b));
        s
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues of the Hermitian part `(A + A^H)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.entries);
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    /// Modes `n` with `n ≡ j (mod 3)`, ascending.
    pub fn class_modes(&self, j: i64) -> Vec<i64> {
        self.trunc.modes().filter(|&n| residue(n) == residue(j)).collect()
    }

    /// The block over modes `n ≡ j (mod 3)`; only meaningful at `κ = K`.
    pub fn subsystem_extract(&self, j: i64) -> Result<DMatrix<C64>> {
        if !self.at_dirac_point {
            return Err(Error::NotDiracPoint);
        }
        if !(-1..=1).contains(&j) {
            return Err(Error::InvalidParameter(format!("residue class {j} not in {{-1, 0, 1}}")));
        }
        let modes = self.class_modes(j);
        let idx: Vec<usize> = modes.iter().map(|&m| self.trunc.index(m)).collect();
        Ok(DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            self.entries[(idx[r], idx[c])]
        }))
    }

    /// Measured violations of the structural identities, relative to `max |a_mn|`.
    pub fn symmetry_report(&self) -> SymmetryReport {
        let scale = self.norm_max().max(f64::MIN_POSITIVE);
        let mut herm: f64 = 0.0;
        let mut index: f64 = 0.0;
        let mut mod3: f64 = 0.0;
        for m in self.trunc.modes() {
            for n in self.trunc.modes() {
                let a = self.entry(m, n);
                let sign = if (m - n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                herm = herm.max((a - self.entry(n, m).conj()).norm());
                let image = match self.bc {
                    BoundaryCondition::Dirichlet => self.entry(-n, -m) * sign,
                    BoundaryCondition::Neumann => self.entry(-m, -n).conj() * sign,
                };
                index = index.max((a - image).norm());
                if (m - n).rem_euclid(3) != 0 {
                    mod3 = mod3.max(a.norm());
                }
            }
        }
        SymmetryReport {
            hermitian: match self.bc {
                BoundaryCondition::Dirichlet => Some(herm / scale),
                BoundaryCondition::Neumann => None,
            },
            index_symmetry: index / scale,
            mod3: mod3 / scale,
            at_dirac_point: self.at_dirac_point,
        }
    }
}

/// `(A + A^H)/2`.
pub fn hermitian_part(a: &DMatrix<C64>) -> DMatrix<C64> {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Relative violations of the structural identities of the boundary matrix.
///
/// `hermitian` is `max |a_mn − conj(a_nm)|` (Dirichlet only).
/// `index_symmetry` is `max |a_mn − (−1)^{m−n} a_{−n,−m}|` for Dirichlet and
/// `max |a_mn − (−1)^{m−n} conj(a_{−m,−n})|` for Neumann.
/// `mod3` is the largest entry with `m − n ≢ 0 (mod 3)`, which vanishes at `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub hermitian: Option<f64>,
    pub index_symmetry: f64,
    pub mod3: f64,
    pub at_dirac_point: bool,
}

impl SymmetryReport {
    /// Whether every identity that should hold is below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.hermitian.is_none_or(|h| h < tol)
            && self.index_symmetry < tol
            && (!self.at_dirac_point || self.mod3 < tol)
    }
}

/// Kernel `Σ_p (A_p + B_p ln ρ) ρ^{2p}` of `ρ = 2|sin(s/2)|`, the chord length on
/// the unit circle.
#[derive(Debug, Clone)]
pub struct RadialLogSeries {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

impl RadialLogSeries {
    /// `∫_0^{2π} k(ρ(s)) e^{−ins} ds`.
    pub fn fourier(&self, n: i64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (p, (ap, bp)) in self.a.iter().zip(&self.b).enumerate() {
            let p = p as i64;
            acc += ap * rho_moment(p, n) + bp * rho_log_moment(p, n);
        }
        acc
    }

    /// Direct evaluation at `ρ > 0`.
    pub fn eval(&self, rho: f64) -> C64 {
        let lr = rho.ln();
        let r2 = rho * rho;
        let mut pw = 1.0;
        let mut acc = C64::new(0.0, 0.0);
        for (ap, bp) in self.a.iter().zip(&self.b) {
            acc += (ap + bp * lr) * pw;
            pw *= r2;
        }
        acc
    }
}

/// `∫_0^{2π} ρ^{2p} e^{−ins} ds = 2π (−1)^n C(2p, p − n)` for `|n| ≤ p`.
pub fn rho_moment(p: i64, n: i64) -> f64 {
    if n.abs() > p {
        return 0.0;
    }
    let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    2.0 * PI * sign * binomial((2 * p) as u32, (p - n) as u32)
}

/// `η_n = (1/2π)∫_0^{2π} ln ρ e^{−ins} ds`: `0` for `n = 0`, `−1/(2|n|)` otherwise.
pub fn log_eigenvalue(n: i64) -> f64 {
    if n == 0 {
        0.0
    } else {
        -0.5 / n.abs() as f64
    }
}

/// `∫_0^{2π} ρ^{2p} ln ρ e^{−ins} ds`.
pub fn rho_log_moment(p: i64, n: i64) -> f64 {
    let mut acc = 0.0;
    for j in -p..=p {
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial((2 * p) as u32, (p - j) as u32) * log_eigenvalue(n - j);
    }
    2.0 * PI * acc
}

fn check_omega_eps(omega: f64, epsilon: f64) -> Result<f64> {
    let oe = omega * epsilon;
    if !(oe > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ω ε must be positive, got {oe}"
        )));
    }
    if oe >= J01 {
        return Err(Error::SeriesRange { arg: oe, limit: J01 });
    }
    Ok(oe)
}

fn series_terms(oe: f64) -> usize {
    // (ωε)^{2p}/(p!)² falls below 1e-20 well before this.
    let mut p = 1;
    let mut t = 1.0;
    while p < 60 {
        t *= oe * oe / (p * p) as f64;
        if t < 1e-20 {
            break;
        }
        p += 1;
    }
    p + 2
}

/// Radial series of `H0(ω; ε(x − y))` in the chord length `ρ = |x − y|`.
pub fn h0_kernel_series(omega: f64, epsilon: f64) -> Result<RadialLogSeries> {
    let oe = check_omega_eps(omega, epsilon)?;
    let order = series_terms(oe);
    let coeffs = H0SeriesCoeffs::new(order);
    let l = oe.ln();
    let inv = 1.0 / (2.0 * PI);
    let mut a = vec![(C64::new(l, 0.0) + coeffs.gamma0) * inv];
    let mut b = vec![C64::new(inv, 0.0)];
    let mut pw = 1.0;
    for p in 1..=order {
        pw *= oe * oe;
        a.push((coeffs.b_p1(p) * l + coeffs.b_p2(p)) * pw * inv);
        b.push(C64::new(coeffs.b_p1(p) * pw * inv, 0.0));
    }
    Ok(RadialLogSeries { a, b })
}

/// Radial series of the free-space double-layer kernel `(i/8) ζ H1⁽¹⁾(ζ)`,
/// `ζ = ωερ`, including its Laplace limit `1/(4π)`.
pub fn neumann_kernel_series(omega: f64, epsilon: f64) -> Result<RadialLogSeries> {
    let oe = check_omega_eps(omega, epsilon)?;
    let order = series_terms(oe);
    let u = 0.5 * oe;
    let lu = u.ln();
    let mut a = vec![C64::new(0.25 / PI, 0.0)];
    let mut b = vec![C64::new(0.0, 0.0)];
    let mut g = 1.0;
    for p in 1..=order {
        // g_p = (−1)^{p−1} u^{2p} / ((p−1)! p!)
        g *= if p == 1 { u * u } else { -u * u / ((p - 1) * p) as f64 };
        let psi = digamma_int(p as u32) + digamma_int(p as u32 + 1);
        a.push(C64::new(-g * lu / (2.0 * PI) + psi * g / (4.0 * PI), 0.25 * g));
        b.push(C64::new(-g / (2.0 * PI), 0.0));
    }
    Ok(RadialLogSeries { a, b })
}

/// Fourier-diagonal entry of the free-space single-layer kernel on the circle:
/// `∫_0^{2π} H0(ωε·2|sin(s/2)|) e^{−ins} ds`.
///
/// Accepts `0 < ωε < j0,1`.
pub fn h0_diagonal(omega: f64, epsilon: f64, n: i64) -> Result<C64> {
    Ok(h0_kernel_series(omega, epsilon)?.fourier(n))
}

/// Fourier-diagonal entry of the free-space double-layer kernel `(i/8) ζ H1⁽¹⁾(ζ)`.
pub fn neumann_diagonal(omega: f64, epsilon: f64, n: i64) -> Result<C64> {
    Ok(neumann_kernel_series(omega, epsilon)?.fourier(n))
}

/// The leading `n = 0` constant `ln ε + ln ω + γ0` of [`h0_diagonal`].
pub fn h0_diagonal_leading(omega: f64, epsilon: f64) -> C64 {
    C64::new(epsilon.ln() + omega.ln(), 0.0) + gamma0()
}

thread_local! {
    static FFT_CACHE: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn fft_plan(q: usize) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|c| {
        c.borrow_mut()
            .entry(q)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(q))
            .clone()
    })
}

/// In-place 2D forward DFT of a row-major `q × q` array.
fn fft2(data: &mut [C64], q: usize) {
    let plan = fft_plan(q);
    for row in data.chunks_mut(q) {
        plan.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); q];
    for j in 0..q {
        for i in 0..q {
            col[i] = data[i * q + j];
        }
        plan.process(&mut col);
        for i in 0..q {
            data[i * q + j] = col[i];
        }
    }
}

/// Checks the frequency against the spurious-resonance and singular-frequency guards.
pub fn check_frequency(lattice: &LatticeSpec, kappa: &BlochVector, omega: f64) -> Result<()> {
    let oe = omega * lattice.epsilon;
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("ω must be positive, got {omega}")));
    }
    if oe >= J01 {
        return Err(Error::SpuriousResonance { omega_eps: oe, limit: J01 });
    }
    let guard = SINGULAR_GUARD * lattice.recip_scale();
    for w in lattice.singular_frequencies(kappa, omega + 2.0 * guard) {
        if (w - omega).abs() < guard {
            return Err(Error::SingularFrequency {
                omega,
                omega_bar: w,
                gap: (w - omega).abs(),
            });
        }
    }
    Ok(())
}

/// Assembles the boundary matrix with default Ewald parameters.
pub fn assemble(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    trunc: &FourierTruncation,
) -> Result<OperatorMatrix> {
    assemble_with(bc, lattice, kappa, omega, trunc, &EwaldParams::for_lattice(lattice))
}

/// Assembles the boundary matrix.
pub fn assemble_with(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    omega: f64,
    trunc: &FourierTruncation,
    params: &EwaldParams,
) -> Result<OperatorMatrix> {
    check_frequency(lattice, kappa, omega)?;
    let eps = lattice.epsilon;
    let q = trunc.quad_points;
    let green = QpGreens::new(lattice, kappa, omega, params, 2.0 * eps)?;
    let nodes: Vec<Vec2> = (0..q)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / q as f64;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();

    // Smooth kernel on the (t_i, τ_j) grid, row-major in i.
    let mut grid = vec![C64::new(0.0, 0.0); q * q];
    grid.par_chunks_mut(q)
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            let x = nodes[i];
            for (j, slot) in row.iter_mut().enumerate() {
                let y = nodes[j];
                let z = if i == j { Vec2::zeros() } else { (x - y) * eps };
                *slot = match bc {
                    BoundaryCondition::Dirichlet => green.regular_value(z)?,
                    BoundaryCondition::Neumann => {
                        let g = green.regular_grad(z)?;
                        -(g[0] * y.x + g[1] * y.y) * eps
                    }
                };
            }
            Ok(())
        })?;

    fft2(&mut grid, q);
    check_resolution(&grid, q)?;

    let dim = trunc.dim();
    let scale = 2.0 * PI / (q * q) as f64;
    let wrap = |m: i64| m.rem_euclid(q as i64) as usize;
    let mut entries = DMatrix::from_fn(dim, dim, |r, c| {
        let m = trunc.mode(r);
        let n = trunc.mode(c);
        grid[wrap(m) * q + wrap(-n)] * scale
    });
    let series = match bc {
        BoundaryCondition::Dirichlet => h0_kernel_series(omega, eps)?,
        BoundaryCondition::Neumann => neumann_kernel_series(omega, eps)?,
    };
    for r in 0..dim {
        let n = trunc.mode(r);
        entries[(r, r)] += series.fourier(n);
        if bc == BoundaryCondition::Neumann {
            entries[(r, r)] += C64::new(0.5, 0.0);
        }
    }
    Ok(OperatorMatrix {
        bc,
        kappa: *kappa,
        omega,
        epsilon: eps,
        at_dirac_point: lattice.is_kappa_star(kappa),
        trunc: *trunc,
        entries,
    })
}

fn check_resolution(spectrum: &[C64], q: usize) -> Result<()> {
    let edge = q / 2 - q / 8;
    let fold = |k: usize| k.min(q - k);
    let mut total: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for i in 0..q {
        for j in 0..q {
            let v = spectrum[i * q + j].norm();
            total = total.max(v);
            if fold(i) >= edge || fold(j) >= edge {
                tail = tail.max(v);
            }
        }
    }
    let ratio = if total > 0.0 { tail / total } else { 0.0 };
    if ratio > 1e-8 {
        return Err(Error::QuadratureUnresolved { quad_points: q, ratio });
    }
    Ok(())
}
