//! Honeycomb lattice geometry.
//!
//! The direct lattice is spanned by `e1 = a(√3/2, 1/2)` and
//! `e2 = a(√3/2, −1/2)`, the reciprocal lattice by `κ1 = (2π/a)(1/√3, 1)` and
//! `κ2 = (2π/a)(1/√3, −1)`. One circular obstacle of radius `ε` sits at the
//! cell center `(e1 + e2)/2`.
//!
//! Frequencies are kept unnormalized (units 1/length) everywhere in the
//! library; [`LatticeSpec::normalize`] converts to the dimensionless
//! `ω a / 2π` used for reporting.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Real 2-vector.
pub type Vec2 = Vector2<f64>;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Lattice constant, obstacle radius, and the derived vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub a: f64,
    pub epsilon: f64,
    pub e1: Vec2,
    pub e2: Vec2,
    pub k1: Vec2,
    pub k2: Vec2,
    pub cell_area: f64,
    pub center: Vec2,
}

/// Bloch wave vector, units 1/length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub k: Vec2,
}

impl BlochVector {
    pub fn new(kx: f64, ky: f64) -> Self {
        Self { k: Vec2::new(kx, ky) }
    }

    pub fn norm(&self) -> f64 {
        self.k.norm()
    }

    pub fn shifted(&self, dk: Vec2) -> Self {
        Self { k: self.k + dk }
    }
}

impl From<Vec2> for BlochVector {
    fn from(k: Vec2) -> Self {
        Self { k }
    }
}

/// Vertices of the irreducible Brillouin zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSymmetryPoints {
    pub gamma: BlochVector,
    pub m: BlochVector,
    pub k: BlochVector,
    pub k_prime: BlochVector,
}

/// Reciprocal vector `q = l1 κ1 + l2 κ2` with its integer labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellMember {
    pub l1: i64,
    pub l2: i64,
    pub q: Vec2,
}

/// The reciprocal vectors `q` with `|κ + q| = ω̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantShell {
    pub kappa: BlochVector,
    pub omega_bar: f64,
    pub members: Vec<ShellMember>,
}

impl LatticeSpec {
    /// Builds the lattice; requires `a > 0` and `0 < 2ε < a`.
    pub fn new(a: f64, epsilon: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "lattice constant must be positive, got {a}"
            )));
        }
        if !(epsilon > 0.0 && 2.0 * epsilon < a) {
            return Err(Error::InvalidGeometry(format!(
                "obstacle radius {epsilon} must satisfy 0 < 2ε < a = {a}"
            )));
        }
        let e1 = Vec2::new(0.5 * SQRT3 * a, 0.5 * a);
        let e2 = Vec2::new(0.5 * SQRT3 * a, -0.5 * a);
        let s = 2.0 * PI / a;
        let k1 = Vec2::new(s / SQRT3, s);
        let k2 = Vec2::new(s / SQRT3, -s);
        Ok(Self {
            a,
            epsilon,
            e1,
            e2,
            k1,
            k2,
            cell_area: (e1.x * e2.y - e1.y * e2.x).abs(),
            center: 0.5 * (e1 + e2),
        })
    }

    /// Same lattice with a different obstacle radius.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.a, epsilon)
    }

    /// `2π/a`.
    pub fn recip_scale(&self) -> f64 {
        2.0 * PI / self.a
    }

    /// `ω a / 2π`.
    pub fn normalize(&self, omega: f64) -> f64 {
        omega / self.recip_scale()
    }

    /// Inverse of [`LatticeSpec::normalize`].
    pub fn denormalize(&self, omega_normalized: f64) -> f64 {
        omega_normalized * self.recip_scale()
    }

    pub fn lattice_point(&self, l1: i64, l2: i64) -> Vec2 {
        l1 as f64 * self.e1 + l2 as f64 * self.e2
    }

    pub fn reciprocal_point(&self, l1: i64, l2: i64) -> Vec2 {
        l1 as f64 * self.k1 + l2 as f64 * self.k2
    }

    /// Integer coordinates of `x` in the basis `(e1, e2)`, as reals.
    pub fn direct_coordinates(&self, x: Vec2) -> (f64, f64) {
        (x.dot(&self.k1) / (2.0 * PI), x.dot(&self.k2) / (2.0 * PI))
    }

    /// Distance from `x` to the nearest direct-lattice point.
    pub fn distance_to_lattice(&self, x: Vec2) -> f64 {
        let (c1, c2) = self.direct_coordinates(x);
        let (r1, r2) = (c1.round() as i64, c2.round() as i64);
        let mut best = f64::INFINITY;
        for d1 in -1..=1 {
            for d2 in -1..=1 {
                let d = (x - self.lattice_point(r1 + d1, r2 + d2)).norm();
                best = best.min(d);
            }
        }
        best
    }

    pub fn high_symmetry(&self) -> HighSymmetryPoints {
        let s = self.recip_scale();
        let k = BlochVector::new(s / SQRT3, s / 3.0);
        HighSymmetryPoints {
            gamma: BlochVector::new(0.0, 0.0),
            m: BlochVector::new(s / SQRT3, 0.0),
            k,
            k_prime: BlochVector::new(-k.k.x, -k.k.y),
        }
    }

    /// The Dirac point `K`.
    pub fn kappa_star(&self) -> BlochVector {
        self.high_symmetry().k
    }

    /// Whether `kappa` equals `K` up to `1e-10` relative to `2π/a`.
    pub fn is_kappa_star(&self, kappa: &BlochVector) -> bool {
        (kappa.k - self.kappa_star().k).norm() <= 1e-10 * self.recip_scale()
    }

    /// All distinct `|κ + q| ≤ omega_max`, ascending.
    pub fn singular_frequencies(&self, kappa: &BlochVector, omega_max: f64) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .reciprocal_candidates(kappa, omega_max)
            .into_iter()
            .map(|(_, _, w)| w)
            .collect();
        values.sort_by(|a, b| a.total_cmp(b));
        let mut out: Vec<f64> = Vec::new();
        for w in values {
            match out.last() {
                Some(&prev) if (w - prev).abs() <= 1e-9 * prev.max(w).max(1e-300) => {}
                _ => out.push(w),
            }
        }
        out
    }

    /// Members of the shell `|κ + q| = omega_bar`, ordered by `(l1, l2)`.
    pub fn resonant_shell(&self, kappa: &BlochVector, omega_bar: f64) -> Result<ResonantShell> {
        let tol = 1e-9 * omega_bar.max(self.recip_scale() * 1e-6);
        let mut members: Vec<ShellMember> = self
            .reciprocal_candidates(kappa, omega_bar * (1.0 + 1e-6) + tol)
            .into_iter()
            .filter(|&(_, _, w)| (w - omega_bar).abs() <= tol)
            .map(|(l1, l2, _)| ShellMember {
                l1,
                l2,
                q: self.reciprocal_point(l1, l2),
            })
            .collect();
        if members.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{omega_bar} is not a singular frequency of the given Bloch vector"
            )));
        }
        members.sort_by_key(|m| (m.l1, m.l2));
        Ok(ResonantShell {
            kappa: *kappa,
            omega_bar,
            members,
        })
    }

    /// The shell closest to `omega` among the singular frequencies of `kappa`.
    pub fn nearest_shell(&self, kappa: &BlochVector, omega: f64) -> Result<ResonantShell> {
        let freqs = self.singular_frequencies(kappa, omega.abs() + 2.0 * self.recip_scale());
        let nearest = freqs
            .iter()
            .copied()
            .min_by(|x, y| (x - omega).abs().total_cmp(&(y - omega).abs()))
            .ok_or_else(|| Error::InvalidParameter("no singular frequencies found".into()))?;
        self.resonant_shell(kappa, nearest)
    }

    fn reciprocal_candidates(&self, kappa: &BlochVector, omega_max: f64) -> Vec<(i64, i64, f64)> {
        let bound = (omega_max * self.a).ceil().max(0.0) as i64 + 4;
        let mut out = Vec::new();
        for l1 in -bound..=bound {
            for l2 in -bound..=bound {
                let w = (kappa.k + self.reciprocal_point(l1, l2)).norm();
                if w <= omega_max * (1.0 + 1e-12) {
                    out.push((l1, l2, w));
                }
            }
        }
        out
    }
}

/// Rotation by 2π/3 clockwise.
pub fn rotation() -> Matrix2<f64> {
    Matrix2::new(-0.5, 0.5 * SQRT3, -0.5 * SQRT3, -0.5)
}

/// `R v`.
pub fn rotate(v: Vec2) -> Vec2 {
    rotation() * v
}

/// Piecewise-linear path through `points` with cumulative arclength.
///
/// Each segment contributes `samples_per_segment` points including both of
/// its endpoints; shared vertices appear once.
pub fn brillouin_path(
    points: &[BlochVector],
    samples_per_segment: usize,
) -> Result<Vec<(f64, BlochVector)>> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "a path needs at least two points".into(),
        ));
    }
    if samples_per_segment < 2 {
        return Err(Error::InvalidParameter(
            "need at least two samples per segment".into(),
        ));
    }
    let mut out = vec![(0.0, points[0])];
    let mut s0 = 0.0;
    for w in points.windows(2) {
        let (p, q) = (w[0].k, w[1].k);
        let len = (q - p).norm();
        for i in 1..samples_per_segment {
            let t = i as f64 / (samples_per_segment - 1) as f64;
            out.push((s0 + t * len, BlochVector::from(p + t * (q - p))));
        }
        s0 += len;
    }
    Ok(out)
}
