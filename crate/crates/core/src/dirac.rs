//! Dirac points at `K`: closed-form asymptotics, cone slopes, numeric cone
//! fits, and the structure of the degenerate eigenfunctions.
//!
//! Three band groups cross at `K`: the first pair near `|K|`, bands 4/5 near
//! `2|K|` and bands 10/11 near `√7|K|`. Their leading-order locations are
//! `|K|·m + c·α ε²/|K|` with `α = (2π/(3|Y|))(2π/a)²`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bie::{BoundaryCondition, FourierTruncation};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Vec2};
use crate::qpgreens::{gamma0, smooth_remainder, EwaldParams};
use crate::spectral::{
    dirac_window, nullspace, sweep_family, CharacteristicRoot, OperatorFamily, SchurFunction,
    SweepConfig,
};

/// Band groups that cross at `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandGroup {
    /// Bands 1/2, near `|K|`.
    First,
    /// Bands 4/5, near `2|K|`.
    Second,
    /// Bands 10/11, near `√7|K|`.
    Third,
}

impl BandGroup {
    /// Group from a band pair `(1, 2)`, `(4, 5)` or `(10, 11)`.
    pub fn from_pair(pair: (usize, usize)) -> Result<Self> {
        match pair {
            (1, 2) => Ok(Self::First),
            (4, 5) => Ok(Self::Second),
            (10, 11) => Ok(Self::Third),
            (a, b) => Err(Error::InvalidParameter(format!(
                "band pair ({a}, {b}) does not cross at K; expected (1,2), (4,5) or (10,11)"
            ))),
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        match self {
            Self::First => (1, 2),
            Self::Second => (4, 5),
            Self::Third => (10, 11),
        }
    }

    /// `|K + q| / |K|` on the resonant shell of the group.
    pub fn shell_factor(&self) -> f64 {
        match self {
            Self::First => 1.0,
            Self::Second => 2.0,
            Self::Third => 7f64.sqrt(),
        }
    }
}

/// Constants of the leading-order expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoefficients {
    pub alpha: f64,
    pub kappa_star_norm: f64,
    pub cell_area: f64,
    pub gamma0: C64,
    lattice: LatticeSpec,
}

impl AsymptoticCoefficients {
    pub fn new(lattice: &LatticeSpec) -> Self {
        let s = lattice.recip_scale();
        Self {
            alpha: 2.0 * PI / (3.0 * lattice.cell_area) * s * s,
            kappa_star_norm: lattice.kappa_star().norm(),
            cell_area: lattice.cell_area,
            gamma0: gamma0(),
            lattice: *lattice,
        }
    }

    /// `β1(ω) = (1/2π)(ln ω + γ0) + G̃(K, ω; 0)`, with `G̃` the Green's
    /// function minus its free-space part and the first resonant shell.
    pub fn beta1(&self, omega: f64) -> Result<C64> {
        let lat = &self.lattice;
        let k = lat.kappa_star();
        let shell = lat.resonant_shell(&k, self.kappa_star_norm)?;
        let rem = smooth_remainder(lat, &k, omega, Vec2::zeros(), &shell, &EwaldParams::for_lattice(lat))?;
        Ok((C64::new(omega.ln(), 0.0) + self.gamma0) / (2.0 * PI) + rem)
    }
}

/// Labelled closed-form eigenvalues of a band group (unnormalized).
///
/// Requires `ε/a ≤ 0.25`. The Neumann expansion is only known for the first
/// group; other groups return an empty list.
pub fn asymptotic_eigenvalues(
    lattice: &LatticeSpec,
    bc: BoundaryCondition,
    group: BandGroup,
) -> Result<Vec<(String, f64)>> {
    let eps = lattice.epsilon;
    if eps / lattice.a > 0.25 {
        return Err(Error::InvalidParameter(format!(
            "asymptotic formulas need ε/a ≤ 0.25, got {}",
            eps / lattice.a
        )));
    }
    let c = AsymptoticCoefficients::new(lattice);
    let k = c.kappa_star_norm;
    let shift = c.alpha * eps * eps / k;
    let s7 = 7f64.sqrt();
    Ok(match (bc, group) {
        (BoundaryCondition::Dirichlet, BandGroup::First) => vec![
            ("omega1_star".into(), k + shift),
            (
                "omega1_star_star".into(),
                k - 3.0 * PI / (c.cell_area * k * (eps / lattice.a).ln()),
            ),
        ],
        (BoundaryCondition::Dirichlet, BandGroup::Second) => {
            vec![("omega2_star".into(), 2.0 * k + 2.0 * shift)]
        }
        (BoundaryCondition::Dirichlet, BandGroup::Third) => {
            vec![("omega3_star".into(), s7 * k + 2.0 * s7 * shift)]
        }
        (BoundaryCondition::Neumann, BandGroup::First) => vec![("omega1_star".into(), k - shift)],
        (BoundaryCondition::Neumann, _) => Vec::new(),
    })
}

/// The degenerate (Dirac) value of a group, unnormalized.
pub fn asymptotic_dirac(lattice: &LatticeSpec, bc: BoundaryCondition, group: BandGroup) -> Result<f64> {
    asymptotic_eigenvalues(lattice, bc, group)?
        .first()
        .map(|p| p.1)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("no closed form for {bc} band group {:?}", group.pair()))
        })
}

/// Theoretical cone slope `dω/d|κ − K|` (dimensionless) at a Dirac value `omega_star`.
pub fn theory_slopes(lattice: &LatticeSpec, group: BandGroup, omega_star: f64) -> Result<f64> {
    if !(omega_star > 0.0) {
        return Err(Error::InvalidParameter(format!("ω* must be positive, got {omega_star}")));
    }
    let c = match group {
        BandGroup::First => 1.0 / 3.0,
        BandGroup::Second => 4.0 / 3.0,
        BandGroup::Third => 20.0 / 21.0,
    };
    Ok(c * lattice.recip_scale() / omega_star)
}

/// A located Dirac point: the `j = ±1` roots at `K` and their mean.
#[derive(Debug, Clone)]
pub struct DiracPoint {
    pub omega: f64,
    pub root: CharacteristicRoot,
    pub class_roots: Vec<(i64, f64)>,
}

/// Sweep configuration around the resonant shell of a group.
fn group_window(lattice: &LatticeSpec, bc: BoundaryCondition, group: BandGroup) -> (f64, f64) {
    let bar = lattice.normalize(lattice.kappa_star().norm()) * group.shell_factor();
    match bc {
        BoundaryCondition::Dirichlet => (bar, bar + 0.2 * group.shell_factor().min(1.5)),
        BoundaryCondition::Neumann => (bar - 0.1, bar),
    }
}

/// Finds the double root of `group` at `K` nearest its closed-form value.
pub fn locate_dirac_point(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    group: BandGroup,
    trunc: &FourierTruncation,
    config: &SweepConfig,
) -> Result<DiracPoint> {
    let family = OperatorFamily::new(bc, lattice, &lattice.kappa_star(), trunc);
    let (lo, hi) = group_window(lattice, bc, group);
    let cfg = config.with_window(lo, hi);
    let roots = sweep_family(&family, &cfg)?;
    let target = asymptotic_dirac(lattice, bc, group).unwrap_or_else(|_| lattice.denormalize(0.5 * (lo + hi)));
    let root = roots
        .into_iter()
        .filter(|r| r.multiplicity >= 2)
        .min_by(|a, b| (a.omega - target).abs().total_cmp(&(b.omega - target).abs()))
        .ok_or_else(|| {
            Error::RootSearch(format!(
                "no double root at K in normalized window ({lo}, {hi})"
            ))
        })?;
    let class_roots = root
        .components
        .iter()
        .filter_map(|&(j, w)| j.map(|j| (j, w)))
        .collect();
    Ok(DiracPoint { omega: root.omega, root, class_roots })
}

/// Fitted cone at a Dirac point; all frequencies normalized.
///
/// `fit_residual` is the largest standard error of a fitted slope,
/// `isotropy_spread` the largest difference between slopes of one branch
/// along different directions, `max_quadratic_ratio` the largest `|c|·r_max/|s|`, and
/// `vertex_gap` the distance between the two branches at `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracReport {
    pub bc: BoundaryCondition,
    pub band_pair: (usize, usize),
    pub omega_star_numeric: f64,
    pub omega_star_asymptotic: Option<f64>,
    pub multiplicity: usize,
    pub slope_fit_plus: f64,
    pub slope_fit_minus: f64,
    pub slope_theory: f64,
    pub fit_residual: f64,
    pub directions_tested: usize,
    pub isotropy_spread: f64,
    pub max_quadratic_ratio: f64,
    pub vertex_gap: f64,
    pub direction_slopes: Vec<(f64, f64)>,
}

/// Least-squares fit of `y = s r + c r²`; returns `(s, c, standard error of s)`.
fn fit_linear_quadratic(r: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut s22, mut s23, mut s33, mut t2, mut t3) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ri, &yi) in r.iter().zip(y) {
        s22 += ri * ri;
        s23 += ri * ri * ri;
        s33 += ri.powi(4);
        t2 += ri * yi;
        t3 += ri * ri * yi;
    }
    let det = s22 * s33 - s23 * s23;
    let s = (t2 * s33 - t3 * s23) / det;
    let c = (s22 * t3 - s23 * t2) / det;
    let rss: f64 = r.iter().zip(y).map(|(&ri, &yi)| (yi - s * ri - c * ri * ri).powi(2)).sum();
    let dof = (r.len() as f64 - 2.0).max(1.0);
    (s, c, (rss / dof * s33 / det).sqrt())
}

/// Probes the two branches at `K + r·(cos θ, sin θ)(2π/a)` and fits the cone.
///
/// `radii` are in units of `2π/a`.
pub fn cone_fit(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    band_pair: (usize, usize),
    trunc: &FourierTruncation,
    radii: &[f64],
    directions: usize,
) -> Result<DiracReport> {
    let group = BandGroup::from_pair(band_pair)?;
    if directions < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 directions, got {directions}")));
    }
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("need at least two positive probe radii".into()));
    }
    let config = SweepConfig::default();
    let point = locate_dirac_point(bc, lattice, group, trunc, &config)?;
    let w_star = lattice.normalize(point.omega);
    let theory = theory_slopes(lattice, group, point.omega)?;
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let half = 2.5 * r_max * theory.max(0.5) + 1e-4;

    let mut tasks = Vec::new();
    for d in 0..directions {
        for &r in radii {
            tasks.push((d, r));
        }
    }
    let k_star = lattice.kappa_star();
    let probes: Vec<(usize, f64, f64, f64)> = tasks
        .par_iter()
        .map(|&(d, r)| -> Result<(usize, f64, f64, f64)> {
            let theta = 2.0 * PI * d as f64 / directions as f64;
            let dk = Vec2::new(theta.cos(), theta.sin()) * (r * lattice.recip_scale());
            let kappa = k_star.shifted(dk);
            let family = OperatorFamily::new(bc, lattice, &kappa, trunc);
            let cfg = config.with_window(w_star - half, w_star + half);
            let roots = sweep_family(&family, &cfg)?;
            let below: Vec<f64> = roots
                .iter()
                .filter(|x| x.omega_normalized < w_star)
                .flat_map(|x| std::iter::repeat_n(x.omega_normalized, x.multiplicity))
                .collect();
            let above: Vec<f64> = roots
                .iter()
                .filter(|x| x.omega_normalized >= w_star)
                .flat_map(|x| std::iter::repeat_n(x.omega_normalized, x.multiplicity))
                .collect();
            match (below.last(), above.first()) {
                (Some(&lo), Some(&hi)) => Ok((d, r, lo, hi)),
                _ => Err(Error::RootSearch(format!(
                    "cone probe θ = {theta:.4}, r = {r:e}: expected a root on each side of {w_star:.8}, found below {below:?}, above {above:?}"
                ))),
            }
        })
        .collect::<Result<_>>()?;

    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut quad: f64 = 0.0;
    let mut direction_slopes = Vec::new();
    let mut errors = Vec::new();
    for d in 0..directions {
        let rows: Vec<&(usize, f64, f64, f64)> = probes.iter().filter(|p| p.0 == d).collect();
        let r: Vec<f64> = rows.iter().map(|p| p.1).collect();
        let up: Vec<f64> = rows.iter().map(|p| p.3 - w_star).collect();
        let down: Vec<f64> = rows.iter().map(|p| p.2 - w_star).collect();
        let (sp, cp, ep) = fit_linear_quadratic(&r, &up);
        let (sm, cm, em) = fit_linear_quadratic(&r, &down);
        quad = quad.max((cp * r_max / sp).abs()).max((cm * r_max / sm).abs());
        plus.push(sp);
        minus.push(sm);
        direction_slopes.push((sp, sm));
        errors.push(ep);
        errors.push(em);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let range = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let spread = range(&plus).max(range(&minus));
    let fit_residual = errors.iter().copied().fold(0.0, f64::max);

    let class_omegas: Vec<f64> = point.class_roots.iter().map(|c| c.1).collect();
    let vertex_gap = if class_omegas.len() >= 2 {
        lattice.normalize(
            class_omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - class_omegas.iter().copied().fold(f64::INFINITY, f64::min),
        )
    } else {
        0.0
    };

    Ok(DiracReport {
        bc,
        band_pair,
        omega_star_numeric: w_star,
        omega_star_asymptotic: asymptotic_dirac(lattice, bc, group).ok().map(|w| lattice.normalize(w)),
        multiplicity: point.root.multiplicity,
        slope_fit_plus: mean(&plus),
        slope_fit_minus: mean(&minus),
        slope_theory: theory,
        fit_residual,
        directions_tested: directions,
        isotropy_spread: spread,
        max_quadratic_ratio: quad,
        vertex_gap,
        direction_slopes,
    })
}

/// One row of the asymptotic-accuracy table; frequencies normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub epsilon: f64,
    pub numeric: f64,
    pub asymptotic: f64,
    pub error: f64,
}

/// Numeric first Dirichlet Dirac value (Schur root of class 1) against its
/// closed form, for each `ε` (in units of `a`).
pub fn table1_compare(
    base: &LatticeSpec,
    eps_list: &[f64],
    trunc: &FourierTruncation,
) -> Result<Vec<Table1Row>> {
    eps_list
        .par_iter()
        .map(|&e| -> Result<Table1Row> {
            if !(e > 0.0 && e < 0.25) {
                return Err(Error::InvalidParameter(format!("ε/a = {e} outside (0, 1/4)")));
            }
            let lat = base.with_epsilon(e * base.a)?;
            let f = SchurFunction::new(BoundaryCondition::Dirichlet, &lat, 1, trunc)?;
            let w = f.root(dirac_window(&lat), lat.denormalize(1e-12))?;
            let numeric = lat.normalize(w);
            let asymptotic = lat.normalize(asymptotic_dirac(&lat, BoundaryCondition::Dirichlet, BandGroup::First)?);
            Ok(Table1Row { epsilon: e, numeric, asymptotic, error: (numeric - asymptotic).abs() })
        })
        .collect()
}

/// Structure of the null vectors at a twofold root at `K`.
///
/// `dominant` lists `(residue class, dominant mode, energy fraction)` per
/// vector. `conjugation_residual` is `‖A c'‖/‖c'‖` for the image `c'` of the
/// class-1 vector under `c'_{3n−1} = (−1)^{−3n} conj(c_{−3n+1})`, and
/// `conjugation_overlap` is `|⟨c', c₋₁⟩|` with the class −1 null vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionReport {
    pub dominant: Vec<(Option<i64>, i64, f64)>,
    pub conjugation_residual: f64,
    pub conjugation_overlap: f64,
}

/// Checks the dominant modes and the conjugation symmetry of a Dirac root.
pub fn eigenfunction_check(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    root: &CharacteristicRoot,
    trunc: &FourierTruncation,
) -> Result<EigenfunctionReport> {
    if root.multiplicity < 2 {
        return Err(Error::InvalidParameter(format!(
            "eigenfunction check needs a double root, got multiplicity {}",
            root.multiplicity
        )));
    }
    let family = OperatorFamily::new(bc, lattice, &lattice.kappa_star(), trunc);
    let a = family.at(root.omega)?;
    let vectors = if root.nullspace.len() >= 2 {
        root.nullspace.clone()
    } else {
        nullspace(&a, 1e-6)
    };
    let big_n = trunc.n as i64;
    let dominant = vectors
        .iter()
        .map(|v| {
            let (i, best) = v
                .c
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
                .expect("non-empty vector");
            (v.residue_class, i as i64 - big_n, best.norm_sqr() / v.c.norm_squared())
        })
        .collect();

    let c1 = vectors
        .iter()
        .find(|v| v.residue_class == Some(1))
        .ok_or_else(|| Error::RootSearch("no class-1 null vector".into()))?;
    let mut image = nalgebra::DVector::from_element(a.dim(), C64::new(0.0, 0.0));
    for m in trunc.modes() {
        if (m + 1).rem_euclid(3) == 0 && m.abs() <= big_n {
            let n = (m + 1) / 3;
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            image[trunc.index(m)] = c1.coeff(-m).conj() * sign;
        }
    }
    let residual = (&a.entries * &image).norm() / image.norm();
    let overlap = vectors
        .iter()
        .find(|v| v.residue_class == Some(-1))
        .map(|v| v.c.dotc(&image).norm() / (v.c.norm() * image.norm()))
        .unwrap_or(0.0);
    Ok(EigenfunctionReport {
        dominant,
        conjugation_residual: residual,
        conjugation_overlap: overlap,
    })
}
