//! Characteristic values of the boundary operator.
//!
//! A frequency `ω` is characteristic for `κ` when `A(κ, ω)` is singular.
//! For the Dirichlet problem `A` is Hermitian and every eigenvalue decreases
//! strictly with `ω` between singular frequencies, so the number of negative
//! eigenvalues counts the roots below `ω`; each root is then bracketed on one
//! eigenvalue branch. The Neumann matrix has no such structure and its roots
//! are located as zeros of the smallest singular value.
//!
//! At the Dirac point the matrix splits into three blocks by `n mod 3`; each
//! block is searched separately so that a twofold degeneracy between the
//! `j = ±1` blocks shows up as two coinciding simple roots.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bie::{
    assemble_with, hermitian_part, residue, SINGULAR_GUARD, BoundaryCondition, DensityCoefficients,
    FourierTruncation, OperatorMatrix,
};
use crate::error::{Error, Result};
use crate::lattice::{BlochVector, LatticeSpec};
use crate::qpgreens::EwaldParams;

/// Search window and tolerances, frequencies in normalized units `ωa/2π`.
///
/// `coarse_steps` is the number of coarse grid points per unit of normalized
/// frequency used by the singular-value scan; it is raised to at least 40.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub omega_window: (f64, f64),
    pub coarse_steps: usize,
    pub singular_exclusion: f64,
    pub root_tol: f64,
    pub sv_threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega_window: (0.01, 1.0),
            coarse_steps: 40,
            singular_exclusion: 1e-4,
            root_tol: 1e-10,
            sv_threshold: 1e-6,
        }
    }
}

impl SweepConfig {
    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.omega_window = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.omega_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "frequency window ({lo}, {hi}) must satisfy 0 < lo < hi"
            )));
        }
        if !(self.singular_exclusion > 0.0 && self.root_tol > 0.0 && self.sv_threshold > 0.0) {
            return Err(Error::InvalidParameter(
                "exclusion, root tolerance and threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A characteristic value with its null vectors.
///
/// `omega` is unnormalized; `residual` is the largest singular value among
/// the retained null directions, relative to `‖A‖₂`. `components` holds the
/// individually located roots that were merged into this one, tagged with
/// their residue class at `K`.
#[derive(Debug, Clone)]
pub struct CharacteristicRoot {
    pub omega: f64,
    pub omega_normalized: f64,
    pub multiplicity: usize,
    pub residual: f64,
    pub nullspace: Vec<DensityCoefficients>,
    pub components: Vec<(Option<i64>, f64)>,
}

/// Everything needed to assemble `A(κ, ω)` for varying `ω`.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    pub bc: BoundaryCondition,
    pub lattice: LatticeSpec,
    pub kappa: BlochVector,
    pub trunc: FourierTruncation,
    pub params: EwaldParams,
}

impl OperatorFamily {
    pub fn new(
        bc: BoundaryCondition,
        lattice: &LatticeSpec,
        kappa: &BlochVector,
        trunc: &FourierTruncation,
    ) -> Self {
        Self {
            bc,
            lattice: *lattice,
            kappa: *kappa,
            trunc: *trunc,
            params: EwaldParams::for_lattice(lattice),
        }
    }

    pub fn with_params(mut self, params: EwaldParams) -> Self {
        self.params = params;
        self
    }

    pub fn at(&self, omega: f64) -> Result<OperatorMatrix> {
        assemble_with(self.bc, &self.lattice, &self.kappa, omega, &self.trunc, &self.params)
    }

    pub fn at_dirac_point(&self) -> bool {
        self.lattice.is_kappa_star(&self.kappa)
    }

    /// Index sets searched independently: the three residue classes at `K`,
    /// otherwise all modes.
    fn blocks(&self) -> Vec<Block> {
        let dim = self.trunc.dim();
        if self.at_dirac_point() {
            [0, 1, -1]
                .into_iter()
                .map(|j| Block {
                    class: Some(j),
                    idx: (0..dim).filter(|&i| residue(self.trunc.mode(i)) == j).collect(),
                })
                .collect()
        } else {
            vec![Block { class: None, idx: (0..dim).collect() }]
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    class: Option<i64>,
    idx: Vec<usize>,
}

impl Block {
    fn extract(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        DMatrix::from_fn(self.idx.len(), self.idx.len(), |r, c| a[(self.idx[r], self.idx[c])])
    }
}

fn ascending_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let mut e: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

fn min_singular(m: &DMatrix<C64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Locates all characteristic values of `A(κ, ·)` in the configured window.
pub fn characteristic_sweep(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    kappa: &BlochVector,
    config: &SweepConfig,
    trunc: &FourierTruncation,
) -> Result<Vec<CharacteristicRoot>> {
    sweep_family(&OperatorFamily::new(bc, lattice, kappa, trunc), config)
}

/// [`characteristic_sweep`] for a prepared operator family.
pub fn sweep_family(family: &OperatorFamily, config: &SweepConfig) -> Result<Vec<CharacteristicRoot>> {
    config.validate()?;
    let lat = &family.lattice;
    let lo = lat.denormalize(config.omega_window.0);
    let hi = lat.denormalize(config.omega_window.1);
    let delta = lat.denormalize(config.singular_exclusion);
    let tol = lat.denormalize(config.root_tol);
    let poles: Vec<f64> = lat
        .singular_frequencies(&family.kappa, hi + delta)
        .into_iter()
        .filter(|&w| w > 0.0 && w >= lo - delta)
        .collect();

    let mut intervals = Vec::new();
    let mut start = lo;
    for &p in &poles {
        if p - delta > start {
            intervals.push((start, p - delta));
        }
        start = start.max(p + delta);
    }
    if hi > start {
        intervals.push((start, hi));
    }

    // Roots hidden inside the exclusion zones are searched on both flanks
    // of each pole, stopping short of the assembly guard.
    let near = (1e-3 * delta).max(2.0 * SINGULAR_GUARD * lat.recip_scale());
    let flanks: Vec<(f64, f64)> = if near < delta {
        poles
            .iter()
            .flat_map(|&p| [(p - delta, p - near), (p + near, p + delta)])
            .filter(|&(u, v)| u > lo && v < hi && u > 0.0)
            .collect()
    } else {
        Vec::new()
    };

    let blocks = family.blocks();
    let mut raw: Vec<(f64, usize)> = Vec::new();
    match family.bc {
        BoundaryCondition::Dirichlet => {
            for &(u, v) in intervals.iter().chain(&flanks) {
                raw.extend(inertia_roots(family, &blocks, u, v, tol)?);
            }
        }
        BoundaryCondition::Neumann => {
            let ppu = config.coarse_steps.max(40) as f64;
            for &(u, v) in intervals.iter().chain(&flanks) {
                raw.extend(sv_roots(family, &blocks, &poles, u, v, ppu, tol, config.sv_threshold)?);
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    let merge_tol = lat.denormalize(1e-7).max(100.0 * tol);
    let mut groups: Vec<Vec<(f64, usize)>> = Vec::new();
    for r in raw {
        match groups.last_mut() {
            Some(g) if r.0 - g.last().unwrap().0 <= merge_tol => g.push(r),
            _ => groups.push(vec![r]),
        }
    }

    let mut roots = Vec::with_capacity(groups.len());
    for g in groups {
        let omega = g.iter().map(|r| r.0).sum::<f64>() / g.len() as f64;
        let a = family.at(omega)?;
        let norm = a.norm2();
        let mut per_block = vec![0usize; blocks.len()];
        for r in &g {
            per_block[r.1] += 1;
        }
        let mut nullspace = Vec::new();
        let mut residual: f64 = 0.0;
        for (b, block) in blocks.iter().enumerate() {
            let sub = block.extract(&a.entries);
            let forced = per_block[b];
            for (sigma, c) in smallest_singular(&sub, forced, config.sv_threshold * norm) {
                residual = residual.max(sigma / norm);
                nullspace.push(embed(&c, block, a.dim()));
            }
        }
        if nullspace.len() != g.len() {
            log::warn!(
                "root at ω a/2π = {:.10}: {} bracketed roots but {} singular values below threshold",
                lat.normalize(omega),
                g.len(),
                nullspace.len()
            );
        }
        roots.push(CharacteristicRoot {
            omega,
            omega_normalized: lat.normalize(omega),
            multiplicity: nullspace.len(),
            residual,
            nullspace,
            components: g.iter().map(|r| (blocks[r.1].class, r.0)).collect(),
        });
    }
    Ok(roots)
}

/// Counts and brackets eigenvalue zero crossings on a pole-free interval.
fn inertia_roots(
    family: &OperatorFamily,
    blocks: &[Block],
    u: f64,
    v: f64,
    tol: f64,
) -> Result<Vec<(f64, usize)>> {
    let spectra = |w: f64| -> Result<Vec<Vec<f64>>> {
        let a = family.at(w)?;
        Ok(blocks.iter().map(|b| ascending_eigenvalues(&b.extract(&a.entries))).collect())
    };
    let (eu, ev) = rayon::join(|| spectra(u), || spectra(v));
    let (eu, ev) = (eu?, ev?);
    let mut out = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        let nu = eu[b].iter().filter(|&&x| x < 0.0).count();
        let nv = ev[b].iter().filter(|&&x| x < 0.0).count();
        if nv < nu {
            log::warn!(
                "negative count decreased from {nu} to {nv} on [{u}, {v}]; eigenvalues not monotone"
            );
            continue;
        }
        for k in nu..nv {
            let branch = |w: f64| -> Result<f64> {
                let a = family.at(w)?;
                Ok(ascending_eigenvalues(&block.extract(&a.entries))[k])
            };
            let root = refine_root(branch, (u, v), tol)?;
            out.push((root, b));
        }
    }
    Ok(out)
}

/// Zeros of the smallest singular value on a pole-free interval.
#[allow(clippy::too_many_arguments)]
fn sv_roots(
    family: &OperatorFamily,
    blocks: &[Block],
    poles: &[f64],
    u: f64,
    v: f64,
    points_per_unit: f64,
    tol: f64,
    threshold: f64,
) -> Result<Vec<(f64, usize)>> {
    let lat = &family.lattice;
    let coarse = lat.denormalize(1.0 / points_per_unit).min((v - u) / 8.0);
    let fine = coarse / 10.0;
    let zone = lat.denormalize(0.05);
    // Poles just outside the window still cluster eigenvalues inside it.
    let zone_poles = lat.singular_frequencies(&family.kappa, v + zone);
    let mut grid = vec![u];
    let mut w = u;
    while w < v {
        let dist = zone_poles
            .iter()
            .chain(poles)
            .filter(|&&p| p > 0.0)
            .map(|&p| (p - w).abs())
            .fold(f64::INFINITY, f64::min);
        // Geometric refinement towards a pole so that roots pushed against it
        // still fall between interior grid points.
        let step = if dist < zone { fine.min(0.25 * dist) } else { coarse };
        w = (w + step).min(v);
        grid.push(w);
    }
    let samples: Vec<(Vec<f64>, f64)> = grid
        .par_iter()
        .map(|&w| -> Result<(Vec<f64>, f64)> {
            let a = family.at(w)?;
            let s = blocks.iter().map(|b| min_singular(&b.extract(&a.entries))).collect();
            Ok((s, a.norm2()))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        for i in 1..grid.len().saturating_sub(1) {
            let (s0, s1, s2) = (samples[i - 1].0[b], samples[i].0[b], samples[i + 1].0[b]);
            if !(s1 <= s0 && s1 <= s2) {
                continue;
            }
            let sigma = |w: f64| -> Result<f64> {
                let a = family.at(w)?;
                Ok(min_singular(&block.extract(&a.entries)) / a.norm2())
            };
            let (w_min, s_min) = golden_section(sigma, (grid[i - 1], grid[i + 1]), tol)?;
            if s_min < threshold {
                out.push((w_min, b));
            }
        }
    }
    Ok(out)
}

/// Minimizes a unimodal function on `bracket` to width `tol`.
pub fn golden_section<F>(mut f: F, bracket: (f64, f64), tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = bracket;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Finds a zero of `f` in `bracket` to width `tol`.
///
/// Each iteration takes a secant step and, if the bracket did not shrink by
/// half, a bisection step, so the width at least halves per iteration.
pub fn refine_root<F>(mut f: F, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = bracket;
    if !(a < b) {
        return Err(Error::RootSearch(format!("empty bracket ({a}, {b})")));
    }
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b });
    }
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let width = b - a;
        let mut step = |x: f64, a: &mut f64, b: &mut f64, fa: &mut f64, fb: &mut f64| -> Result<bool> {
            let fx = f(x)?;
            if fx == 0.0 {
                *a = x;
                *b = x;
                return Ok(true);
            }
            if fx.signum() == fa.signum() {
                *a = x;
                *fa = fx;
            } else {
                *b = x;
                *fb = fx;
            }
            Ok(false)
        };
        let secant = b - fb * (b - a) / (fb - fa);
        let interior = secant.is_finite() && secant > a && secant < b;
        if interior && step(secant, &mut a, &mut b, &mut fa, &mut fb)? {
            return Ok(a);
        }
        if b - a > 0.5 * width {
            let mid = 0.5 * (a + b);
            if step(mid, &mut a, &mut b, &mut fa, &mut fb)? {
                return Ok(a);
            }
        }
    }
    if b - a > tol {
        return Err(Error::RootSearch(format!("bracket [{a}, {b}] did not reach {tol:e}")));
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Right singular vectors of `m`: all with `σ < threshold`, and at least
/// `min_count` of the smallest. Returned ascending in `σ`.
fn smallest_singular(m: &DMatrix<C64>, min_count: usize, threshold: f64) -> Vec<(f64, Vec<C64>)> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    order
        .into_iter()
        .enumerate()
        .take_while(|&(rank, i)| rank < min_count || svd.singular_values[i] < threshold)
        .map(|(_, i)| {
            let v = vt.row(i).iter().map(|z| z.conj()).collect();
            (svd.singular_values[i], v)
        })
        .collect()
}

fn embed(c: &[C64], block: &Block, dim: usize) -> DensityCoefficients {
    let mut full = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
    for (k, &i) in block.idx.iter().enumerate() {
        full[i] = c[k];
    }
    DensityCoefficients { c: full, residue_class: block.class }
}

/// Right singular vectors of `A` with `σ < rel_threshold·‖A‖₂`.
///
/// At `K` the residue classes are decomposed separately and every vector is
/// tagged with its class.
pub fn nullspace(a: &OperatorMatrix, rel_threshold: f64) -> Vec<DensityCoefficients> {
    let thr = rel_threshold * a.norm2();
    let dim = a.dim();
    let blocks: Vec<Block> = if a.at_dirac_point {
        [0, 1, -1]
            .into_iter()
            .map(|j| Block {
                class: Some(j),
                idx: (0..dim).filter(|&i| residue(a.trunc.mode(i)) == j).collect(),
            })
            .collect()
    } else {
        vec![Block { class: None, idx: (0..dim).collect() }]
    };
    let mut out = Vec::new();
    for block in &blocks {
        for (_, c) in smallest_singular(&block.extract(&a.entries), 0, thr) {
            out.push(embed(&c, block, dim));
        }
    }
    out
}

/// Schur complement `a_jj − a_{j,·} Â_j⁻¹ a_{·,j}` of the class-`j` block
/// with the row and column of mode `j` removed.
pub fn schur_value(a: &OperatorMatrix, j: i64) -> Result<C64> {
    let sub = a.subsystem_extract(j)?;
    let modes = a.class_modes(j);
    let pivot = modes
        .iter()
        .position(|&m| m == j)
        .ok_or_else(|| Error::InvalidParameter(format!("mode {j} is not retained")))?;
    let rest: Vec<usize> = (0..modes.len()).filter(|&i| i != pivot).collect();
    let hat = DMatrix::from_fn(rest.len(), rest.len(), |r, c| sub[(rest[r], rest[c])]);
    let col = nalgebra::DVector::from_fn(rest.len(), |r, _| sub[(rest[r], pivot)]);
    let row = nalgebra::DVector::from_fn(rest.len(), |c, _| sub[(pivot, rest[c])]);
    let sv = hat.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::SingularSubsystem { ratio: smin / smax });
    }
    let x = hat
        .lu()
        .solve(&col)
        .ok_or(Error::SingularSubsystem { ratio: smin / smax })?;
    Ok(sub[(pivot, pivot)] - row.dot(&x))
}

/// Scalar characteristic function `f_j(ω)` of class `j` at `K`.
#[derive(Debug, Clone)]
pub struct SchurFunction {
    pub j: i64,
    pub family: OperatorFamily,
}

impl SchurFunction {
    pub fn new(
        bc: BoundaryCondition,
        lattice: &LatticeSpec,
        j: i64,
        trunc: &FourierTruncation,
    ) -> Result<Self> {
        if !(-1..=1).contains(&j) {
            return Err(Error::InvalidParameter(format!("residue class {j} not in {{-1, 0, 1}}")));
        }
        Ok(Self {
            j,
            family: OperatorFamily::new(bc, lattice, &lattice.kappa_star(), trunc),
        })
    }

    /// Complex value of `f_j(ω)`.
    pub fn value(&self, omega: f64) -> Result<C64> {
        schur_value(&self.family.at(omega)?, self.j)
    }

    /// Real value of `f_j(ω)`.
    ///
    /// Fails if the imaginary part exceeds `1e-8` times the largest entry of
    /// the matrix, which would signal a loss of Hermitian structure.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        let a = self.family.at(omega)?;
        let f = schur_value(&a, self.j)?;
        if f.im.abs() > 1e-8 * a.norm_max() {
            return Err(Error::RootSearch(format!(
                "Schur function not real at ω = {omega}: {f}"
            )));
        }
        Ok(f.re)
    }

    /// Root of `f_j` inside `bracket` (unnormalized).
    pub fn root(&self, bracket: (f64, f64), tol: f64) -> Result<f64> {
        refine_root(|w| self.eval(w), bracket, tol)
    }
}

/// `f_j(ω)` at `K` as a real number.
pub fn schur_characteristic(
    bc: BoundaryCondition,
    lattice: &LatticeSpec,
    j: i64,
    omega: f64,
    trunc: &FourierTruncation,
) -> Result<f64> {
    SchurFunction::new(bc, lattice, j, trunc)?.eval(omega)
}

/// Window `(1/(2|Y|))(2π/a)²ε² ≤ ω² − |K|² ≤ 4π/(|Y||ln ε|)` around the first
/// singular frequency at `K`, unnormalized.
pub fn dirac_window(lattice: &LatticeSpec) -> (f64, f64) {
    let k2 = lattice.kappa_star().norm().powi(2);
    let y = lattice.cell_area;
    let s = lattice.recip_scale();
    let eps = lattice.epsilon / lattice.a;
    let lower = s * s * eps * eps / (2.0 * y);
    let upper = 4.0 * std::f64::consts::PI / (y * eps.ln().abs());
    ((k2 + lower).sqrt(), (k2 + upper).sqrt())
}
