//! The four subcommands.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use diracbands_core::dirac::{cone_fit, table1_compare, BandGroup, DiracReport};
use diracbands_core::lattice::{brillouin_path, rotate};
use diracbands_core::qpgreens::QpGreens;
use diracbands_core::spectral::{sweep_family, OperatorFamily};
use diracbands_core::{BlochVector, LatticeSpec, Vec2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, Format, RunConfig};
use crate::output::{round_json, sig12, write_csv};

/// Command failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Usage or configuration error (exit 2).
    Usage(String),
    /// Computation error or missed tolerance (exit 1).
    Check(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Usage(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("output: {e}"))
    }
}

impl From<diracbands_core::Error> for Failure {
    fn from(e: diracbands_core::Error) -> Self {
        use diracbands_core::Error as E;
        match e {
            E::InvalidGeometry(_) | E::InvalidParameter(_) | E::OnSourcePoint => Self::Usage(e.to_string()),
            other => Self::Check(other.to_string()),
        }
    }
}

/// Output sink: the configured file or stdout.
fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<(), Failure> {
    let mut v = serde_json::to_value(value).map_err(|e| Failure::Check(e.to_string()))?;
    round_json(&mut v);
    let mut w = sink(cfg)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&v).map_err(|e| Failure::Check(e.to_string()))?)?;
    w.flush()?;
    Ok(())
}

/// Frequency in output units.
fn freq(l: &LatticeSpec, normalized: f64, raw: bool) -> f64 {
    if raw {
        l.denormalize(normalized)
    } else {
        normalized
    }
}

#[derive(Serialize)]
struct BandRow {
    s: f64,
    kx: f64,
    ky: f64,
    bands: Vec<Option<f64>>,
}

/// Band diagram along the configured path.
pub fn cmd_bands(cfg: &RunConfig, raw: bool) -> Result<(), Failure> {
    let lat = cfg.lattice()?;
    let tr = cfg.truncation()?;
    let params = cfg.ewald(&lat);
    let vertices: Vec<BlochVector> = cfg.path.iter().map(|p| p.resolve(&lat)).collect::<Result<_, _>>()?;
    let path = brillouin_path(&vertices, cfg.samples)?;
    let t = Instant::now();
    let rows: Vec<BandRow> = path
        .par_iter()
        .map(|(s, kappa)| {
            let family = OperatorFamily::new(cfg.bc, &lat, kappa, &tr).with_params(params);
            let mut bands: Vec<Option<f64>> = match sweep_family(&family, &cfg.sweep) {
                Ok(roots) => roots
                    .iter()
                    .flat_map(|r| std::iter::repeat_n(r.omega_normalized, r.multiplicity.max(1)))
                    .take(cfg.n_bands)
                    .map(|w| Some(freq(&lat, w, raw)))
                    .collect(),
                Err(e) => {
                    log::warn!("κ = ({:.6}, {:.6}): {e}; row left empty", kappa.k.x, kappa.k.y);
                    Vec::new()
                }
            };
            bands.resize(cfg.n_bands, None);
            BandRow { s: *s, kx: kappa.k.x, ky: kappa.k.y, bands }
        })
        .collect();
    log::info!("{} path samples in {:.2?}", rows.len(), t.elapsed());
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut header: Vec<String> = ["s", "kx", "ky"].iter().map(|s| s.to_string()).collect();
            header.extend((1..=cfg.n_bands).map(|i| format!("band{i}")));
            let table: Vec<Vec<Option<f64>>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![Some(r.s), Some(r.kx), Some(r.ky)];
                    v.extend(r.bands.iter().copied());
                    v
                })
                .collect();
            let mut w = sink(cfg)?;
            write_csv(&mut w, &header, &table)?;
            w.flush()?;
        }
        Format::Json => write_json(cfg, &serde_json::json!({ "rows": rows }))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct DiracJson {
    bc: String,
    band_pair: (usize, usize),
    omega_star_numeric: f64,
    omega_star_asymptotic: Option<f64>,
    multiplicity: usize,
    slope_fit_plus: f64,
    slope_fit_minus: f64,
    slope_theory: f64,
    fit_residual: f64,
    directions_tested: usize,
    isotropy_spread: f64,
    max_quadratic_ratio: f64,
    vertex_gap: f64,
}

impl DiracJson {
    fn new(r: &DiracReport, l: &LatticeSpec, raw: bool) -> Self {
        let f = |w: f64| freq(l, w, raw);
        Self {
            bc: r.bc.to_string(),
            band_pair: r.band_pair,
            omega_star_numeric: f(r.omega_star_numeric),
            omega_star_asymptotic: r.omega_star_asymptotic.map(f),
            multiplicity: r.multiplicity,
            slope_fit_plus: r.slope_fit_plus,
            slope_fit_minus: r.slope_fit_minus,
            slope_theory: r.slope_theory,
            fit_residual: r.fit_residual,
            directions_tested: r.directions_tested,
            isotropy_spread: r.isotropy_spread,
            max_quadratic_ratio: r.max_quadratic_ratio,
            vertex_gap: f(r.vertex_gap),
        }
    }
}

/// Dirac point and cone fit for one band pair, as JSON.
pub fn cmd_dirac(cfg: &RunConfig, raw: bool) -> Result<(), Failure> {
    BandGroup::from_pair(cfg.band_pair)?;
    let lat = cfg.lattice()?;
    let tr = cfg.truncation()?;
    let rep = cone_fit(cfg.bc, &lat, cfg.band_pair, &tr, &cfg.radii, cfg.directions)?;
    write_json(cfg, &DiracJson::new(&rep, &lat, raw))?;
    if rep.multiplicity != 2 {
        return Err(Failure::Check(format!("multiplicity {} at the Dirac point, expected 2", rep.multiplicity)));
    }
    Ok(())
}

/// Reference rows for the first Dirichlet Dirac value: `(ε/a, numeric, |numeric − asymptotic|)`.
const TABLE1: [(f64, f64, f64); 4] = [
    (1.0 / 40.0, 0.66896, 3e-5),
    (1.0 / 20.0, 0.67559, 1.4e-4),
    (1.0 / 10.0, 0.70172, 1.2e-3),
    (1.0 / 5.0, 0.81715, 5.4e-3),
];

/// Numeric against asymptotic first Dirac values, one row per `ε`.
pub fn cmd_table1(cfg: &RunConfig, raw: bool) -> Result<(), Failure> {
    let base = cfg.lattice()?;
    let tr = cfg.truncation()?;
    let eps: Vec<f64> = cfg.eps_list.iter().map(|e| e / base.a).collect();
    let rows = table1_compare(&base, &eps, &tr)?;
    let mut failures = String::new();
    for r in &rows {
        if let Some(&(_, want, err)) = TABLE1.iter().find(|t| (t.0 - r.epsilon).abs() < 1e-12) {
            let diff = (r.numeric - want).abs();
            let ratio = r.error / err;
            if diff >= 5e-4 || !(0.5..=2.0).contains(&ratio) {
                let _ = writeln!(
                    failures,
                    "eps {}: numeric {} vs {want} (diff {:.2e}), error {:.2e} vs {err:.1e}",
                    sig12(r.epsilon),
                    sig12(r.numeric),
                    diff,
                    r.error
                );
            }
        }
    }
    let f = |w: f64| freq(&base, w, raw);
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let header: Vec<String> = ["epsilon", "numeric", "asymptotic", "error"].iter().map(|s| s.to_string()).collect();
            let table: Vec<Vec<Option<f64>>> = rows
                .iter()
                .map(|r| vec![Some(r.epsilon), Some(f(r.numeric)), Some(f(r.asymptotic)), Some(f(r.error))])
                .collect();
            let mut w = sink(cfg)?;
            write_csv(&mut w, &header, &table)?;
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "epsilon": r.epsilon,
                        "numeric": f(r.numeric),
                        "asymptotic": f(r.asymptotic),
                        "error": f(r.error),
                    })
                })
                .collect();
            write_json(cfg, &serde_json::json!({ "rows": rows }))?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("table rows outside tolerance:\n{failures}")))
    }
}

/// Arguments of the Green's-function probe (unnormalized units).
#[derive(Debug, Clone, Copy)]
pub struct ProbeArgs {
    pub kappa: Option<(f64, f64)>,
    pub omega: f64,
    pub x: f64,
    pub y: f64,
    pub check: bool,
    pub eta_scan: bool,
}

#[derive(Serialize)]
struct ProbeJson {
    kappa: (f64, f64),
    omega: f64,
    x: (f64, f64),
    value: (f64, f64),
    grad_x: [(f64, f64); 2],
    est_error: f64,
    seconds_per_eval: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<CheckJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    eta_scan: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct CheckJson {
    quasi_periodicity: f64,
    conjugation: f64,
    rotation: Option<f64>,
    pass: bool,
}

fn pair(c: C64) -> (f64, f64) {
    (c.re, c.im)
}

/// Evaluates `G(κ, ω; x)` with optional symmetry checks and an `η` scan.
pub fn cmd_greens_probe(cfg: &RunConfig, args: &ProbeArgs) -> Result<(), Failure> {
    let lat = cfg.lattice()?;
    let kappa = match args.kappa {
        Some((kx, ky)) => BlochVector::new(kx, ky),
        None => lat.kappa_star(),
    };
    let params = cfg.ewald(&lat);
    let x = Vec2::new(args.x, args.y);
    let radius = x.norm() + lat.a * 2.0;
    let g = QpGreens::new(&lat, &kappa, args.omega, &params, radius)?;
    let value = g.eval(x)?;
    let reps = 200;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(g.eval(x)?);
    }
    let per_eval = t.elapsed().as_secs_f64() / reps as f64;

    let check = if args.check {
        let mut qp: f64 = 0.0;
        for e in [lat.e1, lat.e2, lat.e1 + lat.e2] {
            let ge = g.value(x + e)?;
            qp = qp.max((ge - C64::from_polar(1.0, kappa.k.dot(&e)) * value.value).norm());
        }
        let conj = (g.value(-x)?.conj() - value.value).norm();
        let rotation = if lat.is_kappa_star(&kappa) {
            Some((g.value(rotate(x))? - value.value).norm())
        } else {
            None
        };
        let pass = qp < 1e-9 && conj < 1e-9 && rotation.is_none_or(|r| r < 1e-9);
        Some(CheckJson { quasi_periodicity: qp, conjugation: conj, rotation, pass })
    } else {
        None
    };
    let mut eta_scan = Vec::new();
    if args.eta_scan {
        for f in [0.5, 0.75, 1.0, 1.5, 2.0] {
            let p = params.with_eta(params.eta * f);
            let v = QpGreens::new(&lat, &kappa, args.omega, &p, radius)?.value(x)?;
            eta_scan.push((p.eta, (v - value.value).norm()));
        }
    }
    let report = ProbeJson {
        kappa: (kappa.k.x, kappa.k.y),
        omega: args.omega,
        x: (x.x, x.y),
        value: pair(value.value),
        grad_x: [pair(value.grad_x[0]), pair(value.grad_x[1])],
        est_error: value.est_error,
        seconds_per_eval: per_eval,
        check,
        eta_scan,
    };
    let failed = report.check.as_ref().is_some_and(|c| !c.pass);
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(cfg, &report)?,
        Format::Csv => {
            let mut w = sink(cfg)?;
            writeln!(w, "value = {} + {}i", sig12(value.value.re), sig12(value.value.im))?;
            for (axis, d) in ["x", "y"].iter().zip(value.grad_x) {
                writeln!(w, "d/d{axis} = {} + {}i", sig12(d.re), sig12(d.im))?;
            }
            writeln!(w, "est_error = {:.3e}", value.est_error)?;
            writeln!(w, "time per evaluation = {:.3e} s", per_eval)?;
            if let Some(c) = &report.check {
                writeln!(w, "quasi-periodicity = {:.3e}", c.quasi_periodicity)?;
                writeln!(w, "conjugation = {:.3e}", c.conjugation)?;
                match c.rotation {
                    Some(r) => writeln!(w, "rotation = {r:.3e}")?,
                    None => writeln!(w, "rotation = skipped (kappa is not K)")?,
                }
                writeln!(w, "check = {}", if c.pass { "pass" } else { "fail" })?;
            }
            for (eta, d) in &report.eta_scan {
                writeln!(w, "eta = {} |dG| = {d:.3e}", sig12(*eta))?;
            }
            w.flush()?;
        }
    }
    if failed {
        return Err(Failure::Check("symmetry check above 1e-9".into()));
    }
    Ok(())
}
