//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers, with `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use diracbands_core::bie::{BoundaryCondition, FourierTruncation};
use diracbands_core::qpgreens::EwaldParams;
use diracbands_core::spectral::SweepConfig;
use diracbands_core::{BlochVector, LatticeSpec};

/// A configuration or usage error (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<diracbands_core::Error> for ConfigError {
    fn from(e: diracbands_core::Error) -> Self {
        Self(e.to_string())
    }
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(ConfigError(format!("unknown format '{other}', expected csv or json"))),
        }
    }
}

/// One vertex of a Brillouin path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathPoint {
    /// `G`, `M`, `K` or `K'`.
    Named(String),
    /// Explicit `κ` in units of `2π/a`.
    Explicit(f64, f64),
}

impl PathPoint {
    pub fn resolve(&self, lattice: &LatticeSpec) -> Result<BlochVector, ConfigError> {
        let h = lattice.high_symmetry();
        match self {
            Self::Named(n) => match n.as_str() {
                "G" | "Gamma" | "GAMMA" => Ok(h.gamma),
                "M" => Ok(h.m),
                "K" => Ok(h.k),
                "K'" | "Kp" => Ok(h.k_prime),
                other => Err(ConfigError(format!("unknown symmetry point '{other}'"))),
            },
            Self::Explicit(x, y) => {
                let s = lattice.recip_scale();
                Ok(BlochVector::new(x * s, y * s))
            }
        }
    }
}

impl FromStr for PathPoint {
    type Err = ConfigError;

    /// A symmetry-point name or `kx:ky` in units of `2π/a`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((x, y)) = s.split_once(':') {
            let p = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError(format!("bad path coordinate '{v}' in '{s}'")))
            };
            return Ok(Self::Explicit(p(x)?, p(y)?));
        }
        match s {
            "G" | "Gamma" | "GAMMA" | "M" | "K" | "K'" | "Kp" => Ok(Self::Named(s.to_string())),
            _ => Err(ConfigError(format!("unknown symmetry point '{s}'"))),
        }
    }
}

/// Everything a subcommand needs, after defaults and overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub epsilon: f64,
    pub bc: BoundaryCondition,
    pub n: usize,
    pub quad_points: Option<usize>,
    pub eta: Option<f64>,
    pub sweep: SweepConfig,
    pub path: Vec<PathPoint>,
    pub samples: usize,
    pub n_bands: usize,
    pub format: Option<Format>,
    pub out: Option<String>,
    pub band_pair: (usize, usize),
    pub radii: Vec<f64>,
    pub directions: usize,
    pub eps_list: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            epsilon: 0.05,
            bc: BoundaryCondition::Dirichlet,
            n: 12,
            quad_points: None,
            eta: None,
            sweep: SweepConfig::default(),
            path: ["M", "G", "K", "M"].iter().map(|s| PathPoint::Named(s.to_string())).collect(),
            samples: 20,
            n_bands: 6,
            format: None,
            out: None,
            band_pair: (1, 2),
            radii: vec![1e-3, 2e-3, 4e-3, 8e-3],
            directions: 6,
            eps_list: vec![1.0 / 40.0, 1.0 / 20.0, 1.0 / 10.0, 1.0 / 5.0],
        }
    }
}

fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("line {line_no}: unterminated section header")))?;
            section = name.trim().to_ascii_lowercase();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {line_no}: expected 'key = value'")))?;
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ConfigError(format!("line {line_no}: empty key")));
        }
        let entry = out.entry(section.clone()).or_default();
        if entry.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
            return Err(ConfigError(format!("line {line_no}: duplicate key '{key}'")));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(section: &str, key: &str, line: usize, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError(format!("line {line}: cannot parse [{section}] {key} = '{v}'")))
}

fn parse_list<T: FromStr>(section: &str, key: &str, line: usize, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|s| parse_value(section, key, line, s.trim())).collect()
}

/// Parses a band pair written `i,j` or `i/j`.
pub fn parse_pair(v: &str) -> Result<(usize, usize), ConfigError> {
    let parts: Vec<&str> = v.split([',', '/']).map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(ConfigError(format!("bad band pair '{v}'"))),
        },
        _ => Err(ConfigError(format!("bad band pair '{v}', expected two integers"))),
    }
}

impl RunConfig {
    /// Parses a configuration file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        for (section, entries) in parse_sections(text)? {
            for (key, (line, v)) in entries {
                let s = section.as_str();
                match (s, key.as_str()) {
                    ("" | "lattice", "bc") | ("", "boundary") => {
                        c.bc = v.parse().map_err(|e| ConfigError(format!("line {line}: {e}")))?
                    }
                    ("lattice", "a") => c.a = parse_value(s, &key, line, &v)?,
                    ("lattice", "epsilon") => c.epsilon = parse_value(s, &key, line, &v)?,
                    ("truncation", "n") => c.n = parse_value(s, &key, line, &v)?,
                    ("truncation", "quad_points") => c.quad_points = Some(parse_value(s, &key, line, &v)?),
                    ("ewald", "eta") => c.eta = Some(parse_value(s, &key, line, &v)?),
                    ("sweep", "omega_min") => c.sweep.omega_window.0 = parse_value(s, &key, line, &v)?,
                    ("sweep", "omega_max") => c.sweep.omega_window.1 = parse_value(s, &key, line, &v)?,
                    ("sweep", "coarse_steps") => c.sweep.coarse_steps = parse_value(s, &key, line, &v)?,
                    ("sweep", "singular_exclusion") => {
                        c.sweep.singular_exclusion = parse_value(s, &key, line, &v)?
                    }
                    ("sweep", "root_tol") => c.sweep.root_tol = parse_value(s, &key, line, &v)?,
                    ("sweep", "sv_threshold") => c.sweep.sv_threshold = parse_value(s, &key, line, &v)?,
                    ("path", "points") => c.path = parse_list(s, &key, line, &v)?,
                    ("path", "samples") => c.samples = parse_value(s, &key, line, &v)?,
                    ("bands", "n_bands") => c.n_bands = parse_value(s, &key, line, &v)?,
                    ("output", "format") => c.format = Some(v.parse()?),
                    ("output", "path") => c.out = Some(v.clone()),
                    ("dirac", "pair") => c.band_pair = parse_pair(&v)?,
                    ("dirac", "radii") => c.radii = parse_list(s, &key, line, &v)?,
                    ("dirac", "directions") => c.directions = parse_value(s, &key, line, &v)?,
                    ("table1", "eps_list") => c.eps_list = parse_list(s, &key, line, &v)?,
                    _ => {
                        return Err(ConfigError(format!("line {line}: unknown key [{section}] {key}")));
                    }
                }
            }
        }
        Ok(c)
    }

    pub fn lattice(&self) -> Result<LatticeSpec, ConfigError> {
        Ok(LatticeSpec::new(self.a, self.epsilon)?)
    }

    pub fn truncation(&self) -> Result<FourierTruncation, ConfigError> {
        Ok(match self.quad_points {
            Some(q) => FourierTruncation::new(self.n, q)?,
            None => FourierTruncation::with_modes(self.n, 64)?,
        })
    }

    pub fn ewald(&self, lattice: &LatticeSpec) -> EwaldParams {
        let p = EwaldParams::for_lattice(lattice);
        match self.eta {
            Some(eta) => p.with_eta(eta),
            None => p,
        }
    }

    /// Checks ranges that the library would only reject later.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lattice()?;
        self.truncation()?;
        self.sweep.validate()?;
        if let Some(eta) = self.eta {
            if eta.is_nan() || eta <= 0.0 {
                return Err(ConfigError(format!("eta must be positive, got {eta}")));
            }
        }
        if self.path.len() < 2 {
            return Err(ConfigError("path needs at least two points".into()));
        }
        if self.samples < 2 {
            return Err(ConfigError("path samples must be at least 2".into()));
        }
        if self.n_bands == 0 {
            return Err(ConfigError("n_bands must be positive".into()));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e < 0.25)) {
            return Err(ConfigError("eps_list entries must lie in (0, 1/4)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let c = RunConfig::parse(
            "bc = neumann\n[lattice]\na = 2\nepsilon = 0.1 # comment\n\n[path]\npoints = M, G, 0.5:0.25\nsamples = 7\n[table1]\neps_list = 0.05, 0.1\n[dirac]\npair = 4/5\n",
        )
        .unwrap();
        assert_eq!(c.bc, BoundaryCondition::Neumann);
        assert_eq!(c.a, 2.0);
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.samples, 7);
        assert_eq!(c.path[2], PathPoint::Explicit(0.5, 0.25));
        assert_eq!(c.eps_list, vec![0.05, 0.1]);
        assert_eq!(c.band_pair, (4, 5));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("[lattice]\nepsilon = x\n").is_err());
        assert!(RunConfig::parse("[lattice\n").is_err());
        assert!(RunConfig::parse("[lattice]\nfoo = 1\n").is_err());
        assert!(RunConfig::parse("[lattice]\na = 1\na = 2\n").is_err());
        assert!(RunConfig::parse("novalue\n").is_err());
        assert!(RunConfig::parse("[path]\npoints = M, Q\n").is_err());
        let c = RunConfig::parse("[lattice]\nepsilon = 0.6\n").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn resolves_points() {
        let l = LatticeSpec::new(1.0, 0.05).unwrap();
        let k = "K".parse::<PathPoint>().unwrap().resolve(&l).unwrap();
        assert_eq!(k, l.high_symmetry().k);
        let e = "1:0".parse::<PathPoint>().unwrap().resolve(&l).unwrap();
        assert!((e.k.x - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}
