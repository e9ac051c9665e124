use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {omega} lies within {gap:e} of the singular frequency {omega_bar}")]
    SingularFrequency { omega: f64, omega_bar: f64, gap: f64 },

    #[error("evaluation point lies on the source lattice")]
    OnSourcePoint,

    #[error("lattice sum not converged: estimated error {est_error:e} exceeds {target_tol:e}")]
    NotConverged { est_error: f64, target_tol: f64 },

    #[error("series argument {arg} outside the supported range (< {limit})")]
    SeriesRange { arg: f64, limit: f64 },

    #[error("ω ε = {omega_eps} reaches an interior disk resonance (guard {limit})")]
    SpuriousResonance { omega_eps: f64, limit: f64 },

    #[error("kernel not resolved by {quad_points} quadrature points (trailing content {ratio:e})")]
    QuadratureUnresolved { quad_points: usize, ratio: f64 },

    #[error("matrix is not assembled at the Dirac point K")]
    NotDiracPoint,

    #[error("reduced subsystem is numerically singular (σ_min/σ_max = {ratio:e})")]
    SingularSubsystem { ratio: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root search failed: {0}")]
    RootSearch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
