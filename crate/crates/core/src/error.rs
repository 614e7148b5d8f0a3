//! Crate-wide error type.
//!
//! Errors split into two broad families that callers treat differently:
//! *validation* errors (bad inputs, regimes where the model derivation does
//! not apply — refuse before computing) and *numeric* errors (a computation
//! started and failed to meet its tolerance). [`Error::is_validation`]
//! makes the distinction queryable, e.g. for process exit codes.

use crate::hilbert::BasisDescriptor;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("chain must have at least one site")]
    EmptyChain,

    #[error(
        "basis dimension for n_sites={n_sites}, cutoffs=({n_max_a},{n_max_b}) exceeds the cap \
         of {cap} states — reduce n_sites or the photon cutoffs"
    )]
    DimensionCap {
        n_sites: usize,
        n_max_a: usize,
        n_max_b: usize,
        cap: usize,
    },

    #[error("operators live on different bases: {left:?} vs {right:?}")]
    BasisMismatch {
        left: BasisDescriptor,
        right: BasisDescriptor,
    },

    #[error("site index {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("parameter set describes {params} sites but the basis has {basis}")]
    SiteCountMismatch { params: usize, basis: usize },

    #[error("local operator has dimension {got} but the targeted factor has dimension {expected}")]
    FactorDimMismatch { expected: usize, got: usize },

    #[error("duplicate factor in operator product: site {site}, {factor}")]
    DuplicateFactor { site: usize, factor: &'static str },

    #[error("local operator entry ({row},{col}) outside dimension {dim}")]
    LocalEntryOutOfRange { row: usize, col: usize, dim: usize },

    #[error("invalid spin pattern {pattern:?}: {reason}")]
    InvalidPattern { pattern: String, reason: String },

    #[error("state norm is {norm}, more than {tolerance} away from 1")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("amplitude vector has length {got}, basis dimension is {expected}")]
    StateLength { expected: usize, got: usize },

    #[error("{which} must be nonzero")]
    ZeroDetuning { which: &'static str },

    #[error(
        "two-photon detunings are inconsistent between the branches: \
         delta_c31 - delta_l31 = {d1_a} vs delta_c42 - delta_l42 = {d1_b}, and \
         delta_c31 - delta_l32 = {d2_a} vs delta_c42 - delta_l41 = {d2_b}; \
         the drive scheme requires both pairs to match"
    )]
    InconsistentDetunings {
        d1_a: f64,
        d1_b: f64,
        d2_a: f64,
        d2_b: f64,
    },

    #[error("photon cutoff for {which} is 0 but its drive couplings are nonzero")]
    CutoffTooSmall { which: &'static str },

    #[error(
        "periodic boundaries need at least 3 sites (n_sites={n_sites} would double-count bonds)"
    )]
    PbcTooSmall { n_sites: usize },

    #[error(
        "momentum-space elimination needs an even ring (n_sites={n_sites}): the staggered \
         drive phase is inconsistent with periodic boundaries on odd rings"
    )]
    OddSiteCount { n_sites: usize },

    #[error(
        "shifted detuning {delta} rad/ns lies inside the photon band (half-width {bandwidth} \
         rad/ns): the photon propagator has a pole and adiabatic elimination breaks down"
    )]
    Resonance { delta: f64, bandwidth: f64 },

    #[error("step {step} ns exceeds the allowed bound {bound} ns ({why})")]
    StepInvalid { step: f64, bound: f64, why: String },

    #[error("{what} must be positive, got {got}")]
    NonPositive { what: &'static str, got: f64 },

    #[error("norm drifted to {drift:e} at t = {t} ns (tolerance {tolerance:e})")]
    NormDrift { t: f64, drift: f64, tolerance: f64 },

    #[error("Hamiltonian is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("{what} failed to converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error(
        "refusing to run: validity margin {min_ratio:.2} below the hard floor {floor} \
         (worst constraint: {worst})"
    )]
    ValidityRefused {
        min_ratio: f64,
        floor: f64,
        worst: String,
    },

    #[error("n_sites={n_sites} exceeds the supported maximum {max} for this operation")]
    NTooLarge { n_sites: usize, max: usize },

    #[error("{what} is empty")]
    EmptyInput { what: &'static str },

    #[error("free parameters overlap: {first} and {second} control the same coupling")]
    OverlappingFreeParams {
        first: &'static str,
        second: &'static str,
    },

    #[error("bounds list has {got} entries for {expected} free parameters")]
    BoundsMismatch { expected: usize, got: usize },

    #[error(
        "no feasible parameters found: best residual {best_residual:e} (target {tolerance:e})"
    )]
    Infeasible { best_residual: f64, tolerance: f64 },
}

impl Error {
    /// True for refusals rooted in invalid inputs or out-of-regime requests,
    /// false for numeric failures that arose mid-computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NormDrift { .. }
                | Error::NonHermitian { .. }
                | Error::NoConvergence { .. }
                | Error::Infeasible { .. }
        )
    }
}
