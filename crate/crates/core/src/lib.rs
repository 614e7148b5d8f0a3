//! Simulation and parameter-design toolkit for frustrated XXZ spin chains
//! realized in driven coupled-cavity arrays.
//!
//! A chain of two-level emitters sits in a cavity array with two photonic
//! mode families. Laser drives and cavity couplings, all far detuned,
//! generate photon-mediated spin-spin interactions: nearest-neighbor and
//! next-nearest-neighbor XXZ couplings whose signs and ratios are tunable
//! through interference between the two mode families. The crate covers
//! that pipeline end to end:
//!
//! * [`hilbert`] — composite emitter ⊗ two-mode Hilbert spaces, sparse
//!   operators, product states;
//! * [`params`] — microscopic drive/cavity parameters, the reduced
//!   rotating-frame couplings derived from them, the effective spin-chain
//!   couplings, and validity/decoherence diagnostics;
//! * [`hamiltonians`] — the time-dependent cavity-array Hamiltonian, the
//!   effective spin model, and the exact second-order momentum-sum model
//!   that bridges the two;
//! * [`evolve`] — piecewise-exponential and RK4 propagators plus
//!   trajectory observables;
//! * [`analysis`] — full-vs-effective comparisons, coupling-cancellation
//!   scans, expansion-error tables, ground-state diagnostics;
//! * [`design`] — fitting drive parameters to target spin-model couplings.
//!
//! # Units
//!
//! Every frequency-like quantity (detunings, Rabi rates, hoppings, decay
//! rates, spin couplings) is an angular frequency in rad/ns; times are in
//! ns. No unit conversion happens anywhere inside the crate; the only
//! cosmetic exception is a helper that formats rad/ns values in MHz for
//! display.

pub mod analysis;
pub mod design;
pub mod error;
pub mod evolve;
pub mod hamiltonians;
pub mod hilbert;
pub mod params;

/// Complex double — the scalar type of every amplitude and operator entry.
pub type C64 = num_complex::Complex64;

pub use analysis::{
    cancellation_scan, compare_models, expansion_error_report, ground_state, CancellationRow,
    CompareSpec, ComparisonResult, ExpansionErrorReport, GroundStateResult, HIERARCHY_HARD_FLOOR,
    HIERARCHY_WARN_FLOOR,
};
pub use design::{
    fit_parameters, CouplingKind, DesignResult, DesignTarget, FreeParam, Target, TargetReport,
};
pub use error::{Error, Result};
pub use evolve::{
    magnetization, occupation, photon_numbers, propagate, Method, PropagatorConfig, TimeSeries,
};
pub use hamiltonians::{
    effective_hamiltonian, exact_second_order, full_hamiltonian_at, momentum_spectrum,
    one_photon_hopping_spectrum, FullHamiltonian, FullHamiltonianSpec, LongRangeSpinModel,
};
pub use hilbert::{
    build_basis, embed_product, embed_site_operator, BasisDescriptor, LocalOp, QuantumState,
    SiteFactor, SparseOperator,
};
pub use params::{
    decoherence_check, effective_couplings, reduce_params, shifted_detunings, stark_field_estimate,
    validity_check, ConstraintCheck, DecoherenceReport, EffectiveSpinModel, MicroParams,
    ReducedParams, ShiftedDetunings, ValidityReport,
};
