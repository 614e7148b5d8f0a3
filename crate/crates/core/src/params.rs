//! Microscopic drive/cavity parameters and everything derived from them:
//! rotating-frame couplings, Stark-shifted detunings, effective spin-chain
//! couplings, and validity/decoherence diagnostics.
//!
//! The parameter chain is `MicroParams` → [`reduce_params`] →
//! `ReducedParams` → [`shifted_detunings`] / [`effective_couplings`].
//! Each stage is a pure function; all frequencies are angular, in rad/ns.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default separation-of-scales factor for [`validity_check`]: every
/// fast frequency must exceed the slow scale it protects by this ratio.
pub const DEFAULT_HIERARCHY_FACTOR: f64 = 10.0;

/// Microscopic parameters of the driven cavity array (all rad/ns).
///
/// Each cavity hosts one four-level emitter. Two laser drives and one
/// cavity-mode family form each of the two Raman branches: branch a uses
/// drives 1 and 3 on the 3↔1 / 3↔2 transitions, branch b uses drives 2
/// and 4 on the 4↔2 / 4↔1 transitions. `delta_c*` are cavity–transition
/// detunings, `delta_l*` laser–transition detunings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroParams {
    /// Number of cavities in the ring.
    pub n_sites: usize,
    /// Rabi frequency of drive 1 (branch a, transition 3↔1).
    pub omega1: f64,
    /// Rabi frequency of drive 2 (branch b, transition 4↔2, staggered phase).
    pub omega2: f64,
    /// Rabi frequency of drive 3 (branch a, transition 3↔2).
    pub omega3: f64,
    /// Rabi frequency of drive 4 (branch b, transition 4↔1, staggered phase).
    pub omega4: f64,
    /// Emitter–cavity coupling of mode family a.
    pub g_a: f64,
    /// Emitter–cavity coupling of mode family b.
    pub g_b: f64,
    /// Cavity detuning of mode a from transition 3↔1.
    pub delta_c31: f64,
    /// Cavity detuning of mode b from transition 4↔2.
    pub delta_c42: f64,
    /// Laser detuning of drive 1 from transition 3↔1.
    pub delta_l31: f64,
    /// Laser detuning of drive 3 from transition 3↔2.
    pub delta_l32: f64,
    /// Laser detuning of drive 4 from transition 4↔1.
    pub delta_l41: f64,
    /// Laser detuning of drive 2 from transition 4↔2.
    pub delta_l42: f64,
    /// Photon hopping rate between neighboring cavities, mode family a.
    pub hop_a: f64,
    /// Photon hopping rate between neighboring cavities, mode family b.
    pub hop_b: f64,
}

/// Rotating-frame couplings and detunings obtained by adiabatic
/// elimination of the emitter upper levels (all rad/ns).
///
/// `a1`/`b1` multiply the spin-conserving photon-emission terms rotating
/// at `delta1`, `a2`/`b2` the spin-flip photon terms at `delta2`, and
/// `a3`/`b3` the purely atomic cross terms at `delta3 = delta1 - delta2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub n_sites: usize,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// Two-photon detuning of the spin-conserving channel.
    pub delta1: f64,
    /// Two-photon detuning of the spin-flip channel.
    pub delta2: f64,
    /// Detuning of the purely atomic cross channel; always `delta1 - delta2`.
    pub delta3: f64,
    /// Photon-induced Stark rate of branch a: g_a²/δ_c31.
    pub stark_a: f64,
    /// Photon-induced Stark rate of branch b: g_b²/δ_c42.
    pub stark_b: f64,
    pub hop_a: f64,
    pub hop_b: f64,
}

/// Two-photon detunings after absorbing the photon-induced Stark shifts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedDetunings {
    pub delta_a1: f64,
    pub delta_a2: f64,
    pub delta_b1: f64,
    pub delta_b2: f64,
}

/// Effective spin-chain model: transverse (`j1`, `j2`) and longitudinal
/// (`lambda1`, `lambda2`) couplings at distance one and two, a per-site
/// longitudinal field `h`, and the boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSpinModel {
    pub n_sites: usize,
    /// Nearest-neighbor transverse (flip-flop) coupling.
    pub j1: f64,
    /// Next-nearest-neighbor transverse coupling.
    pub j2: f64,
    /// Nearest-neighbor longitudinal (zz) coupling.
    pub lambda1: f64,
    /// Next-nearest-neighbor longitudinal coupling.
    pub lambda2: f64,
    /// Per-site longitudinal field; zero by default (external compensation
    /// of the residual light shifts is assumed).
    pub h: Vec<f64>,
    pub periodic: bool,
}

impl EffectiveSpinModel {
    /// Uniform-field constructor used by most call sites.
    pub fn new(n_sites: usize, j1: f64, j2: f64, lambda1: f64, lambda2: f64) -> Self {
        Self {
            n_sites,
            j1,
            j2,
            lambda1,
            lambda2,
            h: vec![0.0; n_sites],
            periodic: true,
        }
    }

    pub fn with_uniform_field(mut self, h: f64) -> Self {
        self.h = vec![h; self.n_sites];
        self
    }

    pub fn with_boundary(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    /// Largest coupling magnitude — the "slow" energy scale of the model.
    pub fn coupling_scale(&self) -> f64 {
        self.j1
            .abs()
            .max(self.j2.abs())
            .max(self.lambda1.abs())
            .max(self.lambda2.abs())
    }
}

/// One separation-of-scales inequality `|left| ≥ factor · |right|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    /// The fast scale (detuning side).
    pub left: f64,
    /// The slow scale it must dominate.
    pub right: f64,
    /// `|left| / |right|`; infinite when the slow scale vanishes.
    pub margin: f64,
    pub pass: bool,
}

impl ConstraintCheck {
    fn ratio(left: f64, right: f64) -> f64 {
        if right.abs() == 0.0 {
            f64::INFINITY
        } else {
            left.abs() / right.abs()
        }
    }

    fn new(name: impl Into<String>, left: f64, right: f64, factor: f64) -> Self {
        let margin = Self::ratio(left, right);
        Self {
            name: name.into(),
            left,
            right,
            margin,
            pass: margin >= factor,
        }
    }

    /// Strict dominance: used for the "much greater than" dissipation
    /// inequalities, where a margin of exactly one is a failure.
    fn strict(name: impl Into<String>, left: f64, right: f64) -> Self {
        let margin = Self::ratio(left, right);
        Self {
            name: name.into(),
            left,
            right,
            margin,
            pass: margin > 1.0,
        }
    }
}

/// Result of [`validity_check`]: one entry per inequality plus a summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub hierarchy_factor: f64,
    pub checks: Vec<ConstraintCheck>,
    pub min_margin: f64,
    pub pass: bool,
}

impl ValidityReport {
    fn from_checks(hierarchy_factor: f64, checks: Vec<ConstraintCheck>) -> Self {
        let min_margin = checks
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min);
        let pass = checks.iter().all(|c| c.pass);
        Self {
            hierarchy_factor,
            checks,
            min_margin,
            pass,
        }
    }
}

/// Result of [`decoherence_check`]: effective dissipation rates compared
/// against the photon-mediated coupling scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceReport {
    /// Effective emitter decay rate (Ω/Δ)²·Γ_E.
    pub atomic_rate: f64,
    /// Effective cavity decay rate (Ωg/(Δδ))²·Γ_C.
    pub cavity_rate: f64,
    /// Magnitude of the photon-mediated spin couplings, 4J²Ω²g²/(Δ²δ³).
    pub coupling_scale: f64,
    /// Cooperativity g²/(Γ_C·Γ_E).
    pub cooperativity: f64,
    /// Coupling-to-dissipation ratio g/Γ_E.
    pub coupling_to_dissipation: f64,
    pub checks: Vec<ConstraintCheck>,
    pub pass: bool,
}

fn nonzero(value: f64, which: &'static str) -> Result<f64> {
    if value == 0.0 {
        return Err(Error::ZeroDetuning { which });
    }
    Ok(value)
}

/// Derives the rotating-frame couplings and two-photon detunings from the
/// microscopic parameters.
///
/// The two Raman branches must agree on the two-photon detunings
/// (`δ_c31 − Δ_l31 = δ_c42 − Δ_l42` and `δ_c31 − Δ_l32 = δ_c42 − Δ_l41`),
/// otherwise the rotating frame of the array Hamiltonian is ill-defined.
pub fn reduce_params(micro: &MicroParams) -> Result<ReducedParams> {
    let d_c31 = nonzero(micro.delta_c31, "cavity detuning delta_c31")?;
    let d_c42 = nonzero(micro.delta_c42, "cavity detuning delta_c42")?;
    let d_l31 = nonzero(micro.delta_l31, "laser detuning delta_l31")?;
    let d_l32 = nonzero(micro.delta_l32, "laser detuning delta_l32")?;
    let d_l41 = nonzero(micro.delta_l41, "laser detuning delta_l41")?;
    let d_l42 = nonzero(micro.delta_l42, "laser detuning delta_l42")?;

    let d1_a = d_c31 - d_l31;
    let d1_b = d_c42 - d_l42;
    let d2_a = d_c31 - d_l32;
    let d2_b = d_c42 - d_l41;
    let scale = d_c31
        .abs()
        .max(d_c42.abs())
        .max(d_l31.abs())
        .max(d_l42.abs())
        .max(d_l32.abs())
        .max(d_l41.abs())
        .max(1.0);
    if (d1_a - d1_b).abs() > 1e-9 * scale || (d2_a - d2_b).abs() > 1e-9 * scale {
        return Err(Error::InconsistentDetunings {
            d1_a,
            d1_b,
            d2_a,
            d2_b,
        });
    }

    Ok(ReducedParams {
        n_sites: micro.n_sites,
        a1: micro.omega1 * micro.g_a / 2.0 * (1.0 / d_l31 + 1.0 / d_c31),
        a2: micro.omega3 * micro.g_a / 2.0 * (1.0 / d_l32 + 1.0 / d_c31),
        a3: micro.omega1 * micro.omega3 / 2.0 * (1.0 / d_l31 + 1.0 / d_l32),
        b1: micro.omega2 * micro.g_b / 2.0 * (1.0 / d_l42 + 1.0 / d_c42),
        b2: micro.omega4 * micro.g_b / 2.0 * (1.0 / d_l41 + 1.0 / d_c42),
        b3: micro.omega2 * micro.omega4 / 2.0 * (1.0 / d_l41 + 1.0 / d_l42),
        delta1: d1_a,
        delta2: d2_a,
        delta3: d1_a - d2_a,
        stark_a: micro.g_a * micro.g_a / d_c31,
        stark_b: micro.g_b * micro.g_b / d_c42,
        hop_a: micro.hop_a,
        hop_b: micro.hop_b,
    })
}

/// Two-photon detunings with the photon-induced Stark rates absorbed:
/// δ_{a,i} = δ_i + g_a²/δ_c31 and δ_{b,i} = δ_i + g_b²/δ_c42.
pub fn shifted_detunings(reduced: &ReducedParams) -> ShiftedDetunings {
    ShiftedDetunings {
        delta_a1: reduced.delta1 + reduced.stark_a,
        delta_a2: reduced.delta2 + reduced.stark_a,
        delta_b1: reduced.delta1 + reduced.stark_b,
        delta_b2: reduced.delta2 + reduced.stark_b,
    }
}

/// Closed-form second-order spin couplings of the infinite (or large even)
/// ring:
///
/// ```text
/// J1 = 2 (hop_a·A2²/δ_a2² − hop_b·B2²/δ_b2²)
/// J2 = 2 (hop_a²·A2²/δ_a2³ + hop_b²·B2²/δ_b2³)
/// λ1 = 2 (hop_a·A1²/δ_a1² − hop_b·B1²/δ_b1²)
/// λ2 = 2 (hop_a²·A1²/δ_a1³ + hop_b²·B1²/δ_b1³)
/// ```
///
/// Distance-one couplings are differences of the two branch contributions
/// (the staggered drive phase flips the sign of the branch-b term at odd
/// distance), distance-two couplings are sums; this is what lets the
/// next-nearest-neighbor couplings dominate the nearest-neighbor ones.
/// The per-site field is set to zero: residual light shifts are assumed
/// to be compensated externally (see [`stark_field_estimate`]).
pub fn effective_couplings(reduced: &ReducedParams) -> Result<EffectiveSpinModel> {
    let shifted = shifted_detunings(reduced);
    let d_a1 = nonzero(shifted.delta_a1, "shifted detuning delta_a1")?;
    let d_a2 = nonzero(shifted.delta_a2, "shifted detuning delta_a2")?;
    let d_b1 = nonzero(shifted.delta_b1, "shifted detuning delta_b1")?;
    let d_b2 = nonzero(shifted.delta_b2, "shifted detuning delta_b2")?;

    let (a1s, a2s) = (reduced.a1 * reduced.a1, reduced.a2 * reduced.a2);
    let (b1s, b2s) = (reduced.b1 * reduced.b1, reduced.b2 * reduced.b2);
    let (ja, jb) = (reduced.hop_a, reduced.hop_b);

    Ok(EffectiveSpinModel::new(
        reduced.n_sites,
        2.0 * (ja * a2s / (d_a2 * d_a2) - jb * b2s / (d_b2 * d_b2)),
        2.0 * (ja * ja * a2s / (d_a2 * d_a2 * d_a2) + jb * jb * b2s / (d_b2 * d_b2 * d_b2)),
        2.0 * (ja * a1s / (d_a1 * d_a1) - jb * b1s / (d_b1 * d_b1)),
        2.0 * (ja * ja * a1s / (d_a1 * d_a1 * d_a1) + jb * jb * b1s / (d_b1 * d_b1 * d_b1)),
    ))
}

/// Uniform longitudinal field generated at second order by the purely
/// atomic cross channel: 2(B3² − A3²)/δ3 per site.
///
/// This is the only residual-field contribution derivable from the model
/// as stated; callers may add it into `h` or assume it is compensated by
/// an external field.
pub fn stark_field_estimate(reduced: &ReducedParams) -> Result<f64> {
    let d3 = nonzero(reduced.delta3, "cross-channel detuning delta3")?;
    Ok(2.0 * (reduced.b3 * reduced.b3 - reduced.a3 * reduced.a3) / d3)
}

/// Checks the separation-of-scales inequalities that underpin the
/// second-order elimination, each as `fast ≥ hierarchy_factor · slow`.
///
/// Three tiers of inequality appear:
///
/// * the shifted two-photon detunings must dominate every first-order
///   rate (photon couplings, hoppings, Stark rates);
/// * the cross-channel detuning δ3 must dominate the cross couplings
///   A3, B3 that rotate at it;
/// * the channel separations |δ_•1 − δ_•2| must dominate the
///   *second-order* spin couplings — the interference terms they
///   suppress are themselves second-order small, so comparing them
///   against first-order rates would be overly pessimistic.
///
/// When `micro` is supplied, the single-photon-level inequalities
/// (laser and cavity detunings versus g and Ω) are appended.
pub fn validity_check(
    reduced: &ReducedParams,
    micro: Option<&MicroParams>,
    hierarchy_factor: f64,
) -> ValidityReport {
    let shifted = shifted_detunings(reduced);
    let first_order = reduced
        .a1
        .abs()
        .max(reduced.a2.abs())
        .max(reduced.b1.abs())
        .max(reduced.b2.abs())
        .max(reduced.hop_a.abs())
        .max(reduced.hop_b.abs())
        .max(reduced.stark_a.abs())
        .max(reduced.stark_b.abs());
    let cross = reduced.a3.abs().max(reduced.b3.abs());
    let second_order = effective_couplings(reduced)
        .map(|m| m.coupling_scale())
        .unwrap_or(f64::INFINITY);
    // A vanishing shifted detuning already fails its first-tier check with
    // margin 0, so the infinite fallback above cannot mask a bad input.

    let f = hierarchy_factor;
    let mut checks = vec![
        ConstraintCheck::new(
            "|delta_a1| >> first-order rates",
            shifted.delta_a1,
            first_order,
            f,
        ),
        ConstraintCheck::new(
            "|delta_a2| >> first-order rates",
            shifted.delta_a2,
            first_order,
            f,
        ),
        ConstraintCheck::new(
            "|delta_b1| >> first-order rates",
            shifted.delta_b1,
            first_order,
            f,
        ),
        ConstraintCheck::new(
            "|delta_b2| >> first-order rates",
            shifted.delta_b2,
            first_order,
            f,
        ),
        ConstraintCheck::new("|delta3| >> cross couplings", reduced.delta3, cross, f),
        ConstraintCheck::new(
            "|delta_a1 - delta_a2| >> spin couplings",
            shifted.delta_a1 - shifted.delta_a2,
            second_order,
            f,
        ),
        ConstraintCheck::new(
            "|delta_b1 - delta_b2| >> spin couplings",
            shifted.delta_b1 - shifted.delta_b2,
            second_order,
            f,
        ),
    ];

    if let Some(m) = micro {
        let one_photon = m
            .g_a
            .abs()
            .max(m.g_b.abs())
            .max(m.omega1.abs())
            .max(m.omega2.abs())
            .max(m.omega3.abs())
            .max(m.omega4.abs());
        for (name, value) in [
            ("|delta_c31| >> g, Omega", m.delta_c31),
            ("|delta_c42| >> g, Omega", m.delta_c42),
            ("|delta_l31| >> g, Omega", m.delta_l31),
            ("|delta_l32| >> g, Omega", m.delta_l32),
            ("|delta_l41| >> g, Omega", m.delta_l41),
            ("|delta_l42| >> g, Omega", m.delta_l42),
        ] {
            checks.push(ConstraintCheck::new(name, value, one_photon, f));
        }
    }

    ValidityReport::from_checks(hierarchy_factor, checks)
}

/// Compares the effective dissipation rates against the photon-mediated
/// coupling scale, using the worst-case combination Ω = max Ω_i,
/// g = max(g_a, g_b), J = max hopping, Δ = min laser detuning,
/// δ = min two-photon detuning.
///
/// `gamma_e` is the linewidth of the emitter upper levels, `gamma_c` the
/// cavity field decay rate.
pub fn decoherence_check(micro: &MicroParams, gamma_e: f64, gamma_c: f64) -> DecoherenceReport {
    let omega = micro
        .omega1
        .abs()
        .max(micro.omega2.abs())
        .max(micro.omega3.abs())
        .max(micro.omega4.abs());
    let g = micro.g_a.abs().max(micro.g_b.abs());
    let j = micro.hop_a.abs().max(micro.hop_b.abs());
    let delta_laser = micro
        .delta_l31
        .abs()
        .min(micro.delta_l32.abs())
        .min(micro.delta_l41.abs())
        .min(micro.delta_l42.abs());
    let delta_two_photon = (micro.delta_c31 - micro.delta_l31)
        .abs()
        .min((micro.delta_c31 - micro.delta_l32).abs())
        .min((micro.delta_c42 - micro.delta_l42).abs())
        .min((micro.delta_c42 - micro.delta_l41).abs());

    let pop = omega / delta_laser;
    let atomic_rate = pop * pop * gamma_e;
    let cav = omega * g / (delta_laser * delta_two_photon);
    let cavity_rate = cav * cav * gamma_c;
    let d3 = delta_two_photon.powi(3);
    let coupling_scale = 4.0 * j * j * omega * omega * g * g / (delta_laser * delta_laser * d3);

    let checks = vec![
        ConstraintCheck::strict(
            "4 g^2 J^2 / delta^3 >> Gamma_E",
            4.0 * g * g * j * j / d3,
            gamma_e,
        ),
        ConstraintCheck::strict(
            "4 J^2 / delta >> Gamma_C",
            4.0 * j * j / delta_two_photon,
            gamma_c,
        ),
        ConstraintCheck::strict("J >> Gamma_C", j, gamma_c),
    ];
    let pass = checks.iter().all(|c| c.pass);

    DecoherenceReport {
        atomic_rate,
        cavity_rate,
        coupling_scale,
        cooperativity: g * g / (gamma_c * gamma_e),
        coupling_to_dissipation: g / gamma_e,
        checks,
        pass,
    }
}
