//! State propagation under time-dependent and time-independent
//! Hamiltonians, plus trajectory observables.
//!
//! The default integrator samples the Hamiltonian at the midpoint of each
//! step and applies the exact exponential of that frozen matrix through a
//! Lanczos (Krylov) expansion. The scheme is unitary up to the Krylov
//! truncation, so it stays stable for the rapidly oscillating drive
//! phases where explicit schemes would need absurdly small steps; an
//! explicit Runge–Kutta integrator is kept as an independent cross-check.
//! The state is never renormalized — norm drift is the primary
//! integrator-health diagnostic and aborts the run when it exceeds the
//! configured tolerance.

use crate::error::{Error, Result};
use crate::hamiltonians::FullHamiltonian;
use crate::hilbert::{BasisDescriptor, QuantumState, SparseOperator};
use crate::C64;

/// Per-step truncation target of the Krylov exponential.
const KRYLOV_TOL: f64 = 1e-10;
/// Hard cap on the Krylov subspace dimension per step.
const KRYLOV_MAX: usize = 64;
/// Relative hermiticity tolerance checked once before propagating.
const HERMITICITY_REL_TOL: f64 = 1e-12;

/// Anything the propagator can treat as a Hamiltonian: a matrix-free
/// action `y = H(t)·x` plus the two scales (fastest drive phase, norm
/// bound) that fix the integration step.
pub trait Hamiltonian {
    fn basis(&self) -> BasisDescriptor;
    /// Writes `H(t)·x` into `y` (overwriting it).
    fn apply_into(&self, t: f64, x: &[C64], y: &mut [C64]);
    /// Fastest oscillation rate of the coefficients; 0 for static
    /// operators. The step must resolve this frequency.
    fn max_phase_rate(&self) -> f64;
    /// Time-independent upper bound on the operator norm.
    fn norm_bound(&self) -> f64;
    /// Hermiticity defect at the initial time, in absolute norm.
    fn initial_hermiticity_residual(&self) -> f64;
}

impl Hamiltonian for SparseOperator {
    fn basis(&self) -> BasisDescriptor {
        SparseOperator::basis(self)
    }
    fn apply_into(&self, _t: f64, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y);
    }
    fn max_phase_rate(&self) -> f64 {
        0.0
    }
    fn norm_bound(&self) -> f64 {
        self.norm_inf()
    }
    fn initial_hermiticity_residual(&self) -> f64 {
        SparseOperator::hermiticity_residual(self)
    }
}

impl Hamiltonian for FullHamiltonian {
    fn basis(&self) -> BasisDescriptor {
        FullHamiltonian::basis(self)
    }
    fn apply_into(&self, t: f64, x: &[C64], y: &mut [C64]) {
        FullHamiltonian::apply_into(self, t, x, y);
    }
    fn max_phase_rate(&self) -> f64 {
        FullHamiltonian::max_phase_rate(self)
    }
    fn norm_bound(&self) -> f64 {
        self.norm_inf_bound()
    }
    fn initial_hermiticity_residual(&self) -> f64 {
        self.at(0.0).hermiticity_residual()
    }
}

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exponential of the midpoint-sampled Hamiltonian on each step,
    /// applied through a truncated Lanczos expansion (default).
    PiecewiseExponentialMidpoint,
    /// Classic explicit fourth-order Runge–Kutta (cross-check only; not
    /// unitary, so its norm drift grows with the step).
    ExplicitRk4,
}

/// Propagation controls.
///
/// With `step = None` the step is derived from the Hamiltonian itself:
/// `phase_resolution_factor / max_phase_rate` when the coefficients
/// oscillate, else `0.01 / norm_bound` — the two regimes differ by
/// orders of magnitude because the drive phases are far faster than the
/// effective spin dynamics.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Step in ns; `None` picks the default for the given Hamiltonian.
    pub step: Option<f64>,
    /// Record observables every this many steps (the initial and final
    /// points are always recorded).
    pub sample_every: usize,
    /// Abort when |norm − 1| exceeds this at a sample point.
    pub max_norm_drift: f64,
    /// Maximum phase advance per step, in radians, of the fastest
    /// oscillating coefficient.
    pub phase_resolution_factor: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            method: Method::PiecewiseExponentialMidpoint,
            step: None,
            sample_every: 1,
            max_norm_drift: 1e-6,
            phase_resolution_factor: 0.02,
        }
    }
}

/// Sampled trajectory of the standard observables.
///
/// Expectation values are normalized by the instantaneous ⟨ψ|ψ⟩ so that
/// probabilities remain probabilities even in the presence of integrator
/// norm drift; the drift itself is reported separately in `norms`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeSeries {
    pub n_sites: usize,
    /// Sample times in ns.
    pub times: Vec<f64>,
    /// `p1[sample][site]`: occupation probability of the lower emitter
    /// level at each site.
    pub p1: Vec<Vec<f64>>,
    /// `na[sample][site]`: mean photon number of mode a at each site.
    pub na: Vec<Vec<f64>>,
    /// `nb[sample][site]`: mean photon number of mode b at each site.
    pub nb: Vec<Vec<f64>>,
    /// State norm at each sample (1 up to integrator drift).
    pub norms: Vec<f64>,
    /// Total magnetization ⟨Σ_j Sᶻ_j⟩ at each sample.
    pub mz: Vec<f64>,
}

impl TimeSeries {
    fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            times: Vec::new(),
            p1: Vec::new(),
            na: Vec::new(),
            nb: Vec::new(),
            norms: Vec::new(),
            mz: Vec::new(),
        }
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct SampleRow {
    p1: Vec<f64>,
    na: Vec<f64>,
    nb: Vec<f64>,
    mz: f64,
    norm: f64,
}

/// Single pass over the amplitudes collecting every standard observable.
fn sample_row(basis: &BasisDescriptor, amps: &[C64]) -> SampleRow {
    let n = basis.n_sites();
    let mut p1 = vec![0.0; n];
    let mut na = vec![0.0; n];
    let mut nb = vec![0.0; n];
    let mut mz = 0.0;
    let mut norm_sq = 0.0;
    for (idx, amp) in amps.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        norm_sq += w;
        for site in 0..n {
            if basis.emitter_digit(idx, site) == 0 {
                p1[site] += w;
                mz -= 0.5 * w;
            } else {
                mz += 0.5 * w;
            }
            na[site] += w * basis.occ_a(idx, site) as f64;
            nb[site] += w * basis.occ_b(idx, site) as f64;
        }
    }
    if norm_sq > 0.0 {
        for site in 0..n {
            p1[site] /= norm_sq;
            na[site] /= norm_sq;
            nb[site] /= norm_sq;
        }
        mz /= norm_sq;
    }
    SampleRow {
        p1,
        na,
        nb,
        mz,
        norm: norm_sq.sqrt(),
    }
}

/// Occupation probability of the lower emitter level at `site`,
/// normalized by ⟨ψ|ψ⟩.
pub fn occupation(state: &QuantumState, site: usize) -> Result<f64> {
    let basis = state.basis();
    if site >= basis.n_sites() {
        return Err(Error::SiteOutOfRange {
            site,
            n_sites: basis.n_sites(),
        });
    }
    Ok(sample_row(&basis, state.amps()).p1[site])
}

/// Mean photon numbers (⟨a†a⟩ per site, ⟨b†b⟩ per site).
pub fn photon_numbers(state: &QuantumState) -> (Vec<f64>, Vec<f64>) {
    let row = sample_row(&state.basis(), state.amps());
    (row.na, row.nb)
}

/// Total magnetization ⟨Σ_j Sᶻ_j⟩.
pub fn magnetization(state: &QuantumState) -> f64 {
    sample_row(&state.basis(), state.amps()).mz
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(c: C64, x: &[C64], y: &mut [C64]) {
    for (xi, yi) in x.iter().zip(y.iter_mut()) {
        *yi += c * *xi;
    }
}

/// First column of `exp(−i·dt·T)` for the real symmetric tridiagonal
/// matrix with diagonal `alphas` and off-diagonal `betas`.
fn tridiag_exp_first_column(alphas: &[f64], betas: &[f64], dt: f64) -> Vec<C64> {
    let m = alphas.len();
    let mut tm = nalgebra::DMatrix::<f64>::zeros(m, m);
    for (i, &a) in alphas.iter().enumerate() {
        tm[(i, i)] = a;
    }
    for (i, &b) in betas.iter().take(m.saturating_sub(1)).enumerate() {
        tm[(i, i + 1)] = b;
        tm[(i + 1, i)] = b;
    }
    let eig = tm.symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut u = vec![C64::new(0.0, 0.0); m];
    for l in 0..m {
        let phase = C64::from_polar(1.0, -eig.eigenvalues[l] * dt);
        let w = phase * q[(0, l)];
        for (k, uk) in u.iter_mut().enumerate() {
            *uk += q[(k, l)] * w;
        }
    }
    u
}

/// Reusable buffers for the Lanczos stepper.
struct KrylovWorkspace {
    vectors: Vec<Vec<C64>>,
    w: Vec<C64>,
}

impl KrylovWorkspace {
    fn new(dim: usize) -> Self {
        Self {
            vectors: Vec::new(),
            w: vec![C64::new(0.0, 0.0); dim],
        }
    }

    fn ensure(&mut self, count: usize, dim: usize) {
        while self.vectors.len() < count {
            self.vectors.push(vec![C64::new(0.0, 0.0); dim]);
        }
    }
}

/// ψ ← exp(−i·dt·H(t_mid))·ψ via Lanczos with full reorthogonalization.
/// The subspace grows until the standard residual estimate
/// β_m·|[exp(−i·dt·T)]_{m,1}| falls below the truncation target.
fn krylov_exp_step<H: Hamiltonian>(
    h: &H,
    t_mid: f64,
    dt: f64,
    psi: &mut [C64],
    ws: &mut KrylovWorkspace,
) -> Result<()> {
    let dim = psi.len();
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return Err(Error::NoConvergence {
            what: "krylov propagator step",
            detail: "state collapsed to zero norm".into(),
        });
    }
    let breakdown = 1e-14 * h.norm_bound().max(1.0);

    ws.ensure(1, dim);
    for (vi, pi) in ws.vectors[0].iter_mut().zip(psi.iter()) {
        *vi = *pi / beta0;
    }

    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut column: Vec<C64>;
    let mut m = 0usize;
    loop {
        // w = H v_m, then the three-term recurrence and a full
        // reorthogonalization sweep
        h.apply_into(t_mid, &ws.vectors[m], &mut ws.w);
        let alpha = dot(&ws.vectors[m], &ws.w).re;
        alphas.push(alpha);
        axpy(C64::new(-alpha, 0.0), &ws.vectors[m], &mut ws.w);
        if m > 0 {
            axpy(C64::new(-betas[m - 1], 0.0), &ws.vectors[m - 1], &mut ws.w);
        }
        for i in 0..=m {
            let c = dot(&ws.vectors[i], &ws.w);
            axpy(-c, &ws.vectors[i], &mut ws.w);
        }
        let beta = norm(&ws.w);

        column = tridiag_exp_first_column(&alphas, &betas, dt);
        let estimate = beta * column[m].norm();
        if estimate <= KRYLOV_TOL || beta <= breakdown {
            break;
        }
        if m + 1 >= KRYLOV_MAX.min(dim) {
            return Err(Error::NoConvergence {
                what: "krylov propagator step",
                detail: format!(
                    "residual estimate {estimate:.3e} after {} vectors; reduce the step",
                    m + 1
                ),
            });
        }
        betas.push(beta);
        m += 1;
        ws.ensure(m + 1, dim);
        let (vectors, w) = (&mut ws.vectors, &ws.w);
        for (vi, wi) in vectors[m].iter_mut().zip(w.iter()) {
            *vi = *wi / beta;
        }
    }

    psi.fill(C64::new(0.0, 0.0));
    for (k, u) in column.iter().enumerate() {
        axpy(*u * beta0, &ws.vectors[k], psi);
    }
    Ok(())
}

struct Rk4Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
    hy: Vec<C64>,
}

impl Rk4Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            hy: z,
        }
    }
}

/// One classic Runge–Kutta step of dψ/dt = −i·H(t)·ψ.
fn rk4_step<H: Hamiltonian>(h: &H, t: f64, dt: f64, psi: &mut [C64], ws: &mut Rk4Workspace) {
    let minus_i = C64::new(0.0, -1.0);
    let half = 0.5 * dt;

    h.apply_into(t, psi, &mut ws.hy);
    for (k, hy) in ws.k1.iter_mut().zip(ws.hy.iter()) {
        *k = minus_i * *hy;
    }

    ws.stage.copy_from_slice(psi);
    axpy(C64::new(half, 0.0), &ws.k1, &mut ws.stage);
    h.apply_into(t + half, &ws.stage, &mut ws.hy);
    for (k, hy) in ws.k2.iter_mut().zip(ws.hy.iter()) {
        *k = minus_i * *hy;
    }

    ws.stage.copy_from_slice(psi);
    axpy(C64::new(half, 0.0), &ws.k2, &mut ws.stage);
    h.apply_into(t + half, &ws.stage, &mut ws.hy);
    for (k, hy) in ws.k3.iter_mut().zip(ws.hy.iter()) {
        *k = minus_i * *hy;
    }

    ws.stage.copy_from_slice(psi);
    axpy(C64::new(dt, 0.0), &ws.k3, &mut ws.stage);
    h.apply_into(t + dt, &ws.stage, &mut ws.hy);
    for (k, hy) in ws.k4.iter_mut().zip(ws.hy.iter()) {
        *k = minus_i * *hy;
    }

    let sixth = dt / 6.0;
    for (i, p) in psi.iter_mut().enumerate() {
        *p += sixth * (ws.k1[i] + 2.0 * (ws.k2[i] + ws.k3[i]) + ws.k4[i]);
    }
}

enum Stepper {
    Krylov(KrylovWorkspace),
    Rk4(Rk4Workspace),
}

/// Resolves the configured or default step against the phase-resolution
/// bound and returns (number of steps, actual step).
pub(crate) fn resolve_grid<H: Hamiltonian>(
    h: &H,
    t_final: f64,
    cfg: &PropagatorConfig,
) -> Result<(usize, f64)> {
    let rate = h.max_phase_rate();
    let bound = if rate > 0.0 {
        cfg.phase_resolution_factor / rate
    } else {
        f64::INFINITY
    };
    let step = match cfg.step {
        Some(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NonPositive {
                    what: "step",
                    got: s,
                });
            }
            if s > bound * (1.0 + 1e-12) {
                return Err(Error::StepInvalid {
                    step: s,
                    bound,
                    why: "step must resolve the fastest drive phase".into(),
                });
            }
            s
        }
        None => {
            if rate > 0.0 {
                bound
            } else {
                let scale = h.norm_bound();
                if scale > 0.0 {
                    0.01 / scale
                } else {
                    // free evolution: a single step is exact
                    t_final
                }
            }
        }
    };
    let n_steps = (t_final / step).ceil().max(1.0) as usize;
    Ok((n_steps, t_final / n_steps as f64))
}

/// Propagates `psi0` from t = 0 to `t_final`, returning the sampled
/// trajectory and the (un-renormalized) final state.
pub fn propagate_with_state<H: Hamiltonian>(
    h: &H,
    psi0: &QuantumState,
    t_final: f64,
    cfg: &PropagatorConfig,
) -> Result<(TimeSeries, QuantumState)> {
    let basis = h.basis();
    if psi0.basis() != basis {
        return Err(Error::BasisMismatch {
            left: psi0.basis(),
            right: basis,
        });
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::NonPositive {
            what: "t_final",
            got: t_final,
        });
    }
    if cfg.sample_every == 0 {
        return Err(Error::NonPositive {
            what: "sample_every",
            got: 0.0,
        });
    }
    if cfg.phase_resolution_factor <= 0.0 || cfg.phase_resolution_factor.is_nan() {
        return Err(Error::NonPositive {
            what: "phase_resolution_factor",
            got: cfg.phase_resolution_factor,
        });
    }
    let residual = h.initial_hermiticity_residual();
    if residual > HERMITICITY_REL_TOL * h.norm_bound().max(f64::MIN_POSITIVE) {
        return Err(Error::NonHermitian { residual });
    }

    let (n_steps, dt) = resolve_grid(h, t_final, cfg)?;
    let mut amps: Vec<C64> = psi0.amps().to_vec();
    let mut series = TimeSeries::new(basis.n_sites());

    let record = |series: &mut TimeSeries, t: f64, amps: &[C64]| -> Result<()> {
        let row = sample_row(&basis, amps);
        let drift = (row.norm - 1.0).abs();
        if drift > cfg.max_norm_drift {
            return Err(Error::NormDrift {
                t,
                drift,
                tolerance: cfg.max_norm_drift,
            });
        }
        series.times.push(t);
        series.p1.push(row.p1);
        series.na.push(row.na);
        series.nb.push(row.nb);
        series.norms.push(row.norm);
        series.mz.push(row.mz);
        Ok(())
    };

    record(&mut series, 0.0, &amps)?;
    let mut stepper = match cfg.method {
        Method::PiecewiseExponentialMidpoint => Stepper::Krylov(KrylovWorkspace::new(basis.dim())),
        Method::ExplicitRk4 => Stepper::Rk4(Rk4Workspace::new(basis.dim())),
    };
    for k in 1..=n_steps {
        let t0 = (k - 1) as f64 * dt;
        match &mut stepper {
            Stepper::Krylov(ws) => krylov_exp_step(h, t0 + 0.5 * dt, dt, &mut amps, ws)?,
            Stepper::Rk4(ws) => rk4_step(h, t0, dt, &mut amps, ws),
        }
        if k % cfg.sample_every == 0 || k == n_steps {
            record(&mut series, k as f64 * dt, &amps)?;
        }
    }

    let final_state = QuantumState::from_raw(basis, amps);
    Ok((series, final_state))
}

/// Propagates `psi0` from t = 0 to `t_final` and returns the sampled
/// trajectory; see [`propagate_with_state`] to keep the final state too.
pub fn propagate<H: Hamiltonian>(
    h: &H,
    psi0: &QuantumState,
    t_final: f64,
    cfg: &PropagatorConfig,
) -> Result<TimeSeries> {
    propagate_with_state(h, psi0, t_final, cfg).map(|(series, _)| series)
}
