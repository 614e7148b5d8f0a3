//! Higher-level studies built on the simulator: full-vs-effective model
//! comparisons, coupling-cancellation scans, expansion-error tables, and
//! ground-state diagnostics of the effective chain.

use crate::error::{Error, Result};
use crate::evolve::{propagate, resolve_grid, Hamiltonian, PropagatorConfig, TimeSeries};
use crate::hamiltonians::{
    effective_hamiltonian, exact_second_order, FullHamiltonian, FullHamiltonianSpec,
};
use crate::hilbert::{BasisDescriptor, QuantumState, SiteFactor, SparseOperator};
use crate::params::{effective_couplings, validity_check, ReducedParams, ValidityReport};

/// Below this scale-hierarchy margin a comparison run is refused: the
/// effective model is meaningless and the trajectories diverge for
/// reasons that have nothing to do with implementation quality.
pub const HIERARCHY_HARD_FLOOR: f64 = 2.0;
/// Between the hard floor and this margin the run proceeds with a
/// warning attached to the result.
pub const HIERARCHY_WARN_FLOOR: f64 = 5.0;

/// Sector blocks up to this dimension are diagonalized densely; larger
/// ones go through the Lanczos path.
const DENSE_SECTOR_MAX: usize = 512;
/// Relative residual target for Lanczos eigenpairs.
const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_MAX_ITER: usize = 500;
/// Two lowest energies closer than this (relative) count as degenerate.
const DEGENERACY_REL_GAP: f64 = 1e-8;

/// Everything needed to run the same physical scenario through both the
/// cavity-array model and the effective spin chain.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CompareSpec {
    pub params: ReducedParams,
    /// Initial spin pattern over {1, 2}, e.g. "1222"; photons start in
    /// vacuum.
    pub initial_pattern: String,
    pub t_final: f64,
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub periodic: bool,
    pub include_cross_term: bool,
    pub include_local_terms: bool,
    pub full_config: PropagatorConfig,
    pub effective_config: PropagatorConfig,
    /// Approximate number of trajectory samples kept per model; the
    /// sampling strides in the configs are overridden to hit it (0 keeps
    /// the strides as given).
    pub sample_target: usize,
}

impl CompareSpec {
    pub fn new(params: ReducedParams, initial_pattern: &str, t_final: f64) -> Self {
        Self {
            params,
            initial_pattern: initial_pattern.to_string(),
            t_final,
            n_max_a: 1,
            n_max_b: 1,
            periodic: true,
            include_cross_term: true,
            include_local_terms: true,
            full_config: PropagatorConfig::default(),
            effective_config: PropagatorConfig::default(),
            sample_target: 2000,
        }
    }
}

/// Outcome of a full-vs-effective comparison run.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ComparisonResult {
    pub full: TimeSeries,
    pub effective: TimeSeries,
    /// Per-site maximum of |p1_full − p1_effective| over the run.
    pub max_dev_per_site: Vec<f64>,
    pub max_dev: f64,
    /// Root-mean-square of the same deviations over all sites and times.
    pub rms_dev: f64,
    /// Largest single-mode mean photon number ⟨n⟩ seen anywhere in the
    /// full-model run (max over time, sites, and both mode families) —
    /// the "photons stay virtual" diagnostic.  Second-order response
    /// theory bounds the peak by 4·(coupling/detuning)² per mode.
    pub max_mean_photon: f64,
    pub validity: ValidityReport,
    pub warnings: Vec<String>,
}

/// Adjusts a propagation config so a run of `t_final` keeps roughly
/// `target` samples: dense trajectories are strided down, and sparse
/// ones (a slow effective model may need only a handful of steps) are
/// forced onto a finer grid so the comparison has points to compare.
fn with_auto_sampling<H: Hamiltonian>(
    h: &H,
    t_final: f64,
    cfg: &PropagatorConfig,
    target: usize,
) -> Result<PropagatorConfig> {
    let mut out = cfg.clone();
    if target == 0 {
        return Ok(out);
    }
    let (n_steps, _) = resolve_grid(h, t_final, cfg)?;
    if n_steps < target && cfg.step.is_none() {
        out.step = Some(t_final / target as f64);
        out.sample_every = 1;
    } else {
        out.sample_every = (n_steps / target).max(1);
    }
    Ok(out)
}

/// Linear interpolation of one observable column at time `t`.
fn interp_column(times: &[f64], values: &[Vec<f64>], site: usize, t: f64) -> f64 {
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => values[i][site],
        Err(0) => values[0][site],
        Err(i) if i >= times.len() => values[times.len() - 1][site],
        Err(i) => {
            let (t0, t1) = (times[i - 1], times[i]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            values[i - 1][site] * (1.0 - w) + values[i][site] * w
        }
    }
}

/// Runs the same initial spin pattern through the cavity-array model and
/// the effective spin chain and measures how far the occupation
/// trajectories drift apart.
///
/// Runs are refused outright when the scale-hierarchy margin is below 2
/// and carry a warning below 5: outside that regime the perturbative
/// elimination behind the effective model has no right to work.
pub fn compare_models(spec: &CompareSpec) -> Result<ComparisonResult> {
    let p = &spec.params;
    let validity = validity_check(p, None, HIERARCHY_WARN_FLOOR);
    if validity.min_margin < HIERARCHY_HARD_FLOOR {
        let worst = validity
            .checks
            .iter()
            .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap())
            .map(|c| c.name.clone())
            .unwrap_or_default();
        return Err(Error::ValidityRefused {
            min_ratio: validity.min_margin,
            floor: HIERARCHY_HARD_FLOOR,
            worst,
        });
    }
    let mut warnings = Vec::new();
    if !validity.pass {
        warnings.push(format!(
            "scale-hierarchy margin {:.2} is below {}; expect visible deviations",
            validity.min_margin, HIERARCHY_WARN_FLOOR
        ));
    }

    let full_basis = BasisDescriptor::new(p.n_sites, spec.n_max_a, spec.n_max_b)?;
    let full_spec = FullHamiltonianSpec {
        params: p.clone(),
        basis: full_basis,
        periodic: spec.periodic,
        include_cross_term: spec.include_cross_term,
        include_local_terms: spec.include_local_terms,
    };
    let full_h = FullHamiltonian::new(&full_spec)?;
    let psi_full = QuantumState::from_spin_pattern(full_basis, &spec.initial_pattern)?;
    let full_cfg =
        with_auto_sampling(&full_h, spec.t_final, &spec.full_config, spec.sample_target)?;
    let full = propagate(&full_h, &psi_full, spec.t_final, &full_cfg)?;

    let model = effective_couplings(p)?.with_boundary(spec.periodic && p.n_sites >= 3);
    let spin_basis = BasisDescriptor::spin_only(p.n_sites)?;
    let eff_h = effective_hamiltonian(&model, &spin_basis)?;
    let psi_eff = QuantumState::from_spin_pattern(spin_basis, &spec.initial_pattern)?;
    let eff_cfg = with_auto_sampling(
        &eff_h,
        spec.t_final,
        &spec.effective_config,
        spec.sample_target,
    )?;
    let effective = propagate(&eff_h, &psi_eff, spec.t_final, &eff_cfg)?;

    // deviations on the coarser grid, with the finer one interpolated
    let n = p.n_sites;
    let (coarse, fine) = if full.len() <= effective.len() {
        (&full, &effective)
    } else {
        (&effective, &full)
    };
    let mut max_dev_per_site = vec![0.0f64; n];
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (i, &t) in coarse.times.iter().enumerate() {
        for (site, worst) in max_dev_per_site.iter_mut().enumerate() {
            let dev = (coarse.p1[i][site] - interp_column(&fine.times, &fine.p1, site, t)).abs();
            *worst = worst.max(dev);
            sum_sq += dev * dev;
            count += 1;
        }
    }
    let max_dev = max_dev_per_site.iter().copied().fold(0.0, f64::max);
    let rms_dev = (sum_sq / count.max(1) as f64).sqrt();
    let max_mean_photon = full
        .na
        .iter()
        .flatten()
        .chain(full.nb.iter().flatten())
        .copied()
        .fold(0.0, f64::max);

    Ok(ComparisonResult {
        full,
        effective,
        max_dev_per_site,
        max_dev,
        rms_dev,
        max_mean_photon,
        validity,
        warnings,
    })
}

/// One row of a branch-ratio scan.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CancellationRow {
    /// Branch ratio B/A applied to both drive couplings.
    pub ratio: f64,
    pub j1: f64,
    pub j2: f64,
    /// j2 / j1; ±∞ at exact nearest-neighbor cancellation.
    pub j2_over_j1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Sweeps the branch ratio B/A (keeping everything else fixed, with
/// `b1 = ratio·a1` and `b2 = ratio·a2`) and tabulates the effective
/// couplings: the interference knob that cancels nearest-neighbor terms
/// while the next-nearest ones add.
pub fn cancellation_scan(base: &ReducedParams, ratios: &[f64]) -> Result<Vec<CancellationRow>> {
    if ratios.is_empty() {
        return Err(Error::EmptyInput { what: "ratio grid" });
    }
    effective_couplings(base)?; // surface detuning problems once, up front
    let mut rows = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let mut p = base.clone();
        p.b1 = ratio * base.a1;
        p.b2 = ratio * base.a2;
        let m = effective_couplings(&p)?;
        rows.push(CancellationRow {
            ratio,
            j1: m.j1,
            j2: m.j2,
            j2_over_j1: m.j2 / m.j1,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
        });
    }
    Ok(rows)
}

/// Couplings at one site separation: the exact photon-elimination value
/// next to the closed-form truncation (which only exists at separations
/// 1 and 2).
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExpansionRow {
    pub separation: usize,
    pub exact_pm: f64,
    pub exact_zz: f64,
    pub closed_pm: Option<f64>,
    pub closed_zz: Option<f64>,
    /// |exact − closed| / |closed|, when the closed form exists and is
    /// nonzero.
    pub rel_err_pm: Option<f64>,
    pub rel_err_zz: Option<f64>,
}

/// How well the hopping-truncated closed-form couplings reproduce the
/// exact momentum-sum couplings, separation by separation.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExpansionErrorReport {
    pub n_sites: usize,
    /// Uniform per-site longitudinal field of the exact model.
    pub field: f64,
    /// Rows for separations 1 ..= n_sites/2.
    pub rows: Vec<ExpansionRow>,
}

/// Compares the exact second-order couplings against the closed-form
/// ones and tabulates the truncation error plus the longer-range tail
/// the closed form drops entirely.
pub fn expansion_error_report(params: &ReducedParams) -> Result<ExpansionErrorReport> {
    let exact = exact_second_order(params)?;
    let closed = effective_couplings(params)?;
    let rel = |exact: f64, closed: f64| -> Option<f64> {
        if closed == 0.0 {
            None
        } else {
            Some((exact - closed).abs() / closed.abs())
        }
    };
    let n = exact.n_sites;
    let mut rows = Vec::new();
    for r in 1..=n / 2 {
        let (closed_pm, closed_zz) = match r {
            1 => (Some(closed.j1), Some(closed.lambda1)),
            2 => (Some(closed.j2), Some(closed.lambda2)),
            _ => (None, None),
        };
        rows.push(ExpansionRow {
            separation: r,
            exact_pm: exact.k_pm[r],
            exact_zz: exact.k_zz[r],
            closed_pm,
            closed_zz,
            rel_err_pm: closed_pm.and_then(|c| rel(exact.k_pm[r], c)),
            rel_err_zz: closed_zz.and_then(|c| rel(exact.k_zz[r], c)),
        });
    }
    Ok(ExpansionErrorReport {
        n_sites: n,
        field: exact.field[0],
        rows,
    })
}

/// Ground-state diagnostics of the effective chain.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct GroundStateResult {
    pub n_sites: usize,
    pub energy: f64,
    pub energy_per_site: f64,
    /// Gap to the second-lowest energy across all magnetization sectors.
    pub gap: f64,
    pub degenerate: bool,
    /// Total magnetization of the sector the ground state lives in.
    pub sector_mz: f64,
    /// Ground-state amplitudes in the spin product basis (real, since
    /// the Hamiltonian is real symmetric); for a degenerate ground space
    /// this is one representative.
    pub amplitudes: Vec<f64>,
    /// ⟨Sᶻ_i Sᶻ_j⟩ correlation table.
    pub szsz: Vec<Vec<f64>>,
    /// ⟨S⁺_i S⁻_j⟩ correlation table (real for real ground vectors).
    pub spsm: Vec<Vec<f64>>,
    /// Von Neumann entanglement entropies of contiguous left cuts of
    /// 1 ..= n_sites−1 sites, in nats.
    pub entropies: Vec<f64>,
}

/// Largest chain the dense-vector ground-state solver accepts.
pub const GROUND_STATE_MAX_SITES: usize = 16;

/// Real CSR block of the Hamiltonian restricted to one magnetization
/// sector.
struct SectorBlock {
    dim: usize,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SectorBlock {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }

    fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }
}

fn extract_sector(h: &SparseOperator, sector: &[usize], lookup: &[u32]) -> SectorBlock {
    let mut indptr = Vec::with_capacity(sector.len() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    indptr.push(0);
    for &full_row in sector {
        for (col, v) in h.row_entries(full_row) {
            let pos = lookup[col];
            if pos != u32::MAX {
                cols.push(pos);
                vals.push(v.re);
            }
        }
        indptr.push(cols.len());
    }
    SectorBlock {
        dim: sector.len(),
        indptr,
        cols,
        vals,
    }
}

/// Deterministic, structureless start vector for Lanczos: fractional
/// parts of multiples of an irrational.
fn seed_vector(dim: usize, increment: f64) -> Vec<f64> {
    (0..dim)
        .map(|i| ((i + 1) as f64 * increment).fract() - 0.5)
        .collect()
}

fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_real(v: &[f64]) -> f64 {
    dot_real(v, v).sqrt()
}

/// Lowest eigenpair of the block by Lanczos with full
/// reorthogonalization, optionally deflating one known vector (used to
/// reach the second-lowest energy, degenerate or not).
fn lanczos_lowest(
    block: &SectorBlock,
    deflate: Option<&[f64]>,
    seed_increment: f64,
) -> Result<(f64, Vec<f64>)> {
    let dim = block.dim;
    let mut v0 = seed_vector(dim, seed_increment);
    if let Some(d) = deflate {
        let c = dot_real(d, &v0);
        for (x, y) in v0.iter_mut().zip(d) {
            *x -= c * y;
        }
    }
    let nrm = norm_real(&v0);
    if nrm == 0.0 {
        return Err(Error::NoConvergence {
            what: "ground-state lanczos",
            detail: "start vector vanished after deflation".into(),
        });
    }
    for x in v0.iter_mut() {
        *x /= nrm;
    }

    let mut vectors = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let max_iter = LANCZOS_MAX_ITER.min(dim);
    for m in 0.. {
        block.apply(&vectors[m], &mut w);
        let alpha = dot_real(&vectors[m], &w);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&vectors[m]) {
            *wi -= alpha * vi;
        }
        if m > 0 {
            let beta = betas[m - 1];
            for (wi, vi) in w.iter_mut().zip(&vectors[m - 1]) {
                *wi -= beta * vi;
            }
        }
        if let Some(d) = deflate {
            let c = dot_real(d, &w);
            for (wi, di) in w.iter_mut().zip(d) {
                *wi -= c * di;
            }
        }
        for v in &vectors {
            let c = dot_real(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        let beta = norm_real(&w);

        // Ritz values of the current tridiagonal projection
        let mm = alphas.len();
        let mut t = nalgebra::DMatrix::<f64>::zeros(mm, mm);
        for (i, &a) in alphas.iter().enumerate() {
            t[(i, i)] = a;
        }
        for (i, &b) in betas.iter().enumerate() {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        let eig = t.symmetric_eigen();
        let mut low = 0;
        for l in 1..mm {
            if eig.eigenvalues[l] < eig.eigenvalues[low] {
                low = l;
            }
        }
        let theta = eig.eigenvalues[low];
        let residual = beta * eig.eigenvectors[(mm - 1, low)].abs();
        let exhausted = beta <= 1e-13 * theta.abs().max(1.0) || m + 1 >= max_iter;
        if residual <= LANCZOS_TOL * theta.abs().max(1.0) || exhausted {
            if residual > LANCZOS_TOL * theta.abs().max(1.0) {
                return Err(Error::NoConvergence {
                    what: "ground-state lanczos",
                    detail: format!("residual {residual:.3e} after {} iterations", m + 1),
                });
            }
            let mut ground = vec![0.0; dim];
            for (k, v) in vectors.iter().enumerate() {
                let c = eig.eigenvectors[(k, low)];
                for (gi, vi) in ground.iter_mut().zip(v) {
                    *gi += c * vi;
                }
            }
            let nrm = norm_real(&ground);
            for g in ground.iter_mut() {
                *g /= nrm;
            }
            return Ok((theta, ground));
        }

        betas.push(beta);
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        vectors.push(next);
    }
    unreachable!("loop exits through convergence or the error path");
}

/// Lowest one or two energies of a sector plus the ground vector.
fn sector_lowest(block: &SectorBlock) -> Result<(f64, Option<f64>, Vec<f64>)> {
    if block.dim <= DENSE_SECTOR_MAX {
        let eig = block.to_dense().symmetric_eigen();
        let mut order: Vec<usize> = (0..block.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let e0 = eig.eigenvalues[order[0]];
        let e1 = order.get(1).map(|&i| eig.eigenvalues[i]);
        let vec0 = (0..block.dim)
            .map(|r| eig.eigenvectors[(r, order[0])])
            .collect();
        Ok((e0, e1, vec0))
    } else {
        let golden = 0.618_033_988_749_894_9;
        let silver = std::f64::consts::SQRT_2 - 1.0;
        let (e0, v0) = lanczos_lowest(block, None, golden)?;
        let (e1, _) = lanczos_lowest(block, Some(&v0), silver)?;
        Ok((e0, Some(e1), v0))
    }
}

/// Spin-spin correlation tables of a real state vector.
fn correlation_tables(basis: &BasisDescriptor, amps: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = basis.n_sites();
    let strides: Vec<usize> = (0..n)
        .map(|s| basis.factor_stride(s, SiteFactor::Emitter))
        .collect();
    let mut szsz = vec![vec![0.0; n]; n];
    let mut spsm = vec![vec![0.0; n]; n];
    for (idx, &a) in amps.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let w = a * a;
        for i in 0..n {
            let di = basis.emitter_digit(idx, i);
            let szi = if di == 1 { 0.5 } else { -0.5 };
            if di == 1 {
                spsm[i][i] += w;
            }
            for j in 0..n {
                let dj = basis.emitter_digit(idx, j);
                let szj = if dj == 1 { 0.5 } else { -0.5 };
                szsz[i][j] += w * szi * szj;
                // S⁺_i S⁻_j moves one excitation from j to i
                if i != j && di == 0 && dj == 1 {
                    let target = idx + strides[i] - strides[j];
                    spsm[i][j] += amps[target] * a;
                }
            }
        }
    }
    (szsz, spsm)
}

/// Entanglement entropies (nats) of contiguous left cuts, from singular
/// values of the reshaped state vector.
fn cut_entropies(n_sites: usize, amps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_sites.saturating_sub(1));
    for cut in 1..n_sites {
        let rows = 1usize << cut;
        let cols = 1usize << (n_sites - cut);
        // the first `cut` sites are the most significant digits, so the
        // vector is already laid out row-major for this split
        let m = nalgebra::DMatrix::from_fn(rows, cols, |r, c| amps[r * cols + c]);
        let sv = m.svd(false, false).singular_values;
        let mut s = 0.0;
        for &sigma in sv.iter() {
            let p = sigma * sigma;
            if p > 1e-300 {
                s -= p * p.ln();
            }
        }
        out.push(s.max(0.0));
    }
    out
}

/// Finds the ground state of the effective chain by exact
/// diagonalization, magnetization sector by magnetization sector (the
/// Hamiltonian conserves total Sᶻ), and reports energies, correlation
/// tables, and entanglement entropies.
pub fn ground_state(model: &crate::params::EffectiveSpinModel) -> Result<GroundStateResult> {
    let n = model.n_sites;
    if n > GROUND_STATE_MAX_SITES {
        return Err(Error::NTooLarge {
            n_sites: n,
            max: GROUND_STATE_MAX_SITES,
        });
    }
    let basis = BasisDescriptor::spin_only(n)?;
    let h = effective_hamiltonian(model, &basis)?;
    let dim = basis.dim();

    // group basis states by number of lowered spins
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for idx in 0..dim {
        let down = (0..n).filter(|&s| basis.emitter_digit(idx, s) == 0).count();
        sectors[down].push(idx);
    }

    let mut lookup = vec![u32::MAX; dim];
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut energies: Vec<f64> = Vec::new();
    for (down, sector) in sectors.iter().enumerate() {
        for x in lookup.iter_mut() {
            *x = u32::MAX;
        }
        for (pos, &idx) in sector.iter().enumerate() {
            lookup[idx] = pos as u32;
        }
        let block = extract_sector(&h, sector, &lookup);
        let (e0, e1, vec0) = sector_lowest(&block)?;
        energies.push(e0);
        if let Some(e1) = e1 {
            energies.push(e1);
        }
        if best.as_ref().map_or(true, |(e, _, _)| e0 < *e) {
            best = Some((e0, down, vec0));
        }
    }
    let (energy, down, sector_vec) = best.expect("at least one sector exists");
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = energies[1] - energies[0];
    let degenerate = gap <= DEGENERACY_REL_GAP * energy.abs().max(1.0);

    let mut amplitudes = vec![0.0; dim];
    for (pos, &idx) in sectors[down].iter().enumerate() {
        amplitudes[idx] = sector_vec[pos];
    }
    let (szsz, spsm) = correlation_tables(&basis, &amplitudes);
    let entropies = cut_entropies(n, &amplitudes);

    Ok(GroundStateResult {
        n_sites: n,
        energy,
        energy_per_site: energy / n as f64,
        gap,
        degenerate,
        sector_mz: n as f64 / 2.0 - down as f64,
        amplitudes,
        szsz,
        spsm,
        entropies,
    })
}
