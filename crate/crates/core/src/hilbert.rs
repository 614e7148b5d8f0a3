//! Basis bookkeeping, sparse operators, and states for the composite
//! emitter–photon space of a cavity array.
//!
//! Every site of the array carries one two-level emitter and one boson mode
//! from each of the two cavity-mode families `a` and `b`, truncated at
//! per-mode occupations `n_max_a` and `n_max_b`. Basis states are indexed
//! site-major: site 0 owns the most significant digits, and within a site
//! the digit order is (emitter, mode a, mode b). The emitter digit is 0 for
//! the lower level and 1 for the upper level, so spin-z on one site is
//! diag(-1/2, +1/2) in that digit.
//!
//! Operators are stored in compressed sparse row form and are built from
//! coordinate triplets; the workload downstream is matvec-dominated, so
//! everything else (products, adjoints, Hermiticity checks) is implemented
//! on top of that one layout.

use crate::error::{Error, Result};
use crate::C64;

/// Hard cap on composite basis dimensions. This guards against accidental
/// huge allocations, not a promise that every dimension below it is cheap:
/// a state vector at the cap already weighs 128 MiB.
pub const DIMENSION_CAP: usize = 1 << 23;

/// Shape of a composite basis: chain length and per-mode photon cutoffs.
///
/// The descriptor is plain data (`Copy`) and doubles as the compatibility
/// tag carried by every operator and state built on it.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
pub struct BasisDescriptor {
    n_sites: usize,
    n_max_a: usize,
    n_max_b: usize,
    dim: usize,
}

/// Builds the composite basis for `n_sites` sites with per-mode photon
/// cutoffs `n_max_a` and `n_max_b` (cutoff 0 removes the mode family,
/// leaving a spin-only chain).
pub fn build_basis(n_sites: usize, n_max_a: usize, n_max_b: usize) -> Result<BasisDescriptor> {
    BasisDescriptor::new(n_sites, n_max_a, n_max_b)
}

impl BasisDescriptor {
    pub fn new(n_sites: usize, n_max_a: usize, n_max_b: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::EmptyChain);
        }
        let site_dim = 2u128 * (n_max_a as u128 + 1) * (n_max_b as u128 + 1);
        let mut dim: u128 = 1;
        for _ in 0..n_sites {
            dim = dim.saturating_mul(site_dim);
            if dim > DIMENSION_CAP as u128 {
                return Err(Error::DimensionCap {
                    n_sites,
                    n_max_a,
                    n_max_b,
                    cap: DIMENSION_CAP,
                });
            }
        }
        Ok(Self {
            n_sites,
            n_max_a,
            n_max_b,
            dim: dim as usize,
        })
    }

    /// Spin-only chain: both photon cutoffs zero.
    pub fn spin_only(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 0, 0)
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn n_max_a(&self) -> usize {
        self.n_max_a
    }

    #[inline]
    pub fn n_max_b(&self) -> usize {
        self.n_max_b
    }

    /// Total number of basis states.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Local dimension of one site (emitter x mode a x mode b).
    #[inline]
    pub fn site_dim(&self) -> usize {
        2 * (self.n_max_a + 1) * (self.n_max_b + 1)
    }

    /// Dimension of one factor.
    #[inline]
    pub fn factor_dim(&self, factor: SiteFactor) -> usize {
        match factor {
            SiteFactor::Emitter => 2,
            SiteFactor::ModeA => self.n_max_a + 1,
            SiteFactor::ModeB => self.n_max_b + 1,
        }
    }

    /// Index stride of one factor digit at `site`.
    #[inline]
    pub fn factor_stride(&self, site: usize, factor: SiteFactor) -> usize {
        let site_block = self.site_dim().pow((self.n_sites - 1 - site) as u32);
        match factor {
            SiteFactor::Emitter => site_block * (self.n_max_a + 1) * (self.n_max_b + 1),
            SiteFactor::ModeA => site_block * (self.n_max_b + 1),
            SiteFactor::ModeB => site_block,
        }
    }

    /// Digit of `factor` at `site` inside a basis index.
    #[inline]
    pub fn digit(&self, index: usize, site: usize, factor: SiteFactor) -> usize {
        (index / self.factor_stride(site, factor)) % self.factor_dim(factor)
    }

    /// Emitter digit at `site`: 0 = lower level, 1 = upper level.
    #[inline]
    pub fn emitter_digit(&self, index: usize, site: usize) -> usize {
        self.digit(index, site, SiteFactor::Emitter)
    }

    /// Mode-a occupation at `site`.
    #[inline]
    pub fn occ_a(&self, index: usize, site: usize) -> usize {
        self.digit(index, site, SiteFactor::ModeA)
    }

    /// Mode-b occupation at `site`.
    #[inline]
    pub fn occ_b(&self, index: usize, site: usize) -> usize {
        self.digit(index, site, SiteFactor::ModeB)
    }

    /// Basis index of the configuration listing, per site, the emitter digit
    /// and the two mode occupations.
    pub fn encode(&self, digits: &[(usize, usize, usize)]) -> Result<usize> {
        if digits.len() != self.n_sites {
            return Err(Error::StateLength {
                expected: self.n_sites,
                got: digits.len(),
            });
        }
        let mut index = 0usize;
        for &(e, na, nb) in digits {
            if e > 1 || na > self.n_max_a || nb > self.n_max_b {
                return Err(Error::LocalEntryOutOfRange {
                    row: e.max(na),
                    col: nb,
                    dim: self.site_dim(),
                });
            }
            index =
                index * self.site_dim() + (e * (self.n_max_a + 1) + na) * (self.n_max_b + 1) + nb;
        }
        Ok(index)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, index: usize) -> Vec<(usize, usize, usize)> {
        let mut out = vec![(0usize, 0usize, 0usize); self.n_sites];
        let mut rest = index;
        for site in (0..self.n_sites).rev() {
            let local = rest % self.site_dim();
            rest /= self.site_dim();
            let nb = local % (self.n_max_b + 1);
            let rest_local = local / (self.n_max_b + 1);
            let na = rest_local % (self.n_max_a + 1);
            let e = rest_local / (self.n_max_a + 1);
            out[site] = (e, na, nb);
        }
        out
    }
}

/// One tensor factor of a site: the emitter or one of the two boson modes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SiteFactor {
    Emitter,
    ModeA,
    ModeB,
}

impl SiteFactor {
    fn name(&self) -> &'static str {
        match self {
            SiteFactor::Emitter => "emitter",
            SiteFactor::ModeA => "mode a",
            SiteFactor::ModeB => "mode b",
        }
    }
}

/// Dense-ish single-factor operator, stored column-wise as nonzero lists so
/// that embedding can iterate "which rows does this digit map to".
#[derive(Clone, Debug)]
pub struct LocalOp {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl LocalOp {
    pub fn from_entries(dim: usize, entries: &[(usize, usize, C64)]) -> Result<Self> {
        let mut cols = vec![Vec::new(); dim];
        for &(r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::LocalEntryOutOfRange {
                    row: r,
                    col: c,
                    dim,
                });
            }
            if v != C64::new(0.0, 0.0) {
                cols[c].push((r, v));
            }
        }
        for col in &mut cols {
            col.sort_unstable_by_key(|&(r, _)| r);
        }
        Ok(Self { dim, cols })
    }

    pub fn identity(dim: usize) -> Self {
        let cols = (0..dim).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect();
        Self { dim, cols }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.cols[col]
            .iter()
            .find(|&&(r, _)| r == row)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn dagger(&self) -> Self {
        let mut entries = Vec::new();
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                entries.push((c, r, v.conj()));
            }
        }
        Self::from_entries(self.dim, &entries).expect("adjoint entries stay in range")
    }

    /// Spin-z on the emitter: diag(-1/2, +1/2) in the (lower, upper) order.
    pub fn s_z() -> Self {
        Self::from_entries(
            2,
            &[(0, 0, C64::new(-0.5, 0.0)), (1, 1, C64::new(0.5, 0.0))],
        )
        .unwrap()
    }

    /// Raising operator |upper><lower|.
    pub fn s_plus() -> Self {
        Self::from_entries(2, &[(1, 0, C64::new(1.0, 0.0))]).unwrap()
    }

    /// Lowering operator |lower><upper|.
    pub fn s_minus() -> Self {
        Self::from_entries(2, &[(0, 1, C64::new(1.0, 0.0))]).unwrap()
    }

    pub fn s_x() -> Self {
        Self::from_entries(2, &[(0, 1, C64::new(0.5, 0.0)), (1, 0, C64::new(0.5, 0.0))]).unwrap()
    }

    pub fn s_y() -> Self {
        Self::from_entries(
            2,
            &[(0, 1, C64::new(0.0, 0.5)), (1, 0, C64::new(0.0, -0.5))],
        )
        .unwrap()
    }

    /// Projector on the lower emitter level.
    pub fn proj_lower() -> Self {
        Self::from_entries(2, &[(0, 0, C64::new(1.0, 0.0))]).unwrap()
    }

    /// Projector on the upper emitter level.
    pub fn proj_upper() -> Self {
        Self::from_entries(2, &[(1, 1, C64::new(1.0, 0.0))]).unwrap()
    }

    /// Boson annihilation on a mode truncated at occupation `n_max`.
    pub fn annihilate(n_max: usize) -> Self {
        let entries: Vec<_> = (1..=n_max)
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect();
        Self::from_entries(n_max + 1, &entries).unwrap()
    }

    /// Boson creation on a mode truncated at occupation `n_max`.
    pub fn create(n_max: usize) -> Self {
        Self::annihilate(n_max).dagger()
    }

    /// Boson number operator on a mode truncated at occupation `n_max`.
    pub fn number(n_max: usize) -> Self {
        let entries: Vec<_> = (1..=n_max)
            .map(|n| (n, n, C64::new(n as f64, 0.0)))
            .collect();
        Self::from_entries(n_max + 1, &entries).unwrap()
    }
}

/// Complex sparse matrix in compressed-row form, tagged with the basis it
/// acts on. Construction goes through coordinate triplets; duplicate
/// coordinates are summed and exact zeros dropped.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    basis: BasisDescriptor,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn from_triplets(basis: BasisDescriptor, triplets: Vec<(u32, u32, C64)>) -> Self {
        let dim = basis.dim();
        let mut counts = vec![0usize; dim + 1];
        for &(r, _, _) in &triplets {
            counts[r as usize + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut scratch: Vec<(u32, C64)> = vec![(0, C64::new(0.0, 0.0)); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in &triplets {
            let slot = cursor[r as usize];
            scratch[slot] = (c, v);
            cursor[r as usize] += 1;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        indptr.push(0usize);
        for r in 0..dim {
            let row = &mut scratch[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            indptr.push(cols.len());
        }
        Self {
            basis,
            indptr,
            cols,
            vals,
        }
    }

    pub fn zero(basis: BasisDescriptor) -> Self {
        Self::from_triplets(basis, Vec::new())
    }

    pub fn identity(basis: BasisDescriptor) -> Self {
        let triplets = (0..basis.dim() as u32)
            .map(|i| (i, i, C64::new(1.0, 0.0)))
            .collect();
        Self::from_triplets(basis, triplets)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn basis(&self) -> BasisDescriptor {
        self.basis
    }

    fn check_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch {
                left: self.basis,
                right: other.basis,
            });
        }
        Ok(())
    }

    /// y += scale * (A x). The workhorse: everything downstream reduces to
    /// this accumulating form.
    pub fn apply_acc(&self, scale: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let lo = self.indptr[r];
            let hi = self.indptr[r + 1];
            if lo == hi {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out += scale * acc;
        }
    }

    /// y = A x.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        self.apply_acc(C64::new(1.0, 0.0), x, y);
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_acc(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// self + scale * rhs, merging the two sorted row structures.
    pub fn add_scaled(&self, rhs: &Self, scale: C64) -> Result<Self> {
        self.check_basis(rhs)?;
        let dim = self.dim();
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(self.nnz() + rhs.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + rhs.nnz());
        indptr.push(0usize);
        for r in 0..dim {
            let (mut i, hi_l) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, hi_r) = (rhs.indptr[r], rhs.indptr[r + 1]);
            while i < hi_l || j < hi_r {
                let cl = if i < hi_l { self.cols[i] } else { u32::MAX };
                let cr = if j < hi_r { rhs.cols[j] } else { u32::MAX };
                let (c, v) = if cl < cr {
                    i += 1;
                    (cl, self.vals[i - 1])
                } else if cr < cl {
                    j += 1;
                    (cr, scale * rhs.vals[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (cl, self.vals[i - 1] + scale * rhs.vals[j - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            indptr.push(cols.len());
        }
        Ok(Self {
            basis: self.basis,
            indptr,
            cols,
            vals,
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.add_scaled(rhs, C64::new(1.0, 0.0))
    }

    pub fn scale(&self, scale: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= scale;
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let dim = self.dim();
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![C64::new(0.0, 0.0); self.nnz()];
        let mut cursor = counts.clone();
        for r in 0..dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.cols[k] as usize;
                let slot = cursor[c];
                cols[slot] = r as u32;
                vals[slot] = self.vals[k].conj();
                cursor[c] += 1;
            }
        }
        // Rows come out sorted because the source rows were scanned in order.
        Self {
            basis: self.basis,
            indptr: counts,
            cols,
            vals,
        }
    }

    /// self * rhs via row-by-row accumulation.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_basis(rhs)?;
        let dim = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut touched: Vec<u32> = Vec::new();
        let mut marked = vec![false; dim];
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        indptr.push(0usize);
        for r in 0..dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let mid = self.cols[k] as usize;
                let v = self.vals[k];
                for k2 in rhs.indptr[mid]..rhs.indptr[mid + 1] {
                    let c = rhs.cols[k2];
                    if !marked[c as usize] {
                        marked[c as usize] = true;
                        touched.push(c);
                    }
                    acc[c as usize] += v * rhs.vals[k2];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c as usize];
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
                acc[c as usize] = C64::new(0.0, 0.0);
                marked[c as usize] = false;
            }
            touched.clear();
            indptr.push(cols.len());
        }
        Ok(Self {
            basis: self.basis,
            indptr,
            cols,
            vals,
        })
    }

    /// Largest entry magnitude of A - A†; zero for an exactly Hermitian matrix.
    pub fn hermiticity_residual(&self) -> f64 {
        self.add_scaled(&self.dagger(), C64::new(-1.0, 0.0))
            .expect("same basis")
            .max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum — an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            let s: f64 = (self.indptr[r]..self.indptr[r + 1])
                .map(|k| self.vals[k].norm())
                .sum();
            worst = worst.max(s);
        }
        worst
    }

    /// Entry (row, col), zero if absent.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        let lo = self.indptr[row];
        let hi = self.indptr[row + 1];
        match self.cols[lo..hi].binary_search(&(col as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// <state| A |state>.
    pub fn expectation(&self, state: &QuantumState) -> Result<C64> {
        if state.basis() != self.basis {
            return Err(Error::BasisMismatch {
                left: self.basis,
                right: state.basis(),
            });
        }
        let ax = self.matvec(state.amps());
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in state.amps().iter().zip(ax.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    /// Dense copy, for small-dimension tests and eigensolves.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let dim = self.dim();
        let mut m = nalgebra::DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for r in 0..dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }

    /// Iterate stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1])
                .map(move |k| (r, self.cols[k] as usize, self.vals[k]))
        })
    }

    /// Nonzero entries of a single row as `(column, value)` pairs.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[row]..self.indptr[row + 1]).map(move |k| (self.cols[k] as usize, self.vals[k]))
    }
}

/// Embeds a single-factor operator at one site into the composite space.
pub fn embed_site_operator(
    basis: &BasisDescriptor,
    site: usize,
    factor: SiteFactor,
    op: &LocalOp,
) -> Result<SparseOperator> {
    embed_product(basis, &[(site, factor, op)])
}

/// Embeds a product of single-factor operators acting on distinct
/// (site, factor) slots, e.g. a projector on one emitter times an
/// annihilator on the same site's mode a, or a two-site hopping term.
pub fn embed_product(
    basis: &BasisDescriptor,
    factors: &[(usize, SiteFactor, &LocalOp)],
) -> Result<SparseOperator> {
    let mut triplets: Vec<(u32, u32, C64)> = Vec::new();
    append_product_triplets(basis, factors, C64::new(1.0, 0.0), &mut triplets)?;
    Ok(SparseOperator::from_triplets(*basis, triplets))
}

/// Appends the coordinate entries of `scale · (product of factors)` to
/// `out`. Hamiltonian builders sum many embedded terms; accumulating
/// triplets and compressing once is much cheaper than merging sparse
/// matrices pairwise.
pub(crate) fn append_product_triplets(
    basis: &BasisDescriptor,
    factors: &[(usize, SiteFactor, &LocalOp)],
    scale: C64,
    out: &mut Vec<(u32, u32, C64)>,
) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::EmptyInput {
            what: "operator factor list",
        });
    }
    for (i, &(site, factor, op)) in factors.iter().enumerate() {
        if site >= basis.n_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: basis.n_sites(),
            });
        }
        if op.dim() != basis.factor_dim(factor) {
            return Err(Error::FactorDimMismatch {
                expected: basis.factor_dim(factor),
                got: op.dim(),
            });
        }
        for &(s2, f2, _) in &factors[..i] {
            if s2 == site && f2 == factor {
                return Err(Error::DuplicateFactor {
                    site,
                    factor: factor.name(),
                });
            }
        }
    }

    let strides: Vec<usize> = factors
        .iter()
        .map(|&(site, factor, _)| basis.factor_stride(site, factor))
        .collect();
    let dims: Vec<usize> = factors
        .iter()
        .map(|&(_, factor, _)| basis.factor_dim(factor))
        .collect();

    for col in 0..basis.dim() {
        // Depth-first over the factor list; most factors have 0 or 1 nonzero
        // per column so the product fan-out stays tiny.
        expand_factor(factors, &strides, &dims, col, 0, col, scale, out);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn expand_factor(
    factors: &[(usize, SiteFactor, &LocalOp)],
    strides: &[usize],
    dims: &[usize],
    col: usize,
    depth: usize,
    row_so_far: usize,
    val_so_far: C64,
    triplets: &mut Vec<(u32, u32, C64)>,
) {
    if depth == factors.len() {
        triplets.push((row_so_far as u32, col as u32, val_so_far));
        return;
    }
    let (_, _, op) = factors[depth];
    let digit = (col / strides[depth]) % dims[depth];
    for &(r, v) in &op.cols[digit] {
        // Replacing digit `digit` by `r` shifts the flat index by
        // (r - digit) * stride; the difference may be negative, and
        // wrapping arithmetic on usize realizes the signed offset exactly
        // because the true result is always in range.
        let row = row_so_far.wrapping_add(r.wrapping_sub(digit).wrapping_mul(strides[depth]));
        expand_factor(
            factors,
            strides,
            dims,
            col,
            depth + 1,
            row,
            val_so_far * v,
            triplets,
        );
    }
}

/// State vector on a composite basis.
#[derive(Clone, Debug)]
pub struct QuantumState {
    basis: BasisDescriptor,
    amps: Vec<C64>,
}

/// Tolerance for the construction-time norm check.
pub const NORM_TOLERANCE: f64 = 1e-9;

impl QuantumState {
    /// Wraps an amplitude vector, requiring unit norm within
    /// [`NORM_TOLERANCE`].
    pub fn from_amplitudes(basis: BasisDescriptor, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::StateLength {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                norm,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(Self { basis, amps })
    }

    pub(crate) fn from_raw(basis: BasisDescriptor, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), basis.dim());
        Self { basis, amps }
    }

    /// The computational basis state with the given index.
    pub fn basis_state(basis: BasisDescriptor, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::StateLength {
                expected: basis.dim(),
                got: index,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { basis, amps })
    }

    /// Product state from a spin pattern like `"1222"` ('1' = lower level,
    /// '2' = upper level, one character per site), with every mode in vacuum.
    pub fn from_spin_pattern(basis: BasisDescriptor, pattern: &str) -> Result<Self> {
        let digits: Vec<(usize, usize, usize)> = pattern
            .chars()
            .map(|ch| match ch {
                '1' => Ok((0usize, 0usize, 0usize)),
                '2' => Ok((1usize, 0usize, 0usize)),
                other => Err(Error::InvalidPattern {
                    pattern: pattern.to_string(),
                    reason: format!("unexpected character {other:?}; use '1' or '2'"),
                }),
            })
            .collect::<Result<_>>()?;
        if digits.len() != basis.n_sites() {
            return Err(Error::InvalidPattern {
                pattern: pattern.to_string(),
                reason: format!(
                    "pattern has {} characters for a chain of {} sites",
                    digits.len(),
                    basis.n_sites()
                ),
            });
        }
        let index = basis.encode(&digits)?;
        Self::basis_state(basis, index)
    }

    /// All emitters up except a single lower-level one at `site`; modes in
    /// vacuum. The canonical single-excitation initial state.
    pub fn single_down_state(basis: BasisDescriptor, site: usize) -> Result<Self> {
        if site >= basis.n_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: basis.n_sites(),
            });
        }
        let pattern: String = (0..basis.n_sites())
            .map(|s| if s == site { '1' } else { '2' })
            .collect();
        Self::from_spin_pattern(basis, &pattern)
    }

    #[inline]
    pub fn basis(&self) -> BasisDescriptor {
        self.basis
    }

    #[inline]
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch {
                left: self.basis,
                right: other.basis,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimensions_match_site_products() {
        assert_eq!(build_basis(1, 0, 0).unwrap().dim(), 2);
        assert_eq!(build_basis(4, 1, 1).unwrap().dim(), 4096);
        assert_eq!(build_basis(4, 2, 2).unwrap().dim(), 104976);
        assert_eq!(build_basis(8, 0, 0).unwrap().dim(), 256);
    }

    #[test]
    fn oversized_basis_is_rejected() {
        let err = build_basis(30, 1, 1).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { n_sites: 30, .. }));
        assert!(matches!(build_basis(0, 1, 1), Err(Error::EmptyChain)));
    }

    #[test]
    fn encode_decode_roundtrip_exhaustive() {
        for (n, na, nb) in [(1usize, 2usize, 1usize), (2, 1, 2), (3, 1, 1), (4, 1, 0)] {
            let basis = build_basis(n, na, nb).unwrap();
            for index in 0..basis.dim() {
                let digits = basis.decode(index);
                assert_eq!(basis.encode(&digits).unwrap(), index);
                for (site, &(e, occ_a, occ_b)) in digits.iter().enumerate() {
                    assert_eq!(basis.emitter_digit(index, site), e);
                    assert_eq!(basis.occ_a(index, site), occ_a);
                    assert_eq!(basis.occ_b(index, site), occ_b);
                }
            }
        }
    }

    #[test]
    fn spin_z_on_single_site_is_diagonal_half() {
        let basis = BasisDescriptor::spin_only(1).unwrap();
        let sz = embed_site_operator(&basis, 0, SiteFactor::Emitter, &LocalOp::s_z()).unwrap();
        assert_eq!(sz.get(0, 0), c(-0.5, 0.0));
        assert_eq!(sz.get(1, 1), c(0.5, 0.0));
        assert_eq!(sz.nnz(), 2);
    }

    #[test]
    fn raising_operator_adjoint_is_lowering() {
        let basis = build_basis(2, 1, 1).unwrap();
        let plus = embed_site_operator(&basis, 1, SiteFactor::Emitter, &LocalOp::s_plus()).unwrap();
        let minus =
            embed_site_operator(&basis, 1, SiteFactor::Emitter, &LocalOp::s_minus()).unwrap();
        let diff = plus.dagger().add_scaled(&minus, c(-1.0, 0.0)).unwrap();
        assert_eq!(diff.nnz(), 0);
    }

    #[test]
    fn annihilator_matrix_elements() {
        let a = LocalOp::annihilate(2);
        assert_eq!(a.entry(0, 1), c(1.0, 0.0));
        assert_abs_diff_eq!(a.entry(1, 2).re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.entry(2, 2), c(0.0, 0.0));
    }

    #[test]
    fn embedded_product_equals_matmul_of_embeddings() {
        let basis = build_basis(2, 1, 1).unwrap();
        let p = embed_product(
            &basis,
            &[
                (0, SiteFactor::Emitter, &LocalOp::proj_lower()),
                (0, SiteFactor::ModeA, &LocalOp::annihilate(1)),
            ],
        )
        .unwrap();
        let lhs = embed_site_operator(&basis, 0, SiteFactor::Emitter, &LocalOp::proj_lower())
            .unwrap()
            .matmul(
                &embed_site_operator(&basis, 0, SiteFactor::ModeA, &LocalOp::annihilate(1))
                    .unwrap(),
            )
            .unwrap();
        let diff = lhs.add_scaled(&p, c(-1.0, 0.0)).unwrap();
        assert_eq!(diff.nnz(), 0);
    }

    #[test]
    fn disjoint_site_operators_commute() {
        let basis = build_basis(3, 1, 1).unwrap();
        let hop = embed_product(
            &basis,
            &[
                (0, SiteFactor::ModeA, &LocalOp::create(1)),
                (1, SiteFactor::ModeA, &LocalOp::annihilate(1)),
            ],
        )
        .unwrap();
        let sz = embed_site_operator(&basis, 2, SiteFactor::Emitter, &LocalOp::s_z()).unwrap();
        let ab = hop.matmul(&sz).unwrap();
        let ba = sz.matmul(&hop).unwrap();
        let comm = ab.add_scaled(&ba, c(-1.0, 0.0)).unwrap();
        assert_eq!(comm.nnz(), 0);
    }

    #[test]
    fn duplicate_factor_rejected() {
        let basis = build_basis(2, 1, 1).unwrap();
        let op = LocalOp::s_z();
        let err = embed_product(
            &basis,
            &[(0, SiteFactor::Emitter, &op), (0, SiteFactor::Emitter, &op)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateFactor { site: 0, .. }));
    }

    #[test]
    fn factor_dim_mismatch_rejected() {
        let basis = build_basis(2, 1, 1).unwrap();
        let too_big = LocalOp::annihilate(2); // dim 3 on a cutoff-1 mode
        let err = embed_site_operator(&basis, 0, SiteFactor::ModeA, &too_big).unwrap_err();
        assert!(matches!(
            err,
            Error::FactorDimMismatch {
                expected: 2,
                got: 3
            }
        ));
    }

    #[test]
    fn matvec_matches_dense() {
        let basis = build_basis(2, 1, 0).unwrap();
        let op = embed_product(
            &basis,
            &[
                (0, SiteFactor::Emitter, &LocalOp::s_plus()),
                (1, SiteFactor::ModeA, &LocalOp::annihilate(1)),
            ],
        )
        .unwrap();
        let dim = basis.dim();
        let x: Vec<C64> = (0..dim)
            .map(|i| c(0.3 + i as f64, 0.1 * i as f64))
            .collect();
        let dense = op.to_dense();
        let y = op.matvec(&x);
        for r in 0..dim {
            let mut expect = c(0.0, 0.0);
            for k in 0..dim {
                expect += dense[(r, k)] * x[k];
            }
            assert_abs_diff_eq!(y[r].re, expect.re, epsilon = 1e-12);
            assert_abs_diff_eq!(y[r].im, expect.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn spin_pattern_state_and_norm_checks() {
        let basis = build_basis(4, 1, 1).unwrap();
        let psi = QuantumState::from_spin_pattern(basis, "1222").unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-15);
        let idx = psi.amps().iter().position(|a| a.norm() > 0.5).unwrap();
        assert_eq!(basis.emitter_digit(idx, 0), 0);
        for site in 1..4 {
            assert_eq!(basis.emitter_digit(idx, site), 1);
        }
        for site in 0..4 {
            assert_eq!(basis.occ_a(idx, site), 0);
            assert_eq!(basis.occ_b(idx, site), 0);
        }

        assert!(QuantumState::from_spin_pattern(basis, "12").is_err());
        assert!(QuantumState::from_spin_pattern(basis, "1223").is_err());
        let bad = vec![c(0.5, 0.0); basis.dim()];
        assert!(matches!(
            QuantumState::from_amplitudes(basis, bad),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn hermiticity_residual_detects_asymmetry() {
        let basis = BasisDescriptor::spin_only(1).unwrap();
        let sz = embed_site_operator(&basis, 0, SiteFactor::Emitter, &LocalOp::s_z()).unwrap();
        assert_eq!(sz.hermiticity_residual(), 0.0);
        let plus = embed_site_operator(&basis, 0, SiteFactor::Emitter, &LocalOp::s_plus()).unwrap();
        assert_abs_diff_eq!(plus.hermiticity_residual(), 1.0, epsilon = 1e-15);
    }
}
