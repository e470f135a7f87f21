//! Composite Hilbert spaces of qubits and truncated bosonic modes.
//!
//! Factor ordering follows the Kronecker convention: factor 0 is the most
//! significant index. Builders place the control qubit first, then the damped
//! mode(s), then the target factors.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{c, cr, hermitize, max_abs, trace_re, Ket, Mat, Real, C};

/// One tensor factor of a composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Qubit,
    /// Bosonic mode truncated to Fock states `0..cutoff`.
    Boson { cutoff: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Qubit => 2,
            Factor::Boson { cutoff } => cutoff,
        }
    }
}

/// Ordered list of factors defining a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    factors: Vec<Factor>,
}

impl SpaceSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("space needs at least one factor".into()));
        }
        for f in &factors {
            if let Factor::Boson { cutoff } = *f {
                if cutoff < 2 {
                    return Err(Error::InvalidCutoff(cutoff));
                }
            }
        }
        Ok(Self { factors })
    }

    pub fn qubit() -> Self {
        Self { factors: vec![Factor::Qubit] }
    }

    pub fn boson(cutoff: usize) -> Result<Self> {
        Self::new(vec![Factor::Boson { cutoff }])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn factor(&self, site: usize) -> Result<Factor> {
        self.factors
            .get(site)
            .copied()
            .ok_or(Error::SiteOutOfRange { site, len: self.len() })
    }

    /// Space formed by the listed factors, in ascending index order.
    pub fn subspace(&self, keep: &[usize]) -> Result<SpaceSpec> {
        let keep = self.normalize_sites(keep)?;
        Ok(SpaceSpec { factors: keep.iter().map(|&k| self.factors[k]).collect() })
    }

    pub fn tensor(&self, other: &SpaceSpec) -> SpaceSpec {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        SpaceSpec { factors }
    }

    /// Flat index of a product basis state given per-factor levels.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: levels.len() });
        }
        let mut idx = 0;
        for (f, &l) in self.factors.iter().zip(levels) {
            if l >= f.dim() {
                return Err(Error::InvalidParameter(format!("level {l} exceeds factor dimension {}", f.dim())));
            }
            idx = idx * f.dim() + l;
        }
        Ok(idx)
    }

    /// Inverse of [`SpaceSpec::index_of`].
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            levels[k] = index % f.dim();
            index /= f.dim();
        }
        levels
    }

    pub(crate) fn normalize_sites(&self, sites: &[usize]) -> Result<Vec<usize>> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("empty factor selection".into()));
        }
        let mut out = sites.to_vec();
        out.sort_unstable();
        out.dedup();
        if let Some(&bad) = out.iter().find(|&&s| s >= self.len()) {
            return Err(Error::SiteOutOfRange { site: bad, len: self.len() });
        }
        Ok(out)
    }
}

/// Dense operator tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Real> {
    space: SpaceSpec,
    matrix: Mat<T>,
}

impl<T: Real> Operator<T> {
    pub fn new(space: SpaceSpec, matrix: Mat<T>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::identity(d, d) }
    }

    pub fn zeros(space: &SpaceSpec) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::zeros(d, d) }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * cr(s) }
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * s }
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &rhs.matrix })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &rhs.matrix })
    }

    /// `[self, rhs]`
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        let m = &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix;
        Ok(Self { space: self.space.clone(), matrix: m })
    }

    pub fn max_norm(&self) -> T {
        max_abs(&self.matrix)
    }

    /// `max |H - H†|`
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for j in 0..n {
            for i in j..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).modulus());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() < tol
    }

    /// Kronecker product; `self` becomes the leading factors.
    pub fn tensor(&self, rhs: &Self) -> Self {
        Self { space: self.space.tensor(&rhs.space), matrix: self.matrix.kronecker(&rhs.matrix) }
    }

    pub fn apply(&self, ket: &StateVector<T>) -> Result<StateVector<T>> {
        if ket.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(StateVector { space: self.space.clone(), amplitudes: &self.matrix * &ket.amplitudes })
    }

    /// `⟨ψ|O|ψ⟩`
    pub fn expectation(&self, ket: &StateVector<T>) -> Result<C<T>> {
        let applied = self.apply(ket)?;
        Ok(ket.amplitudes.dotc(&applied.amplitudes))
    }

    fn same_space(&self, rhs: &Self) -> Result<()> {
        if self.space != rhs.space {
            Err(Error::SpaceMismatch)
        } else {
            Ok(())
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a, T: Real> $tr<&'a Operator<T>> for &'a Operator<T> {
            type Output = Operator<T>;
            fn $method(self, rhs: &'a Operator<T>) -> Operator<T> {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator { space: self.space.clone(), matrix: &self.matrix $op &rhs.matrix }
            }
        }
        impl<T: Real> $tr<Operator<T>> for Operator<T> {
            type Output = Operator<T>;
            fn $method(self, rhs: Operator<T>) -> Operator<T> {
                (&self) $op (&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl<T: Real> Mul<T> for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: T) -> Operator<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Mul<T> for Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: T) -> Operator<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator { space: self.space, matrix: -self.matrix }
    }
}

/// Ladder operators `(a, a†, a†a)` of a single mode truncated at `n_c` levels.
pub fn fock_ops<T: Real>(n_c: usize) -> Result<(Operator<T>, Operator<T>, Operator<T>)> {
    let space = SpaceSpec::boson(n_c)?;
    let mut a = DMatrix::zeros(n_c, n_c);
    for m in 0..n_c - 1 {
        a[(m, m + 1)] = cr(T::from_usize_lossy(m + 1).sqrt());
    }
    let a_dag = a.adjoint();
    let n = DMatrix::from_diagonal(&DVector::from_fn(n_c, |m, _| cr(T::from_usize_lossy(m))));
    Ok((
        Operator { space: space.clone(), matrix: a },
        Operator { space: space.clone(), matrix: a_dag },
        Operator { space, matrix: n },
    ))
}

/// Single-qubit operators in the basis `{|↑⟩ = |D⟩, |↓⟩ = |A⟩}`, with
/// `σz|↑⟩ = +|↑⟩` and `σ± = (σx ± iσy)/2`.
#[derive(Clone, Debug)]
pub struct Pauli<T: Real> {
    pub x: Operator<T>,
    pub y: Operator<T>,
    pub z: Operator<T>,
    pub plus: Operator<T>,
    pub minus: Operator<T>,
}

pub fn pauli_ops<T: Real>() -> Pauli<T> {
    let (o, l, i) = (T::zero(), T::one(), T::one());
    let m = |e: [C<T>; 4]| Operator {
        space: SpaceSpec::qubit(),
        matrix: DMatrix::from_row_slice(2, 2, &e),
    };
    Pauli {
        x: m([cr(o), cr(l), cr(l), cr(o)]),
        y: m([cr(o), c(o, -i), c(o, i), cr(o)]),
        z: m([cr(l), cr(o), cr(o), cr(-l)]),
        plus: m([cr(o), cr(l), cr(o), cr(o)]),
        minus: m([cr(o), cr(o), cr(l), cr(o)]),
    }
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on factor `site`.
pub fn embed<T: Real>(op: &Operator<T>, site: usize, space: &SpaceSpec) -> Result<Operator<T>> {
    embed_product(&[(site, op)], space)
}

/// Tensor product of local operators on distinct factors, identity elsewhere.
pub fn embed_product<T: Real>(locals: &[(usize, &Operator<T>)], space: &SpaceSpec) -> Result<Operator<T>> {
    let mut slots: Vec<Option<&Mat<T>>> = vec![None; space.len()];
    for &(site, op) in locals {
        let f = space.factor(site)?;
        if op.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), found: op.dim() });
        }
        if slots[site].is_some() {
            return Err(Error::InvalidParameter(format!("factor {site} addressed twice")));
        }
        slots[site] = Some(&op.matrix);
    }
    let mut acc: Mat<T> = DMatrix::identity(1, 1);
    for (slot, f) in slots.iter().zip(space.factors()) {
        acc = match slot {
            Some(m) => acc.kronecker(*m),
            None => acc.kronecker(&DMatrix::identity(f.dim(), f.dim())),
        };
    }
    Operator::new(space.clone(), acc)
}

/// `exp(α a† − α* a)` on a mode truncated at `n_c` levels.
///
/// Truncation breaks unitarity once the coherent amplitude reaches the
/// cutoff; a warning is logged when `|α|² > n_c / 4`.
pub fn displacement<T: Real>(alpha: C<T>, n_c: usize) -> Result<Operator<T>> {
    let (a, a_dag, _) = fock_ops::<T>(n_c)?;
    if alpha.norm_sqr() > T::from_usize_lossy(n_c) / T::lit(4.0) {
        log::warn!(
            "displacement |alpha|^2 = {} is large for cutoff {n_c}; unitarity degrades",
            alpha.norm_sqr()
        );
    }
    let gen = a_dag.matrix * alpha - a.matrix * alpha.conj();
    Operator::new(a.space, gen.exp())
}

/// Normalized-or-not state vector tagged with its space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    space: SpaceSpec,
    amplitudes: Ket<T>,
}

impl<T: Real> StateVector<T> {
    pub fn new(space: SpaceSpec, amplitudes: Ket<T>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        Ok(Self { space, amplitudes })
    }

    /// Computational basis state with the given per-factor levels.
    pub fn basis(space: &SpaceSpec, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        let mut v = DVector::zeros(space.dim());
        v[idx] = cr(T::one());
        Ok(Self { space: space.clone(), amplitudes: v })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &Ket<T> {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self.amplitudes.unscale_mut(n);
        }
        self
    }

    pub fn tensor(&self, rhs: &Self) -> Self {
        Self { space: self.space.tensor(&rhs.space), amplitudes: self.amplitudes.kronecker(&rhs.amplitudes) }
    }

    /// `⟨self|rhs⟩`
    pub fn inner(&self, rhs: &Self) -> Result<C<T>> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&rhs.amplitudes))
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        Self { space: self.space.clone(), amplitudes: &self.amplitudes * s }
    }

    pub fn projector(&self) -> Mat<T> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Tolerances for the density-matrix contract.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix: Hermitian, unit trace, positive semidefinite up to
/// truncation/roundoff tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    space: SpaceSpec,
    matrix: Mat<T>,
}

/// Measured deviations from the density-matrix contract.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDiagnostics<T> {
    pub hermiticity_error: T,
    pub trace: T,
    pub min_eigenvalue: T,
}

impl<T: Real> DensityMatrix<T> {
    /// Validating constructor.
    pub fn new(space: SpaceSpec, matrix: Mat<T>) -> Result<Self> {
        let rho = Self::new_unchecked(space, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked only; used where the contract is monitored rather than enforced.
    pub fn new_unchecked(space: SpaceSpec, matrix: Mat<T>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn pure(state: &StateVector<T>) -> Result<Self> {
        let psi = state.clone().normalized();
        Ok(Self { space: psi.space.clone(), matrix: psi.projector() })
    }

    /// `I/d`
    pub fn maximally_mixed(space: &SpaceSpec) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::identity(d, d) * cr(T::one() / T::from_usize_lossy(d)) }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        trace_re(&self.matrix)
    }

    pub fn purity(&self) -> T {
        // Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
        self.matrix.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn min_eigenvalue(&self) -> T {
        let mut h = self.matrix.clone();
        hermitize(&mut h);
        h.symmetric_eigenvalues().iter().copied().fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
    }

    pub fn diagnostics(&self) -> DensityDiagnostics<T> {
        let herm = Operator { space: self.space.clone(), matrix: self.matrix.clone() }.hermiticity_error();
        DensityDiagnostics { hermiticity_error: herm, trace: self.trace(), min_eigenvalue: self.min_eigenvalue() }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.hermiticity_error >= T::lit(HERMITIAN_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (error {})", d.hermiticity_error)));
        }
        if (d.trace - T::one()).abs() > T::lit(TRACE_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("trace {} differs from 1", d.trace)));
        }
        if d.min_eigenvalue < -T::lit(POSITIVITY_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {}", d.min_eigenvalue)));
        }
        Ok(())
    }

    /// `Re Tr(O ρ)`
    pub fn expectation(&self, op: &Operator<T>) -> Result<T> {
        if op.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for k in 0..n {
                acc += (op.matrix[(i, k)] * self.matrix[(k, i)]).re;
            }
        }
        Ok(acc)
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn overlap(&self, state: &StateVector<T>) -> Result<T> {
        if state.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(state.amplitudes.dotc(&(&self.matrix * &state.amplitudes)).re)
    }

    pub fn tensor(&self, rhs: &Self) -> Self {
        Self { space: self.space.tensor(&rhs.space), matrix: self.matrix.kronecker(&rhs.matrix) }
    }

    /// `½ Σ |λ_i(ρ − σ)|`
    pub fn trace_distance(&self, rhs: &Self) -> Result<T> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch);
        }
        let mut diff = &self.matrix - &rhs.matrix;
        hermitize(&mut diff);
        let s = diff.symmetric_eigenvalues().iter().fold(T::zero(), |a, l| a + l.abs());
        Ok(s * T::lit(0.5))
    }

    /// Conjugation `U ρ U†`.
    pub fn conjugate_by(&self, u: &Operator<T>) -> Result<Self> {
        if u.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space: self.space.clone(), matrix: &u.matrix * &self.matrix * u.matrix.adjoint() })
    }
}

/// Reduced density matrix on the factors in `keep` (a set; order ignored).
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let (space, m) = partial_trace_matrix(&rho.matrix, &rho.space, keep)?;
    Ok(DensityMatrix { space, matrix: m })
}

/// Partial trace on a raw matrix; returns the kept space and reduced matrix.
pub fn partial_trace_matrix<T: Real>(m: &Mat<T>, space: &SpaceSpec, keep: &[usize]) -> Result<(SpaceSpec, Mat<T>)> {
    let map = TraceMap::new(space, keep)?;
    Ok((map.kept.clone(), map.apply(m)))
}

/// Precomputed index bookkeeping for repeated partial traces over one split.
#[derive(Clone, Debug)]
pub struct TraceMap {
    kept: SpaceSpec,
    // full index -> (kept index, traced index)
    split: Vec<(usize, usize)>,
    traced_dim: usize,
}

impl TraceMap {
    pub fn new(space: &SpaceSpec, keep: &[usize]) -> Result<Self> {
        let keep = space.normalize_sites(keep)?;
        let kept = space.subspace(&keep)?;
        let dims = space.dims();
        let traced_dim = space.dim() / kept.dim();
        let split = (0..space.dim())
            .map(|idx| {
                let levels = space.levels_of(idx);
                let (mut k, mut t) = (0, 0);
                for (site, &l) in levels.iter().enumerate() {
                    if keep.binary_search(&site).is_ok() {
                        k = k * dims[site] + l;
                    } else {
                        t = t * dims[site] + l;
                    }
                }
                (k, t)
            })
            .collect();
        Ok(Self { kept, split, traced_dim })
    }

    pub fn kept_space(&self) -> &SpaceSpec {
        &self.kept
    }

    pub fn apply<T: Real>(&self, m: &Mat<T>) -> Mat<T> {
        let dk = self.kept.dim();
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); self.traced_dim];
        for (full, &(k, t)) in self.split.iter().enumerate() {
            groups[t].push((full, k));
        }
        let mut out = DMatrix::zeros(dk, dk);
        for g in &groups {
            for &(fj, kj) in g {
                for &(fi, ki) in g {
                    out[(ki, kj)] += m[(fi, fj)];
                }
            }
        }
        out
    }
}
