//! Sparse Hermitian operators on product bases.
//!
//! Operators are assembled row by row from a list of [`Term`]s and stored in
//! compressed sparse row form. Real storage is used whenever every matrix
//! element is real in the product basis (exchange, `sz` terms and fields in
//! the x-z plane); a field with a y component switches to complex storage.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::basis::ProductBasis;
use crate::error::{Error, Result};
use crate::spin::SpinLength;

/// Rows per parallel matvec chunk; chunking is fixed so results do not depend
/// on the worker count.
const MATVEC_CHUNK: usize = 2048;

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    /// `None` when a real scalar would drop a non-zero imaginary part.
    fn from_complex(z: Complex64) -> Option<Self>;
    fn to_complex(self) -> Complex64;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs_sqr(self) -> f64;
    fn scale(self, x: f64) -> Self;
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Eigen-decomposition of a dense column-major Hermitian matrix.
    /// Eigenvalues ascending; eigenvectors column-major.
    fn dense_eigh(n: usize, a: &[Self]) -> Result<(Vec<f64>, Vec<Self>)>;
    fn dense_eigvals(n: usize, a: &[Self]) -> Result<Vec<f64>>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn from_complex(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn dense_eigh(n: usize, a: &[Self]) -> Result<(Vec<f64>, Vec<Self>)> {
        let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence { restarts: 0, residual: f64::NAN })?;
        let vals = (0..n).map(|i| evd.S()[i]).collect();
        let u = evd.U();
        let mut vecs = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vecs.push(u[(i, j)]);
            }
        }
        Ok((vals, vecs))
    }
    fn dense_eigvals(n: usize, a: &[Self]) -> Result<Vec<f64>> {
        let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::NoConvergence { restarts: 0, residual: f64::NAN })
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }
    fn dense_eigh(n: usize, a: &[Self]) -> Result<(Vec<f64>, Vec<Self>)> {
        let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence { restarts: 0, residual: f64::NAN })?;
        let vals = (0..n).map(|i| evd.S()[i].re).collect();
        let u = evd.U();
        let mut vecs = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vecs.push(u[(i, j)]);
            }
        }
        Ok((vals, vecs))
    }
    fn dense_eigvals(n: usize, a: &[Self]) -> Result<Vec<f64>> {
        let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::NoConvergence { restarts: 0, residual: f64::NAN })
    }
}

/// `<x, y>` with the conjugate on `x`. Partial sums are taken over fixed
/// chunks so the rounding pattern is independent of threading.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let partial: Vec<T> = x
        .par_chunks(MATVEC_CHUNK)
        .zip(y.par_chunks(MATVEC_CHUNK))
        .map(|(a, b)| {
            let mut acc = T::zero();
            for (u, v) in a.iter().zip(b) {
                acc += u.conj() * *v;
            }
            acc
        })
        .collect();
    partial.into_iter().fold(T::zero(), |acc, v| acc + v)
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    dot(x, x).re().sqrt()
}

/// Compressed sparse row storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let body = |(chunk_idx, out): (usize, &mut [T])| {
            let base = chunk_idx * MATVEC_CHUNK;
            for (k, yr) in out.iter_mut().enumerate() {
                let (cols, vals) = self.row(base + k);
                let mut acc = T::zero();
                for (c, v) in cols.iter().zip(vals) {
                    acc += *v * x[*c as usize];
                }
                *yr = acc;
            }
        };
        if self.dim >= 4 * MATVEC_CHUNK {
            y.par_chunks_mut(MATVEC_CHUNK).enumerate().for_each(body);
        } else {
            y.chunks_mut(MATVEC_CHUNK).enumerate().for_each(body);
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for r in 0..n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                out[r + *c as usize * n] = *v;
            }
        }
        out
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.vals.iter().map(|v| v.abs_sqr()).fold(0.0, f64::max).sqrt();
        let tol = 1e-13 * scale.max(1.0);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let mirror = self.get(*c as usize, r);
                if (*v - mirror.conj()).abs_sqr().sqrt() > tol {
                    return Err(Error::NotHermitian { row: r, col: *c as usize });
                }
            }
        }
        Ok(())
    }
}

/// One Hermitian term of a spin Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Term {
    /// `coupling * s_i . s_j`
    Heisenberg { i: usize, j: usize, coupling: f64 },
    /// `coupling * sz_i sz_j`
    SzSz { i: usize, j: usize, coupling: f64 },
    /// `b . s_site`
    Field { site: usize, b: [f64; 3] },
    /// `c * identity`
    Identity(f64),
}

impl Term {
    pub fn heisenberg(i: usize, j: usize) -> Self {
        Term::Heisenberg { i, j, coupling: 1.0 }
    }

    pub fn field(site: usize, b: [f64; 3]) -> Self {
        Term::Field { site, b }
    }

    pub fn conserves_sz(&self) -> bool {
        match self {
            Term::Field { b, .. } => b[0] == 0.0 && b[1] == 0.0,
            _ => true,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Term::Field { b, .. } => b[1] == 0.0,
            _ => true,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let check = |site: usize| {
            if site >= n {
                Err(Error::SiteOutOfRange { site, n })
            } else {
                Ok(())
            }
        };
        match *self {
            Term::Heisenberg { i, j, coupling } | Term::SzSz { i, j, coupling } => {
                check(i)?;
                check(j)?;
                if i == j {
                    return Err(Error::InvalidArgument(format!(
                        "two-site term on identical sites ({i}, {j})"
                    )));
                }
                if !coupling.is_finite() {
                    return Err(Error::InvalidArgument("non-finite coupling".into()));
                }
                Ok(())
            }
            Term::Field { site, b } => {
                check(site)?;
                if b.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite field".into()));
                }
                Ok(())
            }
            Term::Identity(c) => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("non-finite constant".into()))
                }
            }
        }
    }

    /// Calls `emit(f', <f'|T|f>)` for every state reached from full index `f`.
    fn apply(&self, basis: &ProductBasis, f: usize, emit: &mut impl FnMut(usize, Complex64)) {
        let spins = basis.spins();
        match *self {
            Term::Heisenberg { i, j, coupling } => {
                let (di, dj) = (basis.digit(f, i), basis.digit(f, j));
                let diag = coupling * spins[i].m(di) * spins[j].m(dj);
                if diag != 0.0 {
                    emit(f, Complex64::new(diag, 0.0));
                }
                // s+_i s-_j
                let a = spins[i].raise_coeff(di) * spins[j].lower_coeff(dj);
                if a != 0.0 {
                    let g = f - basis.stride(i) + basis.stride(j);
                    emit(g, Complex64::new(0.5 * coupling * a, 0.0));
                }
                // s-_i s+_j
                let a = spins[i].lower_coeff(di) * spins[j].raise_coeff(dj);
                if a != 0.0 {
                    let g = f + basis.stride(i) - basis.stride(j);
                    emit(g, Complex64::new(0.5 * coupling * a, 0.0));
                }
            }
            Term::SzSz { i, j, coupling } => {
                let diag = coupling * spins[i].m(basis.digit(f, i)) * spins[j].m(basis.digit(f, j));
                if diag != 0.0 {
                    emit(f, Complex64::new(diag, 0.0));
                }
            }
            Term::Field { site, b } => {
                let d = basis.digit(f, site);
                let s = spins[site];
                if b[2] != 0.0 && s.m(d) != 0.0 {
                    emit(f, Complex64::new(b[2] * s.m(d), 0.0));
                }
                if b[0] != 0.0 || b[1] != 0.0 {
                    let up = s.raise_coeff(d);
                    if up != 0.0 {
                        emit(f - basis.stride(site), Complex64::new(b[0], -b[1]) * (0.5 * up));
                    }
                    let down = s.lower_coeff(d);
                    if down != 0.0 {
                        emit(f + basis.stride(site), Complex64::new(b[0], b[1]) * (0.5 * down));
                    }
                }
            }
            Term::Identity(c) => {
                if c != 0.0 {
                    emit(f, Complex64::new(c, 0.0));
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SparseHermitianOperator {
    Real(Csr<f64>),
    Complex(Csr<Complex64>),
}

impl SparseHermitianOperator {
    pub fn dim(&self) -> usize {
        match self {
            Self::Real(m) => m.dim(),
            Self::Complex(m) => m.dim(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Self::Real(m) => m.nnz(),
            Self::Complex(m) => m.nnz(),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Self::Real(_))
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        match self {
            Self::Real(m) => Complex64::new(m.get(r, c), 0.0),
            Self::Complex(m) => m.get(r, c),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entry(i, i).re).sum()
    }

    /// `y = A x` for a complex vector, whatever the storage.
    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        match self {
            Self::Complex(m) => m.matvec(x, y),
            Self::Real(m) => {
                let re: Vec<f64> = x.iter().map(|z| z.re).collect();
                let im: Vec<f64> = x.iter().map(|z| z.im).collect();
                let mut yr = vec![0.0; x.len()];
                let mut yi = vec![0.0; x.len()];
                m.matvec(&re, &mut yr);
                m.matvec(&im, &mut yi);
                for (k, out) in y.iter_mut().enumerate() {
                    *out = Complex64::new(yr[k], yi[k]);
                }
            }
        }
    }

    /// Dense column-major copy.
    pub fn to_dense_complex(&self) -> Vec<Complex64> {
        match self {
            Self::Real(m) => m.to_dense().into_iter().map(|v| v.to_complex()).collect(),
            Self::Complex(m) => m.to_dense(),
        }
    }
}

/// Materializes `sum(terms)` on `basis`. Fails when the basis is an Sz
/// sector and some term does not conserve Sz.
pub fn build_operator(basis: &ProductBasis, terms: &[Term]) -> Result<SparseHermitianOperator> {
    for t in terms {
        t.validate(basis.n_sites())?;
        if basis.is_sector() && !t.conserves_sz() {
            return Err(Error::SectorNotConserved);
        }
    }
    if terms.iter().all(Term::is_real) {
        Ok(SparseHermitianOperator::Real(assemble(basis, terms)?))
    } else {
        Ok(SparseHermitianOperator::Complex(assemble(basis, terms)?))
    }
}

fn assemble<T: Scalar>(basis: &ProductBasis, terms: &[Term]) -> Result<Csr<T>> {
    let dim = basis.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut row: Vec<(u32, Complex64)> = Vec::new();
    row_ptr.push(0);
    for r in 0..dim {
        let f = basis.full_index(r);
        row.clear();
        for t in terms {
            // Terms are Hermitian, so <f|T|g> = conj(<g|T|f>).
            t.apply(basis, f, &mut |g, a| {
                let c = basis
                    .index_of(g)
                    .expect("Sz-conserving term left its sector");
                row.push((c as u32, a.conj()));
            });
        }
        row.sort_by_key(|&(c, _)| c);
        let mut k = 0;
        while k < row.len() {
            let c = row[k].0;
            let mut acc = Complex64::new(0.0, 0.0);
            while k < row.len() && row[k].0 == c {
                acc += row[k].1;
                k += 1;
            }
            if acc.norm_sqr() != 0.0 {
                cols.push(c);
                vals.push(T::from_complex(acc).ok_or(Error::NotHermitian {
                    row: r,
                    col: c as usize,
                })?);
            }
        }
        row_ptr.push(cols.len());
    }
    let csr = Csr {
        dim,
        row_ptr,
        cols,
        vals,
    };
    csr.check_hermitian()?;
    Ok(csr)
}

/// Single term on `basis`, the identity on every other site.
pub fn embed_term(basis: &ProductBasis, term: Term) -> Result<SparseHermitianOperator> {
    build_operator(basis, &[term])
}

/// `S^2 = (sum_i s_i)^2`.
pub fn total_spin_squared(basis: &ProductBasis) -> Result<SparseHermitianOperator> {
    let spins = basis.spins();
    let mut terms = vec![Term::Identity(spins.iter().map(|s| s.casimir()).sum())];
    for i in 0..spins.len() {
        for j in i + 1..spins.len() {
            terms.push(Term::Heisenberg {
                i,
                j,
                coupling: 2.0,
            });
        }
    }
    build_operator(basis, &terms)
}

/// One diagonal block of a (possibly sector-decomposed) operator.
#[derive(Clone, Debug)]
pub struct Block {
    pub basis: Arc<ProductBasis>,
    pub matrix: SparseHermitianOperator,
}

/// An operator on the product space of `spins`, stored as Sz-sector blocks
/// when every term conserves total Sz, otherwise as one full-space block.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    spins: Vec<SpinLength>,
    blocks: Vec<Block>,
}

impl BlockOperator {
    pub fn build(spins: &[SpinLength], terms: &[Term]) -> Result<Self> {
        if terms.iter().all(Term::conserves_sz) {
            let blocks = ProductBasis::sectors(spins)
                .into_iter()
                .map(|basis| {
                    let matrix = build_operator(&basis, terms)?;
                    Ok(Block {
                        basis: Arc::new(basis),
                        matrix,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Self {
                spins: spins.to_vec(),
                blocks,
            })
        } else {
            Self::build_full(spins, terms)
        }
    }

    pub fn build_full(spins: &[SpinLength], terms: &[Term]) -> Result<Self> {
        let basis = ProductBasis::full(spins);
        let matrix = build_operator(&basis, terms)?;
        Ok(Self {
            spins: spins.to_vec(),
            blocks: vec![Block {
                basis: Arc::new(basis),
                matrix,
            }],
        })
    }

    pub fn spins(&self) -> &[SpinLength] {
        &self.spins
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_sector_blocked(&self) -> bool {
        self.blocks.iter().any(|b| b.basis.is_sector())
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.basis.dim()).sum()
    }
}
