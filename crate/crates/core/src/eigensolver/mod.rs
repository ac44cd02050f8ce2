//! Ground states, low spectra and expectation values.
//!
//! [`ground_state`] runs Lanczos on every Sz block of a [`BlockOperator`]
//! and reports the global minimum together with the first gap, counted with
//! multiplicity across blocks. Small blocks are diagonalized densely.

mod lanczos;

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::ProductBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::FieldTerm;
use crate::operator::{
    build_operator, dot, Block, BlockOperator, Csr, Scalar, SparseHermitianOperator, Term,
};
use crate::state::{Amplitudes, State};

pub use crate::state::expectation;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Required residual `||H v - E v||`.
    pub tol: f64,
    /// Krylov dimension before an explicit restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Relative gap below which the ground state counts as degenerate.
    pub degeneracy_tol: f64,
    /// Blocks up to this dimension are diagonalized densely.
    pub dense_below: usize,
    pub dense_limit: usize,
    pub sector_dense_limit: usize,
    pub degenerate_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_krylov: 250,
            max_restarts: 40,
            seed: 42,
            degeneracy_tol: 1e-9,
            dense_below: 64,
            dense_limit: 4096,
            sector_dense_limit: 8192,
            degenerate_cap: 16,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Always use Lanczos, whatever the block size.
    pub fn lanczos_only(mut self) -> Self {
        self.dense_below = 0;
        self
    }

    fn degeneracy_window(&self, energy: f64) -> f64 {
        self.degeneracy_tol * energy.abs().max(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub energy: f64,
    pub state: State,
    /// `E1 - E0`, infinite for a one-dimensional space.
    pub gap: f64,
    pub degenerate: bool,
    /// Matrix-vector products spent (zero for dense blocks).
    pub iterations: usize,
    pub residual: f64,
}

struct Pair {
    value: f64,
    amps: Amplitudes,
    matvecs: usize,
    residual: f64,
}

trait Wrap: Scalar {
    fn wrap(v: Vec<Self>) -> Amplitudes;
    fn unwrap(a: &Amplitudes) -> Option<&[Self]>;
}

impl Wrap for f64 {
    fn wrap(v: Vec<Self>) -> Amplitudes {
        Amplitudes::Real(v)
    }
    fn unwrap(a: &Amplitudes) -> Option<&[Self]> {
        match a {
            Amplitudes::Real(v) => Some(v),
            Amplitudes::Complex(_) => None,
        }
    }
}

impl Wrap for Complex64 {
    fn wrap(v: Vec<Self>) -> Amplitudes {
        Amplitudes::Complex(v)
    }
    fn unwrap(a: &Amplitudes) -> Option<&[Self]> {
        match a {
            Amplitudes::Complex(v) => Some(v),
            Amplitudes::Real(_) => None,
        }
    }
}

/// Previous eigenvectors per block, reused as Lanczos starting vectors when
/// a sequence of nearby operators is solved (self-consistent iterations).
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    blocks: Vec<Vec<Amplitudes>>,
}

impl WarmStart {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, block: usize) -> &[Amplitudes] {
        self.blocks.get(block).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn set(&mut self, block: usize, vectors: Vec<Amplitudes>) {
        if self.blocks.len() <= block {
            self.blocks.resize(block + 1, Vec::new());
        }
        self.blocks[block] = vectors;
    }
}

fn block_rng(opts: &SolverOptions, block: usize, round: usize) -> ChaCha8Rng {
    let mix = (block as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (round as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    ChaCha8Rng::seed_from_u64(opts.seed ^ mix)
}

/// Extends `have` with the next eigenpairs of one block: stops at `count`
/// pairs or as soon as a value exceeds `ceiling` (that pair is kept).
fn block_pairs(
    block: &Block,
    index: usize,
    have: Vec<Pair>,
    count: usize,
    ceiling: Option<f64>,
    opts: &SolverOptions,
    warm: &[Amplitudes],
) -> Result<Vec<Pair>> {
    match &block.matrix {
        SparseHermitianOperator::Real(m) => pairs_generic(m, index, have, count, ceiling, opts, warm),
        SparseHermitianOperator::Complex(m) => {
            pairs_generic(m, index, have, count, ceiling, opts, warm)
        }
    }
}

fn pairs_generic<T: Wrap>(
    m: &Csr<T>,
    index: usize,
    mut out: Vec<Pair>,
    count: usize,
    ceiling: Option<f64>,
    opts: &SolverOptions,
    warm: &[Amplitudes],
) -> Result<Vec<Pair>> {
    let n = m.dim();
    let count = count.min(n);
    let done = |out: &Vec<Pair>| {
        out.len() >= count || matches!((ceiling, out.last()), (Some(c), Some(p)) if p.value > c)
    };
    if done(&out) {
        return Ok(out);
    }
    if n <= opts.dense_below {
        let (vals, vecs) = T::dense_eigh(n, &m.to_dense())?;
        for k in out.len()..n {
            if done(&out) {
                break;
            }
            let v = vecs[k * n..(k + 1) * n].to_vec();
            let mut w = vec![T::zero(); n];
            m.matvec(&v, &mut w);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (*a - b.scale(vals[k])).abs_sqr())
                .sum::<f64>()
                .sqrt();
            out.push(Pair {
                value: vals[k],
                amps: T::wrap(v),
                matvecs: 0,
                residual,
            });
        }
        return Ok(out);
    }
    let mut locked: Vec<Vec<T>> = out
        .iter()
        .map(|p| T::unwrap(&p.amps).expect("storage matches the block").to_vec())
        .collect();
    while !done(&out) {
        let mut rng = block_rng(opts, index, locked.len());
        let start = warm.get(locked.len()).and_then(T::unwrap);
        let pair = lanczos::lowest(m, &locked, start, &mut rng, opts)?;
        locked.push(pair.vector.clone());
        out.push(Pair {
            value: pair.value,
            amps: T::wrap(pair.vector),
            matvecs: pair.matvecs,
            residual: pair.residual,
        });
    }
    Ok(out)
}

/// Lowest eigenvalue over all blocks, its vector, and the first gap.
pub fn ground_state(op: &BlockOperator, opts: &SolverOptions) -> Result<GroundStateResult> {
    ground_state_warm(op, opts, None)
}

/// [`ground_state`] seeded with (and updating) the vectors in `warm`.
pub fn ground_state_warm(
    op: &BlockOperator,
    opts: &SolverOptions,
    mut warm: Option<&mut WarmStart>,
) -> Result<GroundStateResult> {
    let blocks = op.blocks();
    let mut lowest: Vec<Vec<Pair>> = Vec::with_capacity(blocks.len());
    let mut iterations = 0;
    for (index, block) in blocks.iter().enumerate() {
        if block.basis.dim() == 0 {
            lowest.push(Vec::new());
            continue;
        }
        let hint = warm.as_deref().map(|w| w.get(index)).unwrap_or(&[]);
        let pairs = block_pairs(block, index, Vec::new(), 1, None, opts, hint)?;
        iterations += pairs[0].matvecs;
        lowest.push(pairs);
    }
    let (winner, energy) = lowest
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.first().map(|p| (i, p.value)))
        .fold(None::<(usize, f64)>, |best, (i, e)| match best {
            Some((_, b)) if b <= e => best,
            _ => Some((i, e)),
        })
        .ok_or_else(|| Error::InvalidArgument("operator has dimension zero".into()))?;

    let mut second = lowest
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != winner)
        .filter_map(|(_, p)| p.first().map(|p| p.value))
        .fold(f64::INFINITY, f64::min);
    if blocks[winner].basis.dim() >= 2 {
        let have = std::mem::take(&mut lowest[winner]);
        let hint = warm.as_deref().map(|w| w.get(winner)).unwrap_or(&[]);
        let pairs = block_pairs(&blocks[winner], winner, have, 2, None, opts, hint)?;
        iterations += pairs[1].matvecs;
        second = second.min(pairs[1].value);
        lowest[winner] = pairs;
    }
    let gap = second - energy;
    let (value_residual, amps) = {
        let p = &lowest[winner][0];
        (p.residual, p.amps.clone())
    };
    if let Some(w) = warm.as_deref_mut() {
        for (index, pairs) in lowest.into_iter().enumerate() {
            w.set(index, pairs.into_iter().map(|p| p.amps).collect());
        }
    }
    Ok(GroundStateResult {
        energy,
        state: State::new(blocks[winner].basis.clone(), amps)?,
        gap,
        degenerate: gap < opts.degeneracy_window(energy),
        iterations,
        residual: value_residual,
    })
}

/// Full ascending spectrum of one operator, `dim <= dense_limit`.
pub fn dense_spectrum(op: &SparseHermitianOperator, dense_limit: usize) -> Result<Vec<f64>> {
    let n = op.dim();
    if n > dense_limit {
        return Err(Error::DenseLimit {
            dim: n,
            limit: dense_limit,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    match op {
        SparseHermitianOperator::Real(m) => f64::dense_eigvals(n, &m.to_dense()),
        SparseHermitianOperator::Complex(m) => Complex64::dense_eigvals(n, &m.to_dense()),
    }
}

/// Union of the block spectra, ascending. Each block must fit `block_limit`.
pub fn block_spectrum(op: &BlockOperator, block_limit: usize) -> Result<Vec<f64>> {
    let mut all = Vec::with_capacity(op.total_dim());
    for b in op.blocks() {
        all.extend(dense_spectrum(&b.matrix, block_limit)?);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

#[derive(Clone, Debug)]
pub struct DegenerateSelection {
    pub energy: f64,
    pub state: State,
    /// `<op_select>` in the selected state.
    pub expectation: f64,
    pub manifold_dim: usize,
    pub ground: GroundStateResult,
}

/// `sum_k b_k . <s_site_k>`
pub fn field_expectation(state: &State, fields: &[FieldTerm]) -> f64 {
    fields
        .iter()
        .map(|f| {
            let s = state.site_expectation(f.site);
            f.b[0] * s[0] + f.b[1] * s[1] + f.b[2] * s[2]
        })
        .sum()
}

/// Resolves a degenerate ground manifold by diagonalizing `op_select`
/// (a sum of single-site couplings `b . s`) inside it and returning the
/// eigenvector with the lowest expectation, i.e. the ground state reached
/// in the limit of an infinitesimal extra field along `op_select`.
/// Non-degenerate ground states pass through unchanged.
pub fn degenerate_subspace_expectations(
    op: &BlockOperator,
    op_select: &[FieldTerm],
    opts: &SolverOptions,
) -> Result<DegenerateSelection> {
    select_ground_state(op, op_select, opts, None)
}

/// [`degenerate_subspace_expectations`] with warm starts for the ground
/// state search.
pub fn select_ground_state(
    op: &BlockOperator,
    op_select: &[FieldTerm],
    opts: &SolverOptions,
    warm: Option<&mut WarmStart>,
) -> Result<DegenerateSelection> {
    let ground = ground_state_warm(op, opts, warm)?;
    if !ground.degenerate {
        return Ok(DegenerateSelection {
            energy: ground.energy,
            expectation: field_expectation(&ground.state, op_select),
            state: ground.state.clone(),
            manifold_dim: 1,
            ground,
        });
    }
    let ceiling = ground.energy + opts.degeneracy_window(ground.energy);
    let mut manifold: Vec<State> = Vec::new();
    for (index, block) in op.blocks().iter().enumerate() {
        if block.basis.dim() == 0 {
            continue;
        }
        let remaining = opts.degenerate_cap + 1 - manifold.len().min(opts.degenerate_cap + 1);
        let pairs = block_pairs(block, index, Vec::new(), remaining.max(1), Some(ceiling), opts, &[])?;
        for p in pairs.into_iter().filter(|p| p.value <= ceiling) {
            manifold.push(State::new(block.basis.clone(), p.amps)?);
        }
        if manifold.len() > opts.degenerate_cap {
            return Err(Error::DegeneracyCap {
                cap: opts.degenerate_cap,
            });
        }
    }

    let full = Arc::new(ProductBasis::full(op.spins()));
    let vectors: Vec<Vec<Complex64>> = manifold
        .iter()
        .map(|s| s.to_full().amplitudes().to_complex())
        .collect();
    let terms: Vec<Term> = op_select.iter().map(|f| Term::field(f.site, f.b)).collect();
    let select = build_operator(&full, &terms)?;
    let k = vectors.len();
    let images: Vec<Vec<Complex64>> = vectors
        .iter()
        .map(|v| {
            let mut y = vec![Complex64::new(0.0, 0.0); v.len()];
            select.matvec_complex(v, &mut y);
            y
        })
        .collect();
    let mut small = vec![Complex64::new(0.0, 0.0); k * k];
    for a in 0..k {
        for b in 0..k {
            small[a + b * k] = dot(&vectors[a], &images[b]);
        }
    }
    let (vals, coefs) = Complex64::dense_eigh(k, &small)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); full.dim()];
    for (a, v) in vectors.iter().enumerate() {
        let c = coefs[a];
        for (p, x) in psi.iter_mut().zip(v) {
            *p += c * *x;
        }
    }
    // remove the arbitrary global phase, then drop to real storage if possible
    let pivot = psi
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in psi.iter_mut() {
        *z = *z * phase / nrm;
    }
    let amps = if psi.iter().all(|z| z.im.abs() < 1e-13) {
        Amplitudes::Real(psi.iter().map(|z| z.re).collect())
    } else {
        Amplitudes::Complex(psi)
    };
    let state = State::new(full, amps)?;
    Ok(DegenerateSelection {
        energy: ground.energy,
        expectation: vals[0],
        state,
        manifold_dim: k,
        ground,
    })
}
