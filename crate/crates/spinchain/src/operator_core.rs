//! Operator substrate: dense complex chain operators, sparse Pauli-string
//! operators with a mask-based matvec, and the two Hermitian eigensolvers
//! (dense for full spectra, Lanczos for ground states out of dense reach).
//!
//! Basis conventions used by every module downstream: site p (1-based) maps
//! to bit (sites - p) of the basis index, so site 1 is the most significant
//! bit; spin up is bit value 0. A Pauli string is stored as a flip mask (X/Y
//! sites) plus a parity mask (Y/Z sites), because sigma^y contributes both a
//! flip and a source-dependent sign: the amplitude of any string on a basis
//! state is coeff * i^(#Y) * (-1)^popcount(state & parity_mask).

use crate::C64;
use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("dimension {0} is not a power of two")]
    BadDimension(usize),
    #[error("operator flagged hermitian but max |M - M^+| = {resid:.3e} exceeds {tol:.3e}")]
    NotHermitian { resid: f64, tol: f64 },
    #[error("site index out of range: ({i}, {j}) with {sites} sites")]
    SiteOutOfRange { i: usize, j: usize, sites: usize },
    #[error("embedding requires two distinct sites, got i = j = {0}")]
    EqualSites(usize),
    #[error("dense eigensolver limited to dimension {limit}, got {dim}")]
    TooLargeForDense { dim: usize, limit: usize },
    #[error("Lanczos did not converge: best value {best}, residual bound {bound:.3e} after {iterations} iterations")]
    LanczosNoConvergence {
        best: f64,
        bound: f64,
        iterations: usize,
    },
}

/// Dense complex operator on the 2^sites-dimensional chain Hilbert space.
///
/// The dimension is always a power of two (4^N for whole-chain operators;
/// embeddings on 3-site auxiliary spaces also pass through here).
#[derive(Clone, Debug)]
pub struct ChainOperator {
    dim: usize,
    mat: DMatrix<C64>,
    hermitian_hint: bool,
}

impl ChainOperator {
    /// Wraps a dense matrix, enforcing the power-of-two dimension and, when
    /// `hermitian_hint` is set, Hermiticity to 1e-12 relative.
    pub fn new(mat: DMatrix<C64>, hermitian_hint: bool) -> Result<Self, OperatorError> {
        let dim = mat.nrows();
        if dim == 0 || mat.ncols() != dim || !dim.is_power_of_two() {
            return Err(OperatorError::BadDimension(dim));
        }
        let op = ChainOperator {
            dim,
            mat,
            hermitian_hint,
        };
        if hermitian_hint {
            let scale = op.max_abs();
            let resid = op.hermiticity_residual();
            let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
            if resid > tol {
                return Err(OperatorError::NotHermitian { resid, tol });
            }
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self, OperatorError> {
        Self::new(DMatrix::identity(dim, dim), true)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    #[inline]
    pub fn mat(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_mat(self) -> DMatrix<C64> {
        self.mat
    }

    /// Largest entry magnitude; the norm all relative comparisons use.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.mat[(r, c)] - self.mat[(c, r)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Largest entry magnitude of an arbitrary dense matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator on two spin-1/2 factors, stored as a dense 4x4 matrix with the
/// first factor on the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalOperator {
    pub m: Matrix4<C64>,
}

impl LocalOperator {
    pub fn new(m: Matrix4<C64>) -> Self {
        LocalOperator { m }
    }

    pub fn identity() -> Self {
        LocalOperator {
            m: Matrix4::identity(),
        }
    }

    /// The swap operator P(x tensor y) = y tensor x.
    pub fn permutation() -> Self {
        let mut m = Matrix4::zeros();
        for a in 0..2usize {
            for b in 0..2usize {
                m[(b << 1 | a, a << 1 | b)] = C64::new(1.0, 0.0);
            }
        }
        LocalOperator { m }
    }

    /// Tensor product s tensor t of two single-site operators.
    pub fn kron(s: &Matrix2<C64>, t: &Matrix2<C64>) -> Self {
        let mut m = Matrix4::zeros();
        for a in 0..2usize {
            for b in 0..2usize {
                for c in 0..2usize {
                    for d in 0..2usize {
                        m[(a << 1 | b, c << 1 | d)] = s[(a, c)] * t[(b, d)];
                    }
                }
            }
        }
        LocalOperator { m }
    }

    /// Entrywise transpose on the first factor only.
    pub fn partial_transpose_first(&self) -> Self {
        let mut m = Matrix4::zeros();
        for a in 0..2usize {
            for b in 0..2usize {
                for c in 0..2usize {
                    for d in 0..2usize {
                        m[(a << 1 | b, c << 1 | d)] = self.m[(c << 1 | b, a << 1 | d)];
                    }
                }
            }
        }
        LocalOperator { m }
    }
}

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    )
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    )
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    )
}

/// Places a two-factor operator on chain sites (i, j), identity elsewhere.
///
/// The first factor of `op` lands on site i, the second on site j; i and j
/// need not be adjacent or ordered.
pub fn embed_local(
    op: &LocalOperator,
    i: usize,
    j: usize,
    sites: usize,
) -> Result<ChainOperator, OperatorError> {
    if i == j {
        return Err(OperatorError::EqualSites(i));
    }
    if i < 1 || j < 1 || i > sites || j > sites {
        return Err(OperatorError::SiteOutOfRange { i, j, sites });
    }
    let dim = 1usize << sites;
    let bi = sites - i;
    let bj = sites - j;
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let a = (s >> bi) & 1;
        let b = (s >> bj) & 1;
        let col_pair = a << 1 | b;
        for ap in 0..2usize {
            for bp in 0..2usize {
                let amp = op.m[(ap << 1 | bp, col_pair)];
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let t = (s & !(1 << bi) & !(1 << bj)) | (ap << bi) | (bp << bj);
                out[(t, s)] += amp;
            }
        }
    }
    ChainOperator::new(out, false)
}

/// Eigendecomposition of a Hermitian chain operator.
pub struct HermitianEigs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub vectors: DMatrix<C64>,
}

const DENSE_EIG_LIMIT: usize = 1 << 12;

/// Dense Hermitian eigensolver; eigenvalues come back ascending with
/// matching eigenvector columns.
pub fn hermitian_eigs(op: &ChainOperator) -> Result<HermitianEigs, OperatorError> {
    if !op.hermitian_hint() {
        let resid = op.hermiticity_residual();
        let tol = 1e-12 * op.max_abs().max(f64::MIN_POSITIVE);
        if resid > tol {
            return Err(OperatorError::NotHermitian { resid, tol });
        }
    }
    if op.dim() > DENSE_EIG_LIMIT {
        return Err(OperatorError::TooLargeForDense {
            dim: op.dim(),
            limit: DENSE_EIG_LIMIT,
        });
    }
    let se = nalgebra::SymmetricEigen::new(op.mat.clone());
    let n = op.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(k));
    }
    Ok(HermitianEigs { values, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// One product of single-site Pauli operators with a scalar coefficient.
#[derive(Clone, Debug)]
pub struct PauliTerm {
    pub coeff: C64,
    /// (site, axis) factors; sites are 1-based and must be distinct.
    pub ops: Vec<(usize, PauliAxis)>,
}

/// Sum of Pauli strings; the sparse operator form used for Lanczos and for
/// building dense Hamiltonians from a single term list.
#[derive(Clone, Debug, Default)]
pub struct PauliSum {
    pub sites: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(sites: usize) -> Self {
        PauliSum {
            sites,
            terms: Vec::new(),
        }
    }

    pub fn add(&mut self, coeff: C64, ops: &[(usize, PauliAxis)]) {
        for (k, &(site, _)) in ops.iter().enumerate() {
            assert!(
                (1..=self.sites).contains(&site),
                "site {site} outside 1..={}",
                self.sites
            );
            assert!(
                ops[k + 1..].iter().all(|&(s2, _)| s2 != site),
                "duplicate site {site} in one Pauli term"
            );
        }
        self.terms.push(PauliTerm {
            coeff,
            ops: ops.to_vec(),
        });
    }

    /// Merges terms by flip mask into the matvec-ready form.
    pub fn compile(&self) -> CompiledPauliSum {
        use std::collections::BTreeMap;
        let mut groups: BTreeMap<usize, Vec<(C64, usize)>> = BTreeMap::new();
        for term in &self.terms {
            let mut flip = 0usize;
            let mut parity = 0usize;
            let mut c = term.coeff;
            for &(site, axis) in &term.ops {
                let bit = 1usize << (self.sites - site);
                match axis {
                    PauliAxis::X => flip ^= bit,
                    PauliAxis::Y => {
                        flip ^= bit;
                        parity ^= bit;
                        c *= C64::new(0.0, 1.0);
                    }
                    PauliAxis::Z => parity ^= bit,
                }
            }
            groups.entry(flip).or_default().push((c, parity));
        }
        CompiledPauliSum {
            sites: self.sites,
            dim: 1usize << self.sites,
            groups: groups
                .into_iter()
                .map(|(flip, parts)| MaskGroup { flip, parts })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaskGroup {
    pub flip: usize,
    /// (effective coefficient, parity mask) pairs sharing this flip mask.
    pub parts: Vec<(C64, usize)>,
}

/// Pauli sum in gather form: out[t] = sum over groups of
/// amp(t ^ flip) * x[t ^ flip], where amp folds coefficient and sign.
#[derive(Clone, Debug)]
pub struct CompiledPauliSum {
    pub sites: usize,
    pub dim: usize,
    pub groups: Vec<MaskGroup>,
}

const PAR_MATVEC_MIN: usize = 1 << 14;

impl CompiledPauliSum {
    #[inline]
    fn amp(parts: &[(C64, usize)], src: usize) -> C64 {
        let mut a = C64::new(0.0, 0.0);
        for &(c, parity) in parts {
            if (src & parity).count_ones() % 2 == 0 {
                a += c;
            } else {
                a -= c;
            }
        }
        a
    }

    /// y = M x. Deterministic regardless of thread count: every output entry
    /// is computed by exactly one task as an ordered sum over groups.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let body = |t: usize| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for g in &self.groups {
                let s = t ^ g.flip;
                acc += Self::amp(&g.parts, s) * x[s];
            }
            acc
        };
        if self.dim >= PAR_MATVEC_MIN {
            (0..self.dim).into_par_iter().map(body).collect()
        } else {
            (0..self.dim).map(body).collect()
        }
    }

    pub fn to_dense(&self, hermitian_hint: bool) -> Result<ChainOperator, OperatorError> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for g in &self.groups {
            for s in 0..self.dim {
                let a = Self::amp(&g.parts, s);
                if a.norm_sqr() != 0.0 {
                    m[(s ^ g.flip, s)] += a;
                }
            }
        }
        ChainOperator::new(m, hermitian_hint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremal {
    Lowest,
    Highest,
}

pub struct LanczosResult {
    pub value: f64,
    pub iterations: usize,
    /// Final residual bound |beta * s_last| on the extremal Ritz pair.
    pub residual_bound: f64,
}

const LANCZOS_CYCLE: usize = 80;
const LANCZOS_LOCK: usize = 16;
const LANCZOS_MAX_CYCLES: usize = 50;

/// Extremal eigenvalue of a Hermitian Pauli sum by thick-restart Lanczos
/// with full reorthogonalization.
///
/// The start vector is drawn from a seeded generator, so results are exactly
/// reproducible for a fixed seed.  Each restart keeps the `LANCZOS_LOCK`
/// extremal Ritz vectors of the old subspace plus the next Krylov direction,
/// which preserves convergence through tightly clustered low-lying bands
/// where a single-vector restart stalls.  The stored basis stays bounded at
/// `LANCZOS_CYCLE` vectors.
pub fn lanczos_extremal(
    h: &CompiledPauliSum,
    which: Extremal,
    tol: f64,
    seed: u64,
) -> Result<LanczosResult, OperatorError> {
    let dim = h.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    normalize(&mut v);

    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut total_iters = 0usize;
    let mut last = (f64::NAN, f64::INFINITY);
    for _cycle in 0..LANCZOS_MAX_CYCLES {
        let out = subspace_cycle(h, locked, v, which, tol);
        total_iters += out.iterations;
        last = (out.ritz, out.bound);
        if out.converged {
            return Ok(LanczosResult {
                value: out.ritz,
                iterations: total_iters,
                residual_bound: out.bound,
            });
        }
        locked = out.keep;
        v = out.next;
    }
    Err(OperatorError::LanczosNoConvergence {
        best: last.0,
        bound: last.1,
        iterations: total_iters,
    })
}

struct CycleOut {
    ritz: f64,
    bound: f64,
    converged: bool,
    iterations: usize,
    keep: Vec<Vec<C64>>,
    next: Vec<C64>,
}

/// One subspace-expansion cycle.  The basis starts as the locked Ritz
/// vectors plus one fresh direction; every new direction is a matvec of
/// the previous one, fully reorthogonalized, and the projected operator
/// is accumulated exactly from the orthogonalization coefficients (plus a
/// per-cycle refresh of the locked block, which costs one matvec per
/// locked vector).  Extremal Ritz pairs come from the dense projected
/// eigenproblem, with the usual `beta * |last component|` residual bound.
fn subspace_cycle(
    h: &CompiledPauliSum,
    locked: Vec<Vec<C64>>,
    v0: Vec<C64>,
    which: Extremal,
    tol: f64,
) -> CycleOut {
    let mut basis = locked;
    basis.push(v0);
    let n0 = basis.len();
    let mut proj = DMatrix::<C64>::zeros(LANCZOS_CYCLE, LANCZOS_CYCLE);
    let mut iterations = 0usize;

    // exact projection of the carried block; the final matvec seeds the
    // Krylov expansion
    let mut w = Vec::new();
    for j in 0..n0 {
        w = h.matvec(&basis[j]);
        iterations += 1;
        for i in 0..basis.len() {
            proj[(i, j)] = dot(&basis[i], &w);
        }
    }

    loop {
        let m = basis.len();
        // w = H * basis[m-1], projected column already stored; strip the
        // basis components to get the next direction
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(&mut w, -c, q);
            }
        }
        let beta = norm(&w);

        let herm = projected_matrix(&proj, m);
        let se = nalgebra::SymmetricEigen::new(herm);
        let mut pick = 0usize;
        for k in 1..m {
            let better = match which {
                Extremal::Lowest => se.eigenvalues[k] < se.eigenvalues[pick],
                Extremal::Highest => se.eigenvalues[k] > se.eigenvalues[pick],
            };
            if better {
                pick = k;
            }
        }
        let ritz = se.eigenvalues[pick];
        let tail = se.eigenvectors[(m - 1, pick)].norm();
        let bound = beta * tail;
        let converged = bound <= tol * ritz.abs().max(1.0);
        let exhausted = beta < 1e-13 * ritz.abs().max(1.0);
        if converged || exhausted {
            return CycleOut {
                ritz,
                bound: if exhausted { 0.0 } else { bound },
                converged: true,
                iterations,
                keep: Vec::new(),
                next: Vec::new(),
            };
        }

        let inv = 1.0 / beta;
        for z in w.iter_mut() {
            *z *= inv;
        }

        if m == LANCZOS_CYCLE {
            // restart: extremal Ritz vectors of this subspace, plus the
            // fresh Krylov direction (orthogonal to all of them)
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| match which {
                Extremal::Lowest => se.eigenvalues[a].total_cmp(&se.eigenvalues[b]),
                Extremal::Highest => se.eigenvalues[b].total_cmp(&se.eigenvalues[a]),
            });
            let kept = LANCZOS_LOCK.min(m - 1);
            let keep: Vec<Vec<C64>> = order[..kept]
                .iter()
                .map(|&col| {
                    let mut y = vec![C64::new(0.0, 0.0); h.dim];
                    for (q, c) in basis.iter().zip(se.eigenvectors.column(col).iter()) {
                        axpy(&mut y, *c, q);
                    }
                    normalize(&mut y);
                    y
                })
                .collect();
            return CycleOut {
                ritz,
                bound,
                converged: false,
                iterations,
                keep,
                next: w,
            };
        }

        basis.push(w);
        w = h.matvec(&basis[m]);
        iterations += 1;
        for i in 0..basis.len() {
            proj[(i, m)] = dot(&basis[i], &w);
        }
    }
}

/// Leading m-by-m block of the projected operator.  Column j only holds
/// rows that existed when its matvec ran, so the strictly lower part of
/// later columns is reconstructed from Hermitian symmetry and the diagonal
/// is forced real.
fn projected_matrix(proj: &DMatrix<C64>, m: usize) -> DMatrix<C64> {
    DMatrix::<C64>::from_fn(m, m, |r, c| {
        if r == c {
            C64::new(proj[(r, c)].re, 0.0)
        } else if r < c {
            proj[(r, c)]
        } else {
            proj[(c, r)].conj()
        }
    })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [C64]) {
    let n = norm(v);
    let inv = 1.0 / n;
    for z in v.iter_mut() {
        *z *= inv;
    }
}
