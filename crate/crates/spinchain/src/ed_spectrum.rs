//! Exact diagonalization of the chain and of the commuting transfer
//! family, with eigenvalues aligned state by state.
//!
//! The transfer matrix at a real point is normal but neither Hermitian
//! nor symmetric, so it is diagonalized indirectly: the Hamiltonian is
//! Hermitian and commutes with the whole family, and within each of its
//! degenerate eigenspaces the Hermitian and anti-Hermitian parts of the
//! transfer matrix at a reference point commute with everything in
//! sight.  Projecting and diagonalizing those parts block by block
//! refines the Hamiltonian eigenbasis into a joint eigenbasis of the
//! family.  Every eigenvalue reported afterwards is a Rayleigh quotient
//! backed by an explicit residual certificate; a basis vector that fails
//! to be an eigenvector at any requested point is an error, not a
//! silently wrong number.
//!
//! [`energy_from_lambda`] closes the loop from eigenvalue data back to
//! the spectrum: it consumes a six-point sample (the two special points
//! `+-a` and central-difference neighbours) and rebuilds every energy
//! from the eigenvalue function alone, using the inversion identity to
//! reach the shifted points `+-a - eta` without sampling there.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bae_engine::{vacuum_a, vacuum_d};
use crate::operator_core::{hermitian_eigs, OperatorError};
use crate::params::ModelParams;
use crate::transfer_chain::{hamiltonian_direct, transfer, TransferError};
use crate::yang_baxter::{ccosh, csinh, phi};
use crate::C64;

/// Largest chain whose transfer matrices are built densely here.
pub const TRANSFER_EIG_SITE_LIMIT: usize = 8;

/// Reference points where the family is probed to split degeneracies.
const REFERENCE_POINTS: [f64; 2] = [0.377214, -0.611953];

#[derive(Debug, Error)]
pub enum EdError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("chain of {sites} sites exceeds the transfer-eigenvalue limit {limit}")]
    TooManySites { sites: usize, limit: usize },
    #[error("state {state_index} is not an eigenvector at point {point_index}: residual {residual:e}")]
    ResidualTooLarge {
        point_index: usize,
        state_index: usize,
        residual: f64,
    },
    #[error("bad stencil: {0}")]
    StencilMismatch(String),
    #[error("state {state_index} produced a complex energy (imaginary part {imag:e})")]
    ComplexEnergy { state_index: usize, imag: f64 },
}

/// Distinct energy levels of the chain with their multiplicities.
#[derive(Debug, Clone)]
pub struct SpectrumRecord {
    pub energies: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub params: ModelParams,
}

/// Dense spectrum of the chain, grouped into degenerate levels.
pub fn full_spectrum(params: &ModelParams) -> Result<SpectrumRecord, EdError> {
    let h = hamiltonian_direct(params)?;
    let eig = hermitian_eigs(&h)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-8 * scale;
    let mut energies = Vec::new();
    let mut multiplicities = Vec::new();
    let mut k = 0usize;
    while k < eig.values.len() {
        let mut j = k + 1;
        while j < eig.values.len() && eig.values[j] - eig.values[j - 1] <= tol {
            j += 1;
        }
        let mean: f64 = eig.values[k..j].iter().sum::<f64>() / (j - k) as f64;
        energies.push(mean);
        multiplicities.push(j - k);
        k = j;
    }
    Ok(SpectrumRecord {
        energies,
        multiplicities,
        params: *params,
    })
}

/// Transfer eigenvalues at a set of points, evaluated on one shared
/// joint eigenbasis.  `lambdas[i][k]` is the eigenvalue at `points[i]`
/// of the state whose energy is `energies[k]`; the state index is
/// consistent across all points.
#[derive(Debug, Clone)]
pub struct TransferEigenSample {
    pub points: Vec<C64>,
    pub lambdas: Vec<Vec<C64>>,
    /// Hamiltonian eigenvalue of each state, ascending.
    pub energies: Vec<f64>,
    pub params: ModelParams,
}

/// Splits the current groups of indistinguishable states by projecting a
/// Hermitian operator into each group's span and diagonalizing there.
fn refine_basis(
    vecs: &mut DMatrix<C64>,
    groups: &mut Vec<(usize, usize)>,
    m: &DMatrix<C64>,
) {
    let mut next = Vec::new();
    for &(s, e) in groups.iter() {
        let k = e - s;
        if k == 1 {
            next.push((s, e));
            continue;
        }
        let g = vecs.columns(s, k).into_owned();
        let proj = g.adjoint() * m * &g;
        // symmetrize away the roundoff anti-Hermitian dust
        let herm = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
        let se = nalgebra::SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| se.eigenvalues[x].total_cmp(&se.eigenvalues[y]));
        let rot = DMatrix::<C64>::from_fn(k, k, |r, c| se.eigenvectors[(r, order[c])]);
        let rotated = &g * &rot;
        for c in 0..k {
            vecs.set_column(s + c, &rotated.column(c));
        }
        let vals: Vec<f64> = order.iter().map(|&x| se.eigenvalues[x]).collect();
        let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        let tol = 1e-8 * scale;
        let mut lo = 0usize;
        while lo < k {
            let mut hi = lo + 1;
            while hi < k && vals[hi] - vals[hi - 1] <= tol {
                hi += 1;
            }
            next.push((s + lo, s + hi));
            lo = hi;
        }
    }
    *groups = next;
}

/// Joint eigenbasis of the Hamiltonian and the transfer family, with the
/// Hamiltonian eigenvalues in ascending order.
fn joint_eigenbasis(params: &ModelParams) -> Result<(Vec<f64>, DMatrix<C64>), EdError> {
    let h = hamiltonian_direct(params)?;
    let eig = hermitian_eigs(&h)?;
    let mut vecs = eig.vectors.clone();
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-8 * scale;
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut k = 0usize;
    while k < eig.values.len() {
        let mut j = k + 1;
        while j < eig.values.len() && eig.values[j] - eig.values[j - 1] <= tol {
            j += 1;
        }
        groups.push((k, j));
        k = j;
    }
    for &uref in &REFERENCE_POINTS {
        let t0 = transfer(C64::new(uref, 0.0), params)?;
        let tm = t0.mat();
        let x = (tm + tm.adjoint()) * C64::new(0.5, 0.0);
        let y = (tm - tm.adjoint()) * C64::new(0.0, -0.5);
        refine_basis(&mut vecs, &mut groups, &x);
        refine_basis(&mut vecs, &mut groups, &y);
    }
    Ok((eig.values.clone(), vecs))
}

/// Eigenvalues of the transfer matrix at each requested point, on the
/// shared joint basis, every Rayleigh quotient certified against the
/// eigenvector residual.
pub fn transfer_eigenvalues(
    points: &[C64],
    params: &ModelParams,
) -> Result<TransferEigenSample, EdError> {
    if params.sites > TRANSFER_EIG_SITE_LIMIT {
        return Err(EdError::TooManySites {
            sites: params.sites,
            limit: TRANSFER_EIG_SITE_LIMIT,
        });
    }
    let (energies, vecs) = joint_eigenbasis(params)?;
    let dim = vecs.nrows();
    let mut lambdas = Vec::with_capacity(points.len());
    for (pi, &u) in points.iter().enumerate() {
        let t = transfer(u, params)?;
        let tm = t.mat();
        let tscale = tm.norm().max(1.0);
        let mut row = Vec::with_capacity(dim);
        for k in 0..dim {
            let v = vecs.column(k);
            let w = tm * v;
            let lam: C64 = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            let mut rsq = 0.0f64;
            for (wi, vi) in w.iter().zip(v.iter()) {
                rsq += (wi - lam * vi).norm_sqr();
            }
            let resid = rsq.sqrt();
            if resid > 1e-8 * tscale {
                return Err(EdError::ResidualTooLarge {
                    point_index: pi,
                    state_index: k,
                    residual: resid,
                });
            }
            row.push(lam);
        }
        lambdas.push(row);
    }
    Ok(TransferEigenSample {
        points: points.to_vec(),
        lambdas,
        energies,
        params: *params,
    })
}

/// The six sample points [`energy_from_lambda`] consumes: the special
/// points `a` and `-a`, then both shifted by `+-h` for the central
/// difference.
pub fn stencil_points(params: &ModelParams, h: f64) -> Vec<C64> {
    let a = params.a();
    let hh = C64::new(h, 0.0);
    vec![a, -a, a + hh, a - hh, -a + hh, -a - hh]
}

/// Rebuilds every energy from sampled transfer eigenvalues alone.
///
/// The derivative at `+-a` is a central difference over the stencil; the
/// values at the shifted points `+-a - eta` never need sampling because
/// the inversion identity pins them:
/// `Lambda(a - eta) = -a(a) d(a - eta) / Lambda(a)` and likewise at
/// `-a`.  The result must come out real; a state whose imaginary part
/// survives is reported as an error.
pub fn energy_from_lambda(sample: &TransferEigenSample) -> Result<Vec<f64>, EdError> {
    let p = &sample.params;
    let a = p.a();
    let eta = C64::new(p.eta, 0.0);
    if sample.points.len() != 6 || sample.lambdas.len() != 6 {
        return Err(EdError::StencilMismatch(format!(
            "need 6 stencil points, got {}",
            sample.points.len()
        )));
    }
    let h = sample.points[2] - a;
    if h.im.abs() > 1e-12 || h.re <= 0.0 || !(1e-8..=1e-2).contains(&h.re) {
        return Err(EdError::StencilMismatch(format!(
            "step {h} is not a small positive real offset"
        )));
    }
    let expect = stencil_points(p, h.re);
    for (got, want) in sample.points.iter().zip(&expect) {
        if (got - want).norm() > 1e-12 {
            return Err(EdError::StencilMismatch(format!(
                "point {got} does not match the stencil layout ({want})"
            )));
        }
    }

    let n = p.n();
    let pref = phi(2.0 * a, eta).powi(1 - n as i32) * csinh(eta);
    let c2a = ccosh(2.0 * a);
    let konst = C64::new(n as f64, 0.0) * ccosh(eta) * (c2a * c2a - ccosh(2.0 * eta))
        / (csinh(eta) * csinh(eta));
    let shift_plus = -vacuum_a(a, p) * vacuum_d(a - eta, p);
    let shift_minus = -vacuum_a(-a, p) * vacuum_d(-a - eta, p);

    let states = sample.lambdas[0].len();
    let mut out = Vec::with_capacity(states);
    for k in 0..states {
        let lam_p = sample.lambdas[0][k];
        let lam_m = sample.lambdas[1][k];
        if lam_p.norm() < 1e-12 || lam_m.norm() < 1e-12 {
            return Err(EdError::StencilMismatch(format!(
                "state {k} has a vanishing eigenvalue at a special point"
            )));
        }
        let d_p = (sample.lambdas[2][k] - sample.lambdas[3][k]) / (2.0 * h);
        let d_m = (sample.lambdas[4][k] - sample.lambdas[5][k]) / (2.0 * h);
        let e = (konst - pref * (shift_plus / lam_p * d_p + shift_minus / lam_m * d_m))
            * C64::new(p.coupling, 0.0);
        if e.im.abs() > 1e-6 * (1.0 + e.re.abs()) {
            return Err(EdError::ComplexEnergy {
                state_index: k,
                imag: e.im,
            });
        }
        out.push(e.re);
    }
    Ok(out)
}
