//! Dense complex linear-algebra helpers on top of faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd;
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

pub fn cr(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(rows: &[&[f64]]) -> CMat {
    CMat::from_fn(rows.len(), rows[0].len(), |i, j| cr(rows[i][j]))
}

pub fn dagger(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let mut out = zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a, b);
    out
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    a * faer::Scale(s)
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    let mut t = ZERO;
    for i in 0..a.nrows().min(a.ncols()) {
        t += a[(i, i)];
    }
    t
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn fro(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

pub fn herm_residual(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn hermitian_part(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(a);
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))?;
    let n = a.nrows();
    let s = e.S();
    let mut idx: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    idx.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));
    let u = e.U();
    let vecs = CMat::from_fn(n, n, |i, j| u[(i, idx[j])]);
    Ok((idx.iter().map(|&k| vals[k]).collect(), vecs))
}

pub fn herm_eigvals(a: &CMat) -> Result<Vec<f64>> {
    Ok(herm_eig(a)?.0)
}

pub fn min_herm_eig(a: &CMat) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(herm_eigvals(a)?[0])
}

/// General eigendecomposition with right and left eigenvectors.
///
/// Columns of `vl` satisfy `vl[:,k]^H A = λ_k vl[:,k]^H`.
pub struct Eig {
    pub values: Vec<c64>,
    pub right: CMat,
    pub left: CMat,
}

pub fn eig(a: &CMat) -> Result<Eig> {
    let n = a.nrows();
    let par = faer::get_global_parallelism();
    let mut s = faer::diag::Diag::<c64>::zeros(n);
    let mut ul = zeros(n, n);
    let mut ur = zeros(n, n);
    let scratch = evd::evd_scratch::<c64>(
        n,
        evd::ComputeEigenvectors::Yes,
        evd::ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    evd::evd_cplx(
        a.as_ref(),
        s.as_mut(),
        Some(ul.as_mut()),
        Some(ur.as_mut()),
        par,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    Ok(Eig {
        values: (0..n).map(|i| s[i]).collect(),
        right: ur,
        left: ul,
    })
}

pub fn eigvals(a: &CMat) -> Result<Vec<c64>> {
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))
}

pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: &CMat) -> Result<Svd> {
    let d = a
        .svd()
        .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    Ok(Svd {
        u: d.U().to_owned(),
        s: (0..k).map(|i| d.S()[i].re).collect(),
        v: d.V().to_owned(),
    })
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(vec![]);
    }
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("svd: {e:?}")))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Orthonormal basis of the column space, rank cut at `rtol * σ_max`.
pub fn orth(a: &CMat, rtol: f64) -> Result<CMat> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(zeros(a.nrows(), 0));
    }
    let d = svd(a)?;
    let cut = rtol * d.s.first().copied().unwrap_or(0.0);
    let r = d.s.iter().filter(|&&s| s > cut && s > 0.0).count();
    Ok(d.u.subcols(0, r).to_owned())
}

/// Orthonormal basis of the null space: right singular vectors with
/// singular value below `atol`.
pub fn null_space(a: &CMat, atol: f64) -> Result<CMat> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(eye(n));
    }
    let d = svd(a)?;
    let mut cols = vec![];
    for j in 0..n {
        let s = if j < d.s.len() { d.s[j] } else { 0.0 };
        if s <= atol {
            cols.push(j);
        }
    }
    Ok(CMat::from_fn(n, cols.len(), |i, k| d.v[(i, cols[k])]))
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn cond(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let r = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(r, c);
    let mut off = 0;
    for b in blocks {
        out.subcols_mut(off, b.ncols()).copy_from(b.as_ref());
        off += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let c = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(r, c);
    let mut off = 0;
    for b in blocks {
        out.subrows_mut(off, b.nrows()).copy_from(b.as_ref());
        off += b.nrows();
    }
    out
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; rand_distr is not worth a dependency for this.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_complex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| c64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    hermitian_part(&a)
}

/// Haar-ish random unitary from the QR of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    let qr = a.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let mut u = q.to_owned();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// Random full-rank density matrix (Ginibre ensemble).
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = random_complex(rng, n, n);
    let mut rho = &g * g.adjoint();
    let t = trace(rho.as_ref());
    rho = scale(&rho, ONE / t);
    hermitian_part(&rho)
}

pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let v = random_complex(rng, n, 1);
    let nv = v.norm_l2();
    let v = scale(&v, cr(1.0 / nv));
    &v * v.adjoint()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Principal-angle test: largest sine between the column spans of two
/// orthonormal bases of equal dimension.
pub fn subspace_distance(qa: &CMat, qb: &CMat) -> Result<f64> {
    if qa.ncols() != qb.ncols() {
        return Ok(1.0);
    }
    if qa.ncols() == 0 {
        return Ok(0.0);
    }
    let m = qa.adjoint() * qb;
    let s = singular_values(&m)?;
    let smin = s.last().copied().unwrap_or(1.0).min(1.0);
    Ok((1.0 - smin * smin).max(0.0).sqrt())
}

/// Residual of projecting `v` onto the span of the orthonormal columns `q`.
pub fn residual_from_span(q: &CMat, v: &CMat) -> f64 {
    let proj = q * (q.adjoint() * v);
    (v - &proj).norm_l2()
}
