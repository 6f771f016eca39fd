//! Wedderburn structure of the image of a CPTP projector.
//!
//! `Im 𝓟` is a distorted algebra `U(⊕_k B(𝓗_F,k) ⊗ τ_k ⊕ 0_R)U†`. Right
//! multiplication by `ρ̄⁻¹` on the support turns it into an ordinary
//! *-algebra, whose center yields the blocks and whose commutant yields the
//! tensor factorization of each block.

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, c64, cr, CMat, ONE, ZERO};
use crate::operator::{Layout, SuperOperator};

pub const DEFAULT_SEED: u64 = 0;
const MAX_RETRIES: u64 = 5;

#[derive(Clone, Debug)]
pub struct Block {
    pub d_f: usize,
    pub d_g: usize,
    /// Factor state on `𝓗_G`, full rank.
    pub tau: CMat,
}

#[derive(Clone, Debug)]
pub struct WedderburnStructure {
    /// Columns: the product basis `|f, g⟩_k` of each block (index
    /// `f * d_g + g`), blocks in order, then a basis of `𝓗_R`.
    pub u: CMat,
    pub blocks: Vec<Block>,
    pub d_r: usize,
    pub support_dim: usize,
    pub seed: u64,
}

impl WedderburnStructure {
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Columns of `U` belonging to block `k`; `W_k` is its adjoint.
    pub fn block_basis(&self, k: usize) -> CMat {
        let off: usize = self.blocks[..k].iter().map(|b| b.d_f * b.d_g).sum();
        let b = &self.blocks[k];
        self.u.subcols(off, b.d_f * b.d_g).to_owned()
    }

    /// Layout of the reduced space `⊕_k B(𝓗_F,k)`.
    pub fn reduced_layout(&self) -> Layout {
        Layout::new(self.blocks.iter().map(|b| b.d_f).collect())
    }

    pub fn tau_spectra(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut ev = linalg::herm_eigvals(&b.tau).unwrap_or_default();
                ev.reverse();
                ev
            })
            .collect()
    }

    /// Validates the structural invariants.
    pub fn check(&self) -> Result<()> {
        let n = self.dim();
        let uu = self.u.adjoint() * &self.u;
        let r = linalg::max_abs((&uu - linalg::eye(n)).as_ref());
        if r > 1e-9 {
            return Err(Error::Certification { what: "U not unitary".into(), witness: r });
        }
        let s: usize = self.blocks.iter().map(|b| b.d_f * b.d_g).sum();
        if s != self.support_dim || s + self.d_r != n {
            return dim_err("block dimensions do not add up");
        }
        for b in &self.blocks {
            let ev = linalg::herm_eigvals(&b.tau)?;
            let tr = linalg::trace(b.tau.as_ref());
            if ev[0] <= 1e-10 || (tr - ONE).norm() > 1e-10 {
                return Err(Error::Certification { what: "factor state not full-rank density".into(), witness: ev[0] });
            }
        }
        Ok(())
    }
}

/// `ρ̄ = 𝓟(𝟙/n)`.
pub fn fixed_state(p: &SuperOperator) -> Result<CMat> {
    let n = p.domain.dim();
    let rho = p.apply(&linalg::scale(&linalg::eye(n), cr(1.0 / n as f64)))?;
    Ok(linalg::hermitian_part(&rho))
}

/// Orthonormal basis of the support of a positive operator, and the
/// operator's eigenvalues there.
pub fn support(rho: &CMat, rtol: f64) -> Result<(CMat, Vec<f64>)> {
    let (vals, vecs) = linalg::herm_eig(rho)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > rtol * top).collect();
    let s = CMat::from_fn(rho.nrows(), keep.len(), |i, k| vecs[(i, keep[k])]);
    Ok((s, keep.iter().map(|&i| vals[i]).collect()))
}

/// Basis of `{X ρ̄⁻¹}` on the support, where `a_basis` are elements of
/// `Im 𝓟` already compressed to the support and `rho_diag` is ρ̄ there.
/// The result is checked to be a unital *-algebra.
pub fn undistort(a_basis: &[CMat], rho_bar: &CMat) -> Result<Vec<CMat>> {
    let inv = linalg::inverse(rho_bar);
    let raw: Vec<CMat> = a_basis.iter().map(|a| a * &inv).collect();
    let basis = orthonormal_span(&raw)?;
    let q = stack_vecs(&basis);
    let scale = 1.0;
    let mut worst = 0.0f64;
    for x in &basis {
        worst = worst.max(linalg::residual_from_span(&q, &vec_of(&x.adjoint().to_owned())));
        for y in &basis {
            worst = worst.max(linalg::residual_from_span(&q, &vec_of(&(x * y))));
        }
    }
    if worst > 1e-7 * scale {
        return Err(Error::Certification { what: "undistorted image is not closed under products/adjoints".into(), witness: worst });
    }
    Ok(basis)
}

fn vec_of(x: &CMat) -> CMat {
    let n = x.nrows();
    CMat::from_fn(n * x.ncols(), 1, |k, _| x[(k % n, k / n)])
}

fn unvec(v: &CMat, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[(j * n + i, 0)])
}

fn stack_vecs(ops: &[CMat]) -> CMat {
    let n = ops.first().map_or(0, |o| o.nrows());
    CMat::from_fn(n * n, ops.len(), |k, c| ops[c][(k % n, k / n)])
}

/// HS-orthonormal basis of the span of `ops`.
fn orthonormal_span(ops: &[CMat]) -> Result<Vec<CMat>> {
    let n = ops.first().map_or(0, |o| o.nrows());
    let q = linalg::orth(&stack_vecs(ops), 1e-8)?;
    Ok((0..q.ncols()).map(|c| unvec(&q.subcols(c, 1).to_owned(), n)).collect())
}

/// Basis of `{X : [X, b] = 0 ∀ b}` on `C^n`.
fn commutant(basis: &[CMat], n: usize) -> Result<Vec<CMat>> {
    let id = linalg::eye(n);
    let mut gram = linalg::zeros(n * n, n * n);
    for b in basis {
        let m = linalg::kron(id.as_ref(), b.as_ref()) - linalg::kron(b.transpose(), id.as_ref());
        gram += m.adjoint() * &m;
    }
    let (vals, vecs) = linalg::herm_eig(&gram)?;
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let out: Vec<CMat> = (0..vals.len())
        .filter(|&i| vals[i] <= 1e-10 * top.max(1.0))
        .map(|i| unvec(&vecs.subcols(i, 1).to_owned(), n))
        .collect();
    if out.is_empty() {
        return Err(Error::Numerical("commutant solve returned an empty space".into()));
    }
    Ok(out)
}

/// Elements of span(basis) commuting with every basis element.
fn center(basis: &[CMat]) -> Result<Vec<CMat>> {
    let r = basis.len();
    let n = basis[0].nrows();
    // Column j stacks vec([b_j, b_i]) over i.
    let mut m = linalg::zeros(r * n * n, r);
    for (j, bj) in basis.iter().enumerate() {
        for (i, bi) in basis.iter().enumerate() {
            let c = linalg::commutator(bj, bi);
            for k in 0..n * n {
                m[(i * n * n + k, j)] = c[(k % n, k / n)];
            }
        }
    }
    let ns = linalg::null_space(&m, 1e-8 * linalg::spectral_norm(&m)?.max(1.0))?;
    let mut out = vec![];
    for c in 0..ns.ncols() {
        let mut z = linalg::zeros(n, n);
        for j in 0..r {
            z += linalg::scale(&basis[j], ns[(j, c)]);
        }
        out.push(z);
    }
    Ok(out)
}

/// Greedy pivoted Gram–Schmidt on the columns of `a`: deterministic, and
/// returns coordinate vectors when the column space is a coordinate span.
pub fn pivoted_basis(a: &CMat, rank: usize) -> CMat {
    let n = a.nrows();
    let mut res = a.clone();
    let mut out = linalg::zeros(n, rank);
    for k in 0..rank {
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..res.ncols() {
            let nj = res.col(j).norm_l2();
            if nj > best_norm + 1e-12 {
                best = j;
                best_norm = nj;
            }
        }
        let mut v = res.subcols(best, 1).to_owned();
        v = linalg::scale(&v, cr(1.0 / best_norm));
        fix_phase(&mut v);
        out.subcols_mut(k, 1).copy_from(v.as_ref());
        let proj = &v * (v.adjoint() * &res);
        res -= proj;
    }
    out
}

/// Makes the largest-magnitude entry of a column real and positive.
fn fix_phase(v: &mut CMat) {
    let mut idx = 0;
    let mut m = -1.0;
    for i in 0..v.nrows() {
        if v[(i, 0)].norm() > m + 1e-12 {
            m = v[(i, 0)].norm();
            idx = i;
        }
    }
    if m > 0.0 {
        let ph = v[(idx, 0)].conj() / m;
        for i in 0..v.nrows() {
            v[(i, 0)] *= ph;
        }
    }
}

fn cluster_sorted(vals: &[f64], rel_gap: f64) -> Vec<Vec<usize>> {
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut clusters: Vec<Vec<usize>> = vec![];
    for i in 0..vals.len() {
        match clusters.last_mut() {
            Some(c) if (vals[i] - vals[*c.last().unwrap()]).abs() <= rel_gap * scale => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

struct RawBlock {
    d_f: usize,
    d_g: usize,
    /// Product basis on the support, columns `f * d_g + g`.
    basis: CMat,
}

fn factorize_block(b_basis: &[CMat], q: &CMat, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<RawBlock>> {
    let nk = q.ncols();
    let compressed: Vec<CMat> = b_basis.iter().map(|b| q.adjoint() * b * q).collect();
    let bk = orthonormal_span(&compressed)?;
    let dim_b = bk.len();
    let d_f = (dim_b as f64).sqrt().round() as usize;
    if d_f * d_f != dim_b || d_f == 0 || nk % d_f != 0 {
        return Ok(None);
    }
    let d_g = nk / d_f;
    if d_f == 1 || d_g == 1 {
        let proj = q * q.adjoint();
        return Ok(Some(RawBlock { d_f, d_g, basis: pivoted_basis(&proj, nk) }));
    }
    let comm = commutant(&bk, nk)?;
    if comm.len() != d_g * d_g {
        return Ok(None);
    }
    let coeffs: Vec<f64> = (0..comm.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut h = linalg::zeros(nk, nk);
    let mut y = linalg::zeros(nk, nk);
    for (c, x) in coeffs.iter().zip(&comm) {
        h += linalg::scale(x, cr(*c));
        y += linalg::scale(x, c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    }
    let h = linalg::hermitian_part(&h);
    let (vals, vecs) = linalg::herm_eig(&h)?;
    let clusters = cluster_sorted(&vals, 1e-6);
    if clusters.len() != d_g || clusters.iter().any(|c| c.len() != d_f) {
        return Ok(None);
    }
    let eig_proj = |c: &Vec<usize>| {
        let v = CMat::from_fn(nk, c.len(), |i, k| vecs[(i, c[k])]);
        &v * v.adjoint()
    };
    let e0 = eig_proj(&clusters[0]);
    let f_basis = pivoted_basis(&e0, d_f);
    let mut basis = linalg::zeros(nk, nk);
    for (g, c) in clusters.iter().enumerate() {
        let pg = eig_proj(c);
        let t = if g == 0 { f_basis.clone() } else { &pg * (&y * &f_basis) };
        // Π_g y acts as a scalar times a partial isometry E_0 -> E_g.
        let gram = t.adjoint() * &t;
        let s = gram[(0, 0)].re.sqrt();
        if s < 1e-8 {
            return Ok(None);
        }
        let off = linalg::max_abs((&gram - linalg::scale(&linalg::eye(d_f), cr(s * s))).as_ref());
        if off > 1e-6 * s * s {
            return Ok(None);
        }
        for f in 0..d_f {
            for i in 0..nk {
                basis[(i, f * d_g + g)] = t[(i, f)] * cr(1.0 / s);
            }
        }
    }
    Ok(Some(RawBlock { d_f, d_g, basis: q * &basis }))
}

fn partial_trace_f(x: &CMat, d_f: usize, d_g: usize) -> CMat {
    CMat::from_fn(d_g, d_g, |g, h| {
        let mut s = ZERO;
        for f in 0..d_f {
            s += x[(f * d_g + g, f * d_g + h)];
        }
        s
    })
}

/// Block structure of a *-algebra given on the support of `rho_bar`
/// (`support` maps support coordinates into the full space).
pub fn wedderburn_decompose(
    b_basis: &[CMat],
    rho_bar: &CMat,
    support: &CMat,
    seed: u64,
) -> Result<WedderburnStructure> {
    let n = support.nrows();
    let s = support.ncols();
    if b_basis.iter().any(|b| b.nrows() != s || b.ncols() != s) {
        return dim_err("algebra basis does not match the support dimension");
    }
    let z = center(b_basis)?;
    for attempt in 0..MAX_RETRIES {
        let mut rng = linalg::seeded(seed.wrapping_add(attempt));
        if let Some(raw) = try_decompose(b_basis, &z, &mut rng)? {
            return assemble(raw, rho_bar, support, n, seed);
        }
    }
    Err(Error::Numerical("Wedderburn factorization failed after retries (degenerate random elements)".into()))
}

fn try_decompose(b_basis: &[CMat], z: &[CMat], rng: &mut rand_chacha::ChaCha8Rng) -> Result<Option<Vec<RawBlock>>> {
    let s = b_basis[0].nrows();
    let mut zc = linalg::zeros(s, s);
    for x in z {
        zc += linalg::scale(x, cr(rng.gen::<f64>() - 0.5));
    }
    let zc = linalg::hermitian_part(&zc);
    let (vals, vecs) = linalg::herm_eig(&zc)?;
    let clusters = cluster_sorted(&vals, 1e-6);
    if clusters.len() != z.len() {
        return Ok(None);
    }
    let mut blocks = vec![];
    let mut total = 0;
    for c in &clusters {
        let q = CMat::from_fn(s, c.len(), |i, k| vecs[(i, c[k])]);
        match factorize_block(b_basis, &q, rng)? {
            Some(b) => {
                total += b.d_f * b.d_f;
                blocks.push(b);
            }
            None => return Ok(None),
        }
    }
    if total != b_basis.len() {
        return Ok(None);
    }
    Ok(Some(blocks))
}

fn assemble(raw: Vec<RawBlock>, rho_bar: &CMat, support: &CMat, n: usize, seed: u64) -> Result<WedderburnStructure> {
    let rho_s = support.adjoint() * rho_bar * support;
    let mut items: Vec<(Block, CMat, Vec<f64>, usize)> = vec![];
    for rb in raw {
        let w = rb.basis.adjoint().to_owned();
        let local = &w * &rho_s * &rb.basis;
        let mut tau = partial_trace_f(&local, rb.d_f, rb.d_g);
        let t = linalg::trace(tau.as_ref());
        tau = linalg::hermitian_part(&linalg::scale(&tau, ONE / t));
        let mut spec = linalg::herm_eigvals(&tau)?;
        spec.reverse();
        let full = support * &rb.basis;
        let first = (0..n)
            .find(|&i| (0..full.ncols()).any(|c| full[(i, c)].norm() > 1e-8))
            .unwrap_or(n);
        items.push((Block { d_f: rb.d_f, d_g: rb.d_g, tau }, full, spec, first));
    }
    items.sort_by(|a, b| {
        b.0.d_f
            .cmp(&a.0.d_f)
            .then(b.0.d_g.cmp(&a.0.d_g))
            .then_with(|| {
                for (x, y) in a.2.iter().zip(&b.2) {
                    if (x - y).abs() > 1e-9 {
                        return x.total_cmp(y);
                    }
                }
                std::cmp::Ordering::Equal
            })
            .then(a.3.cmp(&b.3))
    });
    let support_dim: usize = items.iter().map(|it| it.1.ncols()).sum();
    let d_r = n - support_dim;
    let mut cols: Vec<&CMat> = items.iter().map(|it| &it.1).collect();
    let rem;
    if d_r > 0 {
        let proj = linalg::eye(n) - support * support.adjoint();
        rem = pivoted_basis(&proj, d_r);
        cols.push(&rem);
    }
    let u = linalg::hstack(&cols);
    let w = WedderburnStructure {
        u,
        blocks: items.into_iter().map(|it| it.0).collect(),
        d_r,
        support_dim,
        seed,
    };
    w.check()?;
    Ok(w)
}

/// Full pipeline from a CPTP projector.
pub fn wedderburn_from_projector(p: &SuperOperator, seed: u64) -> Result<WedderburnStructure> {
    if !p.domain.is_full() || !p.is_square() {
        return dim_err("expected a projector on a full operator space");
    }
    let n = p.domain.dim();
    let rho = fixed_state(p)?;
    let (sup, _) = support(&rho, 1e-9)?;
    let img = linalg::orth(&p.mat, 1e-8)?;
    let lay = Layout::full(n);
    let mut a_basis = vec![];
    let mut leak = 0.0f64;
    let outside = linalg::eye(n) - &sup * sup.adjoint();
    for c in 0..img.ncols() {
        let a = lay.devectorize(&img.subcols(c, 1).to_owned())?;
        leak = leak.max((&outside * &a).norm_l2() + (&a * &outside).norm_l2());
        a_basis.push(sup.adjoint() * &a * &sup);
    }
    if leak > 1e-7 {
        return Err(Error::Certification { what: "image of the projector leaves the support of P(1/n)".into(), witness: leak });
    }
    let rho_s = sup.adjoint() * &rho * &sup;
    let b = undistort(&a_basis, &rho_s)?;
    let w = wedderburn_decompose(&b, &rho, &sup, seed)?;
    let j = crate::reduction::injection_matrix(&w);
    let qj = linalg::orth(&j, 1e-10)?;
    let dist = linalg::subspace_distance(&qj, &img)?;
    if dist > 1e-7 {
        return Err(Error::Certification { what: "Wedderburn reconstruction does not span Im P".into(), witness: dist });
    }
    Ok(w)
}

/// Wedderburn structure with random unitary, block sizes and factor
/// states; used to generate random CPTP projectors.
pub fn random_structure(rng: &mut rand_chacha::ChaCha8Rng, dims: &[(usize, usize)], d_r: usize) -> WedderburnStructure {
    let support_dim: usize = dims.iter().map(|(f, g)| f * g).sum();
    let n = support_dim + d_r;
    let u = linalg::random_unitary(rng, n);
    let blocks = dims
        .iter()
        .map(|&(d_f, d_g)| Block { d_f, d_g, tau: linalg::random_density(rng, d_g) })
        .collect();
    WedderburnStructure { u, blocks, d_r, support_dim, seed: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_basis_recovers_coordinates() {
        let mut p = linalg::zeros(4, 4);
        p[(1, 1)] = ONE;
        p[(3, 3)] = ONE;
        let b = pivoted_basis(&p, 2);
        assert_eq!(b[(1, 0)], ONE);
        assert_eq!(b[(3, 1)], ONE);
    }

    #[test]
    fn undistort_tensor_with_tau() {
        // A = {X ⊗ τ}, τ = diag(3/4, 1/4): undistorted algebra is {X' ⊗ 𝟙₂}.
        let tau = linalg::from_real(&[&[0.75, 0.0], &[0.0, 0.25]]);
        let units: Vec<CMat> = (0..4).map(|k| crate::operator::ketbra(2, k % 2, k / 2)).collect();
        let a: Vec<CMat> = units.iter().map(|x| linalg::kron(x.as_ref(), tau.as_ref())).collect();
        let rho = linalg::kron(linalg::scale(&linalg::eye(2), cr(0.5)).as_ref(), tau.as_ref());
        let b = undistort(&a, &rho).unwrap();
        assert_eq!(b.len(), 4);
        for x in &b {
            let part = CMat::from_fn(2, 2, |i, j| x[(2 * i, 2 * j)]);
            let want = linalg::kron(part.as_ref(), linalg::eye(2).as_ref());
            assert!((x - want).norm_l2() < 1e-12);
        }
    }
}
