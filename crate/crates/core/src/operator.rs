//! Operators, superoperators and GKLS generators.
//!
//! Operators are dense complex matrices. Superoperators act on
//! column-stacked vectorizations: entry `(i, j)` of `X` sits at index
//! `j * dim + i`. Reduced spaces that are direct sums of full matrix
//! algebras use a compact vectorization, one column-stacked block after
//! the other (see [`Layout`]).

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, c64, cr, dagger, kron, CMat, I, ONE, ZERO};

pub type Operator = CMat;

pub const TOL_HERM: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    pub dim: usize,
    pub site_dims: Option<Vec<usize>>,
}

impl HilbertSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("Hilbert space dimension must be positive".into()));
        }
        Ok(Self { dim, site_dims: None })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::sites(vec![2; n])
    }

    pub fn sites(site_dims: Vec<usize>) -> Result<Self> {
        if site_dims.is_empty() || site_dims.contains(&0) {
            return Err(Error::Invalid("site dimensions must be positive".into()));
        }
        let dim = site_dims.iter().product();
        Ok(Self { dim, site_dims: Some(site_dims) })
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.as_ref().map_or(1, |s| s.len())
    }
}

/// Block structure of an operator space `⊕_k B(C^{d_k})`.
///
/// A single block of size `n` is the ordinary operator space on `C^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<usize>,
}

impl Layout {
    pub fn full(n: usize) -> Self {
        Self { blocks: vec![n] }
    }

    pub fn new(blocks: Vec<usize>) -> Self {
        Self { blocks }
    }

    /// Dimension of the underlying Hilbert space `Σ d_k`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Dimension of the operator space `Σ d_k²`.
    pub fn vec_dim(&self) -> usize {
        self.blocks.iter().map(|d| d * d).sum()
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for &d in &self.blocks {
            o.push(acc);
            acc += d;
        }
        o
    }

    pub fn vec_offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for &d in &self.blocks {
            o.push(acc);
            acc += d * d;
        }
        o
    }

    /// Compact index of matrix position `(i, j)`, if it lies in a block.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        let mut off = 0;
        let mut voff = 0;
        for &d in &self.blocks {
            if i >= off && i < off + d {
                if j >= off && j < off + d {
                    return Some(voff + (j - off) * d + (i - off));
                }
                return None;
            }
            off += d;
            voff += d * d;
        }
        None
    }

    /// Matrix position of compact index `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        let mut off = 0;
        let mut voff = 0;
        for &d in &self.blocks {
            if k < voff + d * d {
                let r = k - voff;
                return (off + r % d, off + r / d);
            }
            off += d;
            voff += d * d;
        }
        panic!("compact index {k} out of range");
    }

    pub fn vectorize(&self, x: &CMat) -> Result<CMat> {
        let n = self.dim();
        if x.nrows() != n || x.ncols() != n {
            return dim_err(format!("operator {}x{} vs layout dim {n}", x.nrows(), x.ncols()));
        }
        Ok(CMat::from_fn(self.vec_dim(), 1, |k, _| {
            let (i, j) = self.position(k);
            x[(i, j)]
        }))
    }

    pub fn devectorize(&self, v: &CMat) -> Result<CMat> {
        if v.nrows() != self.vec_dim() || v.ncols() != 1 {
            return dim_err(format!("vector length {} vs {}", v.nrows(), self.vec_dim()));
        }
        let n = self.dim();
        let mut x = linalg::zeros(n, n);
        for k in 0..v.nrows() {
            let (i, j) = self.position(k);
            x[(i, j)] = v[(k, 0)];
        }
        Ok(x)
    }

    /// Inclusion of the compact space into the full `dim²` vectorization.
    pub fn embedding(&self) -> CMat {
        let n = self.dim();
        let mut e = linalg::zeros(n * n, self.vec_dim());
        for k in 0..self.vec_dim() {
            let (i, j) = self.position(k);
            e[(j * n + i, k)] = ONE;
        }
        e
    }

    /// Identity operator of the layout, vectorized.
    pub fn identity_vec(&self) -> CMat {
        self.vectorize(&linalg::eye(self.dim())).expect("identity has layout shape")
    }
}

pub fn vectorize(x: &Operator) -> Result<CMat> {
    if x.nrows() != x.ncols() {
        return dim_err("vectorize expects a square operator");
    }
    Layout::full(x.nrows()).vectorize(x)
}

pub fn devectorize(v: &CMat, space: &HilbertSpace) -> Result<Operator> {
    Layout::full(space.dim).devectorize(v)
}

#[derive(Clone, Debug)]
pub struct SuperOperator {
    pub domain: Layout,
    pub codomain: Layout,
    pub mat: CMat,
}

impl SuperOperator {
    pub fn new(domain: Layout, codomain: Layout, mat: CMat) -> Result<Self> {
        if mat.nrows() != codomain.vec_dim() || mat.ncols() != domain.vec_dim() {
            return dim_err(format!(
                "superoperator {}x{} vs layouts {}->{}",
                mat.nrows(),
                mat.ncols(),
                domain.vec_dim(),
                codomain.vec_dim()
            ));
        }
        Ok(Self { domain, codomain, mat })
    }

    pub fn square(layout: Layout, mat: CMat) -> Result<Self> {
        Self::new(layout.clone(), layout, mat)
    }

    pub fn full(mat: CMat) -> Result<Self> {
        let n2 = mat.nrows();
        let n = (n2 as f64).sqrt().round() as usize;
        if n * n != n2 {
            return dim_err(format!("{n2} is not a square operator-space dimension"));
        }
        Self::square(Layout::full(n), mat)
    }

    pub fn identity(layout: Layout) -> Self {
        let d = layout.vec_dim();
        Self { domain: layout.clone(), codomain: layout, mat: linalg::eye(d) }
    }

    pub fn zero(domain: Layout, codomain: Layout) -> Self {
        let mat = linalg::zeros(codomain.vec_dim(), domain.vec_dim());
        Self { domain, codomain, mat }
    }

    pub fn in_dim(&self) -> usize {
        self.mat.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let v = self.domain.vectorize(x)?;
        self.codomain.devectorize(&(&self.mat * &v))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if other.codomain != self.domain {
            return dim_err("composition of incompatible superoperators");
        }
        Ok(SuperOperator {
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return dim_err("sum of incompatible superoperators");
        }
        Ok(SuperOperator {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn scaled(&self, s: f64) -> SuperOperator {
        SuperOperator {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            mat: linalg::scale(&self.mat, cr(s)),
        }
    }

    /// The same map with domain and codomain embedded into full matrix
    /// spaces: compact blocks are included, off-block inputs are dropped.
    pub fn lifted(&self) -> CMat {
        let out = if self.codomain.is_full() { self.mat.clone() } else { &self.codomain.embedding() * &self.mat };
        if self.domain.is_full() {
            out
        } else {
            &out * self.domain.embedding().adjoint()
        }
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub space: HilbertSpace,
    pub hamiltonian: Operator,
    pub jumps: Vec<Operator>,
}

impl LindbladModel {
    pub fn new(space: HilbertSpace, hamiltonian: Operator, jumps: Vec<Operator>) -> Result<Self> {
        let n = space.dim;
        if hamiltonian.nrows() != n || hamiltonian.ncols() != n {
            return dim_err("hamiltonian does not match the Hilbert space");
        }
        if jumps.iter().any(|l| l.nrows() != n || l.ncols() != n) {
            return dim_err("jump operator does not match the Hilbert space");
        }
        let r = linalg::herm_residual(hamiltonian.as_ref());
        if r > TOL_HERM * (1.0 + linalg::max_abs(hamiltonian.as_ref())) {
            return Err(Error::Invalid(format!("hamiltonian not Hermitian (residual {r:.3e})")));
        }
        Ok(Self { space, hamiltonian, jumps })
    }
}

pub mod pauli {
    use super::*;

    pub fn id() -> CMat {
        linalg::eye(2)
    }
    pub fn x() -> CMat {
        linalg::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }
    pub fn y() -> CMat {
        CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => ZERO,
        })
    }
    pub fn z() -> CMat {
        linalg::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }
    /// σ₊ = (σx + iσy)/2, maps |1⟩ to |0⟩.
    pub fn plus() -> CMat {
        linalg::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
    }
    /// σ₋ = (σx − iσy)/2, maps |0⟩ to |1⟩.
    pub fn minus() -> CMat {
        linalg::from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
    }

    pub fn by_name(c: char) -> Option<CMat> {
        match c.to_ascii_uppercase() {
            'I' => Some(id()),
            'X' => Some(x()),
            'Y' => Some(y()),
            'Z' => Some(z()),
            '+' | 'P' => Some(plus()),
            '-' | 'M' => Some(minus()),
            _ => None,
        }
    }
}

/// `𝟙 ⊗ … ⊗ local ⊗ … ⊗ 𝟙` with `local` on `site` (1-based, periodic).
pub fn embed_site(local: &Operator, site: usize, space: &HilbertSpace) -> Result<Operator> {
    let dims = space
        .site_dims
        .as_ref()
        .ok_or_else(|| Error::Invalid("embed_site needs a tensor-factorized space".into()))?;
    if site == 0 {
        return Err(Error::Invalid("sites are 1-based".into()));
    }
    let n = dims.len();
    let s = (site - 1) % n;
    if local.nrows() != dims[s] || local.ncols() != dims[s] {
        return dim_err(format!("local operator dim {} vs site dim {}", local.nrows(), dims[s]));
    }
    let left: usize = dims[..s].iter().product();
    let right: usize = dims[s + 1..].iter().product();
    let a = kron(linalg::eye(left).as_ref(), local.as_ref());
    Ok(kron(a.as_ref(), linalg::eye(right).as_ref()))
}

/// Product of local operators on several sites, e.g. σ₊⁽ʲ⁾σ₋⁽ʲ⁺¹⁾.
pub fn embed_product(ops: &[(CMat, usize)], space: &HilbertSpace) -> Result<Operator> {
    let mut out = linalg::eye(space.dim);
    for (op, site) in ops {
        out = &out * &embed_site(op, *site, space)?;
    }
    Ok(out)
}

/// vec(A X B) = (Bᵀ ⊗ A) vec(X).
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    kron(b.transpose(), a.as_ref())
}

pub fn hamiltonian_generator(h: &CMat) -> CMat {
    let n = h.nrows();
    let id = linalg::eye(n);
    let m = kron(id.as_ref(), h.as_ref()) - kron(h.transpose(), id.as_ref());
    linalg::scale(&m, -I)
}

pub fn dissipator(l: &CMat) -> CMat {
    let n = l.nrows();
    let id = linalg::eye(n);
    let ldl = l.adjoint() * l;
    let lc = l.conjugate().to_owned();
    let mut m = kron(lc.as_ref(), l.as_ref());
    m -= linalg::scale(&kron(id.as_ref(), ldl.as_ref()), cr(0.5));
    m -= linalg::scale(&kron(ldl.transpose(), id.as_ref()), cr(0.5));
    m
}

pub fn liouvillian(model: &LindbladModel) -> Result<SuperOperator> {
    let mut m = hamiltonian_generator(&model.hamiltonian);
    for l in &model.jumps {
        m += dissipator(l);
    }
    SuperOperator::square(Layout::full(model.space.dim), m)
}

/// Hilbert–Schmidt adjoint.
pub fn heisenberg_adjoint(lv: &SuperOperator) -> Result<SuperOperator> {
    if lv.mat.nrows() != lv.mat.ncols() {
        return dim_err("heisenberg_adjoint needs a square superoperator");
    }
    SuperOperator::new(lv.codomain.clone(), lv.domain.clone(), dagger(lv.mat.as_ref()))
}

/// Choi matrix `C[(i,k),(j,l)] = map(|i⟩⟨j|)[k,l]` with row index
/// `i * d_out + k`. Compact layouts are lifted to full matrices first.
pub fn choi_matrix(map: &SuperOperator) -> CMat {
    let din = map.domain.dim();
    let dout = map.codomain.dim();
    let m = map.lifted();
    CMat::from_fn(din * dout, din * dout, |r, c| {
        let (i, k) = (r / dout, r % dout);
        let (j, l) = (c / dout, c % dout);
        m[(l * dout + k, j * din + i)]
    })
}

/// max_ij |Σ_k C[(i,k),(j,k)] − δ_ij|.
pub fn choi_tp_residual(choi: &CMat, din: usize, dout: usize) -> f64 {
    let mut r = 0.0f64;
    for i in 0..din {
        for j in 0..din {
            let mut s = ZERO;
            for k in 0..dout {
                s += choi[(i * dout + k, j * dout + k)];
            }
            if i == j {
                s -= ONE;
            }
            r = r.max(s.norm());
        }
    }
    r
}

#[derive(Clone, Debug)]
pub struct CptpReport {
    pub min_choi_eig: f64,
    pub tp_residual: f64,
}

impl CptpReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.min_choi_eig >= -tol && self.tp_residual <= tol
    }
}

pub fn cptp_report(map: &SuperOperator) -> Result<CptpReport> {
    let c = choi_matrix(map);
    Ok(CptpReport {
        min_choi_eig: linalg::min_herm_eig(&c)?,
        tp_residual: choi_tp_residual(&c, map.domain.dim(), map.codomain.dim()),
    })
}

/// Checks the density-operator invariants; returns the smallest eigenvalue.
pub fn check_density(rho: &CMat, tol: f64) -> Result<f64> {
    if rho.nrows() != rho.ncols() {
        return dim_err("density operator must be square");
    }
    let h = linalg::herm_residual(rho.as_ref());
    if h > tol {
        return Err(Error::Invalid(format!("state not Hermitian ({h:.3e})")));
    }
    let t = linalg::trace(rho.as_ref());
    if (t - ONE).norm() > tol {
        return Err(Error::Invalid(format!("state trace {} != 1", t.re)));
    }
    let m = linalg::min_herm_eig(rho)?;
    if m < -tol {
        return Err(Error::Invalid(format!("state not positive (min eig {m:.3e})")));
    }
    Ok(m)
}

pub fn ket(n: usize, i: usize) -> CMat {
    CMat::from_fn(n, 1, |r, _| if r == i { ONE } else { ZERO })
}

pub fn ketbra(n: usize, i: usize, j: usize) -> CMat {
    CMat::from_fn(n, n, |r, c| if r == i && c == j { ONE } else { ZERO })
}

pub fn expect(obs: &CMat, rho: &CMat) -> c64 {
    linalg::trace((obs * rho).as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_convention() {
        let v = vectorize(&ketbra(2, 0, 1)).unwrap();
        let got: Vec<f64> = (0..4).map(|k| v[(k, 0)].re).collect();
        assert_eq!(got, vec![0.0, 0.0, 1.0, 0.0]);
        let v = vectorize(&linalg::eye(2)).unwrap();
        let got: Vec<f64> = (0..4).map(|k| v[(k, 0)].re).collect();
        assert_eq!(got, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn compact_layout_round_trip() {
        let lay = Layout::new(vec![2, 1, 3]);
        assert_eq!(lay.vec_dim(), 14);
        for k in 0..lay.vec_dim() {
            let (i, j) = lay.position(k);
            assert_eq!(lay.index(i, j), Some(k));
        }
        assert_eq!(lay.index(0, 2), None);
        let e = lay.embedding();
        let g = e.adjoint() * &e;
        assert!((g - linalg::eye(14)).norm_l2() < 1e-15);
    }

    #[test]
    fn embed_site_basics() {
        let sp = HilbertSpace::qubits(2).unwrap();
        let a = embed_site(&pauli::z(), 1, &sp).unwrap();
        let b = kron(pauli::z().as_ref(), linalg::eye(2).as_ref());
        assert_eq!(a, b);
        assert_eq!(embed_site(&pauli::x(), 3, &sp).unwrap(), embed_site(&pauli::x(), 1, &sp).unwrap());
        assert!(embed_site(&pauli::x(), 0, &sp).is_err());

        // σ₊ on the middle qubit: |010⟩ → |000⟩.
        let sp3 = HilbertSpace::qubits(3).unwrap();
        let p = embed_site(&pauli::plus(), 2, &sp3).unwrap();
        let out = &p * ket(8, 0b010);
        assert_eq!(out, ket(8, 0b000));
    }

    #[test]
    fn liouvillian_small_examples() {
        let sp = HilbertSpace::new(2).unwrap();
        let w = 1.3;
        let m = LindbladModel::new(sp.clone(), linalg::scale(&pauli::z(), cr(w / 2.0)), vec![]).unwrap();
        let lv = liouvillian(&m).unwrap();
        let out = lv.apply(&ketbra(2, 0, 1)).unwrap();
        let want = linalg::scale(&ketbra(2, 0, 1), c64::new(0.0, -w));
        assert!((out - want).norm_l2() < 1e-14);

        // Amplitude damping towards |0⟩. With σ± = (σx ± iσy)/2 the operator
        // taking |1⟩ to |0⟩ is σ₊.
        let g: f64 = 0.7;
        let m = LindbladModel::new(sp, linalg::zeros(2, 2), vec![linalg::scale(&pauli::plus(), cr(g.sqrt()))]).unwrap();
        let lv = liouvillian(&m).unwrap();
        let out = lv.apply(&ketbra(2, 1, 1)).unwrap();
        let want = linalg::scale(&(ketbra(2, 0, 0) - ketbra(2, 1, 1)), cr(g));
        assert!((out - want).norm_l2() < 1e-14);
    }

    #[test]
    fn choi_identity_and_transpose() {
        let id = SuperOperator::identity(Layout::full(2));
        let c = choi_matrix(&id);
        let ev = linalg::herm_eigvals(&c).unwrap();
        assert!((ev[3] - 2.0).abs() < 1e-12 && ev[0].abs() < 1e-12 && ev[2].abs() < 1e-12);

        let t = CMat::from_fn(4, 4, |r, c| {
            let (i, j) = (r % 2, r / 2);
            if c == i * 2 + j { ONE } else { ZERO }
        });
        let c = choi_matrix(&SuperOperator::full(t).unwrap());
        let ev = linalg::herm_eigvals(&c).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12);
    }
}
