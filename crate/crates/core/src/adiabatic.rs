//! First-order adiabatic elimination with an explicit gauge
//! `G = 𝓡₍₀₎𝓙₍₁₎`.
//!
//! In the basis `T = [𝓙₍₀₎ | V]`, `V` orthonormal on `Im 𝓠₍₀₎`, the
//! unperturbed generator is block diagonal `L₀ ⊕ L_S`. The first-order maps
//! then follow from two Sylvester equations:
//!
//! ```text
//! L₀ X_B − X_B L_S = 𝓡₍₀₎𝓛₍₁₎V        L_S X_C − X_C L₀ = −S𝓛₍₁₎𝓙₍₀₎
//! 𝓙₍₁₎ = 𝓙₍₀₎G + V X_C    𝓡₍₁₎ = −G𝓡₍₀₎ + X_B S    L̂₍₁₎ = 𝓡₍₀₎𝓛₍₁₎𝓙₍₀₎ + [L̂₍₀₎, G]
//! ```
//!
//! with `S = V†𝓠₍₀₎` the left inverse of `V` that annihilates `Im 𝓟₍₀₎`.

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, cr, CMat, ZERO};
use crate::operator::{Layout, SuperOperator};
use crate::perturbation::PerturbedGenerator;
use crate::reduction::{lindblad_check, LindbladReport, ReductionMaps};

/// Largest Kronecker-lifted Sylvester system solved directly.
const KRON_LIMIT: usize = 200;

#[derive(Clone, Debug)]
pub struct BlockSplit {
    /// `T = [𝓙₍₀₎ | V]`.
    pub basis_to_block: CMat,
    /// `T⁻¹ = [𝓡₍₀₎ ; S]`.
    pub block_to_basis: CMat,
    pub l0_block: CMat,
    pub ls_block: CMat,
    pub peripheral_dim: usize,
    pub stable_dim: usize,
    pub offdiag_residual: f64,
    /// `min |λ₀ − λ_S|` over the two block spectra.
    pub separation: f64,
}

impl BlockSplit {
    fn j0(&self) -> CMat {
        self.basis_to_block.subcols(0, self.peripheral_dim).to_owned()
    }
    fn v(&self) -> CMat {
        self.basis_to_block.subcols(self.peripheral_dim, self.stable_dim).to_owned()
    }
    fn r0(&self) -> CMat {
        self.block_to_basis.subrows(0, self.peripheral_dim).to_owned()
    }
    fn s(&self) -> CMat {
        self.block_to_basis.subrows(self.peripheral_dim, self.stable_dim).to_owned()
    }
}

/// Splits `𝓛₍₀₎` along `Im 𝓟₍₀₎ ⊕ Im 𝓠₍₀₎` with `𝓟₍₀₎ = 𝓙₍₀₎𝓡₍₀₎`.
pub fn block_split(l0: &SuperOperator, maps0: &ReductionMaps) -> Result<BlockSplit> {
    if l0.domain != maps0.r.domain || !l0.is_square() {
        return dim_err("block_split: generator and maps act on different spaces");
    }
    let j0 = maps0.j.mat.clone();
    let r0 = maps0.r.mat.clone();
    let n = j0.nrows();
    let r = j0.ncols();
    let q0 = linalg::eye(n) - &j0 * &r0;
    let v = if r == n { linalg::zeros(n, 0) } else { linalg::orth(&q0, 1e-8)? };
    if v.ncols() != n - r {
        return Err(Error::Numerical(format!("complement has dimension {} instead of {}", v.ncols(), n - r)));
    }
    let s = v.adjoint() * &q0;
    let lm = &l0.mat;
    let l0_block = &r0 * lm * &j0;
    let ls_block = &s * lm * &v;
    let scale = linalg::max_abs(lm.as_ref()).max(1.0);
    let off_b = if v.ncols() > 0 { linalg::max_abs((&r0 * lm * &v).as_ref()) } else { 0.0 };
    let off_c = if v.ncols() > 0 { linalg::max_abs((&s * lm * &j0).as_ref()) } else { 0.0 };
    let offdiag_residual = off_b.max(off_c);
    if offdiag_residual > 1e-8 * scale {
        return Err(Error::Certification {
            what: "generator does not commute with the projector".into(),
            witness: offdiag_residual,
        });
    }
    let e0 = linalg::eigvals(&l0_block)?;
    let es = if v.ncols() > 0 { linalg::eigvals(&ls_block)? } else { vec![] };
    let mut separation = f64::INFINITY;
    for a in &e0 {
        for b in &es {
            separation = separation.min((a - b).norm());
        }
    }
    if separation < 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "block spectra overlap (separation {separation:.2e}); check the peripheral tolerance"
        )));
    }
    Ok(BlockSplit {
        basis_to_block: linalg::hstack(&[&j0, &v]),
        block_to_basis: linalg::vstack(&[&r0, &s]),
        l0_block,
        ls_block,
        peripheral_dim: r,
        stable_dim: n - r,
        offdiag_residual,
        separation,
    })
}

/// Solves `A X − X B = C` for `X`.
#[derive(Clone, Debug)]
pub struct SylvesterSolution {
    pub x: CMat,
    pub residual: f64,
    /// Condition estimate of the Sylvester operator when it was formed
    /// explicitly, else of the eigenbasis used for the shifted solves.
    pub condition: f64,
}

pub fn sylvester(a: &CMat, b: &CMat, c: &CMat) -> Result<SylvesterSolution> {
    let (m, n) = (a.nrows(), b.nrows());
    if c.nrows() != m || c.ncols() != n {
        return dim_err("sylvester: right-hand side has the wrong shape");
    }
    if m == 0 || n == 0 {
        return Ok(SylvesterSolution { x: linalg::zeros(m, n), residual: 0.0, condition: 1.0 });
    }
    let (x, condition) = if m * n <= KRON_LIMIT {
        // vec(AX − XB) = (𝟙⊗A − Bᵀ⊗𝟙) vec X
        let op = linalg::kron(linalg::eye(n).as_ref(), a.as_ref()) - linalg::kron(b.transpose(), linalg::eye(m).as_ref());
        let cond = linalg::cond(&op)?;
        let rhs = CMat::from_fn(m * n, 1, |k, _| c[(k % m, k / m)]);
        let sol = linalg::solve(&op, &rhs);
        (CMat::from_fn(m, n, |i, j| sol[(j * m + i, 0)]), cond)
    } else if m <= n {
        // A = W Λ W⁻¹; each row of W⁻¹X solves a shifted system with B.
        let e = linalg::eig(a)?;
        let w = e.right;
        let cond = linalg::cond(&w)?;
        let ct = linalg::solve(&w, c);
        let mut y = linalg::zeros(m, n);
        for i in 0..m {
            let shifted = (linalg::scale(&linalg::eye(n), e.values[i]) - b).transpose().to_owned();
            let rhs = ct.subrows(i, 1).transpose().to_owned();
            let sol = linalg::solve(&shifted, &rhs);
            for j in 0..n {
                y[(i, j)] = sol[(j, 0)];
            }
        }
        (&w * &y, cond)
    } else {
        // B = W Λ W⁻¹; each column of XW solves a shifted system with A.
        let e = linalg::eig(b)?;
        let w = e.right;
        let cond = linalg::cond(&w)?;
        let cw = c * &w;
        let mut y = linalg::zeros(m, n);
        for j in 0..n {
            let shifted = a - linalg::scale(&linalg::eye(m), e.values[j]);
            let sol = linalg::solve(&shifted, &cw.subcols(j, 1).to_owned());
            for i in 0..m {
                y[(i, j)] = sol[(i, 0)];
            }
        }
        (linalg::solve(&w.transpose().to_owned(), &y.transpose().to_owned()).transpose().to_owned(), cond)
    };
    let residual = linalg::max_abs((a * &x - &x * b - c).as_ref());
    Ok(SylvesterSolution { x, residual, condition })
}

#[derive(Clone, Debug)]
pub struct FirstOrderSolution {
    pub xb: SylvesterSolution,
    pub xc: SylvesterSolution,
    /// `𝓟₍₁₎ = V X_C 𝓡₍₀₎ + 𝓙₍₀₎ X_B S`.
    pub p1: CMat,
}

/// Both Sylvester solves; residuals must stay below `1e-8‖𝓛₍₁₎‖`.
pub fn solve_p1(split: &BlockSplit, l1: &SuperOperator) -> Result<FirstOrderSolution> {
    let (j0, v, r0, s) = (split.j0(), split.v(), split.r0(), split.s());
    let lb = &r0 * &l1.mat * &v;
    let lc = &s * &l1.mat * &j0;
    let xb = sylvester(&split.l0_block, &split.ls_block, &lb)?;
    let neg_lc = linalg::scale(&lc, cr(-1.0));
    let xc = sylvester(&split.ls_block, &split.l0_block, &neg_lc)?;
    for (name, sol) in [("X_B", &xb), ("X_C", &xc)] {
        if sol.condition > 1e10 {
            eprintln!("warning: {name} Sylvester operator ill-conditioned ({:.2e})", sol.condition);
        }
    }
    let tol = 1e-8 * linalg::max_abs(l1.mat.as_ref()).max(1.0);
    let worst = xb.residual.max(xc.residual);
    if worst > tol {
        return Err(Error::Numerical(format!("Sylvester residual {worst:.2e} exceeds {tol:.2e}")));
    }
    let p1 = &v * &xc.x * &r0 + &j0 * &xb.x * &s;
    Ok(FirstOrderSolution { xb, xc, p1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    Zero,
    /// Entries i.i.d. `U[0,1]`.
    RandomUniform(u64),
    /// Diagonal `U[0,1]` entries in an eigenbasis of `L̂₍₀₎`.
    RandomCommutant(u64),
}

impl Gauge {
    pub fn kind(&self) -> &'static str {
        match self {
            Gauge::Zero => "zero",
            Gauge::RandomUniform(_) => "random",
            Gauge::RandomCommutant(_) => "commutant",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Gauge::Zero => None,
            Gauge::RandomUniform(s) | Gauge::RandomCommutant(s) => Some(s),
        }
    }
}

pub fn gauge_matrix(gauge: Gauge, l_hat0: &CMat) -> Result<CMat> {
    let r = l_hat0.nrows();
    match gauge {
        Gauge::Zero => Ok(linalg::zeros(r, r)),
        Gauge::RandomUniform(seed) => {
            let mut rng = linalg::seeded(seed);
            let mut g = linalg::zeros(r, r);
            for j in 0..r {
                for i in 0..r {
                    g[(i, j)] = cr(rng.gen::<f64>());
                }
            }
            Ok(g)
        }
        Gauge::RandomCommutant(seed) => {
            let mut rng = linalg::seeded(seed);
            let e = linalg::eig(l_hat0)?;
            let w = e.right;
            let c = linalg::cond(&w)?;
            if !c.is_finite() || c > 1e8 {
                return Err(Error::Numerical(format!("L̂₀ is (nearly) defective, eigenbasis condition {c:.2e}")));
            }
            let d = CMat::from_fn(r, r, |i, j| if i == j { cr(rng.gen::<f64>()) } else { ZERO });
            Ok(&w * d * linalg::inverse(&w))
        }
    }
}

#[derive(Clone, Debug)]
pub struct AeFirstOrder {
    pub layout: Layout,
    pub l_hat0: CMat,
    pub l_hat1: CMat,
    pub gauge: Gauge,
    pub g: CMat,
    pub j0: CMat,
    pub r0: CMat,
    pub j1: CMat,
    pub r1: CMat,
    pub p1: CMat,
    pub commutator_norm: f64,
    /// `‖𝓛₍₁₎𝓙₍₀₎ + 𝓛₍₀₎𝓙₍₁₎ − 𝓙₍₁₎L̂₍₀₎ − 𝓙₍₀₎L̂₍₁₎‖`.
    pub invariance_residual: f64,
    /// `‖𝓡₍₀₎𝓙₍₁₎ − G‖`.
    pub gauge_residual: f64,
}

impl AeFirstOrder {
    pub fn l_tilde(&self, eps: f64) -> Result<SuperOperator> {
        SuperOperator::square(self.layout.clone(), &self.l_hat0 + linalg::scale(&self.l_hat1, cr(eps)))
    }

    pub fn j_tilde(&self, eps: f64) -> CMat {
        &self.j0 + linalg::scale(&self.j1, cr(eps))
    }

    pub fn r_tilde(&self, eps: f64) -> CMat {
        &self.r0 + linalg::scale(&self.r1, cr(eps))
    }

    /// `‖R̃_ε J̃_ε − 𝟙‖`, which is `ε²‖𝓡₍₁₎𝓙₍₁₎‖`.
    pub fn rj_defect(&self, eps: f64) -> Result<f64> {
        let m = self.r_tilde(eps) * self.j_tilde(eps) - linalg::eye(self.l_hat0.nrows());
        linalg::spectral_norm(&m)
    }
}

/// The gauge-independent part of first-order elimination: the split and
/// both Sylvester solutions. Gauges are applied with [`AeBase::with_gauge`].
#[derive(Clone, Debug)]
pub struct AeBase {
    pub split: BlockSplit,
    pub solution: FirstOrderSolution,
    layout: Layout,
    l0: CMat,
    l1: CMat,
}

impl AeBase {
    pub fn new(gen: &PerturbedGenerator, maps0: &ReductionMaps) -> Result<Self> {
        if gen.order() < 1 {
            return Err(Error::Invalid("adiabatic elimination needs a first-order term".into()));
        }
        let split = block_split(gen.l0(), maps0)?;
        let l1 = gen.l1();
        let solution = solve_p1(&split, &l1)?;
        Ok(Self { split, solution, layout: maps0.layout().clone(), l0: gen.l0().mat.clone(), l1: l1.mat })
    }

    pub fn with_gauge(&self, gauge: Gauge) -> Result<AeFirstOrder> {
        let (j0, v, r0, s) = (self.split.j0(), self.split.v(), self.split.r0(), self.split.s());
        let l_hat0 = self.split.l0_block.clone();
        let g = gauge_matrix(gauge, &l_hat0)?;
        let comm = &l_hat0 * &g - &g * &l_hat0;
        let commutator_norm = linalg::spectral_norm(&comm)?;
        let l_hat1 = &r0 * &self.l1 * &j0 + &comm;
        let j1 = &j0 * &g + &v * &self.solution.xc.x;
        let r1 = linalg::scale(&(&g * &r0), cr(-1.0)) + &self.solution.xb.x * &s;
        let inv = &self.l1 * &j0 + &self.l0 * &j1 - &j1 * &l_hat0 - &j0 * &l_hat1;
        let invariance_residual = linalg::spectral_norm(&inv)?;
        let gauge_residual = linalg::max_abs((&r0 * &j1 - &g).as_ref());
        Ok(AeFirstOrder {
            layout: self.layout.clone(),
            l_hat0,
            l_hat1,
            gauge,
            g,
            j0,
            r0,
            j1,
            r1,
            p1: self.solution.p1.clone(),
            commutator_norm,
            invariance_residual,
            gauge_residual,
        })
    }
}

pub fn first_order_ae(gen: &PerturbedGenerator, maps0: &ReductionMaps, gauge: Gauge) -> Result<AeFirstOrder> {
    AeBase::new(gen, maps0)?.with_gauge(gauge)
}

#[derive(Clone, Debug)]
pub struct AeReport {
    pub gauge: Gauge,
    pub commutator_norm: f64,
    pub eps: Vec<f64>,
    pub lindblad: Vec<LindbladReport>,
    pub invariance_residual: f64,
}

impl AeReport {
    pub fn all_pass(&self) -> bool {
        self.lindblad.iter().all(|r| r.ok)
    }
}

/// Lindblad check of the truncated generator on each ε. A commuting gauge
/// guarantees a pass; other gauges may or may not pass.
pub fn certify_first_order(ae: &AeFirstOrder, eps_grid: &[f64]) -> Result<AeReport> {
    let lindblad = eps_grid
        .iter()
        .map(|&e| lindblad_check(&ae.l_tilde(e)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(AeReport {
        gauge: ae.gauge,
        commutator_norm: ae.commutator_norm,
        eps: eps_grid.to_vec(),
        lindblad,
        invariance_residual: ae.invariance_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn sylvester_diagonal_closed_form() {
        let mut rng = linalg::seeded(3);
        let a = CMat::from_fn(6, 6, |i, j| if i == j { c64::new(0.0, i as f64) } else { ZERO });
        let b = CMat::from_fn(10, 10, |i, j| if i == j { c64::new(-1.0 - i as f64 * 0.3, 0.5) } else { ZERO });
        let c = linalg::random_complex(&mut rng, 6, 10);
        let sol = sylvester(&a, &b, &c).unwrap();
        for i in 0..6 {
            for j in 0..10 {
                let want = c[(i, j)] / (a[(i, i)] - b[(j, j)]);
                assert!((sol.x[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sylvester_routes_agree() {
        let mut rng = linalg::seeded(9);
        let a = linalg::random_complex(&mut rng, 3, 3);
        let b = linalg::random_complex(&mut rng, 80, 80) - linalg::scale(&linalg::eye(80), cr(20.0));
        let c = linalg::random_complex(&mut rng, 3, 80);
        let big = sylvester(&a, &b, &c).unwrap();
        assert!(big.residual < 1e-9, "{}", big.residual);
        let bt = linalg::random_complex(&mut rng, 80, 80) - linalg::scale(&linalg::eye(80), cr(20.0));
        let ct = linalg::random_complex(&mut rng, 80, 3);
        let tall = sylvester(&bt, &a, &ct).unwrap();
        assert!(tall.residual < 1e-9, "{}", tall.residual);
    }
}
