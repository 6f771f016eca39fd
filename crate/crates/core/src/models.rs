//! Model zoo: dissipative XXZ chain, its disordered perturbation, and the
//! dephasing chain with transverse noise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, I, ONE};
use crate::operator::{
    self, embed_product, embed_site, heisenberg_adjoint, liouvillian, pauli, HilbertSpace, Layout,
    LindbladModel, SuperOperator,
};
use crate::perturbation::PerturbedGenerator;
use crate::reduction::ReductionMaps;

/// How the rate parameter enters the hopping jump operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpNormalization {
    /// `L_j = √γ σ₊⁽ʲ⁾σ₋⁽ʲ⁺¹⁾`; the slowest decay rate is `γ/2`.
    SqrtRate,
    /// `L_j = γ σ₊⁽ʲ⁾σ₋⁽ʲ⁺¹⁾`; the slowest decay rate is `γ²/2`. This is the
    /// normalization behind the published gap value `Δ = 0.72` at `γ = 1.2`.
    Amplitude,
}

#[derive(Clone, Debug)]
pub struct XxzSpec {
    pub n: usize,
    pub omega: f64,
    pub a_xy: f64,
    pub a_z: f64,
    pub gamma: f64,
    pub normalization: JumpNormalization,
}

impl XxzSpec {
    /// Parameters of the published N = 5 simulations.
    pub fn figure_defaults(n: usize) -> Self {
        Self { n, omega: 1.2, a_xy: 2.0, a_z: 4.6, gamma: 1.2, normalization: JumpNormalization::Amplitude }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Invalid("XXZ chain needs N >= 2".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Invalid("gamma must be positive".into()));
        }
        if self.a_xy < 0.0 {
            return Err(Error::Invalid("A_xy must be non-negative".into()));
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        self.omega * self.n as f64
    }

    pub fn jump_amplitude(&self) -> f64 {
        match self.normalization {
            JumpNormalization::SqrtRate => self.gamma.sqrt(),
            JumpNormalization::Amplitude => self.gamma,
        }
    }
}

fn bond(space: &HilbertSpace, a: &CMat, b: &CMat, j: usize) -> Result<CMat> {
    embed_product(&[(a.clone(), j), (b.clone(), j + 1)], space)
}

pub fn xxz_hamiltonian(spec: &XxzSpec) -> Result<CMat> {
    let sp = HilbertSpace::qubits(spec.n)?;
    let mut h = linalg::zeros(sp.dim, sp.dim);
    let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
    for j in 1..=spec.n {
        h += linalg::scale(&embed_site(&z, j, &sp)?, cr(spec.omega / 2.0));
        let xy = bond(&sp, &x, &x, j)? + bond(&sp, &y, &y, j)?;
        h += linalg::scale(&xy, cr(spec.a_xy / 2.0));
        h += linalg::scale(&bond(&sp, &z, &z, j)?, cr(spec.a_z));
    }
    Ok(linalg::hermitian_part(&h))
}

pub fn build_xxz(spec: &XxzSpec) -> Result<LindbladModel> {
    spec.validate()?;
    let sp = HilbertSpace::qubits(spec.n)?;
    let h = xxz_hamiltonian(spec)?;
    let c = cr(spec.jump_amplitude());
    let jumps = (1..=spec.n)
        .map(|j| Ok(linalg::scale(&bond(&sp, &pauli::plus(), &pauli::minus(), j)?, c)))
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::new(sp, h, jumps)
}

/// `J_z = ½ Σ σ_z⁽ʲ⁾`.
pub fn jz(n: usize) -> Result<CMat> {
    let sp = HilbertSpace::qubits(n)?;
    let mut out = linalg::zeros(sp.dim, sp.dim);
    for j in 1..=n {
        out += linalg::scale(&embed_site(&pauli::z(), j, &sp)?, cr(0.5));
    }
    Ok(out)
}

/// `max(‖[J_z,H]‖, ‖[J_z,L_j]‖, ‖𝓛†(J_z)‖)`.
pub fn strong_symmetry_residual(model: &LindbladModel) -> Result<f64> {
    let n = model.space.n_sites();
    let j = jz(n)?;
    let mut r = linalg::max_abs(linalg::commutator(&j, &model.hamiltonian).as_ref());
    for l in &model.jumps {
        r = r.max(linalg::max_abs(linalg::commutator(&j, l).as_ref()));
    }
    let adj = heisenberg_adjoint(&liouvillian(model)?)?;
    r = r.max(linalg::max_abs(adj.apply(&j)?.as_ref()));
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct SectorData {
    /// Magnetizations `N/2, N/2 − 1, …, −N/2`.
    pub m_values: Vec<f64>,
    /// `d_m = C(N, N/2 − m)` in the order of `m_values`.
    pub dims: Vec<usize>,
    /// Permutation: `|0_L⟩, |1_L⟩`, then the inner sectors by decreasing m.
    pub u: CMat,
    /// `ρ̄_m = Π_m / d_m` for the inner sectors `|m| < N/2`.
    pub steady_states: Vec<CMat>,
    pub inner_m: Vec<f64>,
    pub x_l: CMat,
    pub y_l: CMat,
    pub z_l: CMat,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of down spins (bits equal to 1) in a basis label.
fn ones(s: usize) -> usize {
    s.count_ones() as usize
}

/// Sector projector `Π_m` for `m = N/2 − k`, `k` the number of ones.
pub fn sector_projector(n: usize, k: usize) -> CMat {
    let d = 1 << n;
    CMat::from_fn(d, d, |i, j| if i == j && ones(i) == k { ONE } else { linalg::ZERO })
}

pub fn sector_data(n: usize) -> Result<SectorData> {
    if n < 2 {
        return Err(Error::Invalid("sector data needs N >= 2".into()));
    }
    let d = 1usize << n;
    let m_values: Vec<f64> = (0..=n).map(|k| n as f64 / 2.0 - k as f64).collect();
    let dims: Vec<usize> = (0..=n).map(|k| binomial(n, k)).collect();
    let mut order = vec![0, d - 1];
    for k in 1..n {
        order.extend((0..d).filter(|&s| ones(s) == k));
    }
    let u = CMat::from_fn(d, d, |i, c| if order[c] == i { ONE } else { linalg::ZERO });
    let steady_states = (1..n)
        .map(|k| linalg::scale(&sector_projector(n, k), cr(1.0 / binomial(n, k) as f64)))
        .collect();
    let inner_m = (1..n).map(|k| n as f64 / 2.0 - k as f64).collect();
    let x_l = operator::ketbra(d, 0, d - 1) + operator::ketbra(d, d - 1, 0);
    let z_l = operator::ketbra(d, 0, 0) - operator::ketbra(d, d - 1, d - 1);
    let y_l = linalg::scale(&(&x_l * &z_l), I);
    Ok(SectorData { m_values, dims, u, steady_states, inner_m, x_l, y_l, z_l })
}

/// `⟨X_L(t)⟩ = a_x cos(ω₀t) − a_y sin(ω₀t)`.
pub fn logical_x_prediction(sd: &SectorData, rho0: &CMat, omega0: f64, times: &[f64]) -> Vec<f64> {
    let ax = operator::expect(&sd.x_l, rho0).re;
    let ay = operator::expect(&sd.y_l, rho0).re;
    times.iter().map(|t| ax * (omega0 * t).cos() - ay * (omega0 * t).sin()).collect()
}

/// `X^{⊗N}`.
pub fn x_string(n: usize) -> Result<CMat> {
    let sp = HilbertSpace::qubits(n)?;
    let ops: Vec<(CMat, usize)> = (1..=n).map(|j| (pauli::x(), j)).collect();
    embed_product(&ops, &sp)
}

/// Closed-form center-manifold projector of the XXZ chain:
/// `𝓟(ρ) = W₀†W₀ρW₀†W₀ + Σ_m tr(Π_m ρ) Π_m/d_m`.
pub fn xxz_projector_analytic(n: usize) -> Result<SuperOperator> {
    let d = 1usize << n;
    let lay = Layout::full(d);
    let mut p = linalg::zeros(d * d, d * d);
    let w = [0usize, d - 1];
    for &a in &w {
        for &b in &w {
            let k = b * d + a;
            p[(k, k)] = ONE;
        }
    }
    for k in 1..n {
        let dm = binomial(n, k) as f64;
        let states: Vec<usize> = (0..d).filter(|&s| ones(s) == k).collect();
        for &s in &states {
            for &t in &states {
                p[(t * d + t, s * d + s)] = cr(1.0 / dm);
            }
        }
    }
    SuperOperator::square(lay, p)
}

/// Largest off-diagonal entry of `𝓛(|s⟩⟨s|)` over basis states; zero when
/// the diagonal algebra is invariant (the `A_xy = 0` case).
pub fn diagonal_invariance_residual(lv: &SuperOperator) -> Result<f64> {
    let d = lv.domain.dim();
    let mut r = 0.0f64;
    for s in 0..d {
        let out = lv.apply(&operator::ketbra(d, s, s))?;
        for j in 0..d {
            for i in 0..d {
                if i != j {
                    r = r.max(out[(i, j)].norm());
                }
            }
        }
    }
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct Disorder {
    pub h1: CMat,
    pub omega: Vec<f64>,
    pub a_x: Vec<f64>,
    pub a_y: Vec<f64>,
    pub a_z: Vec<f64>,
    pub omega_bar: f64,
}

/// `H₁ = Σ_j [ω_j/2 σ_z + A_x,j σ_xσ_x + A_y,j σ_yσ_y + A_z,j σ_zσ_z]` with
/// couplings drawn i.i.d. from `U[0, 2)`.
pub fn disorder_perturbation(n: usize, seed: u64) -> Result<Disorder> {
    let mut rng = linalg::seeded(seed);
    let (mut om, mut ax, mut ay, mut az) = (vec![], vec![], vec![], vec![]);
    for _ in 0..n {
        om.push(2.0 * rng.gen::<f64>());
        ax.push(2.0 * rng.gen::<f64>());
        ay.push(2.0 * rng.gen::<f64>());
        az.push(2.0 * rng.gen::<f64>());
    }
    disorder_from(n, om, ax, ay, az)
}

pub fn disorder_from(n: usize, omega: Vec<f64>, a_x: Vec<f64>, a_y: Vec<f64>, a_z: Vec<f64>) -> Result<Disorder> {
    let sp = HilbertSpace::qubits(n)?;
    let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
    let mut h = linalg::zeros(sp.dim, sp.dim);
    for j in 1..=n {
        h += linalg::scale(&embed_site(&z, j, &sp)?, cr(omega[j - 1] / 2.0));
        h += linalg::scale(&bond(&sp, &x, &x, j)?, cr(a_x[j - 1]));
        h += linalg::scale(&bond(&sp, &y, &y, j)?, cr(a_y[j - 1]));
        h += linalg::scale(&bond(&sp, &z, &z, j)?, cr(a_z[j - 1]));
    }
    let omega_bar = omega.iter().sum();
    Ok(Disorder { h1: linalg::hermitian_part(&h), omega, a_x, a_y, a_z, omega_bar })
}

/// XXZ chain plus `ε`-scaled disorder, as a two-term family.
pub fn xxz_with_disorder(spec: &XxzSpec, seed: u64) -> Result<(PerturbedGenerator, Disorder)> {
    let l0 = liouvillian(&build_xxz(spec)?)?;
    let dis = disorder_perturbation(spec.n, seed)?;
    let l1 = SuperOperator::square(l0.domain.clone(), operator::hamiltonian_generator(&dis.h1))?;
    Ok((PerturbedGenerator::new(vec![l0, l1])?, dis))
}

#[derive(Clone, Debug)]
pub struct DephasingSpec {
    pub n: usize,
    pub a_z: f64,
    pub mu_x: Vec<f64>,
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
}

impl DephasingSpec {
    pub fn random(n: usize, a_z: f64, seed: u64) -> Self {
        let mut rng = linalg::seeded(seed);
        let mut v = || (0..n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>();
        let mu_x = v();
        let mu_plus = v();
        let mu_minus = v();
        Self { n, a_z, mu_x, mu_plus, mu_minus }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Invalid("dephasing chain needs N >= 1".into()));
        }
        for v in [&self.mu_x, &self.mu_plus, &self.mu_minus] {
            if v.len() != self.n {
                return Err(Error::Invalid("one rate per site is required".into()));
            }
            if v.iter().any(|&m| m < 0.0 || !m.is_finite()) {
                return Err(Error::Invalid("rates must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.mu_x[j].powi(2) + self.mu_minus[j].powi(2)).collect()
    }

    pub fn beta(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.mu_x[j].powi(2) + self.mu_plus[j].powi(2)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DephasingModel {
    pub generator: PerturbedGenerator,
    pub maps: ReductionMaps,
    /// `Σ_j 𝟙 ⊗ [[−α_j, β_j], [α_j, −β_j]] ⊗ 𝟙` (without the ε factor).
    pub metzler: CMat,
}

pub fn metzler_matrix(spec: &DephasingSpec) -> CMat {
    let (a, b) = (spec.alpha(), spec.beta());
    let n = spec.n;
    let d = 1usize << n;
    let mut m = linalg::zeros(d, d);
    for j in 0..n {
        let local = linalg::from_real(&[&[-a[j], b[j]], &[a[j], -b[j]]]);
        let left = linalg::eye(1 << j);
        let right = linalg::eye(1 << (n - j - 1));
        let t = linalg::kron(left.as_ref(), local.as_ref());
        m += linalg::kron(t.as_ref(), right.as_ref());
    }
    m
}

/// Diagonal extraction and embedding for the classical reduced space.
pub fn classical_maps(d: usize) -> Result<ReductionMaps> {
    let lay = Layout::new(vec![1; d]);
    let full = Layout::full(d);
    let mut r = linalg::zeros(d, d * d);
    for s in 0..d {
        r[(s, s * d + s)] = ONE;
    }
    let j = r.adjoint().to_owned();
    Ok(ReductionMaps {
        r: SuperOperator::new(full.clone(), lay.clone(), r)?,
        j: SuperOperator::new(lay, full, j)?,
        check_dim: d,
    })
}

pub fn build_dephasing(spec: &DephasingSpec) -> Result<DephasingModel> {
    spec.validate()?;
    let sp = HilbertSpace::qubits(spec.n)?;
    let z = pauli::z();
    let mut h0 = linalg::zeros(sp.dim, sp.dim);
    let mut deph = vec![];
    for j in 1..=spec.n {
        h0 += linalg::scale(&bond(&sp, &z, &z, j)?, cr(spec.a_z));
        deph.push(embed_site(&z, j, &sp)?);
    }
    let l0 = liouvillian(&LindbladModel::new(sp.clone(), h0, deph)?)?;
    let mut jumps = vec![];
    for j in 1..=spec.n {
        jumps.push(linalg::scale(&embed_site(&pauli::x(), j, &sp)?, cr(spec.mu_x[j - 1])));
        jumps.push(linalg::scale(&embed_site(&pauli::plus(), j, &sp)?, cr(spec.mu_plus[j - 1])));
        jumps.push(linalg::scale(&embed_site(&pauli::minus(), j, &sp)?, cr(spec.mu_minus[j - 1])));
    }
    let l1 = liouvillian(&LindbladModel::new(sp.clone(), linalg::zeros(sp.dim, sp.dim), jumps)?)?;
    Ok(DephasingModel {
        generator: PerturbedGenerator::new(vec![l0, l1])?,
        maps: classical_maps(sp.dim)?,
        metzler: metzler_matrix(spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        let sd = sector_data(5).unwrap();
        assert_eq!(sd.dims, vec![1, 5, 10, 10, 5, 1]);
        assert_eq!(sd.dims.iter().sum::<usize>(), 32);
        let sd = sector_data(2).unwrap();
        assert_eq!(sd.dims, vec![1, 2, 1]);
        let want = linalg::scale(&(operator::ketbra(4, 1, 1) + operator::ketbra(4, 2, 2)), cr(0.5));
        assert_eq!(sd.steady_states[0], want);
    }

    #[test]
    fn logical_operators_are_paulis() {
        let sd = sector_data(3).unwrap();
        let p = |m: &CMat| CMat::from_fn(2, 2, |i, j| m[(i * 7, j * 7)]);
        assert_eq!(p(&sd.y_l), pauli::y());
        assert_eq!(p(&sd.z_l), pauli::z());
    }

    #[test]
    fn disorder_seed_reproducible_and_hermitian() {
        let a = disorder_perturbation(3, 11).unwrap();
        let b = disorder_perturbation(3, 11).unwrap();
        assert_eq!(a.h1, b.h1);
        assert!(linalg::herm_residual(a.h1.as_ref()) < 1e-14);
        assert!(a.omega.iter().all(|&w| (0.0..2.0).contains(&w)));
    }

    #[test]
    fn metzler_single_site() {
        let spec = DephasingSpec { n: 1, a_z: 0.0, mu_x: vec![1.0], mu_plus: vec![0.0], mu_minus: vec![0.0] };
        let m = metzler_matrix(&spec);
        assert_eq!(m, linalg::from_real(&[&[-1.0, 1.0], &[1.0, -1.0]]));
    }
}
