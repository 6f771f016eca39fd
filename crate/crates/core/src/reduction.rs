//! CPTP factorization `𝓟 = 𝓙𝓡`, reduced generators and their GKLS form.

use crate::algebra::WedderburnStructure;
use crate::dynamics::{self, Method};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, c64, cr, CMat, I, ZERO};
use crate::operator::{self, CptpReport, Layout, SuperOperator};

#[derive(Clone, Debug)]
pub struct ReductionMaps {
    pub r: SuperOperator,
    pub j: SuperOperator,
    /// Dimension of the reduced operator space `Σ d_F,k²`.
    pub check_dim: usize,
}

impl ReductionMaps {
    pub fn layout(&self) -> &Layout {
        &self.r.codomain
    }

    pub fn projector(&self) -> SuperOperator {
        self.j.compose(&self.r).expect("maps are compatible")
    }
}

/// `𝓡(X) = ⊕_k tr_G(W_k X W_k†)` as a matrix.
pub fn reduction_matrix(w: &WedderburnStructure) -> CMat {
    let n = w.dim();
    let lay = w.reduced_layout();
    let voffs = lay.vec_offsets();
    let mut r = linalg::zeros(lay.vec_dim(), n * n);
    for (k, b) in w.blocks.iter().enumerate() {
        let v = w.block_basis(k);
        for a in 0..b.d_f {
            for bb in 0..b.d_f {
                let row = voffs[k] + bb * b.d_f + a;
                for j in 0..n {
                    for i in 0..n {
                        let mut s = ZERO;
                        for g in 0..b.d_g {
                            s += v[(i, a * b.d_g + g)].conj() * v[(j, bb * b.d_g + g)];
                        }
                        r[(row, j * n + i)] = s;
                    }
                }
            }
        }
    }
    r
}

/// `𝓙(X̌) = U(⊕_k X_k ⊗ τ_k ⊕ 0)U†` as a matrix.
pub fn injection_matrix(w: &WedderburnStructure) -> CMat {
    let n = w.dim();
    let lay = w.reduced_layout();
    let voffs = lay.vec_offsets();
    let mut m = linalg::zeros(n * n, lay.vec_dim());
    for (k, b) in w.blocks.iter().enumerate() {
        let v = w.block_basis(k);
        let dg = b.d_g;
        for a in 0..b.d_f {
            for bb in 0..b.d_f {
                let col = voffs[k] + bb * b.d_f + a;
                // V_a τ V_b† with V_a the columns (a, ·).
                let va = v.subcols(a * dg, dg);
                let vb = v.subcols(bb * dg, dg);
                let x = va * &b.tau * vb.adjoint();
                for j in 0..n {
                    for i in 0..n {
                        m[(j * n + i, col)] = x[(i, j)];
                    }
                }
            }
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct MapsReport {
    pub rj_residual: f64,
    pub jr_residual: Option<f64>,
    pub r_cptp: CptpReport,
    pub j_cptp: CptpReport,
}

pub fn maps_report(maps: &ReductionMaps, p: Option<&SuperOperator>) -> Result<MapsReport> {
    let rj = &maps.r.mat * &maps.j.mat;
    let rj_residual = linalg::max_abs((&rj - linalg::eye(maps.check_dim)).as_ref());
    let jr_residual = p.map(|p| linalg::max_abs((&(&maps.j.mat * &maps.r.mat) - &p.mat).as_ref()));
    Ok(MapsReport {
        rj_residual,
        jr_residual,
        r_cptp: operator::cptp_report(&maps.r)?,
        j_cptp: operator::cptp_report(&maps.j)?,
    })
}

/// CPTP factors of `𝓟`. When the fixed states do not have full support
/// (`d_R > 0`) the block partial trace alone loses the weight outside the
/// support, so it is composed with `𝓟`, which must then be supplied.
pub fn build_reduction_maps(w: &WedderburnStructure, p: Option<&SuperOperator>) -> Result<ReductionMaps> {
    let n = w.dim();
    let lay = w.reduced_layout();
    let full = Layout::full(n);
    let mut rm = reduction_matrix(w);
    if w.d_r > 0 {
        let Some(p) = p else {
            return Err(Error::Invalid("fixed states lack full support; the projector is required".into()));
        };
        if p.mat.nrows() != n * n || !p.is_square() {
            return dim_err("projector does not match the structure");
        }
        rm = &rm * &p.mat;
    }
    let r = SuperOperator::new(full.clone(), lay.clone(), rm)?;
    let j = SuperOperator::new(lay.clone(), full, injection_matrix(w))?;
    let maps = ReductionMaps { r, j, check_dim: lay.vec_dim() };
    let rep = maps_report(&maps, None)?;
    if rep.rj_residual > 1e-8 {
        return Err(Error::Certification { what: "RJ != identity".into(), witness: rep.rj_residual });
    }
    for (name, c) in [("R", &rep.r_cptp), ("J", &rep.j_cptp)] {
        if !c.ok(1e-8) {
            return Err(Error::Certification {
                what: format!("{name} not CPTP"),
                witness: c.min_choi_eig.min(-c.tp_residual),
            });
        }
    }
    Ok(maps)
}

#[derive(Clone, Debug)]
pub struct LindbladReport {
    pub ok: bool,
    pub min_conditional_eig: f64,
    pub tp_residual: f64,
    pub herm_residual: f64,
    /// Largest real part in the spectrum; computed for small generators or
    /// when the check fails (a positive value witnesses non-contractivity).
    pub max_real_eig: Option<f64>,
}

pub const CCP_TOL: f64 = 1e-8;

/// Orthonormal vectors `Ω_k / √d_k`, `Ω_k = Σ_{i∈k} |i,i⟩` in Choi indexing.
fn omega_vectors(lay: &Layout) -> CMat {
    let d = lay.dim();
    let offs = lay.offsets();
    let mut om = linalg::zeros(d * d, lay.blocks.len());
    for (k, &dk) in lay.blocks.iter().enumerate() {
        for i in offs[k]..offs[k] + dk {
            om[(i * d + i, k)] = cr(1.0 / (dk as f64).sqrt());
        }
    }
    om
}

/// Conditional complete positivity plus the two linear constraints. For a
/// reduced space `⊕_k B(C^{d_k})` the maximally entangled direction is
/// replaced by the span of the per-block vectors `Ω_k`.
pub fn lindblad_check(gen: &SuperOperator) -> Result<LindbladReport> {
    if !gen.is_square() {
        return dim_err("lindblad_check needs a square generator");
    }
    let lay = &gen.domain;
    let d = lay.dim();
    let (tp_residual, herm_residual) = crate::spectral::structural_residuals(gen);
    let c = linalg::hermitian_part(&operator::choi_matrix(gen));
    let om = omega_vectors(lay);
    let q = linalg::eye(d * d) - &om * om.adjoint();
    let proj = &q * &c * &q;
    let min_conditional_eig = linalg::min_herm_eig(&proj)?;
    let scale = linalg::max_abs(gen.mat.as_ref()).max(1.0);
    let ok = min_conditional_eig >= -CCP_TOL && tp_residual <= 1e-9 * scale && herm_residual <= 1e-9 * scale;
    let max_real_eig = if !ok || gen.mat.nrows() <= 256 {
        Some(linalg::eigvals(&gen.mat)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    Ok(LindbladReport { ok, min_conditional_eig, tp_residual, herm_residual, max_real_eig })
}

pub fn reduced_generator(lv: &SuperOperator, maps: &ReductionMaps) -> Result<SuperOperator> {
    let g = maps.r.compose(lv)?.compose(&maps.j)?;
    let rep = lindblad_check(&g)?;
    if !rep.ok {
        return Err(Error::Certification {
            what: "reduced generator failed the Lindblad check with CPTP maps".into(),
            witness: rep.min_conditional_eig,
        });
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct GklsForm {
    pub layout: Layout,
    /// Block-diagonal, traceless on every block.
    pub hamiltonian: CMat,
    pub jumps: Vec<CMat>,
    /// Dissipative part in the generalized Gell-Mann basis of the layout.
    pub kossakowski: CMat,
    pub min_kossakowski_eig: f64,
    pub reconstruction_residual: f64,
}

/// Generator `−i[H,·] + Σ (L·L† − ½{L†L,·})` on a layout.
pub fn gkls_generator(lay: &Layout, h: &CMat, jumps: &[CMat]) -> Result<SuperOperator> {
    let mut m = operator::hamiltonian_generator(h);
    for l in jumps {
        m += operator::dissipator(l);
    }
    if lay.is_full() {
        return SuperOperator::square(lay.clone(), m);
    }
    let e = lay.embedding();
    SuperOperator::square(lay.clone(), e.adjoint() * &m * &e)
}

/// Orthonormal basis (as Choi vectors) of traceless block operators:
/// off-diagonal symmetric/antisymmetric pairs in lexicographic order, then
/// the diagonal Gell-Mann elements of each block.
pub fn gell_mann_basis(lay: &Layout) -> CMat {
    let d = lay.dim();
    let mut cols: Vec<CMat> = vec![];
    let s = 1.0 / 2f64.sqrt();
    let vec_of = |x: &CMat| CMat::from_fn(d * d, 1, |k, _| x[(k % d, k / d)]);
    for j in 0..d {
        for k in j + 1..d {
            let mut a = linalg::zeros(d, d);
            a[(j, k)] = cr(s);
            a[(k, j)] = cr(s);
            cols.push(vec_of(&a));
            let mut b = linalg::zeros(d, d);
            b[(j, k)] = c64::new(0.0, -s);
            b[(k, j)] = c64::new(0.0, s);
            cols.push(vec_of(&b));
        }
    }
    let offs = lay.offsets();
    for (blk, &dk) in lay.blocks.iter().enumerate() {
        for l in 1..dk {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut a = linalg::zeros(d, d);
            for m in 0..l {
                a[(offs[blk] + m, offs[blk] + m)] = cr(norm);
            }
            a[(offs[blk] + l, offs[blk] + l)] = cr(-(l as f64) * norm);
            cols.push(vec_of(&a));
        }
    }
    let refs: Vec<&CMat> = cols.iter().collect();
    if refs.is_empty() {
        return linalg::zeros(d * d, 0);
    }
    linalg::hstack(&refs)
}

pub fn extract_hamiltonian_jumps(gen: &SuperOperator) -> Result<GklsForm> {
    let lay = gen.domain.clone();
    let d = lay.dim();
    let c = linalg::hermitian_part(&operator::choi_matrix(gen));
    let om = omega_vectors(&lay);
    let q = linalg::eye(d * d) - &om * om.adjoint();
    let kmat = linalg::hermitian_part(&(&q * &c * &q));
    let rest = &c - &kmat;

    // G = ⊕ G_k from (C − K)|Ω_k⟩.
    let offs = lay.offsets();
    let mut g = linalg::zeros(d, d);
    for (k, &dk) in lay.blocks.iter().enumerate() {
        let omk = CMat::from_fn(d * d, 1, |r, _| om[(r, k)] * cr((dk as f64).sqrt()));
        let y = &rest * &omk;
        let cc = (omk.adjoint() * &y)[(0, 0)];
        let x = linalg::scale(&y, cr(1.0 / dk as f64)) - linalg::scale(&omk, cc / cr(2.0 * (dk * dk) as f64));
        for i in offs[k]..offs[k] + dk {
            for r in 0..d {
                g[(r, i)] = x[(i * d + r, 0)];
            }
        }
    }
    let h = linalg::scale(&(&g - g.adjoint()), I * 0.5);
    let h = linalg::hermitian_part(&h);

    // Jumps from K, one (input block, output block) pair at a time.
    let mut jumps = vec![];
    let mut min_eig = f64::INFINITY;
    let scale = linalg::max_abs(c.as_ref()).max(1.0);
    for (ki, &di) in lay.blocks.iter().enumerate() {
        for (ko, &dout) in lay.blocks.iter().enumerate() {
            let idx: Vec<usize> = (offs[ki]..offs[ki] + di)
                .flat_map(|i| (offs[ko]..offs[ko] + dout).map(move |r| i * d + r))
                .collect();
            let sub = CMat::from_fn(idx.len(), idx.len(), |a, b| kmat[(idx[a], idx[b])]);
            let (vals, vecs) = linalg::herm_eig(&sub)?;
            min_eig = min_eig.min(vals[0]);
            for (a, &lam) in vals.iter().enumerate() {
                if lam > 1e-12 * scale {
                    let mut l = linalg::zeros(d, d);
                    for (p, &ix) in idx.iter().enumerate() {
                        l[(ix % d, ix / d)] = vecs[(p, a)] * cr(lam.sqrt());
                    }
                    jumps.push(l);
                }
            }
        }
    }
    if min_eig < -CCP_TOL {
        return Err(Error::Certification { what: "negative Kossakowski eigenvalue".into(), witness: min_eig });
    }
    let basis = gell_mann_basis(&lay);
    let kossakowski = basis.adjoint() * &kmat * &basis;
    let rebuilt = gkls_generator(&lay, &h, &jumps)?;
    let reconstruction_residual = linalg::max_abs((&rebuilt.mat - &gen.mat).as_ref());
    Ok(GklsForm {
        layout: lay,
        hamiltonian: h,
        jumps,
        kossakowski,
        min_kossakowski_eig: min_eig,
        reconstruction_residual,
    })
}

#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub generator: SuperOperator,
    pub gkls: GklsForm,
    pub certification: LindbladReport,
}

pub fn reduced_model(lv: &SuperOperator, maps: &ReductionMaps) -> Result<ReducedModel> {
    let generator = reduced_generator(lv, maps)?;
    let certification = lindblad_check(&generator)?;
    let gkls = extract_hamiltonian_jumps(&generator)?;
    if gkls.reconstruction_residual > 1e-7 * linalg::max_abs(generator.mat.as_ref()).max(1.0) {
        return Err(Error::Certification {
            what: "GKLS reconstruction of the reduced generator".into(),
            witness: gkls.reconstruction_residual,
        });
    }
    Ok(ReducedModel { generator, gkls, certification })
}

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub times: Vec<f64>,
    /// `‖e^{𝓛t}ρ₀ − 𝓙e^{𝓛̌t}𝓡ρ₀‖_tr`.
    pub errors: Vec<f64>,
    /// `max |𝓛̌ + 𝓛̌†|`; zero when the reduced dynamics is unitary.
    pub unitarity_residual: f64,
}

pub fn verify_asymptotic_reduction(
    lv: &SuperOperator,
    maps: &ReductionMaps,
    rho0: &CMat,
    times: &[f64],
) -> Result<AsymptoticReport> {
    let red = maps.r.compose(lv)?.compose(&maps.j)?;
    let full = dynamics::propagate(lv, rho0, times, Method::Auto)?;
    let v0 = &maps.r.mat * &maps.r.domain.vectorize(rho0)?;
    let (rv, _) = dynamics::propagate_vec(&red.mat, &v0, times, Method::Auto)?;
    let mut errors = vec![];
    for (rho, v) in full.states.iter().zip(&rv) {
        let approx = maps.j.codomain.devectorize(&(&maps.j.mat * v))?;
        errors.push(dynamics::trace_norm(&(rho - &approx))?);
    }
    let unitarity_residual = linalg::max_abs((&red.mat + red.mat.adjoint()).as_ref());
    Ok(AsymptoticReport { times: times.to_vec(), errors, unitarity_residual })
}

/// Reduced Hamiltonian block spectra, ascending per block.
pub fn block_spectra(lay: &Layout, h: &CMat) -> Result<Vec<Vec<f64>>> {
    let offs = lay.offsets();
    lay.blocks
        .iter()
        .enumerate()
        .map(|(k, &dk)| {
            let sub = h.submatrix(offs[k], offs[k], dk, dk).to_owned();
            linalg::herm_eigvals(&sub)
        })
        .collect()
}

/// Everything produced by the reduction pipeline for one generator.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub spectral: crate::spectral::SpectralData,
    pub projector: SuperOperator,
    pub structure: WedderburnStructure,
    pub maps: ReductionMaps,
    pub model: ReducedModel,
}

/// Spectrum, projector, block structure, CPTP maps and certified reduced
/// model in one call.
pub fn reduce(lv: &SuperOperator, tol_peripheral: Option<f64>, seed: u64) -> Result<Reduction> {
    let spectral = crate::spectral::eig_superoperator(lv, tol_peripheral)?;
    let projector = crate::spectral::spectral_projector(&spectral)?;
    let structure = crate::algebra::wedderburn_from_projector(&projector, seed)?;
    let maps = build_reduction_maps(&structure, Some(&projector))?;
    let model = reduced_model(lv, &maps)?;
    Ok(Reduction { spectral, projector, structure, maps, model })
}

/// A random CPTP projector with prescribed block structure. Weight outside
/// the support is sent to a fixed random reduced state, so the projector is
/// trace preserving even when `d_R > 0`.
pub fn random_cptp_projector(
    rng: &mut rand_chacha::ChaCha8Rng,
    dims: &[(usize, usize)],
    d_r: usize,
) -> Result<(WedderburnStructure, SuperOperator)> {
    let w = crate::algebra::random_structure(rng, dims, d_r);
    let n = w.dim();
    let lay = w.reduced_layout();
    let jm = injection_matrix(&w);
    let mut p = &jm * reduction_matrix(&w);
    if d_r > 0 {
        let mut sigma = linalg::zeros(lay.dim(), lay.dim());
        let offs = lay.offsets();
        let weights: Vec<f64> = lay.blocks.iter().map(|_| 0.1 + rand::Rng::gen::<f64>(rng)).collect();
        let total: f64 = weights.iter().sum();
        for (k, &dk) in lay.blocks.iter().enumerate() {
            let r = linalg::scale(&linalg::random_density(rng, dk), cr(weights[k] / total));
            sigma.submatrix_mut(offs[k], offs[k], dk, dk).copy_from(&r);
        }
        let feed = &jm * lay.vectorize(&sigma)?;
        let ur = w.u.subcols(n - d_r, d_r).to_owned();
        let pi_r = &ur * ur.adjoint();
        // tr(Π_R X) = Σ_ij conj(Π_R)[i,j] X[i,j] with Π_R Hermitian.
        let row = CMat::from_fn(1, n * n, |_, k| pi_r[(k / n, k % n)]);
        p += &feed * &row;
    }
    Ok((w, SuperOperator::full(p)?))
}
