//! Spectra of Liouvillians: peripheral sector, gap, spectral projector.

use crate::dynamics::{self, Method};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, c64, cr, CMat, ONE, ZERO};
use crate::operator::{self, CptpReport, SuperOperator};

pub const DEFAULT_REL_TOL_PERIPHERAL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<c64>,
    /// Right eigenvectors (columns, unit HS norm). Inside each peripheral
    /// cluster the columns are orthonormal.
    pub right: CMat,
    /// HS duals of the peripheral right eigenvectors, one column per entry
    /// of `peripheral`.
    pub left: CMat,
    pub peripheral: Vec<usize>,
    /// Smallest `|Re λ|` outside the peripheral set; `None` when the
    /// generator has no dissipative part.
    pub gap: Option<f64>,
    pub tol_peripheral: f64,
    /// Condition number of the peripheral overlap matrix.
    pub overlap_cond: f64,
    /// Smallest singular value of each peripheral cluster before
    /// orthonormalization (Jordan-defect indicator).
    pub cluster_min_sv: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CenterManifold {
    pub basis: Vec<CMat>,
    pub frequencies: Vec<f64>,
    pub kernel_dim: usize,
}

/// Largest absolute column sum; a cheap stand-in for `‖𝓛‖`.
pub fn generator_scale(lv: &CMat) -> f64 {
    dynamics::one_norm(lv)
}

/// Residuals of the two linear Lindblad constraints: trace annihilation
/// and Hermiticity preservation.
pub fn structural_residuals(lv: &SuperOperator) -> (f64, f64) {
    let lay = &lv.domain;
    let id = lay.identity_vec();
    let tr_res = linalg::max_abs((id.adjoint() * &lv.mat).as_ref());
    // vec(X†) = conj(S vec X) with S the index swap (i,j) -> (j,i).
    let swap: Vec<usize> = (0..lay.vec_dim())
        .map(|k| {
            let (i, j) = lay.position(k);
            lay.index(j, i).expect("blocks are square")
        })
        .collect();
    let mut herm = 0.0f64;
    for c in 0..lv.mat.ncols() {
        for r in 0..lv.mat.nrows() {
            herm = herm.max((lv.mat[(swap[r], swap[c])] - lv.mat[(r, c)].conj()).norm());
        }
    }
    (tr_res, herm)
}

pub fn eig_superoperator(lv: &SuperOperator, tol_peripheral: Option<f64>) -> Result<SpectralData> {
    if !lv.is_square() {
        return dim_err("eig_superoperator needs a square generator");
    }
    let scale = generator_scale(&lv.mat);
    let tol = tol_peripheral.unwrap_or(DEFAULT_REL_TOL_PERIPHERAL * scale.max(1.0));
    let mut warnings = vec![];
    let (tr_res, herm_res) = structural_residuals(lv);
    if tr_res > 1e-9 * scale.max(1.0) || herm_res > 1e-9 * scale.max(1.0) {
        warnings.push(format!(
            "input is not a Lindbladian matrix (trace residual {tr_res:.2e}, hermiticity residual {herm_res:.2e})"
        ));
    }

    let e = linalg::eig(&lv.mat)?;
    let n = e.values.len();
    if let Some(bad) = e.values.iter().find(|l| l.re > tol) {
        return Err(Error::Certification {
            what: "eigenvalue with positive real part (non-Lindblad input)".into(),
            witness: bad.re,
        });
    }
    let mut right = e.right.clone();
    for j in 0..n {
        let nv = right.col(j).norm_l2();
        if nv > 0.0 {
            for i in 0..n {
                right[(i, j)] = right[(i, j)] * cr(1.0 / nv);
            }
        }
    }

    let peripheral: Vec<usize> = (0..n).filter(|&i| e.values[i].re.abs() < tol).collect();
    if peripheral.is_empty() {
        return Err(Error::Numerical("no peripheral eigenvalue found; kernel should be non-empty".into()));
    }
    let gap = (0..n)
        .filter(|i| !peripheral.contains(i))
        .map(|i| e.values[i].re.abs())
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));

    // Cluster peripheral eigenvalues and orthonormalize within clusters.
    let mut clusters: Vec<Vec<usize>> = vec![];
    for &i in &peripheral {
        match clusters.iter_mut().find(|c| (e.values[c[0]] - e.values[i]).norm() < tol) {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    let mut cluster_min_sv = vec![];
    for c in &clusters {
        let block = CMat::from_fn(n, c.len(), |i, k| right[(i, c[k])]);
        let d = linalg::svd(&block)?;
        cluster_min_sv.push(d.s.last().copied().unwrap_or(0.0));
        for (k, &idx) in c.iter().enumerate() {
            for i in 0..n {
                right[(i, idx)] = d.u[(i, k)];
            }
        }
    }
    let vp = CMat::from_fn(n, peripheral.len(), |i, k| right[(i, peripheral[k])]);
    let wp = CMat::from_fn(n, peripheral.len(), |i, k| e.left[(i, peripheral[k])]);
    let overlap = wp.adjoint() * &vp;
    let overlap_cond = linalg::cond(&overlap)?;
    if overlap_cond > 1e8 {
        warnings.push(format!("peripheral overlap matrix ill-conditioned ({overlap_cond:.2e})"));
    }
    // Duals D with D† V_p = 𝟙: D = W_p (W_p† V_p)^{-†}.
    let inv = linalg::inverse(&overlap);
    let left = &wp * inv.adjoint();

    Ok(SpectralData {
        eigenvalues: e.values,
        right,
        left,
        peripheral,
        gap,
        tol_peripheral: tol,
        overlap_cond,
        cluster_min_sv,
        warnings,
    })
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_peripheral(&self, i: usize) -> bool {
        self.peripheral.binary_search(&i).is_ok()
    }

    /// `max |⟨left_i, right_j⟩ − δ_ij|` over peripheral `i` and all `j`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let g = self.left.adjoint() * &self.right;
        let mut r = 0.0f64;
        for (a, &i) in self.peripheral.iter().enumerate() {
            for j in 0..self.n() {
                let want = if i == j { ONE } else { ZERO };
                r = r.max((g[(a, j)] - want).norm());
            }
        }
        r
    }

    pub fn peripheral_values(&self) -> Vec<c64> {
        self.peripheral.iter().map(|&i| self.eigenvalues[i]).collect()
    }
}

pub fn center_manifold(sd: &SpectralData) -> Result<CenterManifold> {
    // A Jordan block shows up as a numerically rank-deficient cluster.
    if let Some(&m) = sd.cluster_min_sv.iter().find(|&&s| s < 1e-6) {
        return Err(Error::Certification {
            what: "Jordan defect in the peripheral sector".into(),
            witness: m,
        });
    }
    let n = sd.n();
    let d = (n as f64).sqrt().round() as usize;
    let lay = operator::Layout::full(d);
    let mut basis = vec![];
    let mut frequencies = vec![];
    for &i in &sd.peripheral {
        let v = CMat::from_fn(n, 1, |r, _| sd.right[(r, i)]);
        basis.push(if d * d == n { lay.devectorize(&v)? } else { v });
        frequencies.push(sd.eigenvalues[i].im);
    }
    let kernel_dim = frequencies.iter().filter(|w| w.abs() < sd.tol_peripheral).count();
    Ok(CenterManifold { basis, frequencies, kernel_dim })
}

/// `𝓟 = Σ_{i peripheral} |right_i⟩⟨left_i|` on the generator's layout.
pub fn projector_matrix(sd: &SpectralData) -> CMat {
    let vp = CMat::from_fn(sd.n(), sd.peripheral.len(), |i, k| sd.right[(i, sd.peripheral[k])]);
    &vp * sd.left.adjoint()
}

#[derive(Clone, Debug)]
pub struct ProjectorReport {
    pub idempotence: f64,
    pub commutator: Option<f64>,
    pub cptp: CptpReport,
}

impl ProjectorReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.idempotence <= tol && self.commutator.is_none_or(|c| c <= tol) && self.cptp.ok(tol)
    }
}

pub fn projector_report(p: &SuperOperator, lv: Option<&SuperOperator>) -> Result<ProjectorReport> {
    let scale = linalg::max_abs(p.mat.as_ref()).max(1.0);
    let idempotence = linalg::max_abs((&(&p.mat * &p.mat) - &p.mat).as_ref()) / scale;
    let commutator = lv.map(|l| {
        let c = &(&p.mat * &l.mat) - &(&l.mat * &p.mat);
        linalg::max_abs(c.as_ref()) / linalg::max_abs(l.mat.as_ref()).max(1.0)
    });
    Ok(ProjectorReport { idempotence, commutator, cptp: operator::cptp_report(p)? })
}

/// Spectral projector onto the center manifold, certified CPTP.
pub fn spectral_projector(sd: &SpectralData) -> Result<SuperOperator> {
    if sd.overlap_cond >= 1e8 {
        return Err(Error::Certification {
            what: "peripheral biorthogonal system ill-conditioned".into(),
            witness: sd.overlap_cond,
        });
    }
    let n = sd.n();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return dim_err("spectral_projector expects a full operator space");
    }
    let p = SuperOperator::full(projector_matrix(sd))?;
    let rep = projector_report(&p, None)?;
    if rep.idempotence > 1e-8 {
        return Err(Error::Certification { what: "projector not idempotent".into(), witness: rep.idempotence });
    }
    if rep.cptp.min_choi_eig < -1e-8 {
        return Err(Error::Certification {
            what: "projector not completely positive (min Choi eigenvalue)".into(),
            witness: rep.cptp.min_choi_eig,
        });
    }
    if rep.cptp.tp_residual > 1e-8 {
        return Err(Error::Certification { what: "projector not trace preserving".into(), witness: rep.cptp.tp_residual });
    }
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub bound: Vec<f64>,
    pub gamma: f64,
    pub fitted_rate: Option<f64>,
}

/// `‖e^{𝓛t}ρ₀ − 𝓟e^{𝓛t}ρ₀‖_tr` along `times`, the smallest admissible
/// `Γ` for the bound `Γ e^{−(Δ−δ)t}`, and the late-time fitted rate.
pub fn verify_exponential_convergence(
    lv: &SuperOperator,
    p: &SuperOperator,
    rho0: &CMat,
    times: &[f64],
    gap: f64,
    delta: f64,
) -> Result<ConvergenceReport> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("times must be increasing".into()));
    }
    let traj = dynamics::propagate(lv, rho0, times, Method::Auto)?;
    let mut errors = Vec::with_capacity(times.len());
    for rho in &traj.states {
        let prho = p.apply(rho)?;
        errors.push(dynamics::trace_norm(&(rho - &prho))?);
    }
    let rate = gap - delta;
    let gamma = times
        .iter()
        .zip(&errors)
        .map(|(t, e)| e * (rate * t).exp())
        .fold(0.0f64, f64::max);
    let bound = times.iter().map(|t| gamma * (-rate * t).exp()).collect();
    let fitted_rate = dynamics::decay_fit(&errors, times, None).ok().map(|f| f.rate);
    Ok(ConvergenceReport { times: times.to_vec(), errors, bound, gamma, fitted_rate })
}

/// Spectrum as CSV rows `(re, im, is_peripheral)`.
pub fn spectrum_rows(sd: &SpectralData) -> Vec<(f64, f64, bool)> {
    (0..sd.n())
        .map(|i| (sd.eigenvalues[i].re, sd.eigenvalues[i].im, sd.is_peripheral(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{liouvillian, pauli, HilbertSpace, LindbladModel};

    #[test]
    fn damping_spectrum_closed_form() {
        let g = 1.0;
        let sp = HilbertSpace::new(2).unwrap();
        let m = LindbladModel::new(sp, linalg::zeros(2, 2), vec![linalg::scale(&pauli::plus(), cr(g))]).unwrap();
        let sd = eig_superoperator(&liouvillian(&m).unwrap(), None).unwrap();
        let mut re: Vec<f64> = sd.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-1.0, -0.5, -0.5, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((sd.gap.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(sd.peripheral.len(), 1);
    }

    #[test]
    fn unitary_generator_has_no_gap() {
        let sp = HilbertSpace::new(3).unwrap();
        let mut rng = linalg::seeded(3);
        let h = linalg::random_hermitian(&mut rng, 3);
        let m = LindbladModel::new(sp, h, vec![]).unwrap();
        let sd = eig_superoperator(&liouvillian(&m).unwrap(), None).unwrap();
        assert!(sd.gap.is_none());
        assert_eq!(center_manifold(&sd).unwrap().basis.len(), 9);
        let p = spectral_projector(&sd).unwrap();
        assert!(linalg::max_abs((&p.mat - linalg::eye(9)).as_ref()) < 1e-8);
    }
}
