//! Analytic families `𝓛_ε = Σ_k ε^k 𝓛₍ₖ₎`, their CPTP-preserving reduction
//! `𝓡₍₀₎𝓛_ε𝓙₍₀₎`, and finite-time error bounds for it.

use crate::dynamics::{self, Method};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, cr, CMat};
use crate::operator::{self, SuperOperator};
use crate::reduction::{lindblad_check, LindbladReport, ReductionMaps};

#[derive(Clone, Debug)]
pub struct PerturbedGenerator {
    /// `𝓛₍₀₎, 𝓛₍₁₎, …`; only the sums need to be Lindblad.
    pub terms: Vec<SuperOperator>,
}

impl PerturbedGenerator {
    pub fn new(terms: Vec<SuperOperator>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::Invalid("a perturbed generator needs at least one term".into()));
        };
        if !first.is_square() {
            return dim_err("generator terms must be square");
        }
        if terms.iter().any(|t| t.domain != first.domain || t.codomain != first.codomain) {
            return dim_err("generator terms act on different spaces");
        }
        Ok(Self { terms })
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn l0(&self) -> &SuperOperator {
        &self.terms[0]
    }

    /// `𝓛₍₁₎`, or zero for a single-term family.
    pub fn l1(&self) -> SuperOperator {
        self.terms.get(1).cloned().unwrap_or_else(|| {
            let t = &self.terms[0];
            SuperOperator::zero(t.domain.clone(), t.codomain.clone())
        })
    }

    pub fn evaluate(&self, eps: f64) -> SuperOperator {
        let mut out = self.terms[0].clone();
        let mut p = 1.0;
        for t in &self.terms[1..] {
            p *= eps;
            out.mat += linalg::scale(&t.mat, cr(p));
        }
        out
    }

    /// `𝓛_ε − 𝓛₍₀₎`.
    pub fn delta(&self, eps: f64) -> SuperOperator {
        let mut out = self.evaluate(eps);
        out.mat -= &self.terms[0].mat;
        out
    }

    /// Runs the Lindblad check on every grid point.
    pub fn check_grid(&self, eps_grid: &[f64]) -> Result<Vec<(f64, LindbladReport)>> {
        eps_grid.iter().map(|&e| Ok((e, lindblad_check(&self.evaluate(e))?))).collect()
    }

    /// Same check, failing on the first ε that is not Lindblad.
    pub fn certify_grid(&self, eps_grid: &[f64]) -> Result<()> {
        for (e, rep) in self.check_grid(eps_grid)? {
            if !rep.ok {
                return Err(Error::Certification {
                    what: format!("generator at eps = {e} is not of Lindblad form"),
                    witness: rep.min_conditional_eig,
                });
            }
        }
        Ok(())
    }

    /// Term-wise compression `𝓡 𝓛₍ₖ₎ 𝓙`.
    pub fn compressed(&self, maps: &ReductionMaps) -> Result<PerturbedGenerator> {
        let terms = self
            .terms
            .iter()
            .map(|t| maps.r.compose(t)?.compose(&maps.j))
            .collect::<Result<Vec<_>>>()?;
        PerturbedGenerator::new(terms)
    }
}

/// Writes `𝓛₀ + Δ𝓛` as `𝓛₀ + ε (Δ𝓛/ε₀)` with `ε₀ = ‖Δ𝓛‖`; returns the
/// family and `ε₀`.
pub fn from_additive(l0: &SuperOperator, delta: &SuperOperator) -> Result<(PerturbedGenerator, f64)> {
    if l0.domain != delta.domain || l0.codomain != delta.codomain {
        return dim_err("from_additive: incompatible terms");
    }
    let eps0 = linalg::spectral_norm(&delta.mat)?;
    if eps0 == 0.0 {
        let g = PerturbedGenerator::new(vec![l0.clone()])?;
        g.certify_grid(&[0.0])?;
        return Ok((g, 0.0));
    }
    let g = PerturbedGenerator::new(vec![l0.clone(), delta.scaled(1.0 / eps0)])?;
    g.certify_grid(&[0.0, 0.5 * eps0, eps0])?;
    Ok((g, eps0))
}

/// `𝒟_{L+εK}` as the three-term family `𝒟_L + ε(·) + ε²𝒟_K`. The middle
/// term is generally not a generator on its own.
pub fn expand_dissipator(l: &CMat, k: &CMat) -> Result<PerturbedGenerator> {
    let n = l.nrows();
    let id = linalg::eye(n);
    let lk = l.adjoint() * k + k.adjoint() * l;
    let mid = operator::sandwich(k, &l.adjoint().to_owned()) + operator::sandwich(l, &k.adjoint().to_owned())
        - linalg::scale(&linalg::kron(id.as_ref(), lk.as_ref()), cr(0.5))
        - linalg::scale(&linalg::kron(lk.transpose(), id.as_ref()), cr(0.5));
    let terms = [operator::dissipator(l), mid, operator::dissipator(k)]
        .into_iter()
        .map(SuperOperator::full)
        .collect::<Result<Vec<_>>>()?;
    PerturbedGenerator::new(terms)
}

/// `𝓡₍₀₎ 𝓛_ε 𝓙₍₀₎`, certified.
pub fn reduced_perturbed(gen: &PerturbedGenerator, maps0: &ReductionMaps, eps: f64) -> Result<SuperOperator> {
    let g = maps0.r.compose(&gen.evaluate(eps))?.compose(&maps0.j)?;
    let rep = lindblad_check(&g)?;
    if !rep.ok {
        return Err(Error::Certification {
            what: format!("reduced generator at eps = {eps} is not of Lindblad form"),
            witness: rep.min_conditional_eig,
        });
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct ErrorBoundReport {
    pub eps: f64,
    pub times: Vec<f64>,
    pub lhs_i: Vec<f64>,
    pub rhs_i: Vec<f64>,
    pub lhs_ii: Vec<f64>,
    pub rhs_ii: Vec<f64>,
    /// False where a right-hand side exceeds 0.5 and the bound says little.
    pub in_window: Vec<bool>,
    pub norm_kind: &'static str,
}

pub const NORM_KIND: &str = "hs-induced spectral norm";

/// Hermitian square root of a positive semidefinite matrix.
fn psd_sqrt(a: &CMat) -> Result<CMat> {
    let (w, v) = linalg::herm_eig(&linalg::hermitian_part(a))?;
    let d = CMat::from_fn(w.len(), w.len(), |i, j| if i == j { cr(w[i].max(0.0).sqrt()) } else { linalg::ZERO });
    Ok(&v * d * v.adjoint())
}

/// Both left-hand sides of the finite-time bounds, for the HS-induced
/// norm. With `𝓟₍₀₎ = 𝓙𝓡` the differences factor through the reduced
/// space, so only `D²×r` blocks are ever formed:
/// `e^{t𝓛}𝓟 − 𝓙e^{tĽ}𝓡 = A 𝓡` and `𝓟e^{t𝓛}𝓟 − 𝓙e^{tĽ}𝓡 = 𝓙 B 𝓡`.
pub fn error_bounds(gen: &PerturbedGenerator, maps0: &ReductionMaps, eps: f64, times: &[f64]) -> Result<ErrorBoundReport> {
    let l_eps = gen.evaluate(eps);
    let red = maps0.r.compose(&l_eps)?.compose(&maps0.j)?;
    let jm = &maps0.j.mat;
    let rm = &maps0.r.mat;
    let r_half = psd_sqrt(&(rm * rm.adjoint()))?;
    let j_half = psd_sqrt(&(jm.adjoint() * jm))?;
    let (full, _) = dynamics::propagate_vec(&l_eps.mat, jm, times, Method::Auto)?;
    let (reduced, _) = dynamics::propagate_vec(&red.mat, &linalg::eye(red.mat.nrows()), times, Method::Auto)?;
    let l1n = linalg::spectral_norm(&gen.delta(eps).mat)?;
    let mut rep = ErrorBoundReport {
        eps,
        times: times.to_vec(),
        lhs_i: vec![],
        rhs_i: vec![],
        lhs_ii: vec![],
        rhs_ii: vec![],
        in_window: vec![],
        norm_kind: NORM_KIND,
    };
    for (k, &t) in times.iter().enumerate() {
        let a = &full[k] - jm * &reduced[k];
        rep.lhs_i.push(linalg::spectral_norm(&(&a * &r_half))?);
        let b = rm * &full[k] - &reduced[k];
        rep.lhs_ii.push(linalg::spectral_norm(&(&j_half * &b * &r_half))?);
        let ri = t * l1n;
        rep.rhs_i.push(ri);
        rep.rhs_ii.push(0.5 * ri * ri);
        rep.in_window.push(ri <= 0.5);
    }
    Ok(rep)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Numerical("need two positive points for a log-log fit".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn evaluate_sums_powers() {
        let a = SuperOperator::full(linalg::eye(4)).unwrap();
        let g = PerturbedGenerator::new(vec![a.clone(), a.clone(), a]).unwrap();
        assert_eq!(g.evaluate(2.0).mat, linalg::scale(&linalg::eye(4), cr(7.0)));
    }

    #[test]
    fn expanded_dissipator_matches_direct() {
        let l = pauli::z();
        let k = pauli::x();
        let g = expand_dissipator(&l, &k).unwrap();
        for eps in [0.0, 0.3, -1.0] {
            let direct = operator::dissipator(&(&l + linalg::scale(&k, cr(eps))));
            assert!(linalg::max_abs((&g.evaluate(eps).mat - &direct).as_ref()) < 1e-13);
        }
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v * v).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }
}
