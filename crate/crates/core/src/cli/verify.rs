//! Invariant suites behind `lindred verify`.

use clap::ValueEnum;
use serde_json::json;

use super::output::{fmt_prec, OutDir};
use super::Common;
use crate::adiabatic::{self, Gauge};
use crate::algebra;
use crate::dynamics::{self, Method};
use crate::error::Result;
use crate::linalg::{self, cr, CMat};
use crate::models::{self, DephasingSpec, XxzSpec};
use crate::operator::{self, liouvillian, HilbertSpace, Layout, LindbladModel, SuperOperator};
use crate::perturbation;
use crate::reduction;
use crate::spectral;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Operator,
    Dynamics,
    Spectral,
    Algebra,
    Reduction,
    Perturbation,
    Adiabatic,
    Models,
}

const SUITES: [Suite; 8] = [
    Suite::Operator,
    Suite::Dynamics,
    Suite::Spectral,
    Suite::Algebra,
    Suite::Reduction,
    Suite::Perturbation,
    Suite::Adiabatic,
    Suite::Models,
];

struct Check {
    suite: &'static str,
    name: String,
    value: f64,
    tol: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

#[derive(Default)]
struct Table {
    rows: Vec<Check>,
}

impl Table {
    fn le(&mut self, suite: &'static str, name: impl Into<String>, value: f64, tol: f64) {
        self.rows.push(Check { suite, name: name.into(), value, tol });
    }

    fn flag(&mut self, suite: &'static str, name: impl Into<String>, ok: bool) {
        self.le(suite, name, if ok { 0.0 } else { 1.0 }, 0.0);
    }
}

pub(super) fn run(c: &Common, suite: Suite, inject_non_cp: bool) -> Result<bool> {
    let n = c.sites(3)?;
    let mut t = Table::default();
    let chosen: Vec<Suite> = if suite == Suite::All { SUITES.to_vec() } else { vec![suite] };
    for s in chosen {
        match s {
            Suite::Operator => operator_suite(&mut t, c.seed)?,
            Suite::Dynamics => dynamics_suite(&mut t, c.seed)?,
            Suite::Spectral => spectral_suite(&mut t, n)?,
            Suite::Algebra => algebra_suite(&mut t, n, c.seed)?,
            Suite::Reduction => reduction_suite(&mut t, n, c.seed)?,
            Suite::Perturbation => perturbation_suite(&mut t, n, c.seed)?,
            Suite::Adiabatic => adiabatic_suite(&mut t, n, c.seed)?,
            Suite::Models => models_suite(&mut t, n, c.seed)?,
            Suite::All => unreachable!(),
        }
    }
    if inject_non_cp {
        non_cp_fixture(&mut t)?;
    }
    println!("{:<13} {:<52} {:>12} {:>12}  result", "suite", "check", "value", "tol");
    let mut all = true;
    let mut rows = vec![];
    for r in &t.rows {
        let ok = r.pass();
        all &= ok;
        println!(
            "{:<13} {:<52} {:>12} {:>12}  {}",
            r.suite,
            r.name,
            fmt_prec(r.value, 3),
            fmt_prec(r.tol, 1),
            if ok { "PASS" } else { "FAIL" }
        );
        rows.push(json!({ "suite": r.suite, "check": r.name, "value": r.value, "tol": r.tol, "pass": ok }));
    }
    let out = OutDir::new(&c.out)?;
    out.json("verify.json", &json!({ "N": n, "seed": c.seed, "checks": rows, "pass": all }))?;
    println!("{} of {} checks passed", t.rows.iter().filter(|r| r.pass()).count(), t.rows.len());
    Ok(all)
}

fn random_model(seed: u64, d: usize, jumps: usize) -> Result<LindbladModel> {
    let mut rng = linalg::seeded(seed);
    let h = linalg::random_hermitian(&mut rng, d);
    let ls = (0..jumps).map(|_| linalg::scale(&linalg::random_complex(&mut rng, d, d), cr(0.5))).collect();
    LindbladModel::new(HilbertSpace::new(d)?, h, ls)
}

fn operator_suite(t: &mut Table, seed: u64) -> Result<()> {
    const S: &str = "operator";
    let lv = liouvillian(&random_model(seed, 3, 2)?)?;
    let (tr, herm) = spectral::structural_residuals(&lv);
    t.le(S, "trace preservation of random GKLS", tr, 1e-12);
    t.le(S, "hermiticity preservation of random GKLS", herm, 1e-12);
    let rep = reduction::lindblad_check(&lv)?;
    t.le(S, "conditional CP (−min eig)", -rep.min_conditional_eig, 1e-10);
    let e = SuperOperator::full(dynamics::expm(&lv.mat))?;
    let cp = operator::cptp_report(&e)?;
    t.le(S, "e^L Choi positivity (−min eig)", -cp.min_choi_eig, 1e-10);
    t.le(S, "e^L trace preservation", cp.tp_residual, 1e-10);
    let adj = operator::heisenberg_adjoint(&lv)?;
    let id = CMat::from_fn(3, 3, |i, j| if i == j { linalg::ONE } else { linalg::ZERO });
    t.le(S, "unital Heisenberg adjoint", linalg::max_abs(adj.apply(&id)?.as_ref()), 1e-12);
    Ok(())
}

fn dynamics_suite(t: &mut Table, seed: u64) -> Result<()> {
    const S: &str = "dynamics";
    let lv = liouvillian(&random_model(seed + 1, 4, 2)?)?;
    let (a, b) = (0.3, 0.8);
    let ea = dynamics::expm(&linalg::scale(&lv.mat, cr(a)));
    let eb = dynamics::expm(&linalg::scale(&lv.mat, cr(b)));
    let eab = dynamics::expm(&linalg::scale(&lv.mat, cr(a + b)));
    t.le(S, "semigroup e^{(s+t)L} = e^{sL}e^{tL}", linalg::max_abs((&eab - &ea * &eb).as_ref()), 1e-11);
    let rho0 = linalg::random_density(&mut linalg::seeded(seed), 4);
    let times = dynamics::linear_grid(5.0, 11);
    let eig = dynamics::propagate(&lv, &rho0, &times, Method::Eigen)?;
    let tay = dynamics::propagate(&lv, &rho0, &times, Method::Taylor)?;
    let route = eig
        .states
        .iter()
        .zip(&tay.states)
        .map(|(x, y)| linalg::max_abs((x - y).as_ref()))
        .fold(0.0, f64::max);
    t.le(S, "eigen and Taylor propagation agree", route, 1e-9);
    let drift = eig.states.iter().map(|r| (dynamics::trace_of(r).re - 1.0).abs()).fold(0.0, f64::max);
    t.le(S, "trace conserved along trajectory", drift, 1e-10);
    let neg = eig
        .states
        .iter()
        .map(|r| linalg::min_herm_eig(&linalg::hermitian_part(r)).map(|m| -m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    t.le(S, "positivity along trajectory (−min eig)", neg, 1e-10);
    Ok(())
}

fn sqrt_spec(n: usize) -> XxzSpec {
    XxzSpec { normalization: models::JumpNormalization::SqrtRate, ..XxzSpec::figure_defaults(n) }
}

fn xxz(n: usize) -> Result<(XxzSpec, SuperOperator)> {
    let s = sqrt_spec(n);
    let lv = liouvillian(&models::build_xxz(&s)?)?;
    Ok((s, lv))
}

fn spectral_suite(t: &mut Table, n: usize) -> Result<()> {
    const S: &str = "spectral";
    let (s, lv) = xxz(n)?;
    let sd = spectral::eig_superoperator(&lv, None)?;
    t.le(S, format!("XXZ N={n}: center dimension − (N+3)"), (sd.peripheral.len() as f64 - (n + 3) as f64).abs(), 0.0);
    t.le(S, "XXZ gap − γ/2", (sd.gap.unwrap_or(0.0) - s.gamma / 2.0).abs(), 1e-6);
    let mut freqs: Vec<f64> = sd.peripheral_values().iter().map(|l| l.im.abs()).collect();
    freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    t.le(S, "XXZ peripheral frequency − Nω", (freqs[0] - s.omega0()).abs(), 1e-8);
    let p = spectral::spectral_projector(&sd)?;
    let rep = spectral::projector_report(&p, Some(&lv))?;
    t.le(S, "projector idempotence", rep.idempotence, 1e-9);
    t.le(S, "projector commutes with L", rep.commutator.unwrap_or(0.0), 1e-9);
    t.le(S, "projector Choi positivity (−min eig)", -rep.cptp.min_choi_eig, 1e-8);
    let analytic = models::xxz_projector_analytic(n)?;
    t.le(S, "projector equals closed form", linalg::max_abs((&p.mat - &analytic.mat).as_ref()), 1e-8);
    Ok(())
}

fn algebra_suite(t: &mut Table, n: usize, seed: u64) -> Result<()> {
    const S: &str = "algebra";
    let (_, lv) = xxz(n)?;
    let red = reduction::reduce(&lv, None, seed)?;
    let w = &red.structure;
    t.flag(S, "Wedderburn structure invariants", w.check().is_ok());
    let expect: Vec<(usize, usize)> = {
        let mut v = vec![(2, 1)];
        let mut inner: Vec<(usize, usize)> = (1..n).map(|k| (1, models::binomial(n, k))).collect();
        inner.sort_by(|a, b| b.cmp(a));
        v.extend(inner);
        v
    };
    let got: Vec<(usize, usize)> = w.blocks.iter().map(|b| (b.d_f, b.d_g)).collect();
    t.flag(S, format!("XXZ blocks {expect:?}"), got == expect);
    t.le(S, "XXZ d_R", w.d_r as f64, 0.0);
    let mut rng = linalg::seeded(seed + 17);
    let dims = [(2, 2), (1, 3)];
    let (_, p) = reduction::random_cptp_projector(&mut rng, &dims, 1)?;
    let found = algebra::wedderburn_from_projector(&p, seed)?;
    let mut got: Vec<(usize, usize)> = found.blocks.iter().map(|b| (b.d_f, b.d_g)).collect();
    got.sort();
    let mut want = dims.to_vec();
    want.sort();
    t.flag(S, "random projector blocks recovered", got == want && found.d_r == 1);
    Ok(())
}

fn reduction_suite(t: &mut Table, n: usize, seed: u64) -> Result<()> {
    const S: &str = "reduction";
    let (s, lv) = xxz(n)?;
    let red = reduction::reduce(&lv, None, seed)?;
    let rep = reduction::maps_report(&red.maps, Some(&red.projector))?;
    t.le(S, "RJ − I", rep.rj_residual, 1e-9);
    t.le(S, "JR − P", rep.jr_residual.unwrap_or(f64::INFINITY), 1e-9);
    t.le(S, "R Choi positivity (−min eig)", -rep.r_cptp.min_choi_eig, 1e-9);
    t.le(S, "J Choi positivity (−min eig)", -rep.j_cptp.min_choi_eig, 1e-9);
    t.flag(S, "reduced generator Lindblad", red.model.certification.ok);
    t.le(S, "reduced Kossakowski (−min eig)", -red.model.gkls.min_kossakowski_eig, 1e-9);
    let spectra = reduction::block_spectra(&red.model.gkls.layout, &red.model.gkls.hamiltonian)?;
    let top = spectra.first().cloned().unwrap_or_default();
    let w0 = s.omega0() / 2.0;
    let herr = if top.len() == 2 { (top[0] + w0).abs().max((top[1] - w0).abs()) } else { f64::INFINITY };
    t.le(S, "reduced Hamiltonian ±Nω/2", herr, 1e-8);
    let rho0 = linalg::random_density(&mut linalg::seeded(seed), lv.domain.dim());
    let times = [0.0, 5.0, 40.0];
    let asym = reduction::verify_asymptotic_reduction(&lv, &red.maps, &rho0, &times)?;
    t.le(S, "late-time reduction error", asym.errors[2], 1e-6);
    Ok(())
}

fn perturbation_suite(t: &mut Table, n: usize, seed: u64) -> Result<()> {
    const S: &str = "perturbation";
    let (gen, dis) = models::xxz_with_disorder(&sqrt_spec(n), seed)?;
    let red = reduction::reduce(gen.l0(), None, 0)?;
    let mut worst = f64::NEG_INFINITY;
    for e in [-1.0, -0.3, 0.3, 1.0] {
        let g = red.maps.r.compose(&gen.evaluate(e))?.compose(&red.maps.j)?;
        worst = worst.max(-reduction::lindblad_check(&g)?.min_conditional_eig);
    }
    t.le(S, "reduced L_ε Lindblad on ε grid (−min eig)", worst, reduction::CCP_TOL);
    let eps = 0.1;
    let g = perturbation::reduced_perturbed(&gen, &red.maps, eps)?;
    let gk = reduction::extract_hamiltonian_jumps(&g)?;
    let top = reduction::block_spectra(&gk.layout, &gk.hamiltonian)?[0].clone();
    let spec = sqrt_spec(n);
    let want = (spec.omega0() + eps * dis.omega_bar) / 2.0;
    t.le(S, "reduced Hamiltonian ±(Nω+εω̄)/2", (top[1] - want).abs().max((top[0] + want).abs()), 1e-8);
    let times = dynamics::linear_grid(1.0, 6);
    let b = perturbation::error_bounds(&gen, &red.maps, eps, &times)?;
    let mut excess = f64::NEG_INFINITY;
    for k in 0..times.len() {
        excess = excess.max(b.lhs_i[k] - b.rhs_i[k]).max(b.lhs_ii[k] - b.rhs_ii[k]);
    }
    t.le(S, "finite-time bounds (lhs − rhs)", excess, 1e-9);
    Ok(())
}

fn adiabatic_suite(t: &mut Table, n: usize, seed: u64) -> Result<()> {
    const S: &str = "adiabatic";
    let (gen, _) = models::xxz_with_disorder(&sqrt_spec(n), seed)?;
    let red = reduction::reduce(gen.l0(), None, 0)?;
    let base = adiabatic::AeBase::new(&gen, &red.maps)?;
    let eps = [-0.5, -0.1, 0.1, 0.5];
    for g in [Gauge::Zero, Gauge::RandomCommutant(seed)] {
        let ae = base.with_gauge(g)?;
        let rep = adiabatic::certify_first_order(&ae, &eps)?;
        t.le(S, format!("{} gauge invariance residual", g.kind()), rep.invariance_residual, 1e-7);
        t.le(S, format!("{} gauge commutator", g.kind()), rep.commutator_norm, 1e-9);
        t.flag(S, format!("{} gauge Lindblad on ε grid", g.kind()), rep.all_pass());
    }
    let ae = base.with_gauge(Gauge::Zero)?;
    let mut diff = 0.0f64;
    for e in eps {
        let alg = perturbation::reduced_perturbed(&gen, &red.maps, e)?;
        diff = diff.max(linalg::max_abs((&ae.l_tilde(e)?.mat - &alg.mat).as_ref()));
    }
    t.le(S, "zero gauge matches algebraic reduction", diff, 1e-9);
    let rnd = base.with_gauge(Gauge::RandomUniform(seed))?;
    t.le(S, "random gauge invariance residual", rnd.invariance_residual, 1e-7);
    t.le(S, "random gauge R₀J₁ = G", rnd.gauge_residual, 1e-9);
    Ok(())
}

fn models_suite(t: &mut Table, n: usize, seed: u64) -> Result<()> {
    const S: &str = "models";
    let (s, _) = xxz(n)?;
    let m = models::build_xxz(&s)?;
    t.le(S, "XXZ strong symmetry [J_z, H], [J_z, L]", models::strong_symmetry_residual(&m)?, 1e-12);
    let sd = models::sector_data(n)?;
    let xn = models::x_string(n)?;
    let d = 1usize << n;
    let w0 = CMat::from_fn(d, d, |i, j| if i == j && (i == 0 || i == d - 1) { linalg::ONE } else { linalg::ZERO });
    t.le(S, "W₀ X^N W₀ = X_L", linalg::max_abs((&w0 * &xn * &w0 - &sd.x_l).as_ref()), 1e-14);
    let lv = liouvillian(&m)?;
    let mut ss = 0.0f64;
    for rho in &sd.steady_states {
        ss = ss.max(linalg::max_abs(lv.apply(rho)?.as_ref()));
    }
    t.le(S, "sector steady states are fixed", ss, 1e-12);
    let spec = DephasingSpec::random(n, 1.0, seed);
    let dm = models::build_dephasing(&spec)?;
    let met = &dm.metzler;
    let mut off_neg = 0.0f64;
    let mut col = 0.0f64;
    for j in 0..d {
        let mut sum = 0.0;
        for i in 0..d {
            sum += met[(i, j)].re;
            if i != j {
                off_neg = off_neg.max(-met[(i, j)].re);
            }
        }
        col = col.max(sum.abs());
    }
    t.le(S, "Metzler off-diagonal ≥ 0 (−min)", off_neg, 0.0);
    t.le(S, "Metzler column sums", col, 1e-12);
    let l1 = dm.maps.r.compose(&dm.generator.l1())?.compose(&dm.maps.j)?;
    t.le(S, "R L₁ J equals Metzler matrix", linalg::max_abs((&l1.mat - met).as_ref()), 1e-9);
    let lay = dm.maps.layout();
    t.flag(S, "classical layout", *lay == Layout::new(vec![1; d]));
    Ok(())
}

/// `X ↦ (X + Xᵀ)/2` is an idempotent trace-preserving map that is not
/// completely positive. Both the projector check and the Lindblad check of
/// `𝓟 − 𝟙` must reject it.
fn non_cp_fixture(t: &mut Table) -> Result<()> {
    const S: &str = "inject";
    let d = 2;
    let lay = Layout::full(d);
    let mut m = linalg::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, j * d + i)] += cr(0.5);
            m[(j * d + i, i * d + j)] += cr(0.5);
        }
    }
    let p = SuperOperator::square(lay.clone(), m)?;
    let rep = spectral::projector_report(&p, None)?;
    t.le(S, "symmetrized transpose: idempotence", rep.idempotence, 1e-12);
    t.le(S, "symmetrized transpose: Choi positivity (−min eig)", -rep.cptp.min_choi_eig, 1e-8);
    let gen = SuperOperator::square(lay.clone(), &p.mat - linalg::eye(d * d))?;
    let lr = reduction::lindblad_check(&gen)?;
    t.le(S, "P − 1 conditional CP (−min eig)", -lr.min_conditional_eig, reduction::CCP_TOL);
    Ok(())
}
