//! Browser bindings for three lindred operations. Every export returns a
//! JSON string; failures come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use lindred::dynamics::{self, Method};
use lindred::linalg::{self, CMat};
use lindred::models::{self, DephasingSpec, JumpNormalization, XxzSpec};
use lindred::operator::{self, liouvillian};
use lindred::reduction;

/// Dense superoperators grow as 16^N; keep the page responsive.
const MAX_SITES: usize = 4;

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn err(e: lindred::Error) -> String {
    e.to_string()
}

fn check_sites(n: usize) -> Result<(), String> {
    if !(2..=MAX_SITES).contains(&n) {
        return Err(format!("N must be between 2 and {MAX_SITES}"));
    }
    Ok(())
}

fn xxz_spec(n: usize, omega: f64, a_xy: f64, a_z: f64, gamma: f64) -> Result<XxzSpec, String> {
    check_sites(n)?;
    let spec = XxzSpec { n, omega, a_xy, a_z, gamma, normalization: JumpNormalization::Amplitude };
    spec.validate().map_err(err)?;
    Ok(spec)
}

fn spectrum(n: usize, omega: f64, a_xy: f64, a_z: f64, gamma: f64) -> Result<Value, String> {
    let spec = xxz_spec(n, omega, a_xy, a_z, gamma)?;
    let lv = liouvillian(&models::build_xxz(&spec).map_err(err)?).map_err(err)?;
    let red = reduction::reduce(&lv, None, 0).map_err(err)?;
    let rows: Vec<Value> = lindred::spectral::spectrum_rows(&red.spectral)
        .into_iter()
        .map(|(re, im, p)| json!([re, im, p]))
        .collect();
    let blocks: Vec<Value> = red.structure.blocks.iter().map(|b| json!([b.d_f, b.d_g])).collect();
    let h = reduction::block_spectra(&red.model.gkls.layout, &red.model.gkls.hamiltonian).map_err(err)?;
    Ok(json!({
        "eigenvalues": rows,
        "gap": red.spectral.gap,
        "center_dim": red.spectral.peripheral.len(),
        "blocks": blocks,
        "reduced_hamiltonian": h,
    }))
}

fn plus_state(d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| linalg::cr(1.0 / d as f64))
}

fn trajectory(n: usize, omega: f64, a_xy: f64, a_z: f64, gamma: f64, t_max: f64, points: usize, seed: u64) -> Result<Value, String> {
    let spec = xxz_spec(n, omega, a_xy, a_z, gamma)?;
    if !(t_max > 0.0) || points < 2 {
        return Err("need t_max > 0 and at least two points".into());
    }
    let lv = liouvillian(&models::build_xxz(&spec).map_err(err)?).map_err(err)?;
    let red = reduction::reduce(&lv, None, 0).map_err(err)?;
    let d = 1usize << n;
    let rho0 = if seed == 0 { plus_state(d) } else { linalg::random_density(&mut linalg::seeded(seed), d) };
    let times = dynamics::linear_grid(t_max, points.min(2000));
    let full = dynamics::propagate(&lv, &rho0, &times, Method::Auto).map_err(err)?;
    let maps = &red.maps;
    let v0 = &maps.r.mat * maps.r.domain.vectorize(&rho0).map_err(err)?;
    let (rv, _) = dynamics::propagate_vec(&red.model.generator.mat, &v0, &times, Method::Auto).map_err(err)?;
    let xn = models::x_string(n).map_err(err)?;
    let mut exp_full = vec![];
    let mut exp_red = vec![];
    let mut dist = vec![];
    for (rho, v) in full.states.iter().zip(&rv) {
        let approx = maps.j.codomain.devectorize(&(&maps.j.mat * v)).map_err(err)?;
        exp_full.push(operator::expect(&xn, rho).re);
        exp_red.push(operator::expect(&xn, &approx).re);
        dist.push(dynamics::trace_norm(&(rho - &approx)).map_err(err)?);
    }
    Ok(json!({
        "t": times,
        "exp_XN": exp_full,
        "exp_XN_reduced": exp_red,
        "tracedist": dist,
        "gap": red.spectral.gap,
    }))
}

fn populations(n: usize, eps: f64, seed: u64, t_max: f64, points: usize) -> Result<Value, String> {
    check_sites(n)?;
    if eps < 0.0 {
        return Err("eps must be non-negative".into());
    }
    let spec = DephasingSpec::random(n, 1.0, seed);
    let model = models::build_dephasing(&spec).map_err(err)?;
    let d = 1usize << n;
    let rho0 = linalg::random_density(&mut linalg::seeded(seed.wrapping_add(1)), d);
    let times = dynamics::linear_grid(t_max.max(1e-9), points.clamp(2, 2000));
    let full = dynamics::propagate(&model.generator.evaluate(eps), &rho0, &times, Method::Auto).map_err(err)?;
    let gen = linalg::scale(&model.metzler, linalg::cr(eps));
    let p0 = CMat::from_fn(d, 1, |s, _| rho0[(s, s)]);
    let (ps, _) = dynamics::propagate_vec(&gen, &p0, &times, Method::Auto).map_err(err)?;
    let mut worst = 0.0f64;
    let mut full0 = vec![];
    let mut red0 = vec![];
    for (rho, p) in full.states.iter().zip(&ps) {
        full0.push(rho[(0, 0)].re);
        red0.push(p[(0, 0)].re);
        for s in 0..d {
            worst = worst.max((rho[(s, s)] - p[(s, 0)]).norm());
        }
    }
    Ok(json!({ "t": times, "p0_full": full0, "p0_reduced": red0, "max_population_error": worst }))
}

/// Liouvillian spectrum, gap, block structure and reduced Hamiltonian of
/// the XXZ chain (amplitude-normalized jumps).
#[wasm_bindgen]
pub fn xxz_spectrum(n: usize, omega: f64, a_xy: f64, a_z: f64, gamma: f64) -> String {
    respond(spectrum(n, omega, a_xy, a_z, gamma))
}

/// `⟨X^{⊗N}(t)⟩` for the full chain and for the reduced model, plus the
/// trace distance between them. `seed = 0` starts from `|+⟩^{⊗N}`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn xxz_trajectory(n: usize, omega: f64, a_xy: f64, a_z: f64, gamma: f64, t_max: f64, points: usize, seed: u64) -> String {
    respond(trajectory(n, omega, a_xy, a_z, gamma, t_max, points, seed))
}

/// Population of `|0…0⟩` in the dephasing chain against the classical
/// Markov chain, and the worst population error over all basis states.
#[wasm_bindgen]
pub fn dephasing_populations(n: usize, eps: f64, seed: u64, t_max: f64, points: usize) -> String {
    respond(populations(n, eps, seed, t_max, points))
}
