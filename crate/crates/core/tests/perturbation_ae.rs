use lindred::adiabatic::{self, Gauge};
use lindred::linalg::{self, cr};
use lindred::models::{self, DephasingSpec, JumpNormalization, XxzSpec};
use lindred::operator::{self, liouvillian, pauli, SuperOperator};
use lindred::perturbation::{self, PerturbedGenerator};
use lindred::reduction::{self, ReductionMaps};

fn xxz(n: usize) -> XxzSpec {
    XxzSpec { n, omega: 1.2, a_xy: 2.0, a_z: 4.6, gamma: 1.2, normalization: JumpNormalization::SqrtRate }
}

fn example1(n: usize, seed: u64) -> (PerturbedGenerator, models::Disorder, ReductionMaps) {
    let (gen, dis) = models::xxz_with_disorder(&xxz(n), seed).unwrap();
    let red = reduction::reduce(gen.l0(), None, 0).unwrap();
    (gen, dis, red.maps)
}

#[test]
fn example1_reduced_hamiltonian_tracks_mean_frequency() {
    let n = 3;
    let (gen, dis, maps) = example1(n, 5);
    let w0 = xxz(n).omega0();
    for eps in [0.0, 0.1, -0.1, 0.5, -0.5, 1.0, -1.0] {
        let g = perturbation::reduced_perturbed(&gen, &maps, eps).unwrap();
        let form = reduction::extract_hamiltonian_jumps(&g).unwrap();
        assert!(form.min_kossakowski_eig.abs() < 1e-8 && linalg::max_abs(form.kossakowski.as_ref()) < 1e-8);
        let sp = reduction::block_spectra(&form.layout, &form.hamiltonian).unwrap();
        let half = 0.5 * (w0 + eps * dis.omega_bar);
        assert!((sp[0][1] - half.abs()).abs() < 1e-8 && (sp[0][0] + half.abs()).abs() < 1e-8, "{sp:?}");
    }
}

#[test]
fn error_bounds_vanish_at_zero_and_hold_in_window() {
    let (gen, _, maps) = example1(3, 2);
    let times: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let zero = perturbation::error_bounds(&gen, &maps, 0.0, &times).unwrap();
    assert!(zero.lhs_i.iter().chain(&zero.lhs_ii).all(|&x| x < 1e-9));
    for eps in [0.05, 0.1] {
        let rep = perturbation::error_bounds(&gen, &maps, eps, &times).unwrap();
        for k in 0..times.len() {
            if rep.rhs_i[k] <= 0.2 {
                assert!(rep.lhs_i[k] <= 1.5 * rep.rhs_i[k], "bound (i) at t={}", times[k]);
                assert!(rep.lhs_ii[k] <= 1.5 * rep.rhs_ii[k], "bound (ii) at t={}", times[k]);
            }
        }
    }
}

#[test]
fn error_norm_matches_brute_force_on_two_qubits() {
    let sp = operator::HilbertSpace::qubits(2).unwrap();
    let deph = (1..=2).map(|j| operator::embed_site(&pauli::z(), j, &sp).unwrap()).collect();
    let l0 = liouvillian(&operator::LindbladModel::new(sp.clone(), linalg::zeros(4, 4), deph).unwrap()).unwrap();
    let h1 = operator::embed_site(&pauli::x(), 1, &sp).unwrap() + operator::embed_site(&pauli::y(), 2, &sp).unwrap();
    let l1 = SuperOperator::full(operator::hamiltonian_generator(&h1)).unwrap();
    let gen = PerturbedGenerator::new(vec![l0, l1]).unwrap();
    let red = reduction::reduce(gen.l0(), None, 0).unwrap();
    let (eps, t) = (0.3, 0.7);
    let rep = perturbation::error_bounds(&gen, &red.maps, eps, &[t]).unwrap();
    let full = lindred::dynamics::expm(&linalg::scale(&gen.evaluate(eps).mat, cr(t)));
    let rg = red.maps.r.compose(&gen.evaluate(eps)).unwrap().compose(&red.maps.j).unwrap();
    let small = lindred::dynamics::expm(&linalg::scale(&rg.mat, cr(t)));
    let diff = &full * red.projector.mat.clone() - &red.maps.j.mat * &small * &red.maps.r.mat;
    let exact = linalg::spectral_norm(&diff).unwrap();
    assert!((exact - rep.lhs_i[0]).abs() <= 1e-9 * exact.max(1.0));
    let mut rng = linalg::seeded(4);
    let mut best = 0.0f64;
    for _ in 0..200 {
        // Plain random directions underestimate the norm in 16 dimensions;
        // a few power steps on D†D push each sample towards the top.
        let mut v = linalg::random_complex(&mut rng, 16, 1);
        for _ in 0..10 {
            v = diff.adjoint() * (&diff * &v);
            v = linalg::scale(&v, cr(1.0 / v.norm_l2()));
        }
        best = best.max((&diff * &v).norm_l2() / v.norm_l2());
    }
    assert!(best <= exact * (1.0 + 1e-9) && best >= 0.95 * exact, "sampled {best} vs {exact}");
}

#[test]
fn emerging_unitarity_for_hamiltonian_perturbation() {
    let (gen, _, maps) = example1(3, 8);
    let g = maps.r.compose(&gen.terms[1]).unwrap().compose(&maps.j).unwrap();
    let form = reduction::extract_hamiltonian_jumps(&g).unwrap();
    assert!(linalg::max_abs(form.kossakowski.as_ref()) < 1e-8);
}

#[test]
fn lk_expansion_middle_term_is_not_a_generator() {
    let g = perturbation::expand_dissipator(&pauli::z(), &pauli::x()).unwrap();
    let mid = reduction::lindblad_check(&g.terms[1]).unwrap();
    assert!(!mid.ok);
    assert!(mid.max_real_eig.unwrap() > 1e-6, "{mid:?}");
    g.certify_grid(&[-1.0, -0.3, 0.0, 0.3, 1.0]).unwrap();
}

#[test]
fn from_additive_reproduces_sum() {
    let (gen, _, _) = example1(2, 3);
    let l0 = gen.l0().clone();
    let delta = gen.terms[1].scaled(0.4);
    let (fam, eps0) = perturbation::from_additive(&l0, &delta).unwrap();
    let diff = &fam.evaluate(eps0).mat - (&l0.mat + &delta.mat);
    assert!(linalg::max_abs(diff.as_ref()) < 1e-12);
    let (single, e) = perturbation::from_additive(&l0, &l0.scaled(0.0)).unwrap();
    assert_eq!(e, 0.0);
    assert_eq!(single.terms.len(), 1);
}

#[test]
fn block_split_amplitude_damping() {
    let sp = operator::HilbertSpace::qubits(1).unwrap();
    let g = 0.6f64;
    let m = operator::LindbladModel::new(sp, linalg::zeros(2, 2), vec![linalg::scale(&pauli::plus(), cr(g.sqrt()))]).unwrap();
    let lv = liouvillian(&m).unwrap();
    let red = reduction::reduce(&lv, None, 0).unwrap();
    let split = adiabatic::block_split(&lv, &red.maps).unwrap();
    assert_eq!((split.peripheral_dim, split.stable_dim), (1, 3));
    assert!(split.l0_block[(0, 0)].norm() < 1e-12);
    let mut ev: Vec<f64> = linalg::eigvals(&split.ls_block).unwrap().iter().map(|l| l.re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in ev.iter().zip([-g, -g / 2.0, -g / 2.0]) {
        assert!((a - b).abs() < 1e-10, "{ev:?}");
    }
    let ident = SuperOperator::identity(lv.domain.clone());
    let maps = ReductionMaps { r: ident.clone(), j: ident, check_dim: 4 };
    let unitary = SuperOperator::full(operator::hamiltonian_generator(&pauli::z())).unwrap();
    assert_eq!(adiabatic::block_split(&unitary, &maps).unwrap().stable_dim, 0);
}

#[test]
fn ae_example1_gauges() {
    let n = 3;
    let (gen, _, maps) = example1(n, 5);
    let split = adiabatic::block_split(gen.l0(), &maps).unwrap();
    let sol = adiabatic::solve_p1(&split, &gen.l1()).unwrap();
    let p0 = maps.projector().mat;
    let cond = &p0 * &sol.p1 + &sol.p1 * &p0 - &sol.p1;
    assert!(linalg::max_abs(cond.as_ref()) < 1e-8);

    let l_check0 = reduction::reduced_generator(gen.l0(), &maps).unwrap();
    let mut random_comm = vec![];
    for seed in 0..30u64 {
        for gauge in [Gauge::Zero, Gauge::RandomCommutant(seed), Gauge::RandomUniform(seed)] {
            let ae = adiabatic::first_order_ae(&gen, &maps, gauge).unwrap();
            assert!(ae.invariance_residual <= 1e-7, "{gauge:?}: {}", ae.invariance_residual);
            assert!(ae.gauge_residual <= 1e-10);
            assert!(linalg::max_abs((&ae.l_hat0 - &l_check0.mat).as_ref()) <= 1e-10);
            for eps in [0.1, 0.5] {
                let bound = 2.0 * eps * eps * linalg::spectral_norm(&ae.r1).unwrap() * linalg::spectral_norm(&ae.j1).unwrap();
                assert!(ae.rj_defect(eps).unwrap() <= bound + 1e-12);
            }
            match gauge {
                Gauge::RandomUniform(_) => random_comm.push(ae.commutator_norm),
                _ => {
                    assert!(ae.commutator_norm <= 1e-9, "{gauge:?}");
                    let rep = adiabatic::certify_first_order(&ae, &[-0.5, -0.1, 0.1, 0.5]).unwrap();
                    assert!(rep.all_pass());
                    for eps in [-0.5, 0.1] {
                        let alg = perturbation::reduced_perturbed(&gen, &maps, eps).unwrap();
                        let d = linalg::max_abs((&ae.l_tilde(eps).unwrap().mat - &alg.mat).as_ref());
                        assert!(d <= 1e-9, "{d}");
                    }
                }
            }
        }
        if seed >= 4 {
            break;
        }
    }
    random_comm.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(random_comm[random_comm.len() / 2] > 1e-3);
}

#[test]
fn example2_metzler_and_ae() {
    let spec = DephasingSpec::random(3, 1.3, 17);
    let model = models::build_dephasing(&spec).unwrap();
    let red = reduction::reduce(model.generator.l0(), None, 0).unwrap();
    assert_eq!(red.structure.blocks.len(), 8);
    assert!(red.structure.blocks.iter().all(|b| b.d_f == 1 && b.d_g == 1));
    let dm = linalg::max_abs((&red.maps.r.mat - &model.maps.r.mat).as_ref())
        .max(linalg::max_abs((&red.maps.j.mat - &model.maps.j.mat).as_ref()));
    assert!(dm < 1e-10, "pipeline maps differ from diagonal extraction: {dm}");
    for eps in [0.0, 0.1, 0.5, 1.0] {
        let g = perturbation::reduced_perturbed(&model.generator, &model.maps, eps).unwrap();
        let want = linalg::scale(&model.metzler, cr(eps));
        assert!(linalg::max_abs((&g.mat - &want).as_ref()) < 1e-9);
    }
    for gauge in [Gauge::Zero, Gauge::RandomUniform(1), Gauge::RandomCommutant(2)] {
        let ae = adiabatic::first_order_ae(&model.generator, &model.maps, gauge).unwrap();
        assert!(linalg::max_abs((&ae.l_hat1 - &model.metzler).as_ref()) < 1e-9);
        assert!(adiabatic::certify_first_order(&ae, &[0.1, 0.5, 1.0]).unwrap().all_pass());
    }
}
