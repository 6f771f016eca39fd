use proptest::prelude::*;

use lindred::cli::fmt_e;
use lindred::dynamics::{self, Method};
use lindred::linalg::{self, cr, CMat};
use lindred::models::{self, DephasingSpec};
use lindred::operator::{self, liouvillian, pauli, HilbertSpace, Layout, LindbladModel, SuperOperator};
use lindred::reduction;

fn random_generator(seed: u64, d: usize, jumps: usize) -> SuperOperator {
    let mut rng = linalg::seeded(seed);
    let h = linalg::random_hermitian(&mut rng, d);
    let ls = (0..jumps).map(|_| linalg::scale(&linalg::random_complex(&mut rng, d, d), cr(0.6))).collect();
    liouvillian(&LindbladModel::new(HilbertSpace::new(d).unwrap(), h, ls).unwrap()).unwrap()
}

fn apply_kraus(ks: &[CMat], rho: &CMat) -> CMat {
    let mut out = linalg::zeros(rho.nrows(), rho.ncols());
    for k in ks {
        out += k * rho * k.adjoint();
    }
    out
}

#[test]
fn amplitude_damping_matches_kraus_channel() {
    let g: f64 = 0.8;
    let l = linalg::scale(&pauli::plus(), cr(g.sqrt()));
    let sp = HilbertSpace::new(2).unwrap();
    let lv = liouvillian(&LindbladModel::new(sp, linalg::zeros(2, 2), vec![l]).unwrap()).unwrap();
    for t in [0.1, 0.7, 2.5] {
        let decay: f64 = (-g * t).exp();
        let k0 = linalg::from_real(&[&[1.0, 0.0], &[0.0, decay.sqrt()]]);
        let k1 = linalg::from_real(&[&[0.0, (1.0 - decay).sqrt()], &[0.0, 0.0]]);
        let ks = [k0, k1];
        let e = SuperOperator::full(dynamics::expm(&linalg::scale(&lv.mat, cr(t)))).unwrap();
        // Choi matrix of the Kraus channel from its action on matrix units.
        let choi_kraus = CMat::from_fn(4, 4, |r, c| {
            let (i, k) = (r / 2, r % 2);
            let (j, l) = (c / 2, c % 2);
            apply_kraus(&ks, &operator::ketbra(2, i, j))[(k, l)]
        });
        let diff = linalg::max_abs((&operator::choi_matrix(&e) - &choi_kraus).as_ref());
        assert!(diff < 1e-12, "t = {t}: {diff}");
    }
}

#[test]
fn hermiticity_preserved_on_random_inputs() {
    let lv = random_generator(5, 4, 3);
    let mut rng = linalg::seeded(6);
    for _ in 0..100 {
        let x = linalg::random_complex(&mut rng, 4, 4);
        let lhs = lv.apply(&x.adjoint().to_owned()).unwrap();
        let rhs = lv.apply(&x).unwrap().adjoint().to_owned();
        assert!(linalg::max_abs((&lhs - &rhs).as_ref()) < 1e-12);
    }
}

#[test]
fn propagator_is_cptp_semigroup() {
    let lv = random_generator(11, 3, 2);
    for t in [0.05, 0.5, 3.0] {
        let e = SuperOperator::full(dynamics::expm(&linalg::scale(&lv.mat, cr(t)))).unwrap();
        let rep = operator::cptp_report(&e).unwrap();
        assert!(rep.ok(1e-10), "t = {t}: {rep:?}");
    }
    let rho0 = linalg::random_density(&mut linalg::seeded(1), 3);
    let a = dynamics::propagate(&lv, &rho0, &[0.4], Method::Eigen).unwrap().states.remove(0);
    let ab = dynamics::propagate(&lv, &a, &[0.9], Method::Eigen).unwrap().states.remove(0);
    let direct = dynamics::propagate(&lv, &rho0, &[1.3], Method::Taylor).unwrap().states.remove(0);
    assert!(linalg::max_abs((&ab - &direct).as_ref()) < 1e-11);
}

#[test]
fn xxz_sector_states_are_steady() {
    for n in [3, 4] {
        let spec = models::XxzSpec::figure_defaults(n);
        let lv = liouvillian(&models::build_xxz(&spec).unwrap()).unwrap();
        let sd = models::sector_data(n).unwrap();
        for rho in &sd.steady_states {
            assert!(linalg::max_abs(lv.apply(rho).unwrap().as_ref()) < 1e-12);
        }
        let d = 1usize << n;
        let w0 = CMat::from_fn(d, d, |i, j| if i == j && (i == 0 || i == d - 1) { linalg::ONE } else { linalg::ZERO });
        let xl = &w0 * models::x_string(n).unwrap() * &w0;
        assert!(linalg::max_abs((&xl - &sd.x_l).as_ref()) < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_gkls_passes_lindblad_check(seed in any::<u64>(), d in 2usize..5, k in 1usize..4) {
        let lv = random_generator(seed, d, k);
        let rep = reduction::lindblad_check(&lv).unwrap();
        prop_assert!(rep.ok, "{:?}", rep);
    }

    #[test]
    fn random_reduction_stays_lindblad(seed in any::<u64>(), shape in 0usize..4) {
        let shapes: [(&[(usize, usize)], usize); 4] = [(&[(2, 1)], 1), (&[(1, 2), (1, 1)], 0), (&[(2, 2)], 1), (&[(1, 1), (2, 1)], 1)];
        let (dims, d_r) = shapes[shape];
        let mut rng = linalg::seeded(seed);
        let (w, p) = reduction::random_cptp_projector(&mut rng, dims, d_r).unwrap();
        let maps = reduction::build_reduction_maps(&w, Some(&p)).unwrap();
        let lv = random_generator(seed ^ 0x5a5a, w.dim(), 2);
        let g = maps.r.compose(&lv).unwrap().compose(&maps.j).unwrap();
        let rep = reduction::lindblad_check(&g).unwrap();
        prop_assert!(rep.ok && rep.min_conditional_eig >= -1e-8, "{:?}", rep);
    }

    #[test]
    fn compact_layout_round_trip(blocks in proptest::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
        let lay = Layout::new(blocks);
        let mut rng = linalg::seeded(seed);
        let v = linalg::random_complex(&mut rng, lay.vec_dim(), 1);
        let x = lay.devectorize(&v).unwrap();
        prop_assert!(linalg::max_abs((&lay.vectorize(&x).unwrap() - &v).as_ref()) == 0.0);
    }

    #[test]
    fn metzler_columns_sum_to_zero(seed in any::<u64>(), n in 1usize..5) {
        let spec = DephasingSpec::random(n, 1.0, seed);
        let m = models::metzler_matrix(&spec);
        let d = 1usize << n;
        for j in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                s += m[(i, j)].re;
                if i != j {
                    prop_assert!(m[(i, j)].re >= 0.0);
                }
            }
            prop_assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn csv_number_format_round_trips(x in proptest::num::f64::NORMAL) {
        let s = fmt_e(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs());
        let (mant, exp) = s.split_once('e').unwrap();
        prop_assert_eq!(mant.trim_start_matches('-').len(), 14);
        prop_assert!(exp.starts_with('+') || exp.starts_with('-'));
    }
}
