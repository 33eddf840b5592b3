use proptest::prelude::*;

use projmod::connection::{gauge_residual, gauge_transform, Connection, Gauge, OneForm};
use projmod::extension::domega;
use projmod::generate::gen_bott;
use projmod::idempotent::{corner_invert, retract_idempotent, similarity_witness};
use projmod::io;
use projmod::scenario::{run_scenario, ScenarioConfig};
use projmod::{
    random, AlgebraElement, Automorphism, Backend, BackendConfig, Derivation, GroupElement,
    Idempotent, MatrixElement, ProjectiveModule,
};

fn backends() -> Vec<Backend> {
    vec![
        BackendConfig::default_torus(),
        BackendConfig::default_nctorus(),
        BackendConfig::default_matrix(),
    ]
}

fn band(b: &Backend) -> usize {
    if b.is_fourier() {
        3
    } else {
        0
    }
}

fn element(b: &Backend, seed: u64, i: u64) -> AlgebraElement {
    random::element(b, band(b), 1.0, &mut random::rng(seed, i)).unwrap()
}

fn bott() -> ProjectiveModule {
    ProjectiveModule::new(gen_bott(&BackendConfig::default_torus(), 1, 8).unwrap())
}

/// The corner unit `p + p h p` for a small random `h`.
fn corner_unit(e: &ProjectiveModule, seed: u64, i: u64, size: f64) -> MatrixElement {
    let h = random::matrix(
        e.backend(),
        e.n(),
        band(e.backend()),
        size,
        &mut random::rng(seed, i),
    )
    .unwrap();
    e.p() + &e.p().mul3(&h, e.p()).unwrap()
}

fn test_vectors(e: &ProjectiveModule, seed: u64) -> Vec<projmod::ModuleVector> {
    (0..3)
        .map(|i| {
            let v = random::vector(
                e.backend(),
                e.n(),
                band(e.backend()),
                1.0,
                &mut random::rng(seed, 100 + i),
            )
            .unwrap();
            e.project_vector(&v).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn product_is_associative_and_distributive(seed in any::<u64>(), which in 0usize..3) {
        let b = &backends()[which];
        let (x, y, z) = (element(b, seed, 0), element(b, seed, 1), element(b, seed, 2));
        let left = x.mul(&y).unwrap().mul(&z).unwrap();
        let right = x.mul(&y.mul(&z).unwrap()).unwrap();
        prop_assert!(left.dist(&right) <= 1e-12 * left.norm().max(1.0));
        let dist = x.mul(&(&y + &z)).unwrap();
        let sum = &x.mul(&y).unwrap() + &x.mul(&z).unwrap();
        prop_assert!(dist.dist(&sum) <= 1e-12 * sum.norm().max(1.0));
    }

    #[test]
    fn adjoint_reverses_products(seed in any::<u64>(), which in 0usize..3) {
        let b = &backends()[which];
        let (x, y) = (element(b, seed, 0), element(b, seed, 1));
        let lhs = x.mul(&y).unwrap().adjoint();
        let rhs = y.adjoint().mul(&x.adjoint()).unwrap();
        prop_assert!(lhs.dist(&rhs) <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn automorphisms_are_multiplicative(seed in any::<u64>(), which in 0usize..3, v1 in -1.0f64..1.0, v2 in -1.0f64..1.0) {
        let b = &backends()[which];
        let (x, y) = (element(b, seed, 0), element(b, seed, 1));
        let u = random::near_unit(b, band(b), 0.3, &mut random::rng(seed, 2)).unwrap();
        let psi = Automorphism::inner(&u).unwrap().then_after(&GroupElement::translation(b, &[v1, v2]).unwrap().to_automorphism());
        let lhs = psi.apply(&x.mul(&y).unwrap()).unwrap();
        let rhs = psi.apply(&x).unwrap().mul(&psi.apply(&y).unwrap()).unwrap();
        prop_assert!(lhs.dist(&rhs) <= 1e-9 * lhs.norm().max(1.0));
        let back = psi.inverse().apply(&psi.apply(&x).unwrap()).unwrap();
        prop_assert!(back.dist(&x) <= 1e-9);
    }

    #[test]
    fn embedding_into_larger_matrices_is_multiplicative(seed in any::<u64>(), which in 0usize..3) {
        let b = &backends()[which];
        let mut r = random::rng(seed, 0);
        let x = random::matrix(b, 2, band(b), 1.0, &mut r).unwrap();
        let y = random::matrix(b, 2, band(b), 1.0, &mut r).unwrap();
        let lhs = x.mul(&y).unwrap().embed_tilde(4).unwrap();
        let rhs = x.embed_tilde(4).unwrap().mul(&y.embed_tilde(4).unwrap()).unwrap();
        prop_assert!(lhs.dist(&rhs) <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn retraction_and_witness_on_random_projections(seed in any::<u64>()) {
        let b = BackendConfig::default_matrix();
        let p = projmod::generate::random_projection(&b, 2, 3, &mut random::rng(seed, 0)).unwrap();
        let noise = random::matrix(&b, 2, 0, 1e-3, &mut random::rng(seed, 1)).unwrap();
        let q = retract_idempotent(&(p.matrix() + &noise)).unwrap();
        prop_assert!(q.residual() <= 1e-12);
        let w = similarity_witness(&p, &q).unwrap();
        prop_assert!(w.residual <= 1e-10);
        let itself = similarity_witness(&p, &p).unwrap();
        prop_assert!(itself.residual <= 1e-12);
    }

    #[test]
    fn corner_inversion_is_an_involution(seed in any::<u64>(), which in 0usize..2) {
        let e = if which == 0 {
            bott()
        } else {
            let b = BackendConfig::default_matrix();
            ProjectiveModule::new(projmod::generate::random_projection(&b, 2, 3, &mut random::rng(seed, 9)).unwrap())
        };
        let p = e.idempotent();
        let a = corner_unit(&e, seed, 0, 0.3);
        let inv = corner_invert(&a, p).unwrap();
        prop_assert!(a.mul(&inv).unwrap().dist(e.p()) <= 1e-8);
        prop_assert!(corner_invert(&inv, p).unwrap().dist(&a) <= 1e-8);
    }

    #[test]
    fn gauge_action_composes(seed in any::<u64>()) {
        let e = bott();
        let c = Connection::levi_civita(&e);
        let g = Gauge::new(&corner_unit(&e, seed, 0, 0.2), &e).unwrap();
        let h = Gauge::new(&corner_unit(&e, seed, 1, 0.2), &e).unwrap();
        let step = gauge_transform(&gauge_transform(&c, &g).unwrap(), &h).unwrap();
        let once = gauge_transform(&c, &g.compose(&h).unwrap()).unwrap();
        prop_assert!(projmod::connection::connection_distance(&step, &once) <= 1e-8);
        let vs = test_vectors(&e, seed);
        let cg = gauge_transform(&c, &g).unwrap();
        prop_assert!(gauge_residual(&c, &cg, &g, &vs).unwrap() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn connections_differ_by_a_linear_map(seed in any::<u64>(), which in 0usize..2) {
        let b = &backends()[2 * which];
        let e = if b.is_fourier() {
            bott()
        } else {
            ProjectiveModule::new(projmod::generate::random_projection(b, 2, 3, &mut random::rng(seed, 9)).unwrap())
        };
        let values = (0..b.flow_dim())
            .map(|j| {
                let h = random::matrix(b, 2, band(b), 0.5, &mut random::rng(seed, 10 + j as u64)).unwrap();
                e.p().mul3(&h, e.p()).unwrap()
            })
            .collect();
        let lc = Connection::levi_civita(&e);
        let other = Connection::new(&e, OneForm { values }).unwrap();
        let d = Derivation::along(&[0.7, -0.3]);
        let a = element(b, seed, 20);
        for s in test_vectors(&e, seed) {
            let sa = e.act(&s, &a).unwrap();
            let diff = |v: &projmod::ModuleVector| {
                let x = other.covariant_derivative(&d, v).unwrap();
                let y = lc.covariant_derivative(&d, v).unwrap();
                projmod::projective::vec_sub(x.entries(), y.entries())
            };
            let lhs = diff(&sa);
            let rhs = projmod::projective::right_mul(&diff(&s), &a).unwrap();
            prop_assert!(projmod::projective::vec_dist(&lhs, &rhs) <= 1e-9);
        }
    }

    #[test]
    fn domega_is_antisymmetric(seed in any::<u64>()) {
        let e = bott();
        let b = e.backend().clone();
        let x = Derivation::along(&[0.4, 0.9]);
        let y = Derivation::along(&[-1.0, 0.2]).plus(&Derivation::Inner(element(&b, seed, 0).scale_real(0.1)));
        let tests: Vec<_> = test_vectors(&e, seed).into_iter().zip(0..).map(|(s, i)| (s, element(&b, seed, 30 + i))).collect();
        let xy = domega(&x, &y, &e, &tests).unwrap();
        let yx = domega(&y, &x, &e, &tests).unwrap();
        prop_assert!((&xy.matrix + &yx.matrix).norm() <= 1e-12);
    }

    #[test]
    fn json_roundtrip_is_exact(seed in any::<u64>(), which in 0usize..3) {
        let b = &backends()[which];
        let x = random::matrix(b, 2, band(b), 1.0, &mut random::rng(seed, 0)).unwrap();
        let text = io::to_string(&io::matrix_to_json(&x)).unwrap();
        let back = io::matrix_from_json(&io::from_str(&text).unwrap(), None).unwrap();
        prop_assert_eq!(back.dist(&x), 0.0);
    }
}

#[test]
fn reports_are_byte_identical_on_rerun() {
    let cfg = ScenarioConfig {
        seed: 42,
        samples: Some(5),
        ..Default::default()
    };
    let once = serde_json::to_string(&run_scenario("crossed", &cfg).unwrap()).unwrap();
    let twice = serde_json::to_string(&run_scenario("crossed", &cfg).unwrap()).unwrap();
    assert_eq!(once, twice);
    let other = ScenarioConfig { seed: 43, ..cfg };
    assert_ne!(
        once,
        serde_json::to_string(&run_scenario("crossed", &other).unwrap()).unwrap()
    );
}

#[test]
fn idempotents_of_a_file_survive_a_roundtrip() {
    let e = bott();
    let text = io::to_string(&io::idempotent_to_json(e.idempotent())).unwrap();
    let p: Idempotent = io::idempotent_from_json(&io::from_str(&text).unwrap(), None).unwrap();
    assert_eq!(p.matrix().dist(e.p()), 0.0);
}
