//! Checks against computations that share no code with the algebra
//! backends: finite-dimensional representations, pointwise evaluation,
//! dense nalgebra arithmetic and finite differences.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use projmod::connection::gamma_of_derivation;
use projmod::extension::gamma_group;
use projmod::generate::gen_bott;
use projmod::{
    random, AlgebraElement, BackendConfig, Complex64, Derivation, GroupElement, MatrixElement,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e_k -> U^{k_1} V^{k_2}` with clock `U` and shift `V` of size `q`
/// represents the rotation algebra at `theta = m / q`.
fn clock_shift(a: &AlgebraElement, m: i64, q: usize) -> DMatrix<Complex64> {
    let omega = Complex64::from_polar(1.0, -2.0 * PI * m as f64 / q as f64);
    let u = DMatrix::from_fn(q, q, |i, j| {
        if i == j {
            omega.powi(i as i32)
        } else {
            c(0.0, 0.0)
        }
    });
    let v = DMatrix::from_fn(q, q, |i, j| {
        if i == (j + 1) % q {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let power = |x: &DMatrix<Complex64>, k: i64| {
        // unitary, so negative powers are adjoint powers
        let base = if k < 0 { x.adjoint() } else { x.clone() };
        (0..k.unsigned_abs()).fold(DMatrix::identity(q, q), |acc, _| acc * &base)
    };
    let mut out = DMatrix::zeros(q, q);
    for (k, z) in a.coeffs() {
        out += (power(&u, k[0]) * power(&v, k[1])) * z;
    }
    out
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn nctorus_product_matches_clock_and_shift() {
    for (m, q) in [(1, 3), (2, 5), (3, 7)] {
        let b = BackendConfig::nctorus(m as f64 / q as f64, 3, 12).unwrap();
        for i in 0..5 {
            let x = random::element(&b, 3, 1.0, &mut random::rng(7, 2 * i)).unwrap();
            let y = random::element(&b, 3, 1.0, &mut random::rng(7, 2 * i + 1)).unwrap();
            let lhs = clock_shift(&x.mul(&y).unwrap(), m, q);
            let rhs = clock_shift(&x, m, q) * clock_shift(&y, m, q);
            assert!(max_entry(&(lhs - rhs)) < 1e-12, "theta = {m}/{q}");
            let adj = clock_shift(&x.adjoint(), m, q) - clock_shift(&x, m, q).adjoint();
            assert!(max_entry(&adj) < 1e-12);
        }
    }
}

#[test]
fn torus_product_and_inverse_match_pointwise_values() {
    let b = BackendConfig::torus(2, 8, 64).unwrap();
    let x = random::element(&b, 4, 1.0, &mut random::rng(3, 0)).unwrap();
    let y = random::element(&b, 4, 1.0, &mut random::rng(3, 1)).unwrap();
    let xy = x.mul(&y).unwrap();
    let u = random::near_unit(&b, 4, 0.3, &mut random::rng(3, 2)).unwrap();
    let u_inv = u.invert().unwrap();
    for pt in [[0.0, 0.0], [0.13, 0.71], [0.5, 0.25], [0.9, 0.37]] {
        let want = x.evaluate(&pt).unwrap() * y.evaluate(&pt).unwrap();
        assert!((xy.evaluate(&pt).unwrap() - want).norm() < 1e-12);
        let one = u.evaluate(&pt).unwrap() * u_inv.evaluate(&pt).unwrap();
        assert!((one - 1.0).norm() < 1e-9);
    }
}

#[test]
fn matrix_over_dense_backend_matches_block_matrices() {
    let b = BackendConfig::matrix(3).unwrap();
    let x = random::matrix(&b, 2, 0, 1.0, &mut random::rng(11, 0)).unwrap();
    let y = random::matrix(&b, 2, 0, 1.0, &mut random::rng(11, 1)).unwrap();
    let lhs = x.mul(&y).unwrap().to_dense();
    let rhs = x.to_dense() * y.to_dense();
    assert!(max_entry(&(lhs - rhs)) < 1e-13);

    let u = &MatrixElement::identity(&b, 2) + &x.scale_real(0.2);
    let inv = u.invert().unwrap().to_dense();
    let lu = u.to_dense().try_inverse().unwrap();
    assert!(max_entry(&(inv - lu)) < 1e-12);
}

/// `(1 / 2 pi i) tau(tr p [delta_1 p, delta_2 p])`, the degree of the
/// underlying line bundle up to orientation.
fn chern_number(k: i64) -> f64 {
    let b = BackendConfig::default_torus();
    let p = gen_bott(&b, k, 8).unwrap();
    let pm = p.matrix();
    let d1 = Derivation::Basis(0).apply_matrix(pm).unwrap();
    let d2 = Derivation::Basis(1).apply_matrix(pm).unwrap();
    let f = pm.mul(&d1.commutator(&d2).unwrap()).unwrap();
    let trace = (0..f.n())
        .map(|i| f.entry(i, i).scalar_part())
        .sum::<Complex64>();
    let z = trace / c(0.0, 2.0 * PI);
    assert!(z.im.abs() < 1e-6, "imaginary part {}", z.im);
    z.re
}

#[test]
fn bott_projector_has_the_degree_of_its_sphere_map() {
    assert!(chern_number(0).abs() < 1e-6);
    let one = chern_number(1);
    assert!((one.abs() - 1.0).abs() < 1e-6, "got {one}");
    let minus = chern_number(-1);
    assert!((minus + one).abs() < 1e-6, "got {minus}");
}

#[test]
fn lift_derivative_matches_central_difference() {
    let b = BackendConfig::default_torus();
    let p = gen_bott(&b, 1, 8).unwrap();
    let v = [0.6, -0.8];
    let h = 1e-4;
    let at = |t: f64| {
        let g = GroupElement::translation(&b, &[v[0] * t, v[1] * t]).unwrap();
        gamma_group(&g, &p).unwrap().gamma
    };
    let fd = (&at(h) - &at(-h)).scale_real(0.5 / h);
    let exact = gamma_of_derivation(&Derivation::along(&v), &p).unwrap();
    assert!(exact.norm() > 1.0);
    assert!(
        fd.dist(&exact) < 1e-5 * exact.norm(),
        "diff {}",
        fd.dist(&exact)
    );
}
