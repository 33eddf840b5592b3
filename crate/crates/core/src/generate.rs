//! Example idempotents: the Bott projector of a degree-`k` map from the
//! 2-torus to the sphere, and random orthogonal projections for the dense
//! matrix backend.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::backend::{Backend, BackendKind};
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::idempotent::{retract_idempotent, Idempotent};
use crate::matrix::MatrixElement;

/// Smallest band at which the Bott formula is attempted.
pub const MIN_BOTT_BAND: usize = 4;

// Shape of the sphere map; the mass term sits inside the gap so the map has
// degree k, and the cross term speeds up the Fourier decay of its
// normalization.
const MASS: f64 = 1.2;
const AMPLITUDE: f64 = 1.3;
const CROSS: f64 = -0.5;

/// The unit vector `n(x, y)` of the degree-`k` sphere map.
pub fn sphere_map(k: i64, x: f64, y: f64) -> [f64; 3] {
    let (sx, cx) = (2.0 * PI * k as f64 * x).sin_cos();
    let (sy, cy) = (2.0 * PI * y).sin_cos();
    let d = [
        AMPLITUDE * sx,
        AMPLITUDE * sy,
        MASS + cx + cy + CROSS * cx * cy,
    ];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / r, d[1] / r, d[2] / r]
}

/// `p = (1 + n . sigma) / 2` for the degree-`k` sphere map, band-limited to
/// `band` and retracted onto an idempotent of `M_2(A)`.
pub fn gen_bott(backend: &Backend, k: i64, band: usize) -> Result<Idempotent> {
    if backend.kind != BackendKind::Torus || backend.dim != 2 {
        return Err(Error::Unsupported(
            "the Bott projector lives over the 2-torus".into(),
        ));
    }
    let half = Complex64::new(0.5, 0.0);
    if k == 0 {
        let one = AlgebraElement::one(backend);
        let zero = AlgebraElement::zero(backend);
        return Idempotent::new(MatrixElement::diagonal(backend, &[one, zero]));
    }
    if band < MIN_BOTT_BAND {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let comp = |i: usize| {
        AlgebraElement::from_function(backend, band, move |x| {
            Complex64::new(sphere_map(k, x[0], x[1])[i], 0.0)
        })
    };
    let (n1, n2, n3) = (comp(0)?, comp(1)?, comp(2)?);
    let one = AlgebraElement::one(backend);
    let i = Complex64::new(0.0, 1.0);
    let p0 = MatrixElement::from_entries(
        backend,
        2,
        vec![
            (&one + &n3).scale(half),
            (&n1 - &n2.scale(i)).scale(half),
            (&n1 + &n2.scale(i)).scale(half),
            (&one - &n3).scale(half),
        ],
    )?;
    retract_idempotent(&p0)
}

/// A random orthogonal projection of rank `rank` in `M_n(M_d(C))`.
pub fn random_projection(
    backend: &Backend,
    n: usize,
    rank: usize,
    r: &mut impl Rng,
) -> Result<Idempotent> {
    if backend.kind != BackendKind::Matrix {
        return Err(Error::Unsupported(
            "random projections need the matrix backend".into(),
        ));
    }
    let big = n * backend.dim;
    if rank > big {
        return Err(Error::BadDimension(format!(
            "rank {rank} in dimension {big}"
        )));
    }
    let g = DMatrix::from_fn(big, rank, |_, _| {
        Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    });
    let q = g.qr().q();
    let p = &q * q.adjoint();
    Idempotent::new(MatrixElement::from_dense_blocks(backend, n, &p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;
    use crate::derivation::Derivation;
    use crate::random;

    /// `c = coeff_0 tr(p [d1 p, d2 p]) / (2 pi i)`, the first Chern number.
    fn chern(p: &Idempotent) -> f64 {
        let pm = p.matrix();
        let d1 = Derivation::Basis(0).apply_matrix(pm).unwrap();
        let d2 = Derivation::Basis(1).apply_matrix(pm).unwrap();
        let f = pm.mul(&d1.commutator(&d2).unwrap()).unwrap();
        let tr = &f.entry(0, 0).clone() + f.entry(1, 1);
        (tr.coeff(&[0, 0]) / Complex64::new(0.0, 2.0 * PI)).re
    }

    #[test]
    fn degree_zero_is_constant() {
        let b = BackendConfig::default_torus();
        let p = gen_bott(&b, 0, 8).unwrap();
        assert_eq!(p.matrix().degree(), 0);
        assert_eq!(p.residual(), 0.0);
    }

    #[test]
    fn band_eight_bott_is_a_rank_one_line_bundle() {
        let b = BackendConfig::default_torus();
        let p = gen_bott(&b, 1, 8).unwrap();
        assert!(p.residual() <= 1e-12);
        assert!(p.matrix().degree() <= b.max_degree);
        let rank = &p.matrix().entry(0, 0).clone() + p.matrix().entry(1, 1);
        assert!((rank.coeff(&[0, 0]).re - 1.0).abs() < 1e-12);
        assert!((chern(&p).abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tiny_band_is_rejected() {
        let b = BackendConfig::default_torus();
        assert!(matches!(
            gen_bott(&b, 1, 2),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn random_projection_is_idempotent() {
        let b = BackendConfig::default_matrix();
        let p = random_projection(&b, 2, 3, &mut random::rng(0, 0)).unwrap();
        assert!(p.residual() < 1e-13);
        let tr: Complex64 = p.matrix().to_dense().trace();
        assert!((tr.re - 3.0).abs() < 1e-12);
    }
}
