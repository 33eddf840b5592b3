//! Seeded random elements. Every sample index gets its own ChaCha stream so
//! results do not depend on evaluation order or thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::Backend;
use crate::element::AlgebraElement;
use crate::error::Result;
use crate::matrix::MatrixElement;

/// Generator for sample `index` of a run seeded with `seed`.
pub fn rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn unit_disk(r: &mut impl Rng) -> Complex64 {
    Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

/// A random element of norm `norm`.
///
/// Fourier coefficients for `|k|_inf <= band` are drawn from the unit square
/// and damped by `2^{-|k|_1}`, so samples are smooth rather than white noise
/// and their inverses stay well inside the degree cap.
pub fn element(
    backend: &Backend,
    band: usize,
    norm: f64,
    r: &mut impl Rng,
) -> Result<AlgebraElement> {
    let raw = if backend.is_fourier() {
        let d = backend.dim;
        let side = 2 * band as i64 + 1;
        let count = (side as usize).pow(d as u32);
        let mut items = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat as i64;
            let mut k = vec![0i64; d];
            for slot in k.iter_mut().rev() {
                *slot = rem % side - band as i64;
                rem /= side;
            }
            let damp = 0.5f64.powi(k.iter().map(|x| x.abs() as i32).sum());
            items.push((k, unit_disk(r) * damp));
        }
        AlgebraElement::from_coeffs(backend, items)?
    } else {
        let d = backend.dim;
        let m = DMatrix::from_fn(d, d, |_, _| unit_disk(r));
        AlgebraElement::from_dense(backend, m)?
    };
    let n = raw.norm();
    Ok(if n > 0.0 {
        raw.scale_real(norm / n)
    } else {
        raw
    })
}

/// `1 + h` with `|h| = small < 1`, invertible by the Neumann series.
pub fn near_unit(
    backend: &Backend,
    band: usize,
    small: f64,
    r: &mut impl Rng,
) -> Result<AlgebraElement> {
    Ok(&AlgebraElement::one(backend) + &element(backend, band, small, r)?)
}

/// A random `n x n` matrix whose entries have norm `norm / n`.
pub fn matrix(
    backend: &Backend,
    n: usize,
    band: usize,
    norm: f64,
    r: &mut impl Rng,
) -> Result<MatrixElement> {
    let entries = (0..n * n)
        .map(|_| element(backend, band, norm / n as f64, r))
        .collect::<Result<Vec<_>>>()?;
    MatrixElement::from_entries(backend, n, entries)
}

/// A random column of length `n` with entries of norm `norm`.
pub fn vector(
    backend: &Backend,
    n: usize,
    band: usize,
    norm: f64,
    r: &mut impl Rng,
) -> Result<Vec<AlgebraElement>> {
    (0..n).map(|_| element(backend, band, norm, r)).collect()
}

/// A random real in `[lo, hi)`.
pub fn uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;

    #[test]
    fn streams_are_reproducible() {
        let b = BackendConfig::default_torus();
        let a = element(&b, 3, 1.0, &mut rng(7, 2)).unwrap();
        let c = element(&b, 3, 1.0, &mut rng(7, 2)).unwrap();
        let d = element(&b, 3, 1.0, &mut rng(7, 3)).unwrap();
        assert_eq!(a.dist(&c), 0.0);
        assert!(a.dist(&d) > 0.0);
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_samples_have_requested_norm() {
        let b = BackendConfig::default_matrix();
        let a = element(&b, 0, 0.3, &mut rng(1, 0)).unwrap();
        assert!((a.norm() - 0.3).abs() < 1e-10);
    }
}
