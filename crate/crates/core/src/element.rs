//! Elements of a concrete algebra backend.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::backend::{same_backend, Backend, BackendKind};
use crate::error::{Error, Result};
use crate::fourier::{self, Coeffs, PRODUCT_FLOOR, PRUNE_REL};
use crate::matrix::MatrixElement;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Repr {
    Fourier(Coeffs),
    Dense(DMatrix<Complex64>),
}

/// An element of the algebra selected by its backend: a truncated Fourier
/// series for the torus kinds, a dense complex matrix for the matrix kind.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    backend: Backend,
    pub(crate) repr: Repr,
}

pub(crate) fn ensure_same(a: &Backend, b: &Backend) -> Result<()> {
    if same_backend(a, b) {
        Ok(())
    } else {
        Err(Error::BackendMismatch(format!(
            "{:?} vs {:?}",
            a.kind, b.kind
        )))
    }
}

impl AlgebraElement {
    pub(crate) fn from_repr(backend: &Backend, repr: Repr) -> Self {
        AlgebraElement {
            backend: backend.clone(),
            repr,
        }
    }

    pub(crate) fn fourier(backend: &Backend, c: Coeffs) -> Self {
        Self::from_repr(backend, Repr::Fourier(c))
    }

    pub fn zero(backend: &Backend) -> Self {
        Self::scalar(backend, Complex64::new(0.0, 0.0))
    }

    pub fn one(backend: &Backend) -> Self {
        Self::scalar(backend, Complex64::new(1.0, 0.0))
    }

    /// The scalar `c` times the unit.
    pub fn scalar(backend: &Backend, c: Complex64) -> Self {
        let repr = match backend.kind {
            BackendKind::Matrix => Repr::Dense(DMatrix::identity(backend.dim, backend.dim) * c),
            _ => Repr::Fourier(Coeffs::constant(backend.dim, c)),
        };
        Self::from_repr(backend, repr)
    }

    /// The single Fourier mode `c * e_k`.
    pub fn mode(backend: &Backend, k: &[i64], c: Complex64) -> Result<Self> {
        Self::from_coeffs(backend, [(k.to_vec(), c)])
    }

    /// Builds a Fourier element from `(k, c_k)` pairs; repeated indices add.
    pub fn from_coeffs<I>(backend: &Backend, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        if !backend.is_fourier() {
            return Err(Error::Unsupported(
                "Fourier coefficients on the matrix backend".into(),
            ));
        }
        let items: Vec<_> = coeffs.into_iter().collect();
        let mut degree = 0usize;
        for (k, _) in &items {
            if k.len() != backend.dim {
                return Err(Error::BadDimension(format!(
                    "multi-index of length {} on a {}-torus",
                    k.len(),
                    backend.dim
                )));
            }
            degree = degree.max(
                k.iter()
                    .map(|x| x.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0),
            );
        }
        if degree > backend.max_degree {
            return Err(Error::DegreeOverflow {
                degree,
                max: backend.max_degree,
            });
        }
        let mut c = Coeffs::zeros(backend.dim, degree);
        for (k, v) in items {
            let i = c.index(&k).expect("index within computed degree");
            c.data[i] += v;
        }
        c.prune(PRUNE_REL, 0.0);
        Ok(Self::fourier(backend, c))
    }

    /// Wraps a dense `d x d` array for the matrix backend.
    pub fn from_dense(backend: &Backend, m: DMatrix<Complex64>) -> Result<Self> {
        if backend.kind != BackendKind::Matrix {
            return Err(Error::Unsupported(
                "dense entries on a Fourier backend".into(),
            ));
        }
        if m.nrows() != backend.dim || m.ncols() != backend.dim {
            return Err(Error::BadDimension(format!(
                "expected {0}x{0}, got {1}x{2}",
                backend.dim,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_repr(backend, Repr::Dense(m)))
    }

    /// Fourier coefficients `|k|_inf <= band` of a function on the torus,
    /// computed from samples on a grid fine enough to make aliasing
    /// negligible for smooth `f`.
    pub fn from_function(
        backend: &Backend,
        band: usize,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        if !backend.is_fourier() {
            return Err(Error::Unsupported("sampling on the matrix backend".into()));
        }
        if band > backend.max_degree {
            return Err(Error::DegreeOverflow {
                degree: band,
                max: backend.max_degree,
            });
        }
        let dim = backend.dim;
        let l = fourier::grid_size((8 * band + 1).max(64));
        let total = l.pow(dim as u32);
        let mut samples = Vec::with_capacity(total);
        let mut x = vec![0.0; dim];
        for flat in 0..total {
            let mut r = flat;
            for slot in x.iter_mut().rev() {
                *slot = (r % l) as f64 / l as f64;
                r /= l;
            }
            samples.push(f(&x));
        }
        let mut c = fourier::from_grid(samples, dim, l, band);
        c.prune(PRUNE_REL, 0.0);
        Ok(Self::fourier(backend, c))
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Current Fourier degree after pruning; zero for dense elements.
    pub fn degree(&self) -> usize {
        match &self.repr {
            Repr::Fourier(c) => c.degree,
            Repr::Dense(_) => 0,
        }
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        match &self.repr {
            Repr::Fourier(c) => c.get(k),
            Repr::Dense(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Nonzero Fourier coefficients in index order.
    pub fn coeffs(&self) -> Vec<(Vec<i64>, Complex64)> {
        match &self.repr {
            Repr::Fourier(c) => c.iter_nonzero().collect(),
            Repr::Dense(_) => Vec::new(),
        }
    }

    pub fn dense(&self) -> Option<&DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            Repr::Fourier(_) => None,
        }
    }

    pub(crate) fn coeffs_ref(&self) -> Option<&Coeffs> {
        match &self.repr {
            Repr::Fourier(c) => Some(c),
            Repr::Dense(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Fourier(c) => c.data.iter().all(|z| *z == Complex64::new(0.0, 0.0)),
            Repr::Dense(m) => m.iter().all(|z| *z == Complex64::new(0.0, 0.0)),
        }
    }

    /// The scalar part: constant coefficient, or normalized trace.
    pub fn scalar_part(&self) -> Complex64 {
        match &self.repr {
            Repr::Fourier(c) => c.get(&vec![0; c.dim]),
            Repr::Dense(m) => m.trace() / m.nrows() as f64,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let repr = match &self.repr {
            Repr::Fourier(c) => Repr::Fourier(c.map(|_, z| z * s)),
            Repr::Dense(m) => Repr::Dense(m * s),
        };
        Self::from_repr(&self.backend, repr)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    fn combine(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(
            same_backend(&self.backend, &rhs.backend),
            "arithmetic across different backends"
        );
        let repr = match (&self.repr, &rhs.repr) {
            (Repr::Fourier(a), Repr::Fourier(b)) => {
                let mut c = a.zip_with(b, f);
                c.prune(PRUNE_REL, 0.0);
                Repr::Fourier(c)
            }
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a.zip_map(b, f)),
            _ => unreachable!("representation follows the backend kind"),
        };
        Self::from_repr(&self.backend, repr)
    }

    /// Product without the backend check or the degree cap; used inside
    /// iterations and residual checks whose intermediates may exceed `M`.
    pub(crate) fn mul_uncapped(&self, rhs: &Self) -> Self {
        let repr = match (&self.repr, &rhs.repr) {
            (Repr::Fourier(a), Repr::Fourier(b)) => match self.backend.kind {
                BackendKind::Nctorus => {
                    let mut c = fourier::convolve_direct(a, b, Some(self.backend.theta));
                    c.prune(PRUNE_REL, PRODUCT_FLOOR * a.l1() * b.l1());
                    Repr::Fourier(c)
                }
                _ => Repr::Fourier(fourier::convolve(a, b)),
            },
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a * b),
            _ => unreachable!("representation follows the backend kind"),
        };
        Self::from_repr(&self.backend, repr)
    }

    pub(crate) fn check_cap(self) -> Result<Self> {
        let d = self.degree();
        if self.backend.is_fourier() && d > self.backend.max_degree {
            return Err(Error::DegreeOverflow {
                degree: d,
                max: self.backend.max_degree,
            });
        }
        Ok(self)
    }

    /// Drops modes beyond `degree`.
    pub(crate) fn truncate(&self, degree: usize) -> Self {
        match &self.repr {
            Repr::Fourier(c) if c.degree > degree => {
                let mut t = c.regrade(degree);
                t.shrink();
                Self::fourier(&self.backend, t)
            }
            _ => self.clone(),
        }
    }

    /// The algebra product. The degree cap applies to the pruned result.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.backend, &rhs.backend)?;
        self.mul_uncapped(rhs).check_cap()
    }

    /// `ab - ba`.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(&self.mul(rhs)? - &rhs.mul(self)?)
    }

    /// The involution: complex conjugation on the torus, the twisted
    /// adjoint `e_k^* = exp(2 pi i theta k_1 k_2) e_{-k}` on the
    /// noncommutative torus and the conjugate transpose for matrices.
    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Fourier(c) => {
                let theta = self.backend.theta;
                let mut out = Coeffs::zeros(c.dim, c.degree);
                for (k, z) in c.iter_nonzero() {
                    let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                    let phase = if self.backend.kind == BackendKind::Nctorus {
                        Complex64::from_polar(1.0, 2.0 * PI * theta * (k[0] * k[1]) as f64)
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    let i = out.index(&neg).expect("same box");
                    out.data[i] = z.conj() * phase;
                }
                Repr::Fourier(out)
            }
            Repr::Dense(m) => Repr::Dense(m.adjoint()),
        };
        Self::from_repr(&self.backend, repr)
    }

    /// Norm used for every tolerance: the coefficient l1 norm for Fourier
    /// elements, a power-iteration estimate of the spectral norm for dense
    /// matrices.
    pub fn norm(&self) -> f64 {
        match &self.repr {
            Repr::Fourier(c) => c.l1(),
            Repr::Dense(m) => spectral_norm(m),
        }
    }

    /// Distance `|self - other|`.
    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    /// Two-sided inverse, residual-verified against the backend tolerance.
    pub fn invert(&self) -> Result<Self> {
        let m = MatrixElement::from_entries(&self.backend, 1, vec![self.clone()])?;
        let inv = m.invert()?;
        Ok(inv.entry(0, 0).clone())
    }

    /// Value of the Fourier series at a point of the torus.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        match &self.repr {
            Repr::Fourier(c) => {
                if x.len() != c.dim {
                    return Err(Error::BadDimension("evaluation point".into()));
                }
                Ok(c.iter_nonzero()
                    .map(|(k, z)| {
                        let phase: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
                        z * Complex64::from_polar(1.0, 2.0 * PI * phase)
                    })
                    .sum())
            }
            Repr::Dense(_) => Err(Error::Unsupported("point evaluation of a matrix".into())),
        }
    }

    pub(crate) fn map_fourier(&self, f: impl Fn(&[i64], Complex64) -> Complex64) -> Self {
        match &self.repr {
            Repr::Fourier(c) => {
                let mut out = c.map(f);
                out.prune(PRUNE_REL, 0.0);
                Self::fourier(&self.backend, out)
            }
            Repr::Dense(_) => self.clone(),
        }
    }
}

/// Largest singular value by power iteration on `m^* m`.
pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let frob = m.norm();
    if frob == 0.0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.37 * i as f64, 0.11 * i as f64)
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..200 {
        let w = m * &v;
        let z = m.adjoint() * w;
        let nz = z.norm();
        if nz == 0.0 {
            // start vector in the kernel; the Frobenius bound is safe
            return frob;
        }
        let next = nz.sqrt();
        v = z / Complex64::new(nz, 0.0);
        if (next - est).abs() <= 1e-15 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_law() {
        let b = BackendConfig::default_torus();
        let a = AlgebraElement::from_coeffs(
            &b,
            [(vec![1, -2], c(0.3, 0.1)), (vec![0, 0], c(2.0, 0.0))],
        )
        .unwrap();
        let one = AlgebraElement::one(&b);
        assert!(one.mul(&a).unwrap().dist(&a) < 1e-15);
        assert!(a.mul(&one).unwrap().dist(&a) < 1e-15);
    }

    #[test]
    fn single_modes_add_indices() {
        let b = BackendConfig::torus(1, 4, 8).unwrap();
        let e1 = AlgebraElement::mode(&b, &[1], c(1.0, 0.0)).unwrap();
        let e2 = AlgebraElement::mode(&b, &[2], c(1.0, 0.0)).unwrap();
        let e3 = AlgebraElement::mode(&b, &[3], c(1.0, 0.0)).unwrap();
        assert!(e1.mul(&e2).unwrap().dist(&e3) < 1e-15);
    }

    #[test]
    fn twisted_modes_differ_by_phase() {
        let theta = 0.6180339887;
        let b = BackendConfig::nctorus(theta, 6, 36).unwrap();
        let u = AlgebraElement::mode(&b, &[1, 0], c(1.0, 0.0)).unwrap();
        let v = AlgebraElement::mode(&b, &[0, 1], c(1.0, 0.0)).unwrap();
        let uv = u.mul(&v).unwrap();
        let vu = v.mul(&u).unwrap();
        let ratio = vu.coeff(&[1, 1]) / uv.coeff(&[1, 1]);
        assert!((ratio - Complex64::from_polar(1.0, 2.0 * PI * theta)).norm() < 1e-14);
    }

    #[test]
    fn norm_examples() {
        let b = BackendConfig::torus(1, 4, 8).unwrap();
        assert_eq!(AlgebraElement::zero(&b).norm(), 0.0);
        assert_eq!(
            AlgebraElement::mode(&b, &[3], c(0.0, 1.0)).unwrap().norm(),
            1.0
        );
        let f = AlgebraElement::from_coeffs(
            &b,
            [
                (vec![0], c(2.0, 0.0)),
                (vec![1], c(0.5, 0.0)),
                (vec![-1], c(0.5, 0.0)),
            ],
        )
        .unwrap();
        assert!((f.norm() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.0, 0.0),
            c(0.0, -3.0),
            c(2.0, 0.0),
        ]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn overflow_is_reported() {
        let b = BackendConfig::torus(1, 2, 4).unwrap();
        let e3 = AlgebraElement::mode(&b, &[3], c(1.0, 0.0)).unwrap();
        assert!(matches!(
            e3.mul(&e3),
            Err(Error::DegreeOverflow { degree: 6, max: 4 })
        ));
    }

    #[test]
    fn mismatch_is_reported() {
        let a = AlgebraElement::one(&BackendConfig::default_torus());
        let b = AlgebraElement::one(&BackendConfig::default_matrix());
        assert!(matches!(a.mul(&b), Err(Error::BackendMismatch(_))));
    }

    #[test]
    fn nctorus_adjoint_is_antimultiplicative() {
        let b = BackendConfig::nctorus(0.3, 4, 16).unwrap();
        let x = AlgebraElement::from_coeffs(
            &b,
            [(vec![1, 2], c(0.4, -0.2)), (vec![-1, 0], c(0.1, 0.3))],
        )
        .unwrap();
        let y = AlgebraElement::from_coeffs(
            &b,
            [(vec![2, -1], c(-0.7, 0.5)), (vec![0, 1], c(1.0, 0.0))],
        )
        .unwrap();
        let lhs = x.mul(&y).unwrap().adjoint();
        let rhs = y.adjoint().mul(&x.adjoint()).unwrap();
        assert!(lhs.dist(&rhs) < 1e-14);
        let u = AlgebraElement::mode(&b, &[2, 3], c(1.0, 0.0)).unwrap();
        assert!(u.adjoint().mul(&u).unwrap().dist(&AlgebraElement::one(&b)) < 1e-14);
    }

    #[test]
    fn sampling_recovers_trig_polynomial() {
        let b = BackendConfig::torus(2, 4, 8).unwrap();
        let f = AlgebraElement::from_function(&b, 4, |x| {
            c(
                2.0 + (2.0 * PI * x[0]).cos() * (2.0 * PI * 2.0 * x[1]).sin(),
                0.0,
            )
        })
        .unwrap();
        assert!((f.coeff(&[0, 0]) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((f.coeff(&[1, 2]) - c(0.0, -0.25)).norm() < 1e-14);
        assert_eq!(f.degree(), 2);
        let val = f.evaluate(&[0.1, 0.3]).unwrap();
        let exact = 2.0 + (2.0 * PI * 0.1).cos() * (2.0 * PI * 0.6).sin();
        assert!((val - c(exact, 0.0)).norm() < 1e-14);
    }
}
