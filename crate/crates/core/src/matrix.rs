//! Square matrices over an algebra backend.

use std::ops::{Add, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::backend::{same_backend, Backend, BackendKind};
use crate::element::{ensure_same, AlgebraElement, Repr};
use crate::error::{Error, Result};
use crate::fourier::{self, Coeffs, PRODUCT_FLOOR, PRUNE_REL};

/// Iteration cap of the Newton–Schulz inverse.
pub const NEWTON_SCHULZ_CAP: usize = 200;

/// An `n x n` matrix with entries in one backend, stored row-major.
#[derive(Clone, Debug)]
pub struct MatrixElement {
    backend: Backend,
    n: usize,
    entries: Vec<AlgebraElement>,
}

impl MatrixElement {
    pub fn from_entries(backend: &Backend, n: usize, entries: Vec<AlgebraElement>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::BadDimension(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        for e in &entries {
            ensure_same(backend, e.backend())?;
            e.clone().check_cap()?;
        }
        Ok(MatrixElement {
            backend: backend.clone(),
            n,
            entries,
        })
    }

    pub fn from_fn(
        backend: &Backend,
        n: usize,
        f: impl Fn(usize, usize) -> AlgebraElement,
    ) -> Self {
        let entries = (0..n * n).map(|i| f(i / n, i % n)).collect();
        MatrixElement {
            backend: backend.clone(),
            n,
            entries,
        }
    }

    pub fn zero(backend: &Backend, n: usize) -> Self {
        Self::from_fn(backend, n, |_, _| AlgebraElement::zero(backend))
    }

    pub fn identity(backend: &Backend, n: usize) -> Self {
        Self::diagonal(backend, &vec![AlgebraElement::one(backend); n])
    }

    pub fn diagonal(backend: &Backend, diag: &[AlgebraElement]) -> Self {
        let n = diag.len();
        Self::from_fn(backend, n, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                AlgebraElement::zero(backend)
            }
        })
    }

    /// The matrix unit `E_ij` with entry `a`.
    pub fn unit(backend: &Backend, n: usize, i: usize, j: usize, a: &AlgebraElement) -> Self {
        Self::from_fn(backend, n, |r, c| {
            if (r, c) == (i, j) {
                a.clone()
            } else {
                AlgebraElement::zero(backend)
            }
        })
    }

    /// Assembles `[[a, b], [c, d]]` from four `n x n` blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        let n = a.n;
        for m in [b, c, d] {
            if m.n != n {
                return Err(Error::BadDimension("blocks of unequal size".into()));
            }
            ensure_same(&a.backend, &m.backend)?;
        }
        Ok(Self::from_fn(&a.backend, 2 * n, |i, j| {
            let blk = match (i < n, j < n) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => c,
                (false, false) => d,
            };
            blk.entry(i % n, j % n).clone()
        }))
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().map(|e| e.degree()).max().unwrap_or(0)
    }

    /// Applies `f` to every entry.
    pub fn map(
        &self,
        f: impl Fn(&AlgebraElement) -> Result<AlgebraElement> + Sync,
    ) -> Result<Self> {
        let entries = self
            .entries
            .par_iter()
            .map(&f)
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(&self.backend, self.n, entries)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        MatrixElement {
            backend: self.backend.clone(),
            n: self.n,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Right multiplication of every entry by `a`.
    pub fn mul_right_scalar(&self, a: &AlgebraElement) -> Result<Self> {
        self.map(|e| e.mul(a))
    }

    fn combine(
        &self,
        rhs: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement,
    ) -> Self {
        assert!(
            same_backend(&self.backend, &rhs.backend) && self.n == rhs.n,
            "matrix arithmetic across different shapes or backends"
        );
        MatrixElement {
            backend: self.backend.clone(),
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    fn check_shape(&self, rhs: &Self) -> Result<()> {
        ensure_same(&self.backend, &rhs.backend)?;
        if self.n != rhs.n {
            return Err(Error::BadDimension(format!(
                "{}x{} vs {}x{}",
                self.n, self.n, rhs.n, rhs.n
            )));
        }
        Ok(())
    }

    pub(crate) fn mul_uncapped(&self, rhs: &Self) -> Self {
        let entries = product(
            &self.backend,
            &self.entries,
            self.n,
            self.n,
            &rhs.entries,
            rhs.n,
        );
        MatrixElement {
            backend: self.backend.clone(),
            n: self.n,
            entries,
        }
    }

    fn check_cap(self) -> Result<Self> {
        for e in &self.entries {
            e.clone().check_cap()?;
        }
        Ok(self)
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_shape(rhs)?;
        self.mul_uncapped(rhs).check_cap()
    }

    /// Product of three factors, left to right.
    pub fn mul3(&self, b: &Self, c: &Self) -> Result<Self> {
        self.mul(b)?.mul(c)
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(&self.mul(rhs)? - &rhs.mul(self)?)
    }

    /// `X v` for a column `v` of length `n`.
    pub fn apply(&self, v: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
        if v.len() != self.n {
            return Err(Error::BadDimension(format!(
                "vector of length {} for n = {}",
                v.len(),
                self.n
            )));
        }
        for e in v {
            ensure_same(&self.backend, e.backend())?;
        }
        let out = product(&self.backend, &self.entries, self.n, self.n, v, 1);
        for e in &out {
            e.clone().check_cap()?;
        }
        Ok(out)
    }

    /// Conjugate transpose with entrywise involution.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(&self.backend, self.n, |i, j| self.entry(j, i).adjoint())
    }

    /// Largest row sum of entry norms; submultiplicative over the Fourier
    /// backends and a bound on the operator norm everywhere.
    pub fn norm(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn col_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.entry(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    /// Pads to `size x size` with `self` in the top-left block.
    pub fn embed_tilde(&self, size: usize) -> Result<Self> {
        if size < self.n {
            return Err(Error::BadDimension(format!(
                "cannot pad {}x{} to {size}x{size}",
                self.n, self.n
            )));
        }
        Ok(Self::from_fn(&self.backend, size, |i, j| {
            if i < self.n && j < self.n {
                self.entry(i, j).clone()
            } else {
                AlgebraElement::zero(&self.backend)
            }
        }))
    }

    /// The top-left `size x size` block.
    pub fn top_left(&self, size: usize) -> Result<Self> {
        if size == 0 || size > self.n {
            return Err(Error::BadDimension(format!(
                "block {size} of a {}x{} matrix",
                self.n, self.n
            )));
        }
        Ok(Self::from_fn(&self.backend, size, |i, j| {
            self.entry(i, j).clone()
        }))
    }

    /// `max(|XY - 1|, |YX - 1|)` without the degree cap.
    pub fn inverse_residual(&self, y: &Self) -> f64 {
        let one = Self::identity(&self.backend, self.n);
        let r1 = (&self.mul_uncapped(y) - &one).norm();
        let r2 = (&y.mul_uncapped(self) - &one).norm();
        r1.max(r2)
    }

    /// Two-sided inverse, verified to the backend tolerance.
    pub fn invert(&self) -> Result<Self> {
        let inv = match self.backend.kind {
            BackendKind::Torus => self.grid_inverse()?,
            BackendKind::Nctorus => self.newton_schulz()?,
            BackendKind::Matrix => self.dense_newton_schulz()?,
        };
        let residual = self.inverse_residual(&inv);
        if !(residual <= self.backend.tol) {
            return Err(Error::NotInvertible { residual });
        }
        inv.check_cap()
    }

    /// Pointwise inversion on a sampling grid, refined by doubling the grid
    /// until the residual reaches rounding level or stops improving.
    fn grid_inverse(&self) -> Result<Self> {
        let cfg = &self.backend;
        let n = self.n;
        let dim = cfg.dim;
        let floor = 100.0 * f64::EPSILON * self.norm().max(1.0);
        let lmax = fourier::grid_size(2 * cfg.max_degree + 1);
        let mut l = fourier::grid_size((4 * cfg.degree + 1).max(2 * self.degree() + 1));
        let mut best: Option<(f64, Self)> = None;
        loop {
            let grids: Vec<Vec<Complex64>> = self
                .entries
                .par_iter()
                .map(|e| fourier::to_grid(e.coeffs_ref().expect("torus entry"), l))
                .collect();
            let points = l.pow(dim as u32);
            let mut inv_grids = vec![vec![Complex64::new(0.0, 0.0); points]; n * n];
            let mut min_pivot = f64::INFINITY;
            for pt in 0..points {
                let m = DMatrix::from_fn(n, n, |i, j| grids[i * n + j][pt]);
                let lu = m.lu();
                let piv = lu
                    .u()
                    .diagonal()
                    .iter()
                    .fold(f64::INFINITY, |a, z| a.min(z.norm()));
                min_pivot = min_pivot.min(piv);
                if piv < cfg.tol {
                    return Err(Error::NotInvertible { residual: piv });
                }
                let inv = lu
                    .try_inverse()
                    .ok_or(Error::NotInvertible { residual: piv })?;
                for i in 0..n {
                    for j in 0..n {
                        inv_grids[i * n + j][pt] = inv[(i, j)];
                    }
                }
            }
            let out_degree = ((l - 1) / 2).min(cfg.max_degree);
            let entries: Vec<AlgebraElement> = inv_grids
                .into_par_iter()
                .map(|g| {
                    let mut c = fourier::from_grid(g, dim, l, out_degree);
                    c.prune(PRUNE_REL, 0.0);
                    AlgebraElement::fourier(cfg, c)
                })
                .collect();
            let cand = MatrixElement {
                backend: cfg.clone(),
                n,
                entries,
            };
            let r = self.inverse_residual(&cand);
            let improved = best.as_ref().is_none_or(|(b, _)| r < 0.5 * b);
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, cand.clone()));
            }
            let scale = floor * cand.norm().max(1.0);
            if r <= scale || !improved || l >= lmax {
                break;
            }
            l = fourier::grid_size(2 * l).min(lmax.max(l + 1));
        }
        Ok(best.expect("at least one grid pass").1)
    }

    /// Newton–Schulz iteration `X <- X(2 - aX)` from the scaled adjoint,
    /// with iterates truncated so that `aX` stays within the cap.
    fn newton_schulz(&self) -> Result<Self> {
        let cfg = &self.backend;
        let scale = self.norm() * self.col_norm();
        if scale == 0.0 {
            return Err(Error::NotInvertible { residual: 1.0 });
        }
        let width = cfg.max_degree.saturating_sub(self.degree()).max(cfg.degree);
        let one = Self::identity(cfg, self.n);
        let target = 100.0 * f64::EPSILON * self.n as f64;
        let mut x = self.adjoint().scale_real(1.0 / scale);
        let mut prev = f64::INFINITY;
        for _ in 0..NEWTON_SCHULZ_CAP {
            let r = &one - &self.mul_uncapped(&x);
            let rn = r.norm();
            if rn <= target || (rn < 0.5 && rn > 0.9 * prev) {
                break;
            }
            prev = rn;
            x = (&x + &x.mul_uncapped(&r)).truncate(width);
        }
        Ok(x)
    }

    fn dense_newton_schulz(&self) -> Result<Self> {
        let a = self.to_dense();
        let big = a.nrows();
        let n1 = (0..big)
            .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let ninf = (0..big)
            .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        if n1 * ninf == 0.0 {
            return Err(Error::NotInvertible { residual: 1.0 });
        }
        let eye = DMatrix::<Complex64>::identity(big, big);
        let mut x = a.adjoint() / Complex64::new(n1 * ninf, 0.0);
        let target = 100.0 * f64::EPSILON * big as f64;
        let mut prev = f64::INFINITY;
        for _ in 0..NEWTON_SCHULZ_CAP {
            let r = &eye - &a * &x;
            let rn = r.norm();
            if rn <= target || (rn < 0.5 && rn > 0.9 * prev) {
                break;
            }
            prev = rn;
            x = &x + &x * r;
        }
        Ok(Self::from_dense_blocks(&self.backend, self.n, &x))
    }

    fn truncate(&self, degree: usize) -> Self {
        MatrixElement {
            backend: self.backend.clone(),
            n: self.n,
            entries: self.entries.iter().map(|e| e.truncate(degree)).collect(),
        }
    }

    /// The `nd x nd` complex matrix of a matrix over the matrix backend.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.backend.dim;
        let n = self.n;
        DMatrix::from_fn(n * d, n * d, |r, c| {
            let blk = self
                .entry(r / d, c / d)
                .dense()
                .expect("matrix backend entry");
            blk[(r % d, c % d)]
        })
    }

    pub fn from_dense_blocks(backend: &Backend, n: usize, m: &DMatrix<Complex64>) -> Self {
        let d = backend.dim;
        Self::from_fn(backend, n, |i, j| {
            let blk = m.view((i * d, j * d), (d, d)).into_owned();
            AlgebraElement::from_repr(backend, Repr::Dense(blk))
        })
    }
}

/// Direct convolution work above which a torus product goes through FFT.
const GRID_WORK: usize = 200_000;

/// Product of an `ar x ac` by an `ac x bc` array, uncapped and pruned.
pub(crate) fn product(
    backend: &Backend,
    a: &[AlgebraElement],
    ar: usize,
    ac: usize,
    b: &[AlgebraElement],
    bc: usize,
) -> Vec<AlgebraElement> {
    if backend.kind == BackendKind::Torus {
        let work: usize = a
            .iter()
            .map(|e| e.coeffs_ref().map_or(1, |c| c.data.len()))
            .sum::<usize>()
            * b.iter()
                .map(|e| e.coeffs_ref().map_or(1, |c| c.data.len()))
                .max()
                .unwrap_or(1);
        if work > GRID_WORK {
            return grid_product(backend, a, ar, ac, b, bc);
        }
    }
    (0..ar * bc)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / bc, idx % bc);
            let mut acc = AlgebraElement::zero(backend);
            for l in 0..ac {
                let (x, y) = (&a[i * ac + l], &b[l * bc + j]);
                if x.is_zero() || y.is_zero() {
                    continue;
                }
                acc = &acc + &x.mul_uncapped(y);
            }
            acc
        })
        .collect()
}

/// Torus product evaluated pointwise on a common sampling grid.
fn grid_product(
    backend: &Backend,
    a: &[AlgebraElement],
    ar: usize,
    ac: usize,
    b: &[AlgebraElement],
    bc: usize,
) -> Vec<AlgebraElement> {
    let dim = backend.dim;
    let da = a.iter().map(|e| e.degree()).max().unwrap_or(0);
    let db = b.iter().map(|e| e.degree()).max().unwrap_or(0);
    let degree = da + db;
    let l = fourier::grid_size(2 * degree + 1);
    let to = |e: &AlgebraElement| fourier::to_grid(e.coeffs_ref().expect("torus entry"), l);
    let ga: Vec<Vec<Complex64>> = a.par_iter().map(to).collect();
    let gb: Vec<Vec<Complex64>> = b.par_iter().map(to).collect();
    let na: Vec<f64> = a.iter().map(|e| e.norm()).collect();
    let nb: Vec<f64> = b.iter().map(|e| e.norm()).collect();
    (0..ar * bc)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / bc, idx % bc);
            let mut acc = vec![Complex64::new(0.0, 0.0); l.pow(dim as u32)];
            let mut bound = 0.0;
            for k in 0..ac {
                let (x, y) = (i * ac + k, k * bc + j);
                if na[x] == 0.0 || nb[y] == 0.0 {
                    continue;
                }
                bound += na[x] * nb[y];
                for ((s, u), v) in acc.iter_mut().zip(&ga[x]).zip(&gb[y]) {
                    *s += u * v;
                }
            }
            let mut c = if bound == 0.0 {
                Coeffs::zeros(dim, 0)
            } else {
                fourier::from_grid(acc, dim, l, degree)
            };
            c.prune(PRUNE_REL, PRODUCT_FLOOR * bound);
            AlgebraElement::fourier(backend, c)
        })
        .collect()
}

impl Add for &MatrixElement {
    type Output = MatrixElement;
    fn add(self, rhs: Self) -> MatrixElement {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &MatrixElement {
    type Output = MatrixElement;
    fn sub(self, rhs: Self) -> MatrixElement {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Neg for &MatrixElement {
    type Output = MatrixElement;
    fn neg(self) -> MatrixElement {
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
    fn matrix_units_multiply() {
        let b = BackendConfig::default_torus();
        let one = AlgebraElement::one(&b);
        let e12 = MatrixElement::unit(&b, 2, 0, 1, &one);
        let e21 = MatrixElement::unit(&b, 2, 1, 0, &one);
        let e11 = MatrixElement::unit(&b, 2, 0, 0, &one);
        assert!(e12.mul(&e21).unwrap().dist(&e11) < 1e-15);
    }

    #[test]
    fn unipotent_inverse_negates() {
        let b = BackendConfig::default_torus();
        let u = AlgebraElement::from_coeffs(
            &b,
            [(vec![1, 0], c(0.5, 0.0)), (vec![0, -2], c(0.0, 0.3))],
        )
        .unwrap();
        let one = AlgebraElement::one(&b);
        let zero = AlgebraElement::zero(&b);
        let x = MatrixElement::from_entries(
            &b,
            2,
            vec![one.clone(), u.clone(), zero.clone(), one.clone()],
        )
        .unwrap();
        let expect = MatrixElement::from_entries(&b, 2, vec![one.clone(), -&u, zero, one]).unwrap();
        assert!(x.invert().unwrap().dist(&expect) < 1e-12);
    }

    #[test]
    fn scalar_inverse_of_two_plus_cos() {
        let b = BackendConfig::torus(1, 8, 64).unwrap();
        let f = AlgebraElement::from_coeffs(
            &b,
            [
                (vec![0], c(2.0, 0.0)),
                (vec![1], c(0.5, 0.0)),
                (vec![-1], c(0.5, 0.0)),
            ],
        )
        .unwrap();
        let g = f.invert().unwrap();
        assert!(f.mul(&g).unwrap().dist(&AlgebraElement::one(&b)) <= 1e-9);
        // 1/(2 + cos t) has mean 1/sqrt(3)
        assert!((g.coeff(&[0]) - c(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-13);
        for x in [0.0, 0.13, 0.5, 0.77] {
            let val = g.evaluate(&[x]).unwrap();
            let exact = 1.0 / (2.0 + (2.0 * std::f64::consts::PI * x).cos());
            assert!((val - c(exact, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn vanishing_function_is_not_invertible() {
        let b = BackendConfig::torus(1, 8, 64).unwrap();
        let f = AlgebraElement::from_coeffs(&b, [(vec![1], c(0.5, 0.0)), (vec![-1], c(0.5, 0.0))])
            .unwrap();
        assert!(matches!(f.invert(), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn nctorus_newton_schulz_inverse() {
        let b = BackendConfig::nctorus(0.6180339887, 6, 36).unwrap();
        let a = AlgebraElement::from_coeffs(
            &b,
            [
                (vec![0, 0], c(2.0, 0.0)),
                (vec![1, 0], c(0.4, 0.1)),
                (vec![0, -1], c(-0.3, 0.2)),
                (vec![1, 1], c(0.1, 0.0)),
            ],
        )
        .unwrap();
        let inv = a.invert().unwrap();
        let one = AlgebraElement::one(&b);
        assert!(a.mul(&inv).unwrap().dist(&one) <= 1e-9);
        assert!(inv.mul(&a).unwrap().dist(&one) <= 1e-9);
    }

    #[test]
    fn dense_inverse() {
        let b = BackendConfig::default_matrix();
        let m = DMatrix::from_fn(3, 3, |i, j| {
            c(if i == j { 3.0 } else { 0.5 }, (i as f64) - (j as f64))
        });
        let a = AlgebraElement::from_dense(&b, m.clone()).unwrap();
        let inv = a.invert().unwrap();
        let exact = m.try_inverse().unwrap();
        assert!((inv.dense().unwrap() - exact).norm() < 1e-13);
    }

    #[test]
    fn embed_then_project_back() {
        let b = BackendConfig::default_matrix();
        let x = MatrixElement::from_fn(&b, 2, |i, j| {
            AlgebraElement::scalar(&b, c(i as f64 + 1.0, j as f64))
        });
        let big = x.embed_tilde(3).unwrap();
        assert_eq!(big.n(), 3);
        assert!(big.top_left(2).unwrap().dist(&x) == 0.0);
        assert!(matches!(x.embed_tilde(1), Err(Error::BadDimension(_))));
    }
}
