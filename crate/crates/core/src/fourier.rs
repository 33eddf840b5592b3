//! Dense coefficient boxes for band-limited Fourier series on the torus,
//! together with plain and twisted convolution and the sampling grid used
//! for FFT products and pointwise inversion.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Coefficients `c_k` for `|k|_inf <= degree`, stored as a hypercube of side
/// `2 * degree + 1` in row-major order (first index slowest).
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Coeffs {
    pub dim: usize,
    pub degree: usize,
    pub data: Vec<Complex64>,
}

/// Relative threshold of canonical pruning. Dropping at `1e-15` would be
/// allowed, but in two dimensions the discarded shell adds up to a few
/// `1e-13` in l1, which is too coarse for the involution checks.
pub(crate) const PRUNE_REL: f64 = 1e-16;
/// Floor of a product relative to `|a|_1 |b|_1`, just above FFT rounding
/// noise. Without it noise fills the whole product box and the degree
/// runs into the cap.
pub(crate) const PRODUCT_FLOOR: f64 = 1e-16;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `|c|` without the overflow guard of `hypot`, which dominates profiles.
#[inline]
pub(crate) fn abs(c: Complex64) -> f64 {
    (c.re * c.re + c.im * c.im).sqrt()
}

/// Calls `f(flat, k)` for every multi-index of a box in storage order,
/// stepping `k` like an odometer instead of decoding each flat index.
fn for_each_index(dim: usize, degree: usize, mut f: impl FnMut(usize, &[i64])) {
    let d = degree as i64;
    let mut k = vec![-d; dim];
    let total = (2 * degree + 1).pow(dim as u32);
    for flat in 0..total {
        f(flat, &k);
        for slot in k.iter_mut().rev() {
            if *slot < d {
                *slot += 1;
                break;
            }
            *slot = -d;
        }
    }
}

fn grid_offset(k: &[i64], l: usize) -> usize {
    k.iter().fold(0usize, |acc, &ki| {
        acc * l + ki.rem_euclid(l as i64) as usize
    })
}

impl Coeffs {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        let side = 2 * degree + 1;
        Coeffs {
            dim,
            degree,
            data: vec![ZERO; side.pow(dim as u32)],
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut z = Self::zeros(dim, 0);
        z.data[0] = c;
        z
    }

    pub fn side(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        debug_assert_eq!(k.len(), self.dim);
        let d = self.degree as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &ki in k {
            if ki.abs() > d {
                return None;
            }
            idx = idx * side + (ki + d) as usize;
        }
        Some(idx)
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.index(k).map(|i| self.data[i]).unwrap_or(ZERO)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<i64> {
        let side = self.side();
        let d = self.degree as i64;
        let mut k = vec![0i64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (flat % side) as i64 - d;
            flat /= side;
        }
        k
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(move |(i, c)| (self.multi_index(i), *c))
    }

    /// Re-embeds into a box of another degree, dropping modes outside it.
    pub fn regrade(&self, degree: usize) -> Coeffs {
        if degree == self.degree {
            return self.clone();
        }
        let mut out = Coeffs::zeros(self.dim, degree);
        let data = &self.data;
        for_each_index(self.dim, self.degree, |i, k| {
            if data[i] != ZERO {
                if let Some(j) = out.index(k) {
                    out.data[j] = data[i];
                }
            }
        });
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(abs(*c)))
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|c| abs(*c)).sum()
    }

    /// Largest `|k|_inf` carrying a nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        let mut eff = 0;
        for_each_index(self.dim, self.degree, |i, k| {
            if self.data[i] != ZERO {
                for ki in k {
                    eff = eff.max(ki.unsigned_abs() as usize);
                }
            }
        });
        eff
    }

    /// Zeroes coefficients below `max(rel * max|c|, floor)` and shrinks the
    /// box to the remaining support.
    pub fn prune(&mut self, rel: f64, floor: f64) {
        let thr = (rel * self.max_abs()).max(floor);
        let thr2 = thr * thr;
        for c in self.data.iter_mut() {
            if c.norm_sqr() < thr2 {
                *c = ZERO;
            }
        }
        self.shrink();
    }

    pub fn shrink(&mut self) {
        let eff = self.effective_degree();
        if eff < self.degree {
            *self = self.regrade(eff);
        }
    }

    pub fn map(&self, f: impl Fn(&[i64], Complex64) -> Complex64) -> Coeffs {
        let mut out = self.clone();
        for_each_index(self.dim, self.degree, |i, k| {
            if out.data[i] != ZERO {
                out.data[i] = f(k, out.data[i]);
            }
        });
        out
    }

    pub fn zip_with(
        &self,
        other: &Coeffs,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Coeffs {
        let degree = self.degree.max(other.degree);
        let a = self.regrade(degree);
        let b = other.regrade(degree);
        let data = a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect();
        Coeffs {
            dim: self.dim,
            degree,
            data,
        }
    }
}

/// Direct (twisted) convolution. With `theta = Some(t)` the product of modes
/// is `e_k e_l = exp(2 pi i t k_2 l_1) e_{k+l}`.
pub(crate) fn convolve_direct(a: &Coeffs, b: &Coeffs, theta: Option<f64>) -> Coeffs {
    let dim = a.dim;
    let degree = a.degree + b.degree;
    let mut out = Coeffs::zeros(dim, degree);
    let side_r = out.side() as i64;
    let stride = |k: &[i64]| k.iter().fold(0i64, |acc, &ki| acc * side_r + ki);
    let base = stride(&vec![degree as i64; dim]);

    let mut a_nz: Vec<(i64, i64, Complex64)> = Vec::new();
    for_each_index(dim, a.degree, |i, k| {
        if a.data[i] != ZERO {
            a_nz.push((stride(k), if dim >= 2 { k[1] } else { 0 }, a.data[i]));
        }
    });
    let mut b_nz: Vec<(i64, i64, Complex64)> = Vec::new();
    for_each_index(dim, b.degree, |i, l| {
        if b.data[i] != ZERO {
            b_nz.push((stride(l), l[0], b.data[i]));
        }
    });

    match theta {
        None => {
            for &(oa, _, ca) in &a_nz {
                for &(ob, _, cb) in &b_nz {
                    out.data[(base + oa + ob) as usize] += ca * cb;
                }
            }
        }
        Some(t) => {
            // phase table indexed by the product k_2 l_1
            let span = (a.degree * b.degree) as i64;
            let phases: Vec<Complex64> = (-span..=span)
                .map(|m| Complex64::from_polar(1.0, 2.0 * PI * t * m as f64))
                .collect();
            for &(oa, k2, ca) in &a_nz {
                for &(ob, l1, cb) in &b_nz {
                    let ph = phases[(k2 * l1 + span) as usize];
                    out.data[(base + oa + ob) as usize] += ca * cb * ph;
                }
            }
        }
    }
    out
}

/// Smallest 5-smooth integer `>= n`.
pub(crate) fn grid_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_nd(data: &mut [Complex64], dim: usize, l: usize, inverse: bool) {
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(l)
        } else {
            p.plan_fft_forward(l)
        }
    });
    let total = data.len();
    let mut line = vec![ZERO; l];
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = l.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = stride * l;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let s = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[s + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[s + j * stride] = *v;
                }
            }
        }
    }
}

/// Samples the series on the uniform grid `j / l`, `j in 0..l` per axis.
pub(crate) fn to_grid(c: &Coeffs, l: usize) -> Vec<Complex64> {
    assert!(
        2 * c.degree < l,
        "grid of side {l} aliases degree {}",
        c.degree
    );
    let dim = c.dim;
    let mut g = vec![ZERO; l.pow(dim as u32)];
    for_each_index(dim, c.degree, |i, k| {
        if c.data[i] != ZERO {
            g[grid_offset(k, l)] = c.data[i];
        }
    });
    fft_nd(&mut g, dim, l, true);
    g
}

/// Recovers the coefficients `|k|_inf <= degree` from grid samples.
pub(crate) fn from_grid(mut g: Vec<Complex64>, dim: usize, l: usize, degree: usize) -> Coeffs {
    assert!(2 * degree < l);
    fft_nd(&mut g, dim, l, false);
    let scale = 1.0 / (l.pow(dim as u32) as f64);
    let mut out = Coeffs::zeros(dim, degree);
    for_each_index(dim, degree, |i, k| {
        out.data[i] = g[grid_offset(k, l)] * scale;
    });
    out
}

/// Number of coefficient pairs below which direct convolution beats FFT.
pub(crate) const DIRECT_PAIRS: usize = 40_000;

/// Commutative product, direct for small operands and FFT otherwise,
/// followed by canonical pruning at the product's rounding floor.
pub(crate) fn convolve(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let pairs = a.data.len() * b.data.len();
    let mut out = if pairs <= DIRECT_PAIRS || a.degree == 0 || b.degree == 0 {
        convolve_direct(a, b, None)
    } else {
        let degree = a.degree + b.degree;
        let l = grid_size(2 * degree + 1);
        let ga = to_grid(a, l);
        let gb = to_grid(b, l);
        let prod = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
        from_grid(prod, a.dim, l, degree)
    };
    out.prune(PRUNE_REL, PRODUCT_FLOOR * a.l1() * b.l1());
    out
}
