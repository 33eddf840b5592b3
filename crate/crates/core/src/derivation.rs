//! Derivations of a backend: the flow generators `delta_j`, inner
//! derivations `ad c` and real linear combinations of both.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::backend::{Backend, BackendKind};
use crate::element::{AlgebraElement, Repr};
use crate::error::{Error, Result};
use crate::matrix::MatrixElement;

/// A derivation of `A`.
///
/// `Basis(j)` is the generator of the `j`-th standard flow: on the Fourier
/// backends it scales `e_k` by `2 pi i k_j`, on the matrix backend it is the
/// inner derivation `ad X_j` of [`flow_generator`]. `Inner(c)` acts by
/// `a -> ca - ac`.
#[derive(Clone, Debug)]
pub enum Derivation {
    Basis(usize),
    Inner(AlgebraElement),
    Combination(Vec<(f64, Derivation)>),
}

/// The generator `X_j` of the `j`-th flow on the matrix backend:
/// `i diag(0, 1, .., d-1)` and `i diag(0, 1, 4, .., (d-1)^2)`. The two
/// commute, so the flows form an abelian group as on the torus.
pub fn flow_generator(backend: &Backend, j: usize) -> Result<AlgebraElement> {
    if backend.kind != BackendKind::Matrix || j >= 2 {
        return Err(Error::UnknownDerivation);
    }
    let d = backend.dim;
    let m = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(0.0, (r as f64).powi(j as i32 + 1))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    AlgebraElement::from_dense(backend, m)
}

/// `sum_j w_j delta_j + ad c`.
#[derive(Clone, Debug)]
pub struct NormalDerivation {
    pub weights: Vec<f64>,
    pub inner: Option<AlgebraElement>,
}

impl Derivation {
    pub fn zero() -> Self {
        Derivation::Combination(Vec::new())
    }

    /// `sum_j v_j delta_j`, the generator of the translation flow along `v`.
    pub fn along(v: &[f64]) -> Self {
        Derivation::Combination(
            v.iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(j, w)| (*w, Derivation::Basis(j)))
                .collect(),
        )
    }

    pub fn scaled(&self, w: f64) -> Self {
        Derivation::Combination(vec![(w, self.clone())])
    }

    pub fn plus(&self, other: &Derivation) -> Self {
        Derivation::Combination(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        let backend = a.backend();
        match self {
            Derivation::Basis(j) => match &a.repr {
                Repr::Fourier(_) => {
                    if *j >= backend.dim {
                        return Err(Error::UnknownDerivation);
                    }
                    let j = *j;
                    Ok(a.map_fourier(|k, z| z * Complex64::new(0.0, 2.0 * PI * k[j] as f64)))
                }
                Repr::Dense(_) => flow_generator(backend, *j)?.commutator(a),
            },
            Derivation::Inner(c) => c.commutator(a),
            Derivation::Combination(terms) => {
                let mut acc = AlgebraElement::zero(backend);
                for (w, d) in terms {
                    acc = &acc + &d.apply(a)?.scale_real(*w);
                }
                Ok(acc)
            }
        }
    }

    /// Entrywise action on `M_n(A)`.
    pub fn apply_matrix(&self, x: &MatrixElement) -> Result<MatrixElement> {
        x.map(|e| self.apply(e))
    }

    /// Entrywise action on `A^n`.
    pub fn apply_vector(&self, v: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
        v.iter().map(|e| self.apply(e)).collect()
    }

    /// Collects the flow weights and the inner part.
    pub fn normal_form(&self, backend: &Backend) -> Result<NormalDerivation> {
        let m = backend.flow_dim();
        let mut out = NormalDerivation {
            weights: vec![0.0; m],
            inner: None,
        };
        self.accumulate(backend, 1.0, &mut out)?;
        Ok(out)
    }

    fn accumulate(&self, backend: &Backend, w: f64, out: &mut NormalDerivation) -> Result<()> {
        match self {
            Derivation::Basis(j) => {
                if *j >= out.weights.len() {
                    return Err(Error::UnknownDerivation);
                }
                out.weights[*j] += w;
            }
            Derivation::Inner(c) => {
                crate::element::ensure_same(backend, c.backend())?;
                let add = c.scale_real(w);
                out.inner = Some(match out.inner.take() {
                    Some(prev) => &prev + &add,
                    None => add,
                });
            }
            Derivation::Combination(terms) => {
                for (v, d) in terms {
                    d.accumulate(backend, w * v, out)?;
                }
            }
        }
        Ok(())
    }

    /// The commutator `[D, D']`. Flow generators commute, so with
    /// `D = D0 + ad c` and `D' = D0' + ad c'` the bracket is the inner
    /// derivation of `D0(c') - D0'(c) + [c, c']`.
    pub fn bracket(&self, other: &Derivation, backend: &Backend) -> Result<Derivation> {
        let x = self.normal_form(backend)?;
        let y = other.normal_form(backend)?;
        let flow = |w: &[f64]| Derivation::along(w);
        let mut acc = AlgebraElement::zero(backend);
        if let Some(c2) = &y.inner {
            acc = &acc + &flow(&x.weights).apply(c2)?;
        }
        if let Some(c1) = &x.inner {
            acc = &acc - &flow(&y.weights).apply(c1)?;
        }
        if let (Some(c1), Some(c2)) = (&x.inner, &y.inner) {
            acc = &acc + &c1.commutator(c2)?;
        }
        if acc.is_zero() {
            Ok(Derivation::zero())
        } else {
            Ok(Derivation::Inner(acc))
        }
    }
}

impl NormalDerivation {
    pub fn to_derivation(&self) -> Derivation {
        let base = Derivation::along(&self.weights);
        match &self.inner {
            Some(c) => base.plus(&Derivation::Inner(c.clone())),
            None => base,
        }
    }
}
