//! Automorphisms of a backend and the group of translations twisted by
//! inner automorphisms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::backend::Backend;
use crate::derivation::flow_generator;
use crate::element::{ensure_same, AlgebraElement, Repr};
use crate::error::{Error, Result};
use crate::matrix::MatrixElement;

/// An automorphism of `A`. Compositions apply their last member first.
#[derive(Clone, Debug)]
pub enum Automorphism {
    /// The flow `tau_v`: `e_k -> exp(2 pi i k.v) e_k` on the Fourier
    /// backends, conjugation by `exp(sum_j v_j X_j)` on matrices.
    Translation(Vec<f64>),
    /// `a -> u a u^{-1}`.
    Inner {
        u: AlgebraElement,
        u_inv: AlgebraElement,
    },
    Composition(Vec<Automorphism>),
}

fn translate(v: &[f64], a: &AlgebraElement) -> Result<AlgebraElement> {
    let backend = a.backend();
    if v.iter().all(|x| *x == 0.0) {
        return Ok(a.clone());
    }
    match &a.repr {
        Repr::Fourier(_) => {
            if v.len() != backend.dim {
                return Err(Error::BadDimension(format!(
                    "translation of length {} on a {}-torus",
                    v.len(),
                    backend.dim
                )));
            }
            Ok(a.map_fourier(|k, z| {
                let phase: f64 = k.iter().zip(v).map(|(ki, vi)| *ki as f64 * vi).sum();
                z * Complex64::from_polar(1.0, 2.0 * PI * phase)
            }))
        }
        Repr::Dense(m) => {
            if v.len() != backend.flow_dim() {
                return Err(Error::BadDimension(format!(
                    "translation of length {} on matrices",
                    v.len()
                )));
            }
            // the generators are diagonal, so conjugation is a phase per entry
            let mut phases = vec![0.0; backend.dim];
            for (j, w) in v.iter().enumerate() {
                let x = flow_generator(backend, j)?;
                let x = x.dense().expect("dense generator");
                for (r, ph) in phases.iter_mut().enumerate() {
                    *ph += w * x[(r, r)].im;
                }
            }
            let out = m
                .map_with_location(|r, c, z| z * Complex64::from_polar(1.0, phases[r] - phases[c]));
            AlgebraElement::from_dense(backend, out)
        }
    }
}

impl Automorphism {
    pub fn identity() -> Self {
        Automorphism::Composition(Vec::new())
    }

    /// Inner automorphism of an invertible `u`.
    pub fn inner(u: &AlgebraElement) -> Result<Self> {
        Ok(Automorphism::Inner {
            u: u.clone(),
            u_inv: u.invert()?,
        })
    }

    /// `self o other`.
    pub fn then_after(&self, other: &Automorphism) -> Self {
        Automorphism::Composition(vec![self.clone(), other.clone()])
    }

    pub fn inverse(&self) -> Self {
        match self {
            Automorphism::Translation(v) => {
                Automorphism::Translation(v.iter().map(|x| -x).collect())
            }
            Automorphism::Inner { u, u_inv } => Automorphism::Inner {
                u: u_inv.clone(),
                u_inv: u.clone(),
            },
            Automorphism::Composition(list) => {
                Automorphism::Composition(list.iter().rev().map(|a| a.inverse()).collect())
            }
        }
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        match self {
            Automorphism::Translation(v) => translate(v, a),
            Automorphism::Inner { u, u_inv } => {
                ensure_same(u.backend(), a.backend())?;
                u.mul(a)?.mul(u_inv)
            }
            Automorphism::Composition(list) => {
                let mut x = a.clone();
                for m in list.iter().rev() {
                    x = m.apply(&x)?;
                }
                Ok(x)
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
}

/// A group element `c_u o tau_v` in normal form. The product is
/// `(v, u)(v', u') = (v + v', u tau_v(u'))`.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub shift: Vec<f64>,
    /// `(u, u^{-1})`, absent for pure translations.
    pub inner: Option<(AlgebraElement, AlgebraElement)>,
}

impl GroupElement {
    pub fn identity(backend: &Backend) -> Self {
        GroupElement {
            shift: vec![0.0; backend.flow_dim()],
            inner: None,
        }
    }

    pub fn translation(backend: &Backend, v: &[f64]) -> Result<Self> {
        if v.len() != backend.flow_dim() {
            return Err(Error::BadDimension(format!(
                "translation of length {}, expected {}",
                v.len(),
                backend.flow_dim()
            )));
        }
        Ok(GroupElement {
            shift: v.to_vec(),
            inner: None,
        })
    }

    pub fn inner(backend: &Backend, u: &AlgebraElement) -> Result<Self> {
        ensure_same(backend, u.backend())?;
        Ok(GroupElement {
            shift: vec![0.0; backend.flow_dim()],
            inner: Some((u.clone(), u.invert()?)),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.shift.iter().all(|x| *x == 0.0) && self.inner.is_none()
    }

    pub fn to_automorphism(&self) -> Automorphism {
        let t = Automorphism::Translation(self.shift.clone());
        match &self.inner {
            Some((u, u_inv)) => Automorphism::Inner {
                u: u.clone(),
                u_inv: u_inv.clone(),
            }
            .then_after(&t),
            None => t,
        }
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        let shift: Vec<f64> = self
            .shift
            .iter()
            .zip(&other.shift)
            .map(|(a, b)| a + b)
            .collect();
        let tau = Automorphism::Translation(self.shift.clone());
        let inner = match (&self.inner, &other.inner) {
            (None, None) => None,
            (Some(p), None) => Some(p.clone()),
            (None, Some((u2, u2i))) => Some((tau.apply(u2)?, tau.apply(u2i)?)),
            (Some((u1, u1i)), Some((u2, u2i))) => {
                let u = u1.mul(&tau.apply(u2)?)?;
                let ui = tau.apply(u2i)?.mul(u1i)?;
                Some((u, ui))
            }
        };
        Ok(GroupElement { shift, inner })
    }

    /// `(-v, tau_{-v}(u^{-1}))`.
    pub fn inverse(&self) -> Result<GroupElement> {
        let shift: Vec<f64> = self.shift.iter().map(|x| -x).collect();
        let tau = Automorphism::Translation(shift.clone());
        let inner = match &self.inner {
            Some((u, ui)) => Some((tau.apply(ui)?, tau.apply(u)?)),
            None => None,
        };
        Ok(GroupElement { shift, inner })
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.to_automorphism().apply(a)
    }

    /// `g * x`, the entrywise action on `M_n(A)`.
    pub fn apply_matrix(&self, x: &MatrixElement) -> Result<MatrixElement> {
        self.to_automorphism().apply_matrix(x)
    }

    /// `g # s`, the entrywise action on `A^n`.
    pub fn apply_vector(&self, v: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
        self.to_automorphism().apply_vector(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendConfig, BackendKind};
    use crate::derivation::Derivation;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn is_matrix(b: &Backend) -> bool {
        b.kind == BackendKind::Matrix
    }

    fn sample(b: &Backend) -> AlgebraElement {
        if is_matrix(b) {
            AlgebraElement::from_dense(
                b,
                nalgebra::DMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.3, j as f64 - 0.7)),
            )
            .unwrap()
        } else {
            AlgebraElement::from_coeffs(
                b,
                [
                    (vec![1, -2], c(0.3, 0.4)),
                    (vec![0, 1], c(-1.0, 0.2)),
                    (vec![0, 0], c(0.5, 0.0)),
                ],
            )
            .unwrap()
        }
    }

    #[test]
    fn translation_phases_a_mode() {
        let b = BackendConfig::default_torus();
        let e = AlgebraElement::mode(&b, &[2, -1], c(1.0, 0.0)).unwrap();
        let v = [0.1, 0.25];
        let t = Automorphism::Translation(v.to_vec()).apply(&e).unwrap();
        let expect = Complex64::from_polar(1.0, 2.0 * PI * (0.2 - 0.25));
        assert!((t.coeff(&[2, -1]) - expect).norm() < 1e-15);
    }

    #[test]
    fn translations_form_a_group() {
        for b in [
            BackendConfig::default_torus(),
            BackendConfig::default_nctorus(),
            BackendConfig::default_matrix(),
        ] {
            let a = sample(&b);
            let v = vec![0.13, -0.05];
            let w = vec![0.02, 0.31];
            let vw: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
            let lhs = Automorphism::Translation(v)
                .then_after(&Automorphism::Translation(w))
                .apply(&a)
                .unwrap();
            let rhs = Automorphism::Translation(vw).apply(&a).unwrap();
            assert!(lhs.dist(&rhs) < 1e-13);
        }
    }

    #[test]
    fn flow_derivative_matches_basis_derivations() {
        for b in [
            BackendConfig::default_torus(),
            BackendConfig::default_nctorus(),
            BackendConfig::default_matrix(),
        ] {
            let a = sample(&b);
            let v = [0.4, -0.3];
            let h = 1e-5;
            let plus = Automorphism::Translation(v.iter().map(|x| x * h).collect())
                .apply(&a)
                .unwrap();
            let minus = Automorphism::Translation(v.iter().map(|x| -x * h).collect())
                .apply(&a)
                .unwrap();
            let fd = (&plus - &minus).scale_real(0.5 / h);
            let exact = Derivation::along(&v).apply(&a).unwrap();
            assert!(fd.dist(&exact) <= 1e-6, "{:?}", b.kind);
        }
    }

    #[test]
    fn group_law_matches_composition() {
        let b = BackendConfig::default_nctorus();
        let u1 = AlgebraElement::from_coeffs(
            &b,
            [(vec![0, 0], c(1.0, 0.0)), (vec![1, 0], c(0.1, 0.05))],
        )
        .unwrap();
        let u2 = AlgebraElement::from_coeffs(
            &b,
            [(vec![0, 0], c(1.0, 0.0)), (vec![0, 1], c(-0.08, 0.02))],
        )
        .unwrap();
        let mut g = GroupElement::inner(&b, &u1).unwrap();
        g.shift = vec![0.05, 0.0];
        let mut h = GroupElement::inner(&b, &u2).unwrap();
        h.shift = vec![0.0, 0.07];
        let a = sample(&b);
        let gh = g.compose(&h).unwrap();
        let lhs = gh.apply(&a).unwrap();
        let rhs = g.apply(&h.apply(&a).unwrap()).unwrap();
        assert!(lhs.dist(&rhs) < 1e-12);
        let back = gh.inverse().unwrap().apply(&lhs).unwrap();
        assert!(back.dist(&a) < 1e-12);
    }
}
