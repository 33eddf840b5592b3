//! The module `E = pA^n`, its vectors, homomorphisms `q M_n(A) p` and
//! twisted modules.
//!
//! `A` acts on `E` from the right, `rho(a) s = s.a`, so `rho` reverses
//! products: `rho(a) rho(b) = rho(ba)`.

use crate::automorphism::Automorphism;
use crate::backend::Backend;
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::idempotent::{
    corner_invert, corner_residual, retract_idempotent, Idempotent, RETRACT_TARGET,
};
use crate::matrix::MatrixElement;

/// `max_i |v_i|`, the vector norm matching the row-sum matrix norm.
pub fn vec_norm(v: &[AlgebraElement]) -> f64 {
    v.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

pub fn vec_sub(a: &[AlgebraElement], b: &[AlgebraElement]) -> Vec<AlgebraElement> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_add(a: &[AlgebraElement], b: &[AlgebraElement]) -> Vec<AlgebraElement> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_dist(a: &[AlgebraElement], b: &[AlgebraElement]) -> f64 {
    vec_norm(&vec_sub(a, b))
}

/// `s.a`, entrywise right multiplication.
pub fn right_mul(s: &[AlgebraElement], a: &AlgebraElement) -> Result<Vec<AlgebraElement>> {
    s.iter().map(|e| e.mul(a)).collect()
}

/// `E = pA^n`.
#[derive(Clone, Debug)]
pub struct ProjectiveModule {
    p: Idempotent,
}

/// A vector of some `pA^n`; the owning module travels with the caller.
#[derive(Clone, Debug)]
pub struct ModuleVector {
    pub v: Vec<AlgebraElement>,
}

impl ModuleVector {
    pub fn entries(&self) -> &[AlgebraElement] {
        &self.v
    }

    pub fn dist(&self, other: &ModuleVector) -> f64 {
        vec_dist(&self.v, &other.v)
    }
}

impl ProjectiveModule {
    pub fn new(p: Idempotent) -> Self {
        ProjectiveModule { p }
    }

    /// The free module `A^n`.
    pub fn free(backend: &Backend, n: usize) -> Result<Self> {
        Ok(Self::new(Idempotent::new(MatrixElement::identity(
            backend, n,
        ))?))
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn backend(&self) -> &Backend {
        self.p.backend()
    }

    pub fn idempotent(&self) -> &Idempotent {
        &self.p
    }

    pub fn p(&self) -> &MatrixElement {
        self.p.matrix()
    }

    /// `|p v - v|`.
    pub fn membership_residual(&self, v: &[AlgebraElement]) -> Result<f64> {
        Ok(vec_dist(&self.p().apply(v)?, v))
    }

    /// `p v`, the canonical projection onto `E`.
    pub fn project_vector(&self, v: &[AlgebraElement]) -> Result<ModuleVector> {
        Ok(ModuleVector {
            v: self.p().apply(v)?,
        })
    }

    /// The generators `p e_i`.
    pub fn generators(&self) -> Result<Vec<ModuleVector>> {
        let b = self.backend();
        (0..self.n())
            .map(|i| {
                let e: Vec<AlgebraElement> = (0..self.n())
                    .map(|j| {
                        if i == j {
                            AlgebraElement::one(b)
                        } else {
                            AlgebraElement::zero(b)
                        }
                    })
                    .collect();
                self.project_vector(&e)
            })
            .collect()
    }

    /// `s.a`.
    pub fn act(&self, s: &ModuleVector, a: &AlgebraElement) -> Result<ModuleVector> {
        Ok(ModuleVector {
            v: right_mul(&s.v, a)?,
        })
    }

    /// Wraps `v` after checking `p v = v` to tolerance.
    pub fn vector(&self, v: Vec<AlgebraElement>) -> Result<ModuleVector> {
        let r = self.membership_residual(&v)?;
        if r > self.backend().tol {
            return Err(Error::Constraint {
                what: "p v = v".into(),
                residual: r,
            });
        }
        Ok(ModuleVector { v })
    }
}

/// An `A`-linear map `pA^n -> qA^m`, stored as `x in q M_N(A) p` after both
/// idempotents are padded to `N = max(n, m)`.
#[derive(Clone, Debug)]
pub struct ModuleHom {
    pub source: ProjectiveModule,
    pub target: ProjectiveModule,
    pub x: MatrixElement,
}

impl ModuleHom {
    pub fn new(
        source: &ProjectiveModule,
        target: &ProjectiveModule,
        x: MatrixElement,
    ) -> Result<Self> {
        let size = source.n().max(target.n());
        if x.n() != size {
            return Err(Error::BadDimension(format!(
                "hom matrix of size {}, expected {size}",
                x.n()
            )));
        }
        let p = source.p().embed_tilde(size)?;
        let q = target.p().embed_tilde(size)?;
        let r = corner_residual(&x, &p, &q);
        if r > x.backend().tol {
            return Err(Error::Constraint {
                what: "x = qxp".into(),
                residual: r,
            });
        }
        Ok(ModuleHom {
            source: source.clone(),
            target: target.clone(),
            x,
        })
    }

    pub fn identity(e: &ProjectiveModule) -> Self {
        ModuleHom {
            source: e.clone(),
            target: e.clone(),
            x: e.p().clone(),
        }
    }

    fn size(&self) -> usize {
        self.x.n()
    }

    /// `x s`, padding `s` and cutting the result to the target size.
    pub fn apply(&self, s: &ModuleVector) -> Result<ModuleVector> {
        if s.v.len() != self.source.n() {
            return Err(Error::BadDimension(
                "vector does not belong to the source".into(),
            ));
        }
        let b = self.x.backend();
        let mut padded = s.v.clone();
        padded.resize(self.size(), AlgebraElement::zero(b));
        let mut out = self.x.apply(&padded)?;
        out.truncate(self.target.n());
        Ok(ModuleVector { v: out })
    }

    /// `self o other`.
    pub fn compose(&self, other: &ModuleHom) -> Result<ModuleHom> {
        let size = self.size().max(other.size());
        let x = self.x.embed_tilde(size)?.mul(&other.x.embed_tilde(size)?)?;
        let keep = other.source.n().max(self.target.n());
        let x = x.top_left(keep)?;
        ModuleHom::new(&other.source, &self.target, x)
    }

    /// Inverse in `End_A(E)`, through the corner inversion formula.
    pub fn invert(&self) -> Result<ModuleHom> {
        if self.source.n() != self.target.n() || self.source.p().dist(self.target.p()) > 0.0 {
            return Err(Error::BadDimension(
                "only endomorphisms have a corner inverse".into(),
            ));
        }
        let inv = corner_invert(&self.x, self.source.idempotent())?;
        Ok(ModuleHom {
            source: self.source.clone(),
            target: self.target.clone(),
            x: inv,
        })
    }
}

/// Corner inverse of an endomorphism; present iff `h` lies in `GL_A(E)`.
pub fn end_algebra_invert(h: &ModuleHom) -> Result<ModuleHom> {
    h.invert()
}

/// The twisted module `E^psi`, realized as `p' A^n` with
/// `p' = M_n(psi^{-1})(p)`, together with the semilinear intertwiner
/// `x -> psi(x)` onto `E`.
#[derive(Clone, Debug)]
pub struct TwistedModule {
    pub module: ProjectiveModule,
    pub psi: Automorphism,
}

impl TwistedModule {
    /// `Phi(s) = psi^(n)(s)`, carrying `p' A^n` onto `pA^n`.
    pub fn intertwine(&self, s: &ModuleVector) -> Result<ModuleVector> {
        Ok(ModuleVector {
            v: self.psi.apply_vector(&s.v)?,
        })
    }

    /// `|Phi(s . psi^{-1}(a)) - Phi(s) . a|`.
    pub fn semilinearity_residual(&self, s: &ModuleVector, a: &AlgebraElement) -> Result<f64> {
        let pulled = self.psi.inverse().apply(a)?;
        let lhs = self.intertwine(&self.module.act(s, &pulled)?)?;
        let rhs = right_mul(&self.intertwine(s)?.v, a)?;
        Ok(vec_dist(&lhs.v, &rhs))
    }
}

pub fn twist_module(e: &ProjectiveModule, psi: &Automorphism) -> Result<TwistedModule> {
    let moved = psi.inverse().apply_matrix(e.p())?;
    let p = match Idempotent::new(moved.clone()) {
        Ok(i) if i.residual() <= RETRACT_TARGET => i,
        _ => retract_idempotent(&moved)?,
    };
    Ok(TwistedModule {
        module: ProjectiveModule::new(p),
        psi: psi.clone(),
    })
}
