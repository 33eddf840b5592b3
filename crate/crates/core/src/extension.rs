//! Lifting a group of automorphisms of `A` to semilinear automorphisms of
//! `E = pA^n`, and the Lie algebra extension seen at the identity.
//!
//! For `g` close enough to the identity, `g * p` is conjugate to `p` by
//! `gamma(g) = p (g*p) + (1-p)(1 - g*p)`, and `S_E(g) s = gamma(g) (g # s)`
//! is a `g`-semilinear bijection of `E`. Products of lifts differ from the
//! lift of the product by `omega(g, g') = gamma(g) (g*gamma(g')) gamma(gg')^{-1}`.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::automorphism::{Automorphism, GroupElement};
use crate::connection::{gamma_of_derivation, DerivativeEndomorphism};
use crate::derivation::Derivation;
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::idempotent::{normalize_iso_pair, similarity_witness, stabilize_conjugator, Idempotent};
use crate::matrix::MatrixElement;
use crate::projective::{right_mul, vec_dist, vec_norm, vec_sub, ModuleVector, ProjectiveModule};

fn same_group_element(a: &GroupElement, b: &GroupElement) -> bool {
    a.shift == b.shift
        && match (&a.inner, &b.inner) {
            (None, None) => true,
            (Some((u, _)), Some((v, _))) => u.dist(v) == 0.0,
            _ => false,
        }
}

/// `gamma(g)` and its inverse for one group element.
#[derive(Clone, Debug)]
pub struct Lift {
    pub g: GroupElement,
    pub gamma: MatrixElement,
    pub gamma_inv: MatrixElement,
    /// `|gamma (g*p) gamma^{-1} - p|`.
    pub residual: f64,
}

/// `gamma(g) = s_{g*p}`; exactly `1` for the identity.
pub fn gamma_group(g: &GroupElement, p: &Idempotent) -> Result<Lift> {
    let b = p.backend();
    if g.is_identity() {
        let one = MatrixElement::identity(b, p.n());
        return Ok(Lift {
            g: g.clone(),
            gamma: one.clone(),
            gamma_inv: one,
            residual: 0.0,
        });
    }
    let q = Idempotent::new(g.apply_matrix(p.matrix())?)?;
    let w = similarity_witness(p, &q)?;
    if w.residual > b.tol {
        return Err(Error::NotInNeighborhood { step: None });
    }
    Ok(Lift {
        g: g.clone(),
        gamma: w.s,
        gamma_inv: w.s_inv,
        residual: w.residual,
    })
}

impl Lift {
    /// `S_E(g) s = gamma(g) (g # s)`.
    pub fn apply(&self, s: &ModuleVector) -> Result<ModuleVector> {
        Ok(ModuleVector {
            v: self.gamma.apply(&self.g.apply_vector(&s.v)?)?,
        })
    }

    /// `|S(s.a) - S(s).(g.a)|`.
    pub fn semilinearity_residual(&self, s: &ModuleVector, a: &AlgebraElement) -> Result<f64> {
        let lhs = self.apply(&ModuleVector {
            v: right_mul(&s.v, a)?,
        })?;
        let rhs = right_mul(&self.apply(s)?.v, &self.g.apply(a)?)?;
        Ok(vec_dist(&lhs.v, &rhs))
    }
}

/// The factor system `(S, omega)` of the lifts over `E`. Lifts are cached per
/// group element, so repeated products reuse the same `gamma`.
#[derive(Debug)]
pub struct FactorSystem {
    pub module: ProjectiveModule,
    cache: Mutex<Vec<Arc<Lift>>>,
}

impl FactorSystem {
    pub fn new(module: &ProjectiveModule) -> Self {
        FactorSystem {
            module: module.clone(),
            cache: Mutex::new(Vec::new()),
        }
    }

    fn p(&self) -> &MatrixElement {
        self.module.p()
    }

    pub fn lift(&self, g: &GroupElement) -> Result<Arc<Lift>> {
        if let Some(hit) = self
            .cache
            .lock()
            .expect("lift cache")
            .iter()
            .find(|l| same_group_element(&l.g, g))
        {
            return Ok(hit.clone());
        }
        let lift = Arc::new(gamma_group(g, self.module.idempotent())?);
        let mut cache = self.cache.lock().expect("lift cache");
        if let Some(hit) = cache.iter().find(|l| same_group_element(&l.g, g)) {
            return Ok(hit.clone());
        }
        cache.push(lift.clone());
        Ok(lift)
    }

    /// `S_E(g) s`, with the result checked to lie in `E`.
    pub fn lift_apply(&self, g: &GroupElement, s: &ModuleVector) -> Result<ModuleVector> {
        let out = self.lift(g)?.apply(s)?;
        let r = self.module.membership_residual(&out.v)?;
        if r > self.module.backend().tol {
            return Err(Error::Constraint {
                what: "S_E(g) s in E".into(),
                residual: r,
            });
        }
        Ok(out)
    }

    /// `omega(g, g') = p gamma(g) (g*gamma(g')) gamma(gg')^{-1} p`.
    pub fn omega(&self, g: &GroupElement, h: &GroupElement) -> Result<MatrixElement> {
        let gh = g.compose(h)?;
        let lg = self.lift(g)?;
        let lh = self.lift(h)?;
        let lgh = self.lift(&gh)?;
        let moved = g.apply_matrix(&lh.gamma)?;
        let raw = lg.gamma.mul3(&moved, &lgh.gamma_inv)?;
        self.p().mul3(&raw, self.p())
    }

    /// `S(g)(phi) = gamma(g) (g*phi) gamma(g)^{-1}`, compressed to the corner.
    pub fn conjugate(&self, g: &GroupElement, phi: &MatrixElement) -> Result<MatrixElement> {
        let l = self.lift(g)?;
        let raw = l.gamma.mul3(&g.apply_matrix(phi)?, &l.gamma_inv)?;
        self.p().mul3(&raw, self.p())
    }

    /// `(n, g)(n', g') = (n S(g)(n') omega(g, g'), gg')`.
    pub fn multiply(
        &self,
        a: &(MatrixElement, GroupElement),
        b: &(MatrixElement, GroupElement),
    ) -> Result<(MatrixElement, GroupElement)> {
        let (n1, g1) = a;
        let (n2, g2) = b;
        let corner = n1.mul3(&self.conjugate(g1, n2)?, &self.omega(g1, g2)?)?;
        Ok((corner, g1.compose(g2)?))
    }

    /// `|(ab)c - a(bc)|` on the corner part; the group parts must agree
    /// exactly up to float addition.
    pub fn associativity_residual(
        &self,
        a: &(MatrixElement, GroupElement),
        b: &(MatrixElement, GroupElement),
        c: &(MatrixElement, GroupElement),
    ) -> Result<f64> {
        let left = self.multiply(&self.multiply(a, b)?, c)?;
        let right = self.multiply(a, &self.multiply(b, c)?)?;
        let shift = left
            .1
            .shift
            .iter()
            .zip(&right.1.shift)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        Ok(left.0.dist(&right.0).max(shift))
    }

    /// `max(|omega(g, 1) - p|, |omega(1, g) - p|)`.
    pub fn normalization_residual(&self, g: &GroupElement) -> Result<f64> {
        let one = GroupElement::identity(self.module.backend());
        let a = self.omega(g, &one)?.dist(self.p());
        let b = self.omega(&one, g)?.dist(self.p());
        Ok(a.max(b))
    }
}

/// `m(a) = a psi(a)^{-1}`, the right multiplier implementing the crossed
/// homomorphism `a -> rho(psi(a) a^{-1})^{-1}` through `rho(x)^{-1} = rho(x^{-1})`.
///
/// Because `rho` reverses products, the crossed law
/// `f(ab) = f(a) (a . f(b))` with `a` acting by conjugation `rho(a)^{-1} . rho(a)`
/// becomes `m(ab) = a m(b) a^{-1} m(a)` for the multipliers.
pub fn crossed_hom(psi: &Automorphism, a: &AlgebraElement) -> Result<AlgebraElement> {
    a.mul(&psi.apply(a)?.invert()?)
}

/// `|m(ab) - a m(b) a^{-1} m(a)|`.
pub fn crossed_law_residual(
    psi: &Automorphism,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<f64> {
    let lhs = crossed_hom(psi, &a.mul(b)?)?;
    let rhs = a
        .mul(&crossed_hom(psi, b)?)?
        .mul(&a.invert()?)?
        .mul(&crossed_hom(psi, a)?)?;
    Ok(lhs.dist(&rhs))
}

/// The derivative of `S_E` at the identity: `s -> gamma_dot(x) s + x.s`
/// with `gamma_dot(x) = (2p - 1)(x.p)`.
pub fn t1se(x: &Derivation, e: &ProjectiveModule) -> Result<DerivativeEndomorphism> {
    Ok(DerivativeEndomorphism {
        matrix: gamma_of_derivation(x, e.idempotent())?,
        action: x.clone(),
        right: None,
        claimed: x.clone(),
    })
}

/// `DS(x)(phi) = [gamma_dot(x), phi] + x.phi`.
pub fn ds_apply(
    x: &Derivation,
    phi: &MatrixElement,
    e: &ProjectiveModule,
) -> Result<MatrixElement> {
    let t = t1se(x, e)?;
    Ok(&t.matrix.commutator(phi)? + &x.apply_matrix(phi)?)
}

/// `max |DS(x)(phi) s - [T(x), phi] s|` over `vectors`.
pub fn ds_residual(
    x: &Derivation,
    phi: &MatrixElement,
    e: &ProjectiveModule,
    vectors: &[ModuleVector],
) -> Result<f64> {
    let t = t1se(x, e)?;
    let ds = ds_apply(x, phi, e)?;
    let r = vectors
        .par_iter()
        .map(|s| {
            let lhs = ds.apply(&s.v)?;
            let rhs = vec_sub(&t.apply(&phi.apply(&s.v)?)?, &phi.apply(&t.apply(&s.v)?)?);
            Ok(vec_dist(&lhs, &rhs))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

fn omega_operator(
    tx: &DerivativeEndomorphism,
    ty: &DerivativeEndomorphism,
    tb: &DerivativeEndomorphism,
    s: &[AlgebraElement],
) -> Result<Vec<AlgebraElement>> {
    let xy = tx.apply(&ty.apply(s)?)?;
    let yx = ty.apply(&tx.apply(s)?)?;
    Ok(vec_sub(&vec_sub(&xy, &yx), &tb.apply(s)?))
}

/// `D omega(x, x') = [T(x), T(x')] - T([x, x'])` as a corner matrix, with
/// the `A`-linearity defect of the operator on the test pairs.
#[derive(Clone, Debug)]
pub struct DOmega {
    pub matrix: MatrixElement,
    pub linearity: f64,
}

pub fn domega(
    x: &Derivation,
    y: &Derivation,
    e: &ProjectiveModule,
    tests: &[(ModuleVector, AlgebraElement)],
) -> Result<DOmega> {
    let b = e.backend();
    let tx = t1se(x, e)?;
    let ty = t1se(y, e)?;
    let tb = t1se(&x.bracket(y, b)?, e)?;
    let cols = e
        .generators()?
        .par_iter()
        .map(|s| omega_operator(&tx, &ty, &tb, &s.v))
        .collect::<Result<Vec<_>>>()?;
    let n = e.n();
    let raw = MatrixElement::from_fn(b, n, |r, k| cols[k][r].clone());
    let matrix = e.p().mul3(&raw, e.p())?;
    let linearity = tests
        .par_iter()
        .map(|(s, a)| {
            let lhs = omega_operator(&tx, &ty, &tb, &right_mul(&s.v, a)?)?;
            let rhs = right_mul(&omega_operator(&tx, &ty, &tb, &s.v)?, a)?;
            Ok(vec_dist(&lhs, &rhs))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(DOmega { matrix, linearity })
}

/// An element `(phi, x)` of `gl_A(E) + g`.
#[derive(Clone, Debug)]
pub struct ExtensionElement {
    pub phi: MatrixElement,
    pub x: Derivation,
}

impl ExtensionElement {
    /// `Gamma(phi, x) = phi + T(x)` as an operator on `A^n`.
    pub fn operator(&self, e: &ProjectiveModule) -> Result<DerivativeEndomorphism> {
        let t = t1se(&self.x, e)?;
        Ok(DerivativeEndomorphism {
            matrix: &t.matrix + &self.phi,
            ..t
        })
    }

    pub fn dist(&self, other: &ExtensionElement, e: &ProjectiveModule) -> Result<f64> {
        let b = e.backend();
        let dx = self.x.plus(&other.x.scaled(-1.0)).normal_form(b)?;
        let w = dx.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let inner = dx.inner.map(|c| c.norm()).unwrap_or(0.0);
        Ok(self.phi.dist(&other.phi).max(w).max(inner))
    }
}

/// `([phi, phi'] + DS(x)(phi') - DS(x')(phi) + D omega(x, x'), [x, x'])`.
pub fn hat_bracket(
    u: &ExtensionElement,
    v: &ExtensionElement,
    e: &ProjectiveModule,
) -> Result<ExtensionElement> {
    let b = e.backend();
    let fiber = u.phi.commutator(&v.phi)?;
    let a = ds_apply(&u.x, &v.phi, e)?;
    let c = ds_apply(&v.x, &u.phi, e)?;
    let w = domega(&u.x, &v.x, e, &[])?.matrix;
    let phi = &(&(&fiber + &a) - &c) + &w;
    let x = u.x.bracket(&v.x, b)?.normal_form(b)?.to_derivation();
    Ok(ExtensionElement { phi, x })
}

/// `max |[Gamma(u), Gamma(v)] s - Gamma([u, v]) s|` over `vectors`.
pub fn bracket_preservation_residual(
    u: &ExtensionElement,
    v: &ExtensionElement,
    e: &ProjectiveModule,
    vectors: &[ModuleVector],
) -> Result<f64> {
    let gu = u.operator(e)?;
    let gv = v.operator(e)?;
    let gb = hat_bracket(u, v, e)?.operator(e)?;
    let r = vectors
        .par_iter()
        .map(|s| {
            let lhs = vec_sub(&gu.apply(&gv.apply(&s.v)?)?, &gv.apply(&gu.apply(&s.v)?)?);
            Ok(vec_dist(&lhs, &gb.apply(&s.v)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

/// Size of `[[u,v],w] + [[v,w],u] + [[w,u],v]`.
pub fn jacobi_residual(
    u: &ExtensionElement,
    v: &ExtensionElement,
    w: &ExtensionElement,
    e: &ProjectiveModule,
) -> Result<f64> {
    let terms = [(u, v, w), (v, w, u), (w, u, v)]
        .par_iter()
        .map(|(a, b, c)| hat_bracket(&hat_bracket(a, b, e)?, c, e))
        .collect::<Result<Vec<_>>>()?;
    let zero = ExtensionElement {
        phi: MatrixElement::zero(e.backend(), e.n()),
        x: Derivation::zero(),
    };
    let sum = ExtensionElement {
        phi: &(&terms[0].phi + &terms[1].phi) + &terms[2].phi,
        x: terms[0].x.plus(&terms[1].x).plus(&terms[2].x),
    };
    sum.dist(&zero, e)
}

/// A lift for `g` with `g*p` isomorphic but not close to `p`, acting on the
/// stabilized module `diag(p, 0) A^{2n}` by `s -> z (g # s)`.
#[derive(Clone, Debug)]
pub struct StabilizedLift {
    pub g: GroupElement,
    pub module: ProjectiveModule,
    pub z: MatrixElement,
    pub z_inv: MatrixElement,
    /// `|z diag(g*p, 0) z^{-1} - diag(p, 0)|`.
    pub residual: f64,
}

/// Builds the stabilized lift from a caller-supplied isomorphism
/// `x: pA^n -> (g*p)A^n` with inverse `y`.
pub fn stabilized_lift(
    g: &GroupElement,
    e: &ProjectiveModule,
    x: &MatrixElement,
    y: &MatrixElement,
) -> Result<StabilizedLift> {
    let p = e.idempotent();
    let q = Idempotent::new(g.apply_matrix(p.matrix())?)?;
    let (xn, yn) = normalize_iso_pair(x, y, p, &q)?;
    let st = stabilize_conjugator(&xn, &yn, p, &q)?;
    let module = ProjectiveModule::new(p.embed_tilde(2 * e.n())?);
    Ok(StabilizedLift {
        g: g.clone(),
        module,
        z: st.z,
        z_inv: st.z_inv,
        residual: st.residual,
    })
}

impl StabilizedLift {
    pub fn apply(&self, s: &ModuleVector) -> Result<ModuleVector> {
        Ok(ModuleVector {
            v: self.z.apply(&self.g.apply_vector(&s.v)?)?,
        })
    }

    pub fn semilinearity_residual(&self, s: &ModuleVector, a: &AlgebraElement) -> Result<f64> {
        let lhs = self.apply(&ModuleVector {
            v: right_mul(&s.v, a)?,
        })?;
        let rhs = right_mul(&self.apply(s)?.v, &self.g.apply(a)?)?;
        Ok(vec_dist(&lhs.v, &rhs))
    }

    /// `|(1 - p~) S(s)|`.
    pub fn membership_residual(&self, s: &ModuleVector) -> Result<f64> {
        let out = self.apply(s)?;
        Ok(vec_norm(
            &self.module.idempotent().complement().apply(&out.v)?,
        ))
    }
}

/// `S(g) S(g') phi` against `omega(g,g') S(gg')(phi) omega(g,g')^{-1}`.
pub fn conjugation_law_residual(
    fs: &FactorSystem,
    g: &GroupElement,
    h: &GroupElement,
    phi: &MatrixElement,
) -> Result<f64> {
    let lhs = fs.conjugate(g, &fs.conjugate(h, phi)?)?;
    let w = fs.omega(g, h)?;
    let w_inv = crate::idempotent::corner_invert(&w, fs.module.idempotent())?;
    let rhs = w.mul3(&fs.conjugate(&g.compose(h)?, phi)?, &w_inv)?;
    Ok(lhs.dist(&rhs))
}

/// `omega(g,g') omega(gg',g'') - S(g)(omega(g',g'')) omega(g,g'g'')`.
pub fn cocycle_residual(
    fs: &FactorSystem,
    g: &GroupElement,
    h: &GroupElement,
    k: &GroupElement,
) -> Result<f64> {
    let lhs = fs.omega(g, h)?.mul(&fs.omega(&g.compose(h)?, k)?)?;
    let rhs = fs
        .conjugate(g, &fs.omega(h, k)?)?
        .mul(&fs.omega(g, &h.compose(k)?)?)?;
    Ok(lhs.dist(&rhs))
}
