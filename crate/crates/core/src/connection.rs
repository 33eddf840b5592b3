//! Connections on `E = pA^n`.
//!
//! A connection is stored as its offset `alpha` from the Levi–Civita
//! connection `p o D`, evaluated extensionally on the flow basis
//! `delta_1, .., delta_m`. Inner derivations that are not part of the basis
//! get `alpha = 0`, so `nabla_{ad a} s = p (ad a . s)`.

use rayon::prelude::*;

use crate::derivation::Derivation;
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::idempotent::{corner_invert, corner_residual, Idempotent};
use crate::matrix::MatrixElement;
use crate::projective::{right_mul, vec_add, vec_dist, vec_norm, ModuleVector, ProjectiveModule};

/// Tolerance of the identities `[p, gamma(D)] = D.p`, `p (D.p) p = 0` and
/// `(1-p)(D.p)(1-p) = 0`.
pub const GAMMA_TOL: f64 = 1e-10;

/// `gamma(D) = (2p - 1)(D.p)`, checked against its defining identities.
pub fn gamma_of_derivation(d: &Derivation, p: &Idempotent) -> Result<MatrixElement> {
    let pm = p.matrix();
    let dp = d.apply_matrix(pm)?;
    let two_p_minus_one = &pm.scale_real(2.0) - &MatrixElement::identity(p.backend(), p.n());
    let gamma = two_p_minus_one.mul(&dp)?;
    let r = gamma_residuals(&gamma, &dp, p)?;
    let worst = r.commutator.max(r.inner).max(r.outer);
    if worst > GAMMA_TOL {
        return Err(Error::Constraint {
            what: "[p, gamma(D)] = D.p".into(),
            residual: worst,
        });
    }
    Ok(gamma)
}

/// Residuals of the identities satisfied by `gamma(D)`.
#[derive(Clone, Copy, Debug)]
pub struct GammaResiduals {
    /// `|[p, gamma] - D.p|`
    pub commutator: f64,
    /// `|p (D.p) p|`
    pub inner: f64,
    /// `|(1-p)(D.p)(1-p)|`
    pub outer: f64,
}

pub fn gamma_residuals(
    gamma: &MatrixElement,
    dp: &MatrixElement,
    p: &Idempotent,
) -> Result<GammaResiduals> {
    let pm = p.matrix();
    let comp = p.complement();
    Ok(GammaResiduals {
        commutator: pm.commutator(gamma)?.dist(dp),
        inner: pm.mul3(dp, pm)?.norm(),
        outer: comp.mul3(dp, &comp)?.norm(),
    })
}

/// Values `alpha(delta_j)` of a one-form on the flow basis.
#[derive(Clone, Debug)]
pub struct OneForm {
    pub values: Vec<MatrixElement>,
}

impl OneForm {
    pub fn zero(e: &ProjectiveModule) -> Self {
        let m = e.backend().flow_dim();
        OneForm {
            values: vec![MatrixElement::zero(e.backend(), e.n()); m],
        }
    }

    /// `alpha(D)`: linear on the flow part, zero on the inner part.
    pub fn eval(&self, d: &Derivation, e: &ProjectiveModule) -> Result<MatrixElement> {
        let nf = d.normal_form(e.backend())?;
        if nf.weights.len() != self.values.len() {
            return Err(Error::UnknownDerivation);
        }
        let mut acc = MatrixElement::zero(e.backend(), e.n());
        for (w, v) in nf.weights.iter().zip(&self.values) {
            if *w != 0.0 {
                acc = &acc + &v.scale_real(*w);
            }
        }
        Ok(acc)
    }
}

/// `nabla_alpha = p o D + alpha(D)` on `E`.
#[derive(Clone, Debug)]
pub struct Connection {
    pub module: ProjectiveModule,
    pub alpha: OneForm,
}

impl Connection {
    pub fn new(module: &ProjectiveModule, alpha: OneForm) -> Result<Self> {
        if alpha.values.len() != module.backend().flow_dim() {
            return Err(Error::BadDimension(format!(
                "{} one-form values for {} basis derivations",
                alpha.values.len(),
                module.backend().flow_dim()
            )));
        }
        for v in &alpha.values {
            let r = corner_residual(v, module.p(), module.p());
            if r > module.backend().tol {
                return Err(Error::Constraint {
                    what: "alpha(D) = p alpha(D) p".into(),
                    residual: r,
                });
            }
        }
        Ok(Connection {
            module: module.clone(),
            alpha,
        })
    }

    /// The Levi–Civita connection `s -> p (D.s)`.
    pub fn levi_civita(module: &ProjectiveModule) -> Self {
        Connection {
            module: module.clone(),
            alpha: OneForm::zero(module),
        }
    }

    fn p(&self) -> &MatrixElement {
        self.module.p()
    }

    /// `nabla_D s = p (D.s) + alpha(D) s`.
    pub fn covariant_derivative(&self, d: &Derivation, s: &ModuleVector) -> Result<ModuleVector> {
        let alpha = self.alpha.eval(d, &self.module)?;
        let ds = d.apply_vector(&s.v)?;
        let lc = self.p().apply(&ds)?;
        Ok(ModuleVector {
            v: vec_add(&lc, &alpha.apply(&s.v)?),
        })
    }

    /// The same derivative written as `(gamma(D) + alpha(D)) s + D.s`.
    pub fn covariant_derivative_gamma_form(
        &self,
        d: &Derivation,
        s: &ModuleVector,
    ) -> Result<ModuleVector> {
        let gamma = gamma_of_derivation(d, self.module.idempotent())?;
        let alpha = self.alpha.eval(d, &self.module)?;
        let m = &gamma + &alpha;
        Ok(ModuleVector {
            v: vec_add(&m.apply(&s.v)?, &d.apply_vector(&s.v)?),
        })
    }

    /// Leibniz defect `|nabla(s.a) - nabla(s).a - s.(D.a)|`.
    pub fn leibniz_residual(
        &self,
        d: &Derivation,
        s: &ModuleVector,
        a: &AlgebraElement,
    ) -> Result<f64> {
        let lhs = self.covariant_derivative(d, &self.module.act(s, a)?)?;
        let first = right_mul(&self.covariant_derivative(d, s)?.v, a)?;
        let second = right_mul(&s.v, &d.apply(a)?)?;
        Ok(vec_dist(&lhs.v, &vec_add(&first, &second)))
    }

    /// `|(1 - p) nabla_D s|`.
    pub fn escape_residual(&self, d: &Derivation, s: &ModuleVector) -> Result<f64> {
        let out = self.covariant_derivative(d, s)?;
        let comp = self.module.idempotent().complement();
        Ok(vec_norm(&comp.apply(&out.v)?))
    }
}

/// A gauge transformation together with the inverse it used.
#[derive(Clone, Debug)]
pub struct Gauge {
    pub g: MatrixElement,
    pub g_inv: MatrixElement,
}

impl Gauge {
    /// Checks `g` is a corner element and inverts it in `p M_n(A) p`.
    pub fn new(g: &MatrixElement, e: &ProjectiveModule) -> Result<Self> {
        let g_inv = corner_invert(g, e.idempotent())?;
        Ok(Gauge {
            g: g.clone(),
            g_inv,
        })
    }

    /// `gh` with inverse `h^{-1} g^{-1}`.
    pub fn compose(&self, h: &Gauge) -> Result<Gauge> {
        Ok(Gauge {
            g: self.g.mul(&h.g)?,
            g_inv: h.g_inv.mul(&self.g_inv)?,
        })
    }
}

/// `alpha'(D) = g^{-1} (D.g) p + g^{-1} alpha(D) g`, the connection with
/// `nabla'_D s = g^{-1} nabla_D (g s)`. The difference of both sides is
/// `A`-linear, so it is verified on the generators `p e_i`.
pub fn gauge_transform(c: &Connection, g: &Gauge) -> Result<Connection> {
    let b = c.module.backend();
    let p = c.p();
    let values = (0..b.flow_dim())
        .into_par_iter()
        .map(|j| {
            let d = Derivation::Basis(j);
            let dg = d.apply_matrix(&g.g)?;
            let log = g.g_inv.mul3(&dg, p)?;
            let adj = g.g_inv.mul3(&c.alpha.values[j], &g.g)?;
            Ok(&log + &adj)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = Connection {
        module: c.module.clone(),
        alpha: OneForm { values },
    };
    let gens = c.module.generators()?;
    let worst = gauge_residual(c, &out, g, &gens)?;
    if worst > b.tol {
        return Err(Error::Constraint {
            what: "nabla' = g^{-1} nabla g".into(),
            residual: worst,
        });
    }
    Ok(out)
}

/// `max |nabla'_D s - g^{-1} nabla_D (g s)|` over the basis and `vectors`.
pub fn gauge_residual(
    c: &Connection,
    transformed: &Connection,
    g: &Gauge,
    vectors: &[ModuleVector],
) -> Result<f64> {
    let m = c.module.backend().flow_dim();
    let pairs: Vec<(usize, &ModuleVector)> = (0..m)
        .flat_map(|j| vectors.iter().map(move |s| (j, s)))
        .collect();
    let r = pairs
        .par_iter()
        .map(|(j, s)| {
            let d = Derivation::Basis(*j);
            let lhs = transformed.covariant_derivative(&d, s)?;
            let gs = ModuleVector {
                v: g.g.apply(&s.v)?,
            };
            let rhs = g.g_inv.apply(&c.covariant_derivative(&d, &gs)?.v)?;
            Ok(vec_dist(&lhs.v, &rhs))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

/// `max_j |alpha_1(delta_j) - alpha_2(delta_j)|`.
pub fn connection_distance(a: &Connection, b: &Connection) -> f64 {
    a.alpha
        .values
        .iter()
        .zip(&b.alpha.values)
        .map(|(x, y)| x.dist(y))
        .fold(0.0, f64::max)
}

/// `rho_hat(a) s = s.a + nabla_{ad a} s`.
pub fn covariant_coordinate(
    c: &Connection,
    a: &AlgebraElement,
    s: &ModuleVector,
) -> Result<ModuleVector> {
    let nab = c.covariant_derivative(&Derivation::Inner(a.clone()), s)?;
    Ok(ModuleVector {
        v: vec_add(&right_mul(&s.v, a)?, &nab.v),
    })
}

/// Largest `|[rho_hat(a), rho(b)] s|` over the given `b`s and vectors.
pub fn covariant_coordinate_commutator(
    c: &Connection,
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    vectors: &[ModuleVector],
) -> Result<f64> {
    let pairs: Vec<(&AlgebraElement, &ModuleVector)> = bs
        .iter()
        .flat_map(|b| vectors.iter().map(move |s| (b, s)))
        .collect();
    let r = pairs
        .par_iter()
        .map(|(b, s)| {
            let lhs = covariant_coordinate(c, a, &c.module.act(s, b)?)?;
            let rhs = c.module.act(&covariant_coordinate(c, a, s)?, b)?;
            Ok(lhs.dist(&rhs))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

/// An operator `s -> M s + D0.s + s.r` on `A^n`, claimed to satisfy
/// `[phi, rho(a)] = rho(D.a)` for the derivation `D`.
#[derive(Clone, Debug)]
pub struct DerivativeEndomorphism {
    pub matrix: MatrixElement,
    pub action: Derivation,
    pub right: Option<AlgebraElement>,
    pub claimed: Derivation,
}

impl DerivativeEndomorphism {
    /// The connection operator `nabla_D` as `gamma(D) + alpha(D)` plus `D`.
    pub fn from_connection(c: &Connection, d: &Derivation) -> Result<Self> {
        let gamma = gamma_of_derivation(d, c.module.idempotent())?;
        Ok(DerivativeEndomorphism {
            matrix: &gamma + &c.alpha.eval(d, &c.module)?,
            action: d.clone(),
            right: None,
            claimed: d.clone(),
        })
    }

    /// `(rho(a), -ad a)`.
    pub fn right_multiplication(e: &ProjectiveModule, a: &AlgebraElement) -> Self {
        DerivativeEndomorphism {
            matrix: MatrixElement::zero(e.backend(), e.n()),
            action: Derivation::zero(),
            right: Some(a.clone()),
            claimed: Derivation::Inner(a.clone()).scaled(-1.0),
        }
    }

    pub fn apply(&self, s: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
        let mut out = vec_add(&self.matrix.apply(s)?, &self.action.apply_vector(s)?);
        if let Some(r) = &self.right {
            out = vec_add(&out, &right_mul(s, r)?);
        }
        Ok(out)
    }
}

/// Outcome of a derivative-endomorphism check.
#[derive(Clone, Copy, Debug)]
pub struct DendReport {
    /// `max |phi(s.a) - phi(s).a - s.(D.a)|`.
    pub relation: f64,
    /// `max |(1 - p) phi(s)|`.
    pub membership: f64,
    pub pass: bool,
}

pub fn dend_check(
    phi: &DerivativeEndomorphism,
    e: &ProjectiveModule,
    generators: &[AlgebraElement],
    vectors: &[ModuleVector],
    tol: f64,
) -> Result<DendReport> {
    let comp = e.idempotent().complement();
    let membership = vectors
        .par_iter()
        .map(|s| Ok(vec_norm(&comp.apply(&phi.apply(&s.v)?)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let pairs: Vec<(&AlgebraElement, &ModuleVector)> = generators
        .iter()
        .flat_map(|a| vectors.iter().map(move |s| (a, s)))
        .collect();
    let relation = pairs
        .par_iter()
        .map(|(a, s)| {
            let lhs = phi.apply(&right_mul(&s.v, a)?)?;
            let first = right_mul(&phi.apply(&s.v)?, a)?;
            let expect = vec_add(&first, &right_mul(&s.v, &phi.claimed.apply(a)?)?);
            Ok(vec_dist(&lhs, &expect))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(DendReport {
        relation,
        membership,
        pass: relation <= tol && membership <= tol,
    })
}

/// Curvature `[nabla_i, nabla_j] - nabla_{[D_i, D_j]}` as a corner matrix,
/// assembled column by column from its values on `p e_k`.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub matrix: MatrixElement,
    /// `max |R(s.a) - R(s).a|` over the test pairs.
    pub linearity: f64,
}

pub fn curvature(
    c: &Connection,
    i: usize,
    j: usize,
    tests: &[(ModuleVector, AlgebraElement)],
) -> Result<Curvature> {
    let b = c.module.backend();
    let di = Derivation::Basis(i);
    let dj = Derivation::Basis(j);
    let bracket = di.bracket(&dj, b)?;
    let op = |s: &ModuleVector| -> Result<Vec<AlgebraElement>> {
        let a = c.covariant_derivative(&di, &c.covariant_derivative(&dj, s)?)?;
        let bb = c.covariant_derivative(&dj, &c.covariant_derivative(&di, s)?)?;
        let br = c.covariant_derivative(&bracket, s)?;
        Ok(crate::projective::vec_sub(
            &crate::projective::vec_sub(&a.v, &bb.v),
            &br.v,
        ))
    };
    let cols = c
        .module
        .generators()?
        .par_iter()
        .map(op)
        .collect::<Result<Vec<_>>>()?;
    let n = c.module.n();
    let matrix = MatrixElement::from_fn(b, n, |r, k| cols[k][r].clone());
    let linearity = tests
        .par_iter()
        .map(|(s, a)| {
            let lhs = op(&c.module.act(s, a)?)?;
            let rhs = right_mul(&op(s)?, a)?;
            Ok(vec_dist(&lhs, &rhs))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Curvature { matrix, linearity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;
    use crate::generate::gen_bott;
    use crate::random;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn bott() -> ProjectiveModule {
        ProjectiveModule::new(gen_bott(&BackendConfig::default_torus(), 1, 8).unwrap())
    }

    fn vectors(e: &ProjectiveModule, count: u64, seed: u64) -> Vec<ModuleVector> {
        (0..count)
            .map(|i| {
                let v =
                    random::vector(e.backend(), e.n(), 3, 1.0, &mut random::rng(seed, i)).unwrap();
                e.project_vector(&v).unwrap()
            })
            .collect()
    }

    #[test]
    fn constant_idempotent_has_no_gamma() {
        let b = BackendConfig::default_torus();
        let p = gen_bott(&b, 0, 8).unwrap();
        assert!(
            gamma_of_derivation(&Derivation::Basis(0), &p)
                .unwrap()
                .norm()
                == 0.0
        );
    }

    #[test]
    fn gamma_identities_for_inner_derivation_on_matrices() {
        let b = BackendConfig::default_matrix();
        let p = crate::generate::random_projection(&b, 2, 3, &mut random::rng(0, 0)).unwrap();
        let u = random::element(&b, 0, 1.0, &mut random::rng(0, 1)).unwrap();
        let d = Derivation::Inner(u);
        let gamma = gamma_of_derivation(&d, &p).unwrap();
        let r = gamma_residuals(&gamma, &d.apply_matrix(p.matrix()).unwrap(), &p).unwrap();
        assert!(r.commutator <= 1e-12 && r.inner <= 1e-12 && r.outer <= 1e-12);
    }

    #[test]
    fn free_module_levi_civita_is_plain_differentiation() {
        let b = BackendConfig::default_torus();
        let e = ProjectiveModule::free(&b, 2).unwrap();
        let c = Connection::levi_civita(&e);
        for s in vectors(&e, 3, 1) {
            let d = Derivation::Basis(1);
            let got = c.covariant_derivative(&d, &s).unwrap();
            assert!(vec_dist(&got.v, &d.apply_vector(&s.v).unwrap()) <= 1e-13);
        }
    }

    #[test]
    fn bott_covariant_derivative_forms_agree() {
        let e = bott();
        let c = Connection::levi_civita(&e);
        let mut r = random::rng(5, 99);
        let a = random::element(e.backend(), 3, 1.0, &mut r).unwrap();
        for s in vectors(&e, 3, 5) {
            for j in 0..2 {
                let d = Derivation::Basis(j);
                let x = c.covariant_derivative(&d, &s).unwrap();
                let y = c.covariant_derivative_gamma_form(&d, &s).unwrap();
                assert!(x.dist(&y) <= 1e-10);
                assert!(c.escape_residual(&d, &s).unwrap() <= 1e-9);
                assert!(c.leibniz_residual(&d, &s, &a).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn single_mode_gauge_has_logarithmic_derivative() {
        let b = BackendConfig::default_torus();
        let e = ProjectiveModule::free(&b, 1).unwrap();
        let g = AlgebraElement::mode(&b, &[2, -1], Complex64::new(1.0, 0.0)).unwrap();
        let gauge = Gauge::new(&MatrixElement::from_entries(&b, 1, vec![g]).unwrap(), &e).unwrap();
        let c = gauge_transform(&Connection::levi_civita(&e), &gauge).unwrap();
        for (j, k) in [(0, 2.0), (1, -1.0)] {
            let expect = AlgebraElement::scalar(&b, Complex64::new(0.0, 2.0 * PI * k));
            assert!(c.alpha.values[j].entry(0, 0).dist(&expect) <= 1e-12);
        }
    }

    #[test]
    fn corner_unit_gauge_is_trivial() {
        let e = bott();
        let gauge = Gauge::new(e.p(), &e).unwrap();
        let c = Connection::levi_civita(&e);
        let t = gauge_transform(&c, &gauge).unwrap();
        assert!(connection_distance(&c, &t) <= 1e-9);
    }

    #[test]
    fn inner_fixed_point_on_free_module() {
        // on A^1 over matrices with alpha(ad X_j) = -X_j every gauge is a symmetry
        let b = BackendConfig::default_matrix();
        let e = ProjectiveModule::free(&b, 1).unwrap();
        let values = (0..2)
            .map(|j| {
                let x = crate::derivation::flow_generator(&b, j).unwrap();
                MatrixElement::from_entries(&b, 1, vec![-&x]).unwrap()
            })
            .collect();
        let c = Connection::new(&e, OneForm { values }).unwrap();
        let g = random::near_unit(&b, 0, 0.3, &mut random::rng(2, 0)).unwrap();
        let gauge = Gauge::new(&MatrixElement::from_entries(&b, 1, vec![g]).unwrap(), &e).unwrap();
        let t = gauge_transform(&c, &gauge).unwrap();
        assert!(connection_distance(&c, &t) <= 1e-10);
    }

    #[test]
    fn commutative_covariant_coordinate_is_right_multiplication() {
        let e = bott();
        let c = Connection::levi_civita(&e);
        let a = random::element(e.backend(), 2, 1.0, &mut random::rng(8, 0)).unwrap();
        let bs = vec![random::element(e.backend(), 2, 1.0, &mut random::rng(8, 1)).unwrap()];
        let vs = vectors(&e, 2, 8);
        assert!(covariant_coordinate_commutator(&c, &a, &bs, &vs).unwrap() <= 1e-12);
    }

    #[test]
    fn dend_examples() {
        let e = bott();
        let b = e.backend().clone();
        let gens: Vec<AlgebraElement> = (0..3)
            .map(|i| random::element(&b, 2, 1.0, &mut random::rng(4, i)).unwrap())
            .collect();
        let vs = vectors(&e, 3, 4);
        let c = Connection::levi_civita(&e);
        let nabla = DerivativeEndomorphism::from_connection(&c, &Derivation::Basis(0)).unwrap();
        assert!(dend_check(&nabla, &e, &gens, &vs, 1e-10).unwrap().pass);
        let linear = DerivativeEndomorphism {
            matrix: e.p().clone(),
            action: Derivation::zero(),
            right: None,
            claimed: Derivation::zero(),
        };
        assert!(dend_check(&linear, &e, &gens, &vs, 1e-10).unwrap().pass);
        let rho = DerivativeEndomorphism::right_multiplication(&e, &gens[0]);
        assert!(dend_check(&rho, &e, &gens, &vs, 1e-10).unwrap().pass);
        let naive = DerivativeEndomorphism {
            matrix: MatrixElement::zero(&b, 2),
            action: Derivation::Basis(0),
            right: None,
            claimed: Derivation::Basis(0),
        };
        let rep = dend_check(&naive, &e, &gens, &vs, 1e-10).unwrap();
        assert!(!rep.pass && rep.membership > 1e-3);
    }

    #[test]
    fn bott_curvature_is_a_linear_corner_element() {
        let e = bott();
        let c = Connection::levi_civita(&e);
        let tests: Vec<_> = vectors(&e, 2, 6)
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                (
                    s,
                    random::element(e.backend(), 2, 1.0, &mut random::rng(6, 100 + i as u64))
                        .unwrap(),
                )
            })
            .collect();
        let r = curvature(&c, 0, 1, &tests).unwrap();
        assert!(r.linearity <= 1e-9);
        assert!(corner_residual(&r.matrix, e.p(), e.p()) <= 1e-9);
        assert!(r.matrix.norm() > 1.0);
    }
}
