//! Idempotents of `M_n(A)`: retraction, similarity witnesses, orbit path
//! lifting, corner inversion and the stabilization conjugator that turns an
//! isomorphism of modules into a conjugation of padded idempotents.

use rayon::prelude::*;

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::matrix::MatrixElement;

/// Residual at which retraction counts as converged.
pub const RETRACT_TARGET: f64 = 1e-12;
/// Iteration cap of the cubic retraction.
pub const RETRACT_CAP: usize = 50;
/// Condition estimate above which a witness counts as singular.
pub const WITNESS_CONDITION_CAP: f64 = 1e8;
/// Loose tolerance on an isomorphism pair before normalization.
pub const ISO_PAIR_ENTRY_TOL: f64 = 1e-6;
/// Tolerance on `alpha^2 = beta^2 = 1` in the stabilization.
pub const INVOLUTION_TOL: f64 = 1e-12;

/// `|p^2 - p|`, computed without the degree cap.
pub fn idempotent_residual(p: &MatrixElement) -> f64 {
    (&p.mul_uncapped(p) - p).norm()
}

/// Whether `p` is idempotent to the backend tolerance, with the residual.
pub fn is_idempotent(p: &MatrixElement) -> (bool, f64) {
    let r = idempotent_residual(p);
    (r <= p.backend().tol, r)
}

/// `max(|qx - x|, |xp - x|)`: how far `x` is from `q M_n(A) p`.
pub fn corner_residual(x: &MatrixElement, p: &MatrixElement, q: &MatrixElement) -> f64 {
    let a = (&q.mul_uncapped(x) - x).norm();
    let b = (&x.mul_uncapped(p) - x).norm();
    a.max(b)
}

/// A verified idempotent.
#[derive(Clone, Debug)]
pub struct Idempotent {
    p: MatrixElement,
    residual: f64,
}

impl Idempotent {
    /// Accepts `p` if `|p^2 - p|` is within the backend tolerance.
    pub fn new(p: MatrixElement) -> Result<Self> {
        let (ok, residual) = is_idempotent(&p);
        if !ok {
            return Err(Error::Constraint {
                what: "p^2 = p".into(),
                residual,
            });
        }
        Ok(Idempotent { p, residual })
    }

    /// Retracts a near-idempotent onto an idempotent.
    pub fn retract(p0: &MatrixElement) -> Result<Self> {
        retract_idempotent(p0)
    }

    pub fn matrix(&self) -> &MatrixElement {
        &self.p
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn backend(&self) -> &Backend {
        self.p.backend()
    }

    /// `1 - p`.
    pub fn complement(&self) -> MatrixElement {
        &MatrixElement::identity(self.backend(), self.n()) - &self.p
    }

    /// `diag(p, 0)` in `M_size(A)`.
    pub fn embed_tilde(&self, size: usize) -> Result<Idempotent> {
        Ok(Idempotent {
            p: self.p.embed_tilde(size)?,
            residual: self.residual,
        })
    }

    /// `x p x^{-1}`, retracted if rounding pushed it off the idempotents.
    pub fn conjugate(&self, x: &MatrixElement, x_inv: &MatrixElement) -> Result<Idempotent> {
        let q = x.mul3(&self.p, x_inv)?;
        match Idempotent::new(q.clone()) {
            Ok(i) if i.residual <= RETRACT_TARGET => Ok(i),
            _ => retract_idempotent(&q),
        }
    }
}

/// Iterates `p <- 3p^2 - 2p^3` until `|p^2 - p| <= 1e-12`, then keeps going
/// while the residual still halves.
pub fn retract_idempotent(p0: &MatrixElement) -> Result<Idempotent> {
    let mut p = p0.clone();
    let mut best: Option<(f64, MatrixElement)> = None;
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let p2 = p.mul(&p)?;
        let r = (&p2 - &p).norm();
        if iterations == 0 && !(r < 0.25) {
            return Err(Error::NoConvergence {
                iterations,
                residual: r,
            });
        }
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, p.clone()));
        }
        let polished = r <= RETRACT_TARGET && r > 0.5 * prev;
        let stalled = r > RETRACT_TARGET && iterations > 3 && r > 0.9 * prev;
        if polished || stalled || !r.is_finite() || iterations >= RETRACT_CAP {
            break;
        }
        prev = r;
        let p3 = p2.mul(&p)?;
        p = &p2.scale_real(3.0) - &p3.scale_real(2.0);
        iterations += 1;
    }
    let (residual, p) = best.expect("at least one residual");
    if residual > RETRACT_TARGET {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(Idempotent { p, residual })
}

/// An invertible `s` with `s q s^{-1} = p`.
#[derive(Clone, Debug)]
pub struct SimilarityWitness {
    pub s: MatrixElement,
    pub s_inv: MatrixElement,
    /// `|s q s^{-1} - p|`.
    pub residual: f64,
}

/// `s = pq + (1 - p)(1 - q)`, which conjugates `q` to `p` whenever it is
/// invertible.
pub fn similarity_witness(p: &Idempotent, q: &Idempotent) -> Result<SimilarityWitness> {
    if p.n() != q.n() {
        return Err(Error::BadDimension("idempotents of different size".into()));
    }
    let pm = p.matrix();
    let qm = q.matrix();
    let s = &pm.mul(qm)? + &p.complement().mul(&q.complement())?;
    let s_inv = s
        .invert()
        .map_err(|_| Error::NotInNeighborhood { step: None })?;
    // s is assembled from unit-size idempotents, so a tiny |s| means the
    // witness collapsed rather than that it is well scaled
    if s.norm().max(1.0) * s_inv.norm() > WITNESS_CONDITION_CAP {
        return Err(Error::NotInNeighborhood { step: None });
    }
    let residual = s.mul3(qm, &s_inv)?.dist(pm);
    Ok(SimilarityWitness { s, s_inv, residual })
}

/// `g` and `g^{-1}` with `g path[0] g^{-1} = path[last]`.
#[derive(Clone, Debug)]
pub struct PathConjugator {
    pub g: MatrixElement,
    pub g_inv: MatrixElement,
    /// `|g path[0] g^{-1} - path[last]|`.
    pub residual: f64,
}

/// Composes the stepwise witnesses along a path: step `j` conjugates
/// `path[j-1]` to `path[j]` and `g = s_m ... s_1`.
pub fn path_conjugator(path: &[Idempotent]) -> Result<PathConjugator> {
    let first = path
        .first()
        .ok_or_else(|| Error::BadDimension("empty path".into()))?;
    let witnesses: Vec<SimilarityWitness> = path
        .par_windows(2)
        .enumerate()
        .map(|(j, w)| {
            similarity_witness(&w[1], &w[0]).map_err(|e| match e {
                Error::NotInNeighborhood { .. } => Error::NotInNeighborhood { step: Some(j + 1) },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let b = first.backend();
    let mut g = MatrixElement::identity(b, first.n());
    let mut g_inv = g.clone();
    for w in &witnesses {
        g = w.s.mul(&g)?;
        g_inv = g_inv.mul(&w.s_inv)?;
    }
    let last = path.last().expect("nonempty").matrix();
    let residual = g.mul3(first.matrix(), &g_inv)?.dist(last);
    Ok(PathConjugator { g, g_inv, residual })
}

/// Inverse of `a` in the corner algebra `p M_n(A) p`, computed as
/// `(a + 1 - p)^{-1} - (1 - p)`.
pub fn corner_invert(a: &MatrixElement, p: &Idempotent) -> Result<MatrixElement> {
    let pm = p.matrix();
    let tol = a.backend().tol;
    let off = corner_residual(a, pm, pm);
    if off > tol {
        return Err(Error::Constraint {
            what: "a = pap".into(),
            residual: off,
        });
    }
    let comp = p.complement();
    let padded = a + &comp;
    let inv = padded.invert().map_err(|_| Error::NotInvertibleInCorner)?;
    let b = &inv - &comp;
    let r1 = a.mul(&b)?.dist(pm);
    let r2 = b.mul(a)?.dist(pm);
    if r1.max(r2) > tol {
        return Err(Error::NotInvertibleInCorner);
    }
    Ok(b)
}

/// Normalizes an isomorphism pair `x: pA^n -> qA^n`, `y` its inverse, to
/// `x' = qxp`, `y' = pyq`.
pub fn normalize_iso_pair(
    x: &MatrixElement,
    y: &MatrixElement,
    p: &Idempotent,
    q: &Idempotent,
) -> Result<(MatrixElement, MatrixElement)> {
    let (pm, qm) = (p.matrix(), q.matrix());
    let entry = x.mul(y)?.dist(qm).max(y.mul(x)?.dist(pm));
    if entry > ISO_PAIR_ENTRY_TOL {
        return Err(Error::NotAnIsoPair { residual: entry });
    }
    let xn = qm.mul3(x, pm)?;
    let yn = pm.mul3(y, qm)?;
    let residual = xn.mul(&yn)?.dist(qm).max(yn.mul(&xn)?.dist(pm));
    if residual > x.backend().tol {
        return Err(Error::NotAnIsoPair { residual });
    }
    Ok((xn, yn))
}

/// The stabilization data of an isomorphism `pA^n -> qA^n`.
#[derive(Clone, Debug)]
pub struct Stabilization {
    pub alpha: MatrixElement,
    pub beta: MatrixElement,
    /// `z = beta alpha`, conjugating `diag(q, 0)` to `diag(p, 0)`.
    pub z: MatrixElement,
    /// `z^{-1} = alpha beta`.
    pub z_inv: MatrixElement,
    /// `max(|alpha^2 - 1|, |beta^2 - 1|)`.
    pub involution_residual: f64,
    /// `|z diag(q,0) z^{-1} - diag(p,0)|`.
    pub residual: f64,
}

/// Builds `alpha = [[1-q, x'], [y', 1-p]]`, `beta = [[1-p, p], [p, 1-p]]`
/// and `z = beta alpha` from a normalized isomorphism pair.
pub fn stabilize_conjugator(
    x: &MatrixElement,
    y: &MatrixElement,
    p: &Idempotent,
    q: &Idempotent,
) -> Result<Stabilization> {
    let n = p.n();
    let b = p.backend();
    let alpha = MatrixElement::from_blocks(&q.complement(), x, y, &p.complement())?;
    let beta =
        MatrixElement::from_blocks(&p.complement(), p.matrix(), p.matrix(), &p.complement())?;
    let one = MatrixElement::identity(b, 2 * n);
    let involution_residual = alpha
        .mul(&alpha)?
        .dist(&one)
        .max(beta.mul(&beta)?.dist(&one));
    if involution_residual > INVOLUTION_TOL {
        return Err(Error::NotAnIsoPair {
            residual: involution_residual,
        });
    }
    let z = beta.mul(&alpha)?;
    let z_inv = alpha.mul(&beta)?;
    let qt = q.matrix().embed_tilde(2 * n)?;
    let pt = p.matrix().embed_tilde(2 * n)?;
    let residual = z.mul3(&qt, &z_inv)?.dist(&pt);
    if residual > b.tol {
        return Err(Error::NotAnIsoPair { residual });
    }
    Ok(Stabilization {
        alpha,
        beta,
        z,
        z_inv,
        involution_residual,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;
    use crate::element::AlgebraElement;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn scalar_backend() -> Backend {
        BackendConfig::matrix(1).unwrap()
    }

    fn cmat(b: &Backend, rows: &[&[f64]]) -> MatrixElement {
        let n = rows.len();
        MatrixElement::from_fn(b, n, |i, j| {
            AlgebraElement::from_dense(
                b,
                DMatrix::from_element(1, 1, Complex64::new(rows[i][j], 0.0)),
            )
            .unwrap()
        })
    }

    fn rotation(b: &Backend, t: f64) -> MatrixElement {
        cmat(b, &[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]])
    }

    fn diag10(b: &Backend) -> Idempotent {
        Idempotent::new(cmat(b, &[&[1.0, 0.0], &[0.0, 0.0]])).unwrap()
    }

    #[test]
    fn half_is_not_idempotent() {
        let b = scalar_backend();
        let (ok, r) = is_idempotent(&cmat(&b, &[&[0.5]]));
        assert!(!ok);
        assert!((r - 0.25).abs() < 1e-15);
        assert!(matches!(
            retract_idempotent(&cmat(&b, &[&[0.5]])),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn scalar_retraction_reaches_one() {
        let b = scalar_backend();
        let p = retract_idempotent(&cmat(&b, &[&[1.1]])).unwrap();
        assert!(p.matrix().dist(&cmat(&b, &[&[1.0]])) < 1e-12);
    }

    #[test]
    fn witness_for_rotated_projection() {
        let b = scalar_backend();
        let p = diag10(&b);
        let g = rotation(&b, 0.3);
        let q = p.conjugate(&g, &rotation(&b, -0.3)).unwrap();
        let w = similarity_witness(&p, &q).unwrap();
        assert!(w.residual <= 1e-12);
        let same = similarity_witness(&p, &p).unwrap();
        assert!(same.s.dist(&MatrixElement::identity(&b, 2)) < 1e-15);
    }

    #[test]
    fn orthogonal_projections_have_no_witness() {
        let b = scalar_backend();
        let p = diag10(&b);
        let q = Idempotent::new(cmat(&b, &[&[0.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!(matches!(
            similarity_witness(&p, &q),
            Err(Error::NotInNeighborhood { step: None })
        ));
    }

    #[test]
    fn rotation_path_is_lifted() {
        let b = scalar_backend();
        let p = diag10(&b);
        let path: Vec<Idempotent> = (0..=32)
            .map(|j| {
                let t = j as f64 / 32.0;
                p.conjugate(&rotation(&b, t), &rotation(&b, -t)).unwrap()
            })
            .collect();
        let pc = path_conjugator(&path).unwrap();
        assert!(pc.residual <= 1e-9);
        let end = pc.g.mul3(p.matrix(), &pc.g_inv).unwrap();
        let exact = rotation(&b, 1.0)
            .mul3(p.matrix(), &rotation(&b, -1.0))
            .unwrap();
        assert!(end.dist(&exact) <= 1e-9);
    }

    #[test]
    fn far_jump_fails_at_second_step() {
        let b = scalar_backend();
        let p = diag10(&b);
        let near = p
            .conjugate(&rotation(&b, 0.1), &rotation(&b, -0.1))
            .unwrap();
        let t = 0.1 + std::f64::consts::FRAC_PI_2;
        let far = p.conjugate(&rotation(&b, t), &rotation(&b, -t)).unwrap();
        let err = path_conjugator(&[p, near, far]).unwrap_err();
        assert_eq!(err, Error::NotInNeighborhood { step: Some(2) });
    }

    #[test]
    fn constant_path_gives_identity() {
        let b = scalar_backend();
        let p = diag10(&b);
        let pc = path_conjugator(&[p.clone(), p.clone(), p]).unwrap();
        assert!(pc.g.dist(&MatrixElement::identity(&b, 2)) < 1e-15);
    }

    #[test]
    fn corner_inverse_by_formula() {
        let b = scalar_backend();
        let p = diag10(&b);
        let a = cmat(&b, &[&[2.0, 0.0], &[0.0, 0.0]]);
        let inv = corner_invert(&a, &p).unwrap();
        assert!(inv.dist(&cmat(&b, &[&[0.5, 0.0], &[0.0, 0.0]])) < 1e-15);
        assert!(corner_invert(p.matrix(), &p).unwrap().dist(p.matrix()) < 1e-15);
        let zero = MatrixElement::zero(&b, 2);
        assert_eq!(
            corner_invert(&zero, &p).unwrap_err(),
            Error::NotInvertibleInCorner
        );
    }

    #[test]
    fn trivial_stabilization_is_a_swap() {
        let b = scalar_backend();
        let one = Idempotent::new(cmat(&b, &[&[1.0]])).unwrap();
        let (x, y) = normalize_iso_pair(one.matrix(), one.matrix(), &one, &one).unwrap();
        let st = stabilize_conjugator(&x, &y, &one, &one).unwrap();
        let swap = cmat(&b, &[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(st.alpha.dist(&swap) == 0.0);
        assert!(st.beta.dist(&swap) == 0.0);
        assert!(st.z.dist(&MatrixElement::identity(&b, 2)) == 0.0);
    }

    #[test]
    fn stabilization_of_rotation_pair() {
        let b = scalar_backend();
        let p = diag10(&b);
        let g = cmat(&b, &[&[1.0, 0.4], &[-0.3, 2.0]]);
        let g_inv = g.invert().unwrap();
        let q = p.conjugate(&g, &g_inv).unwrap();
        let x = g.mul(p.matrix()).unwrap();
        let (xn, yn) = normalize_iso_pair(&x, &g_inv, &p, &q).unwrap();
        assert!(corner_residual(&xn, p.matrix(), q.matrix()) < 1e-12);
        let st = stabilize_conjugator(&xn, &yn, &p, &q).unwrap();
        assert!(st.involution_residual <= 1e-12);
        assert!(st.residual <= 1e-9);
    }

    #[test]
    fn perturbed_pair_is_rejected() {
        let b = scalar_backend();
        let p = diag10(&b);
        let bump = cmat(&b, &[&[0.01, 0.0], &[0.0, 0.0]]);
        let x = p.matrix() + &bump;
        let err = normalize_iso_pair(&x, p.matrix(), &p, &p).unwrap_err();
        assert!(matches!(err, Error::NotAnIsoPair { .. }));
    }
}
