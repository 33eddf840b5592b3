//! JSON files for elements, matrices, idempotents, modules, vectors and
//! connections.
//!
//! Every element carries its backend so it can be read on its own; matrix,
//! module and connection files nest the element format.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendConfig};
use crate::connection::{Connection, OneForm};
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::idempotent::Idempotent;
use crate::matrix::MatrixElement;
use crate::projective::{ModuleVector, ProjectiveModule};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(c: Complex64) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffJson {
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<CoeffJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<ComplexJson>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<Vec<ElementJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleJson {
    pub n: usize,
    pub p: MatrixJson,
    pub backend: BackendConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorJson {
    pub v: Vec<ElementJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectionJson {
    pub module: ModuleJson,
    /// Keyed `D1, D2, ...` after the flow basis.
    pub alpha: BTreeMap<String, MatrixJson>,
}

pub fn element_to_json(a: &AlgebraElement) -> ElementJson {
    let backend = Some((**a.backend()).clone());
    match a.dense() {
        Some(m) => ElementJson {
            backend,
            coeffs: None,
            entries: Some(
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
                    .collect(),
            ),
        },
        None => ElementJson {
            backend,
            coeffs: Some(
                a.coeffs()
                    .into_iter()
                    .map(|(k, c)| CoeffJson {
                        k,
                        re: c.re,
                        im: c.im,
                    })
                    .collect(),
            ),
            entries: None,
        },
    }
}

fn resolve(own: &Option<BackendConfig>, ctx: Option<&Backend>) -> Result<Backend> {
    match (own, ctx) {
        (Some(cfg), Some(b)) if cfg == &**b => Ok(b.clone()),
        (Some(cfg), Some(_)) => Err(Error::BackendMismatch(format!(
            "file declares {:?}",
            cfg.kind
        ))),
        (Some(cfg), None) => cfg.clone().validated(),
        (None, Some(b)) => Ok(b.clone()),
        (None, None) => Err(Error::Format("element without a backend".into())),
    }
}

/// Reads an element; `ctx` supplies or must match its backend.
pub fn element_from_json(j: &ElementJson, ctx: Option<&Backend>) -> Result<AlgebraElement> {
    let b = resolve(&j.backend, ctx)?;
    match (&j.coeffs, &j.entries, b.is_fourier()) {
        (Some(cs), None, true) => AlgebraElement::from_coeffs(
            &b,
            cs.iter().map(|c| (c.k.clone(), Complex64::new(c.re, c.im))),
        ),
        (None, Some(rows), false) => {
            let d = b.dim;
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::BadDimension(format!(
                    "expected a {d}x{d} entry table"
                )));
            }
            AlgebraElement::from_dense(&b, DMatrix::from_fn(d, d, |i, k| rows[i][k].into()))
        }
        _ => Err(Error::Format(
            "element needs \"coeffs\" for torus kinds or \"entries\" for the matrix kind".into(),
        )),
    }
}

pub fn matrix_to_json(x: &MatrixElement) -> MatrixJson {
    let n = x.n();
    MatrixJson {
        n,
        entries: (0..n)
            .map(|i| (0..n).map(|j| element_to_json(x.entry(i, j))).collect())
            .collect(),
        residual: None,
    }
}

pub fn matrix_from_json(j: &MatrixJson, ctx: Option<&Backend>) -> Result<MatrixElement> {
    if j.n == 0 || j.entries.len() != j.n || j.entries.iter().any(|r| r.len() != j.n) {
        return Err(Error::BadDimension(format!(
            "expected {0}x{0} entries",
            j.n
        )));
    }
    let first = element_from_json(&j.entries[0][0], ctx)?;
    let b = first.backend().clone();
    let mut entries = Vec::with_capacity(j.n * j.n);
    for row in &j.entries {
        for e in row {
            entries.push(element_from_json(e, Some(&b))?);
        }
    }
    MatrixElement::from_entries(&b, j.n, entries)
}

pub fn idempotent_to_json(p: &Idempotent) -> MatrixJson {
    MatrixJson {
        residual: Some(p.residual()),
        ..matrix_to_json(p.matrix())
    }
}

/// Reads an idempotent file; a stored residual is ignored and recomputed.
pub fn idempotent_from_json(j: &MatrixJson, ctx: Option<&Backend>) -> Result<Idempotent> {
    Idempotent::new(matrix_from_json(j, ctx)?)
}

pub fn module_to_json(e: &ProjectiveModule) -> ModuleJson {
    ModuleJson {
        n: e.n(),
        p: idempotent_to_json(e.idempotent()),
        backend: (**e.backend()).clone(),
    }
}

pub fn module_from_json(j: &ModuleJson) -> Result<ProjectiveModule> {
    let b = j.backend.clone().validated()?;
    let p = idempotent_from_json(&j.p, Some(&b))?;
    if p.n() != j.n {
        return Err(Error::BadDimension(format!(
            "module declares n = {} but p is {}x{}",
            j.n,
            p.n(),
            p.n()
        )));
    }
    Ok(ProjectiveModule::new(p))
}

pub fn vector_to_json(s: &[AlgebraElement]) -> VectorJson {
    VectorJson {
        v: s.iter().map(element_to_json).collect(),
    }
}

pub fn vector_from_json(j: &VectorJson, ctx: Option<&Backend>) -> Result<Vec<AlgebraElement>> {
    j.v.iter().map(|e| element_from_json(e, ctx)).collect()
}

/// Reads a vector and checks it lies in `e`.
pub fn module_vector_from_json(j: &VectorJson, e: &ProjectiveModule) -> Result<ModuleVector> {
    let v = vector_from_json(j, Some(e.backend()))?;
    if v.len() != e.n() {
        return Err(Error::BadDimension(format!(
            "vector of length {} for n = {}",
            v.len(),
            e.n()
        )));
    }
    e.vector(v)
}

pub fn connection_to_json(c: &Connection) -> ConnectionJson {
    ConnectionJson {
        module: module_to_json(&c.module),
        alpha: c
            .alpha
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (format!("D{}", j + 1), matrix_to_json(v)))
            .collect(),
    }
}

/// Reads a connection; missing basis keys default to zero.
pub fn connection_from_json(j: &ConnectionJson) -> Result<Connection> {
    let e = module_from_json(&j.module)?;
    let m = e.backend().flow_dim();
    let mut values = vec![MatrixElement::zero(e.backend(), e.n()); m];
    for (key, value) in &j.alpha {
        let idx: usize = key
            .strip_prefix('D')
            .and_then(|s| s.parse().ok())
            .filter(|i| (1..=m).contains(i))
            .ok_or(Error::UnknownDerivation)?;
        values[idx - 1] = matrix_from_json(value, Some(e.backend()))?;
    }
    Connection::new(&e, OneForm { values })
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_bott;
    use crate::random;

    #[test]
    fn fourier_element_roundtrip() {
        let b = BackendConfig::default_nctorus();
        let a = random::element(&b, 3, 1.0, &mut random::rng(0, 0)).unwrap();
        let text = to_string(&element_to_json(&a)).unwrap();
        assert!(text.contains("\"coeffs\"") && text.contains("\"nctorus\""));
        let back = element_from_json(&from_str(&text).unwrap(), None).unwrap();
        assert_eq!(a.dist(&back), 0.0);
    }

    #[test]
    fn dense_element_roundtrip() {
        let b = BackendConfig::default_matrix();
        let a = random::element(&b, 0, 1.0, &mut random::rng(0, 1)).unwrap();
        let text = to_string(&element_to_json(&a)).unwrap();
        assert!(text.contains("\"entries\""));
        let back = element_from_json(&from_str(&text).unwrap(), None).unwrap();
        assert_eq!(a.dist(&back), 0.0);
    }

    #[test]
    fn wrong_layout_is_a_format_error() {
        let text = r#"{"backend":{"kind":"matrix","dim":2},"coeffs":[]}"#;
        let err = element_from_json(&from_str(text).unwrap(), None).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn mismatched_context_is_rejected() {
        let a = AlgebraElement::one(&BackendConfig::default_torus());
        let j = element_to_json(&a);
        let err = element_from_json(&j, Some(&BackendConfig::default_matrix())).unwrap_err();
        assert!(matches!(err, Error::BackendMismatch(_)));
    }

    #[test]
    fn module_and_connection_roundtrip() {
        let b = BackendConfig::default_torus();
        let e = ProjectiveModule::new(gen_bott(&b, 1, 8).unwrap());
        let text = to_string(&module_to_json(&e)).unwrap();
        let back = module_from_json(&from_str(&text).unwrap()).unwrap();
        assert_eq!(back.p().dist(e.p()), 0.0);
        let c = Connection::levi_civita(&e);
        let cj = connection_to_json(&c);
        assert!(cj.alpha.contains_key("D1") && cj.alpha.contains_key("D2"));
        let c2 = connection_from_json(&from_str(&to_string(&cj).unwrap()).unwrap()).unwrap();
        assert_eq!(crate::connection::connection_distance(&c, &c2), 0.0);
    }

    #[test]
    fn vector_must_lie_in_module() {
        let b = BackendConfig::default_torus();
        let e = ProjectiveModule::new(gen_bott(&b, 0, 8).unwrap());
        let one = AlgebraElement::one(&b);
        let bad = vector_to_json(&[one.clone(), one.clone()]);
        assert!(module_vector_from_json(&bad, &e).is_err());
        let good = vector_to_json(&[one, AlgebraElement::zero(&b)]);
        assert!(module_vector_from_json(&good, &e).is_ok());
    }
}
