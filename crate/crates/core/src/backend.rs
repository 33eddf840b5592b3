//! Backend configuration shared by every element of one algebra.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which concrete algebra realizes `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Band-limited functions on the `d`-torus (commutative convolution).
    Torus,
    /// The noncommutative 2-torus with twisted convolution.
    Nctorus,
    /// Dense `d x d` complex matrices.
    Matrix,
}

fn default_tol() -> f64 {
    1e-9
}

/// Parameters of a backend.
///
/// For the Fourier kinds `dim` is the torus dimension, `degree` the band
/// `N` that random elements and sampling grids are sized from and
/// `max_degree` the hard cap `M` on any stored element. For the matrix kind
/// `dim` is the matrix size and the degree fields are unused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub dim: usize,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub degree: usize,
    #[serde(default)]
    pub max_degree: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// Shared handle to a validated configuration.
pub type Backend = Arc<BackendConfig>;

impl BackendConfig {
    pub fn torus(dim: usize, degree: usize, max_degree: usize) -> Result<Backend> {
        BackendConfig {
            kind: BackendKind::Torus,
            dim,
            theta: 0.0,
            degree,
            max_degree,
            tol: default_tol(),
        }
        .validated()
    }

    pub fn nctorus(theta: f64, degree: usize, max_degree: usize) -> Result<Backend> {
        BackendConfig {
            kind: BackendKind::Nctorus,
            dim: 2,
            theta,
            degree,
            max_degree,
            tol: default_tol(),
        }
        .validated()
    }

    pub fn matrix(size: usize) -> Result<Backend> {
        BackendConfig {
            kind: BackendKind::Matrix,
            dim: size,
            theta: 0.0,
            degree: 0,
            max_degree: 0,
            tol: default_tol(),
        }
        .validated()
    }

    /// Default desk-scale torus: `d = 2`, `N = 8`, `M = 64`.
    pub fn default_torus() -> Backend {
        Self::torus(2, 8, 64).expect("default torus config is valid")
    }

    /// Default noncommutative torus: golden-mean angle, `N = 6`, `M = 36`.
    pub fn default_nctorus() -> Backend {
        Self::nctorus(0.6180339887, 6, 36).expect("default nctorus config is valid")
    }

    /// Matrix oracle `A = M_3(C)`.
    pub fn default_matrix() -> Backend {
        Self::matrix(3).expect("default matrix config is valid")
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Checks the invariants and wraps the config in a shared handle.
    pub fn validated(self) -> Result<Backend> {
        if self.dim == 0 {
            return Err(Error::BadDimension(
                "backend dimension must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Format("tolerance must be positive".into()));
        }
        match self.kind {
            BackendKind::Torus | BackendKind::Nctorus => {
                if self.degree == 0 {
                    return Err(Error::BadDimension("band degree must be positive".into()));
                }
                if self.max_degree < 2 * self.degree {
                    return Err(Error::BadDimension(format!(
                        "max_degree {} must be at least twice the band {}",
                        self.max_degree, self.degree
                    )));
                }
                if self.kind == BackendKind::Nctorus && self.dim != 2 {
                    return Err(Error::BadDimension(
                        "the noncommutative torus is two-dimensional".into(),
                    ));
                }
            }
            BackendKind::Matrix => {}
        }
        let mut cfg = self;
        if cfg.kind != BackendKind::Nctorus {
            cfg.theta = 0.0;
        }
        Ok(Arc::new(cfg))
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self.kind, BackendKind::Torus | BackendKind::Nctorus)
    }

    pub fn is_commutative(&self) -> bool {
        self.kind == BackendKind::Torus || (self.kind == BackendKind::Matrix && self.dim == 1)
    }

    /// Number of independent flow directions used by the standard group
    /// action: the torus dimension, or two fixed generators for matrices.
    pub fn flow_dim(&self) -> usize {
        match self.kind {
            BackendKind::Torus | BackendKind::Nctorus => self.dim,
            BackendKind::Matrix => 2,
        }
    }
}

pub(crate) fn same_backend(a: &Backend, b: &Backend) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
