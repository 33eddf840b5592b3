//! Finitely generated projective modules over concrete continuous inverse
//! algebras: idempotents and their similarity geometry, connections and
//! covariant derivatives, and the group and Lie algebra extension data of
//! semilinear lifts.

pub mod automorphism;
pub mod backend;
pub mod connection;
pub mod derivation;
pub mod element;
pub mod error;
pub mod extension;
mod fourier;
pub mod generate;
pub mod idempotent;
pub mod io;
pub mod matrix;
pub mod projective;
pub mod random;
pub mod scenario;

pub use automorphism::{Automorphism, GroupElement};
pub use backend::{Backend, BackendConfig, BackendKind};
pub use connection::{Connection, DerivativeEndomorphism, OneForm};
pub use derivation::{Derivation, NormalDerivation};
pub use element::AlgebraElement;
pub use error::{Error, Result};
pub use extension::{ExtensionElement, FactorSystem, Lift};
pub use idempotent::{Idempotent, SimilarityWitness};
pub use matrix::MatrixElement;
pub use num_complex::Complex64;
pub use projective::{ModuleHom, ModuleVector, ProjectiveModule, TwistedModule};
