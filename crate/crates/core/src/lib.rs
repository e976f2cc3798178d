//! Passive port-Hamiltonian reduced-order models from frequency-domain
//! tangential data.
//!
//! The crate covers the full chain: realization containers and passivity
//! tests ([`lti`]), tangential data handling ([`tangential`]), Loewner pencils
//! and order detection ([`loewner`]), closest-stable projection
//! ([`stable`]), the spectral-zero based passive construction with data
//! shift ([`passive`]), a structure-preserving finite-element wave model
//! used as data source ([`wave`]), file formats ([`io`]) and the end-to-end
//! experiment driver ([`pipeline`]).

pub mod error;
pub mod linalg;
pub mod lti;
pub mod loewner;
pub mod io;
pub mod passive;
pub mod pipeline;
pub mod stable;
pub mod tangential;
pub mod wave;

pub use error::{Error, Result};
