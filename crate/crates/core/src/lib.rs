//! Finite-volume Gibbs specifications, relative entropy densities and
//! quenched joint measures for lattice spin systems.
pub mod error;
pub mod lattice;
pub mod disorder;
pub mod experiments;
pub mod entropy;
pub mod measure;
pub mod potential;
pub mod specification;
pub use error::{Error, Result};
