//! Multi-electrode transcranial direct current stimulation protocol
//! optimization on synthetic volume-conductor phantoms.
//!
//! Pipeline: build a layered phantom mesh ([`geometry`]), solve the forward
//! current-flow problem ([`fem`]), condense the electrode-to-brain response
//! into a transfer matrix ([`transfer`]), optimize electrode currents under a
//! current-density state constraint with ADMM and rescale to the safety
//! budget ([`admm`]), then evaluate focality and directionality metrics of
//! the resulting protocol ([`protocols`]). The `tesopt` binary drives the
//! whole pipeline from a TOML scenario config ([`scenario`]).

pub mod admm;
pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod protocols;
pub mod scenario;
pub mod transfer;
pub mod vtk;

pub use error::{Error, Result};
