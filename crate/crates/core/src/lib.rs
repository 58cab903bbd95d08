//! UV-decompositions, localized U-Lagrangians and fast tracks for a catalog of
//! structured prox-regular functions, with sampling-based certificates.
//!
//! The crate is organized bottom-up:
//!
//! * [`funcmodel`] - structured functions and their subdifferential oracles
//! * [`polytope`] - spans, epsilon-relative interiors, normal cones
//! * [`uvframe`] - the U/V splitting at the base point
//! * [`ulag`] - the localized U-Lagrangian and its minimizer set
//! * [`certify`] - prox-regularity, monotonicity and assumption certificates
//! * [`fasttrack`] - minimizer selections, manifold charts, smoothness batteries
//! * [`suite`] - the batch runner behind the `uvlag` binary

pub mod certify;
pub mod error;
pub mod fasttrack;
pub mod funcmodel;
pub mod oracle;
pub mod polytope;
pub mod sampling;
pub mod suite;
pub mod ulag;
pub mod uvframe;

pub use error::{Error, Result};
pub use funcmodel::{catalog, Problem};
pub use polytope::{Polytope, Subspace};
pub use ulag::{inner_minimize, ULagEval};
pub use uvframe::{build_frame, UVFrame};
