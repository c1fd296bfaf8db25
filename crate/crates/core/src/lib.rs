//! Broken geodesics and generalized broken bicharacteristics on the sphere at
//! infinity of a Euclidean subspace arrangement, together with the
//! positive-commutator symbol families used to propagate regularity along them.
//!
//! The crate is organised bottom-up:
//!
//! * [`arrangement`]: the intersection-closed subspace lattice and its cluster order.
//! * [`phasespace`]: scattering covectors, the compressed phase space, the
//!   `Sigma` classification and geodesic normal charts at a face.
//! * [`flow`]: the rescaled Hamilton field, its closed-form integral curves and
//!   the arc-length reparametrization.
//! * [`broken`]: broken geodesics, the time-`pi` relation, limit closure and
//!   one-sided Holder diagnostics.
//! * [`symbols`]: commutator symbols and their positivity certificates.

pub mod arrangement;
pub mod broken;
pub mod ad;
mod error;
pub mod flow;
pub mod io;
mod linalg;
pub mod phasespace;
pub mod symbols;

pub use error::{Error, Result};
