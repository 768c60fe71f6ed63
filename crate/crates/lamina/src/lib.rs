//! Combinatorics of invariant laminations of the unit circle under the
//! angle-multiplication maps `sigma_d : a -> d*a (mod 1)`.
//!
//! Everything is exact: angles are arbitrary-precision rationals and all
//! geometry (crossing, hulls, faces of the chord arrangement) is decided
//! by circular order alone. The crate builds depth-truncated invariant
//! laminations from generating families, validates the invariance axioms,
//! enumerates and classifies the gaps of the arrangement, computes the
//! finest lamination respecting a prelamination via super-gap merging,
//! and evaluates well-slicing families and the non-degeneracy criterion
//! on lamination data.

pub mod chords;
pub mod circle;
pub mod criterion;
pub mod error;
pub mod finest;
pub mod format;
pub mod gaps;
pub mod lamination;
pub mod render;

pub use chords::{crosses, hull_edges, image_class, is_covering_on_class, unlinked, AngleClass, Leaf};
pub use circle::{epsilon_d, orbit, preimages, rho, sigma, Angle, OrbitInfo};
pub use error::{Error, Result};
pub use lamination::{generate, GenerateOptions, Generated, Lamination, Mode, PairingPreference, Provenance};
