//! Generative bridging structures between separated horizontal planes.
//!
//! The pipeline lofts a walkable deck from an animated cross-section, fills the
//! space beneath it with a tiled helicoid lattice clipped to a conceptual shell,
//! thickens that lattice locally from a UV raster, and turns the resulting
//! implicit solid into meshes, sliced layers and support estimates.
//!
//! Every solid is a [`field::ScalarField`] (negative inside). Meshes and layer
//! stacks are derived from fields only at the fabrication boundary.
//!
//! ```
//! use rheotome::field::{primitive_box, intersect};
//! use rheotome::geometry::Vec3;
//!
//! let a = primitive_box(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
//! let b = primitive_box(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
//! let both = intersect(&a, &b);
//! assert!(both.eval(&Vec3::new(0.5, 0.0, 0.0)) < 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod allometry;
pub mod error;
pub mod fabrication;
pub mod field;
pub mod geometry;
pub mod lattice;
pub mod mesh_distance;
pub mod pipeline;
pub mod scene;
pub mod span;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use geometry::{Point3, Vec3};
