//! Fabrication outputs: meshes, deck slope analysis, vertical slicing, support
//! estimation and file export.

pub mod export;
pub mod mesh;
pub mod slice;
pub mod slope;
pub mod support;
mod tables;

pub use export::{export_layers, export_mesh, LayerFormat, MeshFormat};
pub use mesh::{marching_cubes, Mesh};
pub use slice::{slice_field, Layer, LayerStack, Polygon, SliceGrid};
pub use slope::{slope_report, SlopeRegion, SlopeReport};
pub use support::{estimate_support, SupportEstimate};
