//! Mesh a field with marching cubes and export ASCII STL.
//!
//! `cargo run --example mesh_export [out.stl]`

use rheotome::fabrication::{export_mesh, marching_cubes, MeshFormat};
use rheotome::field::{difference, primitive_box, sample_grid, Aabb, ScalarField};
use rheotome::geometry::Vec3;

fn main() -> rheotome::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "mesh_export.stl".into());
    let body = difference(
        &primitive_box(Vec3::zeros(), Vec3::repeat(0.8))?,
        &ScalarField::sphere(Vec3::zeros(), 1.0)?,
    );
    let grid = sample_grid(&body, &Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0)), 1.0 / 48.0)?;
    let mesh = marching_cubes(&grid, 0.0);
    println!(
        "{} triangles, area {:.4}, volume {:.4} (voxels {:.4}), watertight {}",
        mesh.triangles.len(),
        mesh.area(),
        mesh.volume(),
        grid.voxel_volume(),
        mesh.is_watertight()
    );
    export_mesh(&mesh, out.as_ref(), MeshFormat::StlAscii)?;
    println!("wrote {out}");
    Ok(())
}
