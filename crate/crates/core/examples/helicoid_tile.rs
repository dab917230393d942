//! Build one rheotomic tile and write its surface as OBJ.
//!
//! `cargo run --example helicoid_tile [out.obj]`

use rheotome::fabrication::{export_mesh, marching_cubes, MeshFormat};
use rheotome::field::{sample_grid, Aabb};
use rheotome::geometry::Vec3;
use rheotome::lattice::{rheotomic_tile, Handedness, HelicoidSpec, TileSpec};

fn main() -> rheotome::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "helicoid_tile.obj".into());
    let spec = TileSpec {
        cell: 1.0,
        y_min: 0.0,
        y_max: 2.0,
        helicoid: HelicoidSpec {
            pitch: 1.0,
            phase: 0.0,
            handedness: Handedness::Right,
            r_max: 0.75,
            axis: (0.0, 0.0),
            two_sided: true,
        },
        thickness: 0.08,
    };
    let tile = rheotomic_tile(&spec)?;
    let bb = Aabb::new(Vec3::new(-0.55, -0.05, -0.55), Vec3::new(0.55, 2.05, 0.55));
    let grid = sample_grid(&tile, &bb, 1.0 / 64.0)?;
    let mesh = marching_cubes(&grid, 0.0);
    println!(
        "{} vertices, {} triangles, volume {:.4}, watertight {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.volume(),
        mesh.is_watertight()
    );
    export_mesh(&mesh, out.as_ref(), MeshFormat::Obj)?;
    println!("wrote {out}");
    Ok(())
}
