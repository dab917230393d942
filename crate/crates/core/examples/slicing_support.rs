//! Slice a lattice upright and on its side, compare support, write SVG layers.
//!
//! `cargo run --example slicing_support [out_dir]`

use std::f64::consts::FRAC_PI_2;

use rheotome::fabrication::{estimate_support, export_layers, slice_field, LayerFormat};
use rheotome::field::{transform_field, Aabb};
use rheotome::geometry::{Affine3, Vec3};
use rheotome::lattice::{tile_lattice, Handedness, HelicoidSpec, LatticeSpec, MirrorRule, TileSpec};

fn main() -> rheotome::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "slicing_support".into());
    let upright = tile_lattice(&LatticeSpec {
        tile: TileSpec {
            cell: 1.0,
            y_min: 0.0,
            y_max: 2.0,
            // Pitch above 2π times the corner radius keeps every layer within 45°.
            helicoid: HelicoidSpec {
                pitch: 6.0,
                phase: 0.0,
                handedness: Handedness::Right,
                r_max: 0.75,
                axis: (0.0, 0.0),
                two_sided: true,
            },
            thickness: 0.1,
        },
        repeats: (2, 2),
        mirror: MirrorRule::CheckerboardMirrorX,
        origin: (0.0, 0.0),
    })?;
    let c = Vec3::repeat(1.0);
    let tilt = Affine3::translate(c).compose(&Affine3::rotate_x(FRAC_PI_2)).compose(&Affine3::translate(-c));
    let sideways = transform_field(&upright, &tilt)?;
    let bb = Aabb::new(Vec3::zeros(), Vec3::repeat(2.0));

    for (name, f) in [("upright", &upright), ("sideways", &sideways)] {
        let stack = slice_field(f, &bb, 1.0 / 32.0, 1.0 / 64.0)?;
        let est = estimate_support(&stack, 45.0)?;
        println!(
            "{name}: {} layers, model {:.4}, support {:.4}, fraction {:.4}",
            est.stack.layers.len(),
            est.model_volume,
            est.support_volume,
            est.support_fraction
        );
        let dir = std::path::Path::new(&out).join(name);
        let files = export_layers(&est.stack, &dir, LayerFormat::Svg)?;
        println!("  wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}
