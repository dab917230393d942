//! Thicken a lattice where an inverse-distance raster says material is needed.
//!
//! `cargo run --example accumulation`

use rheotome::allometry::{accumulate, inverse_distance_raster, UvProjection};
use rheotome::field::{sample_grid, Aabb, ScalarField};
use rheotome::geometry::{Curve, Frame, Section, SectionTrack, Vec3};
use rheotome::lattice::{tile_lattice, Handedness, HelicoidSpec, LatticeSpec, MirrorRule, TileSpec};
use rheotome::span::{freeze_sections, loft_deck, BendProfile, SpanSpec};

fn main() -> rheotome::Result<()> {
    let frame = Frame::new(Vec3::new(0.0, 2.0, 0.0), Vec3::z(), Vec3::y())?;
    let base = Section::new(vec![Curve::segment(Vec3::new(0.0, 2.0, 0.0), Vec3::new(4.0, 2.0, 0.0))], frame)?;
    let spec = SpanSpec {
        track: SectionTrack::still(base),
        direction: Vec3::z(),
        span_length: 4.0,
        steps: 9,
        bend: BendProfile::zero(),
    };
    let deck = loft_deck(&freeze_sections(&spec)?, 9)?;
    let proj = UvProjection::from_deck(&deck, &spec.direction)?;

    // One support under the deck start: the raster falls off with distance to it.
    let contact = ScalarField::new(|p| p.z);
    let raster = inverse_distance_raster(&[contact], &deck, (32, 32), 1.0, 4.0)?;

    let lattice = tile_lattice(&LatticeSpec {
        tile: TileSpec {
            cell: 1.0,
            y_min: 0.0,
            y_max: 2.0,
            helicoid: HelicoidSpec {
                pitch: 2.0,
                phase: 0.0,
                handedness: Handedness::Right,
                r_max: 0.75,
                axis: (0.0, 0.0),
                two_sided: true,
            },
            thickness: 0.06,
        },
        repeats: (4, 4),
        mirror: MirrorRule::CheckerboardMirrorX,
        origin: (0.0, 0.0),
    })?;
    let bb = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(4.0, 2.0, 4.0));
    let before = sample_grid(&lattice, &bb, 1.0 / 24.0)?.voxel_volume();
    for alpha in [0.5, 1.0, 2.0] {
        let grown = accumulate(&lattice, &raster, &proj, alpha, 0.06)?;
        let after = sample_grid(&grown, &bb, 1.0 / 24.0)?.voxel_volume();
        println!("alpha {alpha}: volume {before:.4} -> {after:.4}");
    }
    Ok(())
}
