//! Clip a lattice to the space under a lofted deck and voxelize the result.
//!
//! `cargo run --example preform`

use rheotome::field::sample_grid;
use rheotome::geometry::{Curve, Frame, Section, SectionTrack, TrackKey, Vec3};
use rheotome::lattice::{tile_lattice, Handedness, HelicoidSpec, LatticeSpec, MirrorRule, TileSpec};
use rheotome::span::{freeze_sections, loft_deck, structural_preform, BendProfile, ShellSpec, SpanSpec};

fn main() -> rheotome::Result<()> {
    let frame = Frame::new(Vec3::new(0.0, 1.0, 0.0), Vec3::z(), Vec3::y())?;
    let base = Section::new(vec![Curve::segment(Vec3::new(-1.0, 1.0, 0.0), Vec3::new(1.0, 1.0, 0.0))], frame)?;
    let keys = vec![TrackKey::identity_at(0.0), TrackKey { translate_y: 1.0, ..TrackKey::identity_at(1.0) }];
    let spec = SpanSpec {
        track: SectionTrack::new(base, keys)?,
        direction: Vec3::z(),
        span_length: 4.0,
        steps: 17,
        bend: BendProfile::zero(),
    };
    let deck = loft_deck(&freeze_sections(&spec)?, 9)?;
    let lattice = tile_lattice(&LatticeSpec {
        tile: TileSpec {
            cell: 1.0,
            y_min: 0.0,
            y_max: 2.5,
            helicoid: HelicoidSpec {
                pitch: 2.0,
                phase: 0.0,
                handedness: Handedness::Left,
                r_max: 0.75,
                axis: (0.0, 0.0),
                two_sided: true,
            },
            thickness: 0.1,
        },
        repeats: (2, 4),
        mirror: MirrorRule::CheckerboardMirrorX,
        origin: (-1.0, 0.0),
    })?;
    let body = structural_preform(&deck, 0.1, &ShellSpec::Auto { ground_y: 0.0 }, 0.0, &lattice)?;
    let bb = deck.bbox().including(&Vec3::new(-1.0, 0.0, 0.0)).expanded(0.1);
    let grid = sample_grid(&body, &bb, 1.0 / 32.0)?;
    println!("preform volume {:.4} in {:?} cells", grid.voxel_volume(), grid.dims);
    Ok(())
}
