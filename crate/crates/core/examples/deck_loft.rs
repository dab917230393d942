//! Sweep a section along a span, bend its edges and report deck slopes.
//!
//! `cargo run --example deck_loft`

use rheotome::fabrication::slope_report;
use rheotome::geometry::{Curve, Frame, Section, SectionTrack, TrackKey, Vec3};
use rheotome::span::{bend_edges, freeze_sections, loft_deck, BendProfile, SpanSpec};

fn main() -> rheotome::Result<()> {
    // Section plane is horizontal: forward is the span direction.
    let frame = Frame::new(Vec3::new(0.0, 0.5, 0.0), Vec3::z(), Vec3::y())?;
    let base = Section::new(vec![Curve::segment(Vec3::new(-1.0, 0.5, 0.0), Vec3::new(1.0, 0.5, 0.0))], frame)?;
    let keys = vec![
        TrackKey::identity_at(0.0),
        TrackKey { translate_y: 1.5, rotate_y: 0.4, ..TrackKey::identity_at(0.6) },
        TrackKey { translate_y: 2.0, scale_z: 0.7, ..TrackKey::identity_at(1.0) },
    ];
    let spec = SpanSpec {
        track: SectionTrack::new(base, keys)?,
        direction: Vec3::z(),
        span_length: 8.0,
        steps: 33,
        bend: BendProfile::linear(10f64.to_radians()),
    };
    let sections = freeze_sections(&spec)?;
    let deck = bend_edges(&loft_deck(&sections, 9)?, &spec.bend)?;
    let bb = deck.bbox();
    println!("deck {}x{} points, area {:.3}", deck.rows(), deck.cols(), deck.area());
    println!("bbox {:?} .. {:?}", bb.min.as_slice(), bb.max.as_slice());

    let report = slope_report(&deck, 30.0)?;
    println!("max slope {:.1}%, max cross slope {:.1}%", report.max_slope_pct, report.max_cross_slope_pct);
    for r in &report.regions {
        println!("steeper than 30%: rows {}..{} columns {}..{}", r.i0, r.i1, r.j0, r.j1);
    }
    Ok(())
}
