//! Run every stage of a scene file and print the report summary.
//!
//! `cargo run --release --example scene_pipeline [scene.json]`

use std::path::PathBuf;

use rheotome::pipeline::{run_pipeline, ALL_STAGES};
use rheotome::scene::load_scene;

fn main() -> rheotome::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes/deney1.json"));
    let scene = load_scene(&path)?;
    let out = run_pipeline(&scene, &ALL_STAGES)?;
    for p in &out.manifest.products {
        println!("{:>10} bytes  {}", p.bytes, p.path);
    }
    if let Some(r) = &out.report {
        println!("max slope {:.1}%", r.slope.max_slope_pct);
        println!("layers {} min cross-section {:?}", r.layers.layer_count, r.layers.min_cross_section_area);
        println!("support fraction {:.4}", r.support.support_fraction);
    }
    println!("output in {}", scene.output.dir.display());
    Ok(())
}
