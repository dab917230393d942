//! Interpolate scattered samples into a raster and print it in `.rast` form.
//!
//! `cargo run --example idw_raster > field.rast`

use rheotome::allometry::{idw_interpolate, rasterize_scatter};

fn main() -> rheotome::Result<()> {
    let samples = [((0.1, 0.2), 0.0), ((0.8, 0.3), 1.0), ((0.5, 0.9), 0.4), ((0.3, 0.6), 0.8)];
    eprintln!("value at centre: {:.4}", idw_interpolate(&samples, 2.0, (0.5, 0.5)));
    let raster = rasterize_scatter(&samples, (16, 8), 2.0)?;
    print!("{}", raster.to_rast_text());
    Ok(())
}
