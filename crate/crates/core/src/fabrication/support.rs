use rayon::prelude::*;
use serde::Serialize;

use super::slice::{trace_contours, Layer, LayerStack, Polygon, SliceGrid};
use crate::error::{Error, Result};

pub const DEFAULT_OVERHANG_DEG: f64 = 45.0;

/// Stack with support contours filled in, plus raster volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEstimate {
    pub stack: LayerStack,
    pub overhang_deg: f64,
    pub model_volume: f64,
    pub support_volume: f64,
    pub support_fraction: f64,
}

/// Cell raster of one layer: cell `(i, j)` has its centre at
/// `(x0 + (i + ½)s, z0 + (j + ½)s)` on the slicing lattice.
struct Raster {
    w: usize,
    h: usize,
    cells: Vec<bool>,
}

impl Raster {
    fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

/// Even-odd fill of all polygons of a layer, sampled at cell centres.
fn rasterize(polys: &[Polygon], g: &SliceGrid) -> Raster {
    let (w, h) = (g.nx - 1, g.nz - 1);
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); h];
    let s = g.spacing;
    for poly in polys {
        let n = poly.len();
        for k in 0..n {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            let (lo, hi) = if a[1] < b[1] { (a[1], b[1]) } else { (b[1], a[1]) };
            // rows whose centre satisfies lo <= zc < hi
            let j0 = ((lo - g.z0) / s - 0.5).ceil().max(0.0) as usize;
            let j1 = (((hi - g.z0) / s - 0.5).ceil().max(0.0) as usize).min(h);
            for (j, row) in crossings.iter_mut().enumerate().take(j1).skip(j0) {
                let zc = g.z0 + (j as f64 + 0.5) * s;
                if (a[1] <= zc) != (b[1] <= zc) {
                    row.push(a[0] + (zc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
                }
            }
        }
    }
    let mut cells = vec![false; w * h];
    for (j, row) in crossings.iter_mut().enumerate() {
        row.sort_by(f64::total_cmp);
        for pair in row.chunks_exact(2) {
            let i0 = ((pair[0] - g.x0) / s - 0.5).ceil().max(0.0) as usize;
            let i1 = (((pair[1] - g.x0) / s - 0.5).ceil().max(0.0) as usize).min(w);
            for c in &mut cells[j * w + i0.min(w)..j * w + i1.max(i0.min(w))] {
                *c = true;
            }
        }
    }
    Raster { w, h, cells }
}

fn disk_offsets(radius_cells: f64) -> Vec<(isize, isize)> {
    let r = radius_cells.floor() as isize;
    let mut out = Vec::new();
    for dj in -r..=r {
        for di in -r..=r {
            if ((di * di + dj * dj) as f64).sqrt() <= radius_cells + 1e-9 {
                out.push((di, dj));
            }
        }
    }
    out
}

fn dilate(r: &Raster, disk: &[(isize, isize)]) -> Vec<bool> {
    let mut out = vec![false; r.cells.len()];
    for j in 0..r.h {
        for i in 0..r.w {
            if !r.cells[j * r.w + i] {
                continue;
            }
            for &(di, dj) in disk {
                let (x, y) = (i as isize + di, j as isize + dj);
                if x >= 0 && y >= 0 && (x as usize) < r.w && (y as usize) < r.h {
                    out[y as usize * r.w + x as usize] = true;
                }
            }
        }
    }
    out
}

/// Support contours traced around a cell mask on the lattice of cell centres.
fn mask_contours(mask: &[bool], w: usize, h: usize, g: &SliceGrid) -> Vec<Polygon> {
    let cg = SliceGrid {
        x0: g.x0 + 0.5 * g.spacing - g.spacing,
        z0: g.z0 + 0.5 * g.spacing - g.spacing,
        spacing: g.spacing,
        nx: w + 2,
        nz: h + 2,
    };
    let mut values = vec![1.0; cg.nx * cg.nz];
    for j in 0..h {
        for i in 0..w {
            if mask[j * w + i] {
                values[(i + 1) + cg.nx * (j + 1)] = -1.0;
            }
        }
    }
    trace_contours(&values, &cg)
}

/// Flags solid cells with no solid cell of the layer below within
/// `h·tan(overhang)` and drops support columns from them down to the ground or
/// the first solid cell.
pub fn estimate_support(stack: &LayerStack, overhang_deg: f64) -> Result<SupportEstimate> {
    if !(overhang_deg > 0.0 && overhang_deg < 90.0) {
        return Err(Error::invalid(format!(
            "overhang angle must lie in (0, 90) degrees, got {overhang_deg}"
        )));
    }
    let g = &stack.grid;
    let rasters: Vec<Raster> = stack.layers.par_iter().map(|l| rasterize(&l.model, g)).collect();
    let (w, h) = (g.nx - 1, g.nz - 1);
    let radius = stack.layer_height * overhang_deg.to_radians().tan() / g.spacing;
    let disk = disk_offsets(radius);
    let reach: Vec<Vec<bool>> = rasters.par_iter().map(|r| dilate(r, &disk)).collect();

    let mut support = vec![vec![false; w * h]; rasters.len()];
    for k in 1..rasters.len() {
        for c in 0..w * h {
            if !rasters[k].cells[c] || reach[k - 1][c] {
                continue;
            }
            for kk in (0..k).rev() {
                if rasters[kk].cells[c] || support[kk][c] {
                    break;
                }
                support[kk][c] = true;
            }
        }
    }

    let cell_volume = g.cell_area() * stack.layer_height;
    let model_cells: usize = rasters.iter().map(Raster::count).sum();
    let support_cells: usize = support.iter().map(|m| m.iter().filter(|c| **c).count()).sum();
    let layers: Vec<Layer> = stack
        .layers
        .par_iter()
        .zip(support.par_iter())
        .map(|(l, mask)| Layer {
            y: l.y,
            model: l.model.clone(),
            support: mask_contours(mask, w, h, g),
        })
        .collect();
    let model_volume = model_cells as f64 * cell_volume;
    let support_volume = support_cells as f64 * cell_volume;
    Ok(SupportEstimate {
        stack: LayerStack { layers, ..stack.clone() },
        overhang_deg,
        model_volume,
        support_volume,
        support_fraction: if model_cells == 0 { 0.0 } else { support_volume / model_volume },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabrication::slice::{polygon_area, slice_field};
    use crate::field::{primitive_box, Aabb, ScalarField};
    use crate::geometry::Vec3;

    #[test]
    fn raster_matches_square_area() {
        let f = primitive_box(Vec3::zeros(), Vec3::new(0.3, 1.0, 0.2)).unwrap();
        let bb = Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5));
        let st = slice_field(&f, &bb, 0.5, 0.01).unwrap();
        let r = rasterize(&st.layers[0].model, &st.grid);
        let area = r.count() as f64 * st.grid.cell_area();
        assert!((area - 0.24).abs() / 0.24 < 0.02, "{area}");
    }

    #[test]
    fn vertical_cylinder_needs_no_support() {
        let f = ScalarField::new(|p| (p.x.hypot(p.z) - 0.4).max(p.y.abs() - 0.5));
        let bb = Aabb::new(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 0.5, 0.5));
        let st = slice_field(&f, &bb, 0.05, 0.02).unwrap();
        let est = estimate_support(&st, 45.0).unwrap();
        assert_eq!(est.support_fraction, 0.0);
        assert!(est.stack.layers.iter().all(|l| l.support.is_empty()));
    }

    #[test]
    fn cantilever_plate_column() {
        // 0.6 x 0.4 plate between y = 0.6 and 0.8 with nothing below it
        let plate = primitive_box(Vec3::new(0.0, 0.7, 0.0), Vec3::new(0.3, 0.1, 0.2)).unwrap();
        let bb = Aabb::new(Vec3::new(-0.5, 0.0, -0.5), Vec3::new(0.5, 0.8, 0.5));
        let h = 0.02;
        let st = slice_field(&plate, &bb, h, 0.01).unwrap();
        let est = estimate_support(&st, 45.0).unwrap();
        let expected = 0.6 * 0.4 * 0.6;
        assert!(
            (est.support_volume - expected).abs() / expected < 0.05,
            "{} vs {expected}",
            est.support_volume
        );
        let below = &est.stack.layers[0];
        assert_eq!(below.support.len(), 1);
        assert!(polygon_area(&below.support[0]) > 0.2);
    }

    #[test]
    fn smaller_overhang_never_reduces_support() {
        let f = ScalarField::sphere(Vec3::new(0.0, 0.5, 0.0), 0.45).unwrap();
        let bb = Aabb::new(Vec3::new(-0.5, 0.0, -0.5), Vec3::new(0.5, 1.0, 0.5));
        let st = slice_field(&f, &bb, 0.02, 0.02).unwrap();
        let mut last = 0.0;
        for deg in [80.0, 60.0, 45.0, 30.0, 10.0] {
            let v = estimate_support(&st, deg).unwrap().support_volume;
            assert!(v >= last, "{deg}: {v} < {last}");
            last = v;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn rejects_bad_angle() {
        let bb = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let st = slice_field(&ScalarField::constant(1.0), &bb, 0.5, 0.5).unwrap();
        assert!(estimate_support(&st, 90.0).is_err());
        assert!(estimate_support(&st, 0.0).is_err());
    }
}
