use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Aabb, ScalarField, DEFAULT_MEMORY_BUDGET};
use crate::geometry::Point3;

/// Closed polygon in the horizontal `(x, z)` plane. The closing edge is
/// implicit. Outer boundaries are counter-clockwise, holes clockwise.
pub type Polygon = Vec<[f64; 2]>;

/// Signed shoelace area.
pub fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

pub fn polygon_perimeter(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}

/// Sampling lattice shared by every layer: points `(x0 + i·s, z0 + j·s)` for
/// `i < nx`, `j < nz`. The outermost ring lies one step outside the slicing
/// box and is treated as empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceGrid {
    pub x0: f64,
    pub z0: f64,
    pub spacing: f64,
    pub nx: usize,
    pub nz: usize,
}

impl SliceGrid {
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layer {
    pub y: f64,
    pub model: Vec<Polygon>,
    pub support: Vec<Polygon>,
}

impl Layer {
    /// Net model cross-section area.
    pub fn model_area(&self) -> f64 {
        self.model.iter().map(|p| polygon_area(p)).sum()
    }

    pub fn support_area(&self) -> f64 {
        self.support.iter().map(|p| polygon_area(p)).sum()
    }
}

/// Horizontal slices of a body, bottom to top, spaced by `layer_height`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStack {
    pub layer_height: f64,
    pub y_min: f64,
    pub grid: SliceGrid,
    pub layers: Vec<Layer>,
}

impl LayerStack {
    /// `Σ area · h` over all model contours.
    pub fn model_volume(&self) -> f64 {
        self.layers.iter().map(Layer::model_area).sum::<f64>() * self.layer_height
    }

    /// Smallest nonzero model cross-section, if any layer has material.
    pub fn min_cross_section(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(Layer::model_area)
            .filter(|a| *a > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Slices `f` with horizontal planes at `y_min + (k + ½)·h` and traces the zero
/// level of each plane by marching squares on a lattice of spacing
/// `xy_spacing`.
pub fn slice_field(f: &ScalarField, bbox: &Aabb, h: f64, xy_spacing: f64) -> Result<LayerStack> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("layer height must be positive, got {h}")));
    }
    if !(xy_spacing > 0.0 && xy_spacing.is_finite()) {
        return Err(Error::invalid(format!("slice spacing must be positive, got {xy_spacing}")));
    }
    if bbox.is_empty() {
        return Err(Error::invalid("slicing box is empty"));
    }
    let e = bbox.extent();
    let inner = |len: f64| (len / xy_spacing + 1e-9).floor() as usize + 1;
    let grid = SliceGrid {
        x0: bbox.min.x - xy_spacing,
        z0: bbox.min.z - xy_spacing,
        spacing: xy_spacing,
        nx: inner(e.x) + 2,
        nz: inner(e.z) + 2,
    };
    let per_layer = grid.nx as u64 * grid.nz as u64 * 8;
    let live = per_layer.saturating_mul(rayon::current_num_threads() as u64);
    if live > DEFAULT_MEMORY_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "slicing {}x{} samples per layer needs {live} bytes, budget {DEFAULT_MEMORY_BUDGET}",
            grid.nx, grid.nz
        )));
    }
    let count = (e.y / h - 1e-9).ceil().max(0.0) as usize;
    let layers = (0..count)
        .into_par_iter()
        .map(|k| {
            let y = bbox.min.y + (k as f64 + 0.5) * h;
            let values = sample_plane(f, &grid, y);
            Layer { y, model: trace_contours(&values, &grid), support: Vec::new() }
        })
        .collect();
    Ok(LayerStack { layer_height: h, y_min: bbox.min.y, grid, layers })
}

fn sample_plane(f: &ScalarField, g: &SliceGrid, y: f64) -> Vec<f64> {
    let mut v = vec![g.spacing; g.nx * g.nz];
    for j in 1..g.nz - 1 {
        for i in 1..g.nx - 1 {
            let p = Point3::new(g.x0 + i as f64 * g.spacing, y, g.z0 + j as f64 * g.spacing);
            v[i + g.nx * j] = f.eval(&p);
        }
    }
    v
}

/// Marching squares over lattice values (negative inside). Each crossing is
/// keyed by its lattice edge so neighbouring cells share endpoints exactly.
/// Segments keep the inside on their left, which makes outer loops
/// counter-clockwise in `(x, z)`.
pub(crate) fn trace_contours(values: &[f64], g: &SliceGrid) -> Vec<Polygon> {
    let (nx, nz) = (g.nx, g.nz);
    let at = |i: usize, j: usize| values[i + nx * j];
    // horizontal edge (i,j)-(i+1,j) -> even key, vertical (i,j)-(i,j+1) -> odd
    let h_key = |i: usize, j: usize| 2 * (i + nx * j) as u64;
    let v_key = |i: usize, j: usize| 2 * (i + nx * j) as u64 + 1;
    let point = |key: u64| -> [f64; 2] {
        let idx = (key / 2) as usize;
        let (i, j) = (idx % nx, idx / nx);
        let (ni, nj) = if key.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (at(i, j), at(ni, nj));
        let t = v0 / (v0 - v1);
        [
            g.x0 + (i as f64 + t * (ni - i) as f64) * g.spacing,
            g.z0 + (j as f64 + t * (nj - j) as f64) * g.spacing,
        ]
    };

    let mut segments: Vec<(u64, u64)> = Vec::new();
    for j in 0..nz.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let vals = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let inside = vals.map(|v| v < 0.0);
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            // edges in counter-clockwise order, edge k runs corner k -> k+1
            let keys = [h_key(i, j), v_key(i + 1, j), h_key(i, j + 1), v_key(i, j)];
            let mut enters = Vec::with_capacity(2);
            let mut exits = Vec::with_capacity(2);
            for k in 0..4 {
                let (p, q) = (inside[k], inside[(k + 1) % 4]);
                if p != q {
                    if q {
                        enters.push((k, keys[k]));
                    } else {
                        exits.push((k, keys[k]));
                    }
                }
            }
            if enters.len() == 1 {
                segments.push((exits[0].1, enters[0].1));
                continue;
            }
            let connected = vals.iter().sum::<f64>() * 0.25 < 0.0;
            for &(xk, xkey) in &exits {
                // the enter crossing just before (separate) or just after
                // (connected) this exit, walking counter-clockwise
                let pick = enters
                    .iter()
                    .min_by_key(|(ek, _)| {
                        if connected {
                            (ek + 4 - xk) % 4
                        } else {
                            (xk + 4 - ek) % 4
                        }
                    })
                    .unwrap();
                segments.push((xkey, pick.1));
            }
        }
    }

    let mut by_start: HashMap<u64, usize> = HashMap::with_capacity(segments.len());
    for (idx, s) in segments.iter().enumerate() {
        by_start.insert(s.0, idx);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for first in 0..segments.len() {
        if used[first] {
            continue;
        }
        let mut poly: Polygon = Vec::new();
        let mut cur = first;
        let closed = loop {
            used[cur] = true;
            let p = point(segments[cur].0);
            if poly.last() != Some(&p) {
                poly.push(p);
            }
            match by_start.get(&segments[cur].1) {
                Some(&next) if next == first => break true,
                Some(&next) if !used[next] => cur = next,
                _ => break false,
            }
        };
        if poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        if closed && poly.len() >= 3 {
            loops.push(poly);
        }
    }
    loops
}
