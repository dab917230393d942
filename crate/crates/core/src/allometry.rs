//! Raster-driven accumulation.
//!
//! A 2D raster sampled through a planar UV projection of the span locally
//! inflates an implicit body: `p ↦ body(p) − alpha·t0·raster(uv(p))`. Rasters
//! come from files, from inverse distance to contact surfaces, or from
//! scattered samples baked with Shepard interpolation.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Point3, Vec3};
use crate::span::DeckSurface;

pub use crate::pipeline::remodel_step;

/// Row-major scalar grid over UV ∈ [0,1]²; row `j` runs along `v`, column `i`
/// along `u`. Pixel centers sit at `((i+½)/w, (j+½)/h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RasterField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::invalid("raster needs at least one pixel"));
        }
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "raster {width}×{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("raster values must be finite"));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 + 0.5) / self.width as f64,
            (j as f64 + 0.5) / self.height as f64,
        )
    }

    /// Bilinear sample, clamped at the borders.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let fx = (u * self.width as f64 - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (v * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let i0 = fx.floor() as usize;
        let j0 = fy.floor() as usize;
        let i1 = (i0 + 1).min(self.width - 1);
        let j1 = (j0 + 1).min(self.height - 1);
        let (a, b) = (fx - i0 as f64, fy - j0 as f64);
        let top = (1.0 - a) * self.get(i0, j0) + a * self.get(i1, j0);
        let bottom = (1.0 - a) * self.get(i0, j1) + a * self.get(i1, j1);
        (1.0 - b) * top + b * bottom
    }

    /// Parses either a plain PGM (`P2`, value = pixel/maxval) or a `RAST w h`
    /// float grid.
    pub fn parse(text: &str) -> std::result::Result<RasterField, String> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let magic = tokens.next().ok_or("empty raster file")?;
        let mut int = |what: &str| -> std::result::Result<usize, String> {
            let t = tokens.next().ok_or(format!("missing {what}"))?;
            t.parse::<usize>().map_err(|_| format!("bad {what} `{t}`"))
        };
        match magic {
            "P2" => {
                let w = int("width")?;
                let h = int("height")?;
                let maxval = int("maxval")?;
                if maxval == 0 || maxval > 65535 {
                    return Err(format!("maxval {maxval} outside 1..=65535"));
                }
                let mut values = Vec::with_capacity(w * h);
                for _ in 0..w * h {
                    let px = int("pixel")?;
                    if px > maxval {
                        return Err(format!("pixel {px} exceeds maxval {maxval}"));
                    }
                    values.push(px as f64 / maxval as f64);
                }
                if tokens.next().is_some() {
                    return Err("trailing data after pixels".into());
                }
                RasterField::new(w, h, values).map_err(|e| e.to_string())
            }
            "RAST" => {
                let w = int("width")?;
                let h = int("height")?;
                let values = tokens
                    .by_ref()
                    .map(|t| t.parse::<f64>().map_err(|_| format!("bad value `{t}`")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if values.len() != w * h {
                    return Err(format!("expected {} values, found {}", w * h, values.len()));
                }
                RasterField::new(w, h, values).map_err(|e| e.to_string())
            }
            other => Err(format!("unknown raster magic `{other}` (expected P2 or RAST)")),
        }
    }

    pub fn load(path: &Path) -> Result<RasterField> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InputFormat {
            path: path.to_path_buf(),
            message: format!("unreadable raster: {e}"),
        })?;
        Self::parse(&text).map_err(|message| Error::InputFormat {
            path: path.to_path_buf(),
            message,
        })
    }

    /// `RAST w h` text, one row per line, shortest round-trip decimal reals.
    pub fn to_rast_text(&self) -> String {
        let mut s = format!("RAST {} {}\n", self.width, self.height);
        for j in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|i| format!("{:?}", self.get(i, j))).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}

/// Planar projection of world points onto the span's UV chart. Vertical
/// position is ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvProjection {
    pub origin: Point3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub u_extent: f64,
    pub v_extent: f64,
}

impl UvProjection {
    pub fn new(origin: Point3, u_axis: Vec3, u_extent: f64, v_extent: f64) -> Result<Self> {
        let u = Vec3::new(u_axis.x, 0.0, u_axis.z)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::invalid("UV u-axis must have a horizontal component"))?;
        if !(u_extent > 0.0 && v_extent > 0.0) {
            return Err(Error::invalid("UV extents must be positive"));
        }
        // horizontal normal, right-handed with Y up
        let v = Vec3::y().cross(&u);
        Ok(Self {
            origin,
            u_axis: u,
            v_axis: v,
            u_extent,
            v_extent,
        })
    }

    /// Fits the chart to the deck's horizontal extent along `direction`.
    pub fn from_deck(deck: &DeckSurface, direction: &Vec3) -> Result<Self> {
        let probe = UvProjection::new(Vec3::zeros(), *direction, 1.0, 1.0)?;
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in deck.points() {
            let (u, v) = probe.project(p);
            lo = (lo.0.min(u), lo.1.min(v));
            hi = (hi.0.max(u), hi.1.max(v));
        }
        let origin = probe.u_axis * lo.0 + probe.v_axis * lo.1;
        UvProjection::new(
            origin,
            probe.u_axis,
            (hi.0 - lo.0).max(1e-9),
            (hi.1 - lo.1).max(1e-9),
        )
    }

    pub fn project(&self, p: &Point3) -> (f64, f64) {
        let d = p - self.origin;
        (
            d.dot(&self.u_axis) / self.u_extent,
            d.dot(&self.v_axis) / self.v_extent,
        )
    }
}

pub fn project_uv(proj: &UvProjection, p: &Point3) -> (f64, f64) {
    proj.project(p)
}

/// Inverse distance to the nearest contact surface, sampled on the deck at each
/// raster cell center: `min(c / max(d, ε), r_cap) / r_cap` with `ε = 1e-6·c`.
pub fn inverse_distance_raster(
    contacts: &[ScalarField],
    deck: &DeckSurface,
    resolution: (usize, usize),
    c: f64,
    r_cap: f64,
) -> Result<RasterField> {
    if contacts.is_empty() {
        return Err(Error::invalid("inverse-distance raster needs at least one contact"));
    }
    if !(c > 0.0 && r_cap > 0.0) {
        return Err(Error::invalid("inverse-distance raster needs c > 0 and r_cap > 0"));
    }
    let (w, h) = resolution;
    let eps = 1e-6 * c;
    let mut values = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            let u = (i as f64 + 0.5) / w as f64;
            let v = (j as f64 + 0.5) / h as f64;
            let p = deck.point_at(u, v);
            let d = contacts.iter().map(|f| f.eval(&p).abs()).fold(f64::INFINITY, f64::min);
            values.push(inverse_distance_value(d, c, r_cap, eps));
        }
    }
    RasterField::new(w, h, values)
}

fn inverse_distance_value(d: f64, c: f64, r_cap: f64, eps: f64) -> f64 {
    (c / d.max(eps)).min(r_cap) / r_cap
}

/// Shepard interpolation with weights `1/dᵖ`; exact at coincident samples.
pub fn idw_interpolate(samples: &[((f64, f64), f64)], power: f64, query: (f64, f64)) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &((u, v), value) in samples {
        let d = ((u - query.0).powi(2) + (v - query.1).powi(2)).sqrt();
        if d < 1e-12 {
            return value;
        }
        let w = d.powf(-power);
        num += w * value;
        den += w;
    }
    num / den
}

/// Bakes scattered samples into a raster by IDW at every cell center.
pub fn rasterize_scatter(
    samples: &[((f64, f64), f64)],
    resolution: (usize, usize),
    power: f64,
) -> Result<RasterField> {
    if samples.is_empty() {
        return Err(Error::invalid("rasterize_scatter needs at least one sample"));
    }
    if !(power > 0.0) {
        return Err(Error::invalid("IDW power must be positive"));
    }
    let (w, h) = resolution;
    let mut values = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            let q = ((i as f64 + 0.5) / w as f64, (j as f64 + 0.5) / h as f64);
            values.push(idw_interpolate(samples, power, q));
        }
    }
    RasterField::new(w, h, values)
}

/// Offsets `body` outward by `alpha·t0·raster(uv(p))`.
pub fn accumulate(
    body: &ScalarField,
    raster: &RasterField,
    proj: &UvProjection,
    alpha: f64,
    t0: f64,
) -> Result<ScalarField> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("accumulation alpha must be non-negative"));
    }
    if !(t0 > 0.0) {
        return Err(Error::invalid("accumulation t0 must be positive"));
    }
    let gain = alpha * t0;
    let b = body.clone();
    let r = Arc::new(raster.clone());
    let pr = *proj;
    let max_r = raster.values.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(ScalarField::new(move |p| {
        let (u, v) = pr.project(p);
        b.eval(p) - gain * r.sample(u, v)
    })
    .with_bbox(body.bbox.map(|bb| bb.expanded(gain * max_r)))
    .with_lipschitz(None))
}
