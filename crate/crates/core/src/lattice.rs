//! Helicoid ("rheotomic") structural texture: a line segment swept with
//! coupled vertical translation and rotation, thickened, clipped to a square
//! prism cell and tiled with symmetric repeats.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{intersect, primitive_prism_y, thicken_surface, Aabb, ScalarField};
use crate::geometry::{Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    Right,
    Left,
}

impl Handedness {
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Right => 1.0,
            Handedness::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelicoidSpec {
    /// Vertical rise per full turn.
    pub pitch: f64,
    pub phase: f64,
    pub handedness: Handedness,
    /// Radial extent of the swept segment.
    pub r_max: f64,
    /// Vertical axis position `(x0, z0)`.
    pub axis: (f64, f64),
    /// Ruling spans `[-r_max, r_max]` when true, `[0, r_max]` otherwise.
    pub two_sided: bool,
}

impl HelicoidSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0) {
            return Err(Error::invalid("helicoid pitch must be positive"));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::invalid("helicoid r_max must be positive"));
        }
        Ok(())
    }

    /// Signed angular rate `σ·2π/pitch`.
    pub fn wavenumber(&self) -> f64 {
        self.handedness.sign() * TAU / self.pitch
    }

    /// Point on the surface at ruling coordinate `s` and height `y`.
    pub fn point(&self, s: f64, y: f64) -> Point3 {
        let a = self.wavenumber() * y + self.phase;
        Vec3::new(self.axis.0 + s * a.cos(), y, self.axis.1 + s * a.sin())
    }
}

/// Pseudo-distance to the helicoid. Inside the radial extent it is the raw
/// implicit `x'·sin θ − z'·cos θ` normalized by `sqrt(1 + k²r²)`; beyond it the
/// magnitude is raised to at least the radial overshoot, keeping the sign.
pub fn helicoid_field(spec: &HelicoidSpec) -> Result<ScalarField> {
    spec.validate()?;
    let s = *spec;
    let k = s.wavenumber();
    let field = ScalarField::new(move |p| {
        let x = p.x - s.axis.0;
        let z = p.z - s.axis.1;
        let theta = k * p.y + s.phase;
        let (sn, cs) = theta.sin_cos();
        let r2 = x * x + z * z;
        let d = (x * sn - z * cs) / (1.0 + k * k * r2).sqrt();
        let radial = r2.sqrt() - s.r_max;
        let overshoot = if s.two_sided {
            // |along| <= r, so the radial term already dominates.
            radial
        } else {
            let along = x * cs + z * sn;
            radial.max(-along)
        };
        if overshoot > 0.0 {
            let m = d.abs().max(overshoot);
            if d < 0.0 {
                -m
            } else {
                m
            }
        } else {
            d
        }
    });
    // The one-sided cut `-along` has an unbounded y-derivative far from the axis.
    let lip = s.two_sided.then(|| 1.0 + k.abs() * s.r_max);
    Ok(field.with_lipschitz(lip))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileSpec {
    /// Prism side length.
    pub cell: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Helicoid in cell-local coordinates; its axis is moved to the cell center.
    pub helicoid: HelicoidSpec,
    pub thickness: f64,
}

impl TileSpec {
    pub fn validate(&self) -> Result<()> {
        self.helicoid.validate()?;
        if !(self.cell > 0.0) {
            return Err(Error::invalid("tile cell side must be positive"));
        }
        if !(self.y_max > self.y_min) {
            return Err(Error::invalid("tile needs y_max > y_min"));
        }
        if !(self.thickness > 0.0 && self.thickness < 0.5 * self.cell) {
            return Err(Error::invalid("tile thickness must lie in (0, cell/2)"));
        }
        Ok(())
    }
}

/// One tile centered on the vertical axis `x = z = 0`: the thickened helicoid
/// intersected with the square prism.
pub fn rheotomic_tile(spec: &TileSpec) -> Result<ScalarField> {
    spec.validate()?;
    let h = HelicoidSpec {
        axis: (0.0, 0.0),
        ..spec.helicoid
    };
    let sheet = thicken_surface(&helicoid_field(&h)?, spec.thickness)?;
    let prism = primitive_prism_y(0.0, 0.0, 0.5 * spec.cell, spec.y_min, spec.y_max)?;
    Ok(intersect(&sheet, &prism))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MirrorRule {
    /// Cells with odd `i + j` use the tile reflected across its X midplane.
    #[default]
    CheckerboardMirrorX,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub tile: TileSpec,
    pub repeats: (usize, usize),
    pub mirror: MirrorRule,
    /// Minimum XZ corner of the lattice.
    pub origin: (f64, f64),
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        self.tile.validate()?;
        if self.repeats.0 < 1 || self.repeats.1 < 1 {
            return Err(Error::invalid("lattice repeats must be at least 1×1"));
        }
        Ok(())
    }

    pub fn bbox(&self) -> Aabb {
        let a = self.tile.cell;
        Aabb::new(
            Vec3::new(self.origin.0, self.tile.y_min, self.origin.1),
            Vec3::new(
                self.origin.0 + a * self.repeats.0 as f64,
                self.tile.y_max,
                self.origin.1 + a * self.repeats.1 as f64,
            ),
        )
    }
}

/// Union of tiles over the repeat grid.
pub fn tile_lattice(spec: &LatticeSpec) -> Result<ScalarField> {
    spec.validate()?;
    let tile = rheotomic_tile(&spec.tile)?;
    let lip = tile.lipschitz;
    let s = *spec;
    let a = s.tile.cell;
    Ok(ScalarField::new(move |p| {
        let mut best = f64::INFINITY;
        for j in 0..s.repeats.1 {
            let cz = s.origin.1 + (j as f64 + 0.5) * a;
            for i in 0..s.repeats.0 {
                let cx = s.origin.0 + (i as f64 + 0.5) * a;
                let mirrored = s.mirror == MirrorRule::CheckerboardMirrorX && (i + j) % 2 == 1;
                let lx = if mirrored { cx - p.x } else { p.x - cx };
                best = best.min(tile.eval(&Vec3::new(lx, p.y, p.z - cz)));
            }
        }
        best
    })
    .with_bbox(Some(spec.bbox()))
    .with_lipschitz(lip))
}
