//! Circulation deck and structural pre-form.
//!
//! The animated section is frozen at equal time steps and translated along the
//! span axis; the frozen ribs are lofted into a deck grid, whose edges may be
//! bent with a U-dependent profile. The deck body is a plate around the
//! tessellated grid, and the structural pre-form clips a lattice to the volume
//! between the deck and the ground.

use std::sync::Arc;

use nalgebra::{Rotation3, Unit};

use crate::error::{Error, Result};
use crate::field::{intersect, union, Aabb, ScalarField};
use crate::geometry::{evaluate_track, Affine3, Point3, Section, SectionTrack, Vec3};
use crate::mesh_distance::TriangleSoup;

/// Piecewise-linear edge-bend angle (radians) over `u ∈ [0, 1]`, held constant
/// outside the first and last knots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BendProfile {
    knots: Vec<(f64, f64)>,
}

impl BendProfile {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.iter().any(|(u, a)| !u.is_finite() || !a.is_finite()) {
            return Err(Error::invalid("bend profile knots must be finite"));
        }
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("bend profile knots must have distinct u"));
        }
        Ok(Self { knots })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(angle: f64) -> Self {
        Self {
            knots: vec![(0.0, angle)],
        }
    }

    pub fn linear(angle_at_end: f64) -> Self {
        Self {
            knots: vec![(0.0, 0.0), (1.0, angle_at_end)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, u: f64) -> f64 {
        let k = &self.knots;
        match k.len() {
            0 => 0.0,
            1 => k[0].1,
            _ => {
                if u <= k[0].0 {
                    return k[0].1;
                }
                let i = k.partition_point(|(ku, _)| *ku <= u);
                if i == k.len() {
                    return k[k.len() - 1].1;
                }
                let (u0, a0) = k[i - 1];
                let (u1, a1) = k[i];
                let w = (u - u0) / (u1 - u0);
                (1.0 - w) * a0 + w * a1
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanSpec {
    pub track: SectionTrack,
    /// Span axis; normalized on use.
    pub direction: Vec3,
    pub span_length: f64,
    pub steps: usize,
    pub bend: BendProfile,
}

impl SpanSpec {
    pub fn validate(&self) -> Result<()> {
        let horiz = Vec3::new(self.direction.x, 0.0, self.direction.z);
        if horiz.norm() < 1e-12 {
            return Err(Error::invalid("span direction needs a horizontal component"));
        }
        if !(self.span_length > 0.0) {
            return Err(Error::invalid("span length must be positive"));
        }
        if self.steps < 2 {
            return Err(Error::invalid("span needs at least two steps"));
        }
        Ok(())
    }

    pub fn unit_direction(&self) -> Vec3 {
        self.direction.normalize()
    }

    /// Unit horizontal span axis.
    pub fn horizontal_direction(&self) -> Vec3 {
        Vec3::new(self.direction.x, 0.0, self.direction.z).normalize()
    }
}

/// `steps` snapshots of the track at `t_i = i/(steps−1)`, each moved
/// `t_i·span_length` along the span axis.
pub fn freeze_sections(spec: &SpanSpec) -> Result<Vec<Section>> {
    spec.validate()?;
    let dir = spec.unit_direction();
    let n = spec.steps;
    (0..n)
        .map(|i| {
            let t = if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
            let s = evaluate_track(&spec.track, t)?;
            Ok(s.transformed(&Affine3::translate(dir * (t * spec.span_length))))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
    pub normal: Vec3,
}

/// Deck grid `P[i][j]`: `i` runs along the span (`u`), `j` across it (`v`).
#[derive(Debug, Clone, PartialEq)]
pub struct DeckSurface {
    rows: usize,
    cols: usize,
    points: Vec<Point3>,
    frames: Vec<SurfaceFrame>,
}

impl DeckSurface {
    pub fn from_grid(rows: usize, cols: usize, points: Vec<Point3>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid("deck grid must be at least 2×2"));
        }
        if points.len() != rows * cols {
            return Err(Error::invalid("deck point count does not match its dimensions"));
        }
        let mut deck = Self {
            rows,
            cols,
            points,
            frames: Vec::new(),
        };
        deck.frames = deck.compute_frames();
        Ok(deck)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn u(&self, i: usize) -> f64 {
        i as f64 / (self.rows - 1) as f64
    }

    pub fn v(&self, j: usize) -> f64 {
        j as f64 / (self.cols - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> Point3 {
        self.points[i * self.cols + j]
    }

    pub fn frame(&self, i: usize, j: usize) -> &SurfaceFrame {
        &self.frames[i * self.cols + j]
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[Point3] {
        &self.points[i * self.cols..(i + 1) * self.cols]
    }

    /// Bilinear interpolation in parameter space, clamped to `[0, 1]²`.
    pub fn point_at(&self, u: f64, v: f64) -> Point3 {
        let fu = u.clamp(0.0, 1.0) * (self.rows - 1) as f64;
        let fv = v.clamp(0.0, 1.0) * (self.cols - 1) as f64;
        let i = (fu.floor() as usize).min(self.rows - 2);
        let j = (fv.floor() as usize).min(self.cols - 2);
        let (a, b) = (fu - i as f64, fv - j as f64);
        self.at(i, j) * ((1.0 - a) * (1.0 - b))
            + self.at(i + 1, j) * (a * (1.0 - b))
            + self.at(i, j + 1) * ((1.0 - a) * b)
            + self.at(i + 1, j + 1) * (a * b)
    }

    fn diff(&self, i: usize, j: usize, along_u: bool) -> Vec3 {
        let (n, idx) = if along_u { (self.rows, i) } else { (self.cols, j) };
        let get = |k: usize| if along_u { self.at(k, j) } else { self.at(i, k) };
        let (lo, hi) = (idx.saturating_sub(1), (idx + 1).min(n - 1));
        (get(hi) - get(lo)) / (hi - lo) as f64
    }

    fn compute_frames(&self) -> Vec<SurfaceFrame> {
        let mut frames = Vec::with_capacity(self.points.len());
        let mut up_votes = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let tu = self.diff(i, j, true);
                let tv = self.diff(i, j, false);
                let normal = tu.cross(&tv).try_normalize(1e-300).unwrap_or_else(Vec3::y);
                up_votes += normal.y;
                frames.push(SurfaceFrame {
                    tangent_u: tu,
                    tangent_v: tv,
                    normal,
                });
            }
        }
        if up_votes < 0.0 {
            for f in &mut frames {
                f.normal = -f.normal;
            }
        }
        frames
    }

    /// Two triangles per grid quad.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(2 * (self.rows - 1) * (self.cols - 1));
        for i in 0..self.rows - 1 {
            for j in 0..self.cols - 1 {
                let a = i * self.cols + j;
                let b = a + 1;
                let c = a + self.cols;
                let d = c + 1;
                out.push([a, c, d]);
                out.push([a, d, b]);
            }
        }
        out
    }

    /// Sum of triangle areas.
    pub fn area(&self) -> f64 {
        self.triangles()
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| self.points[k]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.points.iter()).expect("nonempty deck")
    }

    pub fn soup(&self) -> Result<TriangleSoup> {
        TriangleSoup::new(self.points.clone(), self.triangles())
    }
}

/// Lofts frozen sections into a deck grid with `m` samples across each rib.
pub fn loft_deck(sections: &[Section], m: usize) -> Result<DeckSurface> {
    if sections.len() < 2 {
        return Err(Error::invalid("loft needs at least two sections"));
    }
    if m < 2 {
        return Err(Error::invalid("loft needs at least two samples across"));
    }
    let first = &sections[0];
    if let Some(k) = sections.iter().position(|s| !s.compatible_with(first)) {
        return Err(Error::invalid(format!(
            "section {k} is incompatible with section 0 (curve count or kinds differ)"
        )));
    }
    if first.curves.iter().any(|c| c.is_closed()) {
        return Err(Error::invalid("deck sections must be open curves"));
    }
    let mut points = Vec::with_capacity(sections.len() * m);
    for s in sections {
        points.extend(s.sample(m)?);
    }
    DeckSurface::from_grid(sections.len(), m, points)
}

/// Rotates each row about its centerline tangent by `bend(u_i)·w`, where
/// `w = |v − 0.5|·2`; the centerline stays fixed and positive angles lift both
/// edges along the deck normal.
pub fn bend_edges(deck: &DeckSurface, bend: &BendProfile) -> Result<DeckSurface> {
    let (n, m) = (deck.rows, deck.cols);
    let centers: Vec<Point3> = (0..n).map(|i| deck.point_at(deck.u(i), 0.5)).collect();
    let mut points = deck.points.clone();
    for i in 0..n {
        let angle = bend.eval(deck.u(i));
        if angle == 0.0 {
            continue;
        }
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let Some(axis) = (centers[hi] - centers[lo]).try_normalize(1e-300) else {
            continue;
        };
        let jc = (m - 1) / 2;
        let normal = deck.frame(i, jc).normal;
        for j in 0..m {
            let w = (deck.v(j) - 0.5).abs() * 2.0;
            let r = deck.at(i, j) - centers[i];
            if w == 0.0 || r.norm() < 1e-300 {
                continue;
            }
            let ax = if axis.cross(&r).dot(&normal) >= 0.0 { axis } else { -axis };
            let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(ax), angle * w);
            points[i * m + j] = centers[i] + rot * r;
        }
    }
    DeckSurface::from_grid(n, m, points)
}

/// Plate of total thickness `thickness` around the tessellated deck.
pub fn deck_field(deck: &DeckSurface, thickness: f64) -> Result<ScalarField> {
    if !(thickness > 0.0) {
        return Err(Error::invalid("deck thickness must be positive"));
    }
    let soup = Arc::new(deck.soup()?);
    let half = 0.5 * thickness;
    let bbox = soup.bbox().expanded(half);
    Ok(ScalarField::new(move |p| soup.distance(p) - half)
        .with_bbox(Some(bbox))
        .with_lipschitz(Some(1.0)))
}

/// Conceptual shell clipping the lattice.
#[derive(Debug, Clone)]
pub enum ShellSpec {
    /// Everything between the deck and the ground plane `y = ground_y`.
    Auto { ground_y: f64 },
    /// A user-supplied bounded field.
    Field(ScalarField),
}

/// Signed height below the deck: negative under a deck sheet (by the distance to
/// the lowest sheet above), positive above the deck or outside its projection.
#[derive(Debug, Clone)]
pub struct BelowDeck {
    soup: Arc<TriangleSoup>,
}

impl BelowDeck {
    pub fn new(deck: &DeckSurface) -> Result<Self> {
        Ok(Self {
            soup: Arc::new(deck.soup()?),
        })
    }

    pub fn eval(&self, p: &Point3) -> f64 {
        let ys = self.soup.vertical_crossings(p.x, p.z);
        if ys.is_empty() {
            return self.soup.distance(p).max(1e-12);
        }
        match ys.iter().find(|y| **y >= p.y) {
            Some(above) => p.y - above,
            None => p.y - ys[ys.len() - 1],
        }
    }
}

/// Convex hull of XZ points, counter-clockwise in the (x, z) plane.
pub fn convex_hull_xz(points: &[Point3]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.z)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Signed distance to a convex CCW polygon in the XZ plane.
pub fn convex_polygon_sdf(poly: &[(f64, f64)], x: f64, z: f64) -> f64 {
    let n = poly.len();
    let mut max_edge = f64::NEG_INFINITY;
    let mut min_dist = f64::INFINITY;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let (ex, ez) = (b.0 - a.0, b.1 - a.1);
        let len = (ex * ex + ez * ez).sqrt();
        // outward normal of a CCW edge in (x, z)
        let signed = (ez * (x - a.0) - ex * (z - a.1)) / len;
        max_edge = max_edge.max(signed);
        let t = (((x - a.0) * ex + (z - a.1) * ez) / (len * len)).clamp(0.0, 1.0);
        let (dx, dz) = (x - (a.0 + t * ex), z - (a.1 + t * ez));
        min_dist = min_dist.min((dx * dx + dz * dz).sqrt());
    }
    if max_edge <= 0.0 {
        max_edge
    } else {
        min_dist
    }
}

/// Everything the pre-form needs from the deck, built once.
#[derive(Debug, Clone)]
pub struct PreformParts {
    pub deck: ScalarField,
    /// Deck footprint hull extruded from the ground to the deck underside.
    pub footprint: ScalarField,
    pub shell: ScalarField,
}

pub fn preform_parts(
    deck: &DeckSurface,
    deck_thickness: f64,
    shell: &ShellSpec,
    ground_y: f64,
) -> Result<PreformParts> {
    let hull = convex_hull_xz(deck.points());
    if hull.len() < 3 || polygon_area(&hull).abs() < 1e-12 {
        return Err(Error::invalid("deck footprint is empty"));
    }
    let deck_f = deck_field(deck, deck_thickness)?;
    let below = BelowDeck::new(deck)?;
    let half = 0.5 * deck_thickness;
    let dbox = deck.bbox();
    let foot_box = {
        let (mut lo, mut hi) = (dbox.min, dbox.max);
        lo.y = ground_y.min(dbox.min.y);
        hi.y = dbox.max.y;
        Aabb::new(lo, hi)
    };
    let hull_c = hull.clone();
    let below_c = below.clone();
    let footprint = ScalarField::new(move |p| {
        convex_polygon_sdf(&hull_c, p.x, p.z)
            .max(ground_y - p.y)
            .max(below_c.eval(p) + half)
    })
    .with_bbox(Some(foot_box));
    let shell_f = match shell {
        ShellSpec::Auto { ground_y: g } => {
            let g = *g;
            ScalarField::new(move |p| (g - p.y).max(below.eval(p))).with_bbox(Some(foot_box))
        }
        ShellSpec::Field(f) => f.clone(),
    };
    Ok(PreformParts {
        deck: deck_f,
        footprint,
        shell: shell_f,
    })
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
}

/// `deck ∪ (lattice ∩ shell ∩ footprint)`.
pub fn assemble_preform(parts: &PreformParts, lattice: &ScalarField) -> ScalarField {
    let clipped = intersect(lattice, &intersect(&parts.shell, &parts.footprint));
    union(&parts.deck, &clipped)
}

pub fn structural_preform(
    deck: &DeckSurface,
    deck_thickness: f64,
    shell: &ShellSpec,
    ground_y: f64,
    lattice: &ScalarField,
) -> Result<ScalarField> {
    let parts = preform_parts(deck, deck_thickness, shell, ground_y)?;
    Ok(assemble_preform(&parts, lattice))
}
