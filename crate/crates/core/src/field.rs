//! Implicit scalar fields (negative inside), min/max booleans, transforms,
//! shells and dense grid sampling.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Affine3, Point3, Vec3};

/// Default cap on the memory a single [`sample_grid`] call may allocate.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 * 1024 * 1024 * 1024;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point3>) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        Some(it.fold(Aabb::new(first, first), |b, p| b.including(p)))
    }

    pub fn including(&self, p: &Point3) -> Aabb {
        Aabb::new(self.min.inf(p), self.max.sup(p))
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&o.min), self.max.sup(&o.max))
    }

    pub fn intersection(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.sup(&o.min), self.max.inf(&o.max))
    }

    pub fn expanded(&self, r: f64) -> Aabb {
        let d = Vec3::repeat(r);
        Aabb::new(self.min - d, self.max + d)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| !(self.max[i] >= self.min[i]))
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    pub fn transformed(&self, t: &Affine3) -> Aabb {
        let c = self.corners().map(|p| t.apply(&p));
        Aabb::from_points(c.iter()).expect("eight corners")
    }

    /// Euclidean distance from `p` to the box, zero inside.
    pub fn distance(&self, p: &Point3) -> f64 {
        let d = (self.min - p).sup(&(p - self.max)).sup(&Vec3::zeros());
        d.norm()
    }
}

type EvalFn = dyn Fn(&Point3) -> f64 + Send + Sync;

/// A real-valued implicit function over 3D space. Negative inside, zero on
/// the surface. Cloning is cheap; evaluation is pure.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    /// Conservative bounds of the negative set, when known.
    pub bbox: Option<Aabb>,
    /// Upper bound on the Lipschitz constant, when known.
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("bbox", &self.bbox)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&Point3) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            bbox: None,
            lipschitz: None,
        }
    }

    pub fn with_bbox(mut self, bbox: Option<Aabb>) -> Self {
        self.bbox = bbox;
        self
    }

    pub fn with_lipschitz(mut self, l: Option<f64>) -> Self {
        self.lipschitz = l;
        self
    }

    #[inline]
    pub fn eval(&self, p: &Point3) -> f64 {
        (self.eval)(p)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_lipschitz(Some(0.0))
    }

    /// Half-space below the horizontal plane `y = height`.
    pub fn below_plane_y(height: f64) -> Self {
        Self::new(move |p| p.y - height).with_lipschitz(Some(1.0))
    }

    pub fn sphere(center: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("sphere radius must be positive"));
        }
        Ok(Self::new(move |p| (p - center).norm() - radius)
            .with_bbox(Some(Aabb::new(center, center).expanded(radius)))
            .with_lipschitz(Some(1.0)))
    }
}

/// Exact signed distance to an axis-aligned box.
pub fn primitive_box(center: Point3, half_extents: Vec3) -> Result<ScalarField> {
    if half_extents.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid(format!(
            "box half extents must be positive, got {half_extents:?}"
        )));
    }
    Ok(ScalarField::new(move |p| {
        let q = (p - center).abs() - half_extents;
        let outside = q.sup(&Vec3::zeros()).norm();
        let inside = q.x.max(q.y).max(q.z).min(0.0);
        outside + inside
    })
    .with_bbox(Some(Aabb::new(center - half_extents, center + half_extents)))
    .with_lipschitz(Some(1.0)))
}

/// Square prism with vertical axis through `(center_x, center_z)`.
pub fn primitive_prism_y(
    center_x: f64,
    center_z: f64,
    half_width: f64,
    y_min: f64,
    y_max: f64,
) -> Result<ScalarField> {
    if !(y_max > y_min) {
        return Err(Error::invalid("prism needs y_max > y_min"));
    }
    primitive_box(
        Vec3::new(center_x, 0.5 * (y_min + y_max), center_z),
        Vec3::new(half_width, 0.5 * (y_max - y_min), half_width),
    )
}

fn max_lipschitz(a: &ScalarField, b: &ScalarField) -> Option<f64> {
    Some(a.lipschitz?.max(b.lipschitz?))
}

pub fn union(f: &ScalarField, g: &ScalarField) -> ScalarField {
    let (a, b) = (f.clone(), g.clone());
    let bbox = match (f.bbox, g.bbox) {
        (Some(x), Some(y)) => Some(x.union(&y)),
        _ => None,
    };
    ScalarField::new(move |p| a.eval(p).min(b.eval(p)))
        .with_bbox(bbox)
        .with_lipschitz(max_lipschitz(f, g))
}

pub fn intersect(f: &ScalarField, g: &ScalarField) -> ScalarField {
    let (a, b) = (f.clone(), g.clone());
    let bbox = match (f.bbox, g.bbox) {
        (Some(x), Some(y)) => Some(x.intersection(&y)),
        (x, y) => x.or(y),
    };
    ScalarField::new(move |p| a.eval(p).max(b.eval(p)))
        .with_bbox(bbox)
        .with_lipschitz(max_lipschitz(f, g))
}

pub fn difference(f: &ScalarField, g: &ScalarField) -> ScalarField {
    let (a, b) = (f.clone(), g.clone());
    ScalarField::new(move |p| a.eval(p).max(-b.eval(p)))
        .with_bbox(f.bbox)
        .with_lipschitz(max_lipschitz(f, g))
}

/// Union of many fields; `None` for an empty slice.
pub fn union_all(fields: &[ScalarField]) -> Option<ScalarField> {
    let bbox = fields
        .iter()
        .map(|f| f.bbox)
        .try_fold(None::<Aabb>, |acc, b| {
            b.map(|b| Some(acc.map_or(b, |a| a.union(&b))))
        })
        .flatten();
    let lip = fields
        .iter()
        .map(|f| f.lipschitz)
        .try_fold(0.0f64, |acc, l| l.map(|l| acc.max(l)));
    let parts: Vec<ScalarField> = fields.to_vec();
    if parts.is_empty() {
        return None;
    }
    Some(
        ScalarField::new(move |p| parts.iter().fold(f64::INFINITY, |m, f| m.min(f.eval(p))))
            .with_bbox(bbox)
            .with_lipschitz(lip),
    )
}

/// Shell of total thickness `t` around the zero set of `f`: `|f| − t/2`.
pub fn thicken_surface(f: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("thickness must be positive, got {t}")));
    }
    let a = f.clone();
    let half = 0.5 * t;
    Ok(ScalarField::new(move |p| a.eval(p).abs() - half)
        .with_bbox(f.bbox.map(|b| b.expanded(half)))
        .with_lipschitz(f.lipschitz))
}

/// Field of the solid moved by `t`: `p ↦ f(t⁻¹·p)`.
pub fn transform_field(f: &ScalarField, t: &Affine3) -> Result<ScalarField> {
    let inv = t.inverse()?;
    let a = f.clone();
    let lip = f.lipschitz.map(|l| l * inv.operator_norm());
    Ok(ScalarField::new(move |p| a.eval(&inv.apply(p)))
        .with_bbox(f.bbox.map(|b| b.transformed(t)))
        .with_lipschitz(lip))
}

/// Central-difference gradient with step `h`.
pub fn gradient(f: &ScalarField, p: &Point3, h: f64) -> Vec3 {
    let d = |axis: Vec3| (f.eval(&(p + axis * h)) - f.eval(&(p - axis * h))) / (2.0 * h);
    Vec3::new(d(Vec3::x()), d(Vec3::y()), d(Vec3::z()))
}

/// Dense field samples on an isotropic cell-corner lattice, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub origin: Point3,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub values: Vec<f64>,
}

impl VoxelGrid {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Point3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    /// Number of lattice samples strictly inside (value < 0).
    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|v| **v < 0.0).count()
    }

    /// Negative sample count times the cell volume.
    pub fn voxel_volume(&self) -> f64 {
        self.negative_count() as f64 * self.spacing.powi(3)
    }

    /// Debug dump: ASCII header `VGRID nx ny nz spacing ox oy oz\n`, then
    /// little-endian f32 values, x-fastest.
    pub fn write_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "VGRID {} {} {} {} {} {} {}",
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.spacing,
            self.origin.x,
            self.origin.y,
            self.origin.z
        )?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_dump(r: impl Read) -> Result<VoxelGrid> {
        let mut r = std::io::BufReader::new(r);
        let mut header = String::new();
        let bad = |m: &str| Error::InputFormat {
            path: "<vgrid>".into(),
            message: m.to_string(),
        };
        r.read_line(&mut header).map_err(|e| Error::io("<vgrid>", e))?;
        let parts: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
        if parts.len() != 8 || parts[0] != "VGRID" {
            return Err(bad("expected `VGRID nx ny nz spacing ox oy oz` header"));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|_| bad("bad grid dimension"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad("bad real in header"));
        let dims = [dim(parts[1])?, dim(parts[2])?, dim(parts[3])?];
        let spacing = real(parts[4])?;
        let origin = Vec3::new(real(parts[5])?, real(parts[6])?, real(parts[7])?);
        let n = dims[0] * dims[1] * dims[2];
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes).map_err(|_| bad("truncated value block"))?;
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(VoxelGrid {
            origin,
            spacing,
            dims,
            values,
        })
    }
}

/// Lattice dimensions `floor(extent / spacing) + 1` per axis.
pub fn grid_dims(bbox: &Aabb, spacing: f64) -> [usize; 3] {
    let e = bbox.extent();
    // Tolerate round-off so that e.g. extent 1.0 / spacing 0.1 gives 11, not 10.
    let n = |x: f64| (x / spacing + 1e-9).floor() as usize + 1;
    [n(e.x), n(e.y), n(e.z)]
}

pub fn sample_grid(f: &ScalarField, bbox: &Aabb, spacing: f64) -> Result<VoxelGrid> {
    sample_grid_with_budget(f, bbox, spacing, DEFAULT_MEMORY_BUDGET)
}

/// Samples `f` at every lattice corner covering `bbox`. Output is independent
/// of the rayon thread count.
pub fn sample_grid_with_budget(
    f: &ScalarField,
    bbox: &Aabb,
    spacing: f64,
    memory_budget: u64,
) -> Result<VoxelGrid> {
    if !(spacing > 0.0) {
        return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    if bbox.is_empty() {
        return Err(Error::invalid("grid bounding box is empty"));
    }
    let dims = grid_dims(bbox, spacing);
    let count = dims
        .iter()
        .try_fold(1u64, |a, d| a.checked_mul(*d as u64))
        .ok_or_else(|| Error::ResourceLimit("grid size overflows".into()))?;
    let bytes = count.saturating_mul(std::mem::size_of::<f64>() as u64);
    if bytes > memory_budget {
        return Err(Error::ResourceLimit(format!(
            "grid {}×{}×{} needs {bytes} bytes, budget is {memory_budget}",
            dims[0], dims[1], dims[2]
        )));
    }
    let origin = bbox.min;
    let mut values = vec![0.0; count as usize];
    let slab = dims[0] * dims[1];
    values
        .par_chunks_mut(slab)
        .enumerate()
        .for_each(|(k, chunk)| {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = origin + Vec3::new(i as f64, j as f64, k as f64) * spacing;
                    chunk[i + dims[0] * j] = f.eval(&p);
                }
            }
        });
    Ok(VoxelGrid {
        origin,
        spacing,
        dims,
        values,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn unit_box() -> ScalarField {
        primitive_box(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap()
    }

    fn samples(n: usize, r: f64) -> Vec<Point3> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = |a: usize| -r + 2.0 * r * a as f64 / (n - 1) as f64;
                    out.push(Vec3::new(s(i), s(j), s(k)));
                }
            }
        }
        out
    }

    #[test]
    fn box_distances() {
        let b = unit_box();
        assert_eq!(b.eval(&Vec3::zeros()), -1.0);
        assert_eq!(b.eval(&Vec3::new(2.0, 0.0, 0.0)), 1.0);
        assert!((b.eval(&Vec3::new(2.0, 2.0, 0.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert!(primitive_box(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0)).is_err());
        assert!(primitive_prism_y(0.0, 0.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn boolean_identities() {
        let b = unit_box();
        let i = intersect(&b, &b);
        let big = ScalarField::constant(1e30);
        let u = union(&b, &big);
        for p in samples(9, 3.0) {
            assert_eq!(i.eval(&p), b.eval(&p));
            assert_eq!(u.eval(&p), b.eval(&p));
        }
    }

    #[test]
    fn offset_boxes_intersection_matches_pointwise_max() {
        let a = unit_box();
        let b = primitive_box(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let i = intersect(&a, &b);
        // x = 0.5 is the middle of the shared slab x ∈ [0, 1].
        assert_eq!(i.eval(&Vec3::new(0.5, 0.0, 0.0)), -0.5);
        // Independent oracle: brute-force max over the boxes' closed forms.
        let sd = |p: &Vec3, c: f64| {
            let q = Vec3::new((p.x - c).abs() - 1.0, p.y.abs() - 1.0, p.z.abs() - 1.0);
            q.sup(&Vec3::zeros()).norm() + q.x.max(q.y).max(q.z).min(0.0)
        };
        for p in samples(21, 2.5) {
            assert_eq!(i.eval(&p), sd(&p, 0.0).max(sd(&p, 1.0)));
        }
        assert!(i.eval(&Vec3::new(0.5, 0.0, 0.0)) < 0.0);
        assert!(i.eval(&Vec3::new(-0.5, 0.0, 0.0)) > 0.0 - 1e-15);
    }

    #[test]
    fn thicken_plane() {
        let plane = ScalarField::below_plane_y(0.0);
        let shell = thicken_surface(&plane, 2.0).unwrap();
        assert_eq!(shell.eval(&Vec3::new(0.0, 0.5, 0.0)), -0.5);
        assert_eq!(shell.eval(&Vec3::new(0.0, 1.0, 0.0)), 0.0);
        assert!(thicken_surface(&plane, 0.0).is_err());
    }

    #[test]
    fn thickened_plane_volume_by_voxels() {
        let t = 0.2;
        let shell = thicken_surface(&ScalarField::below_plane_y(0.0), t).unwrap();
        let cube = primitive_box(Vec3::zeros(), Vec3::new(0.5, 0.5, 0.5)).unwrap();
        let clipped = intersect(&shell, &cube);
        let h = 0.02;
        // Cell-centered voxel count over the unit cube.
        let n = (1.0 / h) as usize;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = |a: usize| -0.5 + (a as f64 + 0.5) * h;
                    if clipped.eval(&Vec3::new(c(i), c(j), c(k))) < 0.0 {
                        count += 1;
                    }
                }
            }
        }
        let vol = count as f64 * h * h * h;
        assert!((vol - t).abs() / t < 0.03, "volume {vol}");
    }

    #[test]
    fn transform_examples() {
        let b = unit_box();
        let id = transform_field(&b, &Affine3::identity()).unwrap();
        for p in samples(7, 2.0) {
            assert_eq!(id.eval(&p), b.eval(&p));
        }
        let moved = transform_field(&b, &Affine3::translate(Vec3::new(0.0, 5.0, 0.0))).unwrap();
        assert_eq!(moved.eval(&Vec3::new(0.0, 5.0, 0.0)), b.eval(&Vec3::zeros()));

        let t = 0.4;
        let shell = thicken_surface(&ScalarField::below_plane_y(0.0), t).unwrap();
        let rot = transform_field(&shell, &Affine3::rotate_x(FRAC_PI_2)).unwrap();
        for x in [-1.0, 0.0, 0.7] {
            for y in [-2.0, 0.3, 1.5] {
                assert!(rot.eval(&Vec3::new(x, y, 0.5 * t)).abs() < 1e-12);
                assert!(rot.eval(&Vec3::new(x, y, -0.5 * t)).abs() < 1e-12);
                assert!(rot.eval(&Vec3::new(x, y, 0.0)) < 0.0);
            }
        }
        let singular = Affine3::scale(Vec3::new(1.0, 1.0, 0.0));
        assert!(transform_field(&b, &singular).is_err());
    }

    #[test]
    fn transform_lipschitz_scales_with_inverse_norm() {
        let b = unit_box();
        let t = transform_field(&b, &Affine3::scale(Vec3::new(0.5, 1.0, 1.0))).unwrap();
        assert!((t.lipschitz.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let plane = ScalarField::below_plane_y(0.0);
        let g = gradient(&plane, &Vec3::new(3.0, -1.0, 2.0), 1e-4);
        assert!((g - Vec3::y()).norm() < 1e-8);
        let s = ScalarField::sphere(Vec3::zeros(), 1.0).unwrap();
        let g = gradient(&s, &Vec3::new(2.0, 0.0, 0.0), 1e-4);
        assert!((g - Vec3::x()).norm() < 1e-6);
    }

    #[test]
    fn grid_dims_and_constant() {
        let bb = Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let g = sample_grid(&ScalarField::constant(2.5), &bb, 0.5).unwrap();
        assert_eq!(g.dims, [3, 3, 3]);
        assert!(g.values.iter().all(|v| *v == 2.5));
        assert!(sample_grid(&ScalarField::constant(1.0), &bb, 0.0).is_err());
    }

    #[test]
    fn grid_budget_enforced() {
        let bb = Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let err = sample_grid_with_budget(&ScalarField::constant(1.0), &bb, 0.01, 1024).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn sphere_volume_by_voxels() {
        let r = 1.0;
        let s = ScalarField::sphere(Vec3::zeros(), r).unwrap();
        let h = r / 40.0;
        let bb = Aabb::new(Vec3::repeat(-1.2), Vec3::repeat(1.2));
        let g = sample_grid(&s, &bb, h).unwrap();
        let exact = 4.0 / 3.0 * PI * r.powi(3);
        assert!((g.voxel_volume() - exact).abs() / exact < 0.02);
    }

    #[test]
    fn vgrid_dump_round_trip() {
        let s = ScalarField::sphere(Vec3::zeros(), 1.0).unwrap();
        let bb = Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        let g = sample_grid(&s, &bb, 0.25).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        assert!(buf.starts_with(b"VGRID 9 9 9 0.25 -1 -1 -1\n"));
        let back = VoxelGrid::read_dump(&buf[..]).unwrap();
        assert_eq!(back.dims, g.dims);
        for (a, b) in back.values.iter().zip(&g.values) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }
}
