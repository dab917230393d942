//! Point-to-triangle distance queries over a triangle soup, and vertical ray
//! crossings. Backs the deck body, the below-deck test and user shell meshes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Aabb, ScalarField};
use crate::geometry::{Point3, Vec3};

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bbox: Aabb, start: usize, end: usize },
    Inner { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Indexed triangles with a bounding-volume hierarchy and an XZ column index.
#[derive(Debug, Clone)]
pub struct TriangleSoup {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    columns: ColumnIndex,
}

impl TriangleSoup {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::invalid("triangle soup is empty"));
        }
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= vertices.len())) {
            return Err(Error::invalid(format!("triangle {t:?} indexes past the vertex list")));
        }
        let mut soup = Self {
            vertices,
            triangles,
            order: Vec::new(),
            nodes: Vec::new(),
            columns: ColumnIndex::default(),
        };
        soup.order = (0..soup.triangles.len()).collect();
        let n = soup.order.len();
        soup.build(0, n);
        soup.columns = ColumnIndex::build(&soup);
        Ok(soup)
    }

    fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    fn tri_bbox(&self, t: usize) -> Aabb {
        Aabb::from_points(self.corners(t).iter()).expect("three corners")
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let bbox = self.order[start..end]
            .iter()
            .map(|&t| self.tri_bbox(t))
            .reduce(|a, b| a.union(&b))
            .expect("nonempty range");
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bbox, start, end });
            return self.nodes.len() - 1;
        }
        let axis = bbox.extent().imax();
        let centroid = |s: &Self, t: usize| {
            let [a, b, c] = s.corners(t);
            (a[axis] + b[axis] + c[axis]) / 3.0
        };
        let mid = (start + end) / 2;
        let mut keyed: Vec<(f64, usize)> =
            self.order[start..end].iter().map(|&t| (centroid(self, t), t)).collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (slot, (_, t)) in self.order[start..end].iter_mut().zip(keyed) {
            *slot = t;
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { bbox, start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[idx] = Node::Inner { bbox, left, right };
        idx
    }

    pub fn bbox(&self) -> Aabb {
        *self.nodes[0].bbox()
    }

    /// Exact unsigned distance to the nearest triangle.
    pub fn distance(&self, p: &Point3) -> f64 {
        self.closest(p).1.sqrt()
    }

    /// Nearest point and squared distance.
    pub fn closest(&self, p: &Point3) -> (Point3, f64) {
        let mut best = (Vec3::zeros(), f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let d = node.bbox().distance(p);
            if d * d >= best.1 {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = self.corners(t);
                        let q = closest_point_on_triangle(p, &a, &b, &c);
                        let d2 = (q - p).norm_squared();
                        if d2 < best.1 {
                            best = (q, d2);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bbox().distance(p);
                    let dr = self.nodes[*right].bbox().distance(p);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }

    /// Heights where the vertical line through `(x, z)` crosses the soup, sorted.
    pub fn vertical_crossings(&self, x: f64, z: f64) -> Vec<f64> {
        self.columns.crossings(self, x, z)
    }

    /// Bounding rectangle of the soup's XZ projection as `(min_x, min_z, max_x, max_z)`.
    pub fn footprint_rect(&self) -> (f64, f64, f64, f64) {
        let b = self.bbox();
        (b.min.x, b.min.z, b.max.x, b.max.z)
    }

    /// Signed pseudo-distance for a closed mesh: exact distance, negative when a
    /// vertical ray crosses the surface an odd number of times above `p`.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        let d = self.distance(p);
        let above = self
            .vertical_crossings(p.x, p.z)
            .iter()
            .filter(|y| **y > p.y)
            .count();
        if above % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn into_signed_field(self) -> ScalarField {
        let bbox = self.bbox();
        ScalarField::new(move |p| self.signed_distance(p))
            .with_bbox(Some(bbox))
            .with_lipschitz(Some(1.0))
    }
}

/// Uniform XZ bucket grid listing the triangles whose projection overlaps each bucket.
#[derive(Debug, Clone, Default)]
struct ColumnIndex {
    min_x: f64,
    min_z: f64,
    cell: f64,
    nx: usize,
    nz: usize,
    buckets: Vec<Vec<usize>>,
}

// Deterministic off-lattice nudge so rays avoid passing exactly through shared
// edges of grid-aligned meshes.
const RAY_JITTER: (f64, f64) = (1.618_033_988_7e-9, 2.718_281_828_4e-9);

impl ColumnIndex {
    fn build(soup: &TriangleSoup) -> Self {
        let b = soup.bbox();
        let ex = (b.max.x - b.min.x).max(1e-12);
        let ez = (b.max.z - b.min.z).max(1e-12);
        let target = (soup.triangles.len() as f64).sqrt().clamp(1.0, 512.0);
        let cell = (ex.max(ez) / target).max(1e-9);
        let nx = ((ex / cell).ceil() as usize).max(1);
        let nz = ((ez / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * nz];
        for t in 0..soup.triangles.len() {
            let tb = soup.tri_bbox(t);
            let ix0 = (((tb.min.x - b.min.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let ix1 = (((tb.max.x - b.min.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let iz0 = (((tb.min.z - b.min.z) / cell).floor().max(0.0) as usize).min(nz - 1);
            let iz1 = (((tb.max.z - b.min.z) / cell).floor().max(0.0) as usize).min(nz - 1);
            for iz in iz0..=iz1 {
                for ix in ix0..=ix1 {
                    buckets[ix + nx * iz].push(t);
                }
            }
        }
        Self {
            min_x: b.min.x,
            min_z: b.min.z,
            cell,
            nx,
            nz,
            buckets,
        }
    }

    fn crossings(&self, soup: &TriangleSoup, x: f64, z: f64) -> Vec<f64> {
        let (x, z) = (x + RAY_JITTER.0, z + RAY_JITTER.1);
        let fx = (x - self.min_x) / self.cell;
        let fz = (z - self.min_z) / self.cell;
        if fx < 0.0 || fz < 0.0 || fx >= self.nx as f64 + 1e-9 || fz >= self.nz as f64 + 1e-9 {
            return Vec::new();
        }
        let ix = (fx as usize).min(self.nx - 1);
        let iz = (fz as usize).min(self.nz - 1);
        let mut out = Vec::new();
        for &t in &self.buckets[ix + self.nx * iz] {
            let [a, b, c] = soup.corners(t);
            if let Some(y) = vertical_hit(x, z, &a, &b, &c) {
                out.push(y);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Height of the triangle above `(x, z)` when its XZ projection contains that point.
fn vertical_hit(x: f64, z: f64, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let det = (b.x - a.x) * (c.z - a.z) - (c.x - a.x) * (b.z - a.z);
    if det.abs() < 1e-300 {
        return None;
    }
    let l1 = ((x - a.x) * (c.z - a.z) - (c.x - a.x) * (z - a.z)) / det;
    let l2 = ((b.x - a.x) * (z - a.z) - (x - a.x) * (b.z - a.z)) / det;
    let l0 = 1.0 - l1 - l2;
    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
        return None;
    }
    Some(l0 * a.y + l1 * b.y + l2 * c.y)
}

/// Reads `v` and `f` records of a Wavefront OBJ file; faces with more than three
/// corners are fan-triangulated. Other records are ignored.
pub fn read_obj(path: &Path) -> Result<(Vec<Point3>, Vec<[usize; 3]>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|message| Error::InputFormat {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_obj(text: &str) -> std::result::Result<(Vec<Point3>, Vec<[usize; 3]>), String> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                if c.len() != 3 {
                    return Err(format!("line {}: vertex needs three coordinates", lineno + 1));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head
                            .parse()
                            .map_err(|_| format!("line {}: bad face index `{tok}`", lineno + 1))?;
                        let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        if resolved < 0 || resolved as usize >= vertices.len() {
                            return Err(format!("line {}: face index {i} out of range", lineno + 1));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<std::result::Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(format!("line {}: face needs three corners", lineno + 1));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn cube_soup() -> TriangleSoup {
        let v: Vec<Point3> = (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let mut t = Vec::new();
        for q in quads {
            t.push([q[0], q[1], q[2]]);
            t.push([q[0], q[2], q[3]]);
        }
        TriangleSoup::new(v, t).unwrap()
    }

    #[test]
    fn bvh_matches_brute_force() {
        let soup = cube_soup();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let p = Vec3::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0));
            let brute = soup
                .triangles
                .iter()
                .map(|t| {
                    let q = closest_point_on_triangle(&p, &soup.vertices[t[0]], &soup.vertices[t[1]], &soup.vertices[t[2]]);
                    (q - p).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((soup.distance(&p) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn signed_distance_of_cube() {
        let soup = cube_soup();
        assert!((soup.signed_distance(&Vec3::new(0.5, 0.5, 0.5)) + 0.5).abs() < 1e-12);
        assert!((soup.signed_distance(&Vec3::new(0.5, 2.0, 0.5)) - 1.0).abs() < 1e-12);
        assert!(soup.signed_distance(&Vec3::new(0.25, 0.9, 0.75)) < 0.0);
        assert!(soup.signed_distance(&Vec3::new(1.5, 0.5, 0.5)) > 0.0);
    }

    #[test]
    fn obj_parsing() {
        let (v, f) = parse_obj("v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nf 1 2 3 4\n").unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }
}
