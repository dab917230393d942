use std::collections::HashMap;

use crate::field::{Aabb, VoxelGrid};
use crate::geometry::{Point3, Vec3};

use super::tables::{CORNERS, EDGES, TRI_TABLE};

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn corners(&self, t: &[u32; 3]) -> [Point3; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    pub fn triangle_normal(&self, t: &[u32; 3]) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    pub fn normals(&self) -> Vec<Vec3> {
        self.triangles.iter().map(|t| self.triangle_normal(t)).collect()
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Signed enclosed volume (positive for outward-facing triangles).
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter())
    }

    /// Every undirected edge is used exactly twice, once in each direction.
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Drops triangles with repeated indices or area below `1e-14`, then
    /// unreferenced vertices.
    pub fn cleanup(&mut self) {
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return false;
            }
            let [a, b, c] = t.map(|i| verts[i as usize]);
            0.5 * (b - a).cross(&(c - a)).norm() >= 1e-14
        });
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        for t in &mut self.triangles {
            for i in t.iter_mut() {
                let old = *i as usize;
                if remap[old] == u32::MAX {
                    remap[old] = kept.len() as u32;
                    kept.push(self.vertices[old]);
                }
                *i = remap[old];
            }
        }
        self.vertices = kept;
    }
}

/// Edge parameters this close to a corner snap onto it, so that near-zero
/// corner samples yield collapsed (and removable) triangles instead of slivers.
const SNAP: f64 = 1e-7;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    Corner(usize),
    Edge(usize, u8),
}

/// Marching cubes over a sampled grid at level `iso`. Samples strictly below
/// `iso` are inside. Vertices on shared cell edges are merged, so the result is
/// watertight whenever the surface stays clear of the grid boundary. Triangles
/// face outward (toward larger values).
pub fn marching_cubes(grid: &VoxelGrid, iso: f64) -> Mesh {
    let [nx, ny, nz] = grid.dims;
    let mut mesh = Mesh::default();
    if nx < 2 || ny < 2 || nz < 2 {
        return mesh;
    }
    let mut lookup: HashMap<VertexKey, u32> = HashMap::new();
    let corner_index = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut vals = [0.0; 8];
                let mut ids = [0usize; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    let id = corner_index(i + off[0], j + off[1], k + off[2]);
                    ids[c] = id;
                    vals[c] = grid.values[id];
                    if vals[c] < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let row = &TRI_TABLE[case];
                let mut tri = [0u32; 3];
                for (slot, &e) in row.iter().take_while(|e| **e >= 0).enumerate() {
                    let [c0, c1] = EDGES[e as usize];
                    // canonical direction: lower global index first
                    let (a, b) = if ids[c0] < ids[c1] { (c0, c1) } else { (c1, c0) };
                    let (va, vb) = (vals[a], vals[b]);
                    let t = (iso - va) / (vb - va);
                    let key = if t <= SNAP {
                        VertexKey::Corner(ids[a])
                    } else if t >= 1.0 - SNAP {
                        VertexKey::Corner(ids[b])
                    } else {
                        let axis = (0..3).find(|&ax| CORNERS[a][ax] != CORNERS[b][ax]).unwrap() as u8;
                        VertexKey::Edge(ids[a], axis)
                    };
                    let vid = *lookup.entry(key).or_insert_with(|| {
                        let pa = grid.point(i + CORNERS[a][0], j + CORNERS[a][1], k + CORNERS[a][2]);
                        let pb = grid.point(i + CORNERS[b][0], j + CORNERS[b][1], k + CORNERS[b][2]);
                        let p = match key {
                            VertexKey::Corner(id) if id == ids[a] => pa,
                            VertexKey::Corner(_) => pb,
                            VertexKey::Edge(..) => pa + (pb - pa) * t,
                        };
                        mesh.vertices.push(p);
                        (mesh.vertices.len() - 1) as u32
                    });
                    tri[slot % 3] = vid;
                    if slot % 3 == 2 {
                        mesh.triangles.push(tri);
                    }
                }
            }
        }
    }
    mesh.cleanup();
    mesh
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::{sample_grid, ScalarField};

    #[test]
    fn all_positive_grid_is_empty() {
        let bb = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let g = sample_grid(&ScalarField::constant(1.0), &bb, 0.25).unwrap();
        assert!(marching_cubes(&g, 0.0).is_empty());
    }

    #[test]
    fn sphere_area_and_volume() {
        let r = 1.0;
        let s = ScalarField::sphere(Vec3::zeros(), r).unwrap();
        let bb = Aabb::new(Vec3::repeat(-1.25), Vec3::repeat(1.25));
        let g = sample_grid(&s, &bb, r / 48.0).unwrap();
        let m = marching_cubes(&g, 0.0);
        assert!(m.is_watertight());
        let area = 4.0 * PI * r * r;
        let vol = 4.0 / 3.0 * PI * r.powi(3);
        assert!((m.area() - area).abs() / area < 0.02, "area {}", m.area());
        assert!((m.volume() - vol).abs() / vol < 0.01, "volume {}", m.volume());
    }

    #[test]
    fn plane_normals_are_parallel() {
        let f = ScalarField::new(|p| p.y - 0.4037);
        let bb = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let g = sample_grid(&f, &bb, 0.1).unwrap();
        let m = marching_cubes(&g, 0.0);
        assert!(!m.is_empty());
        for n in m.normals() {
            assert!((n - Vec3::y()).norm() < 1e-6);
        }
    }

    #[test]
    fn exact_zero_corners_stay_watertight() {
        // the surface passes exactly through lattice points
        let f = ScalarField::new(|p| (p - Vec3::repeat(0.5)).abs().max() - 0.25);
        let bb = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let g = sample_grid(&f, &bb, 0.125).unwrap();
        let m = marching_cubes(&g, 0.0);
        assert!(m.is_watertight());
        // zero samples count as outside, so edges and corners are chamfered by
        // one step c: each corner cell keeps only a c^3/6 tetrahedron
        let (l, c) = (0.5f64, 0.125f64);
        let expected = l.powi(3) - 6.0 * c * c * (l - 2.0 * c) - 8.0 * (5.0 / 6.0) * c.powi(3);
        assert!((m.volume() - expected).abs() < 1e-12, "{}", m.volume());
    }

    #[test]
    fn deterministic_output() {
        let s = ScalarField::sphere(Vec3::new(0.1, 0.2, -0.1), 0.7).unwrap();
        let bb = Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        let g = sample_grid(&s, &bb, 0.05).unwrap();
        assert_eq!(marching_cubes(&g, 0.0), marching_cubes(&g, 0.0));
    }
}
