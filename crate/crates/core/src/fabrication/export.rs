use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mesh::Mesh;
use super::slice::{LayerStack, Polygon};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    Obj,
    StlAscii,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::StlAscii => "stl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerFormat {
    Svg,
    ToolpathText,
}

pub const LAYER_MANIFEST: &str = "layers.json";

pub fn obj_text(mesh: &Mesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        writeln!(s, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    s
}

pub fn stl_text(mesh: &Mesh, name: &str) -> String {
    let mut s = format!("solid {name}\n");
    for t in &mesh.triangles {
        let n = mesh.triangle_normal(t);
        writeln!(s, "  facet normal {:.6} {:.6} {:.6}", n.x, n.y, n.z).unwrap();
        s.push_str("    outer loop\n");
        for &i in t {
            let v = mesh.vertices[i as usize];
            writeln!(s, "      vertex {:.6} {:.6} {:.6}", v.x, v.y, v.z).unwrap();
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    writeln!(s, "endsolid {name}").unwrap();
    s
}

pub fn export_mesh(mesh: &Mesh, path: &Path, format: MeshFormat) -> Result<()> {
    let text = match format {
        MeshFormat::Obj => obj_text(mesh),
        MeshFormat::StlAscii => {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
            stl_text(mesh, name)
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn poly_points(p: &Polygon, sep: &str) -> String {
    p.iter().map(|q| format!("{:.6},{:.6}", q[0], q[1])).collect::<Vec<_>>().join(sep)
}

/// SVG of one layer in plan view. Plan `z` maps to SVG `-y` so the drawing is
/// not mirrored.
pub fn layer_svg(stack: &LayerStack, k: usize) -> String {
    let g = &stack.grid;
    let w = (g.nx - 1) as f64 * g.spacing;
    let h = (g.nz - 1) as f64 * g.spacing;
    let top = -(g.z0 + h);
    let layer = &stack.layers[k];
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        g.x0, top, w, h
    )
    .unwrap();
    let hatch = g.spacing * 4.0;
    writeln!(
        s,
        "  <defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"{hatch:.6}\" height=\"{hatch:.6}\" patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"{hatch:.6}\" stroke=\"#888\" stroke-width=\"{:.6}\"/></pattern></defs>",
        g.spacing * 0.5
    )
    .unwrap();
    writeln!(s, "  <title>layer {k} y={:.6}</title>", layer.y).unwrap();
    let path = |polys: &[Polygon]| -> String {
        polys
            .iter()
            .map(|p| {
                let pts: Vec<String> =
                    p.iter().map(|q| format!("{:.6},{:.6}", q[0], -q[1])).collect();
                format!("M{}Z", pts.join(" L"))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !layer.model.is_empty() {
        writeln!(
            s,
            "  <path class=\"model\" fill=\"#333\" fill-rule=\"evenodd\" d=\"{}\"/>",
            path(&layer.model)
        )
        .unwrap();
    }
    if !layer.support.is_empty() {
        writeln!(
            s,
            "  <path class=\"support\" fill=\"url(#hatch)\" stroke=\"#888\" stroke-width=\"{:.6}\" fill-rule=\"evenodd\" d=\"{}\"/>",
            g.spacing * 0.25,
            path(&layer.support)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn toolpath_text(stack: &LayerStack) -> String {
    let mut s = String::new();
    for (k, l) in stack.layers.iter().enumerate() {
        writeln!(s, "LAYER {k} {:.6}", l.y).unwrap();
        for p in &l.model {
            writeln!(s, "POLY M {}", poly_points(p, " ")).unwrap();
        }
        for p in &l.support {
            writeln!(s, "POLY S {}", poly_points(p, " ")).unwrap();
        }
    }
    s
}

#[derive(Debug, Serialize)]
struct LayerManifest<'a> {
    format: LayerFormat,
    layer_height: f64,
    layer_count: usize,
    files: &'a [String],
}

/// Writes per-layer files into `dir` plus a `layers.json` manifest, which is
/// written even when the stack has no layers. Returns the paths written.
pub fn export_layers(stack: &LayerStack, dir: &Path, format: LayerFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let write = |name: &str, text: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let mut written = Vec::new();
    match format {
        LayerFormat::Svg => {
            for k in 0..stack.layers.len() {
                let name = format!("layer_{k:04}.svg");
                written.push(write(&name, &layer_svg(stack, k))?);
                files.push(name);
            }
        }
        LayerFormat::ToolpathText if !stack.layers.is_empty() => {
            let name = "toolpath.txt".to_string();
            written.push(write(&name, &toolpath_text(stack))?);
            files.push(name);
        }
        LayerFormat::ToolpathText => {}
    }
    let manifest = LayerManifest {
        format,
        layer_height: stack.layer_height,
        layer_count: stack.layers.len(),
        files: &files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    written.push(write(LAYER_MANIFEST, &json)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::fabrication::slice::{slice_field, SliceGrid};
    use crate::field::{Aabb, ScalarField};
    use crate::geometry::{Point3, Vec3};
    use crate::mesh_distance::parse_obj;

    fn unit_cube() -> Mesh {
        let vertices = (0..8)
            .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let triangles = quads
            .iter()
            .flat_map(|q: &[u32; 4]| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Mesh { vertices, triangles }
    }

    #[test]
    fn cube_is_closed_and_outward() {
        let m = unit_cube();
        assert!(m.is_watertight());
        assert!((m.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stl_cube_dedups_to_eight_vertices() {
        let text = stl_text(&unit_cube(), "cube");
        assert_eq!(text.matches("facet normal").count(), 12);
        let verts: BTreeSet<&str> = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix("vertex "))
            .collect();
        assert_eq!(verts.len(), 8);
    }

    #[test]
    fn obj_round_trip() {
        let mut m = unit_cube();
        for v in &mut m.vertices {
            *v = *v * 0.123456789 + Vec3::new(-3.3, 1.0 / 3.0, 7.0);
        }
        let (v, f) = parse_obj(&obj_text(&m)).unwrap();
        assert_eq!(f.len(), 12);
        for (a, b) in v.iter().zip(&m.vertices) {
            assert!((a - b).abs().max() < 1e-6);
        }
    }

    #[test]
    fn empty_stack_writes_only_the_manifest() {
        let dir = std::env::temp_dir().join(format!("layers-empty-{}", std::process::id()));
        let stack = LayerStack {
            layer_height: 0.1,
            y_min: 0.0,
            grid: SliceGrid { x0: 0.0, z0: 0.0, spacing: 0.1, nx: 3, nz: 3 },
            layers: Vec::new(),
        };
        for fmt in [LayerFormat::Svg, LayerFormat::ToolpathText] {
            let written = export_layers(&stack, &dir, fmt).unwrap();
            assert_eq!(written, vec![dir.join(LAYER_MANIFEST)]);
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn toolpath_lines() {
        let s = ScalarField::sphere(Vec3::zeros(), 0.5).unwrap();
        let bb = Aabb::new(Vec3::repeat(-0.6), Vec3::repeat(0.6));
        let st = slice_field(&s, &bb, 0.4, 0.05).unwrap();
        let text = toolpath_text(&st);
        assert_eq!(text.lines().filter(|l| l.starts_with("LAYER ")).count(), 3);
        assert!(text.lines().any(|l| l.starts_with("POLY M ")));
        let svg = layer_svg(&st, 1);
        assert!(svg.contains("class=\"model\""));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = export_mesh(&unit_cube(), Path::new("/nonexistent/dir/x.obj"), MeshFormat::Obj);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
