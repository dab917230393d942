//! Scene-to-artifacts orchestration.
//!
//! Stages only decide which products are written; the geometry they describe
//! is always the full scene (deck, lattice, accumulation when a raster is
//! configured). Products land under the output directory together with a
//! `manifest.json` listing their SHA-256 digests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allometry::{accumulate, inverse_distance_raster, RasterField, UvProjection};
use crate::error::{Error, Result};
use crate::fabrication::{
    estimate_support, export::obj_text, export::stl_text, export_layers, marching_cubes, slice_field,
    slope_report, LayerStack, Mesh, MeshFormat, SlopeReport, SupportEstimate,
};
use crate::field::{sample_grid_with_budget, transform_field, Aabb, ScalarField, VoxelGrid};
use crate::geometry::{Affine3, Vec3};
use crate::lattice::{tile_lattice, HelicoidSpec, LatticeSpec, TileSpec};
use crate::mesh_distance::read_obj;
use crate::mesh_distance::TriangleSoup;
use crate::scene::{RasterConfig, RasterGenerator, Scene, ShellConfig};
use crate::span::{
    assemble_preform, bend_edges, freeze_sections, loft_deck, preform_parts, DeckSurface, PreformParts,
    ShellSpec, SpanSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Accumulate,
    Mesh,
    Slice,
    Analyze,
}

pub const ALL_STAGES: [Stage; 5] = [Stage::Generate, Stage::Accumulate, Stage::Mesh, Stage::Slice, Stage::Analyze];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Accumulate => "accumulate",
            Stage::Mesh => "mesh",
            Stage::Slice => "slice",
            Stage::Analyze => "analyze",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_STAGES
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage `{s}`")))
    }
}

/// Parses a comma-separated stage list into pipeline order without repeats.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>> {
    let mut out = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Stage::from_str)
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::invalid("stage list is empty"));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn in_stage<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        e => Error::Stage { stage: stage.name().into(), source: Box::new(e) },
    })
}

/// Geometry of a scene before accumulation.
#[derive(Debug, Clone)]
pub struct Model {
    pub deck: DeckSurface,
    pub parts: PreformParts,
    /// Lattice in world space, after the post-transform, before clipping.
    pub lattice: ScalarField,
    pub projection: UvProjection,
    /// Sampling region, padded so the zero set stays clear of its boundary.
    pub region: Aabb,
    pub spacing: f64,
}

impl Model {
    pub fn build(scene: &Scene) -> Result<Model> {
        let spec = SpanSpec {
            track: scene.track()?,
            direction: Vec3::from(scene.span.direction),
            span_length: scene.span.length,
            steps: scene.span.steps,
            bend: scene.bend()?,
        };
        let sections = freeze_sections(&spec)?;
        let deck = bend_edges(&loft_deck(&sections, scene.span.columns)?, &spec.bend)?;

        let thickness = scene.span.deck_thickness;
        let (shell, ground_y) = match &scene.shell {
            ShellConfig::Auto { ground_y } => (ShellSpec::Auto { ground_y: *ground_y }, *ground_y),
            ShellConfig::Mesh { path } => {
                let (v, t) = read_obj(path)?;
                let soup = TriangleSoup::new(v, t)?;
                let ground = soup.bbox().min.y;
                (ShellSpec::Field(soup.into_signed_field()), ground)
            }
        };
        let parts = preform_parts(&deck, thickness, &shell, ground_y)?;
        let fill = parts.footprint.bbox.expect("footprint is bounded");
        let lattice = build_lattice(scene, &fill)?;

        let body = deck.bbox().expanded(0.5 * thickness).union(&fill);
        let e = body.extent();
        let spacing = e.x.max(e.y).max(e.z) / scene.fabrication.grid_resolution as f64;
        let projection = UvProjection::from_deck(&deck, &spec.horizontal_direction())?;
        Ok(Model { deck, parts, lattice, projection, region: body.expanded(2.0 * spacing), spacing })
    }

    pub fn deck_mesh(&self) -> Mesh {
        Mesh {
            vertices: self.deck.points().to_vec(),
            triangles: self.deck.triangles().iter().map(|t| t.map(|i| i as u32)).collect(),
        }
    }
}

/// Lattice filling `fill` after the scene's post-transform: tiles are laid
/// out over the pre-image of `fill` unless repeats and origin are given.
fn build_lattice(scene: &Scene, fill: &Aabb) -> Result<ScalarField> {
    let l = &scene.lattice;
    let [rx, ry, rz] = l.transform.rotate_deg.map(f64::to_radians);
    let c = (fill.min + fill.max) * 0.5;
    let rot = Affine3::rotate_z(rz).compose(&Affine3::rotate_y(ry)).compose(&Affine3::rotate_x(rx));
    let t = Affine3::translate(c + Vec3::from(l.transform.translate))
        .compose(&rot)
        .compose(&Affine3::translate(-c));
    let pre = fill.transformed(&t.inverse()?);
    let pe = pre.extent();
    let repeats = l.repeats.unwrap_or([
        ((pe.x / l.cell - 1e-9).ceil() as usize).max(1),
        ((pe.z / l.cell - 1e-9).ceil() as usize).max(1),
    ]);
    let origin = l.origin.unwrap_or_else(|| {
        let pc = (pre.min + pre.max) * 0.5;
        [pc.x - 0.5 * l.cell * repeats[0] as f64, pc.z - 0.5 * l.cell * repeats[1] as f64]
    });
    let spec = LatticeSpec {
        tile: TileSpec {
            cell: l.cell,
            y_min: pre.min.y,
            y_max: pre.max.y,
            helicoid: HelicoidSpec {
                pitch: l.pitch,
                phase: l.phase_deg.to_radians(),
                handedness: l.handedness,
                r_max: l.r_max,
                axis: (0.0, 0.0),
                two_sided: l.two_sided,
            },
            thickness: l.thickness,
        },
        repeats: (repeats[0], repeats[1]),
        mirror: l.mirror,
        origin: (origin[0], origin[1]),
    };
    transform_field(&tile_lattice(&spec)?, &t)
}

/// Planes through the first and last frozen sections, normal to the span.
fn end_contacts(scene: &Scene) -> Result<Vec<ScalarField>> {
    let frame = scene.section_frame()?;
    let n = frame.forward;
    let d = Vec3::from(scene.span.direction).normalize();
    let start = frame.origin;
    let end = start + d * scene.span.length;
    Ok(vec![
        ScalarField::new(move |p| (p - start).dot(&n)),
        ScalarField::new(move |p| (p - end).dot(&n)),
    ])
}

/// The scene's accumulation raster, if one is configured.
pub fn scene_raster(scene: &Scene, model: &Model) -> Result<Option<RasterField>> {
    match &scene.raster {
        None => Ok(None),
        Some(RasterConfig::File(p)) => RasterField::load(p).map(Some),
        Some(RasterConfig::Generator(RasterGenerator::InverseDistance { c, r_cap, resolution })) => {
            let contacts = end_contacts(scene)?;
            inverse_distance_raster(&contacts, &model.deck, (resolution[0], resolution[1]), *c, *r_cap).map(Some)
        }
    }
}

/// `deck ∪ (accumulated lattice ∩ shell ∩ footprint)`.
pub fn final_field(scene: &Scene, model: &Model, raster: Option<&RasterField>) -> Result<ScalarField> {
    let lattice = match raster {
        Some(r) => accumulate(&model.lattice, r, &model.projection, scene.accumulate.alpha, scene.lattice.thickness)?,
        None => model.lattice.clone(),
    };
    Ok(assemble_preform(&model.parts, &lattice))
}

/// One turn of the external analysis loop: the scene with its accumulation
/// raster replaced by `raster_path`. Run the result to regenerate.
pub fn remodel_step(scene: &Scene, raster_path: &Path) -> Result<Scene> {
    RasterField::load(raster_path)?;
    let mut next = scene.clone();
    next.raster = Some(RasterConfig::File(raster_path.to_path_buf()));
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Product {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    /// Digest of the scene (without its output directory) and every file it
    /// references.
    pub inputs_sha256: String,
    pub stages: Vec<Stage>,
    pub products: Vec<Product>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub area: f64,
    pub volume: f64,
    pub watertight: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridStats {
    pub spacing: f64,
    pub dims: [usize; 3],
    pub voxel_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerStats {
    pub layer_count: usize,
    pub layer_height: f64,
    pub slice_spacing: f64,
    pub sliced_volume: f64,
    /// Smallest nonzero horizontal cross-section; layered prints are weakest
    /// across such layers.
    pub min_cross_section_area: Option<f64>,
    pub layer_areas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportStats {
    pub overhang_deg: f64,
    /// Side of the square raster cells used for the estimate.
    pub raster_cell: f64,
    pub model_volume: f64,
    pub support_volume: f64,
    pub support_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub units: String,
    pub accumulated: bool,
    pub grid: GridStats,
    pub mesh: Option<MeshStats>,
    pub slope: SlopeReport,
    pub layers: LayerStats,
    pub support: SupportStats,
}

/// Everything a run computed, for callers that want more than the files.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub grid: Option<VoxelGrid>,
    pub mesh: Option<Mesh>,
    pub support: Option<SupportEstimate>,
    pub report: Option<Report>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn inputs_digest(scene: &Scene) -> Result<String> {
    let mut s = scene.clone();
    s.output.dir = PathBuf::new();
    let mut h = Sha256::new();
    h.update(s.to_json().as_bytes());
    if let ShellConfig::Mesh { path } = &scene.shell {
        h.update(read_input(path)?);
    }
    if let Some(RasterConfig::File(path)) = &scene.raster {
        h.update(read_input(path)?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

struct Writer<'a> {
    root: &'a Path,
    products: Vec<Product>,
}

impl Writer<'_> {
    fn record(&mut self, path: &Path) -> Result<()> {
        let bytes = read_input(path)?;
        let rel = path.strip_prefix(self.root).unwrap_or(path);
        self.products.push(Product {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.root.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.record(&p)
    }
}

fn grid_bytes(g: &VoxelGrid) -> Vec<u8> {
    let mut buf = Vec::new();
    g.write_dump(&mut buf).expect("writing to memory");
    buf
}

/// Runs the selected stages of `scene`, writing into `scene.output.dir`.
pub fn run_pipeline(scene: &Scene, stages: &[Stage]) -> Result<RunOutput> {
    let want = |s: Stage| stages.contains(&s);
    let out = scene.output.dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut w = Writer { root: out, products: Vec::new() };
    let budget = scene.fabrication.memory_budget_bytes;
    let fab = &scene.fabrication;

    let model = in_stage(Stage::Generate, Model::build(scene))?;
    let spacing = model.spacing;
    if want(Stage::Generate) {
        in_stage(Stage::Generate, (|| {
            w.write("deck.obj", obj_text(&model.deck_mesh()).as_bytes())?;
            let pre = assemble_preform(&model.parts, &model.lattice);
            let g = sample_grid_with_budget(&pre, &model.region, spacing, budget)?;
            w.write("preform.vgrid", &grid_bytes(&g))
        })())?;
    }

    let raster = in_stage(Stage::Accumulate, scene_raster(scene, &model))?;
    let field = in_stage(Stage::Accumulate, final_field(scene, &model, raster.as_ref()))?;
    let need_grid = want(Stage::Accumulate) || want(Stage::Mesh) || want(Stage::Analyze);
    let grid = if need_grid {
        Some(in_stage(Stage::Accumulate, sample_grid_with_budget(&field, &model.region, spacing, budget))?)
    } else {
        None
    };
    if want(Stage::Accumulate) {
        in_stage(Stage::Accumulate, (|| {
            if let Some(r) = &raster {
                w.write("raster.rast", r.to_rast_text().as_bytes())?;
            }
            w.write("accumulated.vgrid", &grid_bytes(grid.as_ref().unwrap()))
        })())?;
    }

    let mesh = if want(Stage::Mesh) || want(Stage::Analyze) {
        Some(marching_cubes(grid.as_ref().unwrap(), 0.0))
    } else {
        None
    };
    if want(Stage::Mesh) {
        let m = mesh.as_ref().unwrap();
        let (name, text) = match fab.mesh_format {
            MeshFormat::Obj => ("mesh.obj", obj_text(m)),
            MeshFormat::StlAscii => ("mesh.stl", stl_text(m, "mesh")),
        };
        in_stage(Stage::Mesh, w.write(name, text.as_bytes()))?;
    }

    let layer_h = fab.layer_height.unwrap_or(spacing);
    // two raster cells per layer height keep the overhang disk wider than the
    // raster jitter at 45 degrees
    let slice_s = fab.slice_spacing.unwrap_or(0.5 * layer_h);
    let support = if want(Stage::Slice) || want(Stage::Analyze) {
        let stack = in_stage(Stage::Slice, slice_field(&field, &model.region, layer_h, slice_s))?;
        Some(in_stage(Stage::Slice, estimate_support(&stack, fab.overhang_deg))?)
    } else {
        None
    };
    if want(Stage::Slice) {
        let dir = out.join("layers");
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let files = in_stage(Stage::Slice, export_layers(&support.as_ref().unwrap().stack, &dir, fab.layer_format))?;
        for f in files {
            in_stage(Stage::Slice, w.record(&f))?;
        }
    }

    let report = if want(Stage::Analyze) {
        let r = in_stage(Stage::Analyze, (|| {
            let slope = slope_report(&model.deck, fab.slope_threshold_pct)?;
            let g = grid.as_ref().unwrap();
            let m = mesh.as_ref().unwrap();
            let sup = support.as_ref().unwrap();
            let report = Report {
                units: scene.units.clone(),
                accumulated: raster.is_some(),
                grid: GridStats { spacing, dims: g.dims, voxel_volume: g.voxel_volume() },
                mesh: Some(MeshStats {
                    vertices: m.vertices.len(),
                    triangles: m.triangles.len(),
                    area: m.area(),
                    volume: m.volume(),
                    watertight: m.is_watertight(),
                }),
                slope,
                layers: layer_stats(&sup.stack, slice_s),
                support: SupportStats {
                    overhang_deg: sup.overhang_deg,
                    raster_cell: slice_s,
                    model_volume: sup.model_volume,
                    support_volume: sup.support_volume,
                    support_fraction: sup.support_fraction,
                },
            };
            let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            w.write("report.json", json.as_bytes())?;
            Ok(report)
        })())?;
        Some(r)
    } else {
        None
    };

    let mut stages = stages.to_vec();
    stages.sort();
    stages.dedup();
    let manifest = Manifest { inputs_sha256: inputs_digest(scene)?, stages, products: w.products };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let mp = out.join(MANIFEST_FILE);
    fs::write(&mp, json).map_err(|e| Error::io(&mp, e))?;
    Ok(RunOutput { manifest, grid, mesh, support, report })
}

fn layer_stats(stack: &LayerStack, slice_spacing: f64) -> LayerStats {
    LayerStats {
        layer_count: stack.layers.len(),
        layer_height: stack.layer_height,
        slice_spacing,
        sliced_volume: stack.model_volume(),
        min_cross_section_area: stack.min_cross_section(),
        layer_areas: stack.layers.iter().map(|l| l.model_area()).collect(),
    }
}
