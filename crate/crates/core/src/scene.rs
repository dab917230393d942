//! Scene description: a strict JSON document holding every open parameter of a
//! run. Angles are given in degrees here and converted to radians when the
//! scene is turned into geometry.
//!
//! Unknown keys are rejected. Omitted keys take the defaults below, and a
//! parsed scene re-serializes with every default written out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allometry::RasterField;
use crate::error::{Error, Result};
use crate::fabrication::{LayerFormat, MeshFormat};
use crate::field::DEFAULT_MEMORY_BUDGET;
use crate::geometry::{Curve, Frame, Section, SectionTrack, TrackKey, Vec3};
use crate::lattice::{Handedness, MirrorRule};
use crate::span::BendProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scene {
    pub units: String,
    pub track: TrackConfig,
    pub span: SpanConfig,
    pub shell: ShellConfig,
    pub lattice: LatticeConfig,
    pub raster: Option<RasterConfig>,
    pub accumulate: AccumulateConfig,
    pub fabrication: FabricationConfig,
    pub output: OutputConfig,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            units: "m".into(),
            track: TrackConfig::default(),
            span: SpanConfig::default(),
            shell: ShellConfig::default(),
            lattice: LatticeConfig::default(),
            raster: None,
            accumulate: AccumulateConfig::default(),
            fabrication: FabricationConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Base section plus animation keys. Section curves are written in local
/// `[across, along]` coordinates of the horizontal section plane through
/// `origin`; `along` follows the span direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackConfig {
    pub origin: [f64; 3],
    pub curves: Vec<CurveConfig>,
    pub keys: Vec<KeyConfig>,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            origin: [0.0, 0.5, 0.0],
            curves: vec![CurveConfig::Segment { p0: [-1.0, 0.0], p1: [1.0, 0.0] }],
            keys: vec![
                KeyConfig::default(),
                KeyConfig { t: 1.0, translate_y: 2.0, ..KeyConfig::default() },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "type")]
pub enum CurveConfig {
    Segment {
        p0: [f64; 2],
        p1: [f64; 2],
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_deg: f64,
        end_deg: f64,
    },
    Polyline {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyConfig {
    pub t: f64,
    pub scale_z: f64,
    pub rotate_y_deg: f64,
    pub translate_y: f64,
}

impl Default for KeyConfig {
    fn default() -> Self {
        KeyConfig { t: 0.0, scale_z: 1.0, rotate_y_deg: 0.0, translate_y: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpanConfig {
    pub direction: [f64; 3],
    pub length: f64,
    /// Frozen sections along the span.
    pub steps: usize,
    /// Samples across each frozen section.
    pub columns: usize,
    /// Edge bend profile as `[u, angle_deg]` knots.
    pub bend: Vec<[f64; 2]>,
    pub deck_thickness: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            direction: [0.0, 0.0, 1.0],
            length: 8.0,
            steps: 33,
            columns: 9,
            bend: Vec::new(),
            deck_thickness: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ShellConfig {
    /// Everything between the deck and the ground plane.
    Auto { ground_y: f64 },
    /// Closed OBJ mesh; its lowest point is taken as the ground.
    Mesh { path: PathBuf },
}

impl Default for ShellConfig {
    fn default() -> Self {
        ShellConfig::Auto { ground_y: 0.0 }
    }
}

/// Rigid post-transform of the lattice about the centre of the region it fills.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeTransform {
    /// Rotations about X, then Y, then Z.
    pub rotate_deg: [f64; 3],
    pub translate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub cell: f64,
    pub pitch: f64,
    pub thickness: f64,
    pub phase_deg: f64,
    pub handedness: Handedness,
    pub r_max: f64,
    pub two_sided: bool,
    pub mirror: MirrorRule,
    /// Tile counts along X and Z; `null` covers the deck footprint.
    pub repeats: Option<[usize; 2]>,
    /// Minimum XZ corner; `null` centres the lattice on the footprint.
    pub origin: Option<[f64; 2]>,
    pub transform: LatticeTransform,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            cell: 1.0,
            pitch: 2.0,
            thickness: 0.08,
            phase_deg: 0.0,
            handedness: Handedness::Right,
            r_max: 0.75,
            two_sided: true,
            mirror: MirrorRule::CheckerboardMirrorX,
            repeats: None,
            origin: None,
            transform: LatticeTransform::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RasterConfig {
    /// PGM (P2) or `RAST` text file.
    File(PathBuf),
    Generator(RasterGenerator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RasterGenerator {
    /// Inverse distance to the two end planes of the span.
    InverseDistance {
        c: f64,
        r_cap: f64,
        resolution: [usize; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccumulateConfig {
    pub alpha: f64,
}

impl Default for AccumulateConfig {
    fn default() -> Self {
        AccumulateConfig { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FabricationConfig {
    /// Grid cells along the longest side of the sampled region.
    pub grid_resolution: usize,
    /// `null` uses the grid spacing.
    pub layer_height: Option<f64>,
    /// In-plane slicing lattice spacing; `null` uses half the layer height.
    pub slice_spacing: Option<f64>,
    pub overhang_deg: f64,
    pub slope_threshold_pct: f64,
    pub mesh_format: MeshFormat,
    pub layer_format: LayerFormat,
    pub memory_budget_bytes: u64,
}

impl Default for FabricationConfig {
    fn default() -> Self {
        FabricationConfig {
            grid_resolution: 96,
            layer_height: None,
            slice_spacing: None,
            overhang_deg: 45.0,
            slope_threshold_pct: 50.0,
            mesh_format: MeshFormat::Obj,
            layer_format: LayerFormat::Svg,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

/// Parses and validates a scene. Relative file references are resolved
/// against `base_dir` and must exist.
pub fn parse_scene(text: &str, base_dir: &Path) -> Result<Scene> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut scene: Scene = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            Error::validation(path, strip_position(&inner))
        } else {
            Error::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner),
            }
        }
    })?;
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base_dir.join(&*p);
        }
    };
    if let ShellConfig::Mesh { path } = &mut scene.shell {
        resolve(path);
    }
    if let Some(RasterConfig::File(path)) = &mut scene.raster {
        resolve(path);
    }
    if scene.output.dir.is_relative() {
        scene.output.dir = base_dir.join(&scene.output.dir);
    }
    scene.validate()?;
    Ok(scene)
}

/// Reads and parses a scene file; relative references resolve against its
/// directory.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile {
            field: "--scene".into(),
            path: path.to_path_buf(),
        },
        _ => Error::io(path, e),
    })?;
    parse_scene(&text, path.parent().unwrap_or(Path::new(".")))
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn ensure(ok: bool, path: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(path, message))
    }
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Scene {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.units.is_empty(), "units", "must not be empty")?;
        self.validate_track()?;
        self.validate_span()?;
        self.validate_lattice()?;
        if let ShellConfig::Mesh { path } = &self.shell {
            if !path.is_file() {
                return Err(Error::MissingFile { field: "shell.mesh.path".into(), path: path.clone() });
            }
        }
        if let ShellConfig::Auto { ground_y } = self.shell {
            ensure(ground_y.is_finite(), "shell.auto.ground_y", "must be finite")?;
        }
        match &self.raster {
            Some(RasterConfig::File(path)) if !path.is_file() => {
                return Err(Error::MissingFile { field: "raster.file".into(), path: path.clone() })
            }
            Some(RasterConfig::Generator(RasterGenerator::InverseDistance { c, r_cap, resolution })) => {
                let p = "raster.generator.inverse_distance";
                ensure(*c > 0.0 && c.is_finite(), format!("{p}.c"), "must be positive")?;
                ensure(*r_cap > 0.0 && r_cap.is_finite(), format!("{p}.r_cap"), "must be positive")?;
                ensure(
                    resolution[0] >= 1 && resolution[1] >= 1 && resolution[0] * resolution[1] <= 1 << 24,
                    format!("{p}.resolution"),
                    "must be at least 1x1 and at most 2^24 pixels",
                )?;
            }
            _ => {}
        }
        let a = self.accumulate.alpha;
        ensure(a >= 0.0 && a.is_finite(), "accumulate.alpha", "must be non-negative")?;
        self.validate_fabrication()?;
        ensure(!self.output.dir.as_os_str().is_empty(), "output.dir", "must not be empty")
    }

    fn validate_track(&self) -> Result<()> {
        let t = &self.track;
        ensure(finite(&t.origin), "track.origin", "must be finite")?;
        ensure(!t.curves.is_empty(), "track.curves", "needs at least one curve")?;
        for (i, c) in t.curves.iter().enumerate() {
            let path = format!("track.curves[{i}]");
            match c {
                CurveConfig::Segment { p0, p1 } => {
                    ensure(finite(p0) && finite(p1), &path, "coordinates must be finite")?;
                    ensure(p0 != p1, &path, "segment endpoints coincide")?;
                }
                CurveConfig::Arc { center, radius, start_deg, end_deg } => {
                    ensure(finite(center) && finite(&[*start_deg, *end_deg]), &path, "values must be finite")?;
                    ensure(*radius > 0.0 && radius.is_finite(), format!("{path}.radius"), "must be positive")?;
                    ensure(end_deg > start_deg, format!("{path}.end_deg"), "must exceed start_deg")?;
                    ensure(
                        end_deg - start_deg < 360.0,
                        format!("{path}.end_deg"),
                        "a deck section must be open",
                    )?;
                }
                CurveConfig::Polyline { points } => {
                    ensure(points.len() >= 2, format!("{path}.points"), "needs at least two points")?;
                    ensure(points.iter().all(|p| finite(p)), format!("{path}.points"), "must be finite")?;
                    ensure(points.first() != points.last(), format!("{path}.points"), "a deck section must be open")?;
                }
            }
        }
        ensure(!t.keys.is_empty(), "track.keys", "needs at least the key at t = 0")?;
        let k0 = t.keys[0];
        ensure(
            k0.t == 0.0 && k0.scale_z == 1.0 && k0.rotate_y_deg == 0.0 && k0.translate_y == 0.0,
            "track.keys[0]",
            "first key must be the identity at t = 0",
        )?;
        for (i, k) in t.keys.iter().enumerate() {
            let path = format!("track.keys[{i}]");
            ensure(finite(&[k.t, k.scale_z, k.rotate_y_deg, k.translate_y]), &path, "values must be finite")?;
            ensure((0.0..=1.0).contains(&k.t), format!("{path}.t"), "must lie in [0, 1]")?;
            ensure(k.scale_z > 0.0, format!("{path}.scale_z"), "must be positive")?;
            if i > 0 {
                ensure(k.t > t.keys[i - 1].t, format!("{path}.t"), "key times must increase strictly")?;
            }
        }
        Ok(())
    }

    fn validate_span(&self) -> Result<()> {
        let s = &self.span;
        ensure(finite(&s.direction), "span.direction", "must be finite")?;
        ensure(
            s.direction[0].hypot(s.direction[2]) > 1e-9,
            "span.direction",
            "needs a horizontal component",
        )?;
        ensure(s.length > 0.0 && s.length.is_finite(), "span.length", "must be positive")?;
        ensure(s.steps >= 2, "span.steps", "must be at least 2")?;
        ensure(s.columns >= 2, "span.columns", "must be at least 2")?;
        ensure(
            s.deck_thickness > 0.0 && s.deck_thickness.is_finite(),
            "span.deck_thickness",
            "must be positive",
        )?;
        for (i, k) in s.bend.iter().enumerate() {
            let path = format!("span.bend[{i}]");
            ensure(finite(k), &path, "must be finite")?;
            ensure((0.0..=1.0).contains(&k[0]), &path, "u must lie in [0, 1]")?;
            ensure(k[1].abs() < 90.0, &path, "bend angle must lie in (-90, 90) degrees")?;
            if i > 0 {
                ensure(k[0] > s.bend[i - 1][0], &path, "u must increase strictly")?;
            }
        }
        Ok(())
    }

    fn validate_lattice(&self) -> Result<()> {
        let l = &self.lattice;
        ensure(l.cell > 0.0 && l.cell.is_finite(), "lattice.cell", "must be positive")?;
        ensure(l.pitch > 0.0 && l.pitch.is_finite(), "lattice.pitch", "must be positive")?;
        ensure(
            l.thickness > 0.0 && l.thickness < 0.5 * l.cell,
            "lattice.thickness",
            "must lie in (0, cell/2)",
        )?;
        ensure(l.phase_deg.is_finite(), "lattice.phase_deg", "must be finite")?;
        ensure(l.r_max > 0.0 && l.r_max.is_finite(), "lattice.r_max", "must be positive")?;
        if let Some(r) = l.repeats {
            ensure(r[0] >= 1 && r[1] >= 1, "lattice.repeats", "must be at least [1, 1]")?;
            ensure(r[0] * r[1] <= 4096, "lattice.repeats", "at most 4096 tiles")?;
        }
        if let Some(o) = l.origin {
            ensure(finite(&o), "lattice.origin", "must be finite")?;
        }
        ensure(
            finite(&l.transform.rotate_deg) && finite(&l.transform.translate),
            "lattice.transform",
            "must be finite",
        )
    }

    fn validate_fabrication(&self) -> Result<()> {
        let f = &self.fabrication;
        ensure(
            (8..=1024).contains(&f.grid_resolution),
            "fabrication.grid_resolution",
            "must lie in [8, 1024]",
        )?;
        if let Some(h) = f.layer_height {
            ensure(h > 0.0 && h.is_finite(), "fabrication.layer_height", "must be positive")?;
        }
        if let Some(s) = f.slice_spacing {
            ensure(s > 0.0 && s.is_finite(), "fabrication.slice_spacing", "must be positive")?;
        }
        ensure(
            f.overhang_deg > 0.0 && f.overhang_deg < 90.0,
            "fabrication.overhang_deg",
            "must lie in (0, 90)",
        )?;
        ensure(
            f.slope_threshold_pct > 0.0 && f.slope_threshold_pct.is_finite(),
            "fabrication.slope_threshold_pct",
            "must be positive",
        )?;
        ensure(f.memory_budget_bytes > 0, "fabrication.memory_budget_bytes", "must be positive")
    }

    /// Frame of the base section: horizontal plane through the origin, forward
    /// along the horizontal span direction.
    pub fn section_frame(&self) -> Result<Frame> {
        let d = self.span.direction;
        Frame::new(Vec3::from(self.track.origin), Vec3::new(d[0], 0.0, d[2]), Vec3::y())
    }

    pub fn base_section(&self) -> Result<Section> {
        let frame = self.section_frame()?;
        let (right, fwd) = (frame.right(), frame.forward);
        let at = |q: &[f64; 2]| frame.origin + right * q[0] + fwd * q[1];
        let curves = self
            .track
            .curves
            .iter()
            .map(|c| match c {
                CurveConfig::Segment { p0, p1 } => Ok(Curve::segment(at(p0), at(p1))),
                CurveConfig::Arc { center, radius, start_deg, end_deg } => Curve::arc(
                    at(center),
                    *radius,
                    start_deg.to_radians(),
                    end_deg.to_radians(),
                    right,
                    fwd,
                ),
                CurveConfig::Polyline { points } => Curve::polyline(points.iter().map(at).collect()),
            })
            .collect::<Result<Vec<_>>>()?;
        Section::new(curves, frame)
    }

    pub fn track(&self) -> Result<SectionTrack> {
        let keys = self
            .track
            .keys
            .iter()
            .map(|k| TrackKey {
                t: k.t,
                scale_z: k.scale_z,
                rotate_y: k.rotate_y_deg.to_radians(),
                translate_y: k.translate_y,
            })
            .collect();
        SectionTrack::new(self.base_section()?, keys)
    }

    pub fn bend(&self) -> Result<BendProfile> {
        BendProfile::new(self.span.bend.iter().map(|k| (k[0], k[1].to_radians())).collect())
    }

    /// Loads the configured raster file, if any.
    pub fn raster_file(&self) -> Result<Option<RasterField>> {
        match &self.raster {
            Some(RasterConfig::File(p)) => RasterField::load(p).map(Some),
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scene> {
        parse_scene(text, Path::new("/tmp"))
    }

    #[test]
    fn empty_document_takes_defaults() {
        let s = parse("{}").unwrap();
        let mut d = Scene::default();
        d.output.dir = PathBuf::from("/tmp/out");
        assert_eq!(s, d);
        assert_eq!(s.lattice.cell, 1.0);
        assert_eq!(s.fabrication.overhang_deg, 45.0);
        assert!(s.track().is_ok());
    }

    #[test]
    fn negative_thickness_names_the_field() {
        let e = parse(r#"{"lattice": {"thickness": -1}}"#).unwrap_err();
        assert!(e.to_string().contains("lattice.thickness"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let e = parse(r#"{"span": {"lenght": 3}}"#).unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, Error::Validation { .. }));
        assert!(msg.contains("span") && msg.contains("lenght"), "{msg}");
    }

    #[test]
    fn wrong_type_reports_path() {
        let e = parse(r#"{"track": {"keys": [{"t": 0}, {"t": "x"}]}}"#).unwrap_err();
        assert!(e.to_string().contains("track.keys[1].t"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        match parse("{\n  \"units\": \"m\",,\n}").unwrap_err() {
            Error::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_raster_file() {
        let e = parse(r#"{"raster": {"file": "nope.pgm"}}"#).unwrap_err();
        assert!(matches!(e, Error::MissingFile { .. }));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn round_trip() {
        let text = r#"{
            "track": {"curves": [{"type": "arc", "center": [0, -1], "radius": 1.5,
                                  "start_deg": 30, "end_deg": 150}],
                      "keys": [{"t": 0}, {"t": 0.5, "scale_z": 1.4, "rotate_y_deg": 10}]},
            "lattice": {"repeats": [3, 4], "transform": {"rotate_deg": [90, 0, 0]}},
            "raster": {"generator": {"inverse_distance": {"c": 0.5, "r_cap": 4, "resolution": [32, 8]}}},
            "fabrication": {"layer_height": 0.04, "mesh_format": "stl_ascii"}
        }"#;
        let a = parse(text).unwrap();
        let b = parse(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert!(a.track().is_ok());
    }

    #[test]
    fn first_key_must_be_identity() {
        let e = parse(r#"{"track": {"keys": [{"t": 0, "translate_y": 1}]}}"#).unwrap_err();
        assert!(e.to_string().contains("track.keys[0]"));
    }

    #[test]
    fn section_is_across_the_span() {
        let s = parse(r#"{"span": {"direction": [1, 0, 0]}}"#).unwrap();
        let sec = s.base_section().unwrap();
        let pts = sec.sample(2).unwrap();
        // across = right = up x forward = -Z for a +X span
        assert!((pts[0] - Vec3::new(0.0, 0.5, 1.0)).norm() < 1e-12);
        assert!((pts[1] - Vec3::new(0.0, 0.5, -1.0)).norm() < 1e-12);
    }
}
