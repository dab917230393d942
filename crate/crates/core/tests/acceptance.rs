//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rheotome::allometry::{accumulate, idw_interpolate, RasterField, UvProjection};
use rheotome::fabrication::{estimate_support, marching_cubes, slice_field, slope_report};
use rheotome::field::{intersect, primitive_box, sample_grid, transform_field, union, Aabb, ScalarField};
use rheotome::geometry::{Affine3, Curve, Frame, Section, SectionTrack, TrackKey, Vec3};
use rheotome::lattice::{
    helicoid_field, rheotomic_tile, tile_lattice, Handedness, HelicoidSpec, LatticeSpec, MirrorRule, TileSpec,
};
use rheotome::pipeline::{final_field, run_pipeline, Model, ALL_STAGES, MANIFEST_FILE};
use rheotome::scene::load_scene;
use rheotome::span::{freeze_sections, loft_deck, BendProfile, SpanSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, f64);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes")
}

fn helicoid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let spec = HelicoidSpec {
            pitch: rng.gen_range(0.5..6.0),
            phase: rng.gen_range(-PI..PI),
            handedness: if rng.gen_bool(0.5) { Handedness::Right } else { Handedness::Left },
            r_max: rng.gen_range(0.2..2.0),
            axis: (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            two_sided: true,
        };
        let f = helicoid_field(&spec).map_err(|e| e.to_string())?;
        let s = rng.gen_range(-spec.r_max..spec.r_max);
        let y = rng.gen_range(-10.0..10.0);
        let bound = 1e-6 * (1.0 + spec.wavenumber().abs() * spec.r_max);
        worst = worst.max(f.eval(&spec.point(s, y)).abs() / bound);
    }
    check(worst <= 1.0, format!("max |d| / bound = {worst:.3e} over 500 points"))
}

fn csg_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = ScalarField::sphere(Vec3::new(0.2, 0.0, -0.1), 0.8).unwrap();
    let b = primitive_box(Vec3::new(-0.3, 0.1, 0.2), Vec3::new(0.5, 0.7, 0.4)).unwrap();
    let c = rheotomic_tile(&TileSpec {
        cell: 1.0,
        y_min: -1.0,
        y_max: 1.0,
        helicoid: HelicoidSpec {
            pitch: 1.5,
            phase: 0.3,
            handedness: Handedness::Right,
            r_max: 0.75,
            axis: (0.0, 0.0),
            two_sided: true,
        },
        thickness: 0.1,
    })
    .unwrap();
    let t = Affine3::translate(Vec3::new(0.3, -0.2, 0.5))
        .compose(&Affine3::rotate_y(0.7))
        .compose(&Affine3::rotate_x(-0.4))
        .compose(&Affine3::scale(Vec3::new(1.3, 0.8, 1.1)));
    let there = transform_field(&a, &t).unwrap();
    let back = transform_field(&there, &t.inverse().unwrap()).unwrap();
    let (ab, ba) = (union(&a, &b), union(&b, &a));
    let (iab, iba) = (intersect(&a, &b), intersect(&b, &a));
    let (u1, u2) = (union(&ab, &c), union(&a, &union(&b, &c)));
    let (i1, i2) = (intersect(&iab, &c), intersect(&a, &intersect(&b, &c)));
    let (uaa, iaa) = (union(&a, &a), intersect(&a, &a));
    let mut worst_rt = 0.0f64;
    for _ in 0..10_000 {
        let p = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let exact = [
            (ab.eval(&p), ba.eval(&p)),
            (iab.eval(&p), iba.eval(&p)),
            (u1.eval(&p), u2.eval(&p)),
            (i1.eval(&p), i2.eval(&p)),
            (uaa.eval(&p), a.eval(&p)),
            (iaa.eval(&p), a.eval(&p)),
        ];
        if let Some((x, y)) = exact.iter().find(|(x, y)| x != y) {
            return Err(format!("boolean identity broken at {p:?}: {x} vs {y}"));
        }
        worst_rt = worst_rt.max((back.eval(&p) - a.eval(&p)).abs());
    }
    check(worst_rt <= 1e-9, format!("booleans exact on 1e4 points, transform round trip {worst_rt:.2e}"))
}

fn marching_cubes_sphere() -> Outcome {
    let r = 1.0;
    let s = ScalarField::sphere(Vec3::zeros(), r).unwrap();
    let bb = Aabb::new(Vec3::repeat(-1.2), Vec3::repeat(1.2));
    let g = sample_grid(&s, &bb, r / 48.0).map_err(|e| e.to_string())?;
    let m = marching_cubes(&g, 0.0);
    let area_err = (m.area() - 4.0 * PI).abs() / (4.0 * PI);
    let vol_err = (m.volume() - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
    check(
        area_err < 0.02 && vol_err < 0.01 && m.is_watertight(),
        format!("area err {:.3}%, volume err {:.3}%, watertight {}", area_err * 100.0, vol_err * 100.0, m.is_watertight()),
    )
}

fn plane_projection() -> UvProjection {
    UvProjection::new(Vec3::new(-1.5, 0.0, -1.5), Vec3::x(), 3.0, 3.0).unwrap()
}

fn accumulation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let proj = plane_projection();
    let body = rheotomic_tile(&TileSpec {
        cell: 2.0,
        y_min: -1.0,
        y_max: 1.0,
        helicoid: HelicoidSpec {
            pitch: 2.0,
            phase: 0.0,
            handedness: Handedness::Right,
            r_max: 1.5,
            axis: (0.0, 0.0),
            two_sided: true,
        },
        thickness: 0.15,
    })
    .unwrap();
    let bb = Aabb::new(Vec3::repeat(-1.2), Vec3::repeat(1.2));
    let spacing = 2.4 / 95.0;

    let noise = RasterField::new(24, 24, (0..576).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let same = accumulate(&body, &noise, &proj, 0.0, 0.15).unwrap();
    let g0 = sample_grid(&body, &bb, spacing).unwrap();
    let g1 = sample_grid(&same, &bb, spacing).unwrap();
    if g0.values.iter().zip(&g1.values).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err("alpha = 0 changed the field".into());
    }

    let (alpha, t0, radius) = (0.5, 0.2, 1.0);
    let sphere = ScalarField::sphere(Vec3::zeros(), radius).unwrap();
    let ones = RasterField::constant(8, 8, 1.0).unwrap();
    let grown = accumulate(&sphere, &ones, &proj, alpha, t0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            .try_normalize(1e-6)
            .unwrap_or_else(Vec3::x);
        let (mut lo, mut hi) = (0.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if grown.eval(&(d * mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((0.5 * (lo + hi) - (radius + alpha * t0)).abs());
    }
    if worst > 1e-6 {
        return Err(format!("uniform offset error {worst:.2e}"));
    }

    let a = RasterField::new(24, 24, (0..576).map(|_| rng.gen_range(0.0..0.5)).collect()).unwrap();
    let b = RasterField::new(24, 24, a.values().iter().map(|v| v + rng.gen_range(0.0..0.5)).collect()).unwrap();
    let grid = Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
    let step = 2.0 / 95.0;
    let va = sample_grid(&accumulate(&body, &a, &proj, 1.0, 0.15).unwrap(), &grid, step).unwrap().voxel_volume();
    let vb = sample_grid(&accumulate(&body, &b, &proj, 1.0, 0.15).unwrap(), &grid, step).unwrap().voxel_volume();
    check(
        va <= vb,
        format!("alpha=0 bit-identical, offset err {worst:.2e}, volume {va:.4} <= {vb:.4} on 96^3"),
    )
}

fn idw() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<((f64, f64), f64)> = (0..30)
        .map(|_| ((rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), rng.gen_range(-3.0..3.0)))
        .collect();
    for &(p, v) in &samples {
        if idw_interpolate(&samples, 2.0, p) != v {
            return Err(format!("not exact at sample {p:?}"));
        }
    }
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..10_000 {
        let q = (rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5));
        let power = rng.gen_range(0.5..4.0);
        let v = idw_interpolate(&samples, power, q);
        if !(lo <= v && v <= hi) {
            return Err(format!("{v} outside [{lo}, {hi}] at {q:?}"));
        }
    }
    check(true, "exact at 30 samples, bounded on 1e4 queries".into())
}

fn ramp_deck(rise: f64, run: f64) -> rheotome::span::DeckSurface {
    let frame = Frame::new(Vec3::zeros(), Vec3::z(), Vec3::y()).unwrap();
    let sec = Section::new(vec![Curve::segment(Vec3::new(-0.5, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0))], frame).unwrap();
    let keys = vec![TrackKey::identity_at(0.0), TrackKey { translate_y: rise, ..TrackKey::identity_at(1.0) }];
    let spec = SpanSpec {
        track: SectionTrack::new(sec, keys).unwrap(),
        direction: Vec3::z(),
        span_length: run,
        steps: 21,
        bend: BendProfile::zero(),
    };
    loft_deck(&freeze_sections(&spec).unwrap(), 5).unwrap()
}

fn slope_definition() -> Outcome {
    let ramp = slope_report(&ramp_deck(1.0, 2.0), 50.0).map_err(|e| e.to_string())?;
    let cells: Vec<f64> = ramp.along.iter().flatten().copied().collect();
    let ramp_ok = cells.iter().all(|s| (s - 50.0).abs() <= 0.1);
    let flat = slope_report(&ramp_deck(0.0, 2.0), 50.0).map_err(|e| e.to_string())?;
    let scene = load_scene(&scenes_dir().join("deney1.json")).map_err(|e| e.to_string())?;
    let model = Model::build(&scene).map_err(|e| e.to_string())?;
    let steep = slope_report(&model.deck, 50.0).map_err(|e| e.to_string())?;
    check(
        ramp_ok && flat.max_slope_pct == 0.0 && !steep.regions.is_empty(),
        format!(
            "ramp {:.3}%..{:.3}%, flat {}%, deney1 max {:.1}% with {} flagged region(s)",
            cells.iter().copied().fold(f64::INFINITY, f64::min),
            cells.iter().copied().fold(0.0, f64::max),
            flat.max_slope_pct,
            steep.max_slope_pct,
            steep.regions.len()
        ),
    )
}

/// 2×2 lattice of self-supporting vertical helicoid tiles filling a cube of
/// side 2, and the same cube rotated 90 degrees about X.
fn orientation_pair() -> (ScalarField, ScalarField, Aabb) {
    let spec = LatticeSpec {
        tile: TileSpec {
            cell: 1.0,
            y_min: 0.0,
            y_max: 2.0,
            helicoid: HelicoidSpec {
                pitch: 6.0,
                phase: 0.0,
                handedness: Handedness::Right,
                r_max: 0.75,
                axis: (0.0, 0.0),
                two_sided: true,
            },
            thickness: 0.1,
        },
        repeats: (2, 2),
        mirror: MirrorRule::CheckerboardMirrorX,
        origin: (0.0, 0.0),
    };
    let vertical = tile_lattice(&spec).unwrap();
    let c = Vec3::repeat(1.0);
    let t = Affine3::translate(c).compose(&Affine3::rotate_x(FRAC_PI_2)).compose(&Affine3::translate(-c));
    let rotated = transform_field(&vertical, &t).unwrap();
    (vertical, rotated, Aabb::new(Vec3::zeros(), Vec3::repeat(2.0)))
}

fn support_fraction(f: &ScalarField, bb: &Aabb, h: f64, s: f64) -> Result<f64, String> {
    let stack = slice_field(f, bb, h, s).map_err(|e| e.to_string())?;
    Ok(estimate_support(&stack, 45.0).map_err(|e| e.to_string())?.support_fraction)
}

fn support_orientation() -> Outcome {
    let (vertical, rotated, bb) = orientation_pair();
    let h = 1.0 / 32.0;
    let fv = support_fraction(&vertical, &bb, h, h / 2.0)?;
    let fr = support_fraction(&rotated, &bb, h, h / 2.0)?;
    check(fv < fr && fv <= 0.05, format!("vertical {fv:.4} < rotated {fr:.4}, h = cell/32"))
}

fn scale_invariance() -> Outcome {
    let (_, rotated, bb) = orientation_pair();
    let s = 5.0;
    let big = transform_field(&rotated, &Affine3::scale(Vec3::repeat(s))).unwrap();
    let big_bb = Aabb::new(bb.min * s, bb.max * s);
    let h = 1.0 / 32.0;
    let f1 = support_fraction(&rotated, &bb, h, h / 2.0)?;
    let f5 = support_fraction(&big, &big_bb, h * s, h * s / 2.0)?;
    let rel = (f5 - f1).abs() / f1;
    check(rel < 0.01, format!("fraction {f1:.5} vs {f5:.5} at x5, rel change {:.3}%", rel * 100.0))
}

fn determinism() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for name in ["deney1", "deney2", "deney3"] {
        let mut scene = load_scene(&scenes_dir().join(format!("{name}.json"))).map_err(|e| e.to_string())?;
        let mut manifests = Vec::new();
        let mut slowest = Duration::ZERO;
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            scene.output.dir = dir.path().to_path_buf();
            let t = Instant::now();
            pool.install(|| run_pipeline(&scene, &ALL_STAGES)).map_err(|e| format!("{name}: {e}"))?;
            slowest = slowest.max(t.elapsed());
            manifests.push(std::fs::read(dir.path().join(MANIFEST_FILE)).map_err(|e| e.to_string())?);
        }
        if manifests[0] != manifests[1] {
            return Err(format!("{name}: manifests differ"));
        }
        if slowest > Duration::from_secs(120) {
            return Err(format!("{name}: {:.1} s exceeds 120 s", slowest.as_secs_f64()));
        }
        details.push(format!("{name} {:.1}s", slowest.as_secs_f64()));
    }
    check(true, format!("identical manifests, single thread: {}", details.join(", ")))
}

fn mass_balance() -> Outcome {
    let scene = load_scene(&scenes_dir().join("deney1.json")).map_err(|e| e.to_string())?;
    let model = Model::build(&scene).map_err(|e| e.to_string())?;
    let f = final_field(&scene, &model, None).map_err(|e| e.to_string())?;
    let s = model.spacing;
    let vox = sample_grid(&f, &model.region, s).map_err(|e| e.to_string())?.voxel_volume();
    let sliced = slice_field(&f, &model.region, s, s).map_err(|e| e.to_string())?.model_volume();
    let rel = (sliced - vox).abs() / vox;
    check(rel < 0.03, format!("sliced {sliced:.4} vs voxel {vox:.4}, rel {:.2}%", rel * 100.0))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 helicoid oracle", helicoid_oracle, 1.0),
        ("2 CSG algebra", csg_algebra, 1.0),
        ("3 marching cubes sphere", marching_cubes_sphere, 10.0),
        ("4 accumulation identity/offset/monotonicity", accumulation, 30.0),
        ("5 IDW properties", idw, 1.0),
        ("6 slope definition", slope_definition, 5.0),
        ("7 support orientation", support_orientation, 60.0),
        ("8 scale invariance", scale_invariance, f64::INFINITY),
        ("9 end-to-end determinism", determinism, f64::INFINITY),
        ("10 slicing mass balance", mass_balance, f64::INFINITY),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) if secs <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.2} s, limit {limit} s")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {detail} [{secs:.2} s]", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
