//! Points, affine maps, planar curves and time-keyed section tracks.
//!
//! World convention: right-handed, Y is vertical-up, units are meters.
//! Angles are radians throughout the library.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Point3 = Vec3;

const SINGULAR_EPS: f64 = 1e-12;

/// Linear 3×3 part plus translation: `p ↦ linear·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine3 {
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for Affine3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Affine3 {
    pub fn new(linear: Matrix3<f64>, translation: Vec3) -> Self {
        Self {
            linear,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vec3::zeros())
    }

    pub fn translate(t: Vec3) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    pub fn scale(s: Vec3) -> Self {
        Self::new(Matrix3::from_diagonal(&s), Vec3::zeros())
    }

    /// Rotation about +X: `y' = y·cos − z·sin`, `z' = y·sin + z·cos`.
    pub fn rotate_x(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            Vec3::zeros(),
        )
    }

    /// Rotation about +Y: `x' = x·cos + z·sin`, `z' = −x·sin + z·cos`.
    pub fn rotate_y(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            Vec3::zeros(),
        )
    }

    /// Rotation about +Z: `x' = x·cos − y·sin`, `y' = x·sin + y·cos`.
    pub fn rotate_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            Vec3::zeros(),
        )
    }

    /// Maps local coordinates of `frame` to world coordinates.
    pub fn from_frame(frame: &Frame) -> Self {
        Self::new(
            Matrix3::from_columns(&[frame.right(), frame.up, frame.forward]),
            frame.origin,
        )
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.linear * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.linear * v
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Affine3) -> Affine3 {
        Affine3::new(
            self.linear * inner.linear,
            self.linear * inner.translation + self.translation,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn inverse(&self) -> Result<Affine3> {
        if self.determinant().abs() <= SINGULAR_EPS {
            return Err(Error::invalid("affine transform is singular"));
        }
        let inv = self
            .linear
            .try_inverse()
            .ok_or_else(|| Error::invalid("affine transform is singular"))?;
        Ok(Affine3::new(inv, -(inv * self.translation)))
    }

    /// Spectral norm of the linear part.
    pub fn operator_norm(&self) -> f64 {
        self.linear.singular_values().max()
    }
}

/// `linear·p + translation`.
pub fn affine_apply(t: &Affine3, p: &Point3) -> Point3 {
    t.apply(p)
}

/// Orthonormal frame. Local X is `up × forward`, local Y is `up`, local Z is `forward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Point3,
    pub forward: Vec3,
    pub up: Vec3,
}

impl Frame {
    pub fn new(origin: Point3, forward: Vec3, up: Vec3) -> Result<Self> {
        let up_n = up.try_normalize(1e-12).ok_or_else(|| Error::invalid("frame up is zero"))?;
        let f = forward - up_n * forward.dot(&up_n);
        let f_n = f
            .try_normalize(1e-12)
            .ok_or_else(|| Error::invalid("frame forward is parallel to up"))?;
        Ok(Self {
            origin,
            forward: f_n,
            up: up_n,
        })
    }

    pub fn world() -> Self {
        Self {
            origin: Vec3::zeros(),
            forward: Vec3::z(),
            up: Vec3::y(),
        }
    }

    pub fn right(&self) -> Vec3 {
        self.up.cross(&self.forward)
    }

    /// Image under an affine map. Axes are re-orthonormalized; a section's plane
    /// normal is always its up axis.
    pub fn transformed(&self, t: &Affine3) -> Frame {
        let origin = t.apply(&self.origin);
        let right = t.apply_vector(&self.right());
        let forward = t.apply_vector(&self.forward);
        let up = forward.cross(&right);
        Frame::new(origin, forward, up).unwrap_or(Frame {
            origin,
            ..*self
        })
    }
}

/// A planar or spatial curve. Conic variants are parameterized as
/// `center + r·(cos a·axis_u + sin a·axis_v)`; the axes need not remain
/// orthonormal after an affine map, which keeps the family closed under
/// [`Curve::transformed`].
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Segment {
        p0: Point3,
        p1: Point3,
    },
    Arc {
        center: Point3,
        radius: f64,
        start: f64,
        end: f64,
        axis_u: Vec3,
        axis_v: Vec3,
    },
    Circle {
        center: Point3,
        radius: f64,
        axis_u: Vec3,
        axis_v: Vec3,
    },
    Polyline(Vec<Point3>),
    Hermite {
        p0: Point3,
        t0: Vec3,
        p1: Point3,
        t1: Vec3,
    },
}

impl Curve {
    pub fn segment(p0: Point3, p1: Point3) -> Self {
        Curve::Segment { p0, p1 }
    }

    pub fn circle(center: Point3, radius: f64, axis_u: Vec3, axis_v: Vec3) -> Result<Self> {
        let c = Curve::Circle {
            center,
            radius,
            axis_u,
            axis_v,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn arc(
        center: Point3,
        radius: f64,
        start: f64,
        end: f64,
        axis_u: Vec3,
        axis_v: Vec3,
    ) -> Result<Self> {
        let c = Curve::Arc {
            center,
            radius,
            start,
            end,
            axis_u,
            axis_v,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn polyline(points: Vec<Point3>) -> Result<Self> {
        let c = Curve::Polyline(points);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Curve::Circle { radius, .. } if !(*radius > 0.0) => {
                Err(Error::invalid("circle radius must be positive"))
            }
            Curve::Arc {
                radius, start, end, ..
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("arc radius must be positive"));
                }
                let span = end - start;
                if !(span > 0.0 && span <= TAU + 1e-12) {
                    return Err(Error::invalid("arc angular span must lie in (0, 2π]"));
                }
                Ok(())
            }
            Curve::Polyline(pts) if pts.len() < 2 => {
                Err(Error::invalid("polyline needs at least two points"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Curve::Circle { .. })
    }

    /// Native parameter range: angles for conics, `[0, 1]` otherwise.
    pub fn param_range(&self) -> (f64, f64) {
        match self {
            Curve::Circle { .. } => (0.0, TAU),
            Curve::Arc { start, end, .. } => (*start, *end),
            _ => (0.0, 1.0),
        }
    }

    /// Point at a native parameter value (see [`Curve::param_range`]).
    pub fn point_at(&self, u: f64) -> Point3 {
        match self {
            Curve::Segment { p0, p1 } => p0 + (p1 - p0) * u,
            Curve::Circle {
                center,
                radius,
                axis_u,
                axis_v,
            }
            | Curve::Arc {
                center,
                radius,
                axis_u,
                axis_v,
                ..
            } => {
                let (s, c) = u.sin_cos();
                center + (axis_u * c + axis_v * s) * *radius
            }
            Curve::Polyline(pts) => {
                let segs = (pts.len() - 1) as f64;
                let x = (u.clamp(0.0, 1.0) * segs).min(segs);
                let i = (x.floor() as usize).min(pts.len() - 2);
                let w = x - i as f64;
                pts[i] * (1.0 - w) + pts[i + 1] * w
            }
            Curve::Hermite { p0, t0, p1, t1 } => {
                let u2 = u * u;
                let u3 = u2 * u;
                let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
                let h10 = u3 - 2.0 * u2 + u;
                let h01 = -2.0 * u3 + 3.0 * u2;
                let h11 = u3 - u2;
                p0 * h00 + t0 * h10 + p1 * h01 + t1 * h11
            }
        }
    }

    /// Derivative with respect to the native parameter.
    pub fn tangent_at(&self, u: f64) -> Vec3 {
        match self {
            Curve::Segment { p0, p1 } => p1 - p0,
            Curve::Circle {
                radius,
                axis_u,
                axis_v,
                ..
            }
            | Curve::Arc {
                radius,
                axis_u,
                axis_v,
                ..
            } => {
                let (s, c) = u.sin_cos();
                (axis_v * c - axis_u * s) * *radius
            }
            Curve::Polyline(pts) => {
                let segs = (pts.len() - 1) as f64;
                let i = ((u.clamp(0.0, 1.0) * segs).floor() as usize).min(pts.len() - 2);
                (pts[i + 1] - pts[i]) * segs
            }
            Curve::Hermite { p0, t0, p1, t1 } => {
                let u2 = u * u;
                p0 * (6.0 * u2 - 6.0 * u)
                    + t0 * (3.0 * u2 - 4.0 * u + 1.0)
                    + p1 * (-6.0 * u2 + 6.0 * u)
                    + t1 * (3.0 * u2 - 2.0 * u)
            }
        }
    }

    /// Point at a normalized parameter `s ∈ [0, 1]`.
    pub fn point_at_normalized(&self, s: f64) -> Point3 {
        let (a, b) = self.param_range();
        self.point_at(a + (b - a) * s)
    }

    pub fn transformed(&self, t: &Affine3) -> Curve {
        match self {
            Curve::Segment { p0, p1 } => Curve::Segment {
                p0: t.apply(p0),
                p1: t.apply(p1),
            },
            Curve::Arc {
                center,
                radius,
                start,
                end,
                axis_u,
                axis_v,
            } => Curve::Arc {
                center: t.apply(center),
                radius: *radius,
                start: *start,
                end: *end,
                axis_u: t.apply_vector(axis_u),
                axis_v: t.apply_vector(axis_v),
            },
            Curve::Circle {
                center,
                radius,
                axis_u,
                axis_v,
            } => Curve::Circle {
                center: t.apply(center),
                radius: *radius,
                axis_u: t.apply_vector(axis_u),
                axis_v: t.apply_vector(axis_v),
            },
            Curve::Polyline(pts) => Curve::Polyline(pts.iter().map(|p| t.apply(p)).collect()),
            Curve::Hermite { p0, t0, p1, t1 } => Curve::Hermite {
                p0: t.apply(p0),
                t0: t.apply_vector(t0),
                p1: t.apply(p1),
                t1: t.apply_vector(t1),
            },
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Curve::Segment { .. } => 0,
            Curve::Arc { .. } => 1,
            Curve::Circle { .. } => 2,
            Curve::Polyline(_) => 3,
            Curve::Hermite { .. } => 4,
        }
    }
}

/// `n` samples at equal parameter spacing. Open curves include both endpoints;
/// circles start at angle 0 and do not repeat the first point.
pub fn sample_curve(c: &Curve, n: usize) -> Result<Vec<Point3>> {
    if n < 2 {
        return Err(Error::invalid(format!("sample count {n} < 2")));
    }
    let (a, b) = c.param_range();
    let denom = if c.is_closed() { n } else { n - 1 } as f64;
    Ok((0..n)
        .map(|i| {
            if !c.is_closed() && i == n - 1 {
                c.point_at(b)
            } else {
                c.point_at(a + (b - a) * (i as f64 / denom))
            }
        })
        .collect())
}

/// Coplanar curves in a section plane whose normal is the frame's up axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub curves: Vec<Curve>,
    pub frame: Frame,
}

impl Section {
    pub fn new(curves: Vec<Curve>, frame: Frame) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::invalid("section has no curves"));
        }
        for c in &curves {
            c.validate()?;
        }
        let s = Self { curves, frame };
        s.check_coplanar(1e-9)?;
        Ok(s)
    }

    pub fn check_coplanar(&self, tol: f64) -> Result<()> {
        for c in &self.curves {
            for p in sample_curve(c, 16)? {
                let off = (p - self.frame.origin).dot(&self.frame.up);
                if off.abs() > tol {
                    return Err(Error::invalid(format!(
                        "section curve leaves the section plane by {off:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn transformed(&self, t: &Affine3) -> Section {
        Section {
            curves: self.curves.iter().map(|c| c.transformed(t)).collect(),
            frame: self.frame.transformed(t),
        }
    }

    /// `m` samples spread over the concatenated curves, each curve taking an
    /// equal share of the normalized parameter.
    pub fn sample(&self, m: usize) -> Result<Vec<Point3>> {
        if self.curves.len() == 1 {
            return sample_curve(&self.curves[0], m);
        }
        if m < 2 {
            return Err(Error::invalid(format!("sample count {m} < 2")));
        }
        let k = self.curves.len();
        Ok((0..m)
            .map(|j| {
                let v = j as f64 / (m - 1) as f64 * k as f64;
                let ci = (v.floor() as usize).min(k - 1);
                self.curves[ci].point_at_normalized(v - ci as f64)
            })
            .collect())
    }

    /// Same curve count and kinds in the same order.
    pub fn compatible_with(&self, other: &Section) -> bool {
        self.curves.len() == other.curves.len()
            && self
                .curves
                .iter()
                .zip(&other.curves)
                .all(|(a, b)| match (a, b) {
                    (Curve::Polyline(pa), Curve::Polyline(pb)) => pa.len() == pb.len(),
                    _ => a.kind() == b.kind(),
                })
    }
}

/// Transform values at one key time. Applied as scale along local Z, then
/// rotation about local Y, then translation along local Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackKey {
    pub t: f64,
    pub scale_z: f64,
    pub rotate_y: f64,
    pub translate_y: f64,
}

impl TrackKey {
    pub fn identity_at(t: f64) -> Self {
        Self {
            t,
            scale_z: 1.0,
            rotate_y: 0.0,
            translate_y: 0.0,
        }
    }

    pub fn local_affine(&self) -> Affine3 {
        Affine3::translate(Vec3::new(0.0, self.translate_y, 0.0))
            .compose(&Affine3::rotate_y(self.rotate_y))
            .compose(&Affine3::scale(Vec3::new(1.0, 1.0, self.scale_z)))
    }

    fn lerp(a: &TrackKey, b: &TrackKey, t: f64) -> TrackKey {
        let w = (t - a.t) / (b.t - a.t);
        let mix = |x: f64, y: f64| (1.0 - w) * x + w * y;
        TrackKey {
            t,
            scale_z: mix(a.scale_z, b.scale_z),
            rotate_y: mix(a.rotate_y, b.rotate_y),
            translate_y: mix(a.translate_y, b.translate_y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionTrack {
    pub base: Section,
    keys: Vec<TrackKey>,
}

impl SectionTrack {
    pub fn new(base: Section, keys: Vec<TrackKey>) -> Result<Self> {
        let first = keys
            .first()
            .ok_or_else(|| Error::invalid("track needs at least one key"))?;
        if first.t != 0.0 || *first != TrackKey::identity_at(0.0) {
            return Err(Error::invalid("first track key must be the identity at t = 0"));
        }
        for w in keys.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::invalid("track keys must be strictly increasing in t"));
            }
        }
        for k in &keys {
            if !(0.0..=1.0).contains(&k.t) {
                return Err(Error::invalid(format!("key time {} outside [0, 1]", k.t)));
            }
            if !(k.scale_z > 0.0) {
                return Err(Error::invalid("key scale_z must be positive"));
            }
        }
        Ok(Self { base, keys })
    }

    /// A track that never moves.
    pub fn still(base: Section) -> Self {
        Self {
            base,
            keys: vec![TrackKey::identity_at(0.0)],
        }
    }

    pub fn keys(&self) -> &[TrackKey] {
        &self.keys
    }

    /// Key values at time `t`, linearly interpolated; exact at key times.
    pub fn key_at(&self, t: f64) -> Result<TrackKey> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("track time {t} outside [0, 1]")));
        }
        let idx = self.keys.partition_point(|k| k.t <= t);
        let prev = &self.keys[idx - 1];
        if prev.t == t || idx == self.keys.len() {
            return Ok(TrackKey { t, ..*prev });
        }
        Ok(TrackKey::lerp(prev, &self.keys[idx], t))
    }

    /// World-space affine that carries the base section to its state at `t`.
    pub fn affine_at(&self, t: f64) -> Result<Affine3> {
        let key = self.key_at(t)?;
        let to_world = Affine3::from_frame(&self.base.frame);
        let to_local = to_world.inverse()?;
        Ok(to_world.compose(&key.local_affine()).compose(&to_local))
    }
}

/// Freeze the track at time `t`.
pub fn evaluate_track(track: &SectionTrack, t: f64) -> Result<Section> {
    let a = track.affine_at(t)?;
    Ok(track.base.transformed(&a))
}

/// One G1 transition curve; `degenerate` when its endpoints coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Blend {
    pub curve: Curve,
    pub degenerate: bool,
}

/// Cubic Hermite transitions between matched parameters on two curves, with
/// end tangents along each curve's own tangent and magnitude chord/3.
pub fn blend_g1(a: &Curve, b: &Curve, u_pairs: &[(f64, f64)]) -> Result<Vec<Blend>> {
    if u_pairs.is_empty() {
        return Err(Error::invalid("blend_g1 needs at least one parameter pair"));
    }
    Ok(u_pairs
        .iter()
        .map(|&(ua, ub)| {
            let p0 = a.point_at(ua);
            let p1 = b.point_at(ub);
            let chord = (p1 - p0).norm();
            let dir = |v: Vec3| v.try_normalize(1e-300).unwrap_or_else(Vec3::zeros);
            let t0 = dir(a.tangent_at(ua)) * (chord / 3.0);
            let t1 = dir(b.tangent_at(ub)) * (chord / 3.0);
            Blend {
                curve: Curve::Hermite { p0, t0, p1, t1 },
                degenerate: chord < 1e-12,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn unit_circle_xz() -> Curve {
        Curve::circle(Vec3::zeros(), 1.0, Vec3::x(), Vec3::z()).unwrap()
    }

    #[test]
    fn affine_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(affine_apply(&Affine3::identity(), &p), p);
        let t = Affine3::translate(Vec3::new(0.0, 5.0, 0.0));
        assert_eq!(affine_apply(&t, &Vec3::x()), Vec3::new(1.0, 5.0, 0.0));
        let r = Affine3::rotate_y(FRAC_PI_2);
        assert!(close(&r.apply(&Vec3::x()), &Vec3::new(0.0, 0.0, -1.0), 1e-15));
    }

    #[test]
    fn singular_inverse_rejected() {
        let s = Affine3::scale(Vec3::new(1.0, 0.0, 1.0));
        assert!(matches!(s.inverse(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sample_segment_and_circle() {
        let s = Curve::segment(Vec3::zeros(), Vec3::x());
        let pts = sample_curve(&s, 3).unwrap();
        assert_eq!(pts, vec![Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0), Vec3::x()]);

        let pts = sample_curve(&unit_circle_xz(), 4).unwrap();
        let expect = [
            Vec3::x(),
            Vec3::z(),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        for (p, e) in pts.iter().zip(expect.iter()) {
            assert!(close(p, e, 1e-15));
        }
        assert!(sample_curve(&s, 1).is_err());
    }

    #[test]
    fn degenerate_hermite_stays_on_line() {
        let dir = Vec3::new(1.0, 2.0, -0.5).normalize();
        let h = Curve::Hermite {
            p0: Vec3::zeros(),
            t0: dir * 0.7,
            p1: dir * 3.0,
            t1: dir * 1.9,
        };
        for p in sample_curve(&h, 50).unwrap() {
            assert!(p.cross(&dir).norm() < 1e-12);
        }
    }

    #[test]
    fn curve_invariants() {
        assert!(Curve::circle(Vec3::zeros(), 0.0, Vec3::x(), Vec3::z()).is_err());
        assert!(Curve::arc(Vec3::zeros(), 1.0, 0.0, 0.0, Vec3::x(), Vec3::z()).is_err());
        assert!(Curve::arc(Vec3::zeros(), 1.0, 0.0, 7.0, Vec3::x(), Vec3::z()).is_err());
        assert!(Curve::polyline(vec![Vec3::zeros()]).is_err());
    }

    fn horizontal_section(curves: Vec<Curve>) -> Section {
        Section::new(curves, Frame::world()).unwrap()
    }

    #[test]
    fn section_rejects_non_coplanar() {
        let c = Curve::segment(Vec3::zeros(), Vec3::new(1.0, 0.1, 0.0));
        assert!(Section::new(vec![c], Frame::world()).is_err());
    }

    #[test]
    fn track_identity_and_linear_easing() {
        let seg = Curve::segment(Vec3::new(-1.0, 0.0, 0.5), Vec3::new(1.0, 0.0, 0.5));
        let base = horizontal_section(vec![seg]);
        let track = SectionTrack::new(
            base.clone(),
            vec![
                TrackKey::identity_at(0.0),
                TrackKey {
                    t: 1.0,
                    scale_z: 2.0,
                    rotate_y: 0.0,
                    translate_y: 0.0,
                },
            ],
        )
        .unwrap();
        assert_eq!(evaluate_track(&track, 0.0).unwrap().curves, base.curves);
        assert_eq!(track.key_at(0.5).unwrap().scale_z, 1.5);
        let mid = evaluate_track(&track, 0.5).unwrap();
        match &mid.curves[0] {
            Curve::Segment { p0, .. } => assert!((p0.z - 0.75).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert!(evaluate_track(&track, 1.5).is_err());
        assert!(evaluate_track(&track, -0.1).is_err());
    }

    #[test]
    fn track_rotation_maps_circle_onto_itself() {
        let base = horizontal_section(vec![unit_circle_xz()]);
        let track = SectionTrack::new(
            base.clone(),
            vec![
                TrackKey::identity_at(0.0),
                TrackKey {
                    t: 1.0,
                    scale_z: 1.0,
                    rotate_y: PI,
                    translate_y: 0.0,
                },
            ],
        )
        .unwrap();
        let rotated = evaluate_track(&track, 1.0).unwrap();
        let a = sample_curve(&base.curves[0], 8).unwrap();
        let b = sample_curve(&rotated.curves[0], 8).unwrap();
        // Each sample moves by π about Y ...
        for (p, q) in a.iter().zip(&b) {
            assert!(close(&Vec3::new(-p.x, p.y, -p.z), q, 1e-12));
        }
        // ... while the point set is unchanged.
        for q in &b {
            assert!(a.iter().any(|p| close(p, q, 1e-12)));
        }
    }

    #[test]
    fn track_key_validation() {
        let base = horizontal_section(vec![unit_circle_xz()]);
        let bad_first = TrackKey {
            t: 0.0,
            scale_z: 2.0,
            rotate_y: 0.0,
            translate_y: 0.0,
        };
        assert!(SectionTrack::new(base.clone(), vec![bad_first]).is_err());
        assert!(SectionTrack::new(
            base,
            vec![TrackKey::identity_at(0.0), TrackKey::identity_at(0.0)]
        )
        .is_err());
    }

    #[test]
    fn blend_tangents_are_g1() {
        let c = unit_circle_xz();
        let blends = blend_g1(&c, &c.transformed(&Affine3::translate(Vec3::y())), &[(0.0, 0.0)]).unwrap();
        let h = &blends[0].curve;
        // finite-difference tangent of the blend at both ends
        let e = 1e-6;
        let d0 = (h.point_at(e) - h.point_at(0.0)) / e;
        let d1 = (h.point_at(1.0) - h.point_at(1.0 - e)) / e;
        let t = c.tangent_at(0.0).normalize();
        assert!(d0.normalize().cross(&t).norm() < 1e-5);
        assert!(d1.normalize().cross(&t).norm() < 1e-5);
        let Curve::Hermite { t0, .. } = h else { unreachable!() };
        assert!(t0.normalize().cross(&t).norm() < 1e-9);
    }

    #[test]
    fn blend_parallel_circles_are_planar() {
        let a = unit_circle_xz();
        let b = a.transformed(&Affine3::translate(Vec3::new(0.0, 1.0, 0.0)));
        let pairs: Vec<_> = (0..4).map(|i| (i as f64 * FRAC_PI_2, i as f64 * FRAC_PI_2)).collect();
        let blends = blend_g1(&a, &b, &pairs).unwrap();
        assert_eq!(blends.len(), 4);
        for bl in &blends {
            let Curve::Hermite { p0, t0, p1, t1 } = &bl.curve else { unreachable!() };
            let n = (p1 - p0).cross(t0).normalize();
            assert!(t1.dot(&n).abs() < 1e-12);
            for p in sample_curve(&bl.curve, 20).unwrap() {
                assert!((p - p0).dot(&n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blend_coincident_is_degenerate() {
        let c = unit_circle_xz();
        let b = blend_g1(&c, &c, &[(0.0, 0.0)]).unwrap();
        assert!(b[0].degenerate);
        assert!(blend_g1(&c, &c, &[]).is_err());
    }
}
