//! Scenario geometry: anchors with planar arrays, reflecting/opaque surfaces,
//! point targets and the rectangular test region.
//!
//! Visibility, field-of-view and first-order specular reflections (image
//! method) are answered here. Everything is a pure function of the inputs.

use nalgebra::{Matrix2, Rotation3, Unit, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SceneError;

/// Position / direction in metres, right-handed, z up.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Relative tolerance on the segment parameter used to exclude endpoints
/// from intersection tests.
const ENDPOINT_EPS: f64 = 1e-9;
const COPLANAR_TOL_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Wall,
    Ground,
    BuildingFace,
}

/// Planar rectangle given by four corners in traversal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub id: String,
    pub corners: [Vec3; 4],
    pub reflection_coeff: Complex64,
    pub kind: SurfaceKind,
}

impl Surface {
    /// Builds and validates a surface from explicit corners.
    pub fn new(
        id: impl Into<String>,
        corners: [Vec3; 4],
        reflection_coeff: Complex64,
        kind: SurfaceKind,
    ) -> Result<Self, SceneError> {
        let s = Self {
            id: id.into(),
            corners,
            reflection_coeff,
            kind,
        };
        s.validate()?;
        Ok(s)
    }

    /// Rectangle spanned by `origin`, `origin + edge_a`, `origin + edge_a + edge_b`, `origin + edge_b`.
    pub fn rectangle(
        id: impl Into<String>,
        origin: Vec3,
        edge_a: Vec3,
        edge_b: Vec3,
        reflection_coeff: Complex64,
        kind: SurfaceKind,
    ) -> Result<Self, SceneError> {
        Self::new(
            id,
            [origin, origin + edge_a, origin + edge_a + edge_b, origin + edge_b],
            reflection_coeff,
            kind,
        )
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.corners.iter().any(|c| !c.iter().all(|v| v.is_finite())) {
            return Err(SceneError::NonFinite(format!("surface `{}` corners", self.id)));
        }
        if self.reflection_coeff.norm() > 1.0 + 1e-12 {
            return Err(SceneError::InvalidSurface {
                id: self.id.clone(),
                reason: format!("|reflection_coeff| = {} > 1", self.reflection_coeff.norm()),
            });
        }
        let e1 = self.corners[1] - self.corners[0];
        let e2 = self.corners[3] - self.corners[0];
        let n = e1.cross(&e2);
        if n.norm() <= 1e-12 {
            return Err(SceneError::InvalidSurface {
                id: self.id.clone(),
                reason: "degenerate rectangle".into(),
            });
        }
        let n = n.normalize();
        let off = (self.corners[2] - self.corners[0]).dot(&n).abs();
        if off > COPLANAR_TOL_M {
            return Err(SceneError::InvalidSurface {
                id: self.id.clone(),
                reason: format!("corners not coplanar (offset {off:e} m)"),
            });
        }
        let closure = (self.corners[2] - (self.corners[1] + e2)).norm();
        if closure > 1e-9 * (1.0 + e1.norm() + e2.norm()) {
            return Err(SceneError::InvalidSurface {
                id: self.id.clone(),
                reason: "corners do not form a parallelogram".into(),
            });
        }
        Ok(())
    }

    pub fn normal(&self) -> Vec3 {
        let e1 = self.corners[1] - self.corners[0];
        let e2 = self.corners[3] - self.corners[0];
        e1.cross(&e2).normalize()
    }

    /// Signed distance of `p` from the surface's infinite plane.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.corners[0]).dot(&self.normal())
    }

    /// Whether a point lying on the plane falls inside the rectangle (edges inclusive).
    pub fn contains_planar(&self, p: &Vec3) -> bool {
        let e1 = self.corners[1] - self.corners[0];
        let e2 = self.corners[3] - self.corners[0];
        let d = p - self.corners[0];
        let gram = Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
        let rhs = Vector2::new(d.dot(&e1), d.dot(&e2));
        match gram.try_inverse() {
            Some(inv) => {
                let st = inv * rhs;
                let tol = 1e-12;
                (-tol..=1.0 + tol).contains(&st.x) && (-tol..=1.0 + tol).contains(&st.y)
            }
            None => false,
        }
    }

    /// Segment parameter `t` in the open interval (0, 1) where `a -> b` crosses the
    /// rectangle, endpoints excluded. Segments lying in the plane never intersect.
    pub fn segment_hit(&self, a: &Vec3, b: &Vec3) -> Option<f64> {
        let n = self.normal();
        let da = (a - self.corners[0]).dot(&n);
        let db = (b - self.corners[0]).dot(&n);
        let denom = da - db;
        if denom.abs() <= f64::EPSILON * (da.abs() + db.abs()).max(1e-300) {
            return None;
        }
        let t = da / denom;
        if t <= ENDPOINT_EPS || t >= 1.0 - ENDPOINT_EPS {
            return None;
        }
        let p = a + (b - a) * t;
        self.contains_planar(&p).then_some(t)
    }

    /// Mirror image of `p` across the surface plane.
    pub fn mirror_point(&self, p: &Vec3) -> Vec3 {
        let n = self.normal();
        p - n * (2.0 * (p - self.corners[0]).dot(&n))
    }

    fn transformed(&self, rot: &Rotation3<f64>, shift: &Vec3) -> Self {
        Self {
            corners: self.corners.map(|c| rot * c + shift),
            ..self.clone()
        }
    }
}

/// Free function form of [`Surface::mirror_point`].
pub fn mirror_point(surface: &Surface, p: &Vec3) -> Vec3 {
    surface.mirror_point(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorRole {
    Tx,
    Rx,
    Monostatic,
}

/// A sensing node with a uniform planar array.
///
/// Columns run along the horizontal axis of the array face, rows along the
/// vertical one. Local angles are measured from the boresight: azimuth in the
/// horizontal plane, elevation towards local "up".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub position: Vec3,
    pub boresight: Vec3,
    pub array_rows: usize,
    pub array_cols: usize,
    /// Element spacing in metres; `None` means half a wavelength.
    pub element_spacing: Option<f64>,
    pub fov_half_angle: f64,
    pub role: AnchorRole,
}

impl Anchor {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: String| SceneError::InvalidAnchor {
            id: self.id.clone(),
            reason,
        };
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite position".into()));
        }
        if (self.boresight.norm() - 1.0).abs() > 1e-9 {
            return Err(bad("boresight is not a unit vector".into()));
        }
        if self.array_rows * self.array_cols < 1 {
            return Err(bad("array has no elements".into()));
        }
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle <= std::f64::consts::PI) {
            return Err(bad(format!("fov_half_angle {} outside (0, pi]", self.fov_half_angle)));
        }
        if let Some(d) = self.element_spacing {
            if !(d > 0.0 && d.is_finite()) {
                return Err(bad("element spacing must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.array_rows * self.array_cols
    }

    /// Orthonormal local frame `(boresight, horizontal, up)`.
    ///
    /// `horizontal = z × boresight`; for a vertical boresight the world x axis is used.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let b = self.boresight.normalize();
        let h = Vec3::z().cross(&b);
        let h = if h.norm() < 1e-12 { Vec3::x() } else { h.normalize() };
        let v = b.cross(&h);
        (b, h, v)
    }

    /// Local `(azimuth, elevation)` of the direction from the anchor towards `p`.
    pub fn local_angles(&self, p: &Vec3) -> (f64, f64) {
        let (b, h, v) = self.frame();
        let d = p - self.position;
        let (lb, lh, lv) = (d.dot(&b), d.dot(&h), d.dot(&v));
        (lh.atan2(lb), lv.atan2(lb.hypot(lh)))
    }

    /// Gradients of the local azimuth and elevation with respect to `p`.
    pub fn angle_gradients(&self, p: &Vec3) -> (Vec3, Vec3) {
        let (b, h, v) = self.frame();
        let d = p - self.position;
        let (lb, lh, lv) = (d.dot(&b), d.dot(&h), d.dot(&v));
        let rho2 = lb * lb + lh * lh;
        let rho = rho2.sqrt();
        let r2 = rho2 + lv * lv;
        let g_az = (h * lb - b * lh) / rho2;
        let g_el = (v * rho2 - (b * lb + h * lh) * lv) / (r2 * rho);
        (g_az, g_el)
    }

    fn transformed(&self, rot: &Rotation3<f64>, shift: &Vec3) -> Self {
        Self {
            position: rot * self.position + shift,
            boresight: rot * self.boresight,
            ..self.clone()
        }
    }
}

/// True iff `p` lies within the anchor's field-of-view cone (boundary inclusive).
pub fn in_fov(anchor: &Anchor, p: &Vec3) -> bool {
    let d = p - anchor.position;
    let n = d.norm();
    if n == 0.0 {
        return false;
    }
    let c = (d.dot(&anchor.boresight) / (n * anchor.boresight.norm())).clamp(-1.0, 1.0);
    c.acos() <= anchor.fov_half_angle + 1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTarget {
    pub position: Vec3,
    /// Radar cross-section in m².
    pub rcs: f64,
    /// Velocity in m/s; zero means static.
    pub velocity: Vec3,
}

impl PointTarget {
    pub fn is_static(&self) -> bool {
        self.velocity == Vec3::zeros()
    }
}

/// Axis-aligned rectangle at fixed height, sampled at cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TestRegion {
    pub fn validate(&self) -> Result<(), SceneError> {
        let area = (self.x_max - self.x_min) * (self.y_max - self.y_min);
        if !(self.x_max > self.x_min && self.y_max > self.y_min && area > 0.0) {
            return Err(SceneError::InvalidRegion("test region area must be positive".into()));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(SceneError::InvalidRegion(format!(
                "grid resolution must be at least 2 per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
            self.z,
        )
    }

    /// Distance from the region centre to its furthest corner.
    pub fn max_error(&self) -> f64 {
        0.5 * (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    /// Cell centre for column `ix`, row `iy`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec3 {
        let dx = (self.x_max - self.x_min) / self.nx as f64;
        let dy = (self.y_max - self.y_min) / self.ny as f64;
        Vec3::new(
            self.x_min + (ix as f64 + 0.5) * dx,
            self.y_min + (iy as f64 + 0.5) * dy,
            self.z,
        )
    }

    /// All cell centres, row-major with `y` as the slow index.
    pub fn cells(&self) -> Vec<Vec3> {
        (0..self.ny)
            .flat_map(|iy| (0..self.nx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| self.cell_center(ix, iy))
            .collect()
    }
}

/// A complete sensing scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub anchors: Vec<Anchor>,
    /// Reflective surfaces; these also block visibility.
    pub surfaces: Vec<Surface>,
    pub targets: Vec<PointTarget>,
    pub test_region: TestRegion,
    /// Opaque, non-reflecting obstacles.
    pub blockers: Vec<Surface>,
}

/// One first-order specular reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    pub surface_id: String,
    pub surface_index: usize,
    pub bounce_point: Vec3,
    pub path_length: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        for a in &self.anchors {
            a.validate()?;
        }
        for s in self.surfaces.iter().chain(&self.blockers) {
            s.validate()?;
        }
        for t in &self.targets {
            if !(t.rcs >= 0.0) {
                return Err(SceneError::InvalidTarget(format!("rcs {} must be >= 0", t.rcs)));
            }
        }
        self.test_region.validate()
    }

    pub fn anchor(&self, id: &str) -> Result<&Anchor, SceneError> {
        self.anchors
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| SceneError::UnknownAnchor(id.to_string()))
    }

    /// The `(tx, rx)` anchor ids used for sensing: a monostatic anchor if present,
    /// otherwise the first `Tx` and the first `Rx`.
    pub fn sensing_pair(&self) -> Result<(String, String), SceneError> {
        if let Some(m) = self.anchors.iter().find(|a| a.role == AnchorRole::Monostatic) {
            return Ok((m.id.clone(), m.id.clone()));
        }
        let tx = self.anchors.iter().find(|a| a.role == AnchorRole::Tx);
        let rx = self.anchors.iter().find(|a| a.role == AnchorRole::Rx);
        match (tx, rx) {
            (Some(t), Some(r)) => Ok((t.id.clone(), r.id.clone())),
            _ => Err(SceneError::NoSensingPair),
        }
    }

    /// Segment visibility against every surface and blocker, endpoints excluded.
    pub fn is_visible(&self, a: &Vec3, b: &Vec3) -> bool {
        self.is_visible_except(a, b, None)
    }

    /// Like [`Scene::is_visible`] but ignores the reflective surface at `skip`.
    pub fn is_visible_except(&self, a: &Vec3, b: &Vec3, skip: Option<usize>) -> bool {
        let surfaces_clear = self
            .surfaces
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .all(|(_, s)| s.segment_hit(a, b).is_none());
        surfaces_clear && self.blockers.iter().all(|s| s.segment_hit(a, b).is_none())
    }

    /// Image-method first-order reflections between two anchors.
    ///
    /// A surface contributes when the specular point lies on the rectangle, both
    /// legs are unobstructed, and the bounce point is inside both fields of view.
    pub fn first_order_reflections(&self, tx: &Anchor, rx: &Anchor) -> Vec<Reflection> {
        let mut out = Vec::new();
        for (i, s) in self.surfaces.iter().enumerate() {
            let dt = s.signed_distance(&tx.position);
            let dr = s.signed_distance(&rx.position);
            // both ends strictly on the same side of the plane
            if dt * dr <= 0.0 {
                continue;
            }
            let image = s.mirror_point(&rx.position);
            let di = s.signed_distance(&image);
            let t = dt / (dt - di);
            let q = tx.position + (image - tx.position) * t;
            if !s.contains_planar(&q) {
                continue;
            }
            if !(in_fov(tx, &q) && in_fov(rx, &q)) {
                continue;
            }
            if !self.is_visible_except(&tx.position, &q, Some(i))
                || !self.is_visible_except(&q, &rx.position, Some(i))
            {
                continue;
            }
            out.push(Reflection {
                surface_id: s.id.clone(),
                surface_index: i,
                bounce_point: q,
                path_length: (tx.position - image).norm(),
            });
        }
        out
    }

    /// Rigidly moves the whole scene: rotation about the z axis by `yaw` then translation.
    ///
    /// The test region is only translated (it stays axis-aligned).
    pub fn rigidly_moved(&self, yaw: f64, shift: Vec3) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::z()), yaw);
        let mut region = self.test_region;
        region.x_min += shift.x;
        region.x_max += shift.x;
        region.y_min += shift.y;
        region.y_max += shift.y;
        region.z += shift.z;
        Self {
            name: self.name.clone(),
            anchors: self.anchors.iter().map(|a| a.transformed(&rot, &shift)).collect(),
            surfaces: self.surfaces.iter().map(|s| s.transformed(&rot, &shift)).collect(),
            targets: self
                .targets
                .iter()
                .map(|t| PointTarget {
                    position: rot * t.position + shift,
                    velocity: rot * t.velocity,
                    rcs: t.rcs,
                })
                .collect(),
            test_region: region,
            blockers: self.blockers.iter().map(|s| s.transformed(&rot, &shift)).collect(),
        }
    }
}

/// Free function form of [`Scene::is_visible`].
pub fn is_visible(scene: &Scene, a: &Vec3, b: &Vec3) -> bool {
    scene.is_visible(a, b)
}

/// Free function form of [`Scene::first_order_reflections`].
pub fn first_order_reflections(scene: &Scene, tx: &Anchor, rx: &Anchor) -> Vec<Reflection> {
    scene.first_order_reflections(tx, rx)
}

/// Four vertical faces of a box footprint `[x0, x1] × [y0, y1]`, from the ground up to `height`.
pub fn building_faces(
    name: &str,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    height: f64,
    gamma: Complex64,
) -> Result<Vec<Surface>, SceneError> {
    let up = Vec3::new(0.0, 0.0, height);
    let faces = [
        ("south", Vec3::new(x0, y0, 0.0), Vec3::new(x1 - x0, 0.0, 0.0)),
        ("east", Vec3::new(x1, y0, 0.0), Vec3::new(0.0, y1 - y0, 0.0)),
        ("north", Vec3::new(x1, y1, 0.0), Vec3::new(x0 - x1, 0.0, 0.0)),
        ("west", Vec3::new(x0, y1, 0.0), Vec3::new(0.0, y0 - y1, 0.0)),
    ];
    faces
        .into_iter()
        .map(|(side, o, e)| {
            Surface::rectangle(format!("{name}_{side}"), o, e, up, gamma, SurfaceKind::BuildingFace)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall_x0() -> Surface {
        Surface::rectangle(
            "x0",
            Vec3::new(0.0, -10.0, 0.0),
            Vec3::new(0.0, 20.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Complex64::new(0.7, 0.0),
            SurfaceKind::Wall,
        )
        .unwrap()
    }

    fn anchor(id: &str, pos: Vec3, bore: Vec3, role: AnchorRole) -> Anchor {
        Anchor {
            id: id.into(),
            position: pos,
            boresight: bore.normalize(),
            array_rows: 2,
            array_cols: 2,
            element_spacing: None,
            fov_half_angle: std::f64::consts::PI,
            role,
        }
    }

    fn region() -> TestRegion {
        TestRegion { x_min: 0.0, x_max: 10.0, y_min: 0.0, y_max: 6.0, z: 1.5, nx: 4, ny: 4 }
    }

    fn scene_with(surfaces: Vec<Surface>, blockers: Vec<Surface>) -> Scene {
        Scene {
            name: "t".into(),
            anchors: vec![],
            surfaces,
            targets: vec![],
            test_region: region(),
            blockers,
        }
    }

    #[test]
    fn empty_scene_is_always_visible() {
        let s = scene_with(vec![], vec![]);
        assert!(s.is_visible(&Vec3::new(-3.0, 1.0, 2.0), &Vec3::new(5.0, 9.0, -1.0)));
    }

    #[test]
    fn wall_between_points_blocks() {
        let s = scene_with(vec![], vec![wall_x0()]);
        let a = Vec3::new(-1.0, 0.0, 1.5);
        let b = Vec3::new(1.0, 0.5, 1.5);
        assert!(!s.is_visible(&a, &b));
        assert!(!s.is_visible(&b, &a));
        // same side
        assert!(s.is_visible(&Vec3::new(1.0, 0.0, 1.5), &b));
    }

    #[test]
    fn endpoint_on_surface_is_not_blocked() {
        let s = scene_with(vec![wall_x0()], vec![]);
        assert!(s.is_visible(&Vec3::new(0.0, 1.0, 1.5), &Vec3::new(2.0, 1.0, 1.5)));
    }

    #[test]
    fn mirror_basics() {
        let ground = Surface::rectangle(
            "g",
            Vec3::new(-5.0, -5.0, 0.0),
            Vec3::new(10.0, 0.0, 0.0),
            Vec3::new(0.0, 10.0, 0.0),
            Complex64::new(0.6, 0.0),
            SurfaceKind::Ground,
        )
        .unwrap();
        let p = Vec3::new(0.0, 0.0, 1.0);
        assert!((ground.mirror_point(&p) - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        let on = Vec3::new(3.0, -2.0, 0.0);
        assert!((ground.mirror_point(&on) - on).norm() < 1e-15);
        let q = Vec3::new(1.3, -2.2, 7.1);
        assert!((ground.mirror_point(&ground.mirror_point(&q)) - q).norm() < 1e-12);
    }

    #[test]
    fn single_wall_analytic_bounce() {
        let s = scene_with(vec![wall_x0()], vec![]);
        let tx = anchor("tx", Vec3::new(1.0, 0.0, 1.5), Vec3::new(-1.0, 0.0, 0.0), AnchorRole::Tx);
        let rx = anchor("rx", Vec3::new(1.0, 2.0, 1.5), Vec3::new(-1.0, 0.0, 0.0), AnchorRole::Rx);
        let refl = s.first_order_reflections(&tx, &rx);
        assert_eq!(refl.len(), 1);
        assert!((refl[0].bounce_point - Vec3::new(0.0, 1.0, 1.5)).norm() < 1e-12);
        assert!((refl[0].path_length - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reflection_rejected_outside_fov() {
        let s = scene_with(vec![wall_x0()], vec![]);
        let mut tx = anchor("tx", Vec3::new(1.0, 0.0, 1.5), Vec3::new(1.0, 0.0, 0.0), AnchorRole::Tx);
        tx.fov_half_angle = 60f64.to_radians();
        let rx = anchor("rx", Vec3::new(1.0, 2.0, 1.5), Vec3::new(-1.0, 0.0, 0.0), AnchorRole::Rx);
        assert!(s.first_order_reflections(&tx, &rx).is_empty());
    }

    #[test]
    fn fov_boundary_is_inclusive() {
        let mut a = anchor("a", Vec3::zeros(), Vec3::x(), AnchorRole::Tx);
        a.fov_half_angle = 60f64.to_radians();
        assert!(in_fov(&a, &Vec3::new(5.0, 0.0, 0.0)));
        let edge = Vec3::new(60f64.to_radians().cos(), 60f64.to_radians().sin(), 0.0);
        assert!(in_fov(&a, &edge));
        let out = Vec3::new(60.1f64.to_radians().cos(), 60.1f64.to_radians().sin(), 0.0);
        assert!(!in_fov(&a, &out));
    }

    #[test]
    fn rejects_non_coplanar_and_bad_gamma() {
        let bad = Surface::new(
            "bad",
            [
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.1),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            Complex64::new(0.5, 0.0),
            SurfaceKind::Wall,
        );
        assert!(bad.is_err());
        let g = Surface::rectangle(
            "g",
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Complex64::new(0.9, 0.9),
            SurfaceKind::Wall,
        );
        assert!(g.is_err());
    }

    #[test]
    fn region_rules() {
        let mut r = region();
        assert!((r.max_error() - 34f64.sqrt()).abs() < 1e-12);
        r.nx = 1;
        assert!(r.validate().is_err());
        let c = region().cell_center(0, 0);
        assert!((c - Vec3::new(1.25, 0.75, 1.5)).norm() < 1e-12);
    }

    #[test]
    fn angle_gradients_match_finite_differences() {
        let mut a = anchor("a", Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 1.0, -0.4), AnchorRole::Rx);
        a.fov_half_angle = 1.0;
        let p = Vec3::new(6.0, 4.0, 0.5);
        let (gaz, gel) = a.angle_gradients(&p);
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let (az_p, el_p) = a.local_angles(&(p + e));
            let (az_m, el_m) = a.local_angles(&(p - e));
            assert!(((az_p - az_m) / (2.0 * h) - gaz[k]).abs() < 1e-8);
            assert!(((el_p - el_m) / (2.0 * h) - gel[k]).abs() < 1e-8);
        }
    }
}
