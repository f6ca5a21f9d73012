//! Stock scenes: two bistatic rooms, an urban street intersection and a
//! monostatic rural highway.
//!
//! Dimensions and material values that a deployment study would survey are
//! exposed through [`ScenarioParams`]; the defaults are illustrative.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SceneError;
use crate::scene::{
    building_faces, Anchor, AnchorRole, PointTarget, Scene, Surface, SurfaceKind, TestRegion, Vec3,
};
use crate::waveform::WaveformConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Tx and Rx on the same wall, each turned 45° towards the other.
    Indoor1,
    /// Tx and Rx on opposite walls, facing each other.
    Indoor2,
    /// Uplink from a street-level UE to a rooftop base station, four buildings.
    UrbanIntersection,
    /// Monostatic base station overlooking a straight road.
    RuralHighway,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] =
        [ScenarioKind::Indoor1, ScenarioKind::Indoor2, ScenarioKind::UrbanIntersection, ScenarioKind::RuralHighway];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Indoor1 => "indoor_1",
            ScenarioKind::Indoor2 => "indoor_2",
            ScenarioKind::UrbanIntersection => "urban_intersection",
            ScenarioKind::RuralHighway => "rural_highway",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

/// Tunable scene parameters shared by the stock scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub room_length_m: f64,
    pub room_width_m: f64,
    pub room_height_m: f64,
    /// Height of indoor anchors and of the indoor target plane.
    pub anchor_height_m: f64,
    pub rcs_m2: f64,
    /// Reflection coefficient of room walls and building faces.
    pub wall_gamma: f64,
    pub ground_gamma: f64,
    pub fov_half_angle_deg: f64,
    /// Target speed along +x; `None` uses the scenario default (15 m/s urban, static elsewhere).
    pub target_speed_mps: Option<f64>,
    /// Target position in the region plane; `None` puts it at the region centre.
    pub target_xy_m: Option<(f64, f64)>,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            room_length_m: 10.0,
            room_width_m: 6.0,
            room_height_m: 3.0,
            anchor_height_m: 1.5,
            rcs_m2: 1.0,
            wall_gamma: 0.7,
            ground_gamma: 0.6,
            fov_half_angle_deg: 60.0,
            target_speed_mps: None,
            target_xy_m: None,
            nx: 100,
            ny: 100,
        }
    }
}

/// Urban target speed: 54 km/h.
pub const URBAN_TARGET_SPEED_MPS: f64 = 15.0;

/// Height of every urban building block.
pub const URBAN_BUILDING_HEIGHT_M: f64 = 20.0;
const URBAN_UE_HEIGHT_M: f64 = 1.5;
const URBAN_BS_HEIGHT_M: f64 = 22.0;
const RURAL_BS_HEIGHT_M: f64 = 25.0;
const RURAL_TARGET_HEIGHT_M: f64 = 1.0;

fn gamma(g: f64) -> Complex64 {
    Complex64::new(g, 0.0)
}

fn anchor(id: &str, position: Vec3, boresight: Vec3, role: AnchorRole, cfg: &WaveformConfig, fov: f64) -> Anchor {
    let dims = if role == AnchorRole::Rx { cfg.rx_array } else { cfg.tx_array };
    Anchor {
        id: id.to_string(),
        position,
        boresight: boresight.normalize(),
        array_rows: dims.rows,
        array_cols: dims.cols,
        element_spacing: None,
        fov_half_angle: fov,
        role,
    }
}

fn target(region: &TestRegion, p: &ScenarioParams, default_speed: f64) -> PointTarget {
    let c = region.center();
    let (x, y) = p.target_xy_m.unwrap_or((c.x, c.y));
    let speed = p.target_speed_mps.unwrap_or(default_speed);
    PointTarget { position: Vec3::new(x, y, region.z), rcs: p.rcs_m2, velocity: Vec3::new(speed, 0.0, 0.0) }
}

fn room_walls(p: &ScenarioParams) -> Result<Vec<Surface>, SceneError> {
    let (l, w, h) = (p.room_length_m, p.room_width_m, p.room_height_m);
    let up = Vec3::new(0.0, 0.0, h);
    let g = gamma(p.wall_gamma);
    [
        ("wall_south", Vec3::new(0.0, 0.0, 0.0), Vec3::new(l, 0.0, 0.0)),
        ("wall_east", Vec3::new(l, 0.0, 0.0), Vec3::new(0.0, w, 0.0)),
        ("wall_north", Vec3::new(l, w, 0.0), Vec3::new(-l, 0.0, 0.0)),
        ("wall_west", Vec3::new(0.0, w, 0.0), Vec3::new(0.0, -w, 0.0)),
    ]
    .into_iter()
    .map(|(id, o, e)| Surface::rectangle(id, o, e, up, g, SurfaceKind::Wall))
    .collect()
}

fn validate_params(p: &ScenarioParams) -> Result<(), SceneError> {
    let positive = [
        ("room_length_m", p.room_length_m),
        ("room_width_m", p.room_width_m),
        ("room_height_m", p.room_height_m),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SceneError::InvalidRegion(format!("{name} must be positive, got {v}")));
        }
    }
    if !(p.anchor_height_m > 0.0 && p.anchor_height_m < p.room_height_m) {
        return Err(SceneError::InvalidRegion(format!(
            "anchor_height_m {} must lie strictly inside the room height",
            p.anchor_height_m
        )));
    }
    if !(p.rcs_m2 >= 0.0) {
        return Err(SceneError::InvalidTarget(format!("rcs {} must be >= 0", p.rcs_m2)));
    }
    Ok(())
}

fn indoor(kind: ScenarioKind, cfg: &WaveformConfig, p: &ScenarioParams) -> Result<Scene, SceneError> {
    let (l, w, z) = (p.room_length_m, p.room_width_m, p.anchor_height_m);
    let fov = p.fov_half_angle_deg.to_radians();
    let anchors = match kind {
        ScenarioKind::Indoor1 => vec![
            anchor("tx", Vec3::new(0.25 * l, 0.05 * w, z), Vec3::new(1.0, 1.0, 0.0), AnchorRole::Tx, cfg, fov),
            anchor("rx", Vec3::new(0.75 * l, 0.05 * w, z), Vec3::new(-1.0, 1.0, 0.0), AnchorRole::Rx, cfg, fov),
        ],
        _ => vec![
            anchor("tx", Vec3::new(0.5 * l, 0.95 * w, z), Vec3::new(0.0, -1.0, 0.0), AnchorRole::Tx, cfg, fov),
            anchor("rx", Vec3::new(0.5 * l, 0.05 * w, z), Vec3::new(0.0, 1.0, 0.0), AnchorRole::Rx, cfg, fov),
        ],
    };
    let region = TestRegion { x_min: 0.0, x_max: l, y_min: 0.0, y_max: w, z, nx: p.nx, ny: p.ny };
    Ok(Scene {
        name: kind.name().to_string(),
        anchors,
        surfaces: room_walls(p)?,
        targets: vec![target(&region, p, 0.0)],
        test_region: region,
        blockers: Vec::new(),
    })
}

/// Buildings around the crossing of two 20 m wide streets along the axes.
///
/// Only the south face of the north-west block reflects towards the base
/// station; the remaining faces only block.
fn urban(cfg: &WaveformConfig, p: &ScenarioParams) -> Result<Scene, SceneError> {
    let fov = p.fov_half_angle_deg.to_radians();
    let h = URBAN_BUILDING_HEIGHT_M;
    let wall = gamma(p.wall_gamma);
    let mut surfaces = Vec::new();
    let mut blockers = Vec::new();
    for face in building_faces("block_nw", -60.0, -10.0, 10.0, 60.0, h, wall)? {
        if face.id.ends_with("_south") {
            surfaces.push(face);
        } else {
            blockers.push(face);
        }
    }
    for (name, x0, x1, y0, y1) in [
        ("block_ne", 10.0, 60.0, 10.0, 60.0),
        ("block_sw", -60.0, -10.0, -60.0, -10.0),
        ("block_se", 10.0, 60.0, -60.0, -10.0),
    ] {
        blockers.extend(building_faces(name, x0, x1, y0, y1, h, wall)?);
    }
    surfaces.push(Surface::rectangle(
        "ground",
        Vec3::new(-100.0, -100.0, 0.0),
        Vec3::new(200.0, 0.0, 0.0),
        Vec3::new(0.0, 200.0, 0.0),
        gamma(p.ground_gamma),
        SurfaceKind::Ground,
    )?);
    let anchors = vec![
        anchor("ue", Vec3::new(-40.0, 0.0, URBAN_UE_HEIGHT_M), Vec3::new(1.0, 0.0, 0.0), AnchorRole::Tx, cfg, fov),
        anchor(
            "bs",
            Vec3::new(10.0, -10.0, URBAN_BS_HEIGHT_M),
            Vec3::new(-1.0, 1.0, -0.5),
            AnchorRole::Rx,
            cfg,
            fov,
        ),
    ];
    let region =
        TestRegion { x_min: -50.0, x_max: 50.0, y_min: -50.0, y_max: 50.0, z: URBAN_UE_HEIGHT_M, nx: p.nx, ny: p.ny };
    Ok(Scene {
        name: ScenarioKind::UrbanIntersection.name().to_string(),
        anchors,
        surfaces,
        targets: vec![target(&region, p, URBAN_TARGET_SPEED_MPS)],
        test_region: region,
        blockers,
    })
}

fn rural(cfg: &WaveformConfig, p: &ScenarioParams) -> Result<Scene, SceneError> {
    let fov = p.fov_half_angle_deg.to_radians();
    let anchors = vec![anchor(
        "bs",
        Vec3::new(0.0, 0.0, RURAL_BS_HEIGHT_M),
        Vec3::new(1.0, 0.0, -0.1),
        AnchorRole::Monostatic,
        cfg,
        fov,
    )];
    let region = TestRegion {
        x_min: 50.0,
        x_max: 550.0,
        y_min: -25.0,
        y_max: 25.0,
        z: RURAL_TARGET_HEIGHT_M,
        nx: p.nx,
        ny: p.ny,
    };
    Ok(Scene {
        name: ScenarioKind::RuralHighway.name().to_string(),
        anchors,
        surfaces: Vec::new(),
        targets: vec![target(&region, p, 0.0)],
        test_region: region,
        blockers: Vec::new(),
    })
}

/// Builds a stock scene with anchor arrays taken from `cfg`.
pub fn build_scenario(kind: ScenarioKind, cfg: &WaveformConfig, params: &ScenarioParams) -> Result<Scene, SceneError> {
    validate_params(params)?;
    let scene = match kind {
        ScenarioKind::Indoor1 | ScenarioKind::Indoor2 => indoor(kind, cfg, params)?,
        ScenarioKind::UrbanIntersection => urban(cfg, params)?,
        ScenarioKind::RuralHighway => rural(cfg, params)?,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_pathset, PathKind};
    use crate::waveform::Band;

    fn small() -> ScenarioParams {
        ScenarioParams { nx: 10, ny: 10, ..Default::default() }
    }

    #[test]
    fn names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("custom".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn every_stock_scene_validates_for_both_presets() {
        for band in [Band::Fr3_10GHz, Band::Fr2_60GHz] {
            let cfg = WaveformConfig::preset(band);
            for k in ScenarioKind::ALL {
                let s = build_scenario(k, &cfg, &small()).unwrap();
                let (tx, rx) = s.sensing_pair().unwrap();
                build_pathset(&s, &cfg, &tx, &rx).unwrap();
            }
        }
    }

    #[test]
    fn urban_paths_are_los_ground_reflection_and_target() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let p = ScenarioParams { target_xy_m: Some((0.0, 0.0)), ..small() };
        let s = build_scenario(ScenarioKind::UrbanIntersection, &cfg, &p).unwrap();
        let ps = build_pathset(&s, &cfg, "ue", "bs").unwrap();
        let kinds: Vec<PathKind> = ps.paths.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PathKind::Los, PathKind::Specular, PathKind::Ground, PathKind::TargetScatter]);
        assert_eq!(ps.paths[1].surface_id.as_deref(), Some("block_nw_south"));
        assert!(ps.paths[3].doppler_hz != 0.0);
    }

    #[test]
    fn rural_is_a_single_monostatic_path() {
        let cfg = WaveformConfig::preset(Band::Fr3_10GHz);
        let s = build_scenario(ScenarioKind::RuralHighway, &cfg, &small()).unwrap();
        let ps = build_pathset(&s, &cfg, "bs", "bs").unwrap();
        assert_eq!(ps.paths.len(), 1);
        assert_eq!(ps.paths[0].kind, PathKind::TargetScatter);
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = WaveformConfig::preset(Band::Fr3_10GHz);
        let p = ScenarioParams { rcs_m2: -1.0, ..small() };
        assert!(build_scenario(ScenarioKind::Indoor1, &cfg, &p).is_err());
        let p = ScenarioParams { anchor_height_m: 5.0, ..small() };
        assert!(build_scenario(ScenarioKind::Indoor2, &cfg, &p).is_err());
    }
}
