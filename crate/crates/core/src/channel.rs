//! Propagation paths between a tx/rx anchor pair and the narrowband planar
//! array model used to observe them.
//!
//! Path angles are expressed in each anchor's local frame (see
//! [`Anchor::frame`]). Elements are ideal isotropic radiators; no beam squint.

use std::f64::consts::PI;
use std::io;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ChannelError;
use crate::scene::{in_fov, Anchor, AnchorRole, PointTarget, Scene, SurfaceKind, Vec3};
use crate::waveform::{planar_fft_codebook, ArrayDims, WaveformConfig, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Los,
    TargetScatter,
    Specular,
    Ground,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Los => "los",
            PathKind::TargetScatter => "target_scatter",
            PathKind::Specular => "specular",
            PathKind::Ground => "ground",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationPath {
    pub kind: PathKind,
    pub delay_s: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub doppler_hz: f64,
    pub gain: Complex64,
    pub associated_target: Option<usize>,
    pub surface_id: Option<String>,
}

impl PropagationPath {
    pub fn length_m(&self) -> f64 {
        self.delay_s * SPEED_OF_LIGHT
    }
}

/// Uniform planar array: `rows × cols` isotropic elements at `spacing` metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn dims(&self) -> ArrayDims {
        ArrayDims::new(self.rows, self.cols)
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn of_anchor(anchor: &Anchor, wavelength: f64) -> Self {
        Self {
            rows: anchor.array_rows,
            cols: anchor.array_cols,
            spacing: anchor.element_spacing.unwrap_or(wavelength / 2.0),
        }
    }

    /// Response `a` and its derivatives w.r.t. azimuth and elevation.
    ///
    /// Element `(r, c)` (index `r · cols + c`) has phase
    /// `2π d/λ · (c · cos(el) sin(az) + r · sin(el))`.
    pub fn response(&self, az: f64, el: f64, wavelength: f64) -> ArrayResponse {
        let k = 2.0 * PI * self.spacing / wavelength;
        let (saz, caz) = az.sin_cos();
        let (sel, cel) = el.sin_cos();
        let n = self.n_elements();
        let mut a = Vec::with_capacity(n);
        let mut d_az = Vec::with_capacity(n);
        let mut d_el = Vec::with_capacity(n);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (cf, rf) = (c as f64, r as f64);
                let phase = k * (cf * cel * saz + rf * sel);
                let v = Complex64::from_polar(1.0, phase);
                let j = Complex64::i();
                a.push(v);
                d_az.push(v * j * (k * cf * cel * caz));
                d_el.push(v * j * (k * (rf * cel - cf * sel * saz)));
            }
        }
        ArrayResponse { a, d_az, d_el }
    }
}

pub struct ArrayResponse {
    pub a: Vec<Complex64>,
    pub d_az: Vec<Complex64>,
    pub d_el: Vec<Complex64>,
}

/// Beamformed gain `wᴴ a`.
pub fn beam_gain(w: &[Complex64], a: &[Complex64]) -> Complex64 {
    w.iter().zip(a).map(|(wi, ai)| wi.conj() * ai).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<PropagationPath>,
    /// Noise power over the full bandwidth (W).
    pub noise_power_w: f64,
    pub tx_id: String,
    pub rx_id: String,
    pub tx_array: ArrayGeometry,
    pub rx_array: ArrayGeometry,
    pub wavelength: f64,
}

impl PathSet {
    pub fn los(&self) -> Option<&PropagationPath> {
        self.paths.iter().find(|p| p.kind == PathKind::Los)
    }

    pub fn target_path_index(&self, target: usize) -> Option<usize> {
        self.paths
            .iter()
            .position(|p| p.kind == PathKind::TargetScatter && p.associated_target == Some(target))
    }

    /// One row per path: kind, delay, angles, gain magnitude/phase, Doppler.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "kind,delay_s,path_length_m,aod_az_rad,aod_el_rad,aoa_az_rad,aoa_el_rad,gain_mag,gain_phase_rad,doppler_hz,surface_id"
        )?;
        for p in &self.paths {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.kind.name(),
                p.delay_s,
                p.length_m(),
                p.aod_az,
                p.aod_el,
                p.aoa_az,
                p.aoa_el,
                p.gain.norm(),
                p.gain.arg(),
                p.doppler_hz,
                p.surface_id.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }
}

/// Free-space amplitude `λ / (4πd)` with propagation phase `−2πd/λ`.
pub fn los_gain(d: f64, wavelength: f64) -> Complex64 {
    Complex64::from_polar(wavelength / (4.0 * PI * d), -2.0 * PI * d / wavelength)
}

/// Bistatic radar amplitude `√(λ² σ / ((4π)³ d_tx² d_rx²))`.
///
/// The phase of the scatterer is unknown; downstream estimation treats it as a nuisance.
pub fn bistatic_target_gain(d_tx: f64, d_rx: f64, rcs: f64, wavelength: f64) -> f64 {
    (wavelength * wavelength * rcs / ((4.0 * PI).powi(3) * d_tx * d_tx * d_rx * d_rx)).sqrt()
}

fn check_array(anchor: &Anchor, expected: ArrayDims) -> Result<(), ChannelError> {
    if anchor.array_rows != expected.rows || anchor.array_cols != expected.cols {
        return Err(ChannelError::ArrayMismatch {
            anchor: anchor.id.clone(),
            got: format!("{}x{}", anchor.array_rows, anchor.array_cols),
            expected: expected.to_string(),
        });
    }
    Ok(())
}

/// Resolves and checks the anchor pair used by a path set.
pub fn resolve_pair<'a>(
    scene: &'a Scene,
    cfg: &WaveformConfig,
    tx_id: &str,
    rx_id: &str,
) -> Result<(&'a Anchor, &'a Anchor), ChannelError> {
    let tx = scene.anchor(tx_id)?;
    let rx = scene.anchor(rx_id)?;
    if tx_id == rx_id && tx.role != AnchorRole::Monostatic {
        return Err(ChannelError::NotMonostatic(tx_id.to_string()));
    }
    check_array(tx, cfg.tx_array)?;
    check_array(rx, cfg.rx_array)?;
    Ok((tx, rx))
}

/// Paths that do not depend on targets: LoS and first-order specular reflections.
pub fn static_paths(scene: &Scene, tx: &Anchor, rx: &Anchor, wavelength: f64) -> Vec<PropagationPath> {
    let mut out = Vec::new();
    let monostatic = tx.id == rx.id;
    if !monostatic
        && scene.is_visible(&tx.position, &rx.position)
        && in_fov(tx, &rx.position)
        && in_fov(rx, &tx.position)
    {
        let d = (rx.position - tx.position).norm();
        let (aod_az, aod_el) = tx.local_angles(&rx.position);
        let (aoa_az, aoa_el) = rx.local_angles(&tx.position);
        out.push(PropagationPath {
            kind: PathKind::Los,
            delay_s: d / SPEED_OF_LIGHT,
            aod_az,
            aod_el,
            aoa_az,
            aoa_el,
            doppler_hz: 0.0,
            gain: los_gain(d, wavelength),
            associated_target: None,
            surface_id: None,
        });
    }
    for r in scene.first_order_reflections(tx, rx) {
        let s = &scene.surfaces[r.surface_index];
        let (aod_az, aod_el) = tx.local_angles(&r.bounce_point);
        let (aoa_az, aoa_el) = rx.local_angles(&r.bounce_point);
        out.push(PropagationPath {
            kind: if s.kind == SurfaceKind::Ground { PathKind::Ground } else { PathKind::Specular },
            delay_s: r.path_length / SPEED_OF_LIGHT,
            aod_az,
            aod_el,
            aoa_az,
            aoa_el,
            doppler_hz: 0.0,
            gain: s.reflection_coeff * los_gain(r.path_length, wavelength),
            associated_target: None,
            surface_id: Some(r.surface_id),
        });
    }
    out
}

/// Whether a target at `p` is seen by both ends: unobstructed legs and inside both FoVs.
pub fn target_observable(scene: &Scene, tx: &Anchor, rx: &Anchor, p: &Vec3) -> bool {
    p != &tx.position
        && p != &rx.position
        && in_fov(tx, p)
        && in_fov(rx, p)
        && scene.is_visible(&tx.position, p)
        && (tx.id == rx.id || scene.is_visible(p, &rx.position))
}

/// Target scattering path, without any visibility gating.
pub fn target_path(
    tx: &Anchor,
    rx: &Anchor,
    target: &PointTarget,
    target_index: usize,
    wavelength: f64,
) -> PropagationPath {
    let p = target.position;
    let to_tx = p - tx.position;
    let to_rx = p - rx.position;
    let (d_tx, d_rx) = (to_tx.norm(), to_rx.norm());
    let (aod_az, aod_el) = tx.local_angles(&p);
    let (aoa_az, aoa_el) = rx.local_angles(&p);
    let doppler_hz = if target.is_static() {
        0.0
    } else {
        // rate of change of the bistatic range
        let range_rate = target.velocity.dot(&(to_tx / d_tx)) + target.velocity.dot(&(to_rx / d_rx));
        -range_rate / wavelength
    };
    let total = d_tx + d_rx;
    PropagationPath {
        kind: PathKind::TargetScatter,
        delay_s: total / SPEED_OF_LIGHT,
        aod_az,
        aod_el,
        aoa_az,
        aoa_el,
        doppler_hz,
        gain: Complex64::from_polar(
            bistatic_target_gain(d_tx, d_rx, target.rcs, wavelength),
            -2.0 * PI * total / wavelength,
        ),
        associated_target: Some(target_index),
        surface_id: None,
    }
}

/// Enumerates all paths from `tx_id` to `rx_id` for the scene's targets.
pub fn build_pathset(
    scene: &Scene,
    cfg: &WaveformConfig,
    tx_id: &str,
    rx_id: &str,
) -> Result<PathSet, ChannelError> {
    let (tx, rx) = resolve_pair(scene, cfg, tx_id, rx_id)?;
    let lambda = cfg.wavelength();
    let mut paths = static_paths(scene, tx, rx, lambda);
    for (i, t) in scene.targets.iter().enumerate() {
        if target_observable(scene, tx, rx, &t.position) {
            paths.push(target_path(tx, rx, t, i, lambda));
        }
    }
    Ok(PathSet {
        paths,
        noise_power_w: cfg.noise_power_w(),
        tx_id: tx.id.clone(),
        rx_id: rx.id.clone(),
        tx_array: ArrayGeometry::of_anchor(tx, lambda),
        rx_array: ArrayGeometry::of_anchor(rx, lambda),
        wavelength: lambda,
    })
}

/// Array geometries for a resolved pair, for callers assembling path sets by hand.
pub fn pair_arrays(tx: &Anchor, rx: &Anchor, wavelength: f64) -> (ArrayGeometry, ArrayGeometry) {
    (ArrayGeometry::of_anchor(tx, wavelength), ArrayGeometry::of_anchor(rx, wavelength))
}

/// Per-symbol SNR of one path for a given beam pair, in dB.
pub fn beam_pair_snr(
    pathset: &PathSet,
    cfg: &WaveformConfig,
    path_index: usize,
    tx_beam: usize,
    rx_beam: usize,
) -> Result<f64, ChannelError> {
    let p = pathset.paths.get(path_index).ok_or(ChannelError::PathIndex(path_index))?;
    let tx_cb = planar_fft_codebook(pathset.tx_array.dims());
    let rx_cb = planar_fft_codebook(pathset.rx_array.dims());
    let wt = tx_cb.get(tx_beam).ok_or(ChannelError::BeamIndex(tx_beam))?;
    let wr = rx_cb.get(rx_beam).ok_or(ChannelError::BeamIndex(rx_beam))?;
    let at = pathset.tx_array.response(p.aod_az, p.aod_el, pathset.wavelength);
    let ar = pathset.rx_array.response(p.aoa_az, p.aoa_el, pathset.wavelength);
    let g = p.gain * beam_gain(wr, &ar.a) * beam_gain(wt, &at.a);
    Ok(10.0 * (cfg.tx_power_w() * g.norm_sqr() / pathset.noise_power_w).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::TestRegion;
    use crate::waveform::{Band, WaveformConfig};

    fn anchor(id: &str, pos: Vec3, bore: Vec3, role: AnchorRole, n: usize) -> Anchor {
        Anchor {
            id: id.into(),
            position: pos,
            boresight: bore.normalize(),
            array_rows: n,
            array_cols: n,
            element_spacing: None,
            fov_half_angle: 60f64.to_radians(),
            role,
        }
    }

    fn facing_pair_scene(n: usize, target: Vec3) -> Scene {
        Scene {
            name: "pair".into(),
            anchors: vec![
                anchor("tx", Vec3::new(0.0, 0.0, 1.5), Vec3::x(), AnchorRole::Tx, n),
                anchor("rx", Vec3::new(10.0, 0.0, 1.5), -Vec3::x(), AnchorRole::Rx, n),
            ],
            surfaces: vec![],
            targets: vec![PointTarget { position: target, rcs: 1.0, velocity: Vec3::zeros() }],
            test_region: TestRegion { x_min: 0.0, x_max: 10.0, y_min: -3.0, y_max: 3.0, z: 1.5, nx: 10, ny: 10 },
            blockers: vec![],
        }
    }

    #[test]
    fn los_gain_values() {
        let lambda = 5e-3;
        assert!((los_gain(10.0, lambda).norm() - 3.9789e-5).abs() < 1e-9);
        assert!((los_gain(lambda / (4.0 * PI), lambda).norm() - 1.0).abs() < 1e-12);
        assert!((los_gain(20.0, lambda).norm() * 2.0 - los_gain(10.0, lambda).norm()).abs() < 1e-18);
    }

    #[test]
    fn target_gain_values() {
        assert_eq!(bistatic_target_gain(3.0, 4.0, 0.0, 0.01), 0.0);
        assert!((bistatic_target_gain(5.0, 5.0, 1.0, 0.03) - 2.6938e-5).abs() < 1e-9);
        let g1 = bistatic_target_gain(3.0, 7.0, 2.0, 0.01);
        let g2 = bistatic_target_gain(6.0, 14.0, 2.0, 0.01);
        assert!((g2 - g1 / 4.0).abs() < 1e-18);
    }

    #[test]
    fn pathset_delays_match_geometry() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let s = facing_pair_scene(4, Vec3::new(5.0, 2.0, 1.5));
        let ps = build_pathset(&s, &cfg, "tx", "rx").unwrap();
        assert_eq!(ps.paths.len(), 2);
        let los = ps.los().unwrap();
        assert!((los.length_m() - 10.0).abs() < 1e-9 * 10.0);
        let t = &ps.paths[ps.target_path_index(0).unwrap()];
        let l = 2.0 * (25.0f64 + 4.0).sqrt();
        assert!((t.length_m() - l).abs() < 1e-9 * l);
        assert_eq!(t.doppler_hz, 0.0);
    }

    #[test]
    fn target_outside_fov_has_no_path() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let s = facing_pair_scene(4, Vec3::new(-3.0, 0.5, 1.5));
        let ps = build_pathset(&s, &cfg, "tx", "rx").unwrap();
        assert!(ps.target_path_index(0).is_none());
        assert_eq!(ps.paths.len(), 1);
    }

    #[test]
    fn same_anchor_requires_monostatic_role() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let s = facing_pair_scene(4, Vec3::new(5.0, 0.5, 1.5));
        assert!(matches!(build_pathset(&s, &cfg, "tx", "tx"), Err(ChannelError::NotMonostatic(_))));
        let s3 = facing_pair_scene(2, Vec3::new(5.0, 0.5, 1.5));
        assert!(matches!(build_pathset(&s3, &cfg, "tx", "rx"), Err(ChannelError::ArrayMismatch { .. })));
    }

    #[test]
    fn moving_target_doppler_sign() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let mut s = facing_pair_scene(4, Vec3::new(5.0, 2.0, 1.5));
        // moving away from the baseline increases the bistatic range
        s.targets[0].velocity = Vec3::new(0.0, 1.0, 0.0);
        let ps = build_pathset(&s, &cfg, "tx", "rx").unwrap();
        let t = &ps.paths[ps.target_path_index(0).unwrap()];
        let rate = 2.0 * 2.0 / (29f64).sqrt();
        assert!((t.doppler_hz + rate / cfg.wavelength()).abs() < 1e-6);
    }

    #[test]
    fn boresight_array_gain_fr2() {
        let cfg = WaveformConfig::preset(Band::Fr2_60GHz);
        let s = facing_pair_scene(4, Vec3::new(5.0, 2.0, 1.5));
        let ps = build_pathset(&s, &cfg, "tx", "rx").unwrap();
        // beam 0 of the DFT codebook points at broadside
        let snr = beam_pair_snr(&ps, &cfg, 0, 0, 0).unwrap();
        let los = ps.los().unwrap();
        let iso = 10.0 * (cfg.tx_power_w() * los.gain.norm_sqr() / ps.noise_power_w).log10();
        // coherent-sum oracle: |Σ 1|² over 16 tx and 16 rx elements, normalised weights
        let oracle = 10.0 * ((16.0f64).sqrt().powi(2) * (16.0f64).sqrt().powi(2)).log10();
        assert!((snr - iso - oracle).abs() < 1e-9);
        assert!((oracle - 24.08).abs() < 0.01);
        // beam orthogonal to the broadside steering vector
        let null = beam_pair_snr(&ps, &cfg, 0, 0, 1).unwrap();
        assert!(null < -200.0);
        let mut cfg2 = cfg.clone();
        cfg2.tx_power_dbm += 10.0 * 2f64.log10();
        let snr2 = beam_pair_snr(&ps, &cfg2, 0, 0, 0).unwrap();
        assert!((snr2 - snr - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn response_derivatives_match_finite_differences() {
        let g = ArrayGeometry { rows: 3, cols: 4, spacing: 0.0025 };
        let lambda = 0.005;
        let (az, el) = (0.3, -0.2);
        let r = g.response(az, el, lambda);
        let h = 1e-6;
        let ap = g.response(az + h, el, lambda).a;
        let am = g.response(az - h, el, lambda).a;
        let ep = g.response(az, el + h, lambda).a;
        let em = g.response(az, el - h, lambda).a;
        for i in 0..g.n_elements() {
            assert!(((ap[i] - am[i]) / (2.0 * h) - r.d_az[i]).norm() < 1e-7);
            assert!(((ep[i] - em[i]) / (2.0 * h) - r.d_el[i]).norm() < 1e-7);
        }
    }
}
