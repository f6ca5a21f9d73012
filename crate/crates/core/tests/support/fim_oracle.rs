//! Brute-force model of the beam-swept OFDM observation and scene helpers
//! shared by the Fisher-information checks.
//!
//! The mean `μ[n, m]` is evaluated element by element and differentiated
//! numerically; nothing here reuses the library's closed-form accumulation.

#![allow(dead_code)]

use std::f64::consts::PI;

use isac_core::bounds::{channel_fim, parameter_layout, position_efim, CellClass, CellEvaluator, ChannelFim, ParamKind};
use isac_core::channel::{build_pathset, PathSet};
use isac_core::scene::{Anchor, AnchorRole, PointTarget, Scene, Surface, SurfaceKind, TestRegion, Vec3};
use isac_core::waveform::{ArrayDims, Band, WaveformConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Per-path parameters in oracle form: `[τ, φD_az, φD_el, φA_az, φA_el, Re α, Im α]`.
pub type PathParams = [f64; 7];

pub struct Oracle {
    n_sub: usize,
    scs: f64,
    amp: f64,
    tx: (usize, usize, f64),
    rx: (usize, usize, f64),
    lambda: f64,
    tx_beams: Vec<Vec<Complex64>>,
    rx_beams: Vec<Vec<Complex64>>,
}

impl Oracle {
    pub fn new(ps: &PathSet, cfg: &WaveformConfig) -> Self {
        Self {
            n_sub: cfg.n_subcarriers,
            scs: cfg.scs_hz,
            amp: (cfg.tx_power_w() / cfg.n_subcarriers as f64).sqrt(),
            tx: (ps.tx_array.rows, ps.tx_array.cols, ps.tx_array.spacing),
            rx: (ps.rx_array.rows, ps.rx_array.cols, ps.rx_array.spacing),
            lambda: ps.wavelength,
            tx_beams: dft_beams(ps.tx_array.rows, ps.tx_array.cols),
            rx_beams: dft_beams(ps.rx_array.rows, ps.rx_array.cols),
        }
    }

    fn steering(&self, geom: (usize, usize, f64), az: f64, el: f64) -> Vec<Complex64> {
        let (rows, cols, d) = geom;
        let mut a = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let ph = 2.0 * PI * d / self.lambda * (c as f64 * el.cos() * az.sin() + r as f64 * el.sin());
                a.push(Complex64::from_polar(1.0, ph));
            }
        }
        a
    }

    /// `μ` stacked over (tx beam, rx beam, subcarrier).
    pub fn mean(&self, paths: &[PathParams]) -> Vec<Complex64> {
        let mut out = Vec::new();
        let centre = (self.n_sub as f64 - 1.0) / 2.0;
        let resp: Vec<(Vec<Complex64>, Vec<Complex64>)> = paths
            .iter()
            .map(|p| (self.steering(self.tx, p[1], p[2]), self.steering(self.rx, p[3], p[4])))
            .collect();
        for wt in &self.tx_beams {
            for wr in &self.rx_beams {
                let gains: Vec<Complex64> = paths
                    .iter()
                    .zip(&resp)
                    .map(|(p, (at, ar))| {
                        let gt: Complex64 = wt.iter().zip(at).map(|(w, a)| w.conj() * a).sum();
                        let gr: Complex64 = wr.iter().zip(ar).map(|(w, a)| w.conj() * a).sum();
                        Complex64::new(p[5], p[6]) * gt * gr
                    })
                    .collect();
                for n in 0..self.n_sub {
                    let nu = n as f64 - centre;
                    let v: Complex64 = paths
                        .iter()
                        .zip(&gains)
                        .map(|(p, g)| g * Complex64::from_polar(1.0, -2.0 * PI * nu * self.scs * p[0]))
                        .sum();
                    out.push(v * self.amp);
                }
            }
        }
        out
    }
}

pub fn dft_beams(rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
    let mut beams = Vec::new();
    let norm = 1.0 / ((rows * cols) as f64).sqrt();
    for br in 0..rows {
        for bc in 0..cols {
            let mut w = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let ph = 2.0 * PI * ((br * r) as f64 / rows as f64 + (bc * c) as f64 / cols as f64);
                    w.push(Complex64::from_polar(norm, ph));
                }
            }
            beams.push(w);
        }
    }
    beams
}

pub fn oracle_params(ps: &PathSet) -> Vec<PathParams> {
    ps.paths
        .iter()
        .map(|p| [p.delay_s, p.aod_az, p.aod_el, p.aoa_az, p.aoa_el, p.gain.re, p.gain.im])
        .collect()
}

pub fn slot(kind: ParamKind) -> usize {
    match kind {
        ParamKind::Delay => 0,
        ParamKind::AodAz => 1,
        ParamKind::AodEl => 2,
        ParamKind::AoaAz => 3,
        ParamKind::AoaEl => 4,
        ParamKind::GainRe => 5,
        ParamKind::GainIm => 6,
    }
}

/// Natural step scale per parameter: 1/B for delay, 1 rad for angles, |α| for gains.
pub fn scale_of(kind: ParamKind, p: &PathParams, bandwidth: f64) -> f64 {
    match kind {
        ParamKind::Delay => 1.0 / bandwidth,
        ParamKind::GainRe | ParamKind::GainIm => p[5].hypot(p[6]),
        _ => 1.0,
    }
}

/// FIM from central differences of `μ` with step `rel · scale`.
pub fn fd_fim(oracle: &Oracle, ps: &PathSet, with_el: bool, rel: f64, noise: f64, bandwidth: f64) -> DMatrix<f64> {
    let base = oracle_params(ps);
    let layout = parameter_layout(ps.paths.len(), with_el);
    let derivs: Vec<Vec<Complex64>> = layout
        .iter()
        .map(|prm| {
            let h = rel * scale_of(prm.kind, &base[prm.path], bandwidth);
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[prm.path][slot(prm.kind)] += h;
            minus[prm.path][slot(prm.kind)] -= h;
            let (mp, mm) = (oracle.mean(&plus), oracle.mean(&minus));
            mp.iter().zip(&mm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let sigma_sample = noise / oracle.n_sub as f64;
    DMatrix::from_fn(layout.len(), layout.len(), |i, j| {
        let s: Complex64 = derivs[i].iter().zip(&derivs[j]).map(|(a, b)| a.conj() * b).sum();
        2.0 / sigma_sample * s.re
    })
}

/// Largest entry deviation normalised by `√(J_ii J_jj)`.
pub fn max_rel_dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let norm = (a[(i, i)] * a[(j, j)]).sqrt();
            if norm > 0.0 {
                worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / norm);
            }
        }
    }
    worst
}

pub fn small_cfg(rows: usize, cols: usize, n_sub: usize) -> WaveformConfig {
    let mut cfg = WaveformConfig::preset(Band::Fr2_60GHz).with_arrays(ArrayDims::new(rows, cols), ArrayDims::new(rows, cols));
    cfg.n_subcarriers = n_sub;
    cfg
}

pub fn anchor(id: &str, pos: Vec3, bore: Vec3, role: AnchorRole, rows: usize, cols: usize) -> Anchor {
    Anchor {
        id: id.into(),
        position: pos,
        boresight: bore.normalize(),
        array_rows: rows,
        array_cols: cols,
        element_spacing: None,
        fov_half_angle: 80f64.to_radians(),
        role,
    }
}

/// Bistatic pair with one wall, target off the anchor plane so elevations are active.
pub fn oracle_scene(rows: usize, cols: usize) -> Scene {
    let wall = Surface::rectangle(
        "w",
        Vec3::new(-5.0, 8.0, 0.0),
        Vec3::new(20.0, 0.0, 0.0),
        Vec3::new(0.0, 0.0, 4.0),
        Complex64::new(0.7, 0.0),
        SurfaceKind::Wall,
    )
    .unwrap();
    Scene {
        name: "oracle".into(),
        anchors: vec![
            anchor("tx", Vec3::new(0.0, 0.0, 1.5), Vec3::new(1.0, 1.0, 0.0), AnchorRole::Tx, rows, cols),
            anchor("rx", Vec3::new(8.0, 0.5, 1.5), Vec3::new(-1.0, 1.0, 0.0), AnchorRole::Rx, rows, cols),
        ],
        surfaces: vec![wall],
        targets: vec![PointTarget { position: Vec3::new(3.7, 4.1, 1.1), rcs: 1.0, velocity: Vec3::zeros() }],
        test_region: TestRegion { x_min: 0.0, x_max: 8.0, y_min: 0.0, y_max: 8.0, z: 1.1, nx: 4, ny: 4 },
        blockers: vec![],
    }
}

pub fn min_eig_ratio(m: &ChannelFim) -> f64 {
    let eig = SymmetricEigen::new(m.matrix.clone());
    let tr = m.matrix.trace();
    eig.eigenvalues.min() / tr
}

/// Random bistatic or monostatic scene with up to three walls.
pub fn fuzz_scene(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Scene {
    let mut v = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let monostatic = v(0.0, 1.0) < 0.25;
    let tx_pos = Vec3::new(v(-5.0, 5.0), v(-5.0, 0.0), v(1.0, 3.0));
    let target = Vec3::new(v(-5.0, 5.0), v(2.0, 10.0), v(0.5, 3.0));
    let mut anchors = Vec::new();
    if monostatic {
        anchors.push(anchor("m", tx_pos, target - tx_pos, AnchorRole::Monostatic, rows, cols));
    } else {
        let rx_pos = Vec3::new(v(-5.0, 5.0), v(-5.0, 0.0), v(1.0, 3.0));
        let aim = Vec3::new(v(-0.3, 0.3), v(-0.3, 0.3), v(-0.1, 0.1));
        anchors.push(anchor("tx", tx_pos, target - tx_pos + aim, AnchorRole::Tx, rows, cols));
        anchors.push(anchor("rx", rx_pos, target - rx_pos - aim, AnchorRole::Rx, rows, cols));
    }
    let n_walls = rng.random_range(0..=3);
    let surfaces = (0..n_walls)
        .map(|i| {
            let x0 = rng.random_range(-12.0..12.0);
            let y0 = rng.random_range(11.0..20.0);
            let len = rng.random_range(5.0..20.0);
            let g = Complex64::from_polar(rng.random_range(0.1..0.9), rng.random_range(-PI..PI));
            Surface::rectangle(
                format!("w{i}"),
                Vec3::new(x0, y0, 0.0),
                Vec3::new(len, rng.random_range(-3.0..3.0), 0.0),
                Vec3::new(0.0, 0.0, 4.0),
                g,
                SurfaceKind::Wall,
            )
            .unwrap()
        })
        .collect();
    Scene {
        name: "fuzz".into(),
        anchors,
        surfaces,
        targets: vec![PointTarget { position: target, rcs: rng.random_range(0.01..10.0), velocity: Vec3::zeros() }],
        test_region: TestRegion { x_min: -5.0, x_max: 5.0, y_min: 2.0, y_max: 10.0, z: 1.0, nx: 2, ny: 2 },
        blockers: vec![],
    }
}

pub fn feasible_points(scene: &Scene, cfg: &WaveformConfig, n: usize) -> Vec<Vec3> {
    let eval = CellEvaluator::new(scene, cfg).unwrap();
    let pts: Vec<Vec3> = scene
        .test_region
        .cells()
        .into_iter()
        .filter(|p| eval.classify(p).class == CellClass::Feasible)
        .collect();
    let stride = (pts.len() / n).max(1);
    pts.into_iter().step_by(stride).take(n).collect()
}

pub fn peb_with_target_at(scene: &Scene, cfg: &WaveformConfig, p: Vec3) -> f64 {
    let mut s = scene.clone();
    s.targets[0].position = p;
    let (tx, rx) = s.sensing_pair().unwrap();
    let ps = build_pathset(&s, cfg, &tx, &rx).unwrap();
    let fim = channel_fim(&ps, cfg).unwrap();
    position_efim(&fim, &ps, 0, &s).unwrap().peb_m
}


/// Finite-difference agreement on the three-path oracle scene.
///
/// Returns the deviations at relative steps `1e-6` and `1e-7`, and the ratio of
/// truncation errors at steps `2e-2` and `1e-2` (about 4 for a second-order scheme).
pub fn finite_difference_report() -> ([f64; 2], f64) {
    let cfg = small_cfg(2, 2, 12);
    let scene = oracle_scene(2, 2);
    let ps = build_pathset(&scene, &cfg, "tx", "rx").unwrap();
    assert_eq!(ps.paths.len(), 3, "LoS, wall and target expected");
    let fim = channel_fim(&ps, &cfg).unwrap();
    assert!(fim.params.iter().any(|p| p.kind == ParamKind::AodEl));
    let oracle = Oracle::new(&ps, &cfg);
    let b = cfg.bandwidth_hz();
    let dev = |rel: f64| max_rel_dev(&fim.matrix, &fd_fim(&oracle, &ps, true, rel, ps.noise_power_w, b));
    ([dev(1e-6), dev(1e-7)], dev(2e-2) / dev(1e-2))
}

/// Smallest `λ_min / trace` over `cases` random scenes, and how many of them had a target path.
pub fn fuzz_psd(cases: usize, seed: u64) -> (f64, usize) {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let dims = [(1, 1), (1, 2), (2, 2), (1, 4), (2, 3)];
    let mut worst = f64::INFINITY;
    let mut with_target = 0;
    for case in 0..cases {
        let (rows, cols) = dims[case % dims.len()];
        let band = if case % 2 == 0 { Band::Fr3_10GHz } else { Band::Fr2_60GHz };
        let cfg = WaveformConfig::preset(band).with_arrays(ArrayDims::new(rows, cols), ArrayDims::new(rows, cols));
        let scene = fuzz_scene(&mut rng, rows, cols);
        let (tx, rx) = scene.sensing_pair().unwrap();
        let ps = build_pathset(&scene, &cfg, &tx, &rx).unwrap();
        if ps.paths.is_empty() {
            continue;
        }
        if ps.target_path_index(0).is_some() {
            with_target += 1;
        }
        let fim = channel_fim(&ps, &cfg).unwrap();
        assert!((&fim.matrix - fim.matrix.transpose()).amax() <= 1e-12 * fim.matrix.amax());
        worst = worst.min(min_eig_ratio(&fim));
    }
    (worst, with_target)
}
