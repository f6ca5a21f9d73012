//! Fisher information of the beam-swept OFDM observation and the position
//! error bound derived from it.
//!
//! Observation model, subcarrier `n` (centred index `ν`), symbol `m = (i, j)`
//! for tx beam `i` and rx beam `j`:
//!
//! ```text
//! μ[n, m] = √(P/N) Σ_p α_p · (w_rx,jᴴ a_rx(φᴬ_p)) · (w_tx,iᴴ a_tx(φᴰ_p)) · exp(−j2π ν Δf τ_p)
//! ```
//!
//! with circularly-symmetric noise of variance `σ²/N` per resource element.
//! Every derivative factorises into a symbol part and a subcarrier part, so the
//! double sum splits into products of single sums.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;

use crate::channel::{beam_gain, PathSet};
use crate::error::BoundsError;
use crate::scene::{Anchor, Scene, Vec3};
use crate::waveform::{planar_fft_codebook, WaveformConfig, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Delay,
    AodAz,
    AodEl,
    AoaAz,
    AoaEl,
    GainRe,
    GainIm,
}

impl ParamKind {
    pub fn is_gain(self) -> bool {
        matches!(self, ParamKind::GainRe | ParamKind::GainIm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Param {
    pub path: usize,
    pub kind: ParamKind,
}

/// Parameter ordering used by [`channel_fim`]: per path `τ, φᴰ_az, [φᴰ_el], φᴬ_az, [φᴬ_el], Re α, Im α`.
pub fn parameter_layout(n_paths: usize, with_elevation: bool) -> Vec<Param> {
    let mut kinds = vec![ParamKind::Delay, ParamKind::AodAz];
    if with_elevation {
        kinds.push(ParamKind::AodEl);
    }
    kinds.push(ParamKind::AoaAz);
    if with_elevation {
        kinds.push(ParamKind::AoaEl);
    }
    kinds.extend([ParamKind::GainRe, ParamKind::GainIm]);
    (0..n_paths)
        .flat_map(|path| kinds.iter().map(move |&kind| Param { path, kind }))
        .collect()
}

/// Elevation parameters are carried only when some array has more than one row
/// and the target leaves the anchors' horizontal plane.
pub fn needs_elevation(pathset: &PathSet) -> bool {
    let planar = pathset.tx_array.rows > 1 || pathset.rx_array.rows > 1;
    let off_plane = pathset
        .paths
        .iter()
        .filter(|p| p.associated_target.is_some())
        .any(|p| p.aod_el.abs() > 1e-12 || p.aoa_el.abs() > 1e-12);
    planar && off_plane
}

#[derive(Debug, Clone)]
pub struct ChannelFim {
    pub params: Vec<Param>,
    pub matrix: DMatrix<f64>,
}

impl ChannelFim {
    pub fn index_of(&self, param: Param) -> Option<usize> {
        self.params.iter().position(|p| *p == param)
    }
}

/// Position-domain result for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBound {
    /// 2×2 equivalent FIM of the target's (x, y).
    pub efim: Matrix2<f64>,
    /// `√trace(efim⁻¹)`, or `+∞` when the EFIM is singular.
    pub peb_m: f64,
}

#[derive(Debug, Clone)]
pub struct FimResult {
    pub channel_fim: ChannelFim,
    pub position_efim: Matrix2<f64>,
    pub peb_m: f64,
}

/// Beamformed responses of one path over every tx and rx beam.
struct BeamFactors {
    tx: [Vec<Complex64>; 3],
    rx: [Vec<Complex64>; 3],
}

fn beam_factors(
    pathset: &PathSet,
    path: usize,
    tx_beams: &[Vec<Complex64>],
    rx_beams: &[Vec<Complex64>],
) -> BeamFactors {
    let p = &pathset.paths[path];
    let at = pathset.tx_array.response(p.aod_az, p.aod_el, pathset.wavelength);
    let ar = pathset.rx_array.response(p.aoa_az, p.aoa_el, pathset.wavelength);
    let project = |beams: &[Vec<Complex64>], v: &[Complex64]| -> Vec<Complex64> {
        beams.iter().map(|w| beam_gain(w, v)).collect()
    };
    BeamFactors {
        tx: [project(tx_beams, &at.a), project(tx_beams, &at.d_az), project(tx_beams, &at.d_el)],
        rx: [project(rx_beams, &ar.a), project(rx_beams, &ar.d_az), project(rx_beams, &ar.d_el)],
    }
}

/// `Σ_ν ν^k e^{jνx}` for k = 0, 1, 2 over centred subcarrier indices.
fn subcarrier_sums(n: usize, x: f64) -> [Complex64; 3] {
    let centre = (n as f64 - 1.0) / 2.0;
    let mut s = [Complex64::new(0.0, 0.0); 3];
    for k in 0..n {
        let nu = k as f64 - centre;
        let e = Complex64::from_polar(1.0, nu * x);
        s[0] += e;
        s[1] += e * nu;
        s[2] += e * (nu * nu);
    }
    s
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Fisher information of all channel parameters under the FFT-codebook sweep.
pub fn channel_fim(pathset: &PathSet, cfg: &WaveformConfig) -> Result<ChannelFim, BoundsError> {
    let tx_beams = planar_fft_codebook(pathset.tx_array.dims());
    let rx_beams = planar_fft_codebook(pathset.rx_array.dims());
    channel_fim_with_beams(pathset, cfg, &tx_beams, &rx_beams, needs_elevation(pathset))
}

/// [`channel_fim`] with explicit beam sets; one symbol is observed per (tx, rx) beam pair.
pub fn channel_fim_with_beams(
    pathset: &PathSet,
    cfg: &WaveformConfig,
    tx_beams: &[Vec<Complex64>],
    rx_beams: &[Vec<Complex64>],
    with_elevation: bool,
) -> Result<ChannelFim, BoundsError> {
    let n_paths = pathset.paths.len();
    if n_paths == 0 {
        return Err(BoundsError::EmptyPathSet);
    }
    let params = parameter_layout(n_paths, with_elevation);
    let factors: Vec<BeamFactors> =
        (0..n_paths).map(|p| beam_factors(pathset, p, tx_beams, rx_beams)).collect();

    let omega = 2.0 * PI * cfg.scs_hz;
    let mut sums = vec![[Complex64::new(0.0, 0.0); 3]; n_paths * n_paths];
    for a in 0..n_paths {
        for b in a..n_paths {
            let x = omega * (pathset.paths[a].delay_s - pathset.paths[b].delay_s);
            let s = subcarrier_sums(cfg.n_subcarriers, x);
            sums[a * n_paths + b] = s;
            // reversing the pair conjugates every sum
            sums[b * n_paths + a] = s.map(|v| v.conj());
        }
    }

    // (coefficient, tx factor index, rx factor index, delay-weighted)
    let describe = |prm: &Param| -> (Complex64, usize, usize, bool) {
        let alpha = pathset.paths[prm.path].gain;
        match prm.kind {
            ParamKind::Delay => (alpha, 0, 0, true),
            ParamKind::AodAz => (alpha, 1, 0, false),
            ParamKind::AodEl => (alpha, 2, 0, false),
            ParamKind::AoaAz => (alpha, 0, 1, false),
            ParamKind::AoaEl => (alpha, 0, 2, false),
            ParamKind::GainRe => (Complex64::new(1.0, 0.0), 0, 0, false),
            ParamKind::GainIm => (Complex64::i(), 0, 0, false),
        }
    };

    let scale = 2.0 * cfg.tx_power_w() / pathset.noise_power_w;
    let d = params.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (ia, pa) in params.iter().enumerate() {
        let (ca, ta, ra, wa) = describe(pa);
        for (ib, pb) in params.iter().enumerate().skip(ia) {
            let (cb, tb, rb, wb) = describe(pb);
            let s = &sums[pa.path * n_paths + pb.path];
            let k = match (wa, wb) {
                (false, false) => s[0],
                (true, false) => Complex64::new(0.0, omega) * s[1],
                (false, true) => Complex64::new(0.0, -omega) * s[1],
                (true, true) => s[2] * (omega * omega),
            };
            let fa = &factors[pa.path];
            let fb = &factors[pb.path];
            let sym = inner(&fa.tx[ta], &fb.tx[tb]) * inner(&fa.rx[ra], &fb.rx[rb]);
            let v = scale * (ca.conj() * cb * sym * k).re;
            m[(ia, ib)] = v;
            m[(ib, ia)] = v;
        }
    }
    Ok(ChannelFim { params, matrix: m })
}

/// Gradient of a target path's geometric parameter with respect to the target position.
fn param_gradient(kind: ParamKind, tx: &Anchor, rx: &Anchor, p: &Vec3) -> Vec3 {
    match kind {
        ParamKind::Delay => {
            let u_tx = (p - tx.position).normalize();
            let u_rx = (p - rx.position).normalize();
            (u_tx + u_rx) / SPEED_OF_LIGHT
        }
        ParamKind::AodAz => tx.angle_gradients(p).0,
        ParamKind::AodEl => tx.angle_gradients(p).1,
        ParamKind::AoaAz => rx.angle_gradients(p).0,
        ParamKind::AoaEl => rx.angle_gradients(p).1,
        ParamKind::GainRe | ParamKind::GainIm => Vec3::zeros(),
    }
}

/// Schur complement `A − B C⁻¹ Bᵀ` on a diagonally equilibrated copy of `j`.
///
/// `keep` and `drop` index into `j`. Returns `None` when the nuisance block is singular.
pub fn schur_eliminate(j: &DMatrix<f64>, keep: &[usize], drop: &[usize]) -> Option<DMatrix<f64>> {
    let scale = |i: usize| {
        let d = j[(i, i)];
        if d > 0.0 && d.is_finite() {
            1.0 / d.sqrt()
        } else {
            1.0
        }
    };
    let sk: Vec<f64> = keep.iter().map(|&i| scale(i)).collect();
    let sd: Vec<f64> = drop.iter().map(|&i| scale(i)).collect();
    let a = DMatrix::from_fn(keep.len(), keep.len(), |r, c| j[(keep[r], keep[c])] * sk[r] * sk[c]);
    if drop.is_empty() {
        return Some(DMatrix::from_fn(keep.len(), keep.len(), |r, c| a[(r, c)] / (sk[r] * sk[c])));
    }
    let b = DMatrix::from_fn(keep.len(), drop.len(), |r, c| j[(keep[r], drop[c])] * sk[r] * sd[c]);
    let cm = DMatrix::from_fn(drop.len(), drop.len(), |r, c| j[(drop[r], drop[c])] * sd[r] * sd[c]);
    let reduced = match cm.clone().cholesky() {
        Some(ch) => &a - &b * ch.solve(&b.transpose()),
        None => {
            let inv = cm.try_inverse()?;
            &a - &b * inv * b.transpose()
        }
    };
    if reduced.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        0.5 * (reduced[(r, c)] + reduced[(c, r)]) / (sk[r] * sk[c])
    }))
}

fn peb_from_efim(efim: &Matrix2<f64>) -> f64 {
    let (a, b, d) = (efim[(0, 0)], efim[(0, 1)], efim[(1, 1)]);
    let det = a * d - b * b;
    let tr = a + d;
    if !(det.is_finite() && tr.is_finite()) || tr <= 0.0 || det <= 1e-12 * tr * tr {
        return f64::INFINITY;
    }
    ((a + d) / det).sqrt()
}

/// Equivalent FIM of the target's horizontal position.
///
/// All complex gains are nuisance parameters and are eliminated by Schur
/// complement. Geometric parameters of non-target paths (LoS, reflections) are
/// treated as known, so their rows are simply not part of the problem.
pub fn position_efim(
    fim: &ChannelFim,
    pathset: &PathSet,
    target_id: usize,
    scene: &Scene,
) -> Result<PositionBound, BoundsError> {
    let tx = scene.anchor(&pathset.tx_id)?;
    let rx = scene.anchor(&pathset.rx_id)?;
    let target = scene.targets.get(target_id).ok_or(BoundsError::NoTargetPath(target_id))?;
    position_efim_at(fim, pathset, target_id, tx, rx, &target.position)
}

/// [`position_efim`] with the anchors and target position given explicitly.
pub fn position_efim_at(
    fim: &ChannelFim,
    pathset: &PathSet,
    target_id: usize,
    tx: &Anchor,
    rx: &Anchor,
    target_position: &Vec3,
) -> Result<PositionBound, BoundsError> {
    let t = pathset.target_path_index(target_id).ok_or(BoundsError::NoTargetPath(target_id))?;
    let keep: Vec<usize> = fim
        .params
        .iter()
        .enumerate()
        .filter(|(_, p)| p.path == t && !p.kind.is_gain())
        .map(|(i, _)| i)
        .collect();
    let drop: Vec<usize> =
        fim.params.iter().enumerate().filter(|(_, p)| p.kind.is_gain()).map(|(i, _)| i).collect();

    let Some(je) = schur_eliminate(&fim.matrix, &keep, &drop) else {
        return Ok(PositionBound { efim: Matrix2::zeros(), peb_m: f64::INFINITY });
    };
    let grads: Vec<Vector2<f64>> = keep
        .iter()
        .map(|&i| {
            let g = param_gradient(fim.params[i].kind, tx, rx, target_position);
            Vector2::new(g.x, g.y)
        })
        .collect();
    let mut efim = Matrix2::zeros();
    for (r, gr) in grads.iter().enumerate() {
        for (c, gc) in grads.iter().enumerate() {
            efim += gr * gc.transpose() * je[(r, c)];
        }
    }
    efim = 0.5 * (efim + efim.transpose());
    Ok(PositionBound { peb_m: peb_from_efim(&efim), efim })
}

/// Convenience wrapper: channel FIM plus position bound for the scene's target `target_id`.
pub fn fim_result(
    pathset: &PathSet,
    cfg: &WaveformConfig,
    target_id: usize,
    scene: &Scene,
) -> Result<FimResult, BoundsError> {
    let fim = channel_fim(pathset, cfg)?;
    let pb = position_efim(&fim, pathset, target_id, scene)?;
    Ok(FimResult { channel_fim: fim, position_efim: pb.efim, peb_m: pb.peb_m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ArrayGeometry, PathKind, PropagationPath};
    use crate::waveform::{ArrayDims, Band};

    fn toy_pathset(delay: f64, gain: Complex64) -> PathSet {
        PathSet {
            paths: vec![PropagationPath {
                kind: PathKind::TargetScatter,
                delay_s: delay,
                aod_az: 0.2,
                aod_el: 0.0,
                aoa_az: -0.4,
                aoa_el: 0.0,
                doppler_hz: 0.0,
                gain,
                associated_target: Some(0),
                surface_id: None,
            }],
            noise_power_w: 1e-3,
            tx_id: "tx".into(),
            rx_id: "rx".into(),
            tx_array: ArrayGeometry { rows: 1, cols: 2, spacing: 0.5 },
            rx_array: ArrayGeometry { rows: 1, cols: 2, spacing: 0.5 },
            wavelength: 1.0,
        }
    }

    #[test]
    fn delay_entry_matches_closed_form() {
        let mut cfg = WaveformConfig::preset(Band::Fr3_10GHz).with_arrays(ArrayDims::new(1, 2), ArrayDims::new(1, 2));
        cfg.n_subcarriers = 3;
        cfg.tx_power_dbm = 30.0; // 1 W
        let ps = toy_pathset(3e-7, Complex64::new(1.0, 0.0));
        let fim = channel_fim(&ps, &cfg).unwrap();
        let i = fim.index_of(Param { path: 0, kind: ParamKind::Delay }).unwrap();
        // aggregate beam energy over the sweep: Σ_m |g_rx g_tx|²
        let tx_cb = planar_fft_codebook(ArrayDims::new(1, 2));
        let at = ps.tx_array.response(0.2, 0.0, 1.0).a;
        let ar = ps.rx_array.response(-0.4, 0.0, 1.0).a;
        let gt: f64 = tx_cb.iter().map(|w| beam_gain(w, &at).norm_sqr()).sum();
        let gr: f64 = tx_cb.iter().map(|w| beam_gain(w, &ar).norm_sqr()).sum();
        let sigma_sample = ps.noise_power_w / 3.0;
        let amp2 = 1.0 / 3.0;
        let sum_n2 = 2.0; // ν ∈ {−1, 0, 1}
        let expect = 2.0 / sigma_sample * amp2 * (2.0 * PI * cfg.scs_hz).powi(2) * sum_n2 * gt * gr;
        assert!(((fim.matrix[(i, i)] - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn fim_scales_linearly_with_power() {
        let cfg = WaveformConfig::preset(Band::Fr3_10GHz).with_arrays(ArrayDims::new(1, 2), ArrayDims::new(1, 2));
        let mut cfg2 = cfg.clone();
        cfg2.tx_power_dbm += 10.0 * 2f64.log10();
        let ps = toy_pathset(1e-7, Complex64::from_polar(1e-3, 0.7));
        let a = channel_fim(&ps, &cfg).unwrap().matrix;
        let b = channel_fim(&ps, &cfg2).unwrap().matrix;
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((y - 2.0 * x).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn schur_matches_direct_inverse() {
        let j = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let red = schur_eliminate(&j, &[0, 1], &[2]).unwrap();
        let inv = j.clone().try_inverse().unwrap();
        let sub = DMatrix::from_fn(2, 2, |r, c| inv[(r, c)]);
        let back = sub.try_inverse().unwrap();
        assert!((red - back).norm() < 1e-12);
    }

    #[test]
    fn singular_position_efim_reports_infinity() {
        let e = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        assert!(peb_from_efim(&e).is_infinite());
        let e = Matrix2::new(4.0, 0.0, 0.0, 4.0);
        assert!((peb_from_efim(&e) - (0.5f64).sqrt()).abs() < 1e-15);
    }
}
