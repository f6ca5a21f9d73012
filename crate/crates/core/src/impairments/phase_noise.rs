//! Free-running oscillator phase noise in a monostatic radar whose receive LO
//! is a delayed copy of the transmit LO.
//!
//! The receiver sees `ψ(t) = φ(t − τ_ch) − φ(t − τ_lo)`. For a Wiener phase
//! `φ` this is the sum of the increments over an interval of length
//! `|τ_ch − τ_lo|`, so it vanishes when the two delays match.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ImpairmentError;
use crate::impairments::pa::{fft, ifft};
use crate::waveform::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnModel {
    /// 3 dB linewidth at `ref_carrier_hz`.
    pub linewidth_hz: f64,
    pub ref_carrier_hz: f64,
    pub sample_rate_hz: f64,
}

impl Default for PnModel {
    fn default() -> Self {
        Self { linewidth_hz: 100.0, ref_carrier_hz: 30e9, sample_rate_hz: 100e6 }
    }
}

impl PnModel {
    pub fn validate(&self) -> Result<(), ImpairmentError> {
        if !(self.linewidth_hz >= 0.0 && self.linewidth_hz.is_finite()) {
            return Err(ImpairmentError::Invalid(format!("linewidth {} must be >= 0", self.linewidth_hz)));
        }
        if !(self.ref_carrier_hz > 0.0 && self.sample_rate_hz > 0.0) {
            return Err(ImpairmentError::Invalid("reference carrier and sample rate must be > 0".into()));
        }
        Ok(())
    }

    /// Linewidth scaled to `carrier_hz` (phase noise grows with the square of the multiplication factor).
    pub fn effective_linewidth(&self, carrier_hz: f64) -> f64 {
        self.linewidth_hz * (carrier_hz / self.ref_carrier_hz).powi(2)
    }

    /// Variance of a phase increment over `dt` seconds.
    pub fn increment_variance(&self, carrier_hz: f64, dt: f64) -> f64 {
        2.0 * PI * self.effective_linewidth(carrier_hz) * dt.abs()
    }
}

/// Residual phase at `t_k = k / fs`, `k = 0..n_samples`.
///
/// The Wiener path is drawn exactly at the union of the two shifted sampling
/// grids, so no interpolation error enters.
pub fn simulate_differential_pn<R: Rng + ?Sized>(
    pn: &PnModel,
    carrier_hz: f64,
    tau_channel_s: f64,
    tau_lo_s: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ImpairmentError> {
    pn.validate()?;
    if !(tau_channel_s >= 0.0 && tau_lo_s >= 0.0) {
        return Err(ImpairmentError::Invalid("delays must be >= 0".into()));
    }
    if !(carrier_hz > 0.0) {
        return Err(ImpairmentError::Invalid("carrier must be > 0".into()));
    }
    if tau_channel_s == tau_lo_s {
        return Ok(vec![0.0; n_samples]);
    }
    let dt = 1.0 / pn.sample_rate_hz;
    // Both grids are the same uniform grid shifted, so a merge visits the
    // union in time order. Ties go to the channel grid first.
    let times = |tau: f64, k: usize| k as f64 * dt - tau;
    let mut phase = [vec![0.0; n_samples], vec![0.0; n_samples]];
    let (mut i, mut j) = (0usize, 0usize);
    let mut phi = 0.0;
    let mut last_t: Option<f64> = None;
    while i < n_samples || j < n_samples {
        let take_channel = j >= n_samples || (i < n_samples && times(tau_channel_s, i) <= times(tau_lo_s, j));
        let t = if take_channel { times(tau_channel_s, i) } else { times(tau_lo_s, j) };
        if let Some(prev) = last_t {
            let var = pn.increment_variance(carrier_hz, t - prev);
            if var > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                phi += var.sqrt() * z;
            }
        }
        last_t = Some(t);
        if take_channel {
            phase[0][i] = phi;
            i += 1;
        } else {
            phase[1][j] = phi;
            j += 1;
        }
    }
    Ok(phase[0].iter().zip(&phase[1]).map(|(a, b)| a - b).collect())
}

/// Single-echo OFDM setup used by the range-error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnSweepConfig {
    pub pn: PnModel,
    pub carriers_hz: Vec<f64>,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    /// Target range; the echo delay is `2R/c`.
    pub range_m: f64,
    /// Number of LO delays, evenly spaced from `τ_ch` (matched) down to 0.
    pub points: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for PnSweepConfig {
    fn default() -> Self {
        Self {
            pn: PnModel::default(),
            carriers_hz: vec![30e9, 300e9],
            bandwidth_hz: 100e6,
            n_subcarriers: 1024,
            range_m: 300.0,
            points: 20,
            trials: 500,
            seed: 1,
        }
    }
}

impl PnSweepConfig {
    pub fn validate(&self) -> Result<(), ImpairmentError> {
        self.pn.validate()?;
        if self.carriers_hz.is_empty() || self.carriers_hz.iter().any(|c| !(*c > 0.0)) {
            return Err(ImpairmentError::Invalid("at least one positive carrier required".into()));
        }
        if !(self.bandwidth_hz > 0.0) || self.n_subcarriers < 2 || self.points < 1 || self.trials < 1 {
            return Err(ImpairmentError::Invalid(
                "bandwidth > 0, n_subcarriers >= 2, points >= 1 and trials >= 1 required".into(),
            ));
        }
        if !(self.range_m >= 0.0) {
            return Err(ImpairmentError::Invalid("range must be >= 0".into()));
        }
        let tau = self.tau_channel();
        let max_tau = self.n_subcarriers as f64 / self.bandwidth_hz / 2.0;
        if tau >= max_tau {
            return Err(ImpairmentError::Invalid(format!(
                "echo delay {tau:e} s exceeds the unambiguous delay {max_tau:e} s"
            )));
        }
        Ok(())
    }

    pub fn tau_channel(&self) -> f64 {
        2.0 * self.range_m / SPEED_OF_LIGHT
    }

    /// LO delays from matched (`τ_ch`) down to zero.
    pub fn tau_lo_list(&self) -> Vec<f64> {
        let tau = self.tau_channel();
        if self.points == 1 {
            return vec![tau];
        }
        (0..self.points).map(|i| tau * (1.0 - i as f64 / (self.points - 1) as f64)).collect()
    }
}

/// Weighted least-squares phase slope across subcarriers, as a delay.
///
/// Uses adjacent-bin phase increments weighted by the bin magnitudes, which
/// needs no phase unwrapping while the per-bin rotation stays below π.
pub fn estimate_delay(h: &[Complex64], scs_hz: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for w in h.windows(2) {
        let inc = w[1] * w[0].conj();
        let weight = inc.norm();
        num += weight * inc.arg();
        den += weight;
    }
    if den == 0.0 {
        return 0.0;
    }
    -(num / den) / (2.0 * PI * scs_hz)
}

/// Range error of one trial for one LO delay and carrier.
pub fn range_error_trial<R: Rng + ?Sized>(
    cfg: &PnSweepConfig,
    carrier_hz: f64,
    tau_lo_s: f64,
    rng: &mut R,
) -> Result<f64, ImpairmentError> {
    let n = cfg.n_subcarriers;
    let scs = cfg.bandwidth_hz / n as f64;
    let tau = cfg.tau_channel();
    let pn = PnModel { sample_rate_hz: cfg.bandwidth_hz, ..cfg.pn };
    let psi = simulate_differential_pn(&pn, carrier_hz, tau, tau_lo_s, n, rng)?;
    // QPSK pilots; the data is fixed so that only the phase noise varies
    let x: Vec<Complex64> = (0..n)
        .map(|k| {
            let q = (k * 7 + 3) % 4;
            Complex64::from_polar(1.0, PI / 4.0 + q as f64 * PI / 2.0)
        })
        .collect();
    let rx_freq: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * scs * tau))
        .collect();
    let mut y = ifft(&rx_freq);
    for (s, p) in y.iter_mut().zip(&psi) {
        *s *= Complex64::from_polar(1.0, *p);
    }
    let yf = fft(&y);
    let h: Vec<Complex64> = yf.iter().zip(&x).map(|(a, b)| a / b).collect();
    let tau_hat = estimate_delay(&h, scs);
    Ok((tau_hat - tau).abs() * SPEED_OF_LIGHT / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnSweepRow {
    pub tau_lo_s: f64,
    pub mismatch_s: f64,
    pub carrier_hz: f64,
    pub mean_range_error_m: f64,
    /// Conventional receiver: LO not delayed.
    pub star: bool,
}

/// Mean absolute range error per (carrier, LO delay).
///
/// Trial `i` draws from stream `i` of the master seed at every sweep point and
/// carrier, so curves share their random numbers and the result is the same
/// for any worker count.
pub fn pn_range_error_sweep(cfg: &PnSweepConfig, workers: usize) -> Result<Vec<PnSweepRow>, ImpairmentError> {
    cfg.validate()?;
    let tau = cfg.tau_channel();
    let points: Vec<(f64, f64)> = cfg
        .carriers_hz
        .iter()
        .flat_map(|&c| cfg.tau_lo_list().into_iter().map(move |t| (c, t)))
        .collect();
    let trial = |(carrier, tau_lo): (f64, f64), i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        range_error_trial(cfg, carrier, tau_lo, &mut rng)
    };
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |i| (p, i))).collect();
    let errors: Vec<f64> = if workers <= 1 {
        jobs.iter().map(|&(p, i)| trial(points[p], i)).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ImpairmentError::Pool(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(|&(p, i)| trial(points[p], i)).collect::<Result<_, _>>())?
    };
    Ok(points
        .iter()
        .enumerate()
        .map(|(p, &(carrier_hz, tau_lo_s))| {
            let chunk = &errors[p * cfg.trials..(p + 1) * cfg.trials];
            PnSweepRow {
                tau_lo_s,
                mismatch_s: (tau - tau_lo_s).abs(),
                carrier_hz,
                mean_range_error_m: chunk.iter().sum::<f64>() / cfg.trials as f64,
                star: tau_lo_s == 0.0,
            }
        })
        .collect())
}
