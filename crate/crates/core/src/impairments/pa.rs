//! Memoryless cubic PA and the range-ambiguity floor it leaves after
//! reciprocal (divide-by-transmit) channel estimation.

use std::cell::RefCell;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::ImpairmentError;

/// `y = x (1 − a3 |x|²)` applied after scaling the input to sit `backoff_db`
/// below the saturation amplitude `1/√(3 a3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    pub a3: f64,
    pub backoff_db: f64,
}

impl Default for PaModel {
    fn default() -> Self {
        Self { a3: 1.0, backoff_db: 0.0 }
    }
}

impl PaModel {
    pub fn validate(&self) -> Result<(), ImpairmentError> {
        if !(self.a3 > 0.0 && self.a3.is_finite()) {
            return Err(ImpairmentError::Invalid(format!("a3 must be > 0, got {}", self.a3)));
        }
        if !self.backoff_db.is_finite() {
            return Err(ImpairmentError::Invalid("backoff_db must be finite".into()));
        }
        Ok(())
    }

    /// Input amplitude at which the cubic characteristic peaks.
    pub fn saturation_amplitude(&self) -> f64 {
        1.0 / (3.0 * self.a3).sqrt()
    }
}

/// The bare cubic characteristic with no drive normalisation.
pub fn cubic(x: Complex64, a3: f64) -> Complex64 {
    x * (1.0 - a3 * x.norm_sqr())
}

/// Drives the PA at the configured back-off and returns the output on the input's scale.
///
/// The drive level is set from the block's own mean power, so the same block
/// always sees the same compression regardless of its absolute amplitude.
pub fn apply_pa(samples: &[Complex64], pa: &PaModel) -> Result<Vec<Complex64>, ImpairmentError> {
    pa.validate()?;
    if samples.is_empty() {
        return Err(ImpairmentError::Empty);
    }
    if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(ImpairmentError::Invalid("non-finite sample".into()));
    }
    let mean_power = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    if mean_power == 0.0 {
        return Ok(samples.to_vec());
    }
    let target = pa.saturation_amplitude().powi(2) * 10f64.powf(-pa.backoff_db / 10.0);
    let g = (target / mean_power).sqrt();
    Ok(samples.iter().map(|&s| cubic(s * g, pa.a3) / g).collect())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
    if inverse {
        let n = buf.len() as f64;
        buf.iter_mut().for_each(|v| *v /= n);
    }
}

/// Unnormalised forward DFT.
pub fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut b = x.to_vec();
    fft_in_place(&mut b, false);
    b
}

/// Inverse DFT scaled by `1/N`.
pub fn ifft(x: &[Complex64]) -> Vec<Complex64> {
    let mut b = x.to_vec();
    fft_in_place(&mut b, true);
    b
}

/// Delay-domain magnitude of `Y/X`, peak-normalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityProfile {
    /// Level per delay bin in dB relative to the peak.
    pub level_db: Vec<f64>,
    pub peak_bin: usize,
    /// Frequency bins left out because the transmit spectrum vanishes there.
    pub excluded_bins: Vec<usize>,
}

/// Lowest level reported, to keep exact zeros finite.
const PROFILE_FLOOR_DB: f64 = -3000.0;

pub fn range_ambiguity_profile(tx: &[Complex64], rx: &[Complex64]) -> Result<AmbiguityProfile, ImpairmentError> {
    if tx.len() != rx.len() {
        return Err(ImpairmentError::LengthMismatch(tx.len(), rx.len()));
    }
    if tx.is_empty() {
        return Err(ImpairmentError::Empty);
    }
    let rms = (tx.iter().map(|v| v.norm_sqr()).sum::<f64>() / tx.len() as f64).sqrt();
    let mut excluded_bins = Vec::new();
    let h: Vec<Complex64> = tx
        .iter()
        .zip(rx)
        .enumerate()
        .map(|(k, (x, y))| {
            if x.norm() < 1e-12 * rms {
                excluded_bins.push(k);
                Complex64::new(0.0, 0.0)
            } else {
                y / x
            }
        })
        .collect();
    if excluded_bins.len() == tx.len() {
        return Err(ImpairmentError::Invalid("transmit spectrum is zero in every bin".into()));
    }
    let p: Vec<f64> = ifft(&h).iter().map(|v| v.norm_sqr()).collect();
    let peak_bin = p
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > p[best] { i } else { best });
    let peak = p[peak_bin];
    let level_db = p
        .iter()
        .map(|v| if *v > 0.0 { (10.0 * (v / peak).log10()).max(PROFILE_FLOOR_DB) } else { PROFILE_FLOOR_DB })
        .collect();
    Ok(AmbiguityProfile { level_db, peak_bin, excluded_bins })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median level of all bins except the peak.
pub fn sidelobe_floor_db(profile: &AmbiguityProfile) -> f64 {
    let mut rest: Vec<f64> = profile
        .level_db
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != profile.peak_bin)
        .map(|(_, v)| *v)
        .collect();
    median(&mut rest)
}

/// Unit-power 64-QAM symbol.
pub fn qam64<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let level = |i: u32| (2.0 * i as f64 - 7.0) / 42f64.sqrt();
    Complex64::new(level(rng.random_range(0..8)), level(rng.random_range(0..8)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Ofdm,
    SingleCarrier,
}

impl Waveform {
    pub fn name(self) -> &'static str {
        match self {
            Waveform::Ofdm => "ofdm",
            Waveform::SingleCarrier => "sc",
        }
    }
}

/// Root-raised-cosine amplitude response; `f` in units of the symbol rate.
pub fn rrc_response(f: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let lo = (1.0 - rolloff) / 2.0;
    let hi = (1.0 + rolloff) / 2.0;
    if f <= lo {
        1.0
    } else if f <= hi {
        (0.5 * (1.0 + (std::f64::consts::PI / rolloff * (f - lo)).cos())).sqrt()
    } else {
        0.0
    }
}

/// One transmitted block: frequency-domain samples and the time signal.
#[derive(Debug, Clone)]
pub struct TxBlock {
    pub freq: Vec<Complex64>,
    pub time: Vec<Complex64>,
}

/// OFDM: the symbols occupy every subcarrier.
pub fn ofdm_block(symbols: &[Complex64]) -> TxBlock {
    TxBlock { freq: symbols.to_vec(), time: ifft(symbols) }
}

/// Single carrier with RRC pulse shaping at `oversampling` samples per symbol.
///
/// Upsampling repeats the symbol spectrum; the RRC response then limits it to
/// `(1 + rolloff)` times the symbol rate.
pub fn sc_block(symbols: &[Complex64], rolloff: f64, oversampling: usize) -> TxBlock {
    let n = symbols.len();
    let s = fft(symbols);
    let total = n * oversampling;
    let freq: Vec<Complex64> = (0..total)
        .map(|k| {
            let signed = if k < total.div_ceil(2) { k as f64 } else { k as f64 - total as f64 };
            s[k % n] * rrc_response(signed / n as f64, rolloff)
        })
        .collect();
    let time = ifft(&freq);
    TxBlock { freq, time }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaRafConfig {
    pub pa: PaModel,
    pub block_len: usize,
    pub blocks: usize,
    pub rolloff: f64,
    pub oversampling: usize,
    pub seed: u64,
}

impl Default for PaRafConfig {
    fn default() -> Self {
        Self { pa: PaModel::default(), block_len: 1024, blocks: 200, rolloff: 0.3, oversampling: 4, seed: 1 }
    }
}

impl PaRafConfig {
    pub fn validate(&self) -> Result<(), ImpairmentError> {
        self.pa.validate()?;
        if self.block_len < 2 || self.blocks == 0 || self.oversampling == 0 {
            return Err(ImpairmentError::Invalid("block_len >= 2, blocks >= 1 and oversampling >= 1 required".into()));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(ImpairmentError::Invalid(format!("rolloff {} outside (0, 1]", self.rolloff)));
        }
        Ok(())
    }
}

/// Result of one simulated block.
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub profile: AmbiguityProfile,
    pub floor_db: f64,
    pub tx: TxBlock,
    pub rx_freq: Vec<Complex64>,
}

fn block_rng(seed: u64, waveform: Waveform, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lane = match waveform {
        Waveform::Ofdm => 0u64,
        Waveform::SingleCarrier => 1u64 << 32,
    };
    rng.set_stream(lane + block as u64);
    rng
}

/// Simulates block `block` of the sweep, noise-free, with or without the PA.
///
/// The symbols depend only on `(seed, waveform, block)`, so the PA and PA-free
/// runs see identical data.
pub fn simulate_block(
    cfg: &PaRafConfig,
    waveform: Waveform,
    with_pa: bool,
    block: usize,
) -> Result<BlockOutcome, ImpairmentError> {
    let mut rng = block_rng(cfg.seed, waveform, block);
    let symbols: Vec<Complex64> = (0..cfg.block_len).map(|_| qam64(&mut rng)).collect();
    let tx = match waveform {
        Waveform::Ofdm => ofdm_block(&symbols),
        Waveform::SingleCarrier => sc_block(&symbols, cfg.rolloff, cfg.oversampling),
    };
    let y = if with_pa { apply_pa(&tx.time, &cfg.pa)? } else { tx.time.clone() };
    let rx_freq = fft(&y);
    let profile = range_ambiguity_profile(&tx.freq, &rx_freq)?;
    let floor_db = sidelobe_floor_db(&profile);
    Ok(BlockOutcome { profile, floor_db, tx, rx_freq })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorSummary {
    pub waveform: Waveform,
    pub with_pa: bool,
    /// Median over blocks of the per-block sidelobe floor.
    pub median_floor_db: f64,
    /// Per-bin median over blocks of the peak-normalised profile.
    pub median_profile_db: Vec<f64>,
}

fn run_blocks<T: Send>(
    workers: usize,
    blocks: usize,
    f: impl Fn(usize) -> Result<T, ImpairmentError> + Sync,
) -> Result<Vec<T>, ImpairmentError> {
    if workers <= 1 {
        return (0..blocks).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ImpairmentError::Pool(e.to_string()))?;
    pool.install(|| (0..blocks).into_par_iter().map(&f).collect())
}

/// Median floor and profile over `cfg.blocks` blocks.
pub fn simulate_floor(
    cfg: &PaRafConfig,
    waveform: Waveform,
    with_pa: bool,
    workers: usize,
) -> Result<FloorSummary, ImpairmentError> {
    cfg.validate()?;
    let outcomes = run_blocks(workers, cfg.blocks, |b| {
        simulate_block(cfg, waveform, with_pa, b).map(|o| (o.floor_db, o.profile.level_db))
    })?;
    let mut floors: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let bins = outcomes[0].1.len();
    let median_profile_db = (0..bins)
        .map(|k| {
            let mut col: Vec<f64> = outcomes.iter().map(|o| o.1[k]).collect();
            median(&mut col)
        })
        .collect();
    Ok(FloorSummary { waveform, with_pa, median_floor_db: median(&mut floors), median_profile_db })
}

/// Frequency-domain distortion after removing the best linear (Bussgang) gain.
pub fn bussgang_residual(x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>, ImpairmentError> {
    if x.len() != y.len() {
        return Err(ImpairmentError::LengthMismatch(x.len(), y.len()));
    }
    let num: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
    if den == 0.0 {
        return Err(ImpairmentError::Empty);
    }
    let g = num / den;
    Ok(x.iter().zip(y).map(|(a, b)| b - g * a).collect())
}

/// Excess kurtosis `E[v⁴]/E[v²]² − 3` of zero-mean-adjusted data.
pub fn excess_kurtosis(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let (m2, m4) = v.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - mean;
        (a + d * d, b + d.powi(4))
    });
    (m4 / n) / (m2 / n).powi(2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_has_no_regrowth() {
        let n = 64;
        let tone: Vec<Complex64> =
            (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 5.0 * k as f64 / n as f64)).collect();
        let y = apply_pa(&tone, &PaModel::default()).unwrap();
        let spec = fft(&y);
        for (k, v) in spec.iter().enumerate() {
            if k != 5 {
                assert!(v.norm() < 1e-9, "bin {k}: {}", v.norm());
            }
        }
        // 0 dB back-off: drive at saturation, gain 1 − 1/3
        assert!((spec[5].norm() / n as f64 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_vanishes_as_a3_goes_to_zero() {
        let x = Complex64::new(0.3, -0.8);
        for a3 in [1e-3, 1e-6, 1e-9] {
            assert!((cubic(x, a3) - x).norm() <= a3 * x.norm().powi(3) * (1.0 + 1e-9) + 1e-15);
        }
        assert_eq!(cubic(x, 0.0), x);
    }

    #[test]
    fn identity_channel_is_a_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Complex64> = (0..256).map(|_| qam64(&mut rng)).collect();
        let p = range_ambiguity_profile(&x, &x).unwrap();
        assert_eq!(p.peak_bin, 0);
        assert!(p.level_db.iter().skip(1).all(|v| *v < -250.0));
    }

    #[test]
    fn delayed_echo_peaks_at_its_bin() {
        let n = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Complex64> = (0..n).map(|_| qam64(&mut rng)).collect();
        let y: Vec<Complex64> = x
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(0.5, -2.0 * std::f64::consts::PI * 17.0 * k as f64 / n as f64))
            .collect();
        assert_eq!(range_ambiguity_profile(&x, &y).unwrap().peak_bin, 17);
    }

    #[test]
    fn zero_bins_are_excluded() {
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)];
        let p = range_ambiguity_profile(&x, &x).unwrap();
        assert_eq!(p.excluded_bins, vec![1]);
        assert!(range_ambiguity_profile(&x, &x[..3]).is_err());
    }

    #[test]
    fn rrc_is_power_complementary() {
        for i in 0..=30 {
            let f = 0.35 + 0.01 * i as f64 / 3.0;
            let s = rrc_response(f, 0.3).powi(2) + rrc_response(1.0 - f, 0.3).powi(2);
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(rrc_response(0.66, 0.3), 0.0);
    }

    #[test]
    fn qam_has_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: f64 = (0..200_000).map(|_| qam64(&mut rng).norm_sqr()).sum::<f64>() / 200_000.0;
        assert!((p - 1.0).abs() < 0.01);
    }
}
