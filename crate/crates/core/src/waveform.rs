//! OFDM / array / codebook parameters, frame timing and the resolution KPIs.
//!
//! One OFDM symbol is transmitted per (tx beam, rx beam) pair of the FFT
//! codebook, swept in row-major order, so the symbol count equals the product
//! of the tx and rx element counts.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::WaveformError;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Normal cyclic-prefix ratio 144/2048.
pub const DEFAULT_CP_OVERHEAD: f64 = 0.0703;

/// Rayleigh-type factor of the angular resolution rule.
const ANGULAR_RESOLUTION_FACTOR: f64 = 0.89;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "fr3_10ghz")]
    Fr3_10GHz,
    #[serde(rename = "fr2_60ghz")]
    Fr2_60GHz,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::Fr3_10GHz => "fr3_10ghz",
            Band::Fr2_60GHz => "fr2_60ghz",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = WaveformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fr3_10ghz" => Ok(Band::Fr3_10GHz),
            "fr2_60ghz" => Ok(Band::Fr2_60GHz),
            other => Err(WaveformError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayDims {
    pub rows: usize,
    pub cols: usize,
}

impl ArrayDims {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for ArrayDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codebook {
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Azimuth,
    Elevation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub carrier_freq_hz: f64,
    pub scs_hz: f64,
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub tx_power_dbm: f64,
    pub cp_overhead_fraction: f64,
    pub tx_array: ArrayDims,
    pub rx_array: ArrayDims,
    pub codebook: Codebook,
    /// Thermal noise density (dBm/Hz).
    pub noise_psd_dbm_hz: f64,
    /// Receiver noise figure (dB).
    pub noise_figure_db: f64,
}

impl WaveformConfig {
    pub fn preset(band: Band) -> Self {
        let (fc, arr, scs) = match band {
            Band::Fr3_10GHz => (10e9, ArrayDims::new(2, 2), 30e3),
            Band::Fr2_60GHz => (60e9, ArrayDims::new(4, 4), 120e3),
        };
        Self {
            carrier_freq_hz: fc,
            scs_hz: scs,
            n_subcarriers: 792,
            n_symbols: arr.n_elements() * arr.n_elements(),
            tx_power_dbm: 20.0,
            cp_overhead_fraction: DEFAULT_CP_OVERHEAD,
            tx_array: arr,
            rx_array: arr,
            codebook: Codebook::Fft,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 8.0,
        }
    }

    /// Replaces both arrays and keeps the symbol count consistent with the sweep.
    pub fn with_arrays(mut self, tx: ArrayDims, rx: ArrayDims) -> Self {
        self.tx_array = tx;
        self.rx_array = rx;
        self.n_symbols = tx.n_elements() * rx.n_elements();
        self
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        let pos = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(WaveformError::Invalid { field, reason: format!("must be positive, got {v}") })
            }
        };
        pos("carrier_freq_hz", self.carrier_freq_hz)?;
        pos("scs_hz", self.scs_hz)?;
        if self.n_subcarriers == 0 {
            return Err(WaveformError::Invalid { field: "n_subcarriers", reason: "must be >= 1".into() });
        }
        if self.tx_array.n_elements() == 0 || self.rx_array.n_elements() == 0 {
            return Err(WaveformError::Invalid { field: "array", reason: "arrays need >= 1 element".into() });
        }
        let expected = self.tx_array.n_elements() * self.rx_array.n_elements();
        if self.n_symbols != expected {
            return Err(WaveformError::Invalid {
                field: "n_symbols",
                reason: format!("{} != tx elements x rx elements = {expected}", self.n_symbols),
            });
        }
        if !(self.cp_overhead_fraction >= 0.0 && self.cp_overhead_fraction.is_finite()) {
            return Err(WaveformError::Invalid {
                field: "cp_overhead_fraction",
                reason: "must be >= 0".into(),
            });
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(WaveformError::Invalid { field: "tx_power_dbm", reason: "must be finite".into() });
        }
        Ok(())
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.n_subcarriers as f64 * self.scs_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn tx_power_w(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }

    /// Receiver noise power over the full occupied bandwidth (W).
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz + self.noise_figure_db - 30.0) / 10.0) * self.bandwidth_hz()
    }

    /// OFDM symbol duration including cyclic prefix.
    pub fn symbol_duration(&self) -> f64 {
        (1.0 + self.cp_overhead_fraction) / self.scs_hz
    }

    /// Total transmission time of the beam sweep, `M · T_sym`.
    pub fn frame_duration(&self) -> f64 {
        self.n_symbols as f64 * self.symbol_duration()
    }

    /// `c / (2B)`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz())
    }

    /// `λ / (2 T_Tx)`.
    pub fn velocity_resolution(&self) -> f64 {
        self.wavelength() / (2.0 * self.frame_duration())
    }

    /// Doppler resolution in Hz, the frequency equivalent of the velocity resolution.
    pub fn doppler_resolution(&self) -> f64 {
        self.velocity_resolution() * 2.0 / self.wavelength()
    }

    pub fn element_spacing(&self) -> f64 {
        self.wavelength() / 2.0
    }

    /// `0.89 λ / D` with `D = (n − 1) d` along the requested axis.
    ///
    /// Returns `f64::INFINITY` when the axis has a single element: that angle
    /// domain cannot resolve anything.
    pub fn angular_resolution(&self, side: Side, axis: Axis) -> f64 {
        let dims = match side {
            Side::Tx => self.tx_array,
            Side::Rx => self.rx_array,
        };
        let n = match axis {
            Axis::Azimuth => dims.cols,
            Axis::Elevation => dims.rows,
        };
        angular_resolution_for(n, self.element_spacing(), self.wavelength())
    }
}

/// Angular resolution of an `n`-element axis with spacing `d`.
pub fn angular_resolution_for(n: usize, spacing: f64, wavelength: f64) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let aperture = (n - 1) as f64 * spacing;
    ANGULAR_RESOLUTION_FACTOR * wavelength / aperture
}

pub fn preset(band: Band) -> WaveformConfig {
    WaveformConfig::preset(band)
}

pub fn range_resolution(cfg: &WaveformConfig) -> f64 {
    cfg.range_resolution()
}

pub fn frame_duration(cfg: &WaveformConfig) -> f64 {
    cfg.frame_duration()
}

pub fn velocity_resolution(cfg: &WaveformConfig) -> f64 {
    cfg.velocity_resolution()
}

pub fn angular_resolution(cfg: &WaveformConfig, side: Side, axis: Axis) -> f64 {
    cfg.angular_resolution(side, axis)
}

/// Beam weights for both ends of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook {
    pub tx_beams: Vec<Vec<Complex64>>,
    pub rx_beams: Vec<Vec<Complex64>>,
}

impl BeamCodebook {
    pub fn fft(tx: ArrayDims, rx: ArrayDims) -> Self {
        Self {
            tx_beams: planar_fft_codebook(tx),
            rx_beams: planar_fft_codebook(rx),
        }
    }
}

/// Columns of the unitary `n`-point DFT matrix: beam `m` has phase slope `2π m / n`
/// per element and peaks at spatial frequency `m / n` cycles per element.
pub fn fft_codebook(n_elements: usize) -> Vec<Vec<Complex64>> {
    let scale = 1.0 / (n_elements as f64).sqrt();
    (0..n_elements)
        .map(|m| {
            (0..n_elements)
                .map(|k| Complex64::from_polar(scale, 2.0 * PI * (m * k) as f64 / n_elements as f64))
                .collect()
        })
        .collect()
}

/// Kronecker product of the row and column DFT codebooks.
///
/// Element index is `r · cols + c`; beam index is `beam_row · cols + beam_col`.
pub fn planar_fft_codebook(dims: ArrayDims) -> Vec<Vec<Complex64>> {
    let rows = fft_codebook(dims.rows);
    let cols = fft_codebook(dims.cols);
    let mut beams = Vec::with_capacity(dims.n_elements());
    for br in &rows {
        for bc in &cols {
            let mut w = Vec::with_capacity(dims.n_elements());
            for wr in br {
                for wc in bc {
                    w.push(wr * wc);
                }
            }
            beams.push(w);
        }
    }
    beams
}
