//! Hardware impairments: PA nonlinearity and oscillator phase noise.

pub mod pa;
pub mod phase_noise;

pub use pa::{
    apply_pa, bussgang_residual, cubic, excess_kurtosis, range_ambiguity_profile, sidelobe_floor_db,
    simulate_block, simulate_floor, AmbiguityProfile, FloorSummary, PaModel, PaRafConfig, Waveform,
};
pub use phase_noise::{
    estimate_delay, pn_range_error_sweep, range_error_trial, simulate_differential_pn, PnModel, PnSweepConfig,
    PnSweepRow,
};
