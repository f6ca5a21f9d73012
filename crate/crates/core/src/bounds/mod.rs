//! Position error bounds and resolvability maps.

pub mod fim;
pub mod map;

pub use fim::{
    channel_fim, channel_fim_with_beams, fim_result, needs_elevation, parameter_layout, position_efim,
    position_efim_at, schur_eliminate, ChannelFim, FimResult, Param, ParamKind, PositionBound,
};
pub use map::{
    build_peb_map, classify_cell, error_cdf, percentile, CellClass, CellEvaluator, ClassCounts,
    Classification, MapCell, MapSummary, PebMap, Resolvability,
};
