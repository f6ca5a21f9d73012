use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid surface `{id}`: {reason}")]
    InvalidSurface { id: String, reason: String },
    #[error("invalid anchor `{id}`: {reason}")]
    InvalidAnchor { id: String, reason: String },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid test region: {0}")]
    InvalidRegion(String),
    #[error("unknown anchor `{0}`")]
    UnknownAnchor(String),
    #[error("scene has no monostatic anchor and no tx/rx pair")]
    NoSensingPair,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("invalid waveform parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown preset `{0}` (expected fr3_10ghz or fr2_60ghz)")]
    UnknownPreset(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("anchor `{0}` used as both tx and rx but its role is not monostatic")]
    NotMonostatic(String),
    #[error("anchor `{anchor}` has a {got} array but the waveform expects {expected}")]
    ArrayMismatch { anchor: String, got: String, expected: String },
    #[error("path index {0} out of range")]
    PathIndex(usize),
    #[error("beam index {0} out of range")]
    BeamIndex(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("no feasible cells")]
    NoFeasibleCells,
    #[error("path set has no target path for target {0}")]
    NoTargetPath(usize),
    #[error("path set is empty")]
    EmptyPathSet,
    #[error("scene declares no target")]
    NoTarget,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatencyError {
    #[error("no processing nodes given")]
    NoNodes,
    #[error("invalid processing node `{name}`: {reason}")]
    InvalidNode { name: String, reason: String },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpairmentError {
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
}
