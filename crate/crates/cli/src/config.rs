//! Run configuration: a TOML file flattened to `section.key` entries, command-line
//! overrides on top, then typed extraction with defaults.
//!
//! Every value that ends up in effect (given or defaulted) is recorded in the
//! echo, which the output writers copy into each file's metadata. The worker
//! count is deliberately left out so that outputs do not depend on it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use isac_core::impairments::{PaModel, PaRafConfig, PnModel, PnSweepConfig};
use isac_core::latency::SweepSpec;
use isac_core::scenarios::{ScenarioKind, ScenarioParams};
use isac_core::waveform::{Band, WaveformConfig};
use thiserror::Error;
use toml::Value;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.to_string(), message: message.into() }
    }
}

/// Where the scene comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioChoice {
    Stock(ScenarioKind),
    /// A JSON-serialised scene read from `scene.file`.
    Custom(PathBuf),
}

impl ScenarioChoice {
    pub fn name(&self) -> &str {
        match self {
            ScenarioChoice::Stock(k) => k.name(),
            ScenarioChoice::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioChoice,
    pub band: Band,
    /// Waveform preset with any overrides applied.
    pub waveform: WaveformConfig,
    /// Stock-scene parameters; `nx`, `ny` carry the grid.
    pub scene: ScenarioParams,
    pub seed: u64,
    pub workers: usize,
    /// Count nonresolvable cells (at the region penalty) in error CDFs.
    pub include_penalty: bool,
    pub latency: SweepSpec,
    pub pa: PaRafConfig,
    pub pn: PnSweepConfig,
    /// Effective settings, sorted by key, as written into output metadata.
    pub echo: BTreeMap<String, String>,
}

/// Settings given on the command line; each wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Raw `key=value` assignments, applied in order.
    pub set: Vec<String>,
    pub scenario: Option<String>,
    pub preset: Option<String>,
    /// `NXxNY`.
    pub grid: Option<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

/// Parses config text into flat `section.key` entries.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, Value>, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let mut out = BTreeMap::new();
    flatten("", table, &mut out);
    Ok(out)
}

/// Interprets the right-hand side of `--set key=value` as a TOML value, or as a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn parse_grid(key: &str, raw: &str) -> Result<Value, ConfigError> {
    let (a, b) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| ConfigError::invalid(key, format!("expected NXxNY, got `{raw}`")))?;
    let n = |s: &str| s.trim().parse::<i64>().map_err(|_| ConfigError::invalid(key, format!("bad grid `{raw}`")));
    Ok(Value::Array(vec![Value::Integer(n(a)?), Value::Integer(n(b)?)]))
}

/// Applies command-line overrides to flat entries.
pub fn apply_overrides(entries: &mut BTreeMap<String, Value>, ov: &Overrides) -> Result<(), ConfigError> {
    for s in &ov.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid(s, "expected KEY=VALUE"))?;
        let k = k.trim();
        let v = v.trim();
        let value = if k == "grid" && !v.starts_with('[') { parse_grid(k, v)? } else { parse_value(v) };
        entries.insert(k.to_string(), value);
    }
    if let Some(s) = &ov.scenario {
        entries.insert("scenario".into(), Value::String(s.clone()));
    }
    if let Some(p) = &ov.preset {
        entries.insert("preset".into(), Value::String(p.clone()));
    }
    if let Some(g) = &ov.grid {
        entries.insert("grid".into(), parse_grid("grid", g)?);
    }
    if let Some(w) = ov.workers {
        entries.insert("workers".into(), Value::Integer(w as i64));
    }
    if let Some(s) = ov.seed {
        let v = i64::try_from(s).map_err(|_| ConfigError::invalid("seed", "must fit in a signed 64-bit integer"))?;
        entries.insert("seed".into(), Value::Integer(v));
    }
    Ok(())
}

/// Consumes entries key by key, recording what ends up in effect.
struct Fields {
    entries: BTreeMap<String, Value>,
    echo: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.entries.remove(key)
    }

    fn record(&mut self, key: &str, shown: String) {
        self.echo.insert(key.to_string(), shown);
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Float(f)) => f,
            Some(Value::Integer(i)) => i as f64,
            Some(other) => return Err(ConfigError::invalid(key, format!("expected a number, got {other}"))),
        };
        if !v.is_finite() {
            return Err(ConfigError::invalid(key, "must be finite"));
        }
        self.record(key, v.to_string());
        Ok(v)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        if self.entries.contains_key(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            self.record(key, "auto".into());
            Ok(None)
        }
    }

    fn int(&mut self, key: &str, default: i64) -> Result<i64, ConfigError> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Integer(i)) => i,
            Some(other) => return Err(ConfigError::invalid(key, format!("expected an integer, got {other}"))),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        let v = self.int(key, default as i64)?;
        if v < min as i64 {
            return Err(ConfigError::invalid(key, format!("must be at least {min}, got {v}")));
        }
        Ok(v as usize)
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        let v = match self.take(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => return Err(ConfigError::invalid(key, format!("expected true or false, got {other}"))),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => {
                self.record(key, s.clone());
                Ok(Some(s))
            }
            Some(other) => Err(ConfigError::invalid(key, format!("expected a string, got {other}"))),
        }
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = match self.take(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|x| match x {
                    Value::Float(f) => Ok(f),
                    Value::Integer(i) => Ok(i as f64),
                    other => Err(ConfigError::invalid(key, format!("expected numbers, got {other}"))),
                })
                .collect::<Result<_, _>>()?,
            Some(other) => return Err(ConfigError::invalid(key, format!("expected a list, got {other}"))),
        };
        let shown: Vec<String> = v.iter().map(f64::to_string).collect();
        self.record(key, format!("[{}]", shown.join(", ")));
        Ok(v)
    }

    fn grid(&mut self, key: &str, default: (usize, usize)) -> Result<(usize, usize), ConfigError> {
        let (nx, ny) = match self.take(key) {
            None => (default.0 as i64, default.1 as i64),
            Some(Value::Array(items)) if items.len() == 2 => match (&items[0], &items[1]) {
                (Value::Integer(a), Value::Integer(b)) => (*a, *b),
                _ => return Err(ConfigError::invalid(key, "expected two integers")),
            },
            Some(Value::String(s)) => match parse_grid(key, &s)? {
                Value::Array(items) => (items[0].as_integer().unwrap_or(0), items[1].as_integer().unwrap_or(0)),
                _ => unreachable!("parse_grid returns an array"),
            },
            Some(other) => return Err(ConfigError::invalid(key, format!("expected [nx, ny], got {other}"))),
        };
        if nx < 2 || ny < 2 {
            return Err(ConfigError::invalid(key, format!("need at least 2 cells per axis, got {nx}x{ny}")));
        }
        self.record(key, format!("{nx}x{ny}"));
        Ok((nx as usize, ny as usize))
    }
}

fn check(key: &str, ok: bool, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, message))
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Builds a validated [`RunConfig`] from flat entries.
pub fn build_config(entries: BTreeMap<String, Value>) -> Result<RunConfig, ConfigError> {
    let mut f = Fields { entries, echo: BTreeMap::new() };

    let scenario_name = f.string("scenario")?.ok_or_else(|| ConfigError::Missing("scenario".into()))?;
    let preset = f.string("preset")?.unwrap_or_else(|| "fr2_60ghz".into());
    f.record("preset", preset.clone());
    let band = match preset.as_str() {
        "fr3_10ghz" => Band::Fr3_10GHz,
        "fr2_60ghz" => Band::Fr2_60GHz,
        other => return Err(ConfigError::invalid("preset", format!("unknown preset `{other}`"))),
    };
    let (nx, ny) = f.grid("grid", (100, 100))?;
    let seed = f.int("seed", 1)?;
    check("seed", seed >= 0, "must be >= 0")?;
    let workers = match f.take("workers") {
        None => default_workers(),
        Some(Value::Integer(w)) if w >= 1 => w as usize,
        Some(other) => return Err(ConfigError::invalid("workers", format!("expected a positive integer, got {other}"))),
    };

    let scene_file = f.string("scene.file")?;
    let scenario = if scenario_name == "custom" {
        let path = scene_file.ok_or_else(|| ConfigError::Missing("scene.file".into()))?;
        ScenarioChoice::Custom(PathBuf::from(path))
    } else {
        let kind: ScenarioKind = scenario_name.parse().map_err(|e: String| ConfigError::invalid("scenario", e))?;
        if scene_file.is_some() {
            return Err(ConfigError::invalid("scene.file", "only used with scenario = \"custom\""));
        }
        ScenarioChoice::Stock(kind)
    };

    let d = ScenarioParams::default();
    let scene = ScenarioParams {
        room_length_m: f.f64("scene.room_length_m", d.room_length_m)?,
        room_width_m: f.f64("scene.room_width_m", d.room_width_m)?,
        room_height_m: f.f64("scene.room_height_m", d.room_height_m)?,
        anchor_height_m: f.f64("scene.anchor_height_m", d.anchor_height_m)?,
        rcs_m2: f.f64("scene.rcs_m2", d.rcs_m2)?,
        wall_gamma: f.f64("scene.wall_gamma", d.wall_gamma)?,
        ground_gamma: f.f64("scene.ground_gamma", d.ground_gamma)?,
        fov_half_angle_deg: f.f64("scene.fov_half_angle_deg", d.fov_half_angle_deg)?,
        target_speed_mps: f.opt_f64("scene.target_speed_mps")?,
        target_xy_m: match (f.opt_f64("scene.target_x_m")?, f.opt_f64("scene.target_y_m")?) {
            (Some(x), Some(y)) => Some((x, y)),
            (None, None) => None,
            _ => return Err(ConfigError::invalid("scene.target_x_m", "give both target_x_m and target_y_m")),
        },
        nx,
        ny,
    };
    for (key, v) in [
        ("scene.room_length_m", scene.room_length_m),
        ("scene.room_width_m", scene.room_width_m),
        ("scene.room_height_m", scene.room_height_m),
    ] {
        check(key, v > 0.0, "must be > 0")?;
    }
    check(
        "scene.anchor_height_m",
        scene.anchor_height_m > 0.0 && scene.anchor_height_m < scene.room_height_m,
        "must lie strictly between floor and ceiling",
    )?;
    check("scene.rcs_m2", scene.rcs_m2 >= 0.0, "must be >= 0")?;
    check("scene.wall_gamma", (0.0..=1.0).contains(&scene.wall_gamma), "must be in [0, 1]")?;
    check("scene.ground_gamma", (0.0..=1.0).contains(&scene.ground_gamma), "must be in [0, 1]")?;
    check(
        "scene.fov_half_angle_deg",
        scene.fov_half_angle_deg > 0.0 && scene.fov_half_angle_deg <= 180.0,
        "must be in (0, 180]",
    )?;

    let mut waveform = WaveformConfig::preset(band);
    waveform.tx_power_dbm = f.f64("waveform.tx_power_dbm", waveform.tx_power_dbm)?;
    waveform.noise_figure_db = f.f64("waveform.noise_figure_db", waveform.noise_figure_db)?;
    waveform.noise_psd_dbm_hz = f.f64("waveform.noise_psd_dbm_hz", waveform.noise_psd_dbm_hz)?;

    let include_penalty = f.bool("cdf.include_penalty", true)?;

    let ls = SweepSpec::default();
    let latency = SweepSpec {
        load_min_flops: f.f64("latency.load_min_mflop", ls.load_min_flops / 1e6)? * 1e6,
        load_max_flops: f.f64("latency.load_max_mflop", ls.load_max_flops / 1e6)? * 1e6,
        step_flops: f.f64("latency.step_mflop", ls.step_flops / 1e6)? * 1e6,
        data_volume_bits: f.f64("latency.data_volume_bits", ls.data_volume_bits)?,
        frame_s: f.f64("latency.frame_s", ls.frame_s)?,
        air_prop_s: f.f64("latency.air_prop_s", ls.air_prop_s)?,
        speed_mps: f.f64("latency.speed_mps", ls.speed_mps)?,
    };

    let pd = PaRafConfig::default();
    let pa = PaRafConfig {
        pa: PaModel { a3: f.f64("pa.a3", pd.pa.a3)?, backoff_db: f.f64("pa.backoff_db", pd.pa.backoff_db)? },
        block_len: f.count("pa.block_len", pd.block_len, 2)?,
        blocks: f.count("pa.blocks", pd.blocks, 1)?,
        rolloff: f.f64("pa.rolloff", pd.rolloff)?,
        oversampling: f.count("pa.oversampling", pd.oversampling, 1)?,
        seed: seed as u64,
    };

    let nd = PnSweepConfig::default();
    let pn = PnSweepConfig {
        pn: PnModel {
            linewidth_hz: f.f64("pn.linewidth_hz", nd.pn.linewidth_hz)?,
            ref_carrier_hz: f.f64("pn.ref_carrier_ghz", nd.pn.ref_carrier_hz / 1e9)? * 1e9,
            sample_rate_hz: nd.pn.sample_rate_hz,
        },
        carriers_hz: f
            .f64_list("pn.carriers_ghz", &nd.carriers_hz.iter().map(|c| c / 1e9).collect::<Vec<_>>())?
            .into_iter()
            .map(|c| c * 1e9)
            .collect(),
        bandwidth_hz: f.f64("pn.bandwidth_mhz", nd.bandwidth_hz / 1e6)? * 1e6,
        n_subcarriers: f.count("pn.n_subcarriers", nd.n_subcarriers, 2)?,
        range_m: f.f64("pn.range_m", nd.range_m)?,
        points: f.count("pn.points", nd.points, 2)?,
        trials: f.count("pn.trials", nd.trials, 1)?,
        seed: seed as u64,
    };

    if let Some(key) = f.entries.keys().next() {
        return Err(ConfigError::UnknownKey(key.clone()));
    }

    f.record("scenario", scenario_name);
    f.record("seed", seed.to_string());
    let cfg = RunConfig {
        scenario,
        band,
        waveform,
        scene,
        seed: seed as u64,
        workers,
        include_penalty,
        latency,
        pa,
        pn,
        echo: f.echo,
    };
    validate_modules(&cfg)?;
    Ok(cfg)
}

/// Runs the library validators so that bad values are reported as config errors.
fn validate_modules(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.waveform.validate().map_err(|e| ConfigError::invalid("waveform", e.to_string()))?;
    isac_core::latency::sweep_loads(&cfg.latency).map_err(|e| ConfigError::invalid("latency", e.to_string()))?;
    cfg.pa.validate().map_err(|e| ConfigError::invalid("pa", e.to_string()))?;
    cfg.pn.validate().map_err(|e| ConfigError::invalid("pn", e.to_string()))?;
    Ok(())
}

/// Parses config text and applies overrides.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut entries = parse_entries(text)?;
    apply_overrides(&mut entries, overrides)?;
    build_config(entries)
}

/// Reads the config file (if any) and applies overrides.
pub fn load_config(path: Option<&std::path::Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| ConfigError::Read { path: p.display().to_string(), message: e.to_string() })?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}
