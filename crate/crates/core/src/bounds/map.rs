//! Grid classification and position-error maps over a scene's test region.

use std::f64::consts::PI;
use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::fim::{channel_fim, position_efim_at};
use crate::channel::{
    resolve_pair, static_paths, target_observable, target_path, ArrayGeometry, PathKind, PathSet,
    PropagationPath,
};
use crate::error::BoundsError;
use crate::scene::{Anchor, PointTarget, Scene, Vec3};
use crate::waveform::{Axis, Band, Side, WaveformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Infeasible,
    Nonresolvable,
    Feasible,
}

impl CellClass {
    pub fn name(self) -> &'static str {
        match self {
            CellClass::Infeasible => "infeasible",
            CellClass::Nonresolvable => "nonresolvable",
            CellClass::Feasible => "feasible",
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Separation thresholds below which two paths cannot be told apart.
///
/// An infinite angle threshold marks an axis with a single element; such an
/// axis never separates anything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolvability {
    pub delay_s: f64,
    pub aod_az_rad: f64,
    pub aod_el_rad: f64,
    pub aoa_az_rad: f64,
    pub aoa_el_rad: f64,
    /// `None` when the Doppler domain is not used (static target).
    pub doppler_hz: Option<f64>,
}

impl Resolvability {
    pub fn from_config(cfg: &WaveformConfig, doppler_active: bool) -> Self {
        Self {
            delay_s: 1.0 / cfg.bandwidth_hz(),
            aod_az_rad: cfg.angular_resolution(Side::Tx, Axis::Azimuth),
            aod_el_rad: cfg.angular_resolution(Side::Tx, Axis::Elevation),
            aoa_az_rad: cfg.angular_resolution(Side::Rx, Axis::Azimuth),
            aoa_el_rad: cfg.angular_resolution(Side::Rx, Axis::Elevation),
            doppler_hz: doppler_active.then(|| cfg.doppler_resolution()),
        }
    }

    /// True when `q` overlaps `target` in every usable domain.
    pub fn masks(&self, target: &PropagationPath, q: &PropagationPath) -> bool {
        let close = |a: f64, b: f64, thr: f64| angle_gap(a, b) <= thr;
        (target.delay_s - q.delay_s).abs() <= self.delay_s
            && close(target.aod_az, q.aod_az, self.aod_az_rad)
            && close(target.aod_el, q.aod_el, self.aod_el_rad)
            && close(target.aoa_az, q.aoa_az, self.aoa_az_rad)
            && close(target.aoa_el, q.aoa_el, self.aoa_el_rad)
            && self.doppler_hz.is_none_or(|thr| (target.doppler_hz - q.doppler_hz).abs() <= thr)
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: CellClass,
    /// Kind of the first interfering path that hides the target, for nonresolvable cells.
    pub masked_by: Option<PathKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub x_m: f64,
    pub y_m: f64,
    pub class: CellClass,
    pub masked_by: Option<PathKind>,
    /// Position error bound; feasible cells only (may be `+∞`).
    pub peb_m: Option<f64>,
    /// Error entering the CDF; `None` for infeasible cells.
    pub assigned_error_m: Option<f64>,
}

/// Per-cell evaluator with the target-independent work done once.
#[derive(Debug, Clone)]
pub struct CellEvaluator {
    cfg: WaveformConfig,
    scene: Scene,
    tx: Anchor,
    rx: Anchor,
    static_paths: Vec<PropagationPath>,
    template: PointTarget,
    resolvability: Resolvability,
    max_region_error: f64,
    tx_array: ArrayGeometry,
    rx_array: ArrayGeometry,
}

impl CellEvaluator {
    pub fn new(scene: &Scene, cfg: &WaveformConfig) -> Result<Self, BoundsError> {
        scene.validate()?;
        let template = scene.targets.first().cloned().ok_or(BoundsError::NoTarget)?;
        let (tx_id, rx_id) = scene.sensing_pair()?;
        let (tx, rx) = resolve_pair(scene, cfg, &tx_id, &rx_id)?;
        let lambda = cfg.wavelength();
        Ok(Self {
            cfg: cfg.clone(),
            static_paths: static_paths(scene, tx, rx, lambda),
            resolvability: Resolvability::from_config(cfg, !template.is_static()),
            max_region_error: scene.test_region.max_error(),
            tx_array: ArrayGeometry::of_anchor(tx, lambda),
            rx_array: ArrayGeometry::of_anchor(rx, lambda),
            tx: tx.clone(),
            rx: rx.clone(),
            template,
            scene: scene.clone(),
        })
    }

    pub fn resolvability(&self) -> &Resolvability {
        &self.resolvability
    }

    pub fn max_region_error(&self) -> f64 {
        self.max_region_error
    }

    fn target_at(&self, pos: &Vec3) -> PointTarget {
        PointTarget { position: *pos, ..self.template.clone() }
    }

    pub fn classify(&self, pos: &Vec3) -> Classification {
        if !target_observable(&self.scene, &self.tx, &self.rx, pos) {
            return Classification { class: CellClass::Infeasible, masked_by: None };
        }
        let tp = target_path(&self.tx, &self.rx, &self.target_at(pos), 0, self.cfg.wavelength());
        match self.static_paths.iter().find(|q| self.resolvability.masks(&tp, q)) {
            Some(q) => Classification { class: CellClass::Nonresolvable, masked_by: Some(q.kind) },
            None => Classification { class: CellClass::Feasible, masked_by: None },
        }
    }

    /// Path set seen with the target placed at `pos` (target path last).
    pub fn pathset_at(&self, pos: &Vec3) -> PathSet {
        let mut paths = self.static_paths.clone();
        paths.push(target_path(&self.tx, &self.rx, &self.target_at(pos), 0, self.cfg.wavelength()));
        PathSet {
            paths,
            noise_power_w: self.cfg.noise_power_w(),
            tx_id: self.tx.id.clone(),
            rx_id: self.rx.id.clone(),
            tx_array: self.tx_array,
            rx_array: self.rx_array,
            wavelength: self.cfg.wavelength(),
        }
    }

    /// Position error bound for a target at `pos`, ignoring classification.
    pub fn peb(&self, pos: &Vec3) -> Result<f64, BoundsError> {
        let ps = self.pathset_at(pos);
        let fim = channel_fim(&ps, &self.cfg)?;
        Ok(position_efim_at(&fim, &ps, 0, &self.tx, &self.rx, pos)?.peb_m)
    }

    pub fn evaluate(&self, pos: &Vec3) -> Result<MapCell, BoundsError> {
        let c = self.classify(pos);
        let (peb_m, assigned_error_m) = match c.class {
            CellClass::Infeasible => (None, None),
            CellClass::Nonresolvable => (None, Some(self.max_region_error)),
            CellClass::Feasible => {
                let peb = self.peb(pos)?;
                let assigned = if peb.is_finite() { peb } else { self.max_region_error };
                (Some(peb), Some(assigned))
            }
        };
        Ok(MapCell { x_m: pos.x, y_m: pos.y, class: c.class, masked_by: c.masked_by, peb_m, assigned_error_m })
    }
}

/// Classifies a single target position; the scene's first target supplies RCS and velocity.
pub fn classify_cell(scene: &Scene, cfg: &WaveformConfig, cell_pos: &Vec3) -> Result<CellClass, BoundsError> {
    Ok(CellEvaluator::new(scene, cfg)?.classify(cell_pos).class)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PebMap {
    pub scenario: String,
    pub preset: String,
    pub max_region_error_m: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major with `x` varying fastest.
    pub cells: Vec<MapCell>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub infeasible: usize,
    pub nonresolvable: usize,
    pub feasible: usize,
    /// Nonresolvable cells hidden by the direct Tx–Rx path.
    pub los_masked: usize,
    /// Feasible cells whose position information is singular.
    pub singular: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub scenario: String,
    pub preset: String,
    pub nx: usize,
    pub ny: usize,
    pub max_region_error_m: f64,
    pub counts: ClassCounts,
    pub include_penalty_cells: bool,
    /// `None` when no cell enters the CDF.
    pub p50_m: Option<f64>,
    pub p90_m: Option<f64>,
    pub p95_m: Option<f64>,
}

impl PebMap {
    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for cell in &self.cells {
            match cell.class {
                CellClass::Infeasible => c.infeasible += 1,
                CellClass::Nonresolvable => {
                    c.nonresolvable += 1;
                    if cell.masked_by == Some(PathKind::Los) {
                        c.los_masked += 1;
                    }
                }
                CellClass::Feasible => {
                    c.feasible += 1;
                    if cell.peb_m.is_some_and(|p| !p.is_finite()) {
                        c.singular += 1;
                    }
                }
            }
        }
        c
    }

    /// Writes `x_m,y_m,class,error_m`; infeasible cells leave `error_m` empty.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x_m,y_m,class,error_m")?;
        for c in &self.cells {
            match c.assigned_error_m {
                Some(e) => writeln!(w, "{},{},{},{}", c.x_m, c.y_m, c.class, e)?,
                None => writeln!(w, "{},{},{},", c.x_m, c.y_m, c.class)?,
            }
        }
        Ok(())
    }

    pub fn summary(&self, include_penalty: bool) -> MapSummary {
        let cdf = error_cdf(self, include_penalty).ok();
        let pct = |q: f64| cdf.as_deref().map(|c| percentile(c, q));
        MapSummary {
            scenario: self.scenario.clone(),
            preset: self.preset.clone(),
            nx: self.nx,
            ny: self.ny,
            max_region_error_m: self.max_region_error_m,
            counts: self.counts(),
            include_penalty_cells: include_penalty,
            p50_m: pct(0.50),
            p90_m: pct(0.90),
            p95_m: pct(0.95),
        }
    }
}

/// Evaluates every cell of the scene's test region.
///
/// `workers` sets the size of a dedicated thread pool; `0` or `1` runs on the
/// calling thread. The result does not depend on the worker count.
pub fn build_peb_map(scene: &Scene, cfg: &WaveformConfig, workers: usize) -> Result<PebMap, BoundsError> {
    let eval = CellEvaluator::new(scene, cfg)?;
    let positions = scene.test_region.cells();
    let cells: Vec<MapCell> = if workers <= 1 {
        positions.iter().map(|p| eval.evaluate(p)).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| BoundsError::Pool(e.to_string()))?;
        pool.install(|| positions.par_iter().map(|p| eval.evaluate(p)).collect::<Result<_, _>>())?
    };
    Ok(PebMap {
        scenario: scene.name.clone(),
        preset: preset_label(cfg),
        max_region_error_m: eval.max_region_error(),
        nx: scene.test_region.nx,
        ny: scene.test_region.ny,
        cells,
    })
}

fn preset_label(cfg: &WaveformConfig) -> String {
    [Band::Fr3_10GHz, Band::Fr2_60GHz]
        .into_iter()
        .find(|b| WaveformConfig::preset(*b).carrier_freq_hz == cfg.carrier_freq_hz)
        .map_or_else(|| "custom".to_string(), |b| b.name().to_string())
}

/// Empirical, right-continuous CDF of the assigned errors.
///
/// With `include_penalty` the nonresolvable cells enter at the region's maximum
/// error; otherwise only feasible cells are used.
pub fn error_cdf(map: &PebMap, include_penalty: bool) -> Result<Vec<(f64, f64)>, BoundsError> {
    let mut errs: Vec<f64> = map
        .cells
        .iter()
        .filter(|c| match c.class {
            CellClass::Infeasible => false,
            CellClass::Nonresolvable => include_penalty,
            CellClass::Feasible => true,
        })
        .filter_map(|c| c.assigned_error_m)
        .collect();
    if errs.is_empty() {
        return Err(BoundsError::NoFeasibleCells);
    }
    errs.sort_by(f64::total_cmp);
    let n = errs.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(errs.len());
    for (i, e) in errs.into_iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 = p,
            _ => out.push((e, p)),
        }
    }
    Ok(out)
}

/// Smallest error whose cumulative probability reaches `q`.
pub fn percentile(cdf: &[(f64, f64)], q: f64) -> f64 {
    cdf.iter().find(|(_, p)| *p >= q - 1e-12).or(cdf.last()).map(|(e, _)| *e).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(class: CellClass, err: Option<f64>) -> MapCell {
        MapCell { x_m: 0.0, y_m: 0.0, class, masked_by: None, peb_m: err, assigned_error_m: err }
    }

    fn map_of(cells: Vec<MapCell>) -> PebMap {
        PebMap { scenario: "t".into(), preset: "p".into(), max_region_error_m: 9.0, nx: cells.len(), ny: 1, cells }
    }

    #[test]
    fn identical_errors_give_single_step() {
        let m = map_of(vec![cell(CellClass::Feasible, Some(0.3)); 5]);
        assert_eq!(error_cdf(&m, true).unwrap(), vec![(0.3, 1.0)]);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let m = map_of(vec![
            cell(CellClass::Feasible, Some(0.5)),
            cell(CellClass::Feasible, Some(0.1)),
            cell(CellClass::Nonresolvable, Some(9.0)),
            cell(CellClass::Infeasible, None),
        ]);
        let c = error_cdf(&m, true).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(c.last().unwrap().1, 1.0);
        let f = error_cdf(&m, false).unwrap();
        assert_eq!(f, vec![(0.1, 0.5), (0.5, 1.0)]);
        assert_eq!(percentile(&c, 0.5), 0.5);
    }

    #[test]
    fn empty_domain_is_an_error() {
        let m = map_of(vec![cell(CellClass::Infeasible, None); 3]);
        assert_eq!(error_cdf(&m, true), Err(BoundsError::NoFeasibleCells));
        assert_eq!(BoundsError::NoFeasibleCells.to_string(), "no feasible cells");
    }

    #[test]
    fn angle_gap_wraps() {
        assert!((angle_gap(3.1, -3.1) - (2.0 * PI - 6.2)).abs() < 1e-12);
        assert_eq!(angle_gap(0.2, 0.2), 0.0);
    }
}
