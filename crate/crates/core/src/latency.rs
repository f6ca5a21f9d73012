//! Sensing latency budget and processing-node placement.
//!
//! Compute rates are in FLOP per second. A sensing result is ready after the
//! frame has been transmitted, the echo has propagated, the raw data has been
//! shipped to the processing node and the node has finished computing.

use serde::{Deserialize, Serialize};

use crate::error::LatencyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingNode {
    pub name: String,
    /// One-way network propagation latency to the node (s).
    pub prop_latency_s: f64,
    /// Link rate towards the node (bit/s); may be `+∞` for local processing.
    pub link_rate_bps: f64,
    /// Sustained compute rate (FLOP/s).
    pub compute_rate_flops: f64,
}

impl ProcessingNode {
    pub fn new(name: impl Into<String>, prop_latency_s: f64, link_rate_bps: f64, compute_rate_flops: f64) -> Self {
        Self { name: name.into(), prop_latency_s, link_rate_bps, compute_rate_flops }
    }

    /// Processing on the sensing device itself: no network hop.
    pub fn local(compute_rate_flops: f64) -> Self {
        Self::new("local", 0.0, f64::INFINITY, compute_rate_flops)
    }

    pub fn validate(&self) -> Result<(), LatencyError> {
        let bad = |reason: &str| LatencyError::InvalidNode { name: self.name.clone(), reason: reason.into() };
        if !(self.prop_latency_s >= 0.0 && self.prop_latency_s.is_finite()) {
            return Err(bad("propagation latency must be finite and >= 0"));
        }
        if !(self.link_rate_bps > 0.0) {
            return Err(bad("link rate must be > 0"));
        }
        if !(self.compute_rate_flops > 0.0 && self.compute_rate_flops.is_finite()) {
            return Err(bad("compute rate must be finite and > 0"));
        }
        Ok(())
    }

    /// Data transfer, network propagation and computation time for one job.
    pub fn processing_time(&self, data_volume_bits: f64, load_flops: f64) -> f64 {
        self.transport_time(data_volume_bits) + self.prop_latency_s + load_flops / self.compute_rate_flops
    }

    fn transport_time(&self, data_volume_bits: f64) -> f64 {
        if data_volume_bits == 0.0 {
            0.0
        } else {
            data_volume_bits / self.link_rate_bps
        }
    }
}

/// The three network tiers: extreme edge, edge and core.
pub fn default_nodes() -> Vec<ProcessingNode> {
    vec![
        ProcessingNode::new("extreme", 0.015e-3, 0.1e9, 10e9),
        ProcessingNode::new("edge", 0.15e-3, 1e9, 100e9),
        ProcessingNode::new("core", 0.8e-3, 10e9, 300e9),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_tx_s: f64,
    pub t_prop_air_s: f64,
    pub t_transport_s: f64,
    pub t_prop_net_s: f64,
    pub t_compute_s: f64,
    pub t_total_s: f64,
}

impl LatencyBreakdown {
    pub fn processing_s(&self) -> f64 {
        self.t_transport_s + self.t_prop_net_s + self.t_compute_s
    }
}

/// FLOP count of a separable 2-D FFT over an `n_sc × m` grid, `5 N log₂ N` with `N = n_sc · m`.
pub fn fft2d_flops(n_sc: usize, m: usize) -> f64 {
    let n = (n_sc * m) as f64;
    if n <= 1.0 {
        return 0.0;
    }
    5.0 * n * n.log2()
}

/// Raw IQ volume for one frame at 16 bit per I and Q sample.
pub fn iq_data_volume_bits(n_sc: usize, m: usize) -> f64 {
    (n_sc * m) as f64 * 32.0
}

pub fn total_latency(
    frame_s: f64,
    air_prop_s: f64,
    data_volume_bits: f64,
    load_flops: f64,
    node: &ProcessingNode,
) -> LatencyBreakdown {
    let t_transport_s = node.transport_time(data_volume_bits);
    let t_compute_s = load_flops / node.compute_rate_flops;
    LatencyBreakdown {
        t_tx_s: frame_s,
        t_prop_air_s: air_prop_s,
        t_transport_s,
        t_prop_net_s: node.prop_latency_s,
        t_compute_s,
        t_total_s: frame_s + air_prop_s + t_transport_s + node.prop_latency_s + t_compute_s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub node: String,
    pub breakdown: LatencyBreakdown,
}

/// Node with the lowest processing time; ties go to the node closer in the network.
///
/// Frame and air propagation time are common to all nodes and do not affect the choice.
pub fn best_placement(
    load_flops: f64,
    data_volume_bits: f64,
    nodes: &[ProcessingNode],
) -> Result<Placement, LatencyError> {
    best_placement_with(0.0, 0.0, load_flops, data_volume_bits, nodes)
}

pub fn best_placement_with(
    frame_s: f64,
    air_prop_s: f64,
    load_flops: f64,
    data_volume_bits: f64,
    nodes: &[ProcessingNode],
) -> Result<Placement, LatencyError> {
    let mut best: Option<(&ProcessingNode, LatencyBreakdown)> = None;
    for node in nodes {
        node.validate()?;
        let b = total_latency(frame_s, air_prop_s, data_volume_bits, load_flops, node);
        let better = match &best {
            None => true,
            Some((bn, bb)) => {
                b.t_total_s < bb.t_total_s
                    || (b.t_total_s == bb.t_total_s && node.prop_latency_s < bn.prop_latency_s)
            }
        };
        if better {
            best = Some((node, b));
        }
    }
    let (node, breakdown) = best.ok_or(LatencyError::NoNodes)?;
    Ok(Placement { node: node.name.clone(), breakdown })
}

/// Work assigned to one of several cooperating sensing nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJob {
    pub node: ProcessingNode,
    pub data_volume_bits: f64,
    pub load_flops: f64,
}

/// Processing latency when several nodes work in parallel: the slowest one decides.
pub fn distributed_latency(jobs: &[NodeJob]) -> Result<f64, LatencyError> {
    if jobs.is_empty() {
        return Err(LatencyError::NoNodes);
    }
    let mut worst = 0.0f64;
    for j in jobs {
        j.node.validate()?;
        worst = worst.max(j.node.processing_time(j.data_volume_bits, j.load_flops));
    }
    Ok(worst)
}

/// Distance a target moving at `speed_mps` covers while the result is pending.
pub fn motion_error(speed_mps: f64, t_total_s: f64) -> f64 {
    speed_mps * t_total_s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub load_flops: f64,
    /// Total latency per node, in the order the nodes were given.
    pub t_total_s: Vec<f64>,
    pub best_node: String,
    /// Motion-induced error for the best node.
    pub motion_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub load_min_flops: f64,
    pub load_max_flops: f64,
    pub step_flops: f64,
    pub data_volume_bits: f64,
    pub frame_s: f64,
    pub air_prop_s: f64,
    pub speed_mps: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            load_min_flops: 0.0,
            load_max_flops: 200e6,
            step_flops: 0.5e6,
            data_volume_bits: 0.0,
            frame_s: 0.0,
            air_prop_s: 0.0,
            speed_mps: 10.0,
        }
    }
}

/// Loads `min + k · step` up to `max` (inclusive within a half-step).
pub fn sweep_loads(spec: &SweepSpec) -> Result<Vec<f64>, LatencyError> {
    let (lo, hi, step) = (spec.load_min_flops, spec.load_max_flops, spec.step_flops);
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(LatencyError::InvalidSweep(format!("load range [{lo}, {hi}] is not valid")));
    }
    if !(step > 0.0) {
        return Err(LatencyError::InvalidSweep(format!("step {step} must be > 0")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

pub fn placement_sweep(spec: &SweepSpec, nodes: &[ProcessingNode]) -> Result<Vec<SweepRow>, LatencyError> {
    if nodes.is_empty() {
        return Err(LatencyError::NoNodes);
    }
    if !(spec.speed_mps >= 0.0) {
        return Err(LatencyError::InvalidSweep(format!("speed {} must be >= 0", spec.speed_mps)));
    }
    sweep_loads(spec)?
        .into_iter()
        .map(|load| {
            let best = best_placement_with(spec.frame_s, spec.air_prop_s, load, spec.data_volume_bits, nodes)?;
            let t_total_s = nodes
                .iter()
                .map(|n| total_latency(spec.frame_s, spec.air_prop_s, spec.data_volume_bits, load, n).t_total_s)
                .collect();
            Ok(SweepRow {
                load_flops: load,
                t_total_s,
                best_node: best.node,
                motion_error_m: motion_error(spec.speed_mps, best.breakdown.t_total_s),
            })
        })
        .collect()
}

/// Loads at which the best node changes: `(load, from, to)`.
pub fn switch_points(rows: &[SweepRow]) -> Vec<(f64, String, String)> {
    rows.windows(2)
        .filter(|w| w[0].best_node != w[1].best_node)
        .map(|w| (w[1].load_flops, w[0].best_node.clone(), w[1].best_node.clone()))
        .collect()
}

/// Load at which two nodes take equally long, if their compute rates differ.
pub fn crossover_load(a: &ProcessingNode, b: &ProcessingNode, data_volume_bits: f64) -> Option<f64> {
    let fixed_a = a.transport_time(data_volume_bits) + a.prop_latency_s;
    let fixed_b = b.transport_time(data_volume_bits) + b.prop_latency_s;
    let slope = 1.0 / a.compute_rate_flops - 1.0 / b.compute_rate_flops;
    if slope == 0.0 {
        return None;
    }
    Some((fixed_b - fixed_a) / slope)
}

/// Writes the sweep as CSV: `load_mflop`, one `t_<node>_ms` column per node, `best_node`, `motion_error_m`.
pub fn write_sweep_csv<W: std::io::Write>(
    rows: &[SweepRow],
    nodes: &[ProcessingNode],
    mut w: W,
) -> std::io::Result<()> {
    let mut header = vec!["load_mflop".to_string()];
    header.extend(nodes.iter().map(|n| format!("t_{}_ms", n.name)));
    header.extend(["best_node".to_string(), "motion_error_m".to_string()]);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut fields = vec![format!("{}", r.load_flops / 1e6)];
        fields.extend(r.t_total_s.iter().map(|t| format!("{}", t * 1e3)));
        fields.push(r.best_node.clone());
        fields.push(format!("{}", r.motion_error_m));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
