//! Post-run metrics: consensus errors, settling times and trigger statistics.

use nalgebra::DVector;
use serde::Serialize;

use crate::engine::SimOutput;
use crate::error::AnalysisError;
use crate::graph::{Digraph, VertexSet};

/// Relative band used for settling: 1% of the initial norm.
pub const SETTLING_FRACTION: f64 = 0.01;

/// `Σ_{j ∈ N_i ∩ normal} (η_i − η_j)` at every recorded frame.
pub fn consensus_error_series(
    out: &SimOutput,
    graph: &Digraph,
    normal: &VertexSet,
    i: usize,
) -> Result<Vec<(f64, DVector<f64>)>, AnalysisError> {
    if !normal.contains(i) {
        return Err(AnalysisError::InvalidArgument(format!("agent {} is not a normal agent", i + 1)));
    }
    let peers: Vec<usize> = graph.in_neighbors(i).into_iter().filter(|j| normal.contains(*j)).collect();
    Ok(out
        .frames
        .iter()
        .map(|frame| {
            let own = DVector::from_row_slice(&frame.agents[i].eta);
            let sum = peers.iter().fold(DVector::zeros(own.len()), |acc, &j| {
                acc + &own - DVector::from_row_slice(&frame.agents[j].eta)
            });
            (frame.t, sum)
        })
        .collect())
}

/// Earliest recorded time after which `‖x(t)‖ ≤ 1% ‖x(t₀)‖` holds for the rest of
/// the series. `None` if the series never settles.
pub fn settling_time(series: &[(f64, DVector<f64>)], t0: f64) -> Result<Option<f64>, AnalysisError> {
    let norms: Vec<(f64, f64)> = series.iter().map(|(t, x)| (*t, x.norm())).collect();
    settling_time_of_norms(&norms, t0)
}

/// [`settling_time`] on a precomputed norm series.
pub fn settling_time_of_norms(norms: &[(f64, f64)], t0: f64) -> Result<Option<f64>, AnalysisError> {
    let (_, initial) = *norms
        .first()
        .ok_or_else(|| AnalysisError::InvalidArgument("settling time of an empty series".into()))?;
    if initial == 0.0 {
        return Ok(Some(t0));
    }
    let band = SETTLING_FRACTION * initial;
    match norms.iter().rposition(|(_, x)| *x > band) {
        None => Ok(Some(norms[0].0)),
        Some(last) => Ok(norms.get(last + 1).map(|(t, _)| *t)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerStats {
    pub count: usize,
    pub min_interval: Option<f64>,
}

/// Count and minimum spacing of a sorted list of trigger instants.
pub fn trigger_statistics(instants: &[f64]) -> Result<TriggerStats, AnalysisError> {
    if instants.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidArgument("trigger instants must be strictly increasing".into()));
    }
    let min_interval = instants.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    Ok(TriggerStats { count: instants.len(), min_interval })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentMetrics {
    /// 0-based agent id.
    pub agent: usize,
    pub trigger_count: usize,
    pub min_trigger_interval: Option<f64>,
    pub settling_time: Option<f64>,
    pub initial_error: f64,
    pub terminal_error: f64,
    pub fusion_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub agents: Vec<AgentMetrics>,
    pub terminal_q_spread: f64,
    pub terminal_dq_spread: f64,
    pub terminal_w_spread: f64,
    pub terminal_eta_spread: f64,
    pub messages_accepted: usize,
    pub messages_rejected: usize,
}

impl Metrics {
    pub fn all_settled(&self) -> bool {
        self.agents.iter().all(|a| a.settling_time.is_some())
    }
}

fn max_pairwise(values: &[&[f64]]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, x) in values.iter().enumerate() {
        for y in &values[a + 1..] {
            let d = x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            best = best.max(d);
        }
    }
    best
}

/// Largest pairwise distance over `agents` of a per-agent quantity in the last frame.
pub fn terminal_spread<'a>(out: &'a SimOutput, agents: &VertexSet, pick: impl Fn(&'a crate::engine::AgentSample) -> &'a [f64]) -> f64 {
    let Some(last) = out.frames.last() else { return 0.0 };
    let vals: Vec<&[f64]> = agents.iter().map(|i| pick(&last.agents[i])).collect();
    max_pairwise(&vals)
}

pub fn compute_metrics(out: &SimOutput, graph: &Digraph) -> Result<Metrics, AnalysisError> {
    let normal = &out.normal;
    let mut agents = Vec::with_capacity(normal.len());
    for i in normal.iter() {
        let series = consensus_error_series(out, graph, normal, i)?;
        let stats = trigger_statistics(&out.trigger_times(i))?;
        agents.push(AgentMetrics {
            agent: i,
            trigger_count: stats.count,
            min_trigger_interval: stats.min_interval,
            settling_time: if series.is_empty() { None } else { settling_time(&series, out.t0)? },
            initial_error: series.first().map_or(0.0, |(_, x)| x.norm()),
            terminal_error: series.last().map_or(0.0, |(_, x)| x.norm()),
            fusion_runs: out.fusion_runs[i],
        });
    }
    let rejected = out.rejected_messages();
    let accepted = out
        .messages
        .iter()
        .filter(|m| m.outcome == crate::protocol::AcceptOutcome::Accepted)
        .count();
    Ok(Metrics {
        agents,
        terminal_q_spread: terminal_spread(out, normal, |a| &a.q),
        terminal_dq_spread: terminal_spread(out, normal, |a| &a.dq),
        terminal_w_spread: terminal_spread(out, normal, |a| &a.w),
        terminal_eta_spread: terminal_spread(out, normal, |a| &a.eta),
        messages_accepted: accepted,
        messages_rejected: rejected,
    })
}
