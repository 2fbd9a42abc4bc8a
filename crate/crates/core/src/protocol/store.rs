use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use tracing::warn;

use super::{auxiliary_variable, ObserverMatrix};

/// Minimum spacing between two accepted broadcasts of the same sender.
pub const DEFAULT_DWELL_MIN: f64 = 1e-3;

/// Slack for comparing instants that are sums of a fixed step.
pub const TIME_EPS: f64 = 1e-9;

/// Last accepted broadcast of one in-neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub t_accept: f64,
    pub eta: DVector<f64>,
    /// `e^{−S t_accept} η`.
    pub w_frozen: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptOutcome {
    Accepted,
    /// Arrived less than the dwell time after the previous accepted one.
    Rejected,
    /// Sender is not an in-neighbor.
    UnknownSender,
}

/// Per-in-neighbor storage. Records stay in place when a sender goes silent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborStore {
    records: BTreeMap<usize, Option<NeighborRecord>>,
}

impl NeighborStore {
    pub fn new(in_neighbors: impl IntoIterator<Item = usize>) -> Self {
        Self { records: in_neighbors.into_iter().map(|j| (j, None)).collect() }
    }

    /// Stores a record unconditionally (initial-state exchange).
    pub fn seed(&mut self, j: usize, t: f64, eta: DVector<f64>, s: &ObserverMatrix) {
        let w_frozen = auxiliary_variable(s, t, &eta);
        self.records.insert(j, Some(NeighborRecord { t_accept: t, eta, w_frozen }));
    }

    /// Like [`accept`](Self::accept) with the auxiliary variable already computed.
    pub fn accept_with_aux(
        &mut self,
        j: usize,
        t: f64,
        eta: DVector<f64>,
        w_frozen: DVector<f64>,
        dwell_min: f64,
    ) -> AcceptOutcome {
        let Some(slot) = self.records.get_mut(&j) else {
            warn!(sender = j + 1, "ignoring broadcast from an agent that is not an in-neighbor");
            return AcceptOutcome::UnknownSender;
        };
        if let Some(prev) = slot {
            if t - prev.t_accept < dwell_min - TIME_EPS {
                return AcceptOutcome::Rejected;
            }
        }
        *slot = Some(NeighborRecord { t_accept: t, eta, w_frozen });
        AcceptOutcome::Accepted
    }

    /// Applies the dwell filter to a broadcast `(t, η_j)` from `j`.
    pub fn accept(
        &mut self,
        j: usize,
        t: f64,
        eta: DVector<f64>,
        dwell_min: f64,
        s: &ObserverMatrix,
    ) -> AcceptOutcome {
        let w = auxiliary_variable(s, t, &eta);
        self.accept_with_aux(j, t, eta, w, dwell_min)
    }

    pub fn record(&self, j: usize) -> Option<&NeighborRecord> {
        self.records.get(&j).and_then(Option::as_ref)
    }

    pub fn in_neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.keys().copied()
    }

    /// Number of in-neighbors with a stored record.
    pub fn len(&self) -> usize {
        self.records.values().filter(|r| r.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stored auxiliary variables as columns, in sender-id order.
    pub fn w_columns(&self) -> DMatrix<f64> {
        let cols: Vec<&DVector<f64>> = self.records.values().flatten().map(|r| &r.w_frozen).collect();
        match cols.first() {
            None => DMatrix::zeros(0, 0),
            Some(first) => DMatrix::from_fn(first.len(), cols.len(), |r, c| cols[c][r]),
        }
    }
}
