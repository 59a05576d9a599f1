//! Farthest-insertion tour construction and the sufficiency diagnostic.
//!
//! The constructor covers a finite point set with an open path: it starts
//! from a farthest pair, then repeatedly takes the unvisited point farthest
//! from the current vertex set and splices it in at the cheapest position
//! (both ends included). All ties break toward the lowest index, so the
//! result is a pure function of the input. The sufficiency ratio compares
//! the path cost against `gamma_hat`; no bound is asserted because the
//! comparison constant is not constructive.

use rayon::prelude::*;
use thiserror::Error;

use crate::beta::BetaConfig;
use crate::carleson::{gamma_hat, CarlesonError, GammaHat};
use crate::group::GroupElement;
use crate::norms::{HomogeneousMetric, MetricError};

#[derive(Debug, Error)]
pub enum TourError {
    #[error("point set must be nonempty")]
    EmptyPointSet,
    #[error("ordering is not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("sufficiency ratio needs at least two distinct points")]
    DegenerateInput,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Carleson(#[from] CarlesonError),
}

/// One step of the insertion trace, for audits.
#[derive(Debug, Clone)]
pub struct InsertionStep {
    pub point: usize,
    pub position: usize,
    pub cost_increase: f64,
    /// Distance from the selected point to the vertex set at selection time.
    pub selection_distance: f64,
}

#[derive(Debug, Clone)]
pub struct Tour {
    /// Visiting order (an open path over input indices).
    pub ordering: Vec<usize>,
    pub cost: f64,
    pub trace: Vec<InsertionStep>,
}

/// Chain cost of an explicit ordering; validates the permutation.
pub fn tour_cost(
    metric: &HomogeneousMetric,
    ordering: &[usize],
    points: &[GroupElement],
) -> Result<f64, TourError> {
    let n = points.len();
    if ordering.len() != n {
        return Err(TourError::InvalidPermutation(n));
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || seen[i] {
            return Err(TourError::InvalidPermutation(n));
        }
        seen[i] = true;
    }
    let mut cost = 0.0;
    for pair in ordering.windows(2) {
        cost += metric.distance(&points[pair[0]], &points[pair[1]])?;
    }
    Ok(cost)
}

/// Farthest-insertion open path. Deterministic: ties resolve to the lowest
/// point index and the lowest insertion position.
pub fn farthest_insertion(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
) -> Result<Tour, TourError> {
    let n = points.len();
    if n == 0 {
        return Err(TourError::EmptyPointSet);
    }
    if n == 1 {
        return Ok(Tour { ordering: vec![0], cost: 0.0, trace: Vec::new() });
    }

    // O(n^2) distance table, rows in parallel.
    let dist: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, TourError> {
            let mut row = vec![0.0; n];
            for j in 0..n {
                if i != j {
                    row[j] = metric.distance(&points[i], &points[j])?;
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;

    // farthest pair, ties to the lexicographically first (i, j)
    let mut best = (0usize, 1usize, dist[0][1]);
    for i in 0..n {
        for j in (i + 1)..n {
            if dist[i][j] > best.2 {
                best = (i, j, dist[i][j]);
            }
        }
    }
    let mut path = vec![best.0, best.1];
    let mut visited = vec![false; n];
    visited[best.0] = true;
    visited[best.1] = true;
    // distance of each point to the growing vertex set
    let mut to_set: Vec<f64> = (0..n)
        .map(|k| dist[k][best.0].min(dist[k][best.1]))
        .collect();
    let mut trace = Vec::with_capacity(n.saturating_sub(2));

    for _ in 2..n {
        let mut pick = usize::MAX;
        let mut pick_d = f64::NEG_INFINITY;
        for k in 0..n {
            if !visited[k] && to_set[k] > pick_d {
                pick_d = to_set[k];
                pick = k;
            }
        }

        // cheapest splice position, both ends allowed
        let mut pos = 0usize;
        let mut delta = dist[pick][path[0]];
        for q in 0..path.len() - 1 {
            let (a, b) = (path[q], path[q + 1]);
            let d = dist[pick][a] + dist[pick][b] - dist[a][b];
            if d < delta {
                delta = d;
                pos = q + 1;
            }
        }
        let end_delta = dist[pick][*path.last().unwrap()];
        if end_delta < delta {
            delta = end_delta;
            pos = path.len();
        }

        path.insert(pos, pick);
        visited[pick] = true;
        trace.push(InsertionStep {
            point: pick,
            position: pos,
            cost_increase: delta,
            selection_distance: pick_d,
        });
        for k in 0..n {
            if !visited[k] && dist[k][pick] < to_set[k] {
                to_set[k] = dist[k][pick];
            }
        }
    }

    let mut cost = 0.0;
    for pair in path.windows(2) {
        cost += dist[pair[0]][pair[1]];
    }
    Ok(Tour { ordering: path, cost, trace })
}

#[derive(Debug, Clone)]
pub struct SufficiencyDiag {
    pub tour_cost: f64,
    pub gamma: GammaHat,
    pub ratio: f64,
}

/// Path cost over `gamma_hat` on the same window; a diagnostic only.
pub fn sufficiency_ratio(
    metric: &HomogeneousMetric,
    points: &[GroupElement],
    n_min: i32,
    n_max: i32,
    beta_cfg: &BetaConfig,
) -> Result<SufficiencyDiag, TourError> {
    if points.len() < 2 {
        return Err(TourError::DegenerateInput);
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if metric.distance(&points[i], &points[j])? == 0.0 {
                return Err(TourError::DegenerateInput);
            }
        }
    }
    let tour = farthest_insertion(metric, points)?;
    let gamma = gamma_hat(metric, points, n_min, n_max, beta_cfg)?;
    let ratio = tour.cost / gamma.value;
    Ok(SufficiencyDiag { tour_cost: tour.cost, gamma, ratio })
}
