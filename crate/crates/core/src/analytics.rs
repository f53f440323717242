//! Trace statistics over simulated users and traffic: radius of gyration,
//! visited cells, per-location application traffic, and the rank
//! correlation between handover frequency and traffic volume.
//!
//! Coordinates are planar meters; the radius of gyration is the RMS
//! Euclidean distance of samples from their centroid.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{CellId, LocationType, NetworkLayout, Position};
use crate::sim::{AppCategory, TrafficRecord, TrajectorySample};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory timestamps not strictly increasing at sample {0}")]
    NonMonotonicTime(usize),
    #[error("traffic record {index} references unknown cell {cell}")]
    UnknownCell { index: usize, cell: CellId },
    #[error("trajectory sample {index} references unknown cell {cell}")]
    UnknownTrajectoryCell { index: usize, cell: CellId },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
}

/// A validated, time-ordered, nonempty trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, AnalyticsError> {
        if samples.is_empty() {
            return Err(AnalyticsError::EmptyTrajectory);
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].time_ms <= w[0].time_ms) {
            return Err(AnalyticsError::NonMonotonicTime(i + 1));
        }
        Ok(Trajectory { samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// RMS distance of `points` from their centroid; `None` for no points.
pub fn rog_of_points(points: impl IntoIterator<Item = Position> + Clone) -> Option<f64> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for p in points.clone() {
        sx += p.x;
        sy += p.y;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let center = Position::new(sx / n as f64, sy / n as f64);
    let ss: f64 = points.into_iter().map(|p| p.distance_sq(center)).sum();
    Some((ss / n as f64).sqrt())
}

/// Radius of gyration over the user's sampled positions.
pub fn radius_of_gyration(traj: &Trajectory) -> f64 {
    rog_of_points(traj.samples.iter().map(|s| s.position)).expect("trajectory is nonempty")
}

/// Radius of gyration over the positions of the serving cells recorded in
/// the trajectory (the cell-level view of the same movement).
pub fn cell_radius_of_gyration(traj: &Trajectory, layout: &NetworkLayout) -> Result<f64, AnalyticsError> {
    let positions = traj
        .samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            layout
                .cell(s.cell)
                .map(|c| c.position)
                .ok_or(AnalyticsError::UnknownTrajectoryCell { index, cell: s.cell })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rog_of_points(positions.iter().copied()).expect("trajectory is nonempty"))
}

/// Number of distinct cells in the trajectory.
pub fn visited_cells(traj: &Trajectory) -> usize {
    traj.samples.iter().map(|s| s.cell).collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryLocationRow {
    pub category: AppCategory,
    pub location_type: LocationType,
    /// Mean over cells of each cell's total bytes in this category.
    pub mean_bytes: f64,
    pub cells: usize,
}

/// Mean per-cell traffic of each application category, grouped by the
/// location type of the cell. Only (category, location) pairs with traffic
/// appear; rows are ordered by category, then location type.
pub fn traffic_by_category_and_location(
    records: &[TrafficRecord],
    layout: &NetworkLayout,
) -> Result<Vec<CategoryLocationRow>, AnalyticsError> {
    let mut per_cell: BTreeMap<(AppCategory, LocationType, CellId), u128> = BTreeMap::new();
    for (index, r) in records.iter().enumerate() {
        let cell = layout
            .cell(r.cell)
            .ok_or(AnalyticsError::UnknownCell { index, cell: r.cell })?;
        *per_cell.entry((r.category, cell.location_type, r.cell)).or_default() += u128::from(r.bytes);
    }
    let mut grouped: BTreeMap<(AppCategory, LocationType), (f64, usize)> = BTreeMap::new();
    for ((cat, loc, _), total) in per_cell {
        let e = grouped.entry((cat, loc)).or_default();
        e.0 += total as f64;
        e.1 += 1;
    }
    Ok(grouped
        .into_iter()
        .map(|((category, location_type), (sum, cells))| CategoryLocationRow {
            category,
            location_type,
            mean_bytes: sum / cells as f64,
            cells,
        })
        .collect())
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation between per-user handover counts and traffic
/// volumes, with average-rank tie handling.
pub fn handover_traffic_correlation(pairs: &[(f64, f64)]) -> Result<f64, AnalyticsError> {
    if pairs.len() < 2 {
        return Err(AnalyticsError::UndefinedCorrelation("fewer than two users"));
    }
    let rx = average_ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let ry = average_ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = pairs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
