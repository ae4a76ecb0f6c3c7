//! Covering-number diagnostics for the `(K, epsilon)`-robustness argument.
//!
//! A greedy `gamma/2`-cover of the raw features, split by class, yields `K`
//! label-pure cells of diameter at most `gamma`. If the transform distorts
//! distances inside every cell by at most `delta`, a loss with Lipschitz constant
//! `A` is `(K, 2A(gamma + delta))`-robust and the generalization error is at most
//! `epsilon + O(sqrt(K/n))`. The big-O constant is unknown, so the two terms are
//! reported separately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::linalg::{norm, normalized};
use crate::network::FeatureMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Angle between directions, in `[0, pi]`.
    #[default]
    Angular,
    Euclidean,
}

impl Metric {
    pub fn distance(self, u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Metric::Angular => angular_distance(u, v),
            Metric::Euclidean => {
                if u.len() != v.len() {
                    return Err(Error::Shape(format!("vectors of dim {} and {}", u.len(), v.len())));
                }
                Ok(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            }
        }
    }
}

/// Angle between `u` and `v`.
///
/// Evaluated as `2 atan2(|u^ - v^|, |u^ + v^|)`, which equals `acos(cos(u, v))`
/// but keeps full precision for nearly parallel vectors where `acos` loses
/// about half the digits.
pub fn angular_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("vectors of dim {} and {}", u.len(), v.len())));
    }
    let (a, _) = normalized(u).ok_or(Error::DegenerateVector { index: None })?;
    let (b, _) = normalized(v).ok_or(Error::DegenerateVector { index: None })?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    Ok(2.0 * norm(&diff).atan2(norm(&sum)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub radius: f64,
    /// Indices of the points chosen as centres, in the order they were added.
    pub centers: Vec<usize>,
    /// For every point, the position in `centers` of its nearest centre.
    pub assignment: Vec<usize>,
    /// Distance from every point to its assigned centre.
    pub distances: Vec<f64>,
}

impl CoverResult {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn max_assigned_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Farthest-point greedy cover: start from point 0 and keep adding the point
/// farthest from all current centres until every point is within `radius`.
///
/// Centres end up pairwise more than `radius` apart, so the cover is never
/// larger than the smallest `radius/2`-cover.
pub fn greedy_cover(points: &[Vec<f64>], radius: f64, metric: Metric) -> Result<CoverResult> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot cover an empty point set".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cover radius must be positive, got {radius}"
        )));
    }
    let n = points.len();
    let mut centers = vec![0usize];
    let mut assignment = vec![0usize; n];
    let mut nearest = points
        .iter()
        .map(|p| metric.distance(&points[0], p))
        .collect::<Result<Vec<f64>>>()?;
    loop {
        // first index wins ties
        let (far, far_d) =
            nearest.iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (k, d)| if d > best.1 { (k, d) } else { best },
            );
        if far_d <= radius {
            break;
        }
        let slot = centers.len();
        centers.push(far);
        for k in 0..n {
            let d = metric.distance(&points[far], &points[k])?;
            if d < nearest[k] {
                nearest[k] = d;
                assignment[k] = slot;
            }
        }
    }
    Ok(CoverResult {
        radius,
        centers,
        assignment,
        distances: nearest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    /// Disjoint, exhaustive, label-pure index sets.
    pub subsets: Vec<Vec<usize>>,
    /// Number of cells in the underlying feature cover.
    pub cover_cells: usize,
    pub class_count: usize,
}

impl PartitionResult {
    /// Number of non-empty cells `K`.
    pub fn k(&self) -> usize {
        self.subsets.len()
    }
}

/// Class x cover-cell partition: a greedy `gamma/2`-cover of the features,
/// intersected with the labels, empty cells dropped. Cells are ordered by
/// (cover cell, label).
pub fn partition_feature_label_space(dataset: &LabeledDataset, gamma: f64, metric: Metric) -> Result<PartitionResult> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot partition an empty dataset".into()));
    }
    let cover = greedy_cover(dataset.features(), gamma / 2.0, metric)?;
    let mut cells: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for (k, (&cell, &label)) in cover.assignment.iter().zip(dataset.labels()).enumerate() {
        cells.entry((cell, label)).or_default().push(k);
    }
    Ok(PartitionResult {
        subsets: cells.into_values().collect(),
        cover_cells: cover.len(),
        class_count: dataset.class_count(),
    })
}

/// Largest change in pairwise distance caused by `map` within any single cell.
pub fn isometry_defect<M: FeatureMap + ?Sized>(
    map: &M,
    dataset: &LabeledDataset,
    partition: &PartitionResult,
    metric: Metric,
) -> Result<f64> {
    let n = dataset.len();
    let mut seen = vec![false; n];
    for &k in partition.subsets.iter().flatten() {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidInput(format!(
                "partition index {k} is out of range or repeated"
            )));
        }
    }
    let xs = dataset.features();
    let mut worst = 0.0f64;
    for subset in &partition.subsets {
        if subset.len() < 2 {
            continue;
        }
        let ys = subset.iter().map(|&k| map.map(&xs[k])).collect::<Result<Vec<_>>>()?;
        for a in 0..subset.len() {
            for b in a + 1..subset.len() {
                let before = metric.distance(&xs[subset[a]], &xs[subset[b]])?;
                let after = metric
                    .distance(&ys[a], &ys[b])
                    .map_err(|_| Error::degenerate(subset[a]))?;
                worst = worst.max((after - before).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub gamma: f64,
    pub delta_hat: f64,
    pub lipschitz_a: f64,
    /// `2 A (gamma + delta_hat)`.
    pub epsilon: f64,
    pub k: usize,
    pub n: usize,
    /// `sqrt(K / n)`, the term whose constant is left unspecified.
    pub sqrt_k_over_n: f64,
}

impl RobustnessReport {
    /// `(epsilon, sqrt(K/n))`.
    pub fn bound_terms(&self) -> (f64, f64) {
        (self.epsilon, self.sqrt_k_over_n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn robustness_bound(k: usize, n: usize, gamma: f64, delta_hat: f64, lipschitz_a: f64) -> Result<RobustnessReport> {
    if k < 1 || n < 2 {
        return Err(Error::InvalidInput(format!("need K >= 1 and n >= 2, got K={k}, n={n}")));
    }
    for (name, v) in [("gamma", gamma), ("delta_hat", delta_hat), ("lipschitz_a", lipschitz_a)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    Ok(RobustnessReport {
        gamma,
        delta_hat,
        lipschitz_a,
        epsilon: 2.0 * lipschitz_a * (gamma + delta_hat),
        k,
        n,
        sqrt_k_over_n: (k as f64 / n as f64).sqrt(),
    })
}

/// Partition the training set, measure the defect of `map`, and assemble the report.
pub fn diagnose<M: FeatureMap + ?Sized>(
    map: &M,
    train: &LabeledDataset,
    gamma: f64,
    metric: Metric,
    lipschitz_a: f64,
) -> Result<(PartitionResult, RobustnessReport)> {
    let partition = partition_feature_label_space(train, gamma, metric)?;
    let delta_hat = isometry_defect(map, train, &partition, metric)?;
    let report = robustness_bound(partition.k(), train.len(), gamma, delta_hat, lipschitz_a)?;
    Ok((partition, report))
}
