//! Pairwise objectives on transformed features.
//!
//! The pairwise cosine objective is
//!
//! ```text
//! J = 1/2 * sum_{(i,j) in pairs} (C_ij - t_ij)^2,    C_ij = cos(y_i, y_j)
//! ```
//!
//! where the same-class target is `t = lambda + (1 - lambda) * cos(x_i, x_j)` on the
//! raw features and every cross-class target is `-1`. Pair lists produced by
//! [`crate::data::enumerate_pairs`] hold each unordered pair once; summing over
//! ordered pairs instead doubles `J` and its gradient.
//!
//! Euclidean hinge and logistic ("smoothed hinge") pair losses are provided as
//! metric-learning baselines.

use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dot, gemm, normalized, Matrix, NORM_EPS};
use crate::{Error, Result};

/// Whether two samples share a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairLabel {
    Positive,
    Negative,
}

impl PairLabel {
    pub fn from_classes(a: u32, b: u32) -> Self {
        if a == b {
            PairLabel::Positive
        } else {
            PairLabel::Negative
        }
    }

    /// `+1` for positive pairs, `-1` for negative ones.
    pub fn sign(self) -> f64 {
        match self {
            PairLabel::Positive => 1.0,
            PairLabel::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == PairLabel::Positive
    }
}

/// One training pair with its label and regression target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTarget {
    pub i: usize,
    pub j: usize,
    pub label: PairLabel,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// Cosine regression towards the lambda-interpolated target.
    #[default]
    Gdt,
    /// Same-class target fixed to 1 (lambda = 1).
    MetricLearning,
    /// Same-class target equal to the raw cosine (lambda = 0).
    Classification,
    /// Euclidean hinge baseline.
    HingeDml,
    /// Euclidean logistic baseline.
    SmoothedDml,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
    pub mode: LossMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 0.4,
            mode: LossMode::Gdt,
        }
    }
}

impl LossConfig {
    pub fn gdt(lambda: f64) -> Self {
        Self {
            lambda,
            mode: LossMode::Gdt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)
    }

    /// The lambda actually used for targets; the two pedagogic modes pin it.
    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            LossMode::MetricLearning => 1.0,
            LossMode::Classification => 0.0,
            _ => self.lambda,
        }
    }

    pub fn dml_variant(&self) -> Option<DmlVariant> {
        match self.mode {
            LossMode::HingeDml => Some(DmlVariant::Hinge),
            LossMode::SmoothedDml => Some(DmlVariant::Smoothed),
            _ => None,
        }
    }

    /// Lipschitz bound of the per-pair loss used by the robustness report.
    ///
    /// Quadratic cosine loss: `|d/dC (C - t)^2| = 2|C - t| <= 4`. Both hinge
    /// variants have slope magnitude at most 1.
    pub fn lipschitz_bound(&self) -> f64 {
        match self.mode {
            LossMode::HingeDml | LossMode::SmoothedDml => 1.0,
            _ => 4.0,
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// `u.v / (|u||v|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("vectors of dim {} and {}", u.len(), v.len())));
    }
    let (uu, vv) = (dot(u, u), dot(v, v));
    if !(uu.sqrt() > NORM_EPS) || !(vv.sqrt() > NORM_EPS) {
        return Err(Error::DegenerateVector { index: None });
    }
    Ok((dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Regression target for the pair `(x_i, x_j)` computed on raw features.
pub fn gdt_target(x_i: &[f64], x_j: &[f64], same_class: bool, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !same_class {
        return Ok(-1.0);
    }
    Ok(lambda + (1.0 - lambda) * cosine_similarity(x_i, x_j)?)
}

/// Metric-learning indicator: 1 for same class, -1 otherwise.
pub fn metric_learning_target(same_class: bool) -> f64 {
    if same_class {
        1.0
    } else {
        -1.0
    }
}

/// Classification indicator: raw cosine for same class, -1 otherwise.
pub fn classification_target(x_i: &[f64], x_j: &[f64], same_class: bool) -> Result<f64> {
    if same_class {
        cosine_similarity(x_i, x_j)
    } else {
        Ok(-1.0)
    }
}

/// Unit directions and norms of every transformed vector.
fn directions(ys: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut units = Vec::with_capacity(ys.len());
    let mut norms = Vec::with_capacity(ys.len());
    for (i, y) in ys.iter().enumerate() {
        let (u, n) = normalized(y).ok_or_else(|| Error::degenerate(i))?;
        units.push(u);
        norms.push(n);
    }
    Ok((units, norms))
}

fn check_pairs(n: usize, pairs: &[PairTarget]) -> Result<()> {
    if let Some(p) = pairs.iter().find(|p| p.i >= n || p.j >= n || p.i == p.j) {
        return Err(Error::InvalidInput(format!(
            "pair ({}, {}) invalid for {n} samples",
            p.i, p.j
        )));
    }
    Ok(())
}

/// `J = 1/2 * sum (C_ij - t_ij)^2` over the given pairs.
pub fn gdt_loss(ys: &[Vec<f64>], pairs: &[PairTarget]) -> Result<f64> {
    check_pairs(ys.len(), pairs)?;
    let (units, _) = directions(ys)?;
    Ok(0.5
        * pairs
            .iter()
            .map(|p| {
                let r = dot(&units[p.i], &units[p.j]).clamp(-1.0, 1.0) - p.target;
                r * r
            })
            .sum::<f64>())
}

/// Contribution of a single pair to `(dJ/dy_i, dJ/dy_j)`.
///
/// `dC/dy_i = (y_j/|y_j| - C y_i/|y_i|) / |y_i|` is orthogonal to `y_i`.
pub fn pair_gradient_terms(y_i: &[f64], y_j: &[f64], target: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (ui, ni) = normalized(y_i).ok_or(Error::degenerate(0))?;
    let (uj, nj) = normalized(y_j).ok_or(Error::degenerate(1))?;
    let c = dot(&ui, &uj).clamp(-1.0, 1.0);
    let r = c - target;
    let gi = ui.iter().zip(&uj).map(|(a, b)| r * (b - c * a) / ni).collect();
    let gj = ui.iter().zip(&uj).map(|(a, b)| r * (a - c * b) / nj).collect();
    Ok((gi, gj))
}

/// `dJ/dy_k` for every sample, summing the contributions of each pair that contains it.
pub fn gdt_loss_grad(ys: &[Vec<f64>], pairs: &[PairTarget]) -> Result<Vec<Vec<f64>>> {
    Ok(gdt_loss_and_grad(ys, pairs)?.1)
}

/// Objective and gradient in one sweep over the pairs.
pub fn gdt_loss_and_grad(ys: &[Vec<f64>], pairs: &[PairTarget]) -> Result<(f64, Vec<Vec<f64>>)> {
    check_pairs(ys.len(), pairs)?;
    let (units, norms) = directions(ys)?;
    let n = ys.len();
    let u = Matrix::from_rows(&units)?;
    let mut cos = Matrix::zeros(n, n);
    gemm(1.0, &u, false, &u, true, 0.0, &mut cos);
    // Pair residuals r_ij go into a symmetric weight matrix R, so that
    // sum_j r_ij (u_j - c_ij u_i) = (R U)_i - s_i u_i with s_i = sum_j r_ij c_ij.
    let mut weights = Matrix::zeros(n, n);
    let mut self_term = vec![0.0; n];
    let mut loss = 0.0;
    for p in pairs {
        let c = cos.get(p.i.min(p.j), p.i.max(p.j)).clamp(-1.0, 1.0);
        let r = c - p.target;
        loss += r * r;
        weights.set(p.i, p.j, weights.get(p.i, p.j) + r);
        weights.set(p.j, p.i, weights.get(p.j, p.i) + r);
        self_term[p.i] += r * c;
        self_term[p.j] += r * c;
    }
    let mut grad = Matrix::zeros(n, u.cols());
    gemm(1.0, &weights, false, &u, false, 0.0, &mut grad);
    // Rescale from the unit-direction frame by 1/|y| once per sample.
    let acc = (0..n)
        .map(|i| {
            grad.row(i)
                .iter()
                .zip(u.row(i))
                .map(|(g, ui)| (g - self_term[i] * ui) / norms[i])
                .collect()
        })
        .collect();
    Ok((0.5 * loss, acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DmlVariant {
    Hinge,
    Smoothed,
}

/// Per-pair metric-learning loss on a Euclidean distance.
///
/// Hinge: `max(-l(1 - d), 0)`; smoothed: `log(1 + exp(-l(1 - d)))`.
pub fn dml_loss(distance: f64, label: PairLabel, variant: DmlVariant) -> Result<f64> {
    check_distance(distance)?;
    let m = -label.sign() * (1.0 - distance);
    Ok(match variant {
        DmlVariant::Hinge => m.max(0.0),
        DmlVariant::Smoothed => softplus(m),
    })
}

/// `d/dd` of [`dml_loss`]; the hinge kink is assigned slope 0.
pub fn dml_loss_derivative(distance: f64, label: PairLabel, variant: DmlVariant) -> Result<f64> {
    check_distance(distance)?;
    let l = label.sign();
    let m = -l * (1.0 - distance);
    // dm/dd = l
    Ok(match variant {
        DmlVariant::Hinge => {
            if m > 0.0 {
                l
            } else {
                0.0
            }
        }
        DmlVariant::Smoothed => l * sigmoid(m),
    })
}

fn check_distance(distance: f64) -> Result<()> {
    if !(distance >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "distance must be non-negative, got {distance}"
        )));
    }
    Ok(())
}

fn softplus(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Sum of [`dml_loss`] over the pairs, using Euclidean distances between transformed vectors.
pub fn dml_objective(ys: &[Vec<f64>], pairs: &[PairTarget], variant: DmlVariant) -> Result<f64> {
    Ok(dml_objective_and_grad(ys, pairs, variant)?.0)
}

/// Objective and per-sample gradient of [`dml_objective`].
///
/// `dd/dy_i = (y_i - y_j)/d`; coincident points contribute no gradient.
pub fn dml_objective_and_grad(
    ys: &[Vec<f64>],
    pairs: &[PairTarget],
    variant: DmlVariant,
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_pairs(ys.len(), pairs)?;
    let dim = ys.first().map_or(0, Vec::len);
    let mut grads = vec![vec![0.0; dim]; ys.len()];
    let mut total = 0.0;
    let mut diff = vec![0.0; dim];
    for p in pairs {
        for ((d, a), b) in diff.iter_mut().zip(&ys[p.i]).zip(&ys[p.j]) {
            *d = a - b;
        }
        let dist = dot(&diff, &diff).sqrt();
        total += dml_loss(dist, p.label, variant)?;
        let slope = dml_loss_derivative(dist, p.label, variant)?;
        if slope == 0.0 || dist == 0.0 {
            continue;
        }
        axpy(slope / dist, &diff, &mut grads[p.i]);
        axpy(-slope / dist, &diff, &mut grads[p.j]);
    }
    Ok((total, grads))
}

/// Gram matrix of cosines between every pair of rows.
pub fn cosine_matrix(ys: &[Vec<f64>]) -> Result<Matrix> {
    let (units, _) = directions(ys)?;
    let n = ys.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, 1.0);
        for j in i + 1..n {
            let c = dot(&units[i], &units[j]).clamp(-1.0, 1.0);
            m.set(i, j, c);
            m.set(j, i, c);
        }
    }
    Ok(m)
}
