//! Evaluation: pair losses against the pair labels, cosine 1-NN, and
//! threshold-on-cosine verification ROC.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{IndexPair, LabeledDataset};
use crate::linalg::{dot, normalized};
use crate::loss::{cosine_similarity, PairLabel};
use crate::network::FeatureMap;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub r_emp: f64,
    pub r_hat: f64,
    pub gap: f64,
    pub knn_accuracy: f64,
    pub auc: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mean over all unordered pairs of `(C_ij - l_ij)^2` with `l = +1/-1`.
///
/// This is the evaluation loss; it ignores the lambda-dependent training targets.
pub fn empirical_pair_loss<M: FeatureMap + ?Sized>(map: &M, dataset: &LabeledDataset) -> Result<f64> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidInput("pair loss needs at least 2 samples".into()));
    }
    let ys = map.map_all(dataset.features())?;
    let units = ys
        .iter()
        .enumerate()
        .map(|(i, y)| normalized(y).map(|(u, _)| u).ok_or(Error::degenerate(i)))
        .collect::<Result<Vec<_>>>()?;
    let labels = dataset.labels();
    let mut total = 0.0;
    for i in 0..n {
        // per-row partial sums keep rounding error small on large test sets
        let mut row = 0.0;
        for j in i + 1..n {
            let c = dot(&units[i], &units[j]).clamp(-1.0, 1.0);
            let l = PairLabel::from_classes(labels[i], labels[j]).sign();
            row += (c - l) * (c - l);
        }
        total += row;
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub r_emp: f64,
    pub r_hat: f64,
    pub gap: f64,
}

/// `r_emp` on train, `r_hat` on test, `gap = r_emp - r_hat`.
pub fn generalization_gap<M: FeatureMap + ?Sized>(
    map: &M,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<GapReport> {
    let r_emp = empirical_pair_loss(map, train)?;
    let r_hat = empirical_pair_loss(map, test)?;
    Ok(GapReport {
        r_emp,
        r_hat,
        gap: r_emp - r_hat,
    })
}

/// Cosine nearest-neighbour classifier over transformed training points.
pub struct CosineKnn<'a, M: FeatureMap + ?Sized> {
    map: &'a M,
    points: Vec<Vec<f64>>,
    labels: Vec<u32>,
}

impl<'a, M: FeatureMap + ?Sized> CosineKnn<'a, M> {
    pub fn fit(map: &'a M, train: &LabeledDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidInput("1-NN needs a non-empty training set".into()));
        }
        Ok(Self {
            map,
            points: map.map_all(train.features())?,
            labels: train.labels().to_vec(),
        })
    }

    /// Label of the most cosine-similar training point; ties go to the lowest index.
    pub fn classify(&self, query: &[f64]) -> Result<u32> {
        let q = self.map.map(query)?;
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, p) in self.points.iter().enumerate() {
            let c = cosine_similarity(&q, p).map_err(|_| Error::degenerate(k))?;
            if c > best.0 {
                best = (c, k);
            }
        }
        Ok(self.labels[best.1])
    }

    pub fn accuracy(&self, test: &LabeledDataset) -> Result<f64> {
        if test.is_empty() {
            return Err(Error::InvalidInput("accuracy over an empty test set".into()));
        }
        let mut hits = 0usize;
        for (x, &y) in test.features().iter().zip(test.labels()) {
            if self.classify(x)? == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / test.len() as f64)
    }
}

pub fn knn_classify<M: FeatureMap + ?Sized>(train: &LabeledDataset, query: &[f64], map: &M) -> Result<u32> {
    CosineKnn::fit(map, train)?.classify(query)
}

pub fn knn_accuracy<M: FeatureMap + ?Sized>(map: &M, train: &LabeledDataset, test: &LabeledDataset) -> Result<f64> {
    CosineKnn::fit(map, train)?.accuracy(test)
}

/// Two raw feature vectors to be judged same/different by a cosine threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub label: PairLabel,
}

impl VerificationPair {
    pub fn from_indices(dataset: &LabeledDataset, pairs: &[IndexPair]) -> Vec<Self> {
        pairs
            .iter()
            .map(|p| Self {
                a: dataset.features()[p.a].clone(),
                b: dataset.features()[p.b].clone(),
                label: p.label,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Pairs with score `>= threshold` are accepted as positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl Roc {
    /// `threshold,fpr,tpr` rows; the opening point has threshold `inf`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "threshold,fpr,tpr")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// ROC over every distinct score, swept from high to low, with trapezoidal AUC.
///
/// Tied scores move the curve diagonally, which gives them half credit.
pub fn roc_from_scores(scores: &[f64], labels: &[PairLabel]) -> Result<Roc> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidInput(
            "ROC needs at least one positive and one negative pair".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().unwrap();
        let p = RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok(Roc { points, auc })
}

/// Cosine similarity of every transformed pair.
pub fn verification_scores<M: FeatureMap + ?Sized>(map: &M, pairs: &[VerificationPair]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, p)| cosine_similarity(&map.map(&p.a)?, &map.map(&p.b)?).map_err(|_| Error::degenerate(k)))
        .collect()
}

pub fn verification_roc<M: FeatureMap + ?Sized>(map: &M, pairs: &[VerificationPair]) -> Result<Roc> {
    let labels: Vec<PairLabel> = pairs.iter().map(|p| p.label).collect();
    if !labels.iter().any(|l| l.is_positive()) || labels.iter().all(|l| l.is_positive()) {
        return Err(Error::InvalidInput(
            "verification needs both positive and negative pairs".into(),
        ));
    }
    roc_from_scores(&verification_scores(map, pairs)?, &labels)
}
