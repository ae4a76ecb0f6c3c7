//! Datasets: the synthetic two-plane task, CSV and IDX I/O, and pair enumeration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm, Matrix};
use crate::loss::{check_lambda, gdt_target, PairLabel, PairTarget};
use crate::{Error, Result};

/// Feature vectors with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u32>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u32>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(d) = features.first().map(Vec::len) {
            if let Some(k) = features.iter().position(|f| f.len() != d) {
                return Err(Error::Shape(format!(
                    "sample {k} has dim {} but sample 0 has dim {d}",
                    features[k].len()
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn empty() -> Self {
        Self {
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension (0 for an empty dataset).
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_count(&self) -> usize {
        self.classes().len()
    }

    /// Samples per label, ascending by label.
    pub fn class_sizes(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Seeded selection of exactly `per_class` samples from every class.
    ///
    /// Samples keep the relative order of one global seeded shuffle.
    pub fn sample_per_class(&self, per_class: usize, seed: u64) -> Result<Self> {
        if per_class == 0 {
            return Ok(Self::empty());
        }
        for (label, size) in self.class_sizes() {
            if size < per_class {
                return Err(Error::InvalidInput(format!(
                    "class {label} has {size} samples, fewer than the {per_class} requested"
                )));
            }
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut taken: BTreeMap<u32, usize> = BTreeMap::new();
        let picked: Vec<usize> = order
            .into_iter()
            .filter(|&i| {
                let c = taken.entry(self.labels[i]).or_insert(0);
                *c += 1;
                *c <= per_class
            })
            .collect();
        Ok(self.subset(&picked))
    }

    /// Per-feature mean over all samples.
    pub fn feature_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for x in &self.features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Copy with `offset` subtracted from every sample.
    pub fn shifted(&self, offset: &[f64]) -> Result<Self> {
        if !self.is_empty() && offset.len() != self.dim() {
            return Err(Error::Shape(format!(
                "offset has dim {} but samples have dim {}",
                offset.len(),
                self.dim()
            )));
        }
        Ok(Self {
            features: self
                .features
                .iter()
                .map(|x| x.iter().zip(offset).map(|(v, o)| v - o).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_writer(BufWriter::new(File::create(path)?));
        for (x, y) in self.features.iter().zip(&self.labels) {
            let mut record = Vec::with_capacity(x.len() + 1);
            record.push(y.to_string());
            // `Display` for f64 is the shortest string that parses back to the same bits.
            record.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows of the form `label,v_1,...,v_d`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut dim: Option<usize> = None;
        for record in r.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() < 2 {
                return Err(Error::Schema {
                    line,
                    message: "row needs a label and at least one value".into(),
                });
            }
            let label: u32 = record[0].parse().map_err(|e| Error::Parse {
                line,
                message: format!("label {:?}: {e}", &record[0]),
            })?;
            let values = record
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            line,
                            message: format!("value {s:?} is not a finite number"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::Schema {
                        line,
                        message: format!("row has {} values, expected {d}", values.len()),
                    })
                }
                _ => {}
            }
            labels.push(label);
            features.push(values);
        }
        Self::new(features, labels)
    }
}

/// Parameters of the synthetic two-plane task.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub embed_dim: usize,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            n_train_per_class: 40,
            n_test_per_class: 1000,
            seed: 0,
        }
    }
}

/// Train/test split of the synthetic task plus the generating latent points.
///
/// `train_latent[k]` is the 3-d point whose embedding, normalized, is
/// `train.features()[k]`.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub embedding: Matrix,
    pub train_latent: Vec<[f64; 3]>,
    pub test_latent: Vec<[f64; 3]>,
}

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

/// Two classes in R^3, each an equal mixture of two plane patches, embedded into
/// `embed_dim` dimensions by a random Gaussian matrix and normalized.
///
/// Class 1 (`c = 1`) and class 2 (`c = -1`) draw `x ~ U[-1, 1]` and then either
/// `z ~ U[-3, 0]` on `-y + z = c` or `z ~ U[0, 3]` on `y + z = c`.
pub fn gen_two_plane_dataset(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.embed_dim < 3 {
        return Err(Error::InvalidConfig(format!(
            "embed_dim must be at least 3, got {}",
            cfg.embed_dim
        )));
    }
    let embedding = draw_embedding(cfg.embed_dim, cfg.seed);
    let (train, train_latent) = sample_split(&embedding, cfg.n_train_per_class, cfg.seed, TRAIN_STREAM)?;
    let (test, test_latent) = sample_split(&embedding, cfg.n_test_per_class, cfg.seed, TEST_STREAM)?;
    Ok(SyntheticData {
        train,
        test,
        embedding,
        train_latent,
        test_latent,
    })
}

/// `d x 3` matrix with i.i.d. standard normal entries, redrawn until well conditioned.
fn draw_embedding(d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let data: Vec<f64> = (0..d * 3).map(|_| rng.sample(StandardNormal)).collect();
        let u = Matrix::from_row_major(d, 3, data).expect("finite normal draws");
        if has_full_column_rank(&u) {
            return u;
        }
    }
}

/// Rank test via the Gram determinant relative to the product of column norms.
fn has_full_column_rank(u: &Matrix) -> bool {
    let col = |c: usize| (0..u.rows()).map(|r| u.get(r, c)).collect::<Vec<_>>();
    let cols = [col(0), col(1), col(2)];
    let g = |a: usize, b: usize| dot(&cols[a], &cols[b]);
    let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
        + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
    det > 1e-8 * g(0, 0) * g(1, 1) * g(2, 2)
}

fn sample_split(
    embedding: &Matrix,
    per_class: usize,
    seed: u64,
    stream: u64,
) -> Result<(LabeledDataset, Vec<[f64; 3]>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut features = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    let mut latent = Vec::with_capacity(2 * per_class);
    for (label, rhs) in [(1u32, 1.0f64), (2, -1.0)] {
        for _ in 0..per_class {
            let v = sample_plane_point(&mut rng, rhs);
            let x = embedding.matvec(&v);
            let n = norm(&x);
            if !(n > 0.0) {
                return Err(Error::degenerate(features.len()));
            }
            features.push(x.iter().map(|e| e / n).collect());
            labels.push(label);
            latent.push(v);
        }
    }
    Ok((LabeledDataset::new(features, labels)?, latent))
}

fn sample_plane_point(rng: &mut ChaCha8Rng, rhs: f64) -> [f64; 3] {
    let x = rng.random_range(-1.0..=1.0);
    if rng.random_bool(0.5) {
        // -y + z = rhs, z in [-3, 0]
        let z = rng.random_range(-3.0..=0.0);
        [x, z - rhs, z]
    } else {
        // y + z = rhs, z in [0, 3]
        let z = rng.random_range(0.0..=3.0);
        [x, rhs - z, z]
    }
}

/// Every unordered pair `i < j` with its label and target for the given lambda.
pub fn enumerate_pairs(dataset: &LabeledDataset, lambda: f64) -> Result<Vec<PairTarget>> {
    check_lambda(lambda)?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot enumerate pairs of an empty dataset".into()));
    }
    let xs = dataset.features();
    if let Some(k) = xs.iter().position(|x| !(norm(x) > crate::linalg::NORM_EPS)) {
        return Err(Error::degenerate(k));
    }
    let ys = dataset.labels();
    let n = dataset.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let label = PairLabel::from_classes(ys[i], ys[j]);
            let target = gdt_target(&xs[i], &xs[j], label.is_positive(), lambda)?;
            pairs.push(PairTarget { i, j, label, target });
        }
    }
    Ok(pairs)
}

/// Both orientations of every pair from [`enumerate_pairs`].
pub fn enumerate_ordered_pairs(dataset: &LabeledDataset, lambda: f64) -> Result<Vec<PairTarget>> {
    let unordered = enumerate_pairs(dataset, lambda)?;
    let mut pairs = Vec::with_capacity(2 * unordered.len());
    for p in unordered {
        pairs.push(p);
        pairs.push(PairTarget { i: p.j, j: p.i, ..p });
    }
    Ok(pairs)
}

/// Index pair drawn for a verification benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPair {
    pub a: usize,
    pub b: usize,
    pub label: PairLabel,
}

/// Draws `n_positive` distinct same-class and `n_negative` distinct cross-class
/// index pairs from a seeded stream.
pub fn sample_verification_pairs(
    dataset: &LabeledDataset,
    n_positive: usize,
    n_negative: usize,
    seed: u64,
) -> Result<Vec<IndexPair>> {
    let n = dataset.len();
    let labels = dataset.labels();
    let sizes = dataset.class_sizes();
    let pos_avail: usize = sizes.values().map(|s| s * s.saturating_sub(1) / 2).sum();
    let total = n * n.saturating_sub(1) / 2;
    if pos_avail < n_positive || total - pos_avail < n_negative {
        return Err(Error::InvalidInput(format!(
            "dataset has {pos_avail} positive and {} negative pairs; {n_positive}/{n_negative} requested",
            total - pos_avail
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut pos = Vec::with_capacity(n_positive);
    let mut neg = Vec::with_capacity(n_negative);
    while pos.len() < n_positive || neg.len() < n_negative {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        let label = PairLabel::from_classes(labels[a], labels[b]);
        let bucket = if label.is_positive() {
            (&mut pos, n_positive)
        } else {
            (&mut neg, n_negative)
        };
        if bucket.0.len() < bucket.1 {
            bucket.0.push(IndexPair { a, b, label });
        }
    }
    pos.extend(neg);
    Ok(pos)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn idx_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_error(path, "truncated header"))
}

/// Reads an IDX image file (`u8`, 3 dimensions) as flattened vectors scaled to `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let bytes = std::fs::read(path)?;
    let magic = read_be_u32(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(idx_error(path, format!("bad magic number {magic:#010x}")));
    }
    let count = read_be_u32(&bytes, 4, path)? as usize;
    let rows = read_be_u32(&bytes, 8, path)? as usize;
    let cols = read_be_u32(&bytes, 12, path)? as usize;
    let pixels = rows * cols;
    let payload = &bytes[16..];
    if payload.len() < count * pixels {
        return Err(idx_error(
            path,
            format!(
                "truncated payload: {} bytes for {count} images of {pixels} pixels",
                payload.len()
            ),
        ));
    }
    Ok(payload[..count * pixels]
        .chunks_exact(pixels.max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| f64::from(p) / 255.0).collect())
        .collect())
}

/// Reads an IDX label file (`u8`, 1 dimension).
pub fn read_idx_labels(path: &Path) -> Result<Vec<u32>> {
    let bytes = std::fs::read(path)?;
    let magic = read_be_u32(&bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(idx_error(path, format!("bad magic number {magic:#010x}")));
    }
    let count = read_be_u32(&bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(idx_error(
            path,
            format!("truncated payload: {} labels for a count of {count}", payload.len()),
        ));
    }
    Ok(payload[..count].iter().map(|&l| u32::from(l)).collect())
}

/// Loads a full IDX image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(idx_error(
            labels_path,
            format!("{} labels for {} images", labels.len(), images.len()),
        ));
    }
    LabeledDataset::new(images, labels)
}

/// Loads an IDX pair and keeps exactly `per_class` samples of every class.
pub fn load_idx_subset(images_path: &Path, labels_path: &Path, per_class: usize, seed: u64) -> Result<LabeledDataset> {
    load_idx(images_path, labels_path)?.sample_per_class(per_class, seed)
}

/// Writes images (values in `[0, 1]`, rounded to bytes) and labels in IDX format.
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    dataset: &LabeledDataset,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if dataset.dim() != rows * cols && !dataset.is_empty() {
        return Err(Error::Shape(format!("dim {} is not {rows}x{cols}", dataset.dim())));
    }
    let n = dataset.len() as u32;
    let mut img = Vec::with_capacity(16 + dataset.len() * rows * cols);
    for v in [IDX_IMAGES_MAGIC, n, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for x in dataset.features() {
        img.extend(x.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    std::fs::write(images_path, img)?;
    let mut lab = Vec::with_capacity(8 + dataset.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&n.to_be_bytes());
    for &l in dataset.labels() {
        lab.push(u8::try_from(l).map_err(|_| Error::InvalidInput(format!("label {l} exceeds a byte")))?);
    }
    std::fs::write(labels_path, lab)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticData {
        gen_two_plane_dataset(&SyntheticConfig {
            embed_dim: 10,
            n_train_per_class: 7,
            n_test_per_class: 5,
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn centering_removes_the_mean() {
        let d = LabeledDataset::new(vec![vec![1.0, 4.0], vec![3.0, 0.0]], vec![1, 2]).unwrap();
        let mean = d.feature_mean();
        assert_eq!(mean, vec![2.0, 2.0]);
        let c = d.shifted(&mean).unwrap();
        assert_eq!(c.features(), &[vec![-1.0, 2.0], vec![1.0, -2.0]]);
        assert_eq!(c.labels(), d.labels());
        assert!(d.shifted(&[1.0]).is_err());
    }

    #[test]
    fn synthetic_sizes_and_unit_norm() {
        let data = gen_two_plane_dataset(&SyntheticConfig {
            embed_dim: 100,
            n_train_per_class: 40,
            n_test_per_class: 1000,
            seed: 1,
        })
        .unwrap();
        assert_eq!(data.train.len(), 80);
        assert_eq!(data.test.len(), 2000);
        assert_eq!(data.train.dim(), 100);
        assert_eq!(
            data.train.class_sizes().into_iter().collect::<Vec<_>>(),
            vec![(1, 40), (2, 40)]
        );
        for x in data.train.features().iter().chain(data.test.features()) {
            assert!((norm(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_latent_points_lie_on_their_planes() {
        let data = small();
        for (v, &label) in data.train_latent.iter().zip(data.train.labels()) {
            let rhs = if label == 1 { 1.0 } else { -1.0 };
            assert!((-1.0..=1.0).contains(&v[0]));
            let on_a = (-v[1] + v[2] - rhs).abs() < 1e-12 && (-3.0..=0.0).contains(&v[2]);
            let on_b = (v[1] + v[2] - rhs).abs() < 1e-12 && (0.0..=3.0).contains(&v[2]);
            assert!(on_a || on_b, "{v:?} label {label}");
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_shares_embedding() {
        let a = small();
        let b = small();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.embedding, b.embedding);
        let c = gen_two_plane_dataset(&SyntheticConfig {
            n_test_per_class: 50,
            ..SyntheticConfig {
                embed_dim: 10,
                n_train_per_class: 7,
                n_test_per_class: 5,
                seed: 3,
            }
        })
        .unwrap();
        // the train stream is independent of the test size
        assert_eq!(a.train, c.train);
        assert_eq!(a.embedding, c.embedding);
    }

    #[test]
    fn synthetic_rejects_small_dim() {
        let cfg = SyntheticConfig {
            embed_dim: 2,
            ..Default::default()
        };
        assert!(matches!(gen_two_plane_dataset(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn csv_row_format() {
        let d = LabeledDataset::read_csv("2,0.5,-0.5\n".as_bytes()).unwrap();
        assert_eq!(d.labels(), &[2]);
        assert_eq!(d.features(), &[vec![0.5, -0.5]]);
    }

    #[test]
    fn csv_ragged_rows_name_the_line() {
        let err = LabeledDataset::read_csv("1,0.1,0.2\n2,0.3,0.4\n1,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_malformed_value_names_the_line() {
        let err = LabeledDataset::read_csv("1,0.1\n1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = LabeledDataset::read_csv("x,0.1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = LabeledDataset::read_csv("1,inf\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = small().train;
        data.save_csv(&path).unwrap();
        assert_eq!(LabeledDataset::load_csv(&path).unwrap(), data);
    }

    #[test]
    fn pairs_count_and_labels() {
        let d = LabeledDataset::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![1, 1, 2]).unwrap();
        let pairs = enumerate_pairs(&d, 0.5).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].label, PairLabel::Positive);
        assert!((pairs[0].target - 0.5).abs() < 1e-15); // cos = 0
        assert_eq!(pairs[1].target, -1.0);
        assert_eq!(enumerate_ordered_pairs(&d, 0.5).unwrap().len(), 6);
    }

    #[test]
    fn pairs_same_class_metric_learning() {
        let d = LabeledDataset::new(vec![vec![1.0, 0.2], vec![-0.3, 1.0]], vec![4, 4]).unwrap();
        let pairs = enumerate_pairs(&d, 1.0).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target, 1.0);
        assert_eq!(pairs[0].label, PairLabel::Positive);
    }

    #[test]
    fn pairs_errors() {
        assert!(enumerate_pairs(&LabeledDataset::empty(), 0.5).is_err());
        let d = LabeledDataset::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![1, 2]).unwrap();
        assert!(matches!(
            enumerate_pairs(&d, 0.5),
            Err(Error::DegenerateVector { index: Some(1) })
        ));
        let ok = small().train;
        assert!(matches!(enumerate_pairs(&ok, 2.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn per_class_sampling() {
        let d = small().test;
        let s = d.sample_per_class(3, 9).unwrap();
        assert_eq!(s.class_sizes().into_iter().collect::<Vec<_>>(), vec![(1, 3), (2, 3)]);
        assert_eq!(s, d.sample_per_class(3, 9).unwrap());
        assert!(d.sample_per_class(0, 9).unwrap().is_empty());
        assert!(d.sample_per_class(6, 9).is_err());
    }

    #[test]
    fn verification_pairs_are_distinct_and_balanced() {
        let d = small().test;
        let pairs = sample_verification_pairs(&d, 8, 12, 4).unwrap();
        assert_eq!(pairs.iter().filter(|p| p.label.is_positive()).count(), 8);
        assert_eq!(pairs.len(), 20);
        let mut keys: Vec<_> = pairs.iter().map(|p| (p.a.min(p.b), p.a.max(p.b))).collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), 20);
        for p in &pairs {
            assert_eq!(p.label, PairLabel::from_classes(d.labels()[p.a], d.labels()[p.b]));
        }
        assert!(sample_verification_pairs(&d, 100, 0, 4).is_err());
    }

    #[test]
    fn idx_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
        let feats: Vec<Vec<f64>> = (0..12)
            .map(|k| (0..4).map(|p| ((k * 4 + p) % 256) as f64 / 255.0).collect())
            .collect();
        let labels: Vec<u32> = (0..12).map(|k| k % 3).collect();
        let d = LabeledDataset::new(feats, labels).unwrap();
        write_idx(&ip, &lp, &d, 2, 2).unwrap();
        let back = load_idx(&ip, &lp).unwrap();
        assert_eq!(back, d);

        let sub = load_idx_subset(&ip, &lp, 2, 1).unwrap();
        assert_eq!(sub.len(), 6);
        assert!(sub.features().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert!(load_idx_subset(&ip, &lp, 0, 1).unwrap().is_empty());

        // swapped files -> bad magic
        assert!(matches!(load_idx(&lp, &ip), Err(Error::Idx { .. })));

        // truncated payload
        let mut bytes = std::fs::read(&ip).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&ip, &bytes).unwrap();
        assert!(matches!(read_idx_images(&ip), Err(Error::Idx { .. })));

        // count mismatch between the two files
        let short = d.subset(&[0, 1, 2]);
        write_idx(&ip, &dir.path().join("lab3"), &short, 2, 2).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Idx { .. })));
    }
}
