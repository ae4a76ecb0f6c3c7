//! Fully-connected tanh network: forward pass, layer-wise backprop, and the
//! plain gradient step.
//!
//! Layer `k` computes `x_k = tanh(W_k x_{k-1} + b_k)`. Weights are row-major with
//! shape `(out_dim, in_dim)`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, gemm, Matrix};
use crate::{Error, Result};

/// Current version of the JSON network document.
pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    layers: Vec<Layer>,
}

/// Stage-by-stage record of one forward pass.
///
/// `post[0]` is the input and `post[K]` the output; `pre[k]` is the affine
/// pre-activation feeding `post[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn input(&self) -> &[f64] {
        &self.post[0]
    }

    pub fn output(&self) -> &[f64] {
        self.post.last().expect("trace has at least one stage")
    }
}

/// Forward pass over a whole batch; row `i` of each stage belongs to sample `i`.
///
/// `post[0]` holds the inputs and `post[K]` the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTrace {
    pub post: Vec<Matrix>,
}

impl BatchTrace {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("trace has at least one stage")
    }
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &FeedForwardNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Iterates over every gradient entry, weights before biases, layer by layer.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.as_slice().iter().chain(&l.bias).copied())
    }

    pub fn scale(&mut self, a: f64) {
        for l in &mut self.layers {
            l.weight.as_mut_slice().iter_mut().for_each(|v| *v *= a);
            l.bias.iter_mut().for_each(|v| *v *= a);
        }
    }
}

impl FeedForwardNet {
    /// Builds a network from explicit layers, checking that consecutive dims chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::Shape(format!(
                    "layer {k}: bias length {} != weight rows {}",
                    l.bias.len(),
                    l.out_dim()
                )));
            }
            if l.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidInput(format!("layer {k}: non-finite bias")));
            }
            if k > 0 && layers[k - 1].out_dim() != l.in_dim() {
                return Err(Error::Shape(format!(
                    "layer {k} expects input dim {} but layer {} outputs {}",
                    l.in_dim(),
                    k - 1,
                    layers[k - 1].out_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Uniform `[-scale, scale)` weights from a seeded ChaCha stream, zero biases.
    pub fn init(layer_dims: &[usize], seed: u64, scale: f64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer_dims needs an input and at least one output dim".into(),
            ));
        }
        if layer_dims.contains(&0) {
            return Err(Error::InvalidConfig("layer dims must be positive".into()));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init scale must be finite and non-negative, got {scale}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let data = (0..fan_in * fan_out)
                    .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                Layer {
                    weight: Matrix::from_row_major(fan_out, fan_in, data).expect("dims are consistent"),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Number of layers `K`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// `[in, out_1, ..., out_K]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.depth());
        let mut post = Vec::with_capacity(self.depth() + 1);
        post.push(x.to_vec());
        for layer in &self.layers {
            let mut z = layer.weight.matvec(post.last().unwrap());
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            post.push(z.iter().map(|v| v.tanh()).collect());
            pre.push(z);
        }
        Ok(ForwardTrace { pre, post })
    }

    /// Output only, without keeping intermediate stages.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weight.matvec(&h);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi = (*zi + bi).tanh();
            }
            h = z;
        }
        Ok(h)
    }

    /// Backprop of `upstream = dJ/dy` through every layer.
    ///
    /// Returns the parameter gradients and `dJ/dx` for the input.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let dx = self.backward_accumulate(trace, upstream, &mut grads)?;
        Ok((grads, dx))
    }

    /// Same as [`backward`](Self::backward) but adds into an existing gradient buffer,
    /// which is how per-sample contributions are summed over a batch.
    pub fn backward_accumulate(
        &self,
        trace: &ForwardTrace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        self.check_trace(trace)?;
        self.check_grads(grads)?;
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "upstream gradient has dim {} but network output is {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let mut delta_out = upstream.to_vec();
        for k in (0..self.depth()).rev() {
            let layer = &self.layers[k];
            let out = &trace.post[k + 1];
            // d/dz tanh(z) = 1 - tanh(z)^2
            let delta: Vec<f64> = delta_out.iter().zip(out).map(|(g, y)| g * (1.0 - y * y)).collect();
            let g = &mut grads.layers[k];
            g.weight.add_outer(1.0, &delta, &trace.post[k]);
            axpy(1.0, &delta, &mut g.bias);
            delta_out = layer.weight.matvec_transposed(&delta);
        }
        Ok(delta_out)
    }

    /// Forward pass over the rows of `x`, one sample per row.
    pub fn forward_batch(&self, x: &Matrix) -> Result<BatchTrace> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has dim {} but network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut post = Vec::with_capacity(self.depth() + 1);
        post.push(x.clone());
        for layer in &self.layers {
            let h = post.last().unwrap();
            let mut z = Matrix::zeros(h.rows(), layer.out_dim());
            gemm(1.0, h, false, &layer.weight, true, 0.0, &mut z);
            let cols = z.cols();
            for row in z.as_mut_slice().chunks_exact_mut(cols.max(1)) {
                for (v, b) in row.iter_mut().zip(&layer.bias) {
                    *v = (*v + b).tanh();
                }
            }
            post.push(z);
        }
        Ok(BatchTrace { post })
    }

    /// Parameter gradients summed over the batch, given `dJ/dy` for every row.
    pub fn backward_batch(&self, trace: &BatchTrace, upstream: &Matrix) -> Result<Gradients> {
        let n = trace.post.first().map_or(0, Matrix::rows);
        let dims = self.dims();
        let ok = trace.post.len() == dims.len()
            && trace
                .post
                .iter()
                .zip(&dims)
                .all(|(m, &d)| m.rows() == n && m.cols() == d);
        if !ok {
            return Err(Error::Shape("batch trace does not match network".into()));
        }
        if upstream.rows() != n || upstream.cols() != self.output_dim() {
            return Err(Error::Shape(format!(
                "upstream gradient is {}x{} but batch output is {n}x{}",
                upstream.rows(),
                upstream.cols(),
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = upstream.clone();
        for k in (0..self.depth()).rev() {
            for (d, y) in delta.as_mut_slice().iter_mut().zip(trace.post[k + 1].as_slice()) {
                *d *= 1.0 - y * y;
            }
            let g = &mut grads.layers[k];
            gemm(1.0, &delta, true, &trace.post[k], false, 0.0, &mut g.weight);
            for r in 0..n {
                axpy(1.0, delta.row(r), &mut g.bias);
            }
            if k > 0 {
                let mut prev = Matrix::zeros(n, self.layers[k].in_dim());
                gemm(1.0, &delta, false, &self.layers[k].weight, false, 0.0, &mut prev);
                delta = prev;
            }
        }
        Ok(grads)
    }

    /// `p <- p - step_size * grad(p)` for every parameter.
    pub fn apply_update(&mut self, grads: &Gradients, step_size: f64) -> Result<()> {
        self.check_grads(grads)?;
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be finite and non-negative, got {step_size}"
            )));
        }
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            axpy(-step_size, g.weight.as_slice(), l.weight.as_mut_slice());
            axpy(-step_size, &g.bias, &mut l.bias);
        }
        Ok(())
    }

    /// All parameters flattened in the same order as [`Gradients::values`].
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }

    /// Mutable access to parameter `index` in [`parameters`](Self::parameters) order.
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weight.as_slice().len();
            if index < nw {
                return &mut l.weight.as_mut_slice()[index];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has dim {} but network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let dims = self.dims();
        let ok = trace.post.len() == dims.len()
            && trace.pre.len() == self.depth()
            && trace.post.iter().zip(&dims).all(|(v, &d)| v.len() == d);
        if !ok {
            return Err(Error::Shape("forward trace does not match network".into()));
        }
        Ok(())
    }

    fn check_grads(&self, grads: &Gradients) -> Result<()> {
        let ok = grads.layers.len() == self.depth()
            && grads
                .layers
                .iter()
                .zip(&self.layers)
                .all(|(g, l)| g.weight.same_shape(&l.weight) && g.bias.len() == l.bias.len());
        if !ok {
            return Err(Error::Shape("gradient shapes do not match network".into()));
        }
        Ok(())
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            version: NETWORK_FORMAT_VERSION,
            dims: self.dims(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    w: l.weight.as_slice().to_vec(),
                    b: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &NetworkDocument) -> Result<Self> {
        if doc.version != NETWORK_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported network format version {}",
                doc.version
            )));
        }
        if doc.dims.len() != doc.layers.len() + 1 {
            return Err(Error::Shape(format!(
                "{} dims for {} layers",
                doc.dims.len(),
                doc.layers.len()
            )));
        }
        let layers = doc
            .layers
            .iter()
            .zip(doc.dims.windows(2))
            .map(|(l, d)| {
                Ok(Layer {
                    weight: Matrix::from_row_major(d[1], d[0], l.w.clone())?,
                    bias: l.b.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form: `{version, dims, layers: [{w, b}]}` with `w` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub version: u32,
    pub dims: Vec<usize>,
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// A feature transform applied before cosine comparisons.
pub trait FeatureMap: Sync {
    fn map(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn map_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.map(x)).collect()
    }
}

impl FeatureMap for FeedForwardNet {
    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.transform(x)
    }
}

/// The raw features, untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl FeatureMap for Identity {
    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

/// `x -> c * x`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled(pub f64);

impl FeatureMap for Scaled {
    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().map(|v| self.0 * v).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64) -> FeedForwardNet {
        FeedForwardNet::from_layers(vec![Layer {
            weight: Matrix::from_row_major(1, 1, vec![w]).unwrap(),
            bias: vec![0.0],
        }])
        .unwrap()
    }

    #[test]
    fn batch_passes_match_per_sample_passes() {
        let net = FeedForwardNet::init(&[5, 4, 3], 11, 0.8).unwrap();
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..5).map(|k| ((i * 5 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let gs: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..3).map(|k| ((i * 3 + k) as f64 * 0.91).cos()).collect())
            .collect();
        let mut want = Gradients::zeros_like(&net);
        let mut outs = Vec::new();
        for (x, g) in xs.iter().zip(&gs) {
            let t = net.forward(x).unwrap();
            net.backward_accumulate(&t, g, &mut want).unwrap();
            outs.push(t.output().to_vec());
        }
        let batch = net.forward_batch(&Matrix::from_rows(&xs).unwrap()).unwrap();
        for (i, y) in outs.iter().enumerate() {
            for (a, b) in batch.output().row(i).iter().zip(y) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let got = net.backward_batch(&batch, &Matrix::from_rows(&gs).unwrap()).unwrap();
        for (a, b) in got.values().zip(want.values()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn init_with_zero_scale_is_all_zero() {
        let net = FeedForwardNet::init(&[3, 3], 7, 0.0).unwrap();
        assert_eq!(net.depth(), 1);
        assert!(net.parameters().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn init_shapes_and_range() {
        let net = FeedForwardNet::init(&[100, 100, 100], 1, 0.1).unwrap();
        assert_eq!(net.dims(), vec![100, 100, 100]);
        for l in net.layers() {
            assert_eq!((l.weight.rows(), l.weight.cols()), (100, 100));
            assert!(l.weight.as_slice().iter().all(|w| w.abs() <= 0.1));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = FeedForwardNet::init(&[5, 4, 3], 42, 0.1).unwrap();
        let b = FeedForwardNet::init(&[5, 4, 3], 42, 0.1).unwrap();
        assert_eq!(a, b);
        let c = FeedForwardNet::init(&[5, 4, 3], 43, 0.1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(
            FeedForwardNet::init(&[], 0, 0.1),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            FeedForwardNet::init(&[3], 0, 0.1),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            FeedForwardNet::init(&[3, 0], 0, 0.1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn forward_zero_input_gives_zero_output() {
        let net = FeedForwardNet::init(&[4, 6, 3], 3, 0.5).unwrap();
        let y = net.forward(&[0.0; 4]).unwrap();
        assert_eq!(y.output(), &[0.0; 3]);
        assert_eq!(y.post.len(), 3);
        assert_eq!(y.input(), &[0.0; 4]);
    }

    #[test]
    fn forward_single_unit() {
        let y = single(1.0).forward(&[1.0]).unwrap();
        assert_eq!(y.output()[0], 1.0f64.tanh());
        assert!((y.output()[0] - 0.7615941559557649).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_dim() {
        let net = FeedForwardNet::init(&[4, 3], 3, 0.5).unwrap();
        assert!(matches!(net.forward(&[1.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(net.transform(&[1.0; 5]), Err(Error::Shape(_))));
    }

    #[test]
    fn transform_matches_trace_output() {
        let net = FeedForwardNet::init(&[5, 7, 2], 9, 0.8).unwrap();
        let x = [0.3, -0.1, 0.5, 0.9, -0.7];
        assert_eq!(net.transform(&x).unwrap(), net.forward(&x).unwrap().output());
    }

    #[test]
    fn backward_zero_upstream_gives_zero_gradients() {
        let net = FeedForwardNet::init(&[4, 5, 3], 11, 0.5).unwrap();
        let trace = net.forward(&[0.1, 0.2, -0.3, 0.4]).unwrap();
        let (g, dx) = net.backward(&trace, &[0.0; 3]).unwrap();
        assert!(g.values().all(|v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_at_origin_uses_unit_slope() {
        // x = 0, b = 0 -> tanh'(0) = 1, so dy/dW = upstream * x^T = 0 and dy/db = upstream.
        let net = single(0.7);
        let trace = net.forward(&[0.0]).unwrap();
        let (g, dx) = net.backward(&trace, &[1.0]).unwrap();
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(g.layers[0].weight.as_slice(), &[0.0]);
        assert_eq!(dx, vec![0.7]);

        // With x = 2, the pre-activation is nonzero but the first-order slope through W
        // still scales the input.
        let trace = FeedForwardNet::init(&[1, 1], 0, 0.0).unwrap().forward(&[2.0]).unwrap();
        let (g, _) = FeedForwardNet::init(&[1, 1], 0, 0.0)
            .unwrap()
            .backward(&trace, &[1.0])
            .unwrap();
        assert_eq!(g.layers[0].weight.as_slice(), &[2.0]);
    }

    #[test]
    fn backward_rejects_mismatched_trace() {
        let a = FeedForwardNet::init(&[4, 3], 1, 0.5).unwrap();
        let b = FeedForwardNet::init(&[4, 5, 3], 1, 0.5).unwrap();
        let trace = a.forward(&[0.0; 4]).unwrap();
        assert!(matches!(b.backward(&trace, &[1.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(a.backward(&trace, &[1.0; 2]), Err(Error::Shape(_))));
    }

    #[test]
    fn update_arithmetic() {
        let mut net = single(1.0);
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weight.set(0, 0, 2.0);
        net.apply_update(&g, 0.5).unwrap();
        assert_eq!(net.layers()[0].weight.as_slice(), &[0.0]);
    }

    #[test]
    fn update_with_zero_step_or_zero_grad_is_identity() {
        let mut net = FeedForwardNet::init(&[3, 4, 2], 5, 0.3).unwrap();
        let before = net.clone();
        let trace = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let (g, _) = net.backward(&trace, &[1.0, -1.0]).unwrap();
        net.apply_update(&g, 0.0).unwrap();
        assert_eq!(net, before);
        net.apply_update(&Gradients::zeros_like(&net), 0.3).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn update_rejects_mismatched_grads() {
        let mut a = FeedForwardNet::init(&[3, 2], 5, 0.3).unwrap();
        let b = FeedForwardNet::init(&[3, 4], 5, 0.3).unwrap();
        assert!(matches!(
            a.apply_update(&Gradients::zeros_like(&b), 0.1),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut net = FeedForwardNet::init(&[6, 5, 4], 17, 0.37).unwrap();
        net.layers_mut()[1].bias[2] = 1.0 / 3.0;
        let back = FeedForwardNet::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        let bits: Vec<u64> = back.parameters().iter().map(|p| p.to_bits()).collect();
        let orig: Vec<u64> = net.parameters().iter().map(|p| p.to_bits()).collect();
        assert_eq!(bits, orig);
    }

    #[test]
    fn json_rejects_wrong_version_and_shapes() {
        let net = FeedForwardNet::init(&[2, 2], 1, 0.1).unwrap();
        let mut doc = net.to_document();
        doc.version = 99;
        assert!(FeedForwardNet::from_document(&doc).is_err());
        let mut doc = net.to_document();
        doc.layers[0].w.pop();
        assert!(FeedForwardNet::from_document(&doc).is_err());
    }

    #[test]
    fn parameter_mut_indexes_like_parameters() {
        let mut net = FeedForwardNet::init(&[2, 3, 2], 4, 0.5).unwrap();
        let params = net.parameters();
        for (i, p) in params.iter().enumerate() {
            assert_eq!(*net.parameter_mut(i), *p);
        }
        assert_eq!(params.len(), net.parameter_count());
    }
}
