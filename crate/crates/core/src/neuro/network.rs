use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batchnorm::{BatchNormCache, BatchNormState};
use super::gradcheck::Parameterized;
use super::loss::cross_entropy;
use super::{xavier_init, Activation, NeuroError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// `y = φ(x·W + b)` with `W` stored `n_in × n_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

/// A dense layer, optionally batch-normalised between the affine map and the activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub dense: DenseLayer,
    pub batch_norm: Option<BatchNormState>,
}

impl Layer {
    pub fn n_in(&self) -> usize {
        self.dense.weights.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.dense.weights.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
    pub batch_norm: bool,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation, batch_norm: bool) -> Self {
        Self {
            width,
            activation,
            batch_norm,
        }
    }

    /// `count` tanh layers of `width` nodes followed by batch norm, the hidden-layer recipe used throughout.
    pub fn hidden_stack(count: usize, width: usize) -> Vec<Self> {
        vec![Self::new(width, Activation::Tanh, true); count]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_width: usize,
    layers: Vec<Layer>,
}

/// Activations retained by [`Network::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub mode: Mode,
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Array2<f64>>,
    pub batch_norm: Vec<Option<BatchNormCache>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least the input is retained")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    /// Flat views in the same order as [`Parameterized::param_slices_mut`] on the network.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.push(g.weights.as_slice().expect("standard layout"));
            out.push(g.biases.as_slice().expect("standard layout"));
            if let (Some(gm), Some(bt)) = (&g.gamma, &g.beta) {
                out.push(gm.as_slice().expect("standard layout"));
                out.push(bt.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.slices().into_iter().map(<[f64]>::to_vec).collect()
    }
}

impl Network {
    /// Xavier-initialised weights, zero biases, unit-scale batch norm.
    pub fn new<R: Rng + ?Sized>(input_width: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self, NeuroError> {
        if input_width == 0 || specs.is_empty() || specs.iter().any(|s| s.width == 0) {
            return Err(NeuroError::Shape("network needs a positive input width and at least one non-empty layer".into()));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut n_in = input_width;
        for spec in specs {
            layers.push(Layer {
                dense: DenseLayer {
                    weights: xavier_init(n_in, spec.width, rng),
                    biases: Array1::zeros(spec.width),
                    activation: spec.activation,
                },
                batch_norm: spec.batch_norm.then(|| BatchNormState::new(spec.width)),
            });
            n_in = spec.width;
        }
        Ok(Self { input_width, layers })
    }

    pub fn from_layers(input_width: usize, layers: Vec<Layer>) -> Result<Self, NeuroError> {
        if layers.is_empty() {
            return Err(NeuroError::Shape("network needs at least one layer".into()));
        }
        let mut n_in = input_width;
        for (l, layer) in layers.iter().enumerate() {
            if layer.n_in() != n_in || layer.dense.biases.len() != layer.n_out() {
                return Err(NeuroError::Shape(format!("layer {l} does not chain: expected {n_in} inputs")));
            }
            if let Some(bn) = &layer.batch_norm {
                if bn.features() != layer.n_out()
                    || bn.beta.len() != layer.n_out()
                    || bn.running_mean.len() != layer.n_out()
                    || bn.running_var.len() != layer.n_out()
                {
                    return Err(NeuroError::Shape(format!("layer {l}: batch-norm width mismatch")));
                }
                if !(bn.epsilon > 0.0) || bn.running_var.iter().any(|&v| v < 0.0) {
                    return Err(NeuroError::Shape(format!("layer {l}: invalid batch-norm state")));
                }
            }
            n_in = layer.n_out();
        }
        Ok(Self { input_width, layers })
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").n_out()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn architecture(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec::new(l.n_out(), l.dense.activation, l.batch_norm.is_some()))
            .collect()
    }

    pub fn has_batch_norm(&self) -> bool {
        self.layers.iter().any(|l| l.batch_norm.is_some())
    }

    pub fn forward(&self, batch: ArrayView2<f64>, mode: Mode) -> Result<ForwardPass, NeuroError> {
        if batch.ncols() != self.input_width {
            return Err(NeuroError::Shape(format!(
                "batch has {} columns, network expects {}",
                batch.ncols(),
                self.input_width
            )));
        }
        let train = mode == Mode::Train;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut caches = Vec::with_capacity(self.layers.len());
        activations.push(batch.to_owned());
        for layer in &self.layers {
            let x = activations.last().expect("input retained");
            let mut z = x.dot(&layer.dense.weights);
            z += &layer.dense.biases;
            let (mut a, cache) = match &layer.batch_norm {
                Some(bn) => {
                    let (a, cache) = bn.forward(z.view(), train)?;
                    (a, Some(cache))
                }
                None => (z, None),
            };
            layer.dense.activation.apply(&mut a);
            activations.push(a);
            caches.push(cache);
        }
        Ok(ForwardPass {
            mode,
            activations,
            batch_norm: caches,
        })
    }

    /// Infer-mode forward pass returning only the output.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>, NeuroError> {
        let mut pass = self.forward(batch, Mode::Infer)?;
        Ok(pass.activations.pop().expect("output present"))
    }

    /// Infer-mode output for a single input row without building a [`ForwardPass`].
    pub fn predict_frame(&self, input: &[f64]) -> Result<Vec<f64>, NeuroError> {
        if input.len() != self.input_width {
            return Err(NeuroError::Shape(format!(
                "expected {} inputs, got {}",
                self.input_width,
                input.len()
            )));
        }
        let mut x = input.to_vec();
        let mut y = Vec::new();
        for layer in &self.layers {
            let w = &layer.dense.weights;
            y.clear();
            y.extend(layer.dense.biases.iter());
            match w.as_slice() {
                Some(flat) => {
                    for (xi, row) in x.iter().zip(flat.chunks_exact(w.ncols())) {
                        for (acc, &wij) in y.iter_mut().zip(row) {
                            *acc += xi * wij;
                        }
                    }
                }
                None => {
                    for (xi, row) in x.iter().zip(w.rows()) {
                        for (acc, &wij) in y.iter_mut().zip(row) {
                            *acc += xi * wij;
                        }
                    }
                }
            }
            if let Some(bn) = &layer.batch_norm {
                for (i, v) in y.iter_mut().enumerate() {
                    let inv_std = 1.0 / (bn.running_var[i] + bn.epsilon).sqrt();
                    *v = (*v - bn.running_mean[i]) * inv_std * bn.gamma[i] + bn.beta[i];
                }
            }
            let act = layer.dense.activation;
            y.iter_mut().for_each(|v| *v = act.scalar(*v));
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    /// Reverse-mode gradients given `∂L/∂output`. Returns the parameter gradients and `∂L/∂input`.
    pub fn backward(&self, pass: &ForwardPass, d_output: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>), NeuroError> {
        self.backward_impl(pass, d_output.to_owned(), false)
    }

    /// Binary cross-entropy against `targets` plus its gradients. A sigmoid output
    /// layer uses the fused `(p - t)/B` pre-activation gradient.
    pub fn loss_and_backward(
        &self,
        pass: &ForwardPass,
        targets: ArrayView2<f64>,
    ) -> Result<(f64, Gradients, Array2<f64>), NeuroError> {
        let probs = pass.output();
        let loss = cross_entropy(targets, probs.view())?;
        let last = self.layers.last().expect("non-empty");
        let (grads, d_in) = if last.dense.activation == Activation::Sigmoid {
            let d_pre = (probs - &targets) / targets.nrows() as f64;
            self.backward_impl(pass, d_pre, true)?
        } else {
            let d_out = super::cross_entropy_grad(targets, probs.view())?;
            self.backward_impl(pass, d_out, false)?
        };
        Ok((loss, grads, d_in))
    }

    fn backward_impl(
        &self,
        pass: &ForwardPass,
        mut grad: Array2<f64>,
        last_is_pre_activation: bool,
    ) -> Result<(Gradients, Array2<f64>), NeuroError> {
        if pass.activations.len() != self.layers.len() + 1 || pass.batch_norm.len() != self.layers.len() {
            return Err(NeuroError::MissingForward);
        }
        if grad.dim() != pass.output().dim() {
            return Err(NeuroError::Shape(format!(
                "output gradient {:?} vs output {:?}",
                grad.dim(),
                pass.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let y = &pass.activations[l + 1];
            let x = &pass.activations[l];
            if !(last_is_pre_activation && l + 1 == self.layers.len()) {
                let act = layer.dense.activation;
                ndarray::Zip::from(&mut grad).and(y).for_each(|g, &yv| *g *= act.derivative_from_output(yv));
            }
            let (d_z, gamma, beta) = match (&layer.batch_norm, &pass.batch_norm[l]) {
                (Some(bn), Some(cache)) => {
                    let (dz, dg, db) = bn.backward(cache, grad.view());
                    (dz, Some(dg), Some(db))
                }
                (None, None) => (grad, None, None),
                _ => return Err(NeuroError::MissingForward),
            };
            let d_w = x.t().dot(&d_z);
            let d_b = d_z.sum_axis(Axis(0));
            grad = d_z.dot(&layer.dense.weights.t());
            grads.push(LayerGrads {
                weights: d_w,
                biases: d_b,
                gamma,
                beta,
            });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, grad))
    }

    /// Folds the batch statistics of a train-mode pass into the running averages.
    pub fn update_running_stats(&mut self, pass: &ForwardPass) {
        for (layer, cache) in self.layers.iter_mut().zip(&pass.batch_norm) {
            if let (Some(bn), Some(cache)) = (&mut layer.batch_norm, cache) {
                if cache.train {
                    bn.update_running_stats(&cache.mean, &cache.var);
                }
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.dense.weights.len() + l.dense.biases.len() + l.batch_norm.as_ref().map_or(0, |b| 2 * b.features()))
            .sum()
    }
}

impl Parameterized for Network {
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.dense.weights.as_slice_mut().expect("standard layout"));
            out.push(layer.dense.biases.as_slice_mut().expect("standard layout"));
            if let Some(bn) = &mut layer.batch_norm {
                out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                out.push(bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    fn param_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(format!("layer{l}.weights"));
            out.push(format!("layer{l}.biases"));
            if layer.batch_norm.is_some() {
                out.push(format!("layer{l}.gamma"));
                out.push(format!("layer{l}.beta"));
            }
        }
        out
    }
}
