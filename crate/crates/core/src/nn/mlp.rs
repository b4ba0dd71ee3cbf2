//! Fixed-depth feed-forward networks over a flat parameter vector.
//!
//! Parameters are stored layer-major: for each layer the row-major weight
//! matrix of shape `(output_dim, input_dim)` followed by the bias vector.
//! This is also the canonical wire order used when policies are sent over
//! the simulated network.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::{Error, Result};

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn fresh_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            activation,
        }
    }

    fn param_count(&self) -> usize {
        self.input_dim * self.output_dim + self.output_dim
    }
}

/// Validated layer sequence of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LayerSpec>", into = "Vec<LayerSpec>")]
pub struct MlpShape {
    layers: Vec<LayerSpec>,
}

impl TryFrom<Vec<LayerSpec>> for MlpShape {
    type Error = Error;

    fn try_from(layers: Vec<LayerSpec>) -> Result<Self> {
        Self::new(layers)
    }
}

impl From<MlpShape> for Vec<LayerSpec> {
    fn from(shape: MlpShape) -> Self {
        shape.layers
    }
}

impl MlpShape {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.input_dim == 0 || layer.output_dim == 0 {
                return Err(Error::Config(format!("layer {k} has a zero dimension")));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim != pair[1].input_dim {
                return Err(Error::Config(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].output_dim,
                    k + 1,
                    pair[1].input_dim
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Hidden layers share one activation; the output layer has its own.
    pub fn from_widths(
        input_dim: usize,
        hidden: &[usize],
        hidden_activation: Activation,
        output_dim: usize,
        output_activation: Activation,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input_dim;
        for &width in hidden {
            layers.push(LayerSpec::new(prev, width, hidden_activation));
            prev = width;
        }
        layers.push(LayerSpec::new(prev, output_dim, output_activation));
        Self::new(layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }
}

/// Network parameters: a shape plus the flat value vector.
///
/// Every mutation assigns a new generation number, which invalidates
/// [`EvalTape`]s recorded against the previous values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpParams {
    shape: MlpShape,
    values: Vec<f64>,
    #[serde(skip, default = "fresh_generation")]
    generation: u64,
}

impl PartialEq for MlpParams {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.values == other.values
    }
}

impl MlpParams {
    pub fn zeros(shape: MlpShape) -> Self {
        let values = vec![0.0; shape.param_count()];
        Self {
            shape,
            values,
            generation: fresh_generation(),
        }
    }

    pub fn from_values(shape: MlpShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.param_count() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: shape.param_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(Self {
            shape,
            values,
            generation: fresh_generation(),
        })
    }

    /// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init_uniform<R: Rng + ?Sized>(shape: MlpShape, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(shape.param_count());
        for layer in shape.layers() {
            let bound = 1.0 / (layer.input_dim as f64).sqrt();
            for _ in 0..layer.param_count() {
                values.push(rng.random_range(-bound..bound));
            }
        }
        Self {
            shape,
            values,
            generation: fresh_generation(),
        }
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self += scale * direction`. Fails without modifying anything if the
    /// result would contain a non-finite value.
    pub fn add_scaled(&mut self, scale: f64, direction: &[f64]) -> Result<()> {
        if direction.len() != self.values.len() {
            return Err(Error::Dimension {
                what: "parameter update",
                expected: self.values.len(),
                got: direction.len(),
            });
        }
        let finite = self
            .values
            .iter()
            .zip(direction)
            .all(|(v, d)| (v + scale * d).is_finite());
        if !finite {
            return Err(Error::NonFinite("parameter update"));
        }
        for (v, d) in self.values.iter_mut().zip(direction) {
            *v += scale * d;
        }
        self.generation = fresh_generation();
        Ok(())
    }

    /// Polyak averaging: `self <- (1 - tau) * self + tau * online`.
    pub fn soft_update_from(&mut self, online: &MlpParams, tau: f64) -> Result<()> {
        if online.shape != self.shape {
            return Err(Error::Config("soft update between different shapes".into()));
        }
        for (t, o) in self.values.iter_mut().zip(&online.values) {
            *t = (1.0 - tau) * *t + tau * o;
        }
        self.generation = fresh_generation();
        Ok(())
    }

    /// Replace the values in place, e.g. with a received (possibly quantized) copy.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: self.values.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        self.values.copy_from_slice(values);
        self.generation = fresh_generation();
        Ok(())
    }

    /// Evaluate the network, returning the output and a tape for [`MlpParams::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, EvalTape)> {
        let mut tape = EvalTape::for_shape(&self.shape);
        self.forward_into(input, &mut tape)?;
        Ok((tape.output().to_vec(), tape))
    }

    /// Evaluate into an existing tape, reusing its buffers.
    pub fn forward_into(&self, input: &[f64], tape: &mut EvalTape) -> Result<()> {
        if input.len() != self.shape.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.shape.input_dim(),
                got: input.len(),
            });
        }
        tape.resize_for(&self.shape);
        tape.input.copy_from_slice(input);

        let mut offset = 0;
        for (k, layer) in self.shape.layers().iter().enumerate() {
            let (n_in, n_out) = (layer.input_dim, layer.output_dim);
            let weights = &self.values[offset..offset + n_in * n_out];
            let biases = &self.values[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += layer.param_count();

            let (before, after) = tape.post.split_at_mut(k);
            let x: &[f64] = if k == 0 { &tape.input } else { &before[k - 1] };
            let pre = &mut tape.pre[k];
            let post = &mut after[0];
            for r in 0..n_out {
                let row = &weights[r * n_in..(r + 1) * n_in];
                let mut acc = biases[r];
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                pre[r] = acc;
                post[r] = layer.activation.apply(acc);
            }
        }
        tape.generation = self.generation;
        Ok(())
    }

    /// Exact reverse-mode gradients of `<out_grad, output>` with respect to
    /// the parameters and the input.
    pub fn backward(&self, tape: &EvalTape, out_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut tape = tape.clone();
        let mut param_grad = vec![0.0; self.values.len()];
        let mut input_grad = vec![0.0; self.shape.input_dim()];
        self.backward_into(
            &mut tape,
            out_grad,
            Some(&mut param_grad),
            Some(&mut input_grad),
        )?;
        Ok((param_grad, input_grad))
    }

    /// Accumulating backward pass.
    ///
    /// Parameter gradients are *added* to `param_acc`; the input gradient
    /// overwrites `input_grad`. Either may be skipped. The tape's scratch
    /// buffers are reused, so it is taken mutably.
    pub fn backward_into(
        &self,
        tape: &mut EvalTape,
        out_grad: &[f64],
        mut param_acc: Option<&mut [f64]>,
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        if tape.generation != self.generation {
            return Err(Error::StaleTape {
                tape: tape.generation,
                params: self.generation,
            });
        }
        if out_grad.len() != self.shape.output_dim() {
            return Err(Error::Dimension {
                what: "output gradient",
                expected: self.shape.output_dim(),
                got: out_grad.len(),
            });
        }
        if let Some(acc) = param_acc.as_deref() {
            if acc.len() != self.values.len() {
                return Err(Error::Dimension {
                    what: "parameter gradient buffer",
                    expected: self.values.len(),
                    got: acc.len(),
                });
            }
        }
        if let Some(g) = input_grad.as_deref() {
            if g.len() != self.shape.input_dim() {
                return Err(Error::Dimension {
                    what: "input gradient buffer",
                    expected: self.shape.input_dim(),
                    got: g.len(),
                });
            }
        }

        let layers = self.shape.layers();
        let mut offset = self.values.len();

        let EvalTape {
            input,
            pre,
            post,
            grad_a,
            grad_b,
            ..
        } = tape;
        grad_a.clear();
        grad_a.extend_from_slice(out_grad);
        let need_input_grad = input_grad.is_some();

        for k in (0..layers.len()).rev() {
            let layer = &layers[k];
            let (n_in, n_out) = (layer.input_dim, layer.output_dim);
            offset -= layer.param_count();
            let w_off = offset;
            let b_off = w_off + n_in * n_out;

            // grad_a holds dL/d(post_k); turn it into dL/d(pre_k) in place
            for r in 0..n_out {
                grad_a[r] *= layer.activation.derivative(pre[k][r], post[k][r]);
            }

            let x: &[f64] = if k == 0 { input } else { &post[k - 1] };
            if let Some(acc) = param_acc.as_deref_mut() {
                for r in 0..n_out {
                    let dz = grad_a[r];
                    let row = &mut acc[w_off + r * n_in..w_off + (r + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += dz * xi;
                    }
                    acc[b_off + r] += dz;
                }
            }

            if k > 0 || need_input_grad {
                let weights = &self.values[w_off..b_off];
                grad_b.clear();
                grad_b.resize(n_in, 0.0);
                for r in 0..n_out {
                    let dz = grad_a[r];
                    let row = &weights[r * n_in..(r + 1) * n_in];
                    for (g, w) in grad_b.iter_mut().zip(row) {
                        *g += w * dz;
                    }
                }
                std::mem::swap(grad_a, grad_b);
            }
        }

        if let Some(g) = input_grad {
            g.copy_from_slice(grad_a);
        }
        Ok(())
    }
}

/// Intermediates cached by one forward pass, plus scratch space for backward.
#[derive(Debug, Clone, Default)]
pub struct EvalTape {
    generation: u64,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

impl EvalTape {
    pub fn for_shape(shape: &MlpShape) -> Self {
        let mut tape = Self::default();
        tape.resize_for(shape);
        tape
    }

    fn resize_for(&mut self, shape: &MlpShape) {
        let layers = shape.layers();
        self.input.resize(shape.input_dim(), 0.0);
        self.pre.resize_with(layers.len(), Vec::new);
        self.post.resize_with(layers.len(), Vec::new);
        for (k, layer) in layers.iter().enumerate() {
            self.pre[k].resize(layer.output_dim, 0.0);
            self.post[k].resize(layer.output_dim, 0.0);
        }
    }

    /// Output of the recorded forward pass.
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}
