use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::{Error, Result};

/// Fully connected network: tanh on hidden layers, identity on the output.
///
/// `weights[i]` maps layer `i` to layer `i + 1` and has shape
/// `layer_sizes[i + 1] x layer_sizes[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Post-activation outputs of every layer, `activations[0]` being the input.
#[derive(Clone, Debug, Default)]
pub struct MlpTrace {
    activations: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.activations.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradients with the same layout as [`Mlp`] plus the input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            input: vec![0.0; net.input_size()],
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| w.data_mut().fill(0.0));
        self.biases.iter_mut().for_each(|b| b.fill(0.0));
        self.input.fill(0.0);
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.data_mut().iter_mut().for_each(|x| *x *= s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Parameter gradients in optimizer order (`w0, b0, w1, b1, ...`).
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
            .collect()
    }
}

impl Mlp {
    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Mlp::zeros(layer_sizes);
        for w in &mut net.weights {
            let bound = 1.0 / (w.cols() as f64).sqrt();
            for x in w.data_mut() {
                *x = rng.random_range(-bound..=bound);
            }
        }
        net
    }

    pub fn zeros(layer_sizes: &[usize]) -> Self {
        assert!(layer_sizes.len() >= 2, "an MLP needs at least two layer sizes");
        let weights = layer_sizes.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Mlp {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::dims("Mlp::from_parts layers", weights.len(), biases.len()));
        }
        let mut sizes = vec![weights[0].cols()];
        for w in &weights {
            sizes.push(w.rows());
        }
        let net = Mlp {
            layer_sizes: sizes,
            weights,
            biases,
        };
        net.validate()?;
        Ok(net)
    }

    /// Shape and finiteness check, used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return Err(Error::dims("Mlp layer count", n.saturating_sub(1), self.weights.len()));
        }
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if !w.is_consistent() {
                return Err(Error::dims("Mlp weight buffer", w.rows() * w.cols(), w.data().len()));
            }
            if w.rows() != self.layer_sizes[i + 1] || w.cols() != self.layer_sizes[i] {
                return Err(Error::dims("Mlp weight shape", self.layer_sizes[i + 1], w.rows()));
            }
            if b.len() != self.layer_sizes[i + 1] {
                return Err(Error::dims("Mlp bias length", self.layer_sizes[i + 1], b.len()));
            }
            if !w.is_finite() || b.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    layer: format!("parameters of layer {i}"),
                });
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Number of trainable scalars; depends only on `layer_sizes`.
    pub fn param_count(&self) -> usize {
        Self::param_count_for(&self.layer_sizes)
    }

    pub fn param_count_for(layer_sizes: &[usize]) -> usize {
        layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Parameters in optimizer order (`w0, b0, w1, b1, ...`).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
            .collect()
    }

    pub fn tensor_names(&self) -> Vec<String> {
        (0..self.weights.len())
            .flat_map(|i| [format!("layer{i}.weight"), format!("layer{i}.bias")])
            .collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = MlpTrace::default();
        self.forward_traced(input, &mut trace)?;
        Ok(trace.activations.pop().unwrap_or_default())
    }

    /// Forward pass keeping every layer's activation for a later backward pass.
    /// The trace buffers are reused across calls.
    pub fn forward_traced(&self, input: &[f64], trace: &mut MlpTrace) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::dims("Mlp::forward input", self.input_size(), input.len()));
        }
        let acts = &mut trace.activations;
        acts.resize_with(self.layer_sizes.len(), Vec::new);
        for (a, &n) in acts.iter_mut().zip(&self.layer_sizes) {
            a.resize(n, 0.0);
        }
        acts[0].copy_from_slice(input);
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (head, tail) = acts.split_at_mut(i + 1);
            let out = &mut tail[0];
            w.affine_into(&head[i], b, out);
            if i != last {
                out.iter_mut().for_each(|z| *z = z.tanh());
            }
        }
        Ok(())
    }

    /// Gradients of `upstream . f(input)` with respect to every parameter and the input.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<MlpGrads> {
        let mut trace = MlpTrace::default();
        self.forward_traced(input, &mut trace)?;
        let mut grads = MlpGrads::zeros_like(self);
        self.backward_acc(&trace, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates parameter gradients into `grads` and overwrites `grads.input`.
    pub fn backward_acc(&self, trace: &MlpTrace, upstream: &[f64], grads: &mut MlpGrads) -> Result<()> {
        if upstream.len() != self.output_size() {
            return Err(Error::dims(
                "Mlp::backward upstream",
                self.output_size(),
                upstream.len(),
            ));
        }
        if trace.activations.len() != self.layer_sizes.len() {
            return Err(Error::dims(
                "Mlp::backward trace",
                self.layer_sizes.len(),
                trace.activations.len(),
            ));
        }
        let mut delta = upstream.to_vec();
        for i in (0..self.weights.len()).rev() {
            let x = &trace.activations[i];
            grads.weights[i].add_outer(&delta, x);
            for (g, d) in grads.biases[i].iter_mut().zip(&delta) {
                *g += d;
            }
            let mut back = vec![0.0; self.layer_sizes[i]];
            self.weights[i].transpose_mul_acc(&delta, &mut back);
            if i > 0 {
                // x is tanh output of the previous layer
                for (b, a) in back.iter_mut().zip(x) {
                    *b *= 1.0 - a * a;
                }
            }
            delta = back;
        }
        grads.input = delta;
        Ok(())
    }
}
