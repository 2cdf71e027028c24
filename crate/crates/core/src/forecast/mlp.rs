//! Minimal fully connected network used by the forecaster: tanh hidden
//! layers, linear output, full-batch gradient descent on mean squared error.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let scale = (1.0 / in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
        }
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// `sizes` lists every layer width, input first, output last.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output widths");
        let layers = sizes
            .windows(2)
            .map(|pair| Layer::new(pair[0], pair[1], rng))
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Forward pass; hidden layers use tanh, the output layer is linear.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut current = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.affine(&current, &mut next);
            if idx != last {
                for v in next.iter_mut() {
                    *v = v.tanh();
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Forward pass keeping each layer's post-activation output.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.affine(activations.last().unwrap(), &mut out);
            if idx != last {
                for v in out.iter_mut() {
                    *v = v.tanh();
                }
            }
            activations.push(out);
        }
        activations
    }

    /// One full-batch gradient-descent update.
    ///
    /// Loss is the mean over samples and output dimensions of the squared
    /// error; the returned value is computed with the pre-update weights.
    pub fn train_epoch(&mut self, inputs: &[Vec<f64>], targets: &[Vec<f64>], lr: f64) -> f64 {
        assert_eq!(inputs.len(), targets.len());
        let n = inputs.len() as f64;
        let out_dim = self.output_dim() as f64;

        let mut grad_w: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.weights.len()])
            .collect();
        let mut grad_b: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.biases.len()])
            .collect();
        let mut loss = 0.0;

        for (input, target) in inputs.iter().zip(targets) {
            let activations = self.forward_trace(input);
            let output = activations.last().unwrap();

            // d(loss)/d(output) for loss = sum((y_hat - y)^2) / (n * out_dim)
            let mut delta: Vec<f64> = output
                .iter()
                .zip(target)
                .map(|(yh, y)| {
                    let err = yh - y;
                    loss += err * err;
                    2.0 * err / (n * out_dim)
                })
                .collect();

            for layer_idx in (0..self.layers.len()).rev() {
                let layer = &self.layers[layer_idx];
                let layer_input = &activations[layer_idx];
                for o in 0..layer.out_dim {
                    grad_b[layer_idx][o] += delta[o];
                    let row = &mut grad_w[layer_idx][o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, x) in row.iter_mut().zip(layer_input) {
                        *g += delta[o] * x;
                    }
                }
                if layer_idx > 0 {
                    // Propagate through the weights, then the tanh of the
                    // previous layer (its activation is already stored).
                    let mut prev = vec![0.0; layer.in_dim];
                    for o in 0..layer.out_dim {
                        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += delta[o] * w;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(layer_input) {
                        *p *= 1.0 - a * a;
                    }
                    delta = prev;
                }
            }
        }

        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grad_w.iter().zip(&grad_b)) {
            for (w, g) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }

        loss / (n * out_dim)
    }

    /// Mean squared error without updating weights.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let mut loss = 0.0;
        for (input, target) in inputs.iter().zip(targets) {
            let output = self.forward(input);
            for (yh, y) in output.iter().zip(target) {
                loss += (yh - y) * (yh - y);
            }
        }
        loss / (inputs.len() as f64 * self.output_dim() as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}
