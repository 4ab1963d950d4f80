//! Dense layers, a small MLP and the Adam optimiser.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
    /// Only valid on the last layer of a decoder.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl LayerSpec {
    /// Hidden ReLU stack followed by one output layer.
    pub fn stack(input: usize, hidden: &[usize], output: usize, last: Activation) -> Vec<LayerSpec> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                fan_in: w[0],
                fan_out: w[1],
                activation: if i + 2 == dims.len() {
                    last
                } else {
                    Activation::Relu
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub spec: LayerSpec,
    /// `fan_in x fan_out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    #[serde(skip)]
    pub grad_weight: Array2<f64>,
    #[serde(skip)]
    pub grad_bias: Array1<f64>,
}

impl Dense {
    fn new<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Self {
        // He for rectifier layers, Glorot otherwise
        let var = match spec.activation {
            Activation::Relu => 2.0 / spec.fan_in as f64,
            _ => 2.0 / (spec.fan_in + spec.fan_out) as f64,
        };
        let normal = Normal::new(0.0, var.sqrt()).expect("finite variance");
        let weight = Array2::from_shape_fn((spec.fan_in, spec.fan_out), |_| normal.sample(rng));
        Self {
            spec,
            weight,
            bias: Array1::zeros(spec.fan_out),
            grad_weight: Array2::zeros((spec.fan_in, spec.fan_out)),
            grad_bias: Array1::zeros(spec.fan_out),
        }
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    /// Input to each layer; `inputs[0]` is the network input.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation of the last layer (logits for a softmax head).
    pub last_pre: Array2<f64>,
    /// Network output after the final activation.
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut p = z.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for (i, s) in specs.iter().enumerate() {
            if s.fan_in == 0 || s.fan_out == 0 {
                return Err(Error::InvalidConfig(format!("layer {i} has a zero dimension")));
            }
            if s.activation == Activation::Softmax && i + 1 != specs.len() {
                return Err(Error::InvalidConfig(format!(
                    "softmax is only allowed on the final layer (layer {i})"
                )));
            }
            if i > 0 && specs[i - 1].fan_out != s.fan_in {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} expects {} inputs, previous layer gives {}",
                    s.fan_in,
                    specs[i - 1].fan_out
                )));
            }
        }
        Ok(Self {
            layers: specs.iter().map(|&s| Dense::new(s, rng)).collect(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").spec.fan_out
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn forward(&self, x: &Array2<f64>) -> MlpTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weight) + &layer.bias;
            inputs.push(a);
            if i == last {
                let output = match layer.spec.activation {
                    Activation::Relu => z.mapv(|v| v.max(0.0)),
                    Activation::Identity => z.clone(),
                    Activation::Softmax => softmax_rows(&z),
                };
                return MlpTrace {
                    inputs,
                    last_pre: z,
                    output,
                };
            }
            a = match layer.spec.activation {
                Activation::Relu => z.mapv_into(|v| v.max(0.0)),
                _ => z,
            };
        }
        unreachable!("loop returns on the last layer")
    }

    /// Output only, skipping the trace.
    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.dot(&self.layers[0].weight) + &self.layers[0].bias;
        let n = self.layers.len();
        for i in 0..n {
            let act = self.layers[i].spec.activation;
            a = match act {
                Activation::Relu => a.mapv_into(|v| v.max(0.0)),
                Activation::Identity => a,
                Activation::Softmax => softmax_rows(&a),
            };
            if i + 1 < n {
                a = a.dot(&self.layers[i + 1].weight) + &self.layers[i + 1].bias;
            }
        }
        a
    }

    pub fn zero_grad(&mut self) {
        for l in &mut self.layers {
            if l.grad_weight.dim() != l.weight.dim() {
                l.grad_weight = Array2::zeros(l.weight.dim());
                l.grad_bias = Array1::zeros(l.bias.len());
            } else {
                l.grad_weight.fill(0.0);
                l.grad_bias.fill(0.0);
            }
        }
    }

    /// Accumulates parameter gradients given `d loss / d last_pre` and
    /// returns `d loss / d input`.
    pub fn backward(&mut self, trace: &MlpTrace, grad_last_pre: Array2<f64>) -> Array2<f64> {
        let mut delta = grad_last_pre;
        for i in (0..self.layers.len()).rev() {
            let layer = &mut self.layers[i];
            let input = &trace.inputs[i];
            if layer.grad_weight.dim() != layer.weight.dim() {
                layer.grad_weight = Array2::zeros(layer.weight.dim());
                layer.grad_bias = Array1::zeros(layer.bias.len());
            }
            layer.grad_weight += &input.t().dot(&delta);
            layer.grad_bias += &delta.sum_axis(Axis(0));
            let mut back = delta.dot(&layer.weight.t());
            if i > 0 && self.layers[i - 1].spec.activation == Activation::Relu {
                // input of layer i is relu(.) of layer i-1
                ndarray::Zip::from(&mut back)
                    .and(input)
                    .for_each(|g, &a| {
                        if a <= 0.0 {
                            *g = 0.0
                        }
                    });
            }
            delta = back;
        }
        delta
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn grads_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.grad_weight.iter().chain(&l.grad_bias).all(|v| v.is_finite()))
    }

    /// Flat view used by gradient checks: `(layer, is_bias, flat index)`.
    pub fn param_mut(&mut self, layer: usize, bias: bool, idx: usize) -> &mut f64 {
        let l = &mut self.layers[layer];
        if bias {
            &mut l.bias[idx]
        } else {
            let cols = l.weight.ncols();
            &mut l.weight[(idx / cols, idx % cols)]
        }
    }

    pub fn grad(&self, layer: usize, bias: bool, idx: usize) -> f64 {
        let l = &self.layers[layer];
        if bias {
            l.grad_bias[idx]
        } else {
            let cols = l.grad_weight.ncols();
            l.grad_weight[(idx / cols, idx % cols)]
        }
    }
}

/// Adaptive moment estimation over one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros: Vec<_> = net
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.weight.dim()), Array1::zeros(l.bias.len())))
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, net: &mut Mlp) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let lr_t = self.lr * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        for (l, ((mw, mb), (vw, vb))) in net
            .layers
            .iter_mut()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(&mut l.weight)
                .and(&l.grad_weight)
                .and(mw)
                .and(vw)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr_t * *m / (v.sqrt() + eps);
                });
            ndarray::Zip::from(&mut l.bias)
                .and(&l.grad_bias)
                .and(mb)
                .and(vb)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr_t * *m / (v.sqrt() + eps);
                });
        }
    }
}
