use rand::Rng;

use super::AgentError;
use crate::ternary::{ste_gradient, LatentLayer};
use crate::Matrix;

/// Width of the hidden layers.
pub const HIDDEN_WIDTH: usize = 128;

/// Full-precision affine layer `y = W x + b`, with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LinearGrad {
    pub fn zeros_like(l: &Linear) -> Self {
        Self {
            weight: Matrix::zeros(l.weight.rows, l.weight.cols),
            bias: vec![0.0; l.bias.len()],
        }
    }
}

fn uniform_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.gen_range(-bound..bound))
            .collect(),
    )
}

impl Linear {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Self {
        assert_eq!(weight.rows, bias.len());
        Self { weight, bias }
    }

    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            weight: uniform_matrix(outputs, inputs, bound, rng),
            bias: vec![0.0; outputs],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim())
            .map(|r| self.forward_row(x, r))
            .collect()
    }

    #[inline]
    pub fn forward_row(&self, x: &[f64], r: usize) -> f64 {
        self.weight
            .row(r)
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias[r]
    }

    /// Accumulates parameter gradients into `grad` and returns `∂L/∂x`.
    /// Zero entries of `dout` are skipped.
    pub fn backward(&self, x: &[f64], dout: &[f64], grad: &mut LinearGrad) -> Vec<f64> {
        let mut dx = vec![0.0; self.in_dim()];
        for (r, &g) in dout.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[r] += g;
            grad.weight
                .row_mut(r)
                .iter_mut()
                .zip(x)
                .for_each(|(w, v)| *w += g * v);
            dx.iter_mut()
                .zip(self.weight.row(r))
                .for_each(|(d, w)| *d += g * w);
        }
        dx
    }
}

fn relu(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Q-network: full-precision input layer, ternary hidden layers, full-precision head.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub input: Linear,
    pub hidden: Vec<LatentLayer>,
    pub head: Linear,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub x: Vec<f64>,
    /// Pre-activations of the input layer and each hidden layer.
    pub pre: Vec<Vec<f64>>,
    /// Dequantized int8 activations fed to each hidden layer.
    pub seen: Vec<Vec<f64>>,
    /// Final hidden activation, input to the head.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetworkGrad {
    pub input: LinearGrad,
    pub hidden_weight: Vec<Matrix>,
    pub hidden_bias: Vec<Vec<f64>>,
    pub head: LinearGrad,
}

impl QNetworkGrad {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self {
            input: LinearGrad::zeros_like(&net.input),
            hidden_weight: net
                .hidden
                .iter()
                .map(|h| Matrix::zeros(h.out_dim(), h.in_dim()))
                .collect(),
            hidden_bias: net.hidden.iter().map(|h| vec![0.0; h.out_dim()]).collect(),
            head: LinearGrad::zeros_like(&net.head),
        }
    }

    /// Gradient slices in the same order as [`QNetwork::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.input.weight.data, &self.input.bias];
        for (w, b) in self.hidden_weight.iter().zip(&self.hidden_bias) {
            out.push(&w.data);
            out.push(b);
        }
        out.push(&self.head.weight.data);
        out.push(&self.head.bias);
        out
    }
}

impl QNetwork {
    /// He-uniform initialization for the ReLU layers, a smaller uniform range
    /// for the head, zero biases.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        actions: usize,
        hidden_layers: usize,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let input = Linear::random(
            state_dim,
            HIDDEN_WIDTH,
            (6.0 / state_dim as f64).sqrt(),
            rng,
        );
        let bound = (6.0 / HIDDEN_WIDTH as f64).sqrt();
        let hidden = (0..hidden_layers)
            .map(|_| {
                LatentLayer::new(
                    uniform_matrix(HIDDEN_WIDTH, HIDDEN_WIDTH, bound, rng),
                    Some(vec![0.0; HIDDEN_WIDTH]),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let head = Linear::random(
            HIDDEN_WIDTH,
            actions,
            1.0 / (HIDDEN_WIDTH as f64).sqrt(),
            rng,
        );
        Ok(Self {
            input,
            hidden,
            head,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.input.in_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.head.out_dim()
    }

    /// Forward pass up to the head input.
    pub fn features(&self, x: &[f64]) -> Result<ForwardCache, AgentError> {
        if x.len() != self.state_dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.state_dim(),
                actual: x.len(),
            });
        }
        let z0 = self.input.forward(x);
        let mut h = z0.clone();
        relu(&mut h);
        let mut pre = vec![z0];
        let mut seen = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let (z, xq) = layer.forward(&h)?;
            seen.push(xq);
            h = z.clone();
            relu(&mut h);
            pre.push(z);
        }
        Ok(ForwardCache {
            x: x.to_vec(),
            pre,
            seen,
            features: h,
        })
    }

    pub fn q_values(&self, x: &[f64]) -> Result<Vec<f64>, AgentError> {
        Ok(self.head.forward(&self.features(x)?.features))
    }

    pub fn q_value(&self, cache: &ForwardCache, action: usize) -> f64 {
        self.head.forward_row(&cache.features, action)
    }

    /// Backpropagates head-output gradients given as sparse `(action, ∂L/∂q)`
    /// pairs. Ternary layers use the straight-through estimator for both the
    /// weight quantizer and the int8 activation quantizer.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dq: &[(usize, f64)],
        dequantized: &[Matrix],
        grad: &mut QNetworkGrad,
    ) {
        let mut dh = vec![0.0; HIDDEN_WIDTH.min(self.head.in_dim())];
        for &(a, g) in dq {
            if g == 0.0 {
                continue;
            }
            grad.head.bias[a] += g;
            grad.head
                .weight
                .row_mut(a)
                .iter_mut()
                .zip(&cache.features)
                .for_each(|(w, v)| *w += g * v);
            dh.iter_mut()
                .zip(self.head.weight.row(a))
                .for_each(|(d, w)| *d += g * w);
        }
        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let z = &cache.pre[l + 1];
            let xq = &cache.seen[l];
            let mut dx = vec![0.0; layer.in_dim()];
            for r in 0..layer.out_dim() {
                let g = if z[r] > 0.0 { dh[r] } else { 0.0 };
                if g == 0.0 {
                    continue;
                }
                grad.hidden_bias[l][r] += g;
                grad.hidden_weight[l]
                    .row_mut(r)
                    .iter_mut()
                    .zip(xq)
                    .for_each(|(w, v)| *w += g * v);
                dx.iter_mut()
                    .zip(dequantized[l].row(r))
                    .for_each(|(d, w)| *d += g * w);
            }
            dh = dx;
        }
        let dz0: Vec<f64> = dh
            .iter()
            .zip(&cache.pre[0])
            .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
            .collect();
        self.input.backward(&cache.x, &dz0, &mut grad.input);
    }

    pub fn dequantized_hidden(&self) -> Vec<Matrix> {
        self.hidden
            .iter()
            .map(|h| h.ternary().dequantize())
            .collect()
    }

    /// Routes accumulated latent-weight gradients through the STE.
    pub fn finish_grad(&self, grad: &mut QNetworkGrad) -> Result<(), AgentError> {
        for (layer, g) in self.hidden.iter().zip(grad.hidden_weight.iter_mut()) {
            *g = ste_gradient(g, layer)?;
        }
        Ok(())
    }

    /// Parameter slices in a fixed order: input W, b, each hidden W, b, head W, b.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let QNetwork {
            input,
            hidden,
            head,
        } = self;
        let mut out: Vec<&mut [f64]> = vec![&mut input.weight.data, &mut input.bias];
        for layer in hidden.iter_mut() {
            let (w, b) = layer_parts(layer);
            out.push(w);
            out.push(b);
        }
        out.push(&mut head.weight.data);
        out.push(&mut head.bias);
        out
    }

    /// Re-quantizes every hidden layer from its latent weights.
    pub fn refresh(&mut self) -> Result<(), AgentError> {
        for layer in &mut self.hidden {
            layer.refresh()?;
        }
        Ok(())
    }
}

fn layer_parts(layer: &mut LatentLayer) -> (&mut [f64], &mut [f64]) {
    let (w, b) = layer.params_mut();
    (&mut w.data, b.expect("hidden layers carry a bias"))
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), grads.len());
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
    }
}
