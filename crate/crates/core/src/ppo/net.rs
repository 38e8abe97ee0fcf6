//! Dense tanh networks with hand-written backpropagation and Adam.

use rand::Rng;
use rand_distr::StandardNormal;

/// Fully connected network; tanh on hidden layers, linear output.
///
/// Parameters live in one flat vector, layer by layer, each layer as its
/// row-major `out × in` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Layer activations from a forward pass, input first.
#[derive(Debug, Clone)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("at least input and output")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output sizes");
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// Orthogonal weights (gain √2 on hidden layers, `out_gain` on the
    /// output layer) and zero biases.
    pub fn orthogonal<R: Rng>(sizes: &[usize], out_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let mut offset = 0;
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let gain = if l == last {
                out_gain
            } else {
                std::f64::consts::SQRT_2
            };
            let m = orthogonal_matrix(n_out, n_in, rng);
            for (dst, src) in net.params[offset..offset + n_in * n_out].iter_mut().zip(m) {
                *dst = gain * src;
            }
            offset += n_in * n_out + n_out;
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == param_count(sizes)).then(|| Mlp {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Activations {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(x.to_vec());
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let bias = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = layers.last().expect("input pushed");
            let mut out = bias.to_vec();
            for (o, row) in out.iter_mut().zip(weights.chunks_exact(n_in)) {
                *o += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if l != last {
                    *o = o.tanh();
                }
            }
            layers.push(out);
            offset += n_in * n_out + n_out;
        }
        Activations { layers }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).layers.pop().expect("output layer")
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂output`.
    pub fn backward(&self, acts: &Activations, d_out: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size");
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for (row, &d) in weights.chunks_exact(n_in).zip(&delta) {
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            // Hidden activations are tanh outputs: derivative 1 − a².
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
}

/// `rows × cols` matrix (row-major) with orthonormal rows or columns,
/// whichever are fewer, from Gram–Schmidt on a Gaussian sample.
fn orthogonal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (k, n) = if rows >= cols {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    while vecs.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            vecs.push(v);
        }
    }
    let mut m = vec![0.0; rows * cols];
    for (i, v) in vecs.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            if rows >= cols {
                m[j * cols + i] = x;
            } else {
                m[i * cols + j] = x;
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / b1t) / ((*v / b2t).sqrt() + self.eps);
        }
    }
}
