//! Feed-forward networks over a flat parameter vector, plus Adam.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

/// ReLU multilayer perceptron with a linear output layer. Layer `l` stores
/// its weights row-major as `(in, out)` followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Layer inputs recorded by [`Mlp::forward_cached`] for backprop.
pub struct Cache {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// He-uniform hidden layers; the output layer starts 10× smaller so
    /// initial logits and values sit near zero.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        let n_layers = sizes.len() - 1;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let mut bound = (6.0 / fan_in as f64).sqrt();
            if l + 1 == n_layers {
                bound *= 0.1;
            }
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == Self::count(&sizes)).then_some(Self { sizes, params })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for w in self.sizes.windows(2) {
            off.push(off.last().unwrap() + w[0] * w[1] + w[1]);
        }
        off
    }

    fn layer(&self, l: usize, off: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let w = ArrayView2::from_shape((i, o), &self.params[off..off + i * o]).unwrap();
        let b = ArrayView1::from(&self.params[off + i * o..off + i * o + o]);
        (w, b)
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_row(&self, x: &[f64]) -> Vec<f64> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row shape");
        self.forward(&x).into_raw_vec_and_offset().0
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> (Array2<f64>, Cache) {
        assert_eq!(x.ncols(), self.sizes[0], "input width");
        let off = self.offsets();
        let n_layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(n_layers);
        let mut a = x.clone();
        for l in 0..n_layers {
            let (w, b) = self.layer(l, off[l]);
            let mut z = a.dot(&w);
            z += &b;
            if l + 1 < n_layers {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(a);
            a = z;
        }
        (a, Cache { inputs })
    }

    /// Accumulates dL/dθ into `grad` given dL/d(output).
    pub fn backward(&self, cache: &Cache, grad_out: &Array2<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let off = self.offsets();
        let mut g = grad_out.clone();
        for l in (0..self.sizes.len() - 1).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let a = &cache.inputs[l];
            let dw = a.t().dot(&g);
            let db = g.sum_axis(Axis(0));
            let base = off[l];
            for (dst, src) in grad[base..base + i * o].iter_mut().zip(dw.iter()) {
                *dst += src;
            }
            for (dst, src) in grad[base + i * o..base + i * o + o].iter_mut().zip(db.iter()) {
                *dst += src;
            }
            if l > 0 {
                let (w, _) = self.layer(l, base);
                let mut prev = g.dot(&w.t());
                // inputs of layer l > 0 are ReLU outputs
                ndarray::Zip::from(&mut prev).and(a).for_each(|p, &x| {
                    if x <= 0.0 {
                        *p = 0.0;
                    }
                });
                g = prev;
            }
        }
    }

    /// Gradient of `loss(output)` w.r.t. the parameters.
    pub fn gradient(&self, x: &Array2<f64>, loss: impl FnOnce(&Array2<f64>) -> (f64, Array2<f64>)) -> (f64, Vec<f64>) {
        let (out, cache) = self.forward_cached(x);
        let (value, g_out) = loss(&out);
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&cache, &g_out, &mut grad);
        (value, grad)
    }
}

/// Polyak averaging `target ← τ·online + (1−τ)·target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) {
    assert_eq!(target.sizes, online.sizes, "target/online shapes differ");
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + (1.0 - tau) * *t;
    }
}

/// Rescales `grad` in place to Euclidean norm ≤ `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for j in 0..params.len() {
            self.m[j] = self.beta1 * self.m[j] + (1.0 - self.beta1) * grad[j];
            self.v[j] = self.beta2 * self.v[j] + (1.0 - self.beta2) * grad[j] * grad[j];
            params[j] -= self.lr * (self.m[j] / c1) / ((self.v[j] / c2).sqrt() + self.eps);
        }
    }
}

/// Stacks equal-length rows into a matrix.
pub fn stack_rows(rows: &[&[f64]], width: usize) -> Array2<f64> {
    let mut data = Vec::with_capacity(rows.len() * width);
    for r in rows {
        assert_eq!(r.len(), width, "row width");
        data.extend_from_slice(r);
    }
    Array2::from_shape_vec((rows.len(), width), data).expect("row-major shape")
}

pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}
