use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Batch, Dataset, Objective};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// A parametric classifier evaluated one sample at a time.
pub trait Model: Send + Sync + std::fmt::Debug + Clone {
    fn dim(&self) -> usize;

    /// Cross-entropy of one sample. When `grad` is given, adds
    /// `scale * d loss / d theta` into it. Returns `(loss, predicted class)`.
    fn sample_loss_grad(&self, theta: &[f64], x: &[f64], label: usize, scale: f64, grad: Option<&mut [f64]>) -> (f64, usize);

    fn init_params(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// In-place softmax over logits; returns `log(sum exp(z))`.
fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    z.iter_mut().for_each(|v| *v = (*v - lse).exp());
    lse
}

fn argmax(z: &[f64]) -> usize {
    z.iter().enumerate().fold(0, |best, (i, &v)| if v > z[best] { i } else { best })
}

/// Multinomial logistic regression; parameters are `W` (`C x d_in`,
/// row-major) followed by the `C` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Softmax {
    pub d_in: usize,
    pub classes: usize,
}

impl Model for Softmax {
    fn dim(&self) -> usize {
        self.classes * self.d_in + self.classes
    }

    fn sample_loss_grad(&self, theta: &[f64], x: &[f64], label: usize, scale: f64, grad: Option<&mut [f64]>) -> (f64, usize) {
        let (c, d) = (self.classes, self.d_in);
        let (w, b) = theta.split_at(c * d);
        let mut z: Vec<f64> = (0..c).map(|k| w[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[k]).collect();
        let pred = argmax(&z);
        let lse = {
            let zy = z[label];
            let lse = softmax_in_place(&mut z);
            lse - zy
        };
        if let Some(g) = grad {
            let (gw, gb) = g.split_at_mut(c * d);
            for k in 0..c {
                let delta = scale * (z[k] - f64::from(u8::from(k == label)));
                gw[k * d..(k + 1) * d].iter_mut().zip(x).for_each(|(gi, xi)| *gi += delta * xi);
                gb[k] += delta;
            }
        }
        (lse, pred)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => a.tanh(),
            Activation::Relu => a.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `h`.
    fn derivative(self, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => f64::from(u8::from(h > 0.0)),
        }
    }
}

/// One-hidden-layer perceptron. Parameter layout:
/// `W1 (hidden x d_in) | b1 (hidden) | W2 (C x hidden) | b2 (C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub d_in: usize,
    pub hidden: usize,
    pub classes: usize,
    pub activation: Activation,
    pub init_seed: u64,
}

impl Mlp {
    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.d_in;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.classes * self.hidden;
        (w1, b1, w2)
    }
}

impl Model for Mlp {
    fn dim(&self) -> usize {
        self.hidden * self.d_in + self.hidden + self.classes * self.hidden + self.classes
    }

    fn sample_loss_grad(&self, theta: &[f64], x: &[f64], label: usize, scale: f64, grad: Option<&mut [f64]>) -> (f64, usize) {
        let (d, hd, c) = (self.d_in, self.hidden, self.classes);
        let (o_b1, o_w2, o_b2) = self.offsets();
        let w1 = &theta[..o_b1];
        let b1 = &theta[o_b1..o_w2];
        let w2 = &theta[o_w2..o_b2];
        let b2 = &theta[o_b2..];

        let h: Vec<f64> = (0..hd)
            .map(|j| self.activation.apply(w1[j * d..(j + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b1[j]))
            .collect();
        let mut z: Vec<f64> = (0..c).map(|k| w2[k * hd..(k + 1) * hd].iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + b2[k]).collect();
        let pred = argmax(&z);
        let zy = z[label];
        let loss = softmax_in_place(&mut z) - zy;

        if let Some(g) = grad {
            let (g_w1, rest) = g.split_at_mut(o_b1);
            let (g_b1, rest) = rest.split_at_mut(hd);
            let (g_w2, g_b2) = rest.split_at_mut(c * hd);
            let mut dh = vec![0.0; hd];
            for k in 0..c {
                let dz = scale * (z[k] - f64::from(u8::from(k == label)));
                let row = &w2[k * hd..(k + 1) * hd];
                for j in 0..hd {
                    g_w2[k * hd + j] += dz * h[j];
                    dh[j] += dz * row[j];
                }
                g_b2[k] += dz;
            }
            for j in 0..hd {
                let da = dh[j] * self.activation.derivative(h[j]);
                g_w1[j * d..(j + 1) * d].iter_mut().zip(x).for_each(|(gi, xi)| *gi += da * xi);
                g_b1[j] += da;
            }
        }
        (loss, pred)
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    fn init_params(&self) -> Vec<f64> {
        let mut rng = stream(self.init_seed, Purpose::Init, 0);
        let o_w2 = self.offsets().1;
        let lim1 = 1.0 / (self.d_in as f64).sqrt();
        let lim2 = 1.0 / (self.hidden as f64).sqrt();
        (0..self.dim())
            .map(|k| {
                let lim = if k < o_w2 { lim1 } else { lim2 };
                (rng.random::<f64>() * 2.0 - 1.0) * lim
            })
            .collect()
    }
}

/// Mean per-sample loss of a [`Model`] over a dataset, with optional
/// per-sample weights (normalized to mean one) and an L2 penalty.
#[derive(Debug, Clone)]
pub struct DatasetObjective<M: Model> {
    data: Arc<Dataset>,
    model: M,
    l2: f64,
    weights: Option<Arc<Vec<f64>>>,
}

impl<M: Model> DatasetObjective<M> {
    pub fn new(data: Arc<Dataset>, model: M, l2: f64) -> Self {
        DatasetObjective { data, model, l2, weights: None }
    }

    /// Pool several shards so that every shard carries equal total weight,
    /// i.e. the loss is the unweighted mean of the shard losses.
    pub fn pooled(shards: &[Arc<Dataset>], model: M, l2: f64) -> Result<Self> {
        let refs: Vec<&Dataset> = shards.iter().map(|s| s.as_ref()).collect();
        let data = Dataset::concat(&refs)?;
        let total = data.len() as f64;
        let n = shards.len() as f64;
        let weights = shards.iter().flat_map(|s| std::iter::repeat_n(total / (n * s.len() as f64), s.len())).collect();
        Ok(DatasetObjective { data: Arc::new(data), model, l2, weights: Some(Arc::new(weights)) })
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Same model and penalty on another dataset.
    pub fn with_data(&self, data: Arc<Dataset>) -> Self {
        DatasetObjective { data, model: self.model.clone(), l2: self.l2, weights: None }
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    fn accumulate(&self, theta: &[f64], batch: Batch<'_>, mut grad: Option<&mut [f64]>) -> f64 {
        let run = |i: usize, scale_base: f64, grad: Option<&mut [f64]>| {
            let w = self.weight(i);
            self.model.sample_loss_grad(theta, self.data.row(i), self.data.label(i), scale_base * w, grad).0 * w
        };
        let mut total = 0.0;
        match batch {
            Batch::Full => {
                let inv = 1.0 / self.data.len() as f64;
                for i in 0..self.data.len() {
                    total += run(i, inv, grad.as_deref_mut());
                }
                total *= inv;
            }
            Batch::Indices(idx) if !idx.is_empty() => {
                let inv = 1.0 / idx.len() as f64;
                for &i in idx {
                    total += run(i, inv, grad.as_deref_mut());
                }
                total *= inv;
            }
            Batch::Indices(_) => {}
        }
        if self.l2 > 0.0 {
            total += 0.5 * self.l2 * theta.iter().map(|t| t * t).sum::<f64>();
            if let Some(g) = grad {
                g.iter_mut().zip(theta).for_each(|(gi, ti)| *gi += self.l2 * ti);
            }
        }
        total
    }
}

impl<M: Model> Objective for DatasetObjective<M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn loss(&self, theta: &[f64], batch: Batch<'_>) -> f64 {
        self.accumulate(theta, batch, None)
    }

    fn grad(&self, theta: &[f64], batch: Batch<'_>) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.accumulate(theta, batch, Some(&mut g));
        g
    }

    fn accuracy(&self, theta: &[f64]) -> Option<f64> {
        let correct = (0..self.data.len())
            .filter(|&i| self.model.sample_loss_grad(theta, self.data.row(i), self.data.label(i), 0.0, None).1 == self.data.label(i))
            .count();
        Some(correct as f64 / self.data.len() as f64)
    }

    fn initial_params(&self) -> Vec<f64> {
        self.model.init_params()
    }
}

/// L2-regularized softmax regression on `ds`; `d = d_in * C + C`.
pub fn softmax_oracle(ds: Arc<Dataset>, l2: f64) -> Result<DatasetObjective<Softmax>> {
    if !(l2 >= 0.0) {
        return Err(Error::invalid("l2 must be nonnegative"));
    }
    let model = Softmax { d_in: ds.d_in(), classes: ds.classes() };
    Ok(DatasetObjective::new(ds, model, l2))
}

/// One-hidden-layer network with cross-entropy loss on `ds`.
pub fn mlp_oracle(ds: Arc<Dataset>, hidden: usize, activation: Activation, seed: u64) -> Result<DatasetObjective<Mlp>> {
    if hidden < 1 {
        return Err(Error::invalid("hidden width must be >= 1"));
    }
    let model = Mlp { d_in: ds.d_in(), hidden, classes: ds.classes(), activation, init_seed: seed };
    Ok(DatasetObjective::new(ds, model, 0.0))
}
