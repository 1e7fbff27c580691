//! Fully connected noise predictor with hand-written backprop and Adam.
//!
//! `input = [x_t | time embedding | text embedding]`, two hidden layers with
//! SiLU (`x * sigmoid(x)`), linear output of latent size. All parameters live
//! in one flat vector (`W1 b1 W2 b2 W3 b3`, weights stored `in x out`
//! row-major) so the optimizer is a single elementwise pass.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 256;
pub const DEFAULT_TIME_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub latent_dim: usize,
    pub time_dim: usize,
    pub text_dim: usize,
    pub hidden: usize,
}

impl NetConfig {
    pub fn input_dim(&self) -> usize {
        self.latent_dim + self.time_dim + self.text_dim
    }

    fn layout(&self) -> Layout {
        let (i, h, o) = (self.input_dim(), self.hidden, self.latent_dim);
        let w1 = 0;
        let b1 = w1 + i * h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + h * o;
        Layout {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            total: b3 + o,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserNet {
    config: NetConfig,
    params: Vec<f64>,
}

/// Activations kept from the forward pass for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    input: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    pub output: Vec<f64>,
}

/// Row-major `C = beta C + op(A) op(B)` where `op(A)` is `m x k` and
/// `op(B)` is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides above address exactly the m*k, k*n and m*n
    // elements of the slices, whose lengths are asserted.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn add_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        row.iter_mut().zip(bias).for_each(|(o, b)| *o += b);
    }
}

fn column_sums(m: &[f64], cols: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for row in m.chunks_exact(cols) {
        out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
    }
}

impl DenoiserNet {
    pub fn zeros(config: NetConfig) -> Self {
        DenoiserNet {
            config,
            params: vec![0.0; config.param_count()],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(config: NetConfig, rng: &mut impl Rng) -> Self {
        let mut net = DenoiserNet::zeros(config);
        let l = config.layout();
        let (i, h, o) = (config.input_dim(), config.hidden, config.latent_dim);
        for (start, fan_in, fan_out) in [(l.w1, i, h), (l.w2, h, h), (l.w3, h, o)] {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            for p in &mut net.params[start..start + fan_in * fan_out] {
                *p = dist.sample(rng);
            }
        }
        net
    }

    pub fn from_params(config: NetConfig, params: Vec<f64>) -> Result<Self> {
        if params.len() != config.param_count() {
            return Err(Error::DimensionMismatch {
                expected: config.param_count(),
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::contract("non-finite network parameter"));
        }
        Ok(DenoiserNet { config, params })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Runs a batch of `input_dim`-wide rows and keeps the activations.
    pub fn forward(&self, input: Vec<f64>) -> Result<ForwardCache> {
        let c = &self.config;
        let (i, h, o) = (c.input_dim(), c.hidden, c.latent_dim);
        if !input.len().is_multiple_of(i) {
            return Err(Error::DimensionMismatch {
                expected: i,
                actual: input.len() % i,
            });
        }
        let batch = input.len() / i;
        let l = c.layout();
        let p = &self.params;

        let mut z1 = vec![0.0; batch * h];
        gemm(batch, i, h, &input, false, &p[l.w1..l.b1], false, 0.0, &mut z1);
        add_bias(&mut z1, &p[l.b1..l.w2]);
        let a1: Vec<f64> = z1.iter().map(|&z| silu(z)).collect();

        let mut z2 = vec![0.0; batch * h];
        gemm(batch, h, h, &a1, false, &p[l.w2..l.b2], false, 0.0, &mut z2);
        add_bias(&mut z2, &p[l.b2..l.w3]);
        let a2: Vec<f64> = z2.iter().map(|&z| silu(z)).collect();

        let mut output = vec![0.0; batch * o];
        gemm(batch, h, o, &a2, false, &p[l.w3..l.b3], false, 0.0, &mut output);
        add_bias(&mut output, &p[l.b3..l.total]);

        Ok(ForwardCache {
            batch,
            input,
            z1,
            a1,
            z2,
            a2,
            output,
        })
    }

    /// Predicted noise for each input row.
    pub fn predict(&self, input: Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.output)
    }

    /// Parameter gradient given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Vec<f64> {
        let c = &self.config;
        let (i, h, o) = (c.input_dim(), c.hidden, c.latent_dim);
        let b = cache.batch;
        let l = c.layout();
        let p = &self.params;
        let mut grad = vec![0.0; l.total];

        gemm(h, b, o, &cache.a2, true, d_output, false, 0.0, &mut grad[l.w3..l.b3]);
        column_sums(d_output, o, &mut grad[l.b3..l.total]);

        let mut dz2 = vec![0.0; b * h];
        gemm(b, o, h, d_output, false, &p[l.w3..l.b3], true, 0.0, &mut dz2);
        dz2.iter_mut()
            .zip(&cache.z2)
            .for_each(|(d, &z)| *d *= silu_grad(z));
        gemm(h, b, h, &cache.a1, true, &dz2, false, 0.0, &mut grad[l.w2..l.b2]);
        column_sums(&dz2, h, &mut grad[l.b2..l.w3]);

        let mut dz1 = vec![0.0; b * h];
        gemm(b, h, h, &dz2, false, &p[l.w2..l.b2], true, 0.0, &mut dz1);
        dz1.iter_mut()
            .zip(&cache.z1)
            .for_each(|(d, &z)| *d *= silu_grad(z));
        gemm(i, b, h, &cache.input, true, &dz1, false, 0.0, &mut grad[l.w1..l.b1]);
        column_sums(&dz1, h, &mut grad[l.b1..l.w2]);

        grad
    }
}

/// Sinusoidal embedding of an integer time step.
pub fn time_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut emb = vec![0.0; dim];
    for k in 0..half {
        let freq = (-(10_000f64.ln()) * k as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        emb[k] = arg.sin();
        emb[half + k] = arg.cos();
    }
    emb
}

/// Mean over rows of the per-row mean squared error.
pub fn mse_loss(eps: &[f64], eps_hat: &[f64]) -> Result<f64> {
    if eps.len() != eps_hat.len() || eps.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: eps.len(),
            actual: eps_hat.len(),
        });
    }
    // Equal row lengths make the batch mean of row means the global mean.
    Ok(eps
        .iter()
        .zip(eps_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / eps.len() as f64)
}

/// Loss and `d loss / d eps_hat` for [`mse_loss`].
pub fn mse_loss_grad(eps: &[f64], eps_hat: &[f64]) -> Result<(f64, Vec<f64>)> {
    let loss = mse_loss(eps, eps_hat)?;
    let scale = 2.0 / eps.len() as f64;
    let grad = eps_hat.iter().zip(eps).map(|(h, e)| scale * (h - e)).collect();
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
