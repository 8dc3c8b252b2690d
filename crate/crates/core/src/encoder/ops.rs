//! Dense building blocks with their backward passes.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::layout::TensorSlot;

pub const LN_EPS: f64 = 1e-5;

/// `x W + b` for a row batch.
pub fn linear(x: &ArrayView2<f64>, w: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array2<f64> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// Accumulates `dW += xᵀ dy`, `db += Σ_rows dy` into `grads` and returns `dy Wᵀ`.
pub fn linear_backward(
    x: &ArrayView2<f64>,
    dy: &ArrayView2<f64>,
    w: TensorSlot,
    b: TensorSlot,
    params: &[f64],
    grads: &mut [f64],
) -> Array2<f64> {
    general_mat_mul(1.0, &x.t(), dy, 1.0, &mut w.mat_mut(grads));
    let mut gb = b.vec_mut(grads);
    gb += &dy.sum_axis(Axis(0));
    dy.dot(&w.mat(params).t())
}

pub struct LayerNormCache {
    pub xhat: Array2<f64>,
    pub rstd: Array1<f64>,
}

pub fn layer_norm(
    x: &ArrayView2<f64>,
    gain: &ArrayView1<f64>,
    bias: &ArrayView1<f64>,
) -> (Array2<f64>, LayerNormCache) {
    let d = x.ncols() as f64;
    let mut xhat = x.to_owned();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        row -= mean;
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        *r = 1.0 / (var + LN_EPS).sqrt();
        row *= *r;
    }
    let y = &xhat * gain + bias;
    (y, LayerNormCache { xhat, rstd })
}

pub fn layer_norm_backward(
    cache: &LayerNormCache,
    dy: &ArrayView2<f64>,
    gain: TensorSlot,
    bias: TensorSlot,
    params: &[f64],
    grads: &mut [f64],
) -> Array2<f64> {
    {
        let mut gg = gain.vec_mut(grads);
        gg += &(dy * &cache.xhat).sum_axis(Axis(0));
    }
    {
        let mut gb = bias.vec_mut(grads);
        gb += &dy.sum_axis(Axis(0));
    }
    let g = gain.vec(params);
    let dxhat = dy * &g;
    let d = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.raw_dim());
    for i in 0..dy.nrows() {
        let dh = dxhat.row(i);
        let xh = cache.xhat.row(i);
        let mean_dh = dh.sum() / d;
        let mean_dh_xh = dh.dot(&xh) / d;
        let r = cache.rstd[i];
        for j in 0..dy.ncols() {
            dx[[i, j]] = r * (dh[j] - mean_dh - xh[j] * mean_dh_xh);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// tanh approximation of GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// ln(1 + e^z), stable for large |z|.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else `1/(1-rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(rng: &mut R, shape: (usize, usize), rate: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_fn(shape, |_| if rng.random::<f64>() < rate { 0.0 } else { keep })
}

/// Seeded source of dropout masks for one forward pass.
pub struct Dropout {
    rate: f64,
    rng: rand_chacha::ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Self {
        use rand::SeedableRng;
        Dropout {
            rate,
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `None` when the rate is zero.
    pub fn mask(&mut self, shape: (usize, usize)) -> Option<Array2<f64>> {
        (self.rate > 0.0).then(|| dropout_mask(&mut self.rng, shape, self.rate))
    }
}

pub fn apply_mask(x: &mut Array2<f64>, mask: &Option<Array2<f64>>) {
    if let Some(m) = mask {
        *x *= m;
    }
}

/// Row-wise softmax in place.
pub fn softmax_rows(s: &mut Array2<f64>) {
    for mut row in s.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
}
