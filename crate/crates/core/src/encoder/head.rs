//! Three-layer regression MLP with a softplus output.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::layout::HeadLayout;
use super::ops::{apply_mask, linear, linear_backward, sigmoid, softplus, Dropout};

pub struct HeadCache {
    x: Array2<f64>,
    z1: Array2<f64>,
    a1: Array2<f64>,
    m1: Option<Array2<f64>>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    m2: Option<Array2<f64>>,
    z3: f64,
}

impl HeadCache {
    pub fn logit(&self) -> f64 {
        self.z3
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Returns `(prediction, cache)`; the prediction is `softplus(z3) > 0`.
pub fn head_forward(
    layout: &HeadLayout,
    params: &[f64],
    input: ArrayView1<f64>,
    mut dropout: Option<&mut Dropout>,
) -> (f64, HeadCache) {
    let x = input.insert_axis(Axis(0)).to_owned();
    let z1 = linear(&x.view(), &layout.w1.mat(params), &layout.b1.vec(params));
    let mut a1 = relu(&z1);
    let m1 = dropout.as_mut().and_then(|d| d.mask(a1.dim()));
    apply_mask(&mut a1, &m1);
    let z2 = linear(&a1.view(), &layout.w2.mat(params), &layout.b2.vec(params));
    let mut a2 = relu(&z2);
    let m2 = dropout.as_mut().and_then(|d| d.mask(a2.dim()));
    apply_mask(&mut a2, &m2);
    let z3 = linear(&a2.view(), &layout.w3.mat(params), &layout.b3.vec(params))[[0, 0]];
    let cache = HeadCache {
        x,
        z1,
        a1,
        m1,
        z2,
        a2,
        m2,
        z3,
    };
    (softplus(z3), cache)
}

/// Backpropagates `dL/dŷ` through the head, accumulating into `grads`, and
/// returns `dL/dx`.
pub fn head_backward(
    layout: &HeadLayout,
    params: &[f64],
    cache: &HeadCache,
    dpred: f64,
    grads: &mut [f64],
) -> Array1<f64> {
    let dz3 = Array2::from_elem((1, 1), dpred * sigmoid(cache.z3));
    let mut da2 = linear_backward(&cache.a2.view(), &dz3.view(), layout.w3, layout.b3, params, grads);
    apply_mask(&mut da2, &cache.m2);
    let dz2 = da2 * cache.z2.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let mut da1 = linear_backward(&cache.a1.view(), &dz2.view(), layout.w2, layout.b2, params, grads);
    apply_mask(&mut da1, &cache.m1);
    let dz1 = da1 * cache.z1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let dx = linear_backward(&cache.x.view(), &dz1.view(), layout.w1, layout.b1, params, grads);
    dx.index_axis_move(Axis(0), 0)
}
