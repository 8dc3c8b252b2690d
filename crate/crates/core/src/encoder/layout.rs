//! Offsets of each named tensor inside the flat parameter vector.
//!
//! Canonical order: CLS row; per layer Q, K, V, O projections (weight then
//! bias), FFN in/out (weight then bias), first and second layer-norm
//! gain/bias; then the regression head.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};

use super::config::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSlot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSlot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn mat<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &p[self.range()]).unwrap()
    }

    pub fn mat_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut p[self.range()]).unwrap()
    }

    pub fn vec<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&p[self.range()])
    }

    pub fn vec_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut1<'a, f64> {
        ArrayViewMut1::from(&mut p[self.range()])
    }
}

/// Sequential allocator of tensor slots.
#[derive(Debug, Default)]
pub(crate) struct Allocator {
    next: usize,
    pub names: Vec<(String, TensorSlot)>,
}

impl Allocator {
    pub fn take(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> TensorSlot {
        let slot = TensorSlot {
            offset: self.next,
            rows,
            cols,
        };
        self.next += slot.len();
        self.names.push((name.into(), slot));
        slot
    }

    pub fn end(&self) -> usize {
        self.next
    }
}

#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub wq: TensorSlot,
    pub bq: TensorSlot,
    pub wk: TensorSlot,
    pub bk: TensorSlot,
    pub wv: TensorSlot,
    pub bv: TensorSlot,
    pub wo: TensorSlot,
    pub bo: TensorSlot,
    pub ffn_w1: TensorSlot,
    pub ffn_b1: TensorSlot,
    pub ffn_w2: TensorSlot,
    pub ffn_b2: TensorSlot,
    pub ln1_gain: TensorSlot,
    pub ln1_bias: TensorSlot,
    pub ln2_gain: TensorSlot,
    pub ln2_bias: TensorSlot,
}

#[derive(Debug, Clone)]
pub struct HeadLayout {
    pub w1: TensorSlot,
    pub b1: TensorSlot,
    pub w2: TensorSlot,
    pub b2: TensorSlot,
    pub w3: TensorSlot,
    pub b3: TensorSlot,
}

impl HeadLayout {
    pub(crate) fn allocate(a: &mut Allocator, input: usize, h1: usize, h2: usize) -> Self {
        HeadLayout {
            w1: a.take("head.w1", input, h1),
            b1: a.take("head.b1", 1, h1),
            w2: a.take("head.w2", h1, h2),
            b2: a.take("head.b2", 1, h2),
            w3: a.take("head.w3", h2, 1),
            b3: a.take("head.b3", 1, 1),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows
    }

    /// Weight matrices as `(slot, fan_in, fan_out)`.
    pub fn weights(&self) -> [TensorSlot; 3] {
        [self.w1, self.w2, self.w3]
    }
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub cls: TensorSlot,
    pub blocks: Vec<BlockLayout>,
    pub head: HeadLayout,
    pub total: usize,
    names: Vec<(String, TensorSlot)>,
}

impl Layout {
    pub fn new(c: &ModelConfig) -> Self {
        let (d, f) = (c.d, c.ffn_dim);
        let mut a = Allocator::default();
        let cls = a.take("cls", 1, d);
        let blocks = (0..c.layers)
            .map(|l| {
                let mut t = |n: &str, r, k| a.take(format!("layer{l}.{n}"), r, k);
                BlockLayout {
                    wq: t("wq", d, d),
                    bq: t("bq", 1, d),
                    wk: t("wk", d, d),
                    bk: t("bk", 1, d),
                    wv: t("wv", d, d),
                    bv: t("bv", 1, d),
                    wo: t("wo", d, d),
                    bo: t("bo", 1, d),
                    ffn_w1: t("ffn_w1", d, f),
                    ffn_b1: t("ffn_b1", 1, f),
                    ffn_w2: t("ffn_w2", f, d),
                    ffn_b2: t("ffn_b2", 1, d),
                    ln1_gain: t("ln1_gain", 1, d),
                    ln1_bias: t("ln1_bias", 1, d),
                    ln2_gain: t("ln2_gain", 1, d),
                    ln2_bias: t("ln2_bias", 1, d),
                }
            })
            .collect();
        let head = HeadLayout::allocate(&mut a, c.concat_dim(), c.mlp_hidden1, c.mlp_hidden2);
        Layout {
            cls,
            blocks,
            head,
            total: a.end(),
            names: a.names,
        }
    }

    /// Named tensors in canonical order.
    pub fn tensors(&self) -> &[(String, TensorSlot)] {
        &self.names
    }

    /// Name of the tensor containing flat index `i`.
    pub fn name_of(&self, i: usize) -> &str {
        self.names
            .iter()
            .find(|(_, s)| s.range().contains(&i))
            .map_or("?", |(n, _)| n.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_matches_closed_form() {
        for (d, heads, layers) in [(16, 2, 1), (16, 4, 3), (12, 3, 2), (768, 4, 1)] {
            let mut c = ModelConfig::with_dim(d);
            c.heads = heads;
            c.layers = layers;
            let l = Layout::new(&c);
            assert_eq!(l.total, c.param_count());
            let summed: usize = l.tensors().iter().map(|(_, s)| s.len()).sum();
            assert_eq!(summed, l.total);
        }
    }

    #[test]
    fn contiguous_canonical_order() {
        let l = Layout::new(&ModelConfig::with_dim(8));
        let mut next = 0;
        for (_, s) in l.tensors() {
            assert_eq!(s.offset, next);
            next += s.len();
        }
        let names: Vec<&str> = l.tensors().iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(&names[..4], &["cls", "layer0.wq", "layer0.bq", "layer0.wk"]);
        assert_eq!(names.last(), Some(&"head.b3"));
        assert_eq!(l.name_of(0), "cls");
        assert_eq!(l.name_of(l.total - 1), "head.b3");
    }
}
