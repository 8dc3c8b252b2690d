//! Sentence-level transformer over criteria plus the regression head.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use super::config::ModelConfig;
use super::head::{head_backward, head_forward, HeadCache};
use super::layout::{BlockLayout, Layout};
use super::ops::{
    apply_mask, gelu, gelu_grad, layer_norm, layer_norm_backward, linear, linear_backward, softmax_rows, Dropout,
    LayerNormCache,
};
use crate::embed::{EmbeddedTrial, Segment};
use crate::error::{ensure_finite, Error, Result};

/// The hierarchical attention regressor: a stateless description of the
/// network for one [`ModelConfig`]; parameters are passed in as a flat slice.
#[derive(Debug, Clone)]
pub struct HierNet {
    config: ModelConfig,
    layout: Layout,
}

struct BlockCache {
    ln1: LayerNormCache,
    a: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    concat: Array2<f64>,
    att_mask: Option<Array2<f64>>,
    ln2: LayerNormCache,
    b: Array2<f64>,
    h: Array2<f64>,
    g: Array2<f64>,
    ffn_mask: Option<Array2<f64>>,
}

/// Which pooled vector each active row feeds.
#[derive(Debug, Clone)]
struct Rows {
    inclusion: Vec<usize>,
    exclusion: Vec<usize>,
}

pub struct EncodeCache {
    rows: Rows,
    blocks: Vec<BlockCache>,
}

pub struct ForwardCache {
    encode: EncodeCache,
    head: HeadCache,
}

/// `[phase(4) | drug(d) | disease(d) | inclusion(d) | exclusion(d)]`.
pub fn concat_features(
    phase: &[f64],
    drug: &[f64],
    disease: &[f64],
    inclusion: &[f64],
    exclusion: &[f64],
) -> Result<Vec<f64>> {
    if phase.len() != 4 {
        return Err(Error::Dimension {
            what: "phase one-hot".into(),
            expected: 4,
            got: phase.len(),
        });
    }
    let d = drug.len();
    for (what, v) in [("disease", disease), ("inclusion", inclusion), ("exclusion", exclusion)] {
        if v.len() != d {
            return Err(Error::Dimension {
                what: what.into(),
                expected: d,
                got: v.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(4 + 4 * d);
    for part in [phase, drug, disease, inclusion, exclusion] {
        out.extend_from_slice(part);
    }
    Ok(out)
}

impl HierNet {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        Ok(HierNet { config, layout })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    fn check(&self, params: &[f64], trial: &EmbeddedTrial) -> Result<()> {
        if params.len() != self.layout.total {
            return Err(Error::Dimension {
                what: "parameter vector".into(),
                expected: self.layout.total,
                got: params.len(),
            });
        }
        trial.check_shape(self.config.d)
    }

    /// The padded block input: the CLS row then all sentence slots, with the
    /// matching mask (CLS always on). Inference only uses the unmasked rows.
    pub fn sequence(&self, params: &[f64], trial: &EmbeddedTrial) -> Result<(Array2<f64>, Vec<bool>)> {
        self.check(params, trial)?;
        let d = self.config.d;
        let slots = trial.mask.len();
        let mut x = Array2::zeros((slots + 1, d));
        x.row_mut(0).assign(&self.layout.cls.vec(params));
        for slot in 0..slots {
            x.row_mut(slot + 1).assign(&ArrayView1::from(trial.sentence(slot)));
        }
        let mask = std::iter::once(true).chain(trial.mask.iter().copied()).collect();
        Ok((x, mask))
    }

    /// CLS row followed by the unmasked sentence rows. Masked rows never enter
    /// the computation, which is the same as giving them −∞ attention logits
    /// as keys and discarding their outputs.
    fn input_rows(&self, params: &[f64], trial: &EmbeddedTrial, allow_empty: bool) -> Result<(Array2<f64>, Rows)> {
        let d = self.config.d;
        let active = trial.active_slots();
        if active.is_empty() && !allow_empty {
            return Err(Error::Invalid(format!(
                "{}: every criteria slot is masked",
                trial.nct_id
            )));
        }
        let mut x = Array2::zeros((active.len() + 1, d));
        x.row_mut(0).assign(&self.layout.cls.vec(params));
        let mut rows = Rows {
            inclusion: Vec::new(),
            exclusion: Vec::new(),
        };
        for (i, &slot) in active.iter().enumerate() {
            x.row_mut(i + 1).assign(&ArrayView1::from(trial.sentence(slot)));
            match trial.segment[slot] {
                Segment::Inclusion => rows.inclusion.push(i + 1),
                Segment::Exclusion => rows.exclusion.push(i + 1),
            }
        }
        Ok((x, rows))
    }

    fn block_forward(
        &self,
        bl: &BlockLayout,
        params: &[f64],
        x: &Array2<f64>,
        mut dropout: Option<&mut Dropout>,
    ) -> (Array2<f64>, BlockCache) {
        let n = x.nrows();
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        let (a, ln1) = layer_norm(&x.view(), &bl.ln1_gain.vec(params), &bl.ln1_bias.vec(params));
        let q = linear(&a.view(), &bl.wq.mat(params), &bl.bq.vec(params));
        let k = linear(&a.view(), &bl.wk.mat(params), &bl.bk.vec(params));
        let v = linear(&a.view(), &bl.wv.mat(params), &bl.bv.vec(params));
        let mut concat = Array2::zeros((n, self.config.d));
        let mut probs = Vec::with_capacity(self.config.heads);
        for h in 0..self.config.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut sc = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut sc);
            concat.slice_mut(cols).assign(&sc.dot(&v.slice(cols)));
            probs.push(sc);
        }
        let mut att = linear(&concat.view(), &bl.wo.mat(params), &bl.bo.vec(params));
        let att_mask = dropout.as_mut().and_then(|d| d.mask(att.dim()));
        apply_mask(&mut att, &att_mask);
        let mid = x + &att;

        let (b, ln2) = layer_norm(&mid.view(), &bl.ln2_gain.vec(params), &bl.ln2_bias.vec(params));
        let h = linear(&b.view(), &bl.ffn_w1.mat(params), &bl.ffn_b1.vec(params));
        let g = h.mapv(gelu);
        let mut f = linear(&g.view(), &bl.ffn_w2.mat(params), &bl.ffn_b2.vec(params));
        let ffn_mask = dropout.as_mut().and_then(|d| d.mask(f.dim()));
        apply_mask(&mut f, &ffn_mask);
        let out = mid + &f;

        let cache = BlockCache {
            ln1,
            a,
            q,
            k,
            v,
            probs,
            concat,
            att_mask,
            ln2,
            b,
            h,
            g,
            ffn_mask,
        };
        (out, cache)
    }

    fn block_backward(
        &self,
        bl: &BlockLayout,
        params: &[f64],
        c: &BlockCache,
        dout: &Array2<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        // FFN sublayer
        let mut df = dout.clone();
        apply_mask(&mut df, &c.ffn_mask);
        let dg = linear_backward(&c.g.view(), &df.view(), bl.ffn_w2, bl.ffn_b2, params, grads);
        let dhid = dg * c.h.mapv(gelu_grad);
        let db = linear_backward(&c.b.view(), &dhid.view(), bl.ffn_w1, bl.ffn_b1, params, grads);
        let dmid = dout + &layer_norm_backward(&c.ln2, &db.view(), bl.ln2_gain, bl.ln2_bias, params, grads);

        // attention sublayer
        let mut datt = dmid.clone();
        apply_mask(&mut datt, &c.att_mask);
        let dconcat = linear_backward(&c.concat.view(), &datt.view(), bl.wo, bl.bo, params, grads);
        let mut dq = Array2::zeros(c.q.raw_dim());
        let mut dk = Array2::zeros(c.k.raw_dim());
        let mut dv = Array2::zeros(c.v.raw_dim());
        for (h, p) in c.probs.iter().enumerate() {
            let cols = s![.., h * dh..(h + 1) * dh];
            let dout_h = dconcat.slice(cols);
            dv.slice_mut(cols).assign(&p.t().dot(&dout_h));
            let dp = dout_h.dot(&c.v.slice(cols).t());
            let row_dot = (&dp * p).sum_axis(Axis(1)).insert_axis(Axis(1));
            let ds = p * &(dp - &row_dot) * scale;
            dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
        }
        let a = c.a.view();
        let mut da = linear_backward(&a, &dq.view(), bl.wq, bl.bq, params, grads);
        da += &linear_backward(&a, &dk.view(), bl.wk, bl.bk, params, grads);
        da += &linear_backward(&a, &dv.view(), bl.wv, bl.bv, params, grads);
        dmid + layer_norm_backward(&c.ln1, &da.view(), bl.ln1_gain, bl.ln1_bias, params, grads)
    }

    fn encode_with_cache(
        &self,
        params: &[f64],
        trial: &EmbeddedTrial,
        mut dropout: Option<&mut Dropout>,
        allow_empty: bool,
    ) -> Result<(Array1<f64>, Array1<f64>, EncodeCache)> {
        self.check(params, trial)?;
        let (mut x, rows) = self.input_rows(params, trial, allow_empty)?;
        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for bl in &self.layout.blocks {
            let (out, cache) = self.block_forward(bl, params, &x, dropout.as_deref_mut());
            blocks.push(cache);
            x = out;
        }
        let pool = |idx: &[usize]| -> Array1<f64> {
            if idx.is_empty() {
                x.row(0).to_owned()
            } else {
                let mut acc = Array1::zeros(x.ncols());
                for &i in idx {
                    acc += &x.row(i);
                }
                acc / idx.len() as f64
            }
        };
        let incl = pool(&rows.inclusion);
        let excl = pool(&rows.exclusion);
        Ok((incl, excl, EncodeCache { rows, blocks }))
    }

    /// Pooled inclusion and exclusion vectors after the transformer blocks.
    /// A segment without sentences pools to the CLS output row.
    pub fn encode_criteria(
        &self,
        params: &[f64],
        trial: &EmbeddedTrial,
        dropout: Option<&mut Dropout>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (incl, excl, _) = self.encode_with_cache(params, trial, dropout, false)?;
        Ok((incl.to_vec(), excl.to_vec()))
    }

    fn forward_with_cache(
        &self,
        params: &[f64],
        trial: &EmbeddedTrial,
        mut dropout: Option<&mut Dropout>,
        allow_empty: bool,
    ) -> Result<(f64, ForwardCache)> {
        let (incl, excl, encode) = self.encode_with_cache(params, trial, dropout.as_deref_mut(), allow_empty)?;
        let features = concat_features(
            &trial.phase_onehot,
            &trial.drug_vec,
            &trial.disease_vec,
            incl.as_slice().unwrap(),
            excl.as_slice().unwrap(),
        )?;
        let (pred, head) = head_forward(&self.layout.head, params, ArrayView1::from(&features), dropout);
        if !pred.is_finite() {
            ensure_finite("encoder output", incl.as_slice().unwrap())?;
            ensure_finite("encoder output", excl.as_slice().unwrap())?;
            return Err(Error::NonFinite("regression head output".into()));
        }
        Ok((pred, ForwardCache { encode, head }))
    }

    /// Predicted duration in years. Pass `Some(dropout)` only when training.
    pub fn forward(&self, params: &[f64], trial: &EmbeddedTrial, dropout: Option<&mut Dropout>) -> Result<f64> {
        self.forward_with_cache(params, trial, dropout, false).map(|(p, _)| p)
    }

    /// Inference that also accepts a trial whose criteria slots are all
    /// masked; both segments then pool to the CLS output row. Used for
    /// attribution baselines.
    pub fn forward_masked(&self, params: &[f64], trial: &EmbeddedTrial) -> Result<f64> {
        self.forward_with_cache(params, trial, None, true).map(|(p, _)| p)
    }

    /// Forward then reverse pass. `upstream` maps the prediction to `dL/dŷ`;
    /// gradients are added into `grads`. Returns the prediction.
    pub fn forward_backward(
        &self,
        params: &[f64],
        trial: &EmbeddedTrial,
        dropout: Option<&mut Dropout>,
        upstream: impl FnOnce(f64) -> f64,
        grads: &mut [f64],
    ) -> Result<f64> {
        let (pred, cache) = self.forward_with_cache(params, trial, dropout, false)?;
        let dpred = upstream(pred);
        let d = self.config.d;
        let dx = head_backward(&self.layout.head, params, &cache.head, dpred, grads);
        let dincl = dx.slice(s![4 + 2 * d..4 + 3 * d]);
        let dexcl = dx.slice(s![4 + 3 * d..4 + 4 * d]);

        let rows = &cache.encode.rows;
        let mut dx = Array2::zeros((rows.inclusion.len() + rows.exclusion.len() + 1, d));
        for (idx, g) in [(&rows.inclusion, dincl), (&rows.exclusion, dexcl)] {
            if idx.is_empty() {
                let mut r = dx.row_mut(0);
                r += &g;
            } else {
                let share = &g / idx.len() as f64;
                for &i in idx {
                    let mut r = dx.row_mut(i);
                    r += &share;
                }
            }
        }
        for (bl, c) in self.layout.blocks.iter().zip(&cache.encode.blocks).rev() {
            dx = self.block_backward(bl, params, c, &dx, grads);
        }
        let mut gcls = self.layout.cls.vec_mut(grads);
        gcls += &dx.row(0);

        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", self.layout.name_of(i))));
        }
        Ok(pred)
    }
}
