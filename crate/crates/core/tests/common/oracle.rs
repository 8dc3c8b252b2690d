//! Straight-line reference forward pass: nested loops over plain vectors,
//! sharing nothing with the library's ndarray implementation beyond the
//! parameter layout names.

use tdur_core::embed::EmbeddedTrial;
use tdur_core::encoder::{Layout, ModelConfig, TensorSlot};

type Mat = Vec<Vec<f64>>;

fn get_mat(p: &[f64], s: &TensorSlot) -> Mat {
    (0..s.rows)
        .map(|r| (0..s.cols).map(|c| p[s.offset + r * s.cols + c]).collect())
        .collect()
}

fn get_vec(p: &[f64], s: &TensorSlot) -> Vec<f64> {
    p[s.offset..s.offset + s.rows * s.cols].to_vec()
}

fn affine(x: &[f64], w: &Mat, b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    for (i, xi) in x.iter().enumerate() {
        for j in 0..out.len() {
            out[j] += xi * w[i][j];
        }
    }
    out
}

fn norm(x: &[f64], g: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let sd = (var + 1e-5).sqrt();
    x.iter()
        .zip(g)
        .zip(b)
        .map(|((v, g), b)| g * (v - mu) / sd + b)
        .collect()
}

fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x.powi(3))).tanh())
}

/// Returns (inclusion vector, exclusion vector, prediction).
pub fn forward(config: &ModelConfig, p: &[f64], t: &EmbeddedTrial) -> (Vec<f64>, Vec<f64>, f64) {
    let layout = Layout::new(config);
    let d = config.d;
    let dh = d / config.heads;

    let mut x: Mat = vec![get_vec(p, &layout.cls)];
    let mut seg = vec![None];
    for slot in 0..64 {
        if t.mask[slot] {
            x.push(t.sentences[slot * d..(slot + 1) * d].to_vec());
            seg.push(Some(slot < 32));
        }
    }
    let n = x.len();

    for bl in &layout.blocks {
        let a: Mat = x
            .iter()
            .map(|r| norm(r, &get_vec(p, &bl.ln1_gain), &get_vec(p, &bl.ln1_bias)))
            .collect();
        let proj = |w: &TensorSlot, b: &TensorSlot| -> Mat {
            a.iter().map(|r| affine(r, &get_mat(p, w), &get_vec(p, b))).collect()
        };
        let (q, k, v) = (proj(&bl.wq, &bl.bq), proj(&bl.wk, &bl.bk), proj(&bl.wv, &bl.bv));
        let mut ctx = vec![vec![0.0; d]; n];
        for h in 0..config.heads {
            for i in 0..n {
                let logits: Vec<f64> = (0..n)
                    .map(|j| (0..dh).map(|c| q[i][h * dh + c] * k[j][h * dh + c]).sum::<f64>() / (dh as f64).sqrt())
                    .collect();
                let m = logits.iter().cloned().fold(f64::MIN, f64::max);
                let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
                let z: f64 = e.iter().sum();
                for j in 0..n {
                    for c in 0..dh {
                        ctx[i][h * dh + c] += e[j] / z * v[j][h * dh + c];
                    }
                }
            }
        }
        for i in 0..n {
            let att = affine(&ctx[i], &get_mat(p, &bl.wo), &get_vec(p, &bl.bo));
            for c in 0..d {
                x[i][c] += att[c];
            }
            let b = norm(&x[i], &get_vec(p, &bl.ln2_gain), &get_vec(p, &bl.ln2_bias));
            let hid: Vec<f64> = affine(&b, &get_mat(p, &bl.ffn_w1), &get_vec(p, &bl.ffn_b1))
                .into_iter()
                .map(gelu)
                .collect();
            let f = affine(&hid, &get_mat(p, &bl.ffn_w2), &get_vec(p, &bl.ffn_b2));
            for c in 0..d {
                x[i][c] += f[c];
            }
        }
    }

    let pool = |want: bool| -> Vec<f64> {
        let rows: Vec<usize> = (0..n).filter(|&i| seg[i] == Some(want)).collect();
        if rows.is_empty() {
            return x[0].clone();
        }
        (0..d)
            .map(|c| rows.iter().map(|&i| x[i][c]).sum::<f64>() / rows.len() as f64)
            .collect()
    };
    let incl = pool(true);
    let excl = pool(false);

    let mut feat = t.phase_onehot.to_vec();
    feat.extend(&t.drug_vec);
    feat.extend(&t.disease_vec);
    feat.extend(&incl);
    feat.extend(&excl);
    let hd = &layout.head;
    let relu = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.max(0.0)).collect() };
    let h1 = relu(affine(&feat, &get_mat(p, &hd.w1), &get_vec(p, &hd.b1)));
    let h2 = relu(affine(&h1, &get_mat(p, &hd.w2), &get_vec(p, &hd.b2)));
    let z = affine(&h2, &get_mat(p, &hd.w3), &get_vec(p, &hd.b3))[0];
    (incl, excl, (1.0 + z.exp()).ln())
}
