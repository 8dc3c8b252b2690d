mod common;

use common::{oracle, random_trial};
use tdur_core::encoder::{concat_features, init_params, HierNet, Layout, ModelConfig};
use tdur_core::train::{finite_difference_check, mse_loss};

fn small_config(seed: u64) -> ModelConfig {
    let mut c = ModelConfig::with_dim(16);
    c.heads = 2;
    c.dropout = 0.0;
    c.seed = seed;
    c
}

/// Randomises every parameter, including gains and biases, so no term of the
/// forward pass is trivially zero.
fn perturbed(config: &ModelConfig, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut p = init_params(config).unwrap().values;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for v in &mut p {
        *v += rng.random_range(-0.2..0.2);
    }
    p
}

#[test]
fn matches_straight_line_oracle() {
    for seed in 0..6 {
        let config = small_config(seed);
        let net = HierNet::new(config.clone()).unwrap();
        let params = perturbed(&config, 100 + seed);
        for (incl, excl) in [(1, 1), (3, 2), (2, 0), (0, 3)] {
            let t = random_trial(16, incl, excl, seed * 10 + incl as u64);
            let (oi, oe, oy) = oracle::forward(&config, &params, &t);
            let (ii, ee) = net.encode_criteria(&params, &t, None).unwrap();
            let y = net.forward(&params, &t, None).unwrap();
            for (a, b) in ii.iter().zip(&oi).chain(ee.iter().zip(&oe)) {
                assert!((a - b).abs() < 1e-9, "pooled {a} vs {b}");
            }
            assert!((y - oy).abs() < 1e-9, "pred {y} vs {oy}");
        }
    }
}

#[test]
fn oracle_agrees_on_two_layers_three_heads() {
    let mut config = ModelConfig::with_dim(12);
    config.heads = 3;
    config.layers = 2;
    config.ffn_dim = 7;
    config.mlp_hidden1 = 9;
    config.mlp_hidden2 = 5;
    let net = HierNet::new(config.clone()).unwrap();
    let params = perturbed(&config, 5);
    let t = random_trial(12, 4, 3, 77);
    let (_, _, oy) = oracle::forward(&config, &params, &t);
    assert!((net.forward(&params, &t, None).unwrap() - oy).abs() < 1e-9);
}

#[test]
fn zero_output_projections_give_masked_means() {
    let config = small_config(1);
    let net = HierNet::new(config.clone()).unwrap();
    let layout = Layout::new(&config);
    let mut params = perturbed(&config, 2);
    for bl in &layout.blocks {
        for slot in [bl.wo, bl.bo, bl.ffn_w2, bl.ffn_b2] {
            params[slot.range()].fill(0.0);
        }
    }
    let t = random_trial(16, 3, 2, 9);
    let (incl, excl) = net.encode_criteria(&params, &t, None).unwrap();
    for c in 0..16 {
        let mi = (0..3).map(|s| t.sentence(s)[c]).sum::<f64>() / 3.0;
        let me = (32..34).map(|s| t.sentence(s)[c]).sum::<f64>() / 2.0;
        assert!((incl[c] - mi).abs() < 1e-12);
        assert!((excl[c] - me).abs() < 1e-12);
    }
}

#[test]
fn empty_segment_pools_to_cls() {
    let config = small_config(1);
    let net = HierNet::new(config.clone()).unwrap();
    let layout = Layout::new(&config);
    let mut params = perturbed(&config, 4);
    for bl in &layout.blocks {
        for slot in [bl.wo, bl.bo, bl.ffn_w2, bl.ffn_b2] {
            params[slot.range()].fill(0.0);
        }
    }
    let t = random_trial(16, 2, 0, 3);
    let (_, excl) = net.encode_criteria(&params, &t, None).unwrap();
    assert_eq!(excl, params[layout.cls.range()].to_vec());
}

#[test]
fn all_masked_is_an_error() {
    let config = small_config(0);
    let net = HierNet::new(config.clone()).unwrap();
    let params = init_params(&config).unwrap().values;
    let t = random_trial(16, 0, 0, 1);
    assert!(net.forward(&params, &t, None).is_err());
}

#[test]
fn padding_rows_are_ignored() {
    let config = small_config(3);
    let net = HierNet::new(config.clone()).unwrap();
    let params = perturbed(&config, 8);
    let t = random_trial(16, 2, 2, 4);
    let base = net.forward(&params, &t, None).unwrap();
    let (bi, be) = net.encode_criteria(&params, &t, None).unwrap();
    let mut noisy = t.clone();
    for slot in (5..32).chain(40..64) {
        noisy.sentence_mut(slot).iter_mut().for_each(|v| *v = 123.0);
    }
    let (ni, ne) = net.encode_criteria(&params, &noisy, None).unwrap();
    assert!((net.forward(&params, &noisy, None).unwrap() - base).abs() < 1e-12);
    for (a, b) in bi.iter().zip(&ni).chain(be.iter().zip(&ne)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_head_gives_ln2() {
    let config = small_config(0);
    let net = HierNet::new(config.clone()).unwrap();
    let layout = Layout::new(&config);
    let mut params = perturbed(&config, 1);
    for slot in layout
        .head
        .weights()
        .into_iter()
        .chain([layout.head.b1, layout.head.b2, layout.head.b3])
    {
        params[slot.range()].fill(0.0);
    }
    let y = net.forward(&params, &random_trial(16, 1, 1, 0), None).unwrap();
    assert!((y - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(format!("{y:.4}"), "0.6931");
}

#[test]
fn concat_layout() {
    let d = 16;
    let v = |x: f64| vec![x; d];
    let out = concat_features(&[1.0, 0.0, 0.0, 0.0], &v(2.0), &v(3.0), &v(4.0), &v(5.0)).unwrap();
    assert_eq!(out.len(), 68);
    assert_eq!(out[4], 2.0);
    assert_eq!(out[4 + d], 3.0);
    assert_eq!(out[4 + 2 * d], 4.0);
    assert_eq!(out[4 + 4 * d - 1], 5.0);
    let z = vec![0.0; 768];
    let big = concat_features(&[0.0; 4], &z, &z, &z, &z).unwrap();
    assert_eq!(big.len(), 3076);
    assert!(big.iter().all(|x| *x == 0.0));
    assert!(concat_features(&[0.0; 3], &z, &z, &z, &z).is_err());
    assert!(concat_features(&[0.0; 4], &z, &z, &z, &v(0.0)).is_err());
}

#[test]
fn gradients_match_finite_differences() {
    let config = small_config(11);
    let net = HierNet::new(config.clone()).unwrap();
    let params = perturbed(&config, 12);
    let batch = vec![random_trial(16, 3, 1, 5), random_trial(16, 2, 2, 6)];
    let report = finite_difference_check(&net, &params, &batch, 1e-4).unwrap();
    assert!(report.max_rel_error <= 1e-4, "{report:?}");
}

#[test]
fn duplicated_batch_same_gradient() {
    use tdur_core::train::batch_gradient;
    let config = small_config(2);
    let net = HierNet::new(config.clone()).unwrap();
    let params = perturbed(&config, 3);
    let batch = vec![random_trial(16, 2, 1, 1), random_trial(16, 1, 3, 2)];
    let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
    let (la, ga) = batch_gradient(&net, &params, &batch, None).unwrap();
    let (lb, gb) = batch_gradient(&net, &params, &doubled, None).unwrap();
    assert!((la - lb).abs() < 1e-12);
    for (a, b) in ga.iter().zip(&gb) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn exact_fit_has_zero_loss_gradient() {
    let config = small_config(2);
    let net = HierNet::new(config.clone()).unwrap();
    let params = perturbed(&config, 3);
    let mut batch = vec![random_trial(16, 2, 1, 1), random_trial(16, 1, 3, 2)];
    for t in &mut batch {
        t.label = Some(net.forward(&params, t, None).unwrap());
    }
    let preds: Vec<f64> = batch.iter().map(|t| net.forward(&params, t, None).unwrap()).collect();
    let targets: Vec<f64> = batch.iter().map(|t| t.label.unwrap()).collect();
    assert_eq!(mse_loss(&preds, &targets).unwrap(), 0.0);
    let (_, g) = tdur_core::train::batch_gradient(&net, &params, &batch, None).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
}
