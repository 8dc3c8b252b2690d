mod common;

use common::record;
use regex::Regex;
use tdur_core::embed::{build_features, EmbeddingProvider, SENTENCE_SLOTS};
use tdur_core::encoder::{init_params, HierNet, ModelConfig};
use tdur_core::explain::*;

fn model() -> (HierNet, Vec<f64>, EmbeddingProvider) {
    let mut c = ModelConfig::with_dim(16);
    c.heads = 2;
    c.seed = 11;
    let params = init_params(&c).unwrap().values;
    (HierNet::new(c).unwrap(), params, EmbeddingProvider::hashed(16, 0))
}

fn five_sentences() -> tdur_core::ingest::TrialRecord {
    record(
        "NCT00000005",
        2,
        &[
            "Age 18 years or older",
            "Histologically confirmed ovarian cancer",
            "ECOG 0 or 1",
        ],
        &["Pregnant or breastfeeding", "Prior organ transplant"],
        2.5,
    )
}

#[test]
fn keep_all_and_keep_none() {
    let (net, params, provider) = model();
    let r = five_sentences();
    let trial = build_features(&provider, &r).unwrap();
    let full = net.forward(&params, &trial, None).unwrap();
    let all = mask_subset(&trial, &[0, 1, 2, 3, 4], &Target::Sentences).unwrap();
    assert_eq!(all, trial);
    let none = mask_subset(&trial, &[], &Target::Sentences).unwrap();
    assert!(none.mask.iter().all(|m| !m));
    assert!(net.forward(&params, &none, None).is_err());

    let attr = explain_sentences(&net, &params, &provider, &r, Mode::Exact).unwrap();
    assert_eq!(attr.full_value, full);
    assert_eq!(attr.base_value, net.forward_masked(&params, &none).unwrap());
    assert!(mask_subset(&trial, &[5], &Target::Sentences).is_err());
}

#[test]
fn masking_padding_is_a_no_op() {
    let (net, params, provider) = model();
    let trial = build_features(&provider, &five_sentences()).unwrap();
    let mut padded = trial.clone();
    padded.mask_slot(SENTENCE_SLOTS - 1);
    padded.mask_slot(10);
    assert_eq!(
        net.forward(&params, &padded, None).unwrap(),
        net.forward(&params, &trial, None).unwrap()
    );
}

#[test]
fn efficiency_on_five_sentences() {
    let (net, params, provider) = model();
    let attr = explain_sentences(&net, &params, &provider, &five_sentences(), Mode::Exact).unwrap();
    assert_eq!(attr.items.len(), 5);
    assert!(attr.efficiency_gap().abs() <= 1e-9, "{}", attr.efficiency_gap());
}

#[test]
fn identical_sentences_share_credit() {
    let (net, params, provider) = model();
    let r = record(
        "NCT00000006",
        3,
        &["Adequate renal function", "Adequate renal function", "Age over 65"],
        &["Known HIV"],
        3.0,
    );
    let attr = explain_sentences(&net, &params, &provider, &r, Mode::Exact).unwrap();
    assert!((attr.items[0].value - attr.items[1].value).abs() <= 1e-9);
}

/// Wraps the masking game so that player `null` can never change the input.
struct WithNull<'a> {
    inner: MaskGame<'a>,
    null: usize,
}

impl CoalitionGame for WithNull<'_> {
    fn players(&self) -> usize {
        self.inner.players()
    }

    fn value(&self, keep: &[bool]) -> tdur_core::Result<f64> {
        let mut k = keep.to_vec();
        k[self.null] = true;
        self.inner.value(&k)
    }
}

#[test]
fn null_player_gets_zero() {
    let (net, params, provider) = model();
    let trial = build_features(&provider, &five_sentences()).unwrap();
    let game = WithNull {
        inner: MaskGame {
            net: &net,
            params: &params,
            trial: &trial,
            target: Target::Sentences,
            players: 5,
        },
        null: 2,
    };
    let phi = shapley_exact(&game).unwrap();
    assert_eq!(phi[2], 0.0);
}

#[test]
fn word_level_efficiency() {
    let (net, params, provider) = model();
    let r = five_sentences();
    let attr = explain_words(&net, &params, &provider, &r, 1, Mode::Exact).unwrap();
    assert_eq!(attr.items.len(), 4);
    assert_eq!(attr.items[1].text, "confirmed");
    assert!(attr.efficiency_gap().abs() <= 1e-9);
    let sentences = explain_sentences(&net, &params, &provider, &r, Mode::Exact).unwrap();
    assert_eq!(attr.full_value, sentences.full_value);
}

#[test]
fn sampled_tracks_exact_within_three_standard_errors() {
    let (net, params, provider) = model();
    let r = record(
        "NCT00000008",
        1,
        &[
            "Age 18 years or older",
            "Histologically confirmed disease",
            "ECOG 0 or 1",
            "Adequate marrow",
        ],
        &["Pregnant", "Prior transplant", "Known HIV", "Uncontrolled hypertension"],
        1.0,
    );
    let exact = explain_sentences(&net, &params, &provider, &r, Mode::Exact).unwrap();
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..20 {
        let s = explain_sentences(&net, &params, &provider, &r, Mode::Sampled { n_perms: 5000, seed }).unwrap();
        for (a, b) in s.items.iter().zip(&exact.items) {
            total += 1;
            if (a.value - b.value).abs() <= 3.0 * a.std_error.unwrap() {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}

#[test]
fn attribution_is_deterministic_and_round_trips() {
    let (net, params, provider) = model();
    let r = five_sentences();
    let mode = Mode::Sampled { n_perms: 64, seed: 3 };
    let a = explain_sentences(&net, &params, &provider, &r, mode).unwrap();
    let b = explain_sentences(&net, &params, &provider, &r, mode).unwrap();
    assert_eq!(a, b);
    let json = serde_json::to_string(&a).unwrap();
    assert!(json.contains("\"format\":\"tdattr-v1\""));
    let back: Attribution = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

fn parse_items(html: &str) -> Vec<(String, f64)> {
    let re =
        Regex::new(r#"class="item (sentence|word) (pos|neg)" data-value="([^"]+)" data-intensity="([^"]+)""#).unwrap();
    re.captures_iter(html)
        .map(|c| (c[1].to_string(), c[4].parse().unwrap()))
        .collect()
}

#[test]
fn zero_attribution_renders_flat() {
    let (net, params, provider) = model();
    let mut attr = explain_sentences(&net, &params, &provider, &five_sentences(), Mode::Exact).unwrap();
    attr.items.iter_mut().for_each(|i| i.value = 0.0);
    let html = render_html(&attr, &[]);
    let items = parse_items(&html);
    assert_eq!(items.len(), 5);
    assert!(items.iter().all(|(_, a)| *a == 0.0));
    let text = render_text(&attr);
    assert_eq!(text.matches("+0.000").count(), 5);
}

#[test]
fn figure_style_layout() {
    let (net, params, provider) = model();
    let r = record(
        "NCT00610792",
        2,
        &["Recurrent epithelial ovarian cancer", "Measurable disease"],
        &["Prior treatment with bortezomib"],
        3.17,
    );
    let sentences = explain_sentences(&net, &params, &provider, &r, Mode::Exact).unwrap();
    let words = explain_words(&net, &params, &provider, &r, 0, Mode::Exact).unwrap();
    let html = render_html(&sentences, std::slice::from_ref(&words));
    let items = parse_items(&html);
    assert_eq!(items.iter().filter(|(k, _)| k == "sentence").count(), 3);
    assert_eq!(items.iter().filter(|(k, _)| k == "word").count(), 4);
    assert!(items.iter().all(|(_, a)| (0.0..=1.0).contains(a)));
    assert!(items.iter().filter(|(k, _)| k == "sentence").any(|(_, a)| *a == 1.0));
    // The first sentence's value precedes its words.
    let head = html.find("class=\"item sentence").unwrap();
    let first_word = html.find("class=\"item word").unwrap();
    assert!(head < first_word);
    assert!(html[head..first_word].contains(&format!("{:+.3}", sentences.items[0].value)));

    let dir = tempfile::tempdir().unwrap();
    let paths = write_rendering(&dir.path().join("attr"), &sentences, &[words]).unwrap();
    assert_eq!(paths.len(), 3);
    let back: Vec<Attribution> = serde_json::from_str(&std::fs::read_to_string(&paths[2]).unwrap()).unwrap();
    assert_eq!(back[0], sentences);
}
