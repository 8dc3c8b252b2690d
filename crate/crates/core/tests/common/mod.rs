#![allow(dead_code)]

pub mod metrics;
pub mod oracle;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdur_core::embed::{EmbeddedTrial, Segment, SENTENCE_SLOTS};
use tdur_core::ingest::{Phase, TrialRecord};

/// Random embedded trial with the given numbers of real sentences.
pub fn random_trial(d: usize, incl: usize, excl: usize, seed: u64) -> EmbeddedTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let drug_vec = v(d);
    let disease_vec = v(d);
    let mut sentences = vec![0.0; SENTENCE_SLOTS * d];
    let mut mask = vec![false; SENTENCE_SLOTS];
    let slots: Vec<usize> = (0..incl).chain(32..32 + excl).collect();
    let fill = v(slots.len() * d);
    for (k, &s) in slots.iter().enumerate() {
        sentences[s * d..(s + 1) * d].copy_from_slice(&fill[k * d..(k + 1) * d]);
        mask[s] = true;
    }
    let phase = (seed % 4) as i64 + 1;
    let mut onehot = [0.0; 4];
    onehot[phase as usize - 1] = 1.0;
    EmbeddedTrial {
        nct_id: format!("NCT{seed:08}"),
        phase: Phase::new(phase).unwrap(),
        dim: d,
        phase_onehot: onehot,
        drug_vec,
        disease_vec,
        sentences,
        mask,
        segment: (0..SENTENCE_SLOTS).map(Segment::of_slot).collect(),
        label: Some(1.0 + (seed % 5) as f64 * 0.5),
    }
}

pub fn record(id: &str, phase: i64, incl: &[&str], excl: &[&str], years: f64) -> TrialRecord {
    let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    TrialRecord {
        nct_id: id.into(),
        phase: Phase::new(phase).unwrap(),
        diseases: vec!["Ovarian Cancer".into()],
        drugs: vec!["bortezomib".into()],
        inclusion: incl.iter().map(|s| s.to_string()).collect(),
        exclusion: excl.iter().map(|s| s.to_string()).collect(),
        start_date: start,
        completion_date: start + chrono::Days::new((years * 365.25) as u64 + 1),
        duration_years: years,
    }
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/registry")
}
