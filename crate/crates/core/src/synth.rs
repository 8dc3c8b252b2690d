//! Seeded synthetic trial generator with a known duration signal.
//!
//! Duration is a phase baseline plus fixed effects for a handful of keyword
//! sentences, plus Gaussian noise. Models that read the phase and the
//! criteria text can beat the training mean; a constant predictor cannot.

use chrono::{Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{compute_duration, Phase, TrialRecord};

pub const PHASE_BASE_YEARS: [f64; 4] = [0.9, 1.8, 2.7, 3.3];

/// Keyword sentences and the years each adds when present.
pub const INCLUSION_EFFECTS: [(&str, f64); 3] = [
    ("Pediatric patients aged 2 to 11 years", 1.2),
    ("Histologically confirmed metastatic disease", 0.8),
    ("Willing to attend monthly follow-up visits for five years", 1.5),
];
pub const EXCLUSION_EFFECTS: [(&str, f64); 2] = [
    ("Pregnant or breastfeeding women", -0.4),
    ("Prior organ transplant", 0.6),
];

const FILLER_INCLUSION: [&str; 8] = [
    "Age 18 years or older",
    "Written informed consent",
    "ECOG performance status 0 or 1",
    "Adequate renal function",
    "Adequate hepatic function",
    "Life expectancy of at least 12 weeks",
    "Measurable disease by RECIST",
    "Negative serum pregnancy test",
];
const FILLER_EXCLUSION: [&str; 6] = [
    "Known HIV infection",
    "Uncontrolled hypertension",
    "Active infection requiring antibiotics",
    "Participation in another trial within 30 days",
    "History of allergic reaction to study drug",
    "Severe psychiatric illness",
];
const DRUGS: [&str; 8] = [
    "bortezomib",
    "doxorubicin",
    "metformin",
    "placebo",
    "cisplatin",
    "insulin glargine",
    "atorvastatin",
    "rituximab",
];
const DISEASES: [&str; 6] = [
    "Ovarian Cancer",
    "Multiple Myeloma",
    "Type 2 Diabetes",
    "Hypertension",
    "Asthma",
    "Lymphoma",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub noise_sd: f64,
    /// Probability that each keyword sentence appears.
    pub keyword_rate: f64,
    pub first_start: NaiveDate,
    pub last_start: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 200,
            seed: 0,
            noise_sd: 0.2,
            keyword_rate: 0.3,
            first_start: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            last_start: NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        }
    }
}

/// Noise-free duration for a phase and criteria lists.
pub fn signal(phase: Phase, inclusion: &[String], exclusion: &[String]) -> f64 {
    let effect = |list: &[String], table: &[(&str, f64)]| -> f64 {
        table
            .iter()
            .filter(|(s, _)| list.iter().any(|x| x == s))
            .map(|(_, v)| v)
            .sum()
    };
    PHASE_BASE_YEARS[phase.index()] + effect(inclusion, &INCLUSION_EFFECTS) + effect(exclusion, &EXCLUSION_EFFECTS)
}

pub fn generate(config: &SynthConfig) -> Result<Vec<TrialRecord>> {
    if config.n == 0 {
        return Err(Error::Config("synthetic n must be at least 1".into()));
    }
    if config.last_start < config.first_start {
        return Err(Error::Config("synthetic start range is empty".into()));
    }
    if !(0.0..=1.0).contains(&config.keyword_rate) {
        return Err(Error::Config("keyword_rate must be in [0, 1]".into()));
    }
    let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::Config(format!("noise_sd: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let span = (config.last_start - config.first_start).num_days() as u64;

    (0..config.n)
        .map(|i| {
            let phase = Phase::new(rng.random_range(1..=4))?;
            let mut inclusion = pick(&mut rng, &FILLER_INCLUSION, 2..=4);
            let mut exclusion = pick(&mut rng, &FILLER_EXCLUSION, 1..=3);
            for (s, _) in INCLUSION_EFFECTS {
                if rng.random_bool(config.keyword_rate) {
                    inclusion.push(s.to_string());
                }
            }
            for (s, _) in EXCLUSION_EFFECTS {
                if rng.random_bool(config.keyword_rate) {
                    exclusion.push(s.to_string());
                }
            }
            inclusion.shuffle(&mut rng);
            exclusion.shuffle(&mut rng);

            let target = (signal(phase, &inclusion, &exclusion) + noise.sample(&mut rng)).clamp(0.1, 9.5);
            let start_date = config.first_start + Days::new(rng.random_range(0..=span));
            let completion_date = start_date + Days::new((target * 365.25).round().max(1.0) as u64);
            Ok(TrialRecord {
                nct_id: format!("NCT9{i:07}"),
                phase,
                diseases: pick(&mut rng, &DISEASES, 1..=2),
                drugs: pick(&mut rng, &DRUGS, 1..=2),
                inclusion,
                exclusion,
                start_date,
                completion_date,
                duration_years: compute_duration(start_date, completion_date)?,
            })
        })
        .collect()
}

fn pick(rng: &mut ChaCha8Rng, pool: &[&str], count: std::ops::RangeInclusive<usize>) -> Vec<String> {
    let k = rng.random_range(count);
    pool.choose_multiple(rng, k).map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let config = SynthConfig::default();
        let a = generate(&config).unwrap();
        assert_eq!(a, generate(&config).unwrap());
        for r in &a {
            r.validate().unwrap();
            assert!(r.duration_years > 0.0 && r.duration_years <= 10.0);
        }
    }

    #[test]
    fn zero_noise_tracks_signal() {
        let config = SynthConfig {
            noise_sd: 0.0,
            ..SynthConfig::default()
        };
        for r in generate(&config).unwrap() {
            let want = signal(r.phase, &r.inclusion, &r.exclusion);
            assert!(
                (r.duration_years - want).abs() < 2.0 / 365.25,
                "{} vs {want}",
                r.duration_years
            );
        }
    }

    #[test]
    fn spans_the_default_cutoff() {
        let records = generate(&SynthConfig::default()).unwrap();
        let cutoff = crate::ingest::default_cutoff();
        assert!(records.iter().any(|r| r.start_date < cutoff));
        assert!(records.iter().any(|r| r.start_date >= cutoff));
    }
}
