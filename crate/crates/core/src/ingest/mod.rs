//! Registry ingestion: XML parsing, labels, filtering, temporal splits and
//! duration statistics.

mod dates;
mod record;
mod sentences;
mod stats;
mod xml;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dates::{compute_duration, parse_registry_date};
pub use record::{parse_jsonl_line, read_jsonl, write_jsonl, Phase, TrialRecord};
pub use sentences::split_sentences;
pub use stats::{quantile_sorted, summarize, summarize_values, DurationStats, PhaseSummary, Summary};
pub use xml::{parse_phase_label, parse_trial_xml, Parsed, SkipReason};

use crate::error::{Error, Result};

/// Longest duration kept in the dataset, in years.
pub const MAX_DURATION_YEARS: f64 = 10.0;

/// Default temporal cutoff between train and test trials.
pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()
}

/// Whether a parsed record belongs in the modelling dataset.
pub fn filter_eligible(record: &TrialRecord) -> bool {
    record.duration_years > 0.0
        && record.duration_years <= MAX_DURATION_YEARS
        && !record.drugs.is_empty()
        && !record.diseases.is_empty()
        && (!record.inclusion.is_empty() || !record.exclusion.is_empty())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<TrialRecord>,
    pub test: Vec<TrialRecord>,
    pub cutoff_date: NaiveDate,
}

/// Trials starting before `cutoff` train; the rest test. Input order is kept
/// within each side.
pub fn split_temporal(records: &[TrialRecord], cutoff: NaiveDate) -> DatasetSplit {
    let (test, train): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.start_date >= cutoff);
    DatasetSplit {
        train,
        test,
        cutoff_date: cutoff,
    }
}

/// Outcome of ingesting a directory of registry documents.
#[derive(Debug, Default, Clone, Serialize)]
pub struct IngestSummary {
    pub files: usize,
    pub kept: usize,
    pub filtered_out: usize,
    pub skipped: BTreeMap<String, usize>,
    pub malformed: Vec<(PathBuf, String)>,
}

/// Parses every `*.xml` file under `dir` and returns eligible records ordered
/// by `nct_id`.
pub fn ingest_dir(dir: &Path) -> Result<(Vec<TrialRecord>, IngestSummary)> {
    let mut paths = Vec::new();
    collect_xml(dir, &mut paths)?;
    paths.sort();

    let outcomes: Vec<(PathBuf, Result<Parsed>)> = paths
        .into_par_iter()
        .map(|p| {
            let parsed = std::fs::read_to_string(&p)
                .map_err(|e| Error::io(&p, e))
                .and_then(|text| parse_trial_xml(&text));
            (p, parsed)
        })
        .collect();

    let mut summary = IngestSummary {
        files: outcomes.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for (path, outcome) in outcomes {
        match outcome {
            Ok(Parsed::Record(r)) if filter_eligible(&r) => records.push(r),
            Ok(Parsed::Record(_)) => summary.filtered_out += 1,
            Ok(Parsed::Skip(reason)) => *summary.skipped.entry(reason.to_string()).or_default() += 1,
            Err(Error::Io { path, source }) => return Err(Error::Io { path, source }),
            Err(e) => summary.malformed.push((path, e.to_string())),
        }
    }
    records.sort_by(|a, b| a.nct_id.cmp(&b.nct_id));
    summary.kept = records.len();
    Ok((records, summary))
}

fn collect_xml(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_xml(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
            out.push(path);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, start: NaiveDate, years: f64) -> TrialRecord {
        TrialRecord {
            nct_id: id.into(),
            phase: Phase::new(2).unwrap(),
            diseases: vec!["Ovarian Cancer".into()],
            drugs: vec!["bortezomib".into(), "doxorubicin".into()],
            inclusion: vec!["Age ≥ 18".into()],
            exclusion: vec![],
            start_date: start,
            completion_date: start + chrono::Days::new((years * 365.25).round() as u64),
            duration_years: years,
        }
    }

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn eligibility_boundaries() {
        let start = ymd(2010, 1, 1);
        assert!(filter_eligible(&record("a", start, 3.2)));
        assert!(!filter_eligible(&record("b", start, 12.0)));
        assert!(filter_eligible(&record("c", start, 9.999)));
        assert!(filter_eligible(&record("d", start, 10.0)));
        let mut no_drugs = record("e", start, 2.0);
        no_drugs.drugs.clear();
        assert!(!filter_eligible(&no_drugs));
        let mut no_criteria = record("f", start, 2.0);
        no_criteria.inclusion.clear();
        assert!(!filter_eligible(&no_criteria));
    }

    #[test]
    fn split_basic() {
        let rs = vec![record("a", ymd(2018, 6, 1), 1.0), record("b", ymd(2019, 6, 1), 1.0)];
        let s = split_temporal(&rs, default_cutoff());
        assert_eq!(s.train, vec![rs[0].clone()]);
        assert_eq!(s.test, vec![rs[1].clone()]);
    }

    #[test]
    fn split_on_cutoff_goes_to_test() {
        let rs = vec![record("a", default_cutoff(), 1.0)];
        let s = split_temporal(&rs, default_cutoff());
        assert!(s.train.is_empty());
        assert_eq!(s.test.len(), 1);
    }

    #[test]
    fn split_degenerate() {
        let rs: Vec<_> = (0..3)
            .map(|i| record(&i.to_string(), ymd(2020, 1 + i, 1), 1.0))
            .collect();
        let s = split_temporal(&rs, default_cutoff());
        assert!(s.train.is_empty());
        assert_eq!(s.test, rs);
    }

    proptest::proptest! {
        #[test]
        fn split_is_a_partition(days in proptest::collection::vec(0u64..6000, 1..40)) {
            let rs: Vec<_> = days
                .iter()
                .enumerate()
                .map(|(i, d)| record(&format!("NCT{i:08}"), ymd(2010, 1, 1) + chrono::Days::new(*d), 1.0))
                .collect();
            let s = split_temporal(&rs, default_cutoff());
            proptest::prop_assert_eq!(s.train.len() + s.test.len(), rs.len());
            for r in &rs {
                let in_train = s.train.contains(r);
                let in_test = s.test.contains(r);
                proptest::prop_assert!(in_train != in_test);
            }
            proptest::prop_assert!(s.test.iter().all(|r| r.start_date >= s.cutoff_date));
            proptest::prop_assert!(s.train.iter().all(|r| r.start_date < s.cutoff_date));
        }

        #[test]
        fn filter_is_idempotent(years in -1.0f64..15.0) {
            let r = record("x", ymd(2012, 1, 1), years);
            let rs = [r];
            let once: Vec<_> = rs.iter().filter(|r| filter_eligible(r)).cloned().collect();
            let twice: Vec<_> = once.iter().filter(|r| filter_eligible(r)).cloned().collect();
            proptest::prop_assert_eq!(&once, &twice);
            proptest::prop_assert!(once.iter().all(|r| r.duration_years > 0.0 && r.duration_years <= 10.0));
        }
    }
}
