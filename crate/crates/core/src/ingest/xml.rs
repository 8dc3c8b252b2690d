//! Registry XML (one `clinical_study` document per trial) to [`TrialRecord`].

use std::fmt;

use roxmltree::{Document, Node};

use super::dates::{compute_duration, parse_registry_date};
use super::record::{Phase, TrialRecord};
use super::sentences::split_sentences;
use crate::error::{Error, Result};

/// Why a well-formed document did not yield a record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    MissingNctId,
    NonInterventional,
    UnknownPhase(String),
    MissingPhase,
    NoCondition,
    NoDrugIntervention,
    MissingStartDate,
    MissingCompletionDate,
    BadDate(String),
    NonPositiveDuration,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::MissingNctId => f.write_str("missing nct_id"),
            SkipReason::NonInterventional => f.write_str("non-interventional"),
            SkipReason::UnknownPhase(p) => write!(f, "unknown phase {p:?}"),
            SkipReason::MissingPhase => f.write_str("missing phase"),
            SkipReason::NoCondition => f.write_str("no condition"),
            SkipReason::NoDrugIntervention => f.write_str("no drug intervention"),
            SkipReason::MissingStartDate => f.write_str("missing start_date"),
            SkipReason::MissingCompletionDate => f.write_str("missing completion_date"),
            SkipReason::BadDate(d) => write!(f, "unparseable date {d:?}"),
            SkipReason::NonPositiveDuration => f.write_str("non-positive duration"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Record(TrialRecord),
    Skip(SkipReason),
}

impl Parsed {
    pub fn record(self) -> Option<TrialRecord> {
        match self {
            Parsed::Record(r) => Some(r),
            Parsed::Skip(_) => None,
        }
    }
}

/// Maps a registry phase label to a single phase.
///
/// Combined labels take the later phase; "Early Phase 1" is phase 1;
/// "N/A" and anything unrecognised yield `None`.
pub fn parse_phase_label(label: &str) -> Option<Phase> {
    let lower = label.to_ascii_lowercase();
    let mut best: Option<i64> = None;
    for token in lower.split(|c: char| !c.is_ascii_alphanumeric()) {
        let value = match token {
            "1" | "i" => 1,
            "2" | "ii" => 2,
            "3" | "iii" => 3,
            "4" | "iv" => 4,
            _ => continue,
        };
        best = Some(best.map_or(value, |b: i64| b.max(value)));
    }
    if !lower.contains("phase") && lower.trim().len() > 3 {
        return None;
    }
    best.and_then(|v| Phase::new(v).ok())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn text_of(node: Node<'_, '_>) -> String {
    node.descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<String>()
        .trim()
        .to_string()
}

fn non_empty(s: String) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

fn byte_offset(text: &str, pos: roxmltree::TextPos) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == pos.row as usize {
            let col = (pos.col as usize).saturating_sub(1);
            return offset + line.char_indices().nth(col).map_or(line.len(), |(b, _)| b);
        }
        offset += line.len();
    }
    text.len()
}

/// Parses one registry document.
///
/// Malformed XML is an error carrying the byte offset; well-formed documents
/// that lack a required field come back as [`Parsed::Skip`].
pub fn parse_trial_xml(document: &str) -> Result<Parsed> {
    let doc = Document::parse(document).map_err(|e| Error::Xml {
        offset: byte_offset(document, e.pos()),
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    Ok(match extract(root) {
        Ok(record) => Parsed::Record(record),
        Err(reason) => Parsed::Skip(reason),
    })
}

fn extract(root: Node<'_, '_>) -> std::result::Result<TrialRecord, SkipReason> {
    let nct_id = root
        .descendants()
        .find(|n| n.has_tag_name("nct_id"))
        .map(text_of)
        .and_then(non_empty)
        .ok_or(SkipReason::MissingNctId)?;

    let study_type = child(root, "study_type").map(text_of).unwrap_or_default();
    if !study_type.eq_ignore_ascii_case("interventional") {
        return Err(SkipReason::NonInterventional);
    }

    let phase_label = child(root, "phase")
        .map(text_of)
        .and_then(non_empty)
        .ok_or(SkipReason::MissingPhase)?;
    let phase = parse_phase_label(&phase_label).ok_or(SkipReason::UnknownPhase(phase_label.clone()))?;

    let diseases: Vec<String> = root
        .children()
        .filter(|n| n.has_tag_name("condition"))
        .map(text_of)
        .filter(|s| !s.is_empty())
        .collect();
    if diseases.is_empty() {
        return Err(SkipReason::NoCondition);
    }

    let drugs: Vec<String> = root
        .children()
        .filter(|n| n.has_tag_name("intervention"))
        .filter(|n| {
            child(*n, "intervention_type")
                .map(text_of)
                .is_some_and(|t| t.eq_ignore_ascii_case("drug") || t.eq_ignore_ascii_case("biological"))
        })
        .filter_map(|n| child(n, "intervention_name").map(text_of))
        .filter(|s| !s.is_empty())
        .collect();
    if drugs.is_empty() {
        return Err(SkipReason::NoDrugIntervention);
    }

    let date = |name: &str, missing: SkipReason| {
        let raw = child(root, name).map(text_of).and_then(non_empty).ok_or(missing)?;
        parse_registry_date(&raw).map_err(|_| SkipReason::BadDate(raw))
    };
    let start_date = date("start_date", SkipReason::MissingStartDate)?;
    let completion_date = date("completion_date", SkipReason::MissingCompletionDate)?;
    let duration_years = compute_duration(start_date, completion_date).map_err(|_| SkipReason::NonPositiveDuration)?;

    let textblock = child(root, "eligibility")
        .and_then(|e| child(e, "criteria"))
        .map(text_of)
        .unwrap_or_default();
    let (inclusion, exclusion) = split_sentences(&textblock);

    Ok(TrialRecord {
        nct_id,
        phase,
        diseases,
        drugs,
        inclusion,
        exclusion,
        start_date,
        completion_date,
        duration_years,
    })
}
