use std::fmt;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trial phase, 1 through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Phase(u8);

impl Phase {
    pub const ALL: [Phase; 4] = [Phase(1), Phase(2), Phase(3), Phase(4)];

    pub fn new(value: i64) -> Result<Self> {
        match value {
            1..=4 => Ok(Phase(value as u8)),
            other => Err(Error::InvalidPhase(other)),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index into a phase one-hot vector.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl TryFrom<i64> for Phase {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        Phase::new(value)
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        p.0
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One registry entry reduced to the fields the models consume.
///
/// Field order is the canonical JSONL order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub nct_id: String,
    pub phase: Phase,
    pub diseases: Vec<String>,
    pub drugs: Vec<String>,
    pub inclusion: Vec<String>,
    pub exclusion: Vec<String>,
    pub start_date: NaiveDate,
    pub completion_date: NaiveDate,
    pub duration_years: f64,
}

impl TrialRecord {
    /// Checks the structural invariants that hold for every record, filtered or not.
    pub fn validate(&self) -> Result<()> {
        if self.nct_id.trim().is_empty() {
            return Err(Error::Format("empty nct_id".into()));
        }
        if self.completion_date <= self.start_date {
            return Err(Error::InvalidInterval {
                start: self.start_date,
                completion: self.completion_date,
            });
        }
        if !(self.duration_years.is_finite() && self.duration_years > 0.0) {
            return Err(Error::Format(format!(
                "{}: duration_years must be positive, got {}",
                self.nct_id, self.duration_years
            )));
        }
        for s in self.inclusion.iter().chain(&self.exclusion) {
            if s.trim().is_empty() {
                return Err(Error::Format(format!("{}: empty criterion sentence", self.nct_id)));
            }
        }
        Ok(())
    }

    /// Inclusion then exclusion sentences, in slot order.
    pub fn criteria(&self) -> impl Iterator<Item = &str> {
        self.inclusion.iter().chain(&self.exclusion).map(String::as_str)
    }
}

/// Writes one compact JSON object per record, LF-terminated.
pub fn write_jsonl<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
    }
    Ok(())
}

/// Parses a single canonical JSONL line.
pub fn parse_jsonl_line(line: &str) -> Result<TrialRecord> {
    let record: TrialRecord = serde_json::from_str(line)?;
    record.validate()?;
    Ok(record)
}

/// Reads records from JSONL; blank lines are ignored.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_jsonl_line(&line).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrialRecord {
        TrialRecord {
            nct_id: "NCT00000001".into(),
            phase: Phase::new(2).unwrap(),
            diseases: vec!["Asthma".into()],
            drugs: vec!["fevipiprant".into()],
            inclusion: vec!["Age ≥ 18".into()],
            exclusion: vec!["Pregnancy".into()],
            start_date: NaiveDate::from_ymd_opt(2015, 3, 1).unwrap(),
            completion_date: NaiveDate::from_ymd_opt(2019, 3, 1).unwrap(),
            duration_years: 4.0,
        }
    }

    #[test]
    fn jsonl_field_layout() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[sample()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.starts_with(r#"{"nct_id":"NCT00000001","phase":2,"diseases":["Asthma"]"#));
        assert!(text.contains(r#""start_date":"2015-03-01","completion_date":"2019-03-01","duration_years":4.0}"#));
    }

    #[test]
    fn rejects_out_of_range_phase() {
        let line = serde_json::to_string(&sample())
            .unwrap()
            .replace("\"phase\":2", "\"phase\":7");
        assert!(parse_jsonl_line(&line).is_err());
    }

    #[test]
    fn rejects_inverted_dates() {
        let mut r = sample();
        r.completion_date = r.start_date;
        assert!(matches!(r.validate(), Err(Error::InvalidInterval { .. })));
    }

    #[test]
    fn read_reports_line_number() {
        let good = serde_json::to_string(&sample()).unwrap();
        let input = format!("{good}\n\n{{\"nct_id\":1}}\n");
        let err = read_jsonl(input.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
