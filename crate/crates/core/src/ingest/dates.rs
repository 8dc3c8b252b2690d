use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

const DAYS_PER_YEAR: f64 = 365.25;

/// Parses the date spellings found in registry records.
///
/// Month-only dates ("July 2006", "2006-07") resolve to the first of the month.
pub fn parse_registry_date(text: &str) -> Result<NaiveDate> {
    let s = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let full = ["%B %d, %Y", "%B %d %Y", "%b %d, %Y", "%b %d %Y", "%Y-%m-%d", "%d %B %Y"];
    // chrono accepts short years, so "July 2006" would otherwise read as
    // July 20 of year 6.
    for fmt in full {
        if let Ok(d) = NaiveDate::parse_from_str(&s, fmt) {
            if d.year() >= 1000 {
                return Ok(d);
            }
        }
    }
    for fmt in ["%d %B %Y", "%d %b %Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(&format!("1 {s}"), fmt) {
            return Ok(d);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d") {
        return Ok(d);
    }
    Err(Error::InvalidDate(text.to_string()))
}

/// Elapsed years between two dates on a 365.25-day year.
pub fn compute_duration(start: NaiveDate, completion: NaiveDate) -> Result<f64> {
    if completion <= start {
        return Err(Error::InvalidInterval { start, completion });
    }
    let days = (completion - start).num_days();
    Ok(days as f64 / DAYS_PER_YEAR)
}
