#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::ingest::{filter_eligible, parse_trial_xml};

fuzz_target!(|text: &str| {
    if let Ok(parsed) = parse_trial_xml(text) {
        if let Some(record) = parsed.record() {
            record.validate().expect("parsed records satisfy their invariants");
            let _ = filter_eligible(&record);
        }
    }
});
