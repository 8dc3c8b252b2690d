#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::ingest::{compute_duration, parse_registry_date};

fuzz_target!(|text: &str| {
    if let Ok(date) = parse_registry_date(text) {
        if let Ok(next) = parse_registry_date(&date.format("%Y-%m-%d").to_string()) {
            assert_eq!(next, date);
        }
        let _ = compute_duration(date, date);
    }
});
