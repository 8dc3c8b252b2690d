#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::ingest::split_sentences;

fuzz_target!(|text: &str| {
    let (inclusion, exclusion) = split_sentences(text);
    for s in inclusion.iter().chain(&exclusion) {
        assert!(!s.trim().is_empty());
        assert_eq!(s.trim(), s);
    }
});
