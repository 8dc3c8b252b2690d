#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::ingest::{parse_jsonl_line, write_jsonl};

fuzz_target!(|line: &str| {
    if let Ok(record) = parse_jsonl_line(line) {
        let mut out = Vec::new();
        write_jsonl(&mut out, std::slice::from_ref(&record)).unwrap();
        let again = parse_jsonl_line(std::str::from_utf8(&out).unwrap().trim_end()).unwrap();
        assert_eq!(again, record);
    }
});
