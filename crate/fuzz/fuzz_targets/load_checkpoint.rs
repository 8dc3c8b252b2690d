#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::encoder::{decode_f32_le, CheckpointManifest};

// Input: manifest JSON, a NUL byte, then the raw parameter bytes.
fuzz_target!(|data: &[u8]| {
    let (head, params) = match data.iter().position(|b| *b == 0) {
        Some(i) => (&data[..i], &data[i + 1..]),
        None => (data, &[][..]),
    };
    let _ = decode_f32_le(params, params.len() / 4);
    let Ok(text) = std::str::from_utf8(head) else { return };
    if let Ok(manifest) = CheckpointManifest::parse(text) {
        if let Ok(values) = decode_f32_le(params, manifest.param_count) {
            assert_eq!(values.len(), manifest.param_count);
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
