#![no_main]

use libfuzzer_sys::fuzz_target;
use tdur_core::embed::CachedEmbedder;

fuzz_target!(|data: &[u8]| {
    if let Ok(cache) = CachedEmbedder::read(data) {
        let mut out = Vec::new();
        cache.write(&mut out).unwrap();
        assert_eq!(CachedEmbedder::read(out.as_slice()).unwrap(), cache);
    }
});
