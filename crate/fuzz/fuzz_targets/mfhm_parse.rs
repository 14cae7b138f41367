#![no_main]

use auscult_core::features::{decode_heatmap, encode_heatmap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = decode_heatmap(data) {
        // re-encoding an accepted map must be a stable fixed point
        let encoded = encode_heatmap(&map);
        let again = decode_heatmap(&encoded).expect("re-encoded heat map must parse");
        assert_eq!(encode_heatmap(&again), encoded);
    }
});
