#![no_main]

use auscult_core::nn::{checkpoint_from_bytes, checkpoint_to_bytes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = checkpoint_from_bytes(data) {
        // re-encoding an accepted checkpoint must be a stable fixed point
        let encoded = checkpoint_to_bytes(&params);
        let again = checkpoint_from_bytes(&encoded).expect("re-encoded checkpoint must parse");
        assert_eq!(checkpoint_to_bytes(&again), encoded);
    }
});
