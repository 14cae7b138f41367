#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(audio) = auscult_core::pcg_io::parse_wav(data) {
        // decoded PCM16 must already be scaled into the unit interval
        assert!(audio.samples.iter().all(|s| s.is_finite() && s.abs() <= 1.0));
    }
});
