#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pairs) = auscult_cli::config::parse_config(text) {
            // accepted configs never repeat a key
            let mut keys: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
            let before = keys.len();
            keys.sort_unstable();
            keys.dedup();
            assert_eq!(keys.len(), before);
        }
    }
});
