#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(manifest) = auscult_core::pcg_io::parse_manifest(data) {
        // accepted manifests never contain duplicate record ids
        let mut ids: Vec<&str> = manifest.entries.iter().map(|e| e.record_id.as_str()).collect();
        let before = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), before);
    }
});
