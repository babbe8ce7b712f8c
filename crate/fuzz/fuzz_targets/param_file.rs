#![no_main]

use harmonia_core::nets::io::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything that decodes must re-encode to the same bytes.
    if let Ok(file) = decode(data) {
        assert_eq!(encode(file.kind, &file.params), data);
    }
});
