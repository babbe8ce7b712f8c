#![no_main]

use harmonia_core::oracle::FieldGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = FieldGrid::from_csv(text) {
        assert_eq!(grid.values.len(), grid.mask.len());
        let _ = grid.to_csv();
    }
});
