#![no_main]

use harmonia_core::oracle::FieldGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = FieldGrid::from_text(text) {
        assert_eq!(grid.values.len(), grid.mask.len());
        assert_eq!(grid.values.len(), grid.dims.iter().product::<usize>());
        // Sampling at the origin must not panic whatever the mask says.
        let _ = grid.sample(&grid.origin.clone());
        let again = FieldGrid::from_text(&grid.to_text()).expect("own output parses");
        assert_eq!(again.dims, grid.dims);
    }
});
