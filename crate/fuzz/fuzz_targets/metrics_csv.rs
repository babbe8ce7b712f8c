#![no_main]

use harmonia_bench::table::{parse_metrics, Table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_metrics(text) {
        let table = Table::from_records(&records);
        let _ = table.render(true);
        let _ = table.to_csv();
    }
});
