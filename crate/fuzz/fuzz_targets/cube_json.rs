#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::export::{export_csv, export_json, parse_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(cube) = parse_json(data) {
        let json = export_json(&cube);
        let again = parse_json(&json).expect("exported document parses");
        assert_eq!(again, cube);
        let _ = export_csv(&cube);
    }
});
