#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::synth::synthetic_schema;
use segcube::table::load_table;

fuzz_target!(|data: &[u8]| {
    let schema = synthetic_schema();
    if let Ok(table) = load_table(data, &schema) {
        let again = load_table(table.to_csv().as_bytes(), &schema).expect("written table parses");
        assert_eq!(again, table);
    }
});
