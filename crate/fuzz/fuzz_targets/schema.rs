#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::schema::AttributeSchema;

fuzz_target!(|data: &[u8]| {
    if let Ok(schema) = AttributeSchema::from_csv(data) {
        let again = AttributeSchema::from_csv(schema.to_csv().as_bytes()).expect("written schema parses");
        assert_eq!(again, schema);
    }
});
