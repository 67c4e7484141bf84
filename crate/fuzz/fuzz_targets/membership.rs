#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::ingest::{parse_membership, write_membership};

fuzz_target!(|data: &[u8]| {
    if let Ok(edges) = parse_membership(data) {
        let again = parse_membership(write_membership(&edges).as_bytes()).expect("written membership parses");
        assert_eq!(again, edges);
    }
});
