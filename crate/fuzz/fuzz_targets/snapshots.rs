#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::ingest::parse_snapshots;

fuzz_target!(|data: &[u8]| {
    let _ = parse_snapshots(data);
});
