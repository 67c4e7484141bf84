#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::ingest::parse_individuals;
use segcube::synth::synthetic_schema;

fuzz_target!(|data: &[u8]| {
    let _ = parse_individuals(data, &synthetic_schema());
});
