#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::clustering::UnitAssignment;

fuzz_target!(|data: &[u8]| {
    let _ = UnitAssignment::from_csv(data);
});
