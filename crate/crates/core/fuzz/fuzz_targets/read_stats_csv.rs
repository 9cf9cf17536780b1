#![no_main]

use fovpart::emulator::StatsRow;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = StatsRow::read_csv(data);
});
