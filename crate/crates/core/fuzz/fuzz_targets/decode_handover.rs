#![no_main]

use fovpart::emulator::codec::{decode_handover, encode_handover};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_handover(data) {
        assert_eq!(&encode_handover(&m)[..], data);
    }
});
