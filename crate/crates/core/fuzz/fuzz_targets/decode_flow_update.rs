#![no_main]

use fovpart::emulator::codec::{decode_flow_update, encode_flow_update};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_flow_update(data) {
        assert_eq!(&encode_flow_update(&m)[..], data);
    }
});
