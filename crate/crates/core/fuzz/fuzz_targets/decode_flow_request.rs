#![no_main]

use fovpart::emulator::codec::{decode_flow_request, encode_flow_request};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_flow_request(data) {
        assert_eq!(encode_flow_request(&m).expect("decoded length fits"), data);
    }
});
