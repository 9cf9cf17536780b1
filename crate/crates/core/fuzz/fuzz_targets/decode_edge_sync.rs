#![no_main]

use fovpart::emulator::codec::{decode_edge_sync, encode_edge_sync};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_edge_sync(data) {
        assert_eq!(&encode_edge_sync(&m).expect("decoded values fit")[..], data);
    }
});
