#![no_main]

use covqcs::io::{decode_codebook, encode_codebook};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cb) = decode_codebook(data) {
        assert_eq!(encode_codebook(&cb), data);
    }
});
