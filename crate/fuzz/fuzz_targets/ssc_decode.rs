#![no_main]

use covqcs::ssc::{SscCodec, SscIndices};
use libfuzzer_sys::fuzz_target;

// Small fixed codecs; the input picks one and supplies raw received indices.
fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let (n, k, rate) = [(2, 1, 4), (8, 2, 9), (12, 2, 15), (5, 5, 5)][pick as usize % 4];
    let Ok(codec) = SscCodec::new(n, k, rate) else { return };
    let mut words = rest.chunks(4).map(|c| c.iter().fold(0u32, |a, &b| a << 8 | b as u32));
    let support = words.next().unwrap_or(0) as u64;
    let levels: Vec<u32> = words.collect();
    if let Ok(d) = codec.decode(&SscIndices { support, levels }) {
        assert_eq!(d.x.len(), n);
        assert!(d.x.iter().filter(|v| **v != 0.0).count() <= k);
    }
});
