#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sig) = relaxkit::io::parse_signal(text) {
        assert_eq!(sig.times.len(), sig.values.len());
        assert!(sig.times.windows(2).all(|w| w[0] < w[1]));
        assert!(sig.values.iter().all(|v| v.len() == sig.channels()));
    }
});
