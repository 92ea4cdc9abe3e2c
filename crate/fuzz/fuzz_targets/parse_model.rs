#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((sys, label)) = relaxkit::io::parse_model(text) {
        // anything that parses must survive a round trip unchanged
        let again = relaxkit::io::model_to_string(&sys, label.as_deref()).expect("serializable");
        let (back, _) = relaxkit::io::parse_model(&again).expect("round trip parses");
        assert_eq!(back, sys);
    }
});
