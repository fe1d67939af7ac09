#![no_main]

use libfuzzer_sys::fuzz_target;
use mmtc_qra::config::{parse_config_str, render_config};

// Anything the parser accepts must render to text that parses back to the
// same configuration.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(parsed) = parse_config_str(text) {
        let rendered = render_config(&parsed);
        let again = parse_config_str(&rendered).expect("rendered config parses");
        assert_eq!(parsed, again, "round trip changed:\n{rendered}");
    }
});
