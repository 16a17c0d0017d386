#![no_main]

use dp_proxy::log::verify_lines;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = verify_lines(s.lines());
    }
});
