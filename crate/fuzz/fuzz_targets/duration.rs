#![no_main]

use dp_core::policy::{duration_to_seconds, seconds_to_duration};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(secs) = duration_to_seconds(s) {
        assert_eq!(duration_to_seconds(&seconds_to_duration(secs)), Ok(secs));
    }
});
