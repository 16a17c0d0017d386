#![no_main]

use dp_proxy::cookies::{join_cookie_header, parse_cookie_header, set_cookie_name};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let _ = set_cookie_name(s);
    let pairs = parse_cookie_header(s);
    let joined = join_cookie_header(&pairs);
    assert_eq!(parse_cookie_header(&joined), pairs);
});
