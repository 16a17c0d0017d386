#![no_main]

use dp_core::wire::{decode_request_header, encode_request_header, RequestHeader};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(RequestHeader::Source(src)) = decode_request_header(s) {
        let v = encode_request_header(&src).expect("decoded source re-encodes");
        assert_eq!(decode_request_header(&v), Ok(RequestHeader::Source(src)));
    }
});
