#![no_main]

use dp_core::wire::{decode_agreement_header, encode_agreement_header};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(env) = decode_agreement_header(s) {
        env.verify().expect("decoded envelope verifies");
        let v = encode_agreement_header(&env).expect("re-encodes");
        assert_eq!(decode_agreement_header(&v), Ok(env));
    }
});
