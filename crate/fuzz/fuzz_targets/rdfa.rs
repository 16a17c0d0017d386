#![no_main]

use dp_core::rdf::{extract_rdfa, parse_turtle, serialize_canonical};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = extract_rdfa(s, "https://example.com/page") else {
        return;
    };
    let canon = serialize_canonical(&g);
    let again = parse_turtle(&canon, None).expect("extracted graph serializes");
    assert_eq!(serialize_canonical(&again), canon);
});
