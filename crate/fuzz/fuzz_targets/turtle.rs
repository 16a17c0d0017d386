#![no_main]

use dp_core::rdf::{parse_turtle, serialize_canonical, skolemize, write_turtle};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = parse_turtle(s, Some("http://example.org/base")) else {
        return;
    };
    // Canonical N-Triples and our own Turtle both read back to the same graph.
    let canon = serialize_canonical(&g);
    let again = parse_turtle(&canon, None).expect("canonical output parses");
    assert_eq!(serialize_canonical(&again), canon);
    let ttl = write_turtle(&skolemize(&g));
    let back = parse_turtle(&ttl, None).expect("written turtle parses");
    assert_eq!(
        serialize_canonical(&back),
        serialize_canonical(&skolemize(&g))
    );
});
