#![no_main]

use dp_core::rdf::html::parse_html;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(root) = parse_html(s) {
            for el in root.descendants() {
                let _ = el.attr("id");
            }
        }
    }
});
