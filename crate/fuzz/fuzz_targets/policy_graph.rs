#![no_main]

use dp_core::engine::evaluate;
use dp_core::policy::{
    load_taxonomy, parse_dtou_app_policy, parse_odrl_agreement, parse_odrl_request,
    parse_preferences, translate_dtou_to_odrl, translate_odrl_to_dtou, PurposeTaxonomy,
};
use dp_core::rdf::{parse_turtle, skolemize};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = parse_turtle(s, Some("http://example.org/base")) else {
        return;
    };
    let g = skolemize(&g);
    let tax = PurposeTaxonomy::dpv_subset();
    let _ = load_taxonomy(&g);
    let _ = parse_odrl_agreement(&g, None);
    let profile = parse_preferences(&g, tax);
    if let Ok(r) = parse_odrl_request(&g, None) {
        assert_eq!(parse_odrl_request(&r.to_graph(), None).as_ref(), Ok(&r));
        if let Ok(p) = translate_odrl_to_dtou(&r) {
            let _ = translate_dtou_to_odrl(&p);
        }
        if let Ok(profile) = &profile {
            let _ = evaluate(profile, &r, tax);
        }
    }
    if let Ok(p) = parse_dtou_app_policy(&g, None) {
        let _ = translate_dtou_to_odrl(&p);
    }
});
