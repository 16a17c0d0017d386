#![no_main]

use dp_core::policy::{parse_preferences, PreferenceProfile, PurposeTaxonomy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(p) = serde_json::from_slice::<PreferenceProfile>(data) else {
        return;
    };
    let tax = PurposeTaxonomy::dpv_subset();
    let Ok(p) = PreferenceProfile::new(p.owner, p.default_decision, p.rules, tax) else {
        return;
    };
    assert_eq!(parse_preferences(&p.to_graph(), tax).as_ref(), Ok(&p));
});
