#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::rearrangement::ScalarField;

fuzz_target!(|data: &[u8]| {
    let Ok(field) = ScalarField::from_bytes(data) else { return };
    let again = ScalarField::from_bytes(&field.to_bytes()).expect("encoded fields decode");
    assert_eq!(field, again);
});
