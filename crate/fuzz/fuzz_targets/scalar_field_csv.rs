#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::rearrangement::{decreasing_rearrangement, ScalarField};

fuzz_target!(|data: &[u8]| {
    let Ok(field) = ScalarField::read_csv(data) else { return };
    let u = decreasing_rearrangement(&field);
    let total = field.lp_integral(1.0);
    let again = u.integral();
    if !total.is_finite() {
        return;
    }
    assert!((total - again).abs() <= 1e-9 * total.abs().max(1.0));
});
