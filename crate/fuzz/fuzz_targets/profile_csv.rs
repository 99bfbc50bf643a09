#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::rearrangement::{lorentz_quasinorm, maximal_profile, LorentzIndex, MonotoneProfile};

fuzz_target!(|data: &[u8]| {
    let Ok(u) = MonotoneProfile::read_csv(data) else { return };
    let idx = LorentzIndex::new(2.0, 2.0).expect("valid index");
    let _ = lorentz_quasinorm(&u, idx);
    let _ = maximal_profile(&u);
});
