#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::radial::ProblemParams;

fuzz_target!(|data: &[u8]| {
    let Ok(params) = serde_json::from_slice::<ProblemParams>(data) else { return };
    let _ = params.validate();
    let _ = serde_json::to_string(&params);
});
