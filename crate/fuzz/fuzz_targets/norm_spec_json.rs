#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::NormSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<NormSpec>(data) else { return };
    let text = serde_json::to_string(&spec).expect("valid specs serialize");
    let again: NormSpec = serde_json::from_str(&text).expect("serialized specs parse");
    assert_eq!(spec.dim(), again.dim());
    let e: Vec<f64> = (0..spec.dim()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let h = spec.eval_norm(&e).expect("unit vector has the right dimension");
    assert!(h > 0.0 && h.is_finite());
});
