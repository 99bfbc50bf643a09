#![no_main]
use libfuzzer_sys::fuzz_target;
use wulff_hardy::geometry::{isoperimetric_deficit, Polygon};
use wulff_hardy::NormSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(poly) = Polygon::read_csv(data) else { return };
    assert!(poly.area() >= 0.0);
    let norm = NormSpec::euclidean(2).expect("planar");
    let _ = isoperimetric_deficit(&poly, &norm);
    let mut out = Vec::new();
    poly.write_csv(&mut out).expect("in-memory write");
    let again = Polygon::read_csv(out.as_slice()).expect("written polygons parse");
    assert_eq!(poly.len(), again.len());
});
