//! Replays the checked-in fuzz seeds through the invariants of the fuzz
//! targets, so they run under `cargo test` without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use wulff_hardy::geometry::{isoperimetric_deficit, Polygon};
use wulff_hardy::radial::ProblemParams;
use wulff_hardy::rearrangement::{
    decreasing_rearrangement, lorentz_quasinorm, maximal_profile, LorentzIndex, MonotoneProfile, ScalarField,
};
use wulff_hardy::NormSpec;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Seeds whose name starts with one of these prefixes must be rejected.
fn expect_reject(name: &str) -> bool {
    ["bad_", "not_", "off_", "truncated", "increasing", "degenerate"]
        .iter()
        .any(|p| name.starts_with(p))
}

fn check<T, E: std::fmt::Debug>(name: &str, r: &Result<T, E>) {
    assert_eq!(r.is_err(), expect_reject(name), "{name}: {:?}", r.as_ref().err());
}

#[test]
fn norm_spec_json() {
    for (name, data) in seeds("norm_spec_json") {
        let r = serde_json::from_slice::<NormSpec>(&data);
        check(&name, &r);
        let Ok(spec) = r else { continue };
        let again: NormSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again, "{name}");
        let e: Vec<f64> = (0..spec.dim()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        assert!(spec.eval_norm(&e).unwrap() > 0.0);
    }
}

#[test]
fn scalar_field_csv() {
    for (name, data) in seeds("scalar_field_csv") {
        let r = ScalarField::read_csv(data.as_slice());
        check(&name, &r);
        let Ok(field) = r else { continue };
        let total = field.lp_integral(1.0);
        assert!((total - decreasing_rearrangement(&field).integral()).abs() <= 1e-12 * total.max(1.0));
        let mut text = Vec::new();
        field.write_csv(&mut text).unwrap();
        let again = ScalarField::read_csv(text.as_slice()).unwrap();
        assert_eq!(field.lp_integral(2.0), again.lp_integral(2.0), "{name}");
    }
}

#[test]
fn scalar_field_binary() {
    for (name, data) in seeds("scalar_field_binary") {
        let r = ScalarField::from_bytes(&data);
        check(&name, &r);
        let Ok(field) = r else { continue };
        assert_eq!(field.to_bytes(), data, "{name}");
    }
}

#[test]
fn profile_csv() {
    let idx = LorentzIndex::new(2.0, 2.0).unwrap();
    for (name, data) in seeds("profile_csv") {
        let r = MonotoneProfile::read_csv(data.as_slice());
        check(&name, &r);
        let Ok(u) = r else { continue };
        assert!(lorentz_quasinorm(&u, idx).is_finite());
        maximal_profile(&u).unwrap();
    }
}

#[test]
fn polygon_csv() {
    let norm = NormSpec::euclidean(2).unwrap();
    for (name, data) in seeds("polygon_csv") {
        let r = Polygon::read_csv(data.as_slice());
        check(&name, &r);
        let Ok(poly) = r else { continue };
        assert!(poly.area() > 0.0);
        assert!(isoperimetric_deficit(&poly, &norm).unwrap() >= -1e-12);
        let mut out = Vec::new();
        poly.write_csv(&mut out).unwrap();
        assert_eq!(Polygon::read_csv(out.as_slice()).unwrap(), poly, "{name}");
    }
}

#[test]
fn problem_params_json() {
    for (name, data) in seeds("problem_params_json") {
        let params: ProblemParams = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        check(&name, &params.validate());
        let again: ProblemParams = serde_json::from_str(&serde_json::to_string(&params).unwrap()).unwrap();
        assert_eq!(format!("{params:?}"), format!("{again:?}"), "{name}");
    }
}
