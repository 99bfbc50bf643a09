use proptest::prelude::*;
use wulff_hardy::norms::{duality_residuals, NormSpec};

fn closed_form_norm() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        (2usize..5).prop_map(|d| NormSpec::euclidean(d).unwrap()),
        (1.2f64..6.0, 2usize..5).prop_map(|(r, d)| NormSpec::power(r, d).unwrap()),
        Just(NormSpec::power(1.0, 2).unwrap()),
        Just(NormSpec::power(f64::INFINITY, 3).unwrap()),
        (prop::collection::vec(0.3f64..3.0, 2..4), 1.3f64..5.0)
            .prop_map(|(w, r)| NormSpec::scaled_axes(w, r).unwrap()),
    ]
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn norm_and_vector() -> impl Strategy<Value = (NormSpec, Vec<f64>)> {
    closed_form_norm().prop_flat_map(|n| {
        let d = n.dim();
        (Just(n), vector(d))
    })
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn positive_homogeneity((norm, xi) in norm_and_vector(), t in 0.01f64..100.0) {
        let scaled: Vec<f64> = xi.iter().map(|x| t * x).collect();
        let a = norm.eval_norm(&scaled).unwrap();
        let b = t * norm.eval_norm(&xi).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        prop_assert!((norm.eval_norm(&neg).unwrap() - norm.eval_norm(&xi).unwrap()).abs() <= 1e-13 * b.max(1.0));
    }

    #[test]
    fn bipolar_identity((norm, xi) in norm_and_vector()) {
        let polar = norm.polar().unwrap();
        let back = polar.polar().unwrap();
        let h = norm.eval_norm(&xi).unwrap();
        prop_assert!((back.eval_norm(&xi).unwrap() - h).abs() <= 1e-12 * h);
        prop_assert!((polar.eval_norm(&xi).unwrap() - norm.eval_polar(&xi).unwrap()).abs() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn reciprocal_bounds((norm, xi) in norm_and_vector()) {
        let (c1, c2) = norm.bounds();
        let e = euclid(&xi);
        let h = norm.eval_norm(&xi).unwrap();
        let hp = norm.eval_polar(&xi).unwrap();
        let slack = 1e-9 * e;
        prop_assert!(c1 * e <= h + slack && h <= c2 * e + slack, "H bounds {c1} {c2} {h} {e}");
        prop_assert!(e / c2 <= hp + slack && hp <= e / c1 + slack, "polar bounds");
    }

    #[test]
    fn cauchy_schwarz_duality((norm, pair) in closed_form_norm().prop_flat_map(|n| {
        let d = n.dim();
        (Just(n), (vector(d), vector(d)))
    })) {
        let (xi, v) = pair;
        let dot: f64 = xi.iter().zip(&v).map(|(a, b)| a * b).sum();
        let bound = norm.eval_norm(&xi).unwrap() * norm.eval_polar(&v).unwrap();
        prop_assert!(dot <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn euler_identity_for_smooth_gauges(norm in closed_form_norm().prop_filter("smooth", |n| {
        match n.kind() {
            wulff_hardy::norms::NormKind::Power { r } => r.is_finite() && *r > 1.0,
            _ => true,
        }
    }), seed in prop::collection::vec(0.1f64..4.0, 4), signs in prop::collection::vec(any::<bool>(), 4)) {
        let xi: Vec<f64> = (0..norm.dim()).map(|i| if signs[i] { seed[i] } else { -seed[i] }).collect();
        let g = norm.grad_norm(&xi).unwrap();
        let euler: f64 = g.iter().zip(&xi).map(|(a, b)| a * b).sum();
        let h = norm.eval_norm(&xi).unwrap();
        prop_assert!((euler - h).abs() <= 1e-11 * h);
        let res = duality_residuals(&norm, &[xi]).unwrap();
        prop_assert!(res.max() <= 1e-9, "{res:?}");
    }

    #[test]
    fn wulff_volume_matches_scaling(w in prop::collection::vec(0.3f64..3.0, 2..4), r in 1.3f64..5.0) {
        let d = w.len();
        let scaled = NormSpec::scaled_axes(w.clone(), r).unwrap();
        let plain = NormSpec::power(r, d).unwrap();
        // H° = ‖v/w‖_{r′}, so W = diag(w)·B_{r′}
        let ratio = scaled.kappa().unwrap() / plain.kappa().unwrap();
        let expected: f64 = w.iter().product();
        prop_assert!((ratio - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn sampled_tables_track_their_source(r in 1.3f64..4.0, xi in vector(2)) {
        let src = NormSpec::power(r, 2).unwrap();
        let table = NormSpec::sample_from(&src, 720).unwrap();
        let exact = src.eval_norm(&xi).unwrap();
        let approx = table.eval_norm(&xi).unwrap();
        prop_assert!((approx - exact).abs() <= 1e-3 * exact);
        let pe = src.eval_polar(&xi).unwrap();
        let pa = table.eval_polar(&xi).unwrap();
        prop_assert!((pa - pe).abs() <= 2e-3 * pe, "{pa} vs {pe}");
    }

    #[test]
    fn norm_json_never_panics(text in ".{0,200}") {
        let _ = serde_json::from_str::<NormSpec>(&text);
    }

    #[test]
    fn norm_json_round_trips(norm in closed_form_norm()) {
        let text = serde_json::to_string(&norm).unwrap();
        let back: NormSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, norm);
    }
}

#[test]
fn structured_json_fuzz_inputs_are_rejected_cleanly() {
    for text in [
        r#"{"kind":"power","r":0.5,"dim":2}"#,
        r#"{"kind":"power","r":"inf","dim":0}"#,
        r#"{"kind":"scaled_axes","w":[1,-1],"r":2}"#,
        r#"{"kind":"sampled","angles":[0,1],"values":[1,1]}"#,
        r#"{"kind":"euclidean","dim":100000000000}"#,
    ] {
        assert!(serde_json::from_str::<NormSpec>(text).is_err(), "{text}");
    }
}
