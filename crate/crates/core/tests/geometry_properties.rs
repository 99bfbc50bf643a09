use proptest::prelude::*;
use wulff_hardy::geometry::{
    anisotropic_perimeter, coarea_residual, isoperimetric_deficit, midpoint_levels, wulff_polygon, Polygon,
};
use wulff_hardy::rearrangement::ScalarField;
use wulff_hardy::NormSpec;

fn norms() -> [NormSpec; 3] {
    [
        NormSpec::euclidean(2).unwrap(),
        NormSpec::power(1.0, 2).unwrap(),
        NormSpec::scaled_axes(vec![1.0, 2.5], 3.0).unwrap(),
    ]
}

fn convex_polygon() -> impl Strategy<Value = Polygon> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3..24)
        .prop_filter_map("degenerate hull", |pts| {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            Polygon::convex_hull(&pts).ok().filter(|p| p.area() > 1e-6)
        })
}

fn bump(n: usize) -> ScalarField {
    let h = 2.4 / n as f64;
    ScalarField::from_fn(vec![n, n], vec![h, h], vec![-1.2, -1.2], |x| {
        let r2 = x[0] * x[0] + 1.5 * x[1] * x[1];
        Some((1.0 - r2).max(0.0).powi(2) * (1.0 + 0.2 * x[0]))
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn isoperimetric_deficit_is_nonnegative(poly in convex_polygon()) {
        for norm in norms() {
            let d = isoperimetric_deficit(&poly, &norm).unwrap();
            prop_assert!(d >= -1e-6, "deficit {d}");
        }
    }

    #[test]
    fn perimeter_comparability(poly in convex_polygon()) {
        for norm in norms() {
            let (c1, c2) = norm.bounds();
            let ph = anisotropic_perimeter(&poly, &norm).unwrap();
            let p = poly.perimeter();
            prop_assert!(c1 * p <= ph * (1.0 + 1e-12) && ph <= c2 * p * (1.0 + 1e-12));
        }
    }

    #[test]
    fn polygon_csv_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = Polygon::read_csv(bytes.as_slice());
    }

    #[test]
    fn polygon_csv_round_trip(poly in convex_polygon()) {
        let mut buf = Vec::new();
        poly.write_csv(&mut buf).unwrap();
        prop_assert_eq!(Polygon::read_csv(buf.as_slice()).unwrap(), poly);
    }
}

#[test]
fn wulff_polygons_close_the_deficit() {
    for norm in norms() {
        let mut last = f64::INFINITY;
        for n in [16, 32, 64, 128, 256, 512] {
            let d = isoperimetric_deficit(&wulff_polygon(&norm, n).unwrap(), &norm).unwrap();
            assert!(d >= -1e-9 && d <= last + 1e-12, "n = {n}: {d} after {last}");
            last = d;
        }
        assert!(last < 1e-3, "{last}");
    }
}

#[test]
fn coarea_residual_shrinks_under_refinement() {
    for norm in norms() {
        let coarse = bump(128);
        let fine = bump(256);
        let a = coarea_residual(&coarse, &norm, &midpoint_levels(&coarse, 64)).unwrap();
        let b = coarea_residual(&fine, &norm, &midpoint_levels(&fine, 64)).unwrap();
        assert!(b.residual <= 0.05, "{}", b.residual);
        assert!(b.residual < a.residual, "{} then {}", a.residual, b.residual);
    }
}
