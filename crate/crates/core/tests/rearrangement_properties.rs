use proptest::prelude::*;
use wulff_hardy::norms::NormSpec;
use wulff_hardy::rearrangement::{
    convex_symmetrize, decreasing_rearrangement, distribution_function, hardy_1d_bounds, lorentz_norm_maximal,
    lorentz_quasinorm, polya_szego, LorentzIndex, MonotoneProfile, PiecewisePower, ScalarField,
};

fn field() -> impl Strategy<Value = ScalarField> {
    (1usize..9, 1usize..9, 0.1f64..2.0).prop_flat_map(|(a, b, h)| {
        let n = a * b;
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(prop::bool::weighted(0.8), n),
        )
            .prop_map(move |(mut vals, mut mask)| {
                mask[0] = true;
                // repeated values exercise ties
                for v in vals.iter_mut().step_by(3) {
                    *v = (*v * 2.0).round() / 2.0;
                }
                ScalarField::new(vec![a, b], vec![h, 0.5 * h], vec![-1.0, 0.25], vals, mask).unwrap()
            })
    })
}

fn step_profile() -> impl Strategy<Value = MonotoneProfile> {
    prop::collection::vec((0.05f64..2.0, 0.0f64..5.0), 1..8).prop_map(|mut cells| {
        cells.sort_by(|x, y| y.1.total_cmp(&x.1));
        let mut s = 0.0;
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (w, v) in cells {
            s += w;
            breaks.push(s);
            values.push(v);
        }
        MonotoneProfile::steps(&breaks, &values).unwrap()
    })
}

proptest! {
    #[test]
    fn equimeasurability(f in field()) {
        let u = decreasing_rearrangement(&f);
        let mut levels: Vec<f64> = f.masked_values().map(f64::abs).collect();
        levels.push(0.0);
        levels.push(-1.0);
        for t in levels {
            let a = distribution_function(&f, t);
            let b = u.distribution(t);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "t = {t}: {a} vs {b}");
        }
        prop_assert!((u.length() - f.domain_measure()).abs() <= 1e-12 * f.domain_measure().max(1.0)
            || u.length() <= f.domain_measure());
    }

    #[test]
    fn lp_norms_are_preserved(f in field(), p in 1.0f64..4.0) {
        let u = decreasing_rearrangement(&f);
        let a = f.lp_integral(p);
        let b = u.powf(p).unwrap().integral();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn lorentz_nesting(u in step_profile(), m in 1.1f64..4.0, s1 in 1.0f64..3.0, ds in 0.1f64..5.0) {
        let s2 = s1 + ds;
        let small = lorentz_quasinorm(&u, LorentzIndex::new(m, s1).unwrap());
        let large = lorentz_quasinorm(&u, LorentzIndex::new(m, s2).unwrap());
        let c = (s1 / m).powf(1.0 / s1 - 1.0 / s2);
        prop_assert!(large <= c * small * (1.0 + 1e-10) + 1e-300, "{large} > {c}·{small}");
        let sup = lorentz_quasinorm(&u, LorentzIndex::new(m, f64::INFINITY).unwrap());
        prop_assert!(sup <= (s1 / m).powf(1.0 / s1) * small * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn quasinorm_and_maximal_norm_are_equivalent(u in step_profile(), m in 1.1f64..4.0, sigma in prop_oneof![1.0f64..6.0, Just(f64::INFINITY)]) {
        let idx = LorentzIndex::new(m, sigma).unwrap();
        let q = lorentz_quasinorm(&u, idx);
        let n = lorentz_norm_maximal(&u, idx).unwrap();
        let dual = m / (m - 1.0);
        prop_assert!(q <= n * (1.0 + 1e-10) + 1e-300, "{q} > {n}");
        prop_assert!(n <= dual * q * (1.0 + 1e-10) + 1e-300, "{n} > {dual}·{q}");
    }

    #[test]
    fn one_dimensional_hardy(u in step_profile(), lambda in 0.1f64..3.0, gamma in 1.0f64..4.0) {
        let psi: &PiecewisePower = &u;
        let b = hardy_1d_bounds(psi, lambda, gamma).unwrap();
        prop_assert!(b.holds(1e-9), "{b:?}");
    }

    #[test]
    fn csv_round_trip(f in field()) {
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = ScalarField::read_csv(buf.as_slice()).unwrap();
        // the reader crops to the bounding box of the listed cells
        prop_assert_eq!(g.masked_count(), f.masked_count());
        let mut a: Vec<f64> = f.masked_values().collect();
        let mut b: Vec<f64> = g.masked_values().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn binary_round_trip(f in field()) {
        let g = ScalarField::from_bytes(&f.to_bytes()).unwrap();
        prop_assert_eq!(g, f);
    }

    #[test]
    fn parsers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = ScalarField::from_bytes(&bytes);
        let _ = ScalarField::read_csv(bytes.as_slice());
        let _ = MonotoneProfile::read_csv(bytes.as_slice());
    }

    #[test]
    fn profile_csv_round_trip(u in step_profile()) {
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let v = MonotoneProfile::read_csv(buf.as_slice()).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5, 7.0] {
            prop_assert!((u.eval(t) - v.eval(t)).abs() <= 1e-15 * u.eval(t).max(1.0));
        }
    }
}

#[test]
fn binary_header_with_huge_dims_is_rejected() {
    let mut bytes = b"WHSF".to_vec();
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&u64::MAX.to_le_bytes());
    bytes.extend_from_slice(&u64::MAX.to_le_bytes());
    assert!(ScalarField::from_bytes(&bytes).is_err());
}

#[test]
fn polya_szego_on_a_smooth_bump() {
    let n = 96;
    let h = 2.0 / n as f64;
    let f = ScalarField::from_fn(vec![n, n], vec![h, h], vec![-1.0, -1.0], |x| {
        let r2 = x[0] * x[0] + 2.0 * x[1] * x[1];
        (r2 < 1.0).then(|| (1.0 - r2).powi(2) * (1.0 + 0.3 * x[0]))
    })
    .unwrap();
    for norm in [NormSpec::euclidean(2).unwrap(), NormSpec::power(1.0, 2).unwrap()] {
        let ps = polya_szego(&f, &norm, 2.0).unwrap();
        assert!(ps.symmetrized_energy <= ps.field_energy * 1.02, "{ps:?}");
        let sym = convex_symmetrize(&f, &norm).unwrap();
        let a = decreasing_rearrangement(&f);
        let b = decreasing_rearrangement(&sym);
        // same distribution up to the cell resolution of the symmetrized grid
        assert!((a.integral() - b.integral()).abs() < 0.05 * a.integral());
    }
}
