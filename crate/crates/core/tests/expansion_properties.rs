use proptest::prelude::*;

use multipole_core::expansion::{
    alternative_multipole, classical_multipole, direct_coulomb, exponential_form, first_term_series,
    AlternativeSeries, Geometry,
};
use multipole_core::specfun::{bessel_eval, BesselArg, SeriesTruncation};

fn all_methods(g: &Geometry, series: &AlternativeSeries) -> [f64; 5] {
    [
        direct_coulomb(g).unwrap(),
        classical_multipole(g, 12),
        series.eval(g),
        exponential_form(g),
        first_term_series(g, 12),
    ]
}

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn swapping_radii_is_bit_exact(r1 in 0.01f64..50.0, ratio in 0.01f64..0.99, x in -1.0f64..1.0) {
        let series = AlternativeSeries::new(SeriesTruncation::new(8, 12).unwrap()).unwrap();
        let r2 = r1 * ratio;
        let a = all_methods(&Geometry::new(r1, r2, x).unwrap(), &series);
        let b = all_methods(&Geometry::new(r2, r1, x).unwrap(), &series);
        for (u, v) in a.iter().zip(&b) {
            prop_assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn scaling_radii_scales_output(r1 in 0.1f64..10.0, ratio in 0.01f64..0.95, x in -1.0f64..1.0, lambda in 0.01f64..100.0) {
        let series = AlternativeSeries::new(SeriesTruncation::new(8, 12).unwrap()).unwrap();
        let g = Geometry::new(r1, r1 * ratio, x).unwrap();
        let scaled = Geometry::new(lambda * r1, lambda * r1 * ratio, x).unwrap();
        let a = all_methods(&g, &series);
        let b = all_methods(&scaled, &series);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(close_rel(u / lambda, *v, 1e-13), "{} vs {}", u / lambda, v);
        }
    }

    #[test]
    fn classical_error_within_geometric_tail(t in 0.01f64..0.95, x in -1.0f64..1.0, l_max in 0usize..80, r in 0.1f64..10.0) {
        let g = Geometry::new(r, r * t, x).unwrap();
        let direct = direct_coulomb(&g).unwrap();
        let err = (classical_multipole(&g, l_max) - direct).abs();
        let bound = t.powi(l_max as i32 + 1) / (1.0 - t) / g.r_greater();
        let roundoff = 64.0 * f64::EPSILON * direct;
        prop_assert!(err <= bound * (1.0 + 1e-12) + roundoff, "err {err} bound {bound}");
    }

    #[test]
    fn exponential_form_exact_for_perpendicular_radii(r1 in 0.01f64..50.0, r2 in 0.01f64..50.0) {
        let g = Geometry::new(r1, r2, 0.0).unwrap();
        prop_assert_eq!(exponential_form(&g).to_bits(), direct_coulomb(&g).unwrap().to_bits());
    }

    #[test]
    fn zero_s_slice_is_first_term_series(t in 0.01f64..1.0, x in -1.0f64..1.0, l_max in 0usize..30) {
        let g = Geometry::from_ratio(t, x).unwrap();
        let alt = alternative_multipole(&g, SeriesTruncation::new(0, l_max).unwrap()).unwrap();
        let first = first_term_series(&g, l_max);
        prop_assert!((alt - first).abs() <= 1e-13 * first.abs().max(1.0));
    }
}

#[test]
fn bessel_argument_modes_agree() {
    for i in 1..=9 {
        let t = f64::from(i) / 10.0;
        for l in 0..=5 {
            let by_t = bessel_eval(l, BesselArg::T(t), 20).unwrap();
            let by_alpha = bessel_eval(l, BesselArg::Alpha(t.atan()), 20).unwrap();
            assert!((by_t - by_alpha).abs() <= 1e-12 * by_t.abs().max(1.0), "l={l} t={t}");
        }
    }
}

#[test]
fn all_methods_reduce_to_inverse_greater_radius_near_zero_ratio() {
    let series = AlternativeSeries::new(SeriesTruncation::new(10, 10).unwrap()).unwrap();
    let g = Geometry::new(2.0, 1e-9, 0.3).unwrap();
    for v in all_methods(&g, &series) {
        assert!((v - 0.5).abs() <= 1e-9);
    }
}
