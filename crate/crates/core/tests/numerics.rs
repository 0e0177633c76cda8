use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use textsplit_core::dist::{chi2_cdf, chi2_quantile, normal_cdf, normal_quantile, normal_sf};

#[test]
fn quantile_round_trip_on_dense_grid() {
    let n = 10_000;
    let mut worst = 0.0f64;
    for i in 0..n {
        let p = (i as f64 + 0.5) / n as f64;
        let back = normal_cdf(normal_quantile(p).unwrap());
        worst = worst.max((back - p).abs());
    }
    assert!(worst < 1e-10, "worst round-trip error {worst:e}");
}

#[test]
fn agrees_with_statrs() {
    let std = Normal::new(0.0, 1.0).unwrap();
    for i in -80..=80 {
        let x = i as f64 / 10.0;
        let (a, b) = (normal_cdf(x), std.cdf(x));
        // statrs is itself only accurate to about 1e-9 relative in the tails.
        assert!((a - b).abs() <= 1e-14 + 1e-8 * b, "x={x}: {a} vs {b}");
    }
    for df in [1.0, 2.0, 4.0, 9.0, 30.0] {
        let c = ChiSquared::new(df).unwrap();
        for p in [0.01, 0.5, 0.95, 0.999] {
            let x = chi2_quantile(df, p).unwrap();
            assert!((c.cdf(x) - p).abs() < 1e-9, "df={df} p={p}: x={x}");
        }
    }
}

proptest! {
    #[test]
    fn quantile_is_increasing(p in 1e-12f64..0.5, dp in 1e-9f64..0.4) {
        let q = p + dp;
        prop_assert!(normal_quantile(p).unwrap() < normal_quantile(q).unwrap());
    }

    #[test]
    fn cdf_and_sf_sum_to_one(x in -30.0f64..30.0) {
        prop_assert!((normal_cdf(x) + normal_sf(x) - 1.0).abs() < 1e-15);
        prop_assert!((normal_cdf(-x) - normal_sf(x)).abs() < 1e-15);
    }

    #[test]
    fn chi2_quantile_inverts_cdf(df in 1u32..200, p in 0.001f64..0.999) {
        let x = chi2_quantile(df as f64, p).unwrap();
        prop_assert!((chi2_cdf(df as f64, x) - p).abs() < 1e-9);
    }
}

#[test]
fn out_of_domain_probabilities_are_errors() {
    for p in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(normal_quantile(p).is_err());
    }
    assert!(chi2_quantile(0.5, 0.5).is_err());
}
