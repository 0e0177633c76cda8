use proptest::prelude::*;
use textsplit_core::multisplit::{cauchy_combine, clamp_p, combine, mpt_combine, Method, MptVariant};

fn pvec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, 2..max_len)
}

proptest! {
    #[test]
    fn cauchy_is_monotone(p in pvec(12), i in 0usize..12, shrink in 0.0f64..1.0) {
        let i = i % p.len();
        let base = cauchy_combine(&p, 0.05).unwrap();
        let mut smaller = p.clone();
        smaller[i] *= shrink;
        let smaller = smaller.iter().map(|&x| x.max(1e-12)).collect::<Vec<_>>();
        let after = cauchy_combine(&smaller, 0.05).unwrap();
        prop_assert!(after.statistic >= base.statistic);
        prop_assert!(after.reject || !base.reject);
    }

    #[test]
    fn combiners_ignore_order(mut p in pvec(12), seed in any::<u64>()) {
        let before: Vec<_> = [Method::Cauchy, Method::Mpt1, Method::Mpt2]
            .iter()
            .map(|&m| combine(m, &p, 0.05, 0.05).unwrap())
            .collect();
        let n = p.len();
        p.rotate_left((seed as usize) % n);
        p.reverse();
        for (m, b) in [Method::Cauchy, Method::Mpt1, Method::Mpt2].iter().zip(&before) {
            let a = combine(*m, &p, 0.05, 0.05).unwrap();
            prop_assert_eq!(a.reject, b.reject);
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * b.statistic.abs().max(1.0));
        }
    }

    #[test]
    fn rho_hat_in_unit_interval(p in pvec(20)) {
        for v in [MptVariant::One, MptVariant::Two] {
            let r = mpt_combine(&p, 0.05, v, 0.05).unwrap().rho_hat.unwrap();
            prop_assert!((0.0..=1.0).contains(&r), "{r}");
        }
    }

    #[test]
    fn clamp_keeps_scores_finite(p in prop::sample::select(vec![0.0, 1e-300, 1.0])) {
        let c = clamp_p(p);
        prop_assert!(c > 0.0 && c < 1.0);
    }
}

#[test]
fn identical_p_values_mean_full_correlation() {
    let r = mpt_combine(&[0.01; 5], 0.05, MptVariant::One, 0.05).unwrap();
    assert_eq!(r.rho_hat, Some(1.0));
    // With ρ̂ = 1 the statistic is the common normal score.
    assert!((r.statistic - 2.326347874040841).abs() < 1e-9);
    assert!(r.reject);
}

#[test]
fn mpt_needs_two_splits() {
    assert!(mpt_combine(&[0.01], 0.05, MptVariant::One, 0.05).is_err());
    assert!(combine(Method::Cauchy, &[0.01], 0.05, 0.05).unwrap().reject);
    assert!(combine(Method::Cauchy, &[], 0.05, 0.05).is_err());
}
