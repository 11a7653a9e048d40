use fbmlab::kernels::{self, dual_fbm_corr, dual_fbs_corr, dual_ifbm_corr, fbm_cov, fbs_cov, ifbm_cov, sech_corr};
use fbmlab::persistence::{fit_counts, wilson, FitInput, PsiModel, Z95};
use fbmlab::Hurst;
use proptest::prelude::*;

fn hurst() -> impl Strategy<Value = f64> {
    0.02f64..0.98
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn covariances_are_symmetric(h in hurst(), s in -20f64..20.0, t in -20f64..20.0, u in 0f64..9.0, v in 0f64..9.0) {
        let h = Hurst::new(h).unwrap();
        prop_assert_eq!(fbm_cov(h, s, t), fbm_cov(h, t, s));
        prop_assert!(close(ifbm_cov(h, s, t), ifbm_cov(h, t, s), 1e-12));
        prop_assert_eq!(fbs_cov(h, [u, v], [v, u]), fbs_cov(h, [v, u], [u, v]));
    }

    #[test]
    fn self_similarity(h in hurst(), s in 0.01f64..10.0, t in 0.01f64..10.0, lam in 0.1f64..10.0) {
        let hh = Hurst::new(h).unwrap();
        prop_assert!(close(fbm_cov(hh, lam * s, lam * t), lam.powf(2.0 * h) * fbm_cov(hh, s, t), 1e-11));
        prop_assert!(close(ifbm_cov(hh, lam * s, lam * t), lam.powf(2.0 * h + 2.0) * ifbm_cov(hh, s, t), 1e-9));
        prop_assert!(close(
            fbs_cov(hh, [lam * s, t], [lam * t, s]),
            lam.powf(2.0 * h) * fbs_cov(hh, [s, t], [t, s]),
            1e-11
        ));
    }

    #[test]
    fn dual_correlations_are_unit_at_zero_and_bounded(h in hurst(), t in 0f64..40.0, t2 in 0f64..40.0) {
        let hh = Hurst::new(h).unwrap();
        for c in [dual_fbm_corr(hh, t), dual_ifbm_corr(hh, t), dual_fbs_corr(hh, t, t2), sech_corr(t, 0.5)] {
            prop_assert!(c > -1e-15 && c <= 1.0 + 1e-15, "{c}");
        }
        prop_assert!((dual_fbm_corr(hh, 0.0) - 1.0).abs() < 1e-15);
        prop_assert!((dual_ifbm_corr(hh, 0.0) - 1.0).abs() < 1e-12);
        prop_assert!(close(dual_fbs_corr(hh, t, t2), dual_fbm_corr(hh, t) * dual_fbm_corr(hh, t2), 1e-12));
    }

    #[test]
    fn dual_is_normalized_lamperti_transform(h in hurst(), t in 0f64..6.0) {
        let hh = Hurst::new(h).unwrap();
        let via = ifbm_cov(hh, 1.0, t.exp()) / (ifbm_cov(hh, 1.0, 1.0) * ifbm_cov(hh, t.exp(), t.exp())).sqrt();
        // the direct ratio cancels as t grows; the closed form does not
        prop_assert!((dual_ifbm_corr(hh, t) - via).abs() < 1e-9);
    }

    #[test]
    fn single_precision_tracks_double(h in 0.05f64..0.95, s in 0.1f64..5.0, t in 0.1f64..5.0) {
        let h32 = kernels::Hurst::<f32>::new(h as f32).unwrap();
        let h64 = Hurst::new(h as f32 as f64).unwrap();
        let (s32, t32) = (s as f32, t as f32);
        let (s64, t64) = (s32 as f64, t32 as f64);
        prop_assert!(close(fbm_cov(h32, s32, t32) as f64, fbm_cov(h64, s64, t64), 1e-4));
        prop_assert!((dual_ifbm_corr(h32, t32) as f64 - dual_ifbm_corr(h64, t64)).abs() < 1e-4);
    }

    #[test]
    fn fitter_is_exact_on_planted_decay(
        theta in 0.01f64..2.0,
        c in 0f64..1.0,
        model in prop::sample::select(vec![PsiModel::LogT, PsiModel::LogTSq, PsiModel::LinearT, PsiModel::SquareT]),
        start in 1u32..4,
        len in 4usize..9,
    ) {
        let ts: Vec<f64> = (0..len).map(|k| match model {
            PsiModel::LogT | PsiModel::LogTSq => 2f64.powi((start + k as u32) as i32),
            _ => 0.25 * (start as f64 + k as f64),
        }).collect();
        // enough trials that rounding the survivor counts is below 1e-12 relative
        let n: usize = 1 << 60;
        let pts: Vec<FitInput> = ts.iter().map(|&t| {
            let p = (-c - theta * model.eval(t)).exp();
            FitInput { t, n_survive: (p * n as f64).round() as u64, n_trials: n }
        }).collect();
        prop_assume!(pts.iter().all(|p| p.n_survive as f64 > 1e12));
        let f = fit_counts(&pts, model).unwrap();
        prop_assert!((f.theta_hat - theta).abs() < 1e-10, "{} vs {theta}", f.theta_hat);
        prop_assert!((f.intercept - c).abs() < 1e-9);
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1usize..100_000, frac in 0f64..=1.0) {
        let k = (frac * n as f64).floor() as u64;
        let (lo, hi) = wilson(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }
}
