//! Invariants of the decision rules.

use cirauth::auth::{accepted_count, channel_difference, threshold_decide, threshold_free, Scorer};
use cirauth::baseline::{Autoencoder, AutoencoderConfig};
use cirauth::nn::TrainConfig;
use cirauth::Matrix;
use proptest::prelude::*;

fn scores_and_truth() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..40).prop_flat_map(|q| {
        (
            prop::collection::vec(prop_oneof![0.0..100.0f64, (0u8..5).prop_map(f64::from)], q),
            prop::collection::vec(any::<bool>(), q),
        )
    })
}

fn legit(v: &[cirauth::auth::AuthVerdict]) -> Vec<bool> {
    v.iter().map(|v| v.legitimate).collect()
}

proptest! {
    #[test]
    fn alpha_count_is_exact((scores, truth) in scores_and_truth(), alpha in 0.001..=1.0f64) {
        let v = threshold_free(&scores, &truth, alpha).unwrap();
        let q = scores.len();
        let want = ((alpha * q as f64 + 0.5).floor() as usize).min(q);
        prop_assert_eq!(v.iter().filter(|v| v.legitimate).count(), want);
        prop_assert_eq!(accepted_count(alpha, q), want);
    }

    #[test]
    fn permutation_moves_verdicts_with_records(
        (scores, truth) in scores_and_truth(),
        alpha in 0.05..=1.0f64,
        seed in any::<u64>(),
    ) {
        // Distinct scores: with ties the index order decides, by design.
        let scores: Vec<f64> = scores.iter().enumerate().map(|(i, s)| s + i as f64 * 1e-6).collect();
        let q = scores.len();
        let mut perm: Vec<usize> = (0..q).collect();
        let mut state = seed;
        for i in (1..q).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let ps: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let pt: Vec<bool> = perm.iter().map(|&i| truth[i]).collect();
        let base = legit(&threshold_free(&scores, &truth, alpha).unwrap());
        let permuted = legit(&threshold_free(&ps, &pt, alpha).unwrap());
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(permuted[k], base[i]);
        }
    }

    #[test]
    fn rank_rule_ignores_monotone_transforms((scores, truth) in scores_and_truth(), alpha in 0.05..=1.0f64) {
        let warped: Vec<f64> = scores.iter().map(|s| (s * 0.3).exp() + s.powi(3)).collect();
        prop_assert_eq!(
            legit(&threshold_free(&scores, &truth, alpha).unwrap()),
            legit(&threshold_free(&warped, &truth, alpha).unwrap())
        );
    }

    #[test]
    fn raising_threshold_never_revokes((scores, truth) in scores_and_truth(), a in 0.0..120.0f64, b in 0.0..120.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let low = threshold_decide(&scores, &truth, lo).unwrap();
        let high = threshold_decide(&scores, &truth, hi).unwrap();
        for (l, h) in low.iter().zip(&high) {
            prop_assert!(!l.legitimate || h.legitimate);
        }
    }
}

fn tiny_scorer() -> Autoencoder {
    let mut ae = Autoencoder::new(AutoencoderConfig {
        input_dim: 6,
        h: 3,
        train: TrainConfig {
            epochs: 5,
            batch_size: 4,
            ..TrainConfig::default()
        },
    })
    .unwrap();
    ae.train(&Matrix::from_fn(6, 16, |r, c| {
        ((r * 7 + c * 3) as f64).sin()
    }))
    .unwrap();
    ae
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_difference_is_a_squared_metric(
        a in prop::collection::vec(-3.0..3.0f64, 6),
        b in prop::collection::vec(-3.0..3.0f64, 6),
        c in prop::collection::vec(-3.0..3.0f64, 6),
    ) {
        let s = tiny_scorer();
        prop_assert_eq!(channel_difference(&s, &a, &a).unwrap(), 0.0);
        let ab = channel_difference(&s, &a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - channel_difference(&s, &b, &a).unwrap()).abs() <= 1e-12 * ab.max(1.0));
        let bc = channel_difference(&s, &b, &c).unwrap();
        let ac = channel_difference(&s, &a, &c).unwrap();
        prop_assert!(ac.sqrt() <= ab.sqrt() + bc.sqrt() + 1e-9);
    }
}

#[test]
fn untrained_scorer_is_rejected() {
    let ae = Autoencoder::new(AutoencoderConfig {
        input_dim: 2,
        h: 1,
        train: TrainConfig::default(),
    })
    .unwrap();
    assert!(matches!(
        ae.embed(&Matrix::zeros(2, 1)),
        Err(cirauth::Error::Untrained)
    ));
    assert!(channel_difference(&ae, &[0.0, 1.0], &[1.0, 0.0]).is_err());
}
