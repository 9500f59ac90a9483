use engage_core::aggregate::{polarity, submodular, zscore_stats};
use engage_core::dims::{emotion_score, LexiconEmotion};
use engage_core::eval::{pearson, spearman};
use engage_core::ingest::RawPost;
use engage_core::popularity::popularity_adjust;
use proptest::prelude::*;

const WORDS: [&str; 8] = [
    "love", "thanks", "great", "table", "rain", "chair", "nice", "grey",
];

// Slack for comparing two differences of nearly equal values.
const ROUNDING: f64 = 1e-14;

fn post(id: usize, body: &str) -> RawPost {
    RawPost {
        id: format!("p{id}"),
        parent_id: Some("root".into()),
        body: body.to_string(),
        ups: 1,
        downs: 0,
        controversiality: false,
        edited: false,
        subreddit: String::new(),
        created_utc: 0,
        votes_present: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn submodular_is_increasing_with_diminishing_returns(
        x in 0.0f64..1e4,
        d in 1e-3f64..1e3,
        alpha in 1e-2f64..1e2,
    ) {
        let f = |v| submodular(v, alpha);
        prop_assert!(f(x + d) > f(x));
        let first = f(x + d) - f(x);
        let second = f(x + 2.0 * d) - f(x + d);
        prop_assert!(first + ROUNDING >= second, "{first} < {second}");
        prop_assert!((0.0..1.0).contains(&f(x)));
    }

    #[test]
    fn adjust_never_shrinks_and_falls_with_exposure(
        raw in 1u32..1000,
        pv in 1u32..10_000,
        step in 1u32..1000,
        m_pv in 1u32..1000,
        m_raw in 1u32..100,
    ) {
        let (raw, m_pv, m_raw) = (raw as f64, m_pv as f64, m_raw as f64);
        let lo = popularity_adjust(raw, pv as f64, m_pv, m_raw).unwrap();
        let hi = popularity_adjust(raw, (pv + step) as f64, m_pv, m_raw).unwrap();
        prop_assert!(lo >= raw);
        prop_assert!(hi >= raw);
        prop_assert!(lo > hi, "pv {pv} -> {lo}, pv {} -> {hi}", pv + step);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn polarity_survives_positive_affine_maps(
        scores in prop::collection::vec(0.0f64..1.0, 3..200),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
        kappa in 0.25f64..2.0,
    ) {
        let moved: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let (Ok(s0), Ok(s1)) = (zscore_stats(&scores), zscore_stats(&moved)) else {
            return Ok(());
        };
        for (x, y) in scores.iter().zip(&moved) {
            prop_assert_eq!(polarity(*x, &s0, kappa), polarity(*y, &s1, kappa));
        }
    }

    #[test]
    fn emotion_ignores_reply_order(
        bodies in prop::collection::vec(prop::collection::vec(prop::sample::select(&WORDS[..]), 1..6), 0..12),
        rot in 0usize..12,
    ) {
        let replies: Vec<RawPost> = bodies
            .iter()
            .enumerate()
            .map(|(i, words)| post(i, &words.join(" ")))
            .collect();
        let mut shuffled = replies.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let scorer = LexiconEmotion::default();
        let a = emotion_score(&replies, &scorer).unwrap();
        let b = emotion_score(&shuffled, &scorer).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn spearman_sees_only_ranks(
        pairs in prop::collection::vec((0u8..40, 0u8..40), 3..120),
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let Ok(base) = spearman(&xs, &ys) else { return Ok(()); };
        let exp: Vec<f64> = xs.iter().map(|x| (x / 10.0).exp()).collect();
        let cube: Vec<f64> = xs.iter().map(|x| x * x * x - 7.0).collect();
        prop_assert_eq!(spearman(&exp, &ys).unwrap(), base);
        prop_assert_eq!(spearman(&cube, &ys).unwrap(), base);
        prop_assert_eq!(spearman(&ys, &xs).unwrap(), base);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn pearson_follows_affine_sign_and_is_symmetric(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..120),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = pearson(&xs, &ys).unwrap();
        prop_assert_eq!(pearson(&ys, &xs).unwrap(), r);
        let up: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let down: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
        prop_assert!((pearson(&up, &ys).unwrap() - r).abs() < 1e-9);
        prop_assert!((pearson(&down, &ys).unwrap() + r).abs() < 1e-9);
    }
}
