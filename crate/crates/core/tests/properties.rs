mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use prospector::conv::k2conv;
use prospector::eval::{auprc, ap_at_thresholds, default_thresholds, threshold_metrics, Confusion};
use prospector::graph::{connected_components, Adjacency, Neighborhoods, Sprite};
use prospector::kernel::{raw_fold_changes, rollup, vocabulary_size, Element, SpriteEmbedding, Vocabulary};
use prospector::stats::mann_whitney_exact;

use common::{distances, k2conv_oracle, kernel, rollup_oracle, within};

/// `(t, edges)` with `t` in `1..=max_t`.
fn graph(max_t: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_t).prop_flat_map(|t| {
        let pairs: Vec<(usize, usize)> = (0..t).flat_map(|i| (i + 1..t).map(move |j| (i, j))).collect();
        let n = pairs.len();
        (Just(t), proptest::sample::subsequence(pairs, 0..=n.min(3 * t)))
    })
}

fn sprite_case(max_t: usize, max_k: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>, usize, Vec<u32>)> {
    (graph(max_t), 1..=max_k).prop_flat_map(|((t, edges), k)| {
        (Just(t), Just(edges), Just(k), proptest::collection::vec(0..k as u32, t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rollup_matches_brute_force((t, edges, k, concepts) in sprite_case(24, 6), r in 0usize..4) {
        let vocab = Vocabulary::new(k, r).unwrap();
        let s = common::sprite(concepts.clone(), k, t, &edges);
        let got = rollup(&s, r, &vocab).unwrap();
        prop_assert_eq!(got.values, rollup_oracle(&concepts, &vocab, &distances(t, &edges)));
    }

    #[test]
    fn k2conv_matches_brute_force(
        (t, edges, k, concepts) in sprite_case(20, 5),
        r in 0usize..4,
        seed in any::<u64>(),
    ) {
        let vocab = Vocabulary::new(k, r).unwrap();
        let weights = (0..vocab.len()).map(|i| ((seed.wrapping_mul(i as u64 + 7) % 2001) as f64 - 1000.0) / 250.0).collect();
        let kern = kernel(vocab, weights);
        let s = common::sprite(concepts.clone(), k, t, &edges);
        let got = k2conv(&s, &kern).unwrap();
        let want = k2conv_oracle(&concepts, &kern, &distances(t, &edges));
        for (a, b) in got.scores().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn neighborhoods_are_symmetric_and_nested((t, edges) in graph(20), r in 0usize..4) {
        let adj = Adjacency::from_edges(t, &edges).unwrap();
        let d = distances(t, &edges);
        let small = Neighborhoods::build(&adj, r);
        let large = Neighborhoods::build(&adj, r + 1);
        for v in 0..t {
            let hood: BTreeSet<u32> = small.of(v).iter().copied().collect();
            let want: BTreeSet<u32> = within(&d, v, r).into_iter().map(|u| u as u32).collect();
            prop_assert_eq!(&hood, &want);
            prop_assert!(hood.contains(&(v as u32)));
            let bigger: BTreeSet<u32> = large.of(v).iter().copied().collect();
            prop_assert!(hood.is_subset(&bigger));
            for &u in &hood {
                prop_assert!(small.of(u as usize).contains(&(v as u32)));
            }
        }
    }

    #[test]
    fn components_partition_the_subset((t, edges) in graph(20), picks in proptest::collection::vec(any::<bool>(), 20)) {
        let adj = Adjacency::from_edges(t, &edges).unwrap();
        let subset: Vec<usize> = (0..t).filter(|&v| picks[v]).collect();
        let comps = connected_components(&adj, &subset);
        let mut union: Vec<usize> = comps.iter().flatten().copied().collect();
        union.sort_unstable();
        prop_assert_eq!(&union, &subset);
        let label = |v: usize| comps.iter().position(|c| c.contains(&v));
        for &(i, j) in &edges {
            if picks[i] && picks[j] {
                prop_assert_eq!(label(i), label(j));
            }
        }
        for comp in &comps {
            // Each component is internally connected through subset vertices.
            let mut reached = vec![comp[0]];
            let mut frontier = vec![comp[0]];
            while let Some(v) = frontier.pop() {
                for &u in adj.neighbors(v) {
                    let u = u as usize;
                    if picks[u] && !reached.contains(&u) {
                        reached.push(u);
                        frontier.push(u);
                    }
                }
            }
            prop_assert_eq!(reached.len(), comp.len());
        }
    }

    #[test]
    fn k2conv_is_permutation_equivariant(
        (t, edges, k, concepts) in sprite_case(16, 4),
        r in 0usize..3,
        perm_seed in any::<u64>(),
    ) {
        let mut perm: Vec<usize> = (0..t).collect();
        let mut state = perm_seed;
        for i in (1..t).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let vocab = Vocabulary::new(k, r).unwrap();
        let weights = (0..vocab.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let kern = kernel(vocab, weights);
        let base = k2conv(&common::sprite(concepts.clone(), k, t, &edges), &kern).unwrap();
        let moved_edges: Vec<(usize, usize)> = edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        let mut moved_concepts = vec![0; t];
        for v in 0..t {
            moved_concepts[perm[v]] = concepts[v];
        }
        let moved = k2conv(&common::sprite(moved_concepts, k, t, &moved_edges), &kern).unwrap();
        for v in 0..t {
            prop_assert!((base.scores()[v] - moved.scores()[perm[v]]).abs() <= 1e-9);
        }
    }

    #[test]
    fn k2conv_is_local(
        (t, edges, k, concepts) in sprite_case(16, 4),
        r in 0usize..3,
        target in any::<prop::sample::Index>(),
    ) {
        let w = target.index(t);
        let mut changed = concepts.clone();
        changed[w] = (changed[w] + 1) % k as u32;
        let vocab = Vocabulary::new(k, r).unwrap();
        let weights = (0..vocab.len()).map(|i| (i as f64 * 1.3).cos()).collect();
        let kern = kernel(vocab, weights);
        let a = k2conv(&common::sprite(concepts, k, t, &edges), &kern).unwrap();
        let b = k2conv(&common::sprite(changed, k, t, &edges), &kern).unwrap();
        let d = distances(t, &edges);
        for v in 0..t {
            if d[v][w] > r {
                prop_assert_eq!(a.scores()[v], b.scores()[v]);
            }
        }
    }

    #[test]
    fn threshold_metrics_match_confusion_oracle(
        cells in proptest::collection::vec((0u8..=10, any::<bool>()), 2..60),
        ti in 0usize..11,
    ) {
        let scores: Vec<f64> = cells.iter().map(|c| c.0 as f64 / 10.0).collect();
        let mask: Vec<bool> = cells.iter().map(|c| c.1).collect();
        prop_assume!(mask.contains(&true) && mask.contains(&false));
        let t = default_thresholds()[ti];
        let (mut tp, mut fp, mut tn, mut fn_) = (0f64, 0f64, 0f64, 0f64);
        for (&s, &m) in scores.iter().zip(&mask) {
            match (s >= t, m) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, false) => tn += 1.0,
                (false, true) => fn_ += 1.0,
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        let mcc = if denom > 0.0 { (tp * tn - fp * fn_) / denom } else { 0.0 };
        let dice = 2.0 * tp / (2.0 * tp + fp + fn_);
        let got = threshold_metrics(&scores, &mask, t).unwrap();
        prop_assert!((got.precision - precision).abs() <= 1e-12);
        prop_assert!((got.mcc - mcc).abs() <= 1e-12);
        prop_assert!((got.dice - dice).abs() <= 1e-12);
        let c = Confusion::at_threshold(&scores, &mask, t);
        prop_assert_eq!((c.tp, c.fp, c.tn, c.fn_), (tp as usize, fp as usize, tn as usize, fn_ as usize));
    }

    #[test]
    fn auprc_is_invariant_to_monotone_transforms(
        cells in proptest::collection::vec((0u32..20, any::<bool>()), 2..60),
    ) {
        let mask: Vec<bool> = cells.iter().map(|c| c.1).collect();
        prop_assume!(mask.contains(&true) && mask.contains(&false));
        let raw: Vec<f64> = cells.iter().map(|c| c.0 as f64).collect();
        let cubed: Vec<f64> = raw.iter().map(|x| x * x * x - 5.0).collect();
        prop_assert_eq!(auprc(&raw, &mask).unwrap(), auprc(&cubed, &mask).unwrap());
    }

    #[test]
    fn metrics_are_permutation_invariant(
        cells in proptest::collection::vec((0u8..=10, any::<bool>()), 2..60),
    ) {
        let scores: Vec<f64> = cells.iter().map(|c| c.0 as f64 / 10.0).collect();
        let mask: Vec<bool> = cells.iter().map(|c| c.1).collect();
        prop_assume!(mask.contains(&true) && mask.contains(&false));
        let rev_scores: Vec<f64> = scores.iter().rev().copied().collect();
        let rev_mask: Vec<bool> = mask.iter().rev().copied().collect();
        let th = default_thresholds();
        prop_assert!((auprc(&scores, &mask).unwrap() - auprc(&rev_scores, &rev_mask).unwrap()).abs() <= 1e-12);
        prop_assert!(
            (ap_at_thresholds(&scores, &mask, &th).unwrap() - ap_at_thresholds(&rev_scores, &rev_mask, &th).unwrap()).abs()
                <= 1e-12
        );
    }

    #[test]
    fn fold_changes_flip_sign_with_labels(
        rows in proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, 4), 4..12),
    ) {
        let n = rows.len();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let flipped: Vec<u8> = labels.iter().map(|&y| 1 - y).collect();
        let data: Vec<SpriteEmbedding> = rows.into_iter().map(|values| SpriteEmbedding { values, scaled: true }).collect();
        let a = raw_fold_changes(&data, &labels, 1e-8).unwrap();
        let b = raw_fold_changes(&data, &flipped, 1e-8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x + y).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_mann_whitney_matches_enumeration(
        s0 in proptest::collection::vec(0u8..5, 1..=6),
        s1 in proptest::collection::vec(0u8..5, 1..=6),
    ) {
        let a: Vec<f64> = s0.iter().map(|&x| x as f64).collect();
        let b: Vec<f64> = s1.iter().map(|&x| x as f64).collect();
        let (num, den) = enumerate_p(&a, &b);
        let p = mann_whitney_exact(&a, &b).unwrap();
        prop_assert_eq!(p.numerator * den, num * p.denominator);
    }
}

/// Two-sided exact p-value of the rank sum by listing every assignment of
/// pooled values to the first group.
pub fn enumerate_p(a: &[f64], b: &[f64]) -> (u128, u128) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    // midrank * 2 keeps ties integral
    let rank2: Vec<i64> = pooled
        .iter()
        .map(|&x| {
            let below = pooled.iter().filter(|&&y| y < x).count() as i64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as i64;
            2 * below + equal + 1
        })
        .collect();
    let n0 = a.len();
    let total: i64 = rank2.iter().sum();
    // deviation of 2*n*sum0 from n0*total, scaled to stay integral
    let dev = |sum0: i64| (n as i64 * sum0 - n0 as i64 * total).abs();
    let observed = dev(rank2[..n0].iter().sum());
    let (mut hits, mut all) = (0u128, 0u128);
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize != n0 {
            continue;
        }
        let sum0: i64 = (0..n).filter(|i| bits >> i & 1 == 1).map(|i| rank2[i]).sum();
        all += 1;
        if dev(sum0) >= observed {
            hits += 1;
        }
    }
    (hits, all)
}

#[test]
fn vocabulary_law_holds() {
    for k in 1..=30usize {
        for r in [0usize, 1, 2, 4, 8] {
            let vocab = Vocabulary::new(k, r).unwrap();
            let expected = if r == 0 { k } else { 2 * k + k * (k - 1) / 2 };
            assert_eq!(vocab.len(), expected);
            assert_eq!(vocabulary_size(k, r), expected);
            let distinct: BTreeSet<Element> = vocab.entries().iter().copied().collect();
            assert_eq!(distinct.len(), expected);
            for (i, &e) in vocab.entries().iter().enumerate() {
                assert_eq!(vocab.index_of(e).unwrap(), i);
            }
        }
    }
}

#[test]
fn sprite_rejects_out_of_range_concepts() {
    let adj = Arc::new(Adjacency::from_edges(2, &[(0, 1)]).unwrap());
    assert!(Sprite::new("s", vec![0, 3], 3, adj).is_err());
}
