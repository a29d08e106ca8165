use std::sync::Arc;

use prospector::eval::auprc;
use prospector::graph::{build_chain_graph, Adjacency, LabeledDatum, MapGraph};
use prospector::kernel::{elastic_net_logistic, Element, LinearParams};
use prospector::pipeline::{Prospector, ProspectorParams};
use prospector::quantizer::{fit_quantizer, fit_quantizer_traced, QuantizerParams};
use prospector::synth::{generate_dataset, Motif, SynthSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sq_dist(a: &[f64], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, &y)| (x - y as f64).powi(2)).sum()
}

fn nearest(points: &[Vec<f64>], x: &[f32]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if sq_dist(p, x) < sq_dist(&points[best], x) {
            best = i;
        }
    }
    best
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best agreement between two labelings over all label permutations.
fn agreement(a: &[usize], b: &[usize], k: usize) -> f64 {
    let mut table = vec![vec![0usize; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let best = permutations(k)
        .iter()
        .map(|p| (0..k).map(|i| table[i][p[i]]).sum::<usize>())
        .max()
        .unwrap();
    best as f64 / a.len() as f64
}

#[test]
fn separated_clouds_get_one_centroid_each() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let centers = [[-5.0f32, 0.0], [5.0, 1.0]];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for i in 0..200 {
        let c = centers[i % 2];
        points.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
        truth.push(i % 2);
    }
    let q = fit_quantizer(&points, &QuantizerParams::new(2, 3)).unwrap();
    let assigned: Vec<usize> = points.iter().map(|p| q.quantize(p).unwrap() as usize).collect();
    let brute: Vec<usize> = points.iter().map(|p| nearest(q.centroids(), p)).collect();
    assert_eq!(assigned, brute);
    assert_eq!(agreement(&assigned, &truth, 2), 1.0);
    for centroid in q.centroids() {
        let cloud = if centroid[0] < 0.0 { 0 } else { 1 };
        let (lo, hi) = points
            .iter()
            .zip(&truth)
            .filter(|(_, &t)| t == cloud)
            .fold(([f64::MAX; 2], [f64::MIN; 2]), |(lo, hi), (p, _)| {
                (
                    [lo[0].min(p[0] as f64), lo[1].min(p[1] as f64)],
                    [hi[0].max(p[0] as f64), hi[1].max(p[1] as f64)],
                )
            });
        assert!((0..2).all(|j| lo[j] <= centroid[j] && centroid[j] <= hi[j]));
    }
}

#[test]
fn lloyd_distortion_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<Vec<f32>> = (0..500).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    for seed in 0..5 {
        let (_, trace) = fit_quantizer_traced(&points, &QuantizerParams::new(7, seed)).unwrap();
        for w in trace.distortions.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", trace.distortions);
        }
    }
}

#[test]
fn sprite_matches_per_vertex_quantize() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = 300;
    let emb: Vec<f32> = (0..t * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
    let graph = MapGraph::new("g", emb, 3, Arc::new(build_chain_graph(t, 2).unwrap()), None).unwrap();
    let samples: Vec<&[f32]> = (0..t).map(|v| graph.embedding(v)).collect();
    let q = fit_quantizer(&samples, &QuantizerParams::new(5, 0)).unwrap();
    let sprite = q.make_sprite(&graph).unwrap();
    for v in 0..t {
        assert_eq!(sprite.concepts()[v], q.quantize(graph.embedding(v)).unwrap());
        assert_eq!(sprite.concepts()[v] as usize, nearest(q.centroids(), graph.embedding(v)));
    }
    assert_eq!(sprite.adjacency(), graph.adjacency());
}

/// Plain gradient descent on the smooth ridge-logistic objective.
fn ridge_logistic_oracle(rows: &[Vec<f64>], labels: &[u8], strength: f64) -> (Vec<f64>, f64) {
    let d = rows[0].len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..200_000 {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (x, &y) in rows.iter().zip(labels) {
            let z: f64 = x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            for j in 0..d {
                gw[j] += (p - y as f64) * x[j];
            }
            gb += p - y as f64;
        }
        for j in 0..d {
            w[j] -= 1e-3 * (gw[j] + strength * w[j]);
        }
        b -= 1e-3 * gb;
    }
    (w, b)
}

#[test]
fn strong_penalty_matches_gradient_descent_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let labels: Vec<u8> = (0..10).map(|_| rng.random_range(0..2)).collect();
    let slices: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let strength = 50.0;
    let params = LinearParams {
        strength,
        max_iters: 100_000,
        tol: 1e-12,
        ..LinearParams::new(0.0)
    };
    let fit = elastic_net_logistic(&slices, &labels, &params).unwrap();
    let (w, b) = ridge_logistic_oracle(&rows, &labels, strength);
    for (got, want) in fit.coefficients.iter().zip(&w) {
        assert!(got.abs() < 1e-2, "{got}");
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
    assert!((fit.intercept - b).abs() < 1e-6);
}

#[test]
fn elastic_net_satisfies_optimality_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.6)).collect();
    let slices: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    for lambda in [0.0, 0.5, 1.0] {
        let params = LinearParams {
            max_iters: 200_000,
            tol: 1e-13,
            ..LinearParams::new(lambda)
        };
        let fit = elastic_net_logistic(&slices, &labels, &params).unwrap();
        let (l1, l2) = (lambda, 1.0 - lambda);
        let mut gw = [0.0; 5];
        let mut gb = 0.0;
        for (x, &y) in rows.iter().zip(&labels) {
            let z: f64 = x.iter().zip(&fit.coefficients).map(|(a, c)| a * c).sum::<f64>() + fit.intercept;
            let residual = 1.0 / (1.0 + (-z).exp()) - y as f64;
            for j in 0..5 {
                gw[j] += residual * x[j];
            }
            gb += residual;
        }
        assert!(gb.abs() < 1e-5, "intercept gradient {gb}");
        for (j, &wj) in fit.coefficients.iter().enumerate() {
            let smooth = gw[j] + l2 * wj;
            if wj == 0.0 {
                assert!(smooth.abs() <= l1 + 1e-5, "lambda {lambda}, j {j}: {smooth}");
            } else {
                assert!((smooth + l1 * wj.signum()).abs() < 1e-5, "lambda {lambda}, j {j}");
            }
        }
    }
}

#[test]
fn synthetic_components_are_recoverable() {
    let spec = SynthSpec {
        n_train: 20,
        ..SynthSpec::grid_default(21)
    };
    let ds = generate_dataset(&spec).unwrap();
    let mut tokens: Vec<&[f32]> = Vec::new();
    let mut truth = Vec::new();
    for (d, meta) in ds.train.iter().zip(&ds.metadata.data) {
        assert_eq!(d.id(), meta.id);
        for v in 0..d.graph.vertex_count() {
            tokens.push(d.graph.embedding(v));
            truth.push(meta.components[v] as usize);
        }
    }
    let q = fit_quantizer(&tokens, &QuantizerParams::new(spec.concepts, 2)).unwrap();
    let assigned: Vec<usize> = tokens.iter().map(|x| q.quantize(x).unwrap() as usize).collect();
    let score = agreement(&assigned, &truth, spec.concepts);
    assert!(score >= 0.99, "agreement {score}");
}

#[test]
fn bigram_motif_appears_only_in_class_one() {
    let ds = generate_dataset(&SynthSpec::grid_default(5)).unwrap();
    let means = &ds.metadata.means;
    let Motif::Bigram(a, b) = ds.metadata.motifs[0] else { panic!() };
    let (a, b) = (a as usize, b as usize);
    for d in ds.train.iter().chain(&ds.test) {
        let comp: Vec<usize> = (0..d.graph.vertex_count()).map(|v| nearest(means, d.graph.embedding(v))).collect();
        let has_pair = d
            .graph
            .adjacency()
            .edges()
            .any(|(i, j)| (comp[i], comp[j]) == (a, b) || (comp[i], comp[j]) == (b, a));
        assert_eq!(has_pair, d.label() == 1, "{}", d.id());
    }
}

#[test]
fn planted_concept_gets_positive_monogram_weight() {
    let ds = generate_dataset(&SynthSpec::grid_default(8)).unwrap();
    let params = ProspectorParams {
        k: 6,
        r: 1,
        ..ProspectorParams::default()
    };
    let model = Prospector::fit(&ds.train, &params).unwrap();
    for c in [0usize, 1] {
        let mean: Vec<f32> = ds.metadata.means[c].iter().map(|&x| x as f32).collect();
        let concept = model.quantizer.quantize(&mean).unwrap();
        assert!(model.kernel.lookup(Element::Mono(concept)).unwrap() > 0.0);
    }
}

/// Average precision of a uniformly random ranking, estimated by shuffling.
fn shuffled_ap(mask: &[bool], rounds: usize, rng: &mut ChaCha8Rng) -> f64 {
    let positives = mask.iter().filter(|&&m| m).count() as f64;
    let mut order: Vec<usize> = (0..mask.len()).collect();
    let mut total = 0.0;
    for _ in 0..rounds {
        order.shuffle(rng);
        let mut tp = 0.0;
        let mut ap = 0.0;
        for (rank, &i) in order.iter().enumerate() {
            if mask[i] {
                tp += 1.0;
                ap += tp / (rank + 1) as f64;
            }
        }
        total += ap / positives;
    }
    total / rounds as f64
}

#[test]
fn random_maps_score_near_prevalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let t = 200;
    let mut got = 0.0;
    let mut simulated = 0.0;
    for _ in 0..50 {
        let mut mask = vec![false; t];
        mask[..t / 2].iter_mut().for_each(|m| *m = true);
        mask.shuffle(&mut rng);
        let scores: Vec<f64> = (0..t).map(|_| rng.random()).collect();
        got += auprc(&scores, &mask).unwrap() / 50.0;
        simulated += shuffled_ap(&mask, 20, &mut rng) / 50.0;
    }
    assert!((got - 0.5).abs() <= 0.1, "{got}");
    assert!((got - simulated).abs() <= 0.03, "{got} vs {simulated}");
}

#[test]
fn fit_needs_both_classes() {
    let adj = Arc::new(Adjacency::from_edges(2, &[(0, 1)]).unwrap());
    let g = MapGraph::new("a", vec![0.0, 1.0], 1, adj, None).unwrap();
    let data = vec![LabeledDatum::new(g, 0, None).unwrap()];
    let err = Prospector::fit(&data, &ProspectorParams::default()).unwrap_err();
    assert!(err.to_string().contains("class 1"));
}
