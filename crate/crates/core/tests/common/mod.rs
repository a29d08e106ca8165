#![allow(dead_code)]

use std::sync::Arc;

use prospector::graph::{Adjacency, Sprite};
use prospector::kernel::{Alpha, Element, Kernel, KernelHyper, Scaler, Variant, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;

pub const UNREACHABLE: usize = usize::MAX;

/// All-pairs hop distances by Floyd-Warshall.
pub fn distances(t: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut d = vec![vec![UNREACHABLE; t]; t];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(i, j) in edges {
        d[i][j] = 1;
        d[j][i] = 1;
    }
    for k in 0..t {
        for i in 0..t {
            for j in 0..t {
                if d[i][k] != UNREACHABLE && d[k][j] != UNREACHABLE && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn within(d: &[Vec<usize>], v: usize, r: usize) -> Vec<usize> {
    (0..d.len()).filter(|&u| d[v][u] <= r).collect()
}

/// Monograms once per vertex; bigrams once per ordered pair of distinct
/// vertices at most `r` hops apart.
pub fn rollup_oracle(concepts: &[u32], vocab: &Vocabulary, d: &[Vec<usize>]) -> Vec<f64> {
    let mut counts = vec![0.0; vocab.len()];
    for &c in concepts {
        counts[vocab.index_of(Element::Mono(c)).unwrap()] += 1.0;
    }
    if vocab.radius() > 0 {
        for u in 0..concepts.len() {
            for v in 0..concepts.len() {
                if u != v && d[u][v] <= vocab.radius() {
                    counts[vocab.index_of(Element::bigram(concepts[u], concepts[v])).unwrap()] += 1.0;
                }
            }
        }
    }
    counts
}

/// Sum of monogram weights over the neighborhood plus bigram weights over
/// every unordered pair of distinct neighborhood members.
pub fn k2conv_oracle(concepts: &[u32], kernel: &Kernel, d: &[Vec<usize>]) -> Vec<f64> {
    let r = kernel.radius();
    (0..concepts.len())
        .map(|v| {
            let hood = within(d, v, r);
            let mut score = 0.0;
            for &u in &hood {
                score += kernel.lookup(Element::Mono(concepts[u])).unwrap();
            }
            if r > 0 {
                for (i, &u) in hood.iter().enumerate() {
                    for &w in &hood[i + 1..] {
                        score += kernel.lookup(Element::bigram(concepts[u], concepts[w])).unwrap();
                    }
                }
            }
            score
        })
        .collect()
}

pub fn random_edges(rng: &mut impl Rng, t: usize, density: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..t {
        for j in i + 1..t {
            if rng.random_bool(density) {
                edges.push((i, j));
            }
        }
    }
    edges.shuffle(rng);
    edges
}

pub fn sprite(concepts: Vec<u32>, k: usize, t: usize, edges: &[(usize, usize)]) -> Sprite {
    Sprite::new("s", concepts, k, Arc::new(Adjacency::from_edges(t, edges).unwrap())).unwrap()
}

pub fn kernel(vocab: Vocabulary, weights: Vec<f64>) -> Kernel {
    let n = vocab.len();
    let hyper = KernelHyper {
        tau: 0.0,
        alpha: Alpha::DISABLED,
        lambda: 0.0,
    };
    Kernel::new(vocab, weights, Scaler::from_frequencies(vec![1; n], 1), Variant::FoldChange, hyper, "test").unwrap()
}
