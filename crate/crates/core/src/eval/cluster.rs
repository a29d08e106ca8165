use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::SpriteEmbedding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Average,
}

/// One agglomeration step. Ids below `n` are leaves; the cluster created by
/// step `s` has id `n + s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaf_count: usize,
    pub merges: Vec<Merge>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Agglomerative clustering under Euclidean distance. At each step the
/// closest pair of live clusters merges; exact ties go to the pair with the
/// smallest cluster ids.
pub fn cluster_sprite_embeddings(embeddings: &[SpriteEmbedding], linkage: Linkage) -> Result<Dendrogram> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::Empty("clustering needs at least two embeddings".into()));
    }
    let len = embeddings[0].len();
    for z in embeddings {
        if z.len() != len {
            return Err(Error::LengthMismatch {
                what: "sprite embedding",
                expected: len,
                actual: z.len(),
            });
        }
        if z.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sprite embedding".into()));
        }
    }
    let Linkage::Average = linkage;

    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(&embeddings[i].values, &embeddings[j].values);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    // Slot i holds a live cluster with the given id and size.
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut live = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            if !live[i] {
                continue;
            }
            for j in i + 1..n {
                if !live[j] {
                    continue;
                }
                let (lo, hi) = (ids[i].min(ids[j]), ids[i].max(ids[j]));
                let candidate = (dist[i][j], lo, hi, i, j);
                let better = match best {
                    None => true,
                    Some((d, blo, bhi, _, _)) => {
                        candidate.0 < d || (candidate.0 == d && (lo, hi) < (blo, bhi))
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let (d, lo, hi, i, j) = best.expect("at least two live clusters");
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for k in 0..n {
            if live[k] && k != i && k != j {
                let merged = (ni * dist[i][k] + nj * dist[j][k]) / (ni + nj);
                dist[i][k] = merged;
                dist[k][i] = merged;
            }
        }
        live[j] = false;
        sizes[i] += sizes[j];
        ids[i] = n + step;
        merges.push(Merge {
            left: lo,
            right: hi,
            distance: d,
            size: sizes[i],
        });
    }
    Ok(Dendrogram { leaf_count: n, merges })
}

impl Dendrogram {
    /// Flat labels for `k` clusters, obtained by stopping after `n - k`
    /// merges. Labels are numbered in order of each cluster's smallest leaf.
    pub fn flat_labels(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.leaf_count;
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("cluster count must be in 1..={n}, got {k}")));
        }
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        for (step, m) in self.merges.iter().take(n - k).enumerate() {
            parent[m.left] = n + step;
            parent[m.right] = n + step;
        }
        let root = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let mut names = std::collections::HashMap::new();
        Ok((0..n)
            .map(|leaf| {
                let next = names.len();
                *names.entry(root(leaf)).or_insert(next)
            })
            .collect())
    }
}
