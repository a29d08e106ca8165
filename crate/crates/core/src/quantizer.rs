//! Layer I: k-means concept codebook over token embeddings.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabeledDatum, MapGraph, Sprite};

pub const DEFAULT_SAMPLE_SIZE: usize = 10_000;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Independent seedings; the run with the lowest distortion is kept.
    pub restarts: usize,
}

impl QuantizerParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

/// A fitted codebook of `K` centroids in `d` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantizer {
    #[serde(rename = "K")]
    k: usize,
    d: usize,
    seed: u64,
    sample_size: usize,
    centroids: Vec<Vec<f64>>,
}

/// Per-iteration record of a Lloyd run.
#[derive(Clone, Debug, PartialEq)]
pub struct FitTrace {
    /// Sum of squared distances after each assignment step.
    pub distortions: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Draws `min(n, total)` token embeddings uniformly without replacement from
/// the pooled tokens of `data`.
pub fn sample_embeddings(data: &[LabeledDatum], n: usize, seed: u64) -> Result<Vec<&[f32]>> {
    let graphs: Vec<&MapGraph> = data.iter().map(|d| &d.graph).collect();
    sample_graph_embeddings(&graphs, n, seed)
}

pub fn sample_graph_embeddings<'a>(
    graphs: &[&'a MapGraph],
    n: usize,
    seed: u64,
) -> Result<Vec<&'a [f32]>> {
    let mut starts = Vec::with_capacity(graphs.len());
    let mut total = 0usize;
    for g in graphs {
        starts.push(total);
        total += g.vertex_count();
    }
    if total == 0 {
        return Err(Error::Empty("no tokens to sample embeddings from".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, total, n.min(total));
    Ok(picks
        .into_iter()
        .map(|global| {
            let which = starts.partition_point(|&s| s <= global) - 1;
            graphs[which].embedding(global - starts[which])
        })
        .collect())
}

fn squared_distance(x: &[f32], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(&a, &b)| {
            let diff = a as f64 - b;
            diff * diff
        })
        .sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest(centroids: &[Vec<f64>], x: &[f32]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

pub fn fit_quantizer<S: AsRef<[f32]> + Sync>(samples: &[S], params: &QuantizerParams) -> Result<Quantizer> {
    fit_quantizer_traced(samples, params).map(|(q, _)| q)
}

/// Lloyd's algorithm from a k-means++ seeding.
pub fn fit_quantizer_traced<S: AsRef<[f32]> + Sync>(
    samples: &[S],
    params: &QuantizerParams,
) -> Result<(Quantizer, FitTrace)> {
    let k = params.k;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if samples.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need at least K={k} samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].as_ref().len();
    if d == 0 {
        return Err(Error::InvalidParameter("embeddings must have dimension >= 1".into()));
    }
    for s in samples {
        let s = s.as_ref();
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.len(),
            });
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quantizer samples".into()));
        }
    }

    if params.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<Vec<f64>>, FitTrace)> = None;
    for _ in 0..params.restarts {
        let run = lloyd(samples, k, d, params, &mut rng)?;
        let final_distortion = |t: &FitTrace| t.distortions.last().copied().unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|b| final_distortion(&run.1) < final_distortion(&b.1)) {
            best = Some(run);
        }
    }
    let (centroids, trace) = best.expect("at least one restart");

    Ok((
        Quantizer {
            k,
            d,
            seed: params.seed,
            sample_size: samples.len(),
            centroids,
        },
        trace,
    ))
}

/// One seeding followed by Lloyd iterations.
fn lloyd<S: AsRef<[f32]> + Sync>(
    samples: &[S],
    k: usize,
    d: usize,
    params: &QuantizerParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<f64>>, FitTrace)> {
    let mut centroids = plus_plus_init(samples, k, rng)?;
    let mut trace = FitTrace {
        distortions: Vec::new(),
        iterations: 0,
        converged: false,
    };

    for _ in 0..params.max_iters {
        let assignment: Vec<(usize, f64)> = samples
            .par_iter()
            .map(|s| nearest(&centroids, s.as_ref()))
            .collect();
        trace.distortions.push(assignment.iter().map(|a| a.1).sum());
        trace.iterations += 1;

        let mut sums = vec![vec![0.0f64; d]; k];
        let mut counts = vec![0usize; k];
        for (s, &(c, _)) in samples.iter().zip(&assignment) {
            counts[c] += 1;
            for (acc, &x) in sums[c].iter_mut().zip(s.as_ref()) {
                *acc += x as f64;
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((sum, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    sum.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();

        // Empty clusters take over the points farthest from their centroid.
        let mut residual: Vec<f64> = assignment.iter().map(|a| a.1).collect();
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = residual
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |best, (i, &r)| {
                    if r > best.1 {
                        (i, r)
                    } else {
                        best
                    }
                })
                .0;
            updated[c] = samples[far].as_ref().iter().map(|&x| x as f64).collect();
            residual[far] = 0.0;
        }

        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        centroids = updated;
        if shift < params.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((centroids, trace))
}

/// Greedy k-means++: each step draws `2 + ln K` candidates by squared
/// distance and keeps the one that lowers the total potential most.
fn plus_plus_init<S: AsRef<[f32]> + Sync>(samples: &[S], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let to_f64 = |s: &S| s.as_ref().iter().map(|&x| x as f64).collect::<Vec<f64>>();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let first = rng.random_range(0..samples.len());
    let mut centroids = vec![to_f64(&samples[first])];
    let mut dist: Vec<f64> = samples
        .iter()
        .map(|s| squared_distance(s.as_ref(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let mut cumulative = Vec::with_capacity(dist.len());
        let mut total = 0.0;
        for &w in &dist {
            total += w;
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "samples contain fewer than K={k} distinct embeddings"
            )));
        }
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for _ in 0..trials {
            let target = rng.random::<f64>() * total;
            let mut i = cumulative.partition_point(|&c| c <= target).min(dist.len() - 1);
            while dist[i] <= 0.0 {
                // rounding can land on a zero-weight sample; step back to a positive one
                i = if i > 0 { i - 1 } else { dist.iter().position(|&w| w > 0.0).expect("positive total") };
            }
            let candidate = to_f64(&samples[i]);
            let updated: Vec<f64> = samples
                .par_iter()
                .zip(&dist)
                .map(|(s, &dv)| dv.min(squared_distance(s.as_ref(), &candidate)))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, candidate, updated));
            }
        }
        let (_, c, updated) = best.expect("at least one trial");
        dist = updated;
        centroids.push(c);
    }
    Ok(centroids)
}

impl Quantizer {
    /// Builds a quantizer from explicit centroids.
    pub fn from_centroids(centroids: Vec<Vec<f64>>, seed: u64, sample_size: usize) -> Result<Self> {
        let q = Self {
            k: centroids.len(),
            d: centroids.first().map_or(0, Vec::len),
            seed,
            sample_size,
            centroids,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k != self.centroids.len() {
            return Err(Error::Format(format!(
                "quantizer declares K={} but holds {} centroids",
                self.k,
                self.centroids.len()
            )));
        }
        if self.d == 0 || self.centroids.iter().any(|c| c.len() != self.d) {
            return Err(Error::Format(format!("every centroid must have d={} values", self.d)));
        }
        if self.centroids.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("centroids".into()));
        }
        Ok(())
    }

    pub fn concept_count(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn quantize(&self, x: &[f32]) -> Result<u32> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: x.len(),
            });
        }
        Ok(nearest(&self.centroids, x).0 as u32)
    }

    pub fn make_sprite(&self, graph: &MapGraph) -> Result<Sprite> {
        if graph.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: graph.dim(),
            });
        }
        let concepts: Vec<u32> = graph
            .embeddings()
            .par_chunks(self.d)
            .map(|x| nearest(&self.centroids, x).0 as u32)
            .collect();
        Sprite::new(graph.id(), concepts, self.k, graph.adjacency().clone())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build_chain_graph, Adjacency};

    fn graph_from_rows(id: &str, rows: &[Vec<f32>]) -> MapGraph {
        let adj = Arc::new(build_chain_graph(rows.len(), 1).unwrap());
        MapGraph::new(id, rows.concat(), rows[0].len(), adj, None).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let q = Quantizer::from_centroids(vec![vec![0.0], vec![10.0]], 0, 2).unwrap();
        assert_eq!(q.quantize(&[2.0]).unwrap(), 0);
        assert!(q.quantize(&[2.0, 1.0]).is_err());

        let q = Quantizer::from_centroids(
            (0..6).map(|i| vec![i as f64, 0.0]).collect(),
            0,
            6,
        )
        .unwrap();
        assert_eq!(q.quantize(&[3.0, 0.0]).unwrap(), 3);
        // (0,0) is equidistant from centroids 1 and 4.
        let q = Quantizer::from_centroids(
            vec![vec![9.0, 9.0], vec![-1.0, 0.0], vec![9.0, -9.0], vec![-9.0, 9.0], vec![1.0, 0.0]],
            0,
            5,
        )
        .unwrap();
        assert_eq!(q.quantize(&[0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn identical_samples_single_centroid() {
        let samples = vec![vec![1.5f32, -2.0]; 7];
        let q = fit_quantizer(&samples, &QuantizerParams::new(1, 3)).unwrap();
        assert_eq!(q.centroids(), &[vec![1.5, -2.0]]);
    }

    #[test]
    fn too_few_samples() {
        let samples = vec![vec![0.0f32]; 2];
        assert!(fit_quantizer(&samples, &QuantizerParams::new(3, 0)).is_err());
        // Two samples but only one distinct value.
        assert!(fit_quantizer(&samples, &QuantizerParams::new(2, 0)).is_err());
        let bad = vec![vec![f32::NAN]];
        assert!(fit_quantizer(&bad, &QuantizerParams::new(1, 0)).is_err());
    }

    #[test]
    fn k_equals_sample_count_recovers_samples() {
        let samples: Vec<Vec<f32>> = vec![vec![0.0, 1.0], vec![3.0, -1.0], vec![2.5, 2.5], vec![-4.0, 0.5]];
        let q = fit_quantizer(&samples, &QuantizerParams::new(4, 11)).unwrap();
        // Zero-distortion oracle: every sample coincides with some centroid.
        let mut matched: Vec<usize> = samples
            .iter()
            .map(|s| {
                q.centroids()
                    .iter()
                    .position(|c| squared_distance(s, c) == 0.0)
                    .expect("sample is a centroid")
            })
            .collect();
        matched.sort_unstable();
        assert_eq!(matched, vec![0, 1, 2, 3]);
    }

    #[test]
    fn make_sprite_copies_topology() {
        let g = graph_from_rows("g", &[vec![0.1], vec![9.7], vec![0.2]]);
        let q = Quantizer::from_centroids(vec![vec![0.0], vec![10.0]], 0, 2).unwrap();
        let s = q.make_sprite(&g).unwrap();
        assert_eq!(s.concepts(), &[0, 1, 0]);
        assert!(Arc::ptr_eq(s.adjacency(), g.adjacency()));
        assert_eq!(std::mem::size_of_val(s.concepts()), 3 * std::mem::size_of::<u32>());

        let single = MapGraph::new("one", vec![9.0], 1, Arc::new(Adjacency::isolated(1).unwrap()), None).unwrap();
        assert_eq!(q.make_sprite(&single).unwrap().concepts(), &[1]);
        let wide = graph_from_rows("w", &[vec![0.0, 0.0]]);
        assert!(q.make_sprite(&wide).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let samples: Vec<Vec<f32>> = (0..50).map(|i| vec![(i as f32).sin(), (i as f32 * 0.37).cos()]).collect();
        let q = fit_quantizer(&samples, &QuantizerParams::new(4, 5)).unwrap();
        let text = serde_json::to_string(&q).unwrap();
        let back: Quantizer = serde_json::from_str(&text).unwrap();
        assert_eq!(q, back);
        assert!(text.contains("\"K\":4"));
    }
}
