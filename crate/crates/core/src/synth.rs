//! Synthetic datasets obeying the multiple instance assumption.
//!
//! Token embeddings come from a Gaussian mixture with one component per
//! true concept. Class 0 data draw every token from background components;
//! class 1 data additionally contain planted regions drawn from motif
//! components, and their masks mark exactly those tokens.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_chain_graph, build_geometric_graph, build_grid_graph, Adjacency, LabeledDatum, MapGraph};

pub const GENERATOR_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// Sequence with edges between tokens at most `hop` apart.
    Chain { hop: usize },
    /// Row-major image grid with 4- or 8-way connectivity.
    Grid {
        height: usize,
        width: usize,
        connectivity: usize,
    },
    /// Points uniform in a cube of volume `T`, linked within `epsilon`.
    Geometric { epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motif {
    Monogram(u32),
    /// Two concepts interleaved inside each region so they touch.
    Bigram(u32, u32),
}

impl Motif {
    pub fn concepts(&self) -> Vec<u32> {
        match *self {
            Motif::Monogram(c) => vec![c],
            Motif::Bigram(a, b) if a == b => vec![a],
            Motif::Bigram(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub topology: Topology,
    /// Token count range for chain and geometric data; grids use `height * width`.
    pub t_min: usize,
    pub t_max: usize,
    pub dim: usize,
    /// True concept count.
    pub concepts: usize,
    /// Isotropic standard deviation around each unit-norm component mean.
    pub sigma: f64,
    /// Class 1 datum `i` carries motif `i % motifs.len()`.
    pub motifs: Vec<Motif>,
    /// Target fraction of class 1 tokens inside planted regions.
    pub prevalence: f64,
    /// Number of disjoint, mutually non-adjacent regions per class 1 datum.
    pub components: usize,
    /// Data per class.
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// A 20x20 8-way grid with six concepts and a bigram motif.
    pub fn grid_default(seed: u64) -> Self {
        Self {
            topology: Topology::Grid {
                height: 20,
                width: 20,
                connectivity: 8,
            },
            t_min: 400,
            t_max: 400,
            dim: 16,
            concepts: 6,
            sigma: 0.1,
            motifs: vec![Motif::Bigram(0, 1)],
            prevalence: 0.2,
            components: 1,
            n_train: 50,
            n_test: 25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return bad("prevalence must lie in (0, 1)");
        }
        if self.components == 0 {
            return bad("region component count must be at least 1");
        }
        if self.dim == 0 || self.concepts == 0 {
            return bad("dimension and concept count must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and positive");
        }
        if self.motifs.is_empty() {
            return bad("at least one motif is required");
        }
        if self.motif_concepts().iter().any(|&c| c as usize >= self.concepts) {
            return bad("motif concepts must be below the concept count");
        }
        if self.background_concepts().is_empty() {
            return bad("motif concepts leave no background concept");
        }
        match self.topology {
            Topology::Grid { height, width, .. } if height == 0 || width == 0 => bad("grid sides must be positive"),
            Topology::Chain { hop: 0 } => bad("chain hop must be positive"),
            Topology::Geometric { epsilon } if !(epsilon > 0.0) => bad("epsilon must be positive"),
            Topology::Grid { .. } => Ok(()),
            _ if self.t_min == 0 || self.t_min > self.t_max => bad("token range must satisfy 1 <= t_min <= t_max"),
            _ => Ok(()),
        }
    }

    pub fn motif_concepts(&self) -> BTreeSet<u32> {
        self.motifs.iter().flat_map(Motif::concepts).collect()
    }

    pub fn background_concepts(&self) -> Vec<u32> {
        let motif = self.motif_concepts();
        (0..self.concepts as u32).filter(|c| !motif.contains(c)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumMetadata {
    pub id: String,
    pub split: Split,
    pub label: u8,
    /// Index into the spec's motif list, for class 1 data.
    pub motif: Option<usize>,
    /// Planted regions as vertex lists.
    pub regions: Vec<Vec<usize>>,
    /// Generating mixture component of every token.
    pub components: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub generator_version: String,
    pub seed: u64,
    pub motifs: Vec<Motif>,
    pub means: Vec<Vec<f64>>,
    pub data: Vec<DatumMetadata>,
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub train: Vec<LabeledDatum>,
    pub test: Vec<LabeledDatum>,
    pub metadata: SynthMetadata,
}

/// Seed for stream `stream`, item `index`, mixed by splitmix64.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit-norm means with every pairwise distance above `4 * sigma`.
pub fn component_means(concepts: usize, dim: usize, sigma: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
    let min_gap = 4.0 * sigma;
    for _ in 0..1000 {
        let means: Vec<Vec<f64>> = (0..concepts)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        let separated = (0..concepts).all(|i| {
            (i + 1..concepts).all(|j| {
                let d2: f64 = means[i].iter().zip(&means[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() > min_gap
            })
        });
        if separated {
            return Ok(means);
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not place {concepts} unit-norm means in {dim} dimensions more than {min_gap} apart"
    )))
}

fn draw_embeddings(components: &[u32], means: &[Vec<f64>], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut out = Vec::with_capacity(components.len() * means[0].len());
    for &c in components {
        for &m in &means[c as usize] {
            let noise: f64 = rng.sample(StandardNormal);
            out.push((m + sigma * noise) as f32);
        }
    }
    out
}

fn build_topology(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<(Adjacency, Vec<Vec<f64>>)> {
    match spec.topology {
        Topology::Chain { hop } => {
            let t = rng.random_range(spec.t_min..=spec.t_max);
            let coords = (0..t).map(|i| vec![i as f64]).collect();
            Ok((build_chain_graph(t, hop)?, coords))
        }
        Topology::Grid {
            height,
            width,
            connectivity,
        } => {
            let coords = (0..height * width)
                .map(|v| vec![(v / width) as f64, (v % width) as f64])
                .collect();
            Ok((build_grid_graph(height, width, connectivity)?, coords))
        }
        Topology::Geometric { epsilon } => {
            let t = rng.random_range(spec.t_min..=spec.t_max);
            let side = (t as f64).cbrt();
            let points: Vec<[f64; 3]> = (0..t)
                .map(|_| {
                    [
                        rng.random::<f64>() * side,
                        rng.random::<f64>() * side,
                        rng.random::<f64>() * side,
                    ]
                })
                .collect();
            let adjacency = build_geometric_graph(&points, epsilon)?;
            Ok((adjacency, points.iter().map(|p| p.to_vec()).collect()))
        }
    }
}

/// Grows `sizes.len()` connected regions by BFS from random anchors. Each
/// finished region and its neighbors are closed to later regions, so the
/// regions end up pairwise non-adjacent. Returns regions with BFS depths.
fn plant_regions(adjacency: &Adjacency, sizes: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<(usize, usize)>>> {
    let t = adjacency.vertex_count();
    let mut blocked = vec![false; t];
    let mut regions = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut anchors: Vec<usize> = (0..t).filter(|&v| !blocked[v]).collect();
        let mut grown = None;
        for _ in 0..64 {
            let Some(&anchor) = anchors.choose(rng) else { break };
            let mut seen = vec![false; t];
            let mut region = Vec::with_capacity(size);
            let mut queue = VecDeque::from([(anchor, 0usize)]);
            seen[anchor] = true;
            while let Some((u, depth)) = queue.pop_front() {
                region.push((u, depth));
                if region.len() == size {
                    break;
                }
                for &w in adjacency.neighbors(u) {
                    let w = w as usize;
                    if !seen[w] && !blocked[w] {
                        seen[w] = true;
                        queue.push_back((w, depth + 1));
                    }
                }
            }
            if region.len() == size {
                grown = Some(region);
                break;
            }
            anchors.retain(|&a| a != anchor);
        }
        let region = grown.ok_or_else(|| {
            Error::InvalidParameter(format!("could not place a connected region of {size} tokens"))
        })?;
        for &(u, _) in &region {
            blocked[u] = true;
            for &w in adjacency.neighbors(u) {
                blocked[w as usize] = true;
            }
        }
        regions.push(region);
    }
    Ok(regions)
}

fn region_sizes(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

struct Job {
    split: Split,
    label: u8,
    index: usize,
}

fn jobs(n_train: usize, n_test: usize) -> Vec<Job> {
    let mut out = Vec::new();
    for (split, n) in [(Split::Train, n_train), (Split::Test, n_test)] {
        for label in [0u8, 1] {
            for index in 0..n {
                out.push(Job { split, label, index });
            }
        }
    }
    out
}

fn datum_id(job: &Job) -> String {
    let split = match job.split {
        Split::Train => "train",
        Split::Test => "test",
    };
    format!("{split}-{}-{:04}", job.label, job.index)
}

fn assemble(results: Vec<(Job, LabeledDatum, DatumMetadata)>, seed: u64, motifs: Vec<Motif>, means: Vec<Vec<f64>>) -> SynthDataset {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut data = Vec::new();
    for (job, datum, meta) in results {
        match job.split {
            Split::Train => train.push(datum),
            Split::Test => test.push(datum),
        }
        data.push(meta);
    }
    SynthDataset {
        train,
        test,
        metadata: SynthMetadata {
            generator_version: GENERATOR_VERSION.to_string(),
            seed,
            motifs,
            means,
            data,
        },
    }
}

/// Draws the train and test sets described by `spec`.
pub fn generate_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let means = component_means(spec.concepts, spec.dim, spec.sigma, spec.seed)?;
    let background = spec.background_concepts();
    let results = jobs(spec.n_train, spec.n_test)
        .into_par_iter()
        .enumerate()
        .map(|(n, job)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1, n as u64));
            let (adjacency, coords) = build_topology(spec, &mut rng)?;
            let t = adjacency.vertex_count();
            let mut components: Vec<u32> = (0..t).map(|_| *background.choose(&mut rng).expect("nonempty")).collect();
            let mut mask = vec![false; t];
            let mut regions = Vec::new();
            let mut motif_index = None;
            if job.label == 1 {
                let total = (spec.prevalence * t as f64).floor() as usize;
                if total < spec.components {
                    return Err(Error::InvalidParameter(format!(
                        "floor(prevalence * T) = {total} tokens cannot form {} regions",
                        spec.components
                    )));
                }
                let which = job.index % spec.motifs.len();
                motif_index = Some(which);
                for region in plant_regions(&adjacency, &region_sizes(total, spec.components), &mut rng)? {
                    for &(v, depth) in &region {
                        mask[v] = true;
                        components[v] = match spec.motifs[which] {
                            Motif::Monogram(c) => c,
                            Motif::Bigram(a, b) => {
                                if depth % 2 == 0 {
                                    a
                                } else {
                                    b
                                }
                            }
                        };
                    }
                    let mut vertices: Vec<usize> = region.iter().map(|&(v, _)| v).collect();
                    vertices.sort_unstable();
                    regions.push(vertices);
                }
            }
            let embeddings = draw_embeddings(&components, &means, spec.sigma, &mut rng);
            let id = datum_id(&job);
            let graph = MapGraph::new(id.clone(), embeddings, spec.dim, Arc::new(adjacency), Some(coords))?;
            let datum = LabeledDatum::new(graph, job.label, Some(mask))?;
            let meta = DatumMetadata {
                id,
                split: job.split,
                label: job.label,
                motif: motif_index,
                regions,
                components,
            };
            Ok((job, datum, meta))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(results, spec.seed, spec.motifs.clone(), means))
}

/// Settings for the chained-trigram dataset on hop-1 chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigramSpec {
    pub t: usize,
    pub dim: usize,
    /// True concept count; concepts 0, 1 and 2 form the motif.
    pub concepts: usize,
    pub sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl TrigramSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            t: 40,
            dim: 16,
            concepts: 10,
            sigma: 0.1,
            n_train: 50,
            n_test: 25,
            seed,
        }
    }
}

/// Class 1 data hold concepts 0, 1 and 2 at positions `p`, `p + r` and
/// `p + 2r`; class 0 data hold each of them once, pairwise more than `r`
/// hops apart. Masks mark the three motif tokens.
pub fn plant_chain_trigram(spec: &TrigramSpec, r: usize) -> Result<SynthDataset> {
    if r == 0 {
        return Err(Error::InvalidParameter("trigram spacing r must be at least 1".into()));
    }
    if spec.t < 2 * r + 3 {
        return Err(Error::InvalidParameter(format!(
            "T={} is too short for a trigram at spacing r={r}; need T >= {}",
            spec.t,
            2 * r + 3
        )));
    }
    if spec.concepts < 4 {
        return Err(Error::InvalidParameter("need at least one background concept beyond the motif".into()));
    }
    let means = component_means(spec.concepts, spec.dim, spec.sigma, spec.seed)?;
    let adjacency = Arc::new(build_chain_graph(spec.t, 1)?);
    let coords: Vec<Vec<f64>> = (0..spec.t).map(|i| vec![i as f64]).collect();
    let background: Vec<u32> = (3..spec.concepts as u32).collect();
    let results = jobs(spec.n_train, spec.n_test)
        .into_par_iter()
        .enumerate()
        .map(|(n, job)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 2, n as u64));
            let t = spec.t;
            let mut components: Vec<u32> = (0..t).map(|_| *background.choose(&mut rng).expect("nonempty")).collect();
            let positions: [usize; 3] = if job.label == 1 {
                let p = rng.random_range(0..t - 2 * r);
                [p, p + r, p + 2 * r]
            } else {
                loop {
                    let mut pos = [0usize; 3];
                    for slot in pos.iter_mut() {
                        *slot = rng.random_range(0..t);
                    }
                    let apart = |a: usize, b: usize| a.abs_diff(b) > r;
                    if apart(pos[0], pos[1]) && apart(pos[0], pos[2]) && apart(pos[1], pos[2]) {
                        break pos;
                    }
                }
            };
            for (concept, &v) in positions.iter().enumerate() {
                components[v] = concept as u32;
            }
            let mut mask = vec![false; t];
            let mut regions = Vec::new();
            if job.label == 1 {
                for &v in &positions {
                    mask[v] = true;
                }
                regions.push(positions.to_vec());
            }
            let embeddings = draw_embeddings(&components, &means, spec.sigma, &mut rng);
            let id = datum_id(&job);
            let graph = MapGraph::new(id.clone(), embeddings, spec.dim, adjacency.clone(), Some(coords.clone()))?;
            let datum = LabeledDatum::new(graph, job.label, Some(mask))?;
            let meta = DatumMetadata {
                id,
                split: job.split,
                label: job.label,
                motif: (job.label == 1).then_some(0),
                regions,
                components,
            };
            Ok((job, datum, meta))
        })
        .collect::<Result<Vec<_>>>()?;
    let motifs = vec![Motif::Monogram(0), Motif::Monogram(1), Motif::Monogram(2)];
    Ok(assemble(results, spec.seed, motifs, means))
}
