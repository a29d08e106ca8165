//! Wall-time scaling of attribution on chain graphs.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conv::k2conv_with;
use crate::error::Result;
use crate::graph::{build_chain_graph, MapGraph, Neighborhoods};
use crate::kernel::{Alpha, Kernel, KernelHyper, Scaler, Variant, Vocabulary};
use crate::quantizer::{fit_quantizer, QuantizerParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub r: usize,
    pub dim: usize,
    pub sizes: Vec<usize>,
    /// Each measurement repeats until at least this much time has passed.
    pub min_time_ms: u64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            k: 20,
            r: 2,
            dim: 16,
            sizes: vec![1_000, 10_000, 100_000],
            min_time_ms: 200,
            seed: 0,
        }
    }
}

/// Mean per-run seconds of both attribution steps at one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub quantize_secs: f64,
    pub k2conv_secs: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    /// `t(next) / t(prev)` for consecutive sizes, as (quantize, k2conv).
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .map(|w| (w[1].quantize_secs / w[0].quantize_secs, w[1].k2conv_secs / w[0].k2conv_secs))
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().flat_map(|(a, b)| [a, b]).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,quantize_secs,k2conv_secs,repeats\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.t, row.quantize_secs, row.k2conv_secs, row.repeats));
        }
        out
    }
}

fn time_mean<T>(min_time: Duration, mut f: impl FnMut() -> Result<T>) -> Result<(f64, usize)> {
    let mut repeats = 0;
    let start = Instant::now();
    loop {
        std::hint::black_box(f()?);
        repeats += 1;
        if repeats >= 3 && start.elapsed() >= min_time {
            break;
        }
    }
    Ok((start.elapsed().as_secs_f64() / repeats as f64, repeats))
}

fn random_chain(t: usize, dim: usize, rng: &mut ChaCha8Rng) -> Result<MapGraph> {
    let embeddings = (0..t * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    MapGraph::new(format!("chain-{t}"), embeddings, dim, Arc::new(build_chain_graph(t, 1)?), None)
}

pub fn run_scaling(config: &ScalingConfig) -> Result<ScalingReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train = random_chain(config.k * 50, config.dim, &mut rng)?;
    let samples: Vec<&[f32]> = (0..train.vertex_count()).map(|v| train.embedding(v)).collect();
    let quantizer = fit_quantizer(&samples, &QuantizerParams::new(config.k, config.seed))?;
    let vocab = Vocabulary::new(config.k, config.r)?;
    let weights = (0..vocab.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scaler = Scaler::from_frequencies(vec![1; vocab.len()], 1);
    let hyper = KernelHyper {
        tau: 0.0,
        alpha: Alpha::DISABLED,
        lambda: 0.0,
    };
    let kernel = Kernel::new(vocab, weights, scaler, Variant::FoldChange, hyper, "benchmark")?;
    let min_time = Duration::from_millis(config.min_time_ms);

    let mut rows = Vec::with_capacity(config.sizes.len());
    for &t in &config.sizes {
        let graph = random_chain(t, config.dim, &mut rng)?;
        let (quantize_secs, q_reps) = time_mean(min_time, || quantizer.make_sprite(&graph))?;
        let sprite = quantizer.make_sprite(&graph)?;
        let (k2conv_secs, c_reps) = time_mean(min_time, || {
            let hoods = Neighborhoods::build(sprite.adjacency(), config.r);
            k2conv_with(&sprite, &hoods, &kernel)
        })?;
        rows.push(ScalingRow {
            t,
            quantize_secs,
            k2conv_secs,
            repeats: q_reps.min(c_reps),
        });
    }
    Ok(ScalingReport {
        config: config.clone(),
        rows,
    })
}
