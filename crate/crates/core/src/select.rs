//! Hyperparameter grid search and sequential-ranking model selection.
//!
//! Configurations are scored by how well their prospect maps localize the
//! ground-truth masks of the training set itself. Masks never reach kernel
//! fitting; they are only used to rank configurations.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::{k2conv_with, scale_map};
use crate::error::{Error, Result};
use crate::eval::{auprc, best_threshold_metrics, default_thresholds};
use crate::graph::{LabeledDatum, Neighborhoods, Sprite};
use crate::kernel::{dataset_fingerprint, Alpha, Kernel, KernelHyper, Scaler, SpriteEmbedding, Variant, Vocabulary};
use crate::pipeline::{
    build_neighborhoods, fit_kernel_weights, fit_layer_one, make_sprites, rollup_all, scale_all, ProspectorParams,
};
use crate::quantizer::{Quantizer, DEFAULT_SAMPLE_SIZE};

/// Tolerance under which two metric values count as tied during ranking.
pub const RANK_TOLERANCE: f64 = 1e-9;

fn default_k() -> Vec<usize> {
    vec![10, 15, 20, 25, 30]
}
fn default_r() -> Vec<usize> {
    vec![0, 1, 2, 4, 8]
}
fn default_alpha() -> Vec<Alpha> {
    vec![Alpha(0.01), Alpha(0.025), Alpha(0.05), Alpha::DISABLED]
}
fn default_tau() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_lambda() -> Vec<f64> {
    vec![0.5]
}
fn default_variant() -> Vec<Variant> {
    vec![Variant::FoldChange]
}
fn default_sample_size() -> usize {
    DEFAULT_SAMPLE_SIZE
}

/// Value lists to sweep. Missing fields take the standard grid values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    #[serde(rename = "K", default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_r")]
    pub r: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<Alpha>,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_variant")]
    pub variant: Vec<Variant>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self::standard(0)
    }
}

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub variant: Variant,
    #[serde(rename = "K")]
    pub k: usize,
    pub r: usize,
    pub tau: f64,
    pub alpha: Alpha,
    pub lambda: f64,
}

impl Hyperparams {
    /// Stable, human-readable identifier.
    pub fn id(&self) -> String {
        match self.variant {
            Variant::FoldChange => format!("fold_change-K{}-r{}-alpha{}-tau{}", self.k, self.r, self.alpha, self.tau),
            Variant::Linear => format!("linear-K{}-r{}-lambda{}", self.k, self.r, self.lambda),
        }
    }

    pub fn hyper(&self) -> KernelHyper {
        KernelHyper {
            tau: self.tau,
            alpha: self.alpha,
            lambda: self.lambda,
        }
    }

    pub fn to_params(&self, seed: u64, sample_size: usize) -> ProspectorParams {
        ProspectorParams {
            k: self.k,
            r: self.r,
            variant: self.variant,
            tau: self.tau,
            alpha: self.alpha,
            lambda: self.lambda,
            seed,
            sample_size,
            ..ProspectorParams::default()
        }
    }
}

impl HyperGrid {
    /// The sequence/image grid: 300 fold-change configurations.
    pub fn standard(seed: u64) -> Self {
        Self {
            k: default_k(),
            r: default_r(),
            alpha: default_alpha(),
            tau: default_tau(),
            lambda: default_lambda(),
            variant: default_variant(),
            seed,
            sample_size: DEFAULT_SAMPLE_SIZE,
        }
    }

    /// All grid points, ordered by variant, then K, then r, then the
    /// variant's own parameters (alpha then tau, or lambda).
    pub fn configs(&self) -> Result<Vec<Hyperparams>> {
        let fields: [(&str, bool); 6] = [
            ("K", self.k.is_empty()),
            ("r", self.r.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("tau", self.tau.is_empty()),
            ("lambda", self.lambda.is_empty()),
            ("variant", self.variant.is_empty()),
        ];
        if let Some((name, _)) = fields.iter().find(|f| f.1) {
            return Err(Error::Empty(format!("hyperparameter grid has no '{name}' values")));
        }
        if self.k.contains(&0) {
            return Err(Error::InvalidParameter("K values must be at least 1".into()));
        }
        let mut out = Vec::new();
        for &variant in &self.variant {
            for &k in &self.k {
                for &r in &self.r {
                    match variant {
                        Variant::FoldChange => {
                            for &alpha in &self.alpha {
                                for &tau in &self.tau {
                                    out.push(Hyperparams {
                                        variant,
                                        k,
                                        r,
                                        tau,
                                        alpha,
                                        lambda: 0.0,
                                    });
                                }
                            }
                        }
                        Variant::Linear => {
                            for &lambda in &self.lambda {
                                out.push(Hyperparams {
                                    variant,
                                    k,
                                    r,
                                    tau: 0.0,
                                    alpha: Alpha::DISABLED,
                                    lambda,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Training-set localization of one configuration. Failed configurations
/// carry metrics of -1 and an error message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub index: usize,
    pub id: String,
    pub params: Hyperparams,
    pub precision: f64,
    pub mcc: f64,
    pub dice: f64,
    pub auprc: f64,
    pub evaluated: usize,
    pub error: Option<String>,
}

impl ConfigResult {
    fn failed(index: usize, params: Hyperparams, error: &Error) -> Self {
        Self {
            index,
            id: params.id(),
            params,
            precision: -1.0,
            mcc: -1.0,
            dice: -1.0,
            auprc: -1.0,
            evaluated: 0,
            error: Some(error.to_string()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Reuse quantizers, sprites, neighborhoods and rollups across configs.
    pub cache: bool,
    pub thresholds: Vec<f64>,
    /// Config ids to leave out, e.g. ones already present in a ledger.
    pub skip: HashSet<String>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            cache: true,
            thresholds: default_thresholds(),
            skip: HashSet::new(),
        }
    }
}

struct Layer1 {
    sprites: Vec<Sprite>,
}

struct Layer2 {
    vocab: Vocabulary,
    scaler: Scaler,
    scaled: Vec<SpriteEmbedding>,
}

struct Context<'a> {
    data: &'a [LabeledDatum],
    labels: Vec<u8>,
    /// Training data usable for localization scoring.
    scored: Vec<usize>,
    fingerprint: String,
    seed: u64,
    sample_size: usize,
    thresholds: &'a [f64],
}

impl Context<'_> {
    fn layer1(&self, k: usize) -> Result<Layer1> {
        let params = ProspectorParams {
            k,
            seed: self.seed,
            sample_size: self.sample_size,
            ..ProspectorParams::default()
        };
        let quantizer: Quantizer = fit_layer_one(self.data, &params)?;
        let sprites = make_sprites(&quantizer, self.data.par_iter().map(|d| &d.graph))?;
        Ok(Layer1 { sprites })
    }

    fn layer2(&self, layer1: &Layer1, hoods: &[Neighborhoods], k: usize, r: usize) -> Result<Layer2> {
        let vocab = Vocabulary::new(k, r)?;
        let raw = rollup_all(&layer1.sprites, hoods, &vocab)?;
        let (scaler, scaled) = scale_all(&raw)?;
        Ok(Layer2 { vocab, scaler, scaled })
    }

    fn score(
        &self,
        index: usize,
        params: Hyperparams,
        layer1: &Layer1,
        hoods: &[Neighborhoods],
        layer2: &Layer2,
    ) -> Result<ConfigResult> {
        let kernel: Kernel = fit_kernel_weights(
            &layer2.scaled,
            &self.labels,
            &layer2.vocab,
            &layer2.scaler,
            params.variant,
            params.hyper(),
            &self.fingerprint,
        )?;
        let per_datum: Vec<[f64; 4]> = self
            .scored
            .par_iter()
            .map(|&i| {
                let map = scale_map(&k2conv_with(&layer1.sprites[i], &hoods[i], &kernel)?)?;
                let mask = self.data[i].mask().expect("scored data have masks");
                let best = best_threshold_metrics(map.scores(), mask, self.thresholds)?;
                Ok([best.precision, best.mcc, best.dice, auprc(map.scores(), mask)?])
            })
            .collect::<Result<_>>()?;
        let n = per_datum.len() as f64;
        let mean = |j: usize| per_datum.iter().map(|m| m[j]).sum::<f64>() / n;
        Ok(ConfigResult {
            index,
            id: params.id(),
            params,
            precision: mean(0),
            mcc: mean(1),
            dice: mean(2),
            auprc: mean(3),
            evaluated: per_datum.len(),
            error: None,
        })
    }
}

enum Lazy<T> {
    Ready(T),
    Failed(String),
}

/// Runs every grid configuration. Results come back in enumeration order.
pub fn grid_search(data: &[LabeledDatum], grid: &HyperGrid, options: &SearchOptions) -> Result<Vec<ConfigResult>> {
    grid_search_with(data, grid, options, |_| {})
}

/// Like [`grid_search`], also handing each result to `sink` in enumeration
/// order as soon as it is available.
pub fn grid_search_with(
    data: &[LabeledDatum],
    grid: &HyperGrid,
    options: &SearchOptions,
    mut sink: impl FnMut(&ConfigResult),
) -> Result<Vec<ConfigResult>> {
    let configs = grid.configs()?;
    if data.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    for class in [0u8, 1] {
        if !data.iter().any(|d| d.label() == class) {
            return Err(Error::MissingClass(class));
        }
    }
    let scored: Vec<usize> = (0..data.len())
        .filter(|&i| {
            data[i]
                .mask()
                .is_some_and(|m| m.contains(&true) && m.contains(&false))
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::Empty(
            "no training datum has a mask with both positive and negative tokens".into(),
        ));
    }
    let ctx = Context {
        data,
        labels: data.iter().map(LabeledDatum::label).collect(),
        scored,
        fingerprint: dataset_fingerprint(data),
        seed: grid.seed,
        sample_size: grid.sample_size,
        thresholds: &options.thresholds,
    };

    let mut layer1_cache: HashMap<usize, Arc<Lazy<Layer1>>> = HashMap::new();
    let mut hood_cache: HashMap<usize, Arc<Vec<Neighborhoods>>> = HashMap::new();
    let mut layer2_cache: HashMap<(usize, usize), Arc<Lazy<Layer2>>> = HashMap::new();
    let mut results = Vec::with_capacity(configs.len());

    // Consecutive configs sharing (variant, K, r) form one batch.
    let mut start = 0;
    while start < configs.len() {
        let head = configs[start];
        let mut end = start + 1;
        while end < configs.len() && (configs[end].variant, configs[end].k, configs[end].r) == (head.variant, head.k, head.r)
        {
            end += 1;
        }
        let batch: Vec<usize> = (start..end)
            .filter(|&i| !options.skip.contains(&configs[i].id()))
            .collect();
        start = end;
        if batch.is_empty() {
            continue;
        }

        let batch_results: Vec<ConfigResult> = if options.cache {
            let layer1 = layer1_cache
                .entry(head.k)
                .or_insert_with(|| {
                    Arc::new(match ctx.layer1(head.k) {
                        Ok(l) => Lazy::Ready(l),
                        Err(e) => Lazy::Failed(e.to_string()),
                    })
                })
                .clone();
            match &*layer1 {
                Lazy::Failed(message) => batch
                    .iter()
                    .map(|&i| ConfigResult::failed(i, configs[i], &Error::Format(message.clone())))
                    .collect(),
                Lazy::Ready(layer1) => {
                    let hoods = hood_cache
                        .entry(head.r)
                        .or_insert_with(|| Arc::new(build_neighborhoods(&layer1.sprites, head.r)))
                        .clone();
                    let layer2 = layer2_cache
                        .entry((head.k, head.r))
                        .or_insert_with(|| {
                            Arc::new(match ctx.layer2(layer1, &hoods, head.k, head.r) {
                                Ok(l) => Lazy::Ready(l),
                                Err(e) => Lazy::Failed(e.to_string()),
                            })
                        })
                        .clone();
                    match &*layer2 {
                        Lazy::Failed(message) => batch
                            .iter()
                            .map(|&i| ConfigResult::failed(i, configs[i], &Error::Format(message.clone())))
                            .collect(),
                        Lazy::Ready(layer2) => batch
                            .par_iter()
                            .map(|&i| {
                                ctx.score(i, configs[i], layer1, &hoods, layer2)
                                    .unwrap_or_else(|e| ConfigResult::failed(i, configs[i], &e))
                            })
                            .collect(),
                    }
                }
            }
        } else {
            batch
                .par_iter()
                .map(|&i| {
                    let p = configs[i];
                    let run = || -> Result<ConfigResult> {
                        let layer1 = ctx.layer1(p.k)?;
                        let hoods = build_neighborhoods(&layer1.sprites, p.r);
                        let layer2 = ctx.layer2(&layer1, &hoods, p.k, p.r)?;
                        ctx.score(i, p, &layer1, &hoods, &layer2)
                    };
                    run().unwrap_or_else(|e| ConfigResult::failed(i, p, &e))
                })
                .collect()
        };
        for r in batch_results {
            sink(&r);
            results.push(r);
        }
    }
    Ok(results)
}

fn compare_desc(a: f64, b: f64) -> std::cmp::Ordering {
    if (a - b).abs() <= RANK_TOLERANCE {
        std::cmp::Ordering::Equal
    } else if a > b {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

/// Lexicographic descending order on (precision, MCC, Dice, AUPRC), each
/// compared with [`RANK_TOLERANCE`]; full ties keep input order.
pub fn sequential_rank(results: &[ConfigResult]) -> Vec<ConfigResult> {
    let key = |r: &ConfigResult| [r.precision, r.mcc, r.dice, r.auprc];
    let before = |a: &ConfigResult, b: &ConfigResult| {
        let (ka, kb) = (key(a), key(b));
        for j in 0..4 {
            match compare_desc(ka[j], kb[j]) {
                std::cmp::Ordering::Equal => continue,
                other => return other == std::cmp::Ordering::Less,
            }
        }
        false
    };
    // Tolerance equality is not transitive, so use an insertion sort that
    // only relies on pairwise comparisons and never reorders ties.
    let mut ranked: Vec<ConfigResult> = Vec::with_capacity(results.len());
    for r in results {
        let pos = ranked
            .iter()
            .rposition(|placed| !before(r, placed))
            .map_or(0, |p| p + 1);
        ranked.insert(pos, r.clone());
    }
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(index: usize, m: [f64; 4]) -> ConfigResult {
        let params = Hyperparams {
            variant: Variant::FoldChange,
            k: 10,
            r: index,
            tau: 0.0,
            alpha: Alpha::DISABLED,
            lambda: 0.0,
        };
        ConfigResult {
            index,
            id: params.id(),
            params,
            precision: m[0],
            mcc: m[1],
            dice: m[2],
            auprc: m[3],
            evaluated: 1,
            error: None,
        }
    }

    #[test]
    fn standard_grid_has_300_configs() {
        let configs = HyperGrid::standard(0).configs().unwrap();
        assert_eq!(configs.len(), 300);
        assert_eq!((configs[0].k, configs[0].r), (10, 0));
        assert_eq!(configs[1].tau, 1.0);
        assert_eq!(configs[3].alpha, Alpha(0.025));
        let ids: HashSet<String> = configs.iter().map(Hyperparams::id).collect();
        assert_eq!(ids.len(), 300);
    }

    #[test]
    fn linear_configs_and_empty_lists() {
        let mut grid = HyperGrid::standard(0);
        grid.variant = vec![Variant::Linear];
        grid.lambda = vec![0.0, 0.5, 1.0];
        assert_eq!(grid.configs().unwrap().len(), 75);
        grid.r.clear();
        assert!(grid.configs().is_err());
    }

    #[test]
    fn grid_parses_with_defaults() {
        let grid: HyperGrid = serde_json::from_str(r#"{"K": [4], "alpha": [0.05, "inf"]}"#).unwrap();
        assert_eq!(grid.k, vec![4]);
        assert_eq!(grid.r, default_r());
        assert_eq!(grid.alpha, vec![Alpha(0.05), Alpha::DISABLED]);
        assert!(serde_json::from_str::<HyperGrid>(r#"{"kk": [4]}"#).is_err());
    }

    #[test]
    fn ranking_examples() {
        let a = result(0, [0.9, 0.1, 0.0, 0.0]);
        let b = result(1, [0.8, 0.99, 0.0, 0.0]);
        assert_eq!(sequential_rank(&[b.clone(), a.clone()])[0].index, 0);

        let a = result(0, [0.5, 0.4, 0.0, 0.0]);
        let b = result(1, [0.5, 0.3, 0.9, 0.9]);
        assert_eq!(sequential_rank(&[b.clone(), a.clone()])[0].index, 0);

        let tied: Vec<ConfigResult> = (0..5).map(|i| result(i, [0.5, 0.5, 0.5, 0.5])).collect();
        let order: Vec<usize> = sequential_rank(&tied).iter().map(|r| r.index).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);

        let near = [result(0, [0.5, 0.1, 0.0, 0.0]), result(1, [0.5 + 1e-12, 0.2, 0.0, 0.0])];
        assert_eq!(sequential_rank(&near)[0].index, 1);
    }
}
