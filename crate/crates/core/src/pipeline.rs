//! End-to-end fitting and inference: layer I, then layer II.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::{k2conv_with, scale_map};
use crate::error::{Error, Result};
use crate::graph::{LabeledDatum, MapGraph, Neighborhoods, ProspectMap, Sprite};
use crate::kernel::{
    dataset_fingerprint, fit_fold_change, fit_linear, fit_scaler, rollup_with, Alpha, FoldChangeParams, Kernel,
    KernelHyper, LinearParams, Scaler, SpriteEmbedding, Variant, Vocabulary,
};
use crate::quantizer::{
    fit_quantizer, sample_embeddings, Quantizer, QuantizerParams, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS, DEFAULT_SAMPLE_SIZE,
    DEFAULT_TOL,
};

/// Every setting needed to fit a prospector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProspectorParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub r: usize,
    pub variant: Variant,
    pub tau: f64,
    pub alpha: Alpha,
    pub lambda: f64,
    pub seed: u64,
    pub sample_size: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for ProspectorParams {
    fn default() -> Self {
        Self {
            k: 10,
            r: 1,
            variant: Variant::FoldChange,
            tau: 0.0,
            alpha: Alpha::DISABLED,
            lambda: 0.5,
            seed: 0,
            sample_size: DEFAULT_SAMPLE_SIZE,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

impl ProspectorParams {
    pub fn quantizer_params(&self) -> QuantizerParams {
        QuantizerParams {
            k: self.k,
            seed: self.seed,
            max_iters: self.max_iters,
            tol: self.tol,
            restarts: self.restarts,
        }
    }

    pub fn hyper(&self) -> KernelHyper {
        KernelHyper {
            tau: self.tau,
            alpha: self.alpha,
            lambda: self.lambda,
        }
    }
}

/// Fits the concept codebook on a uniform token sample of `train`.
pub fn fit_layer_one(train: &[LabeledDatum], params: &ProspectorParams) -> Result<Quantizer> {
    let samples = sample_embeddings(train, params.sample_size, params.seed)?;
    fit_quantizer(&samples, &params.quantizer_params())
}

pub fn make_sprites<'a>(quantizer: &Quantizer, graphs: impl IntoParallelIterator<Item = &'a MapGraph>) -> Result<Vec<Sprite>> {
    graphs.into_par_iter().map(|g| quantizer.make_sprite(g)).collect()
}

pub fn build_neighborhoods(sprites: &[Sprite], radius: usize) -> Vec<Neighborhoods> {
    sprites
        .par_iter()
        .map(|s| Neighborhoods::build(s.adjacency(), radius))
        .collect()
}

/// Raw rollup counts of every sprite.
pub fn rollup_all(sprites: &[Sprite], hoods: &[Neighborhoods], vocab: &Vocabulary) -> Result<Vec<SpriteEmbedding>> {
    sprites
        .par_iter()
        .zip(hoods)
        .map(|(s, h)| rollup_with(s, h, vocab))
        .collect()
}

/// TF-IDF scaler fitted on `raw`, together with the scaled embeddings.
pub fn scale_all(raw: &[SpriteEmbedding]) -> Result<(Scaler, Vec<SpriteEmbedding>)> {
    let scaler = fit_scaler(raw)?;
    let scaled = raw.par_iter().map(|z| scaler.scale(z)).collect::<Result<Vec<_>>>()?;
    Ok((scaler, scaled))
}

/// Fits kernel weights on already-scaled sprite embeddings.
pub fn fit_kernel_weights(
    scaled: &[SpriteEmbedding],
    labels: &[u8],
    vocab: &Vocabulary,
    scaler: &Scaler,
    variant: Variant,
    hyper: KernelHyper,
    fitted_on: &str,
) -> Result<Kernel> {
    match variant {
        Variant::FoldChange => fit_fold_change(
            scaled,
            labels,
            vocab,
            scaler,
            &FoldChangeParams::new(hyper.tau, hyper.alpha),
            fitted_on,
        ),
        Variant::Linear => fit_linear(scaled, labels, vocab, scaler, &LinearParams::new(hyper.lambda), fitted_on),
    }
}

/// A fitted two-layer prospector head.
#[derive(Clone, Debug, PartialEq)]
pub struct Prospector {
    pub quantizer: Quantizer,
    pub kernel: Kernel,
}

impl Prospector {
    pub fn fit(train: &[LabeledDatum], params: &ProspectorParams) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training set is empty".into()));
        }
        for class in [0u8, 1] {
            if !train.iter().any(|d| d.label() == class) {
                return Err(Error::MissingClass(class));
            }
        }
        let quantizer = fit_layer_one(train, params)?;
        let sprites = make_sprites(&quantizer, train.par_iter().map(|d| &d.graph))?;
        let vocab = Vocabulary::new(params.k, params.r)?;
        let hoods = build_neighborhoods(&sprites, params.r);
        let raw = rollup_all(&sprites, &hoods, &vocab)?;
        let (scaler, scaled) = scale_all(&raw)?;
        let labels: Vec<u8> = train.iter().map(LabeledDatum::label).collect();
        let kernel = fit_kernel_weights(
            &scaled,
            &labels,
            &vocab,
            &scaler,
            params.variant,
            params.hyper(),
            &dataset_fingerprint(train),
        )?;
        Ok(Self { quantizer, kernel })
    }

    /// Checks that the quantizer and kernel agree on `K`.
    pub fn new(quantizer: Quantizer, kernel: Kernel) -> Result<Self> {
        if quantizer.concept_count() != kernel.concept_count() {
            return Err(Error::ConceptMismatch {
                expected: quantizer.concept_count(),
                actual: kernel.concept_count(),
            });
        }
        Ok(Self { quantizer, kernel })
    }

    pub fn sprite(&self, graph: &MapGraph) -> Result<Sprite> {
        self.quantizer.make_sprite(graph)
    }

    /// Unscaled K2conv scores.
    pub fn attribute_raw(&self, graph: &MapGraph) -> Result<ProspectMap> {
        let sprite = self.sprite(graph)?;
        let hoods = Neighborhoods::build(sprite.adjacency(), self.kernel.radius());
        k2conv_with(&sprite, &hoods, &self.kernel)
    }

    /// Min-max scaled prospect map.
    pub fn attribute(&self, graph: &MapGraph) -> Result<ProspectMap> {
        scale_map(&self.attribute_raw(graph)?)
    }

    /// Scaled sprite embedding of one graph under this prospector's scaler.
    pub fn embed(&self, graph: &MapGraph) -> Result<SpriteEmbedding> {
        let sprite = self.sprite(graph)?;
        let hoods = Neighborhoods::build(sprite.adjacency(), self.kernel.radius());
        let raw = rollup_with(&sprite, &hoods, self.kernel.vocabulary())?;
        self.kernel.scaler().scale(&raw)
    }
}
