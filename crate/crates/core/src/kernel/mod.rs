//! Layer II fitting: vocabulary, rollup, scaling and kernel weights.

mod fold_change;
mod linear;
mod rollup;
mod scaler;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub use fold_change::{fit_fold_change, raw_fold_changes, FoldChangeParams, DEFAULT_PSEUDOCOUNT};
pub use linear::{elastic_net_logistic, fit_linear, LinearParams, LogisticFit};
pub use rollup::{rollup, rollup_with, SpriteEmbedding};
pub use scaler::{fit_scaler, scale, Scaler};
pub use vocab::{vocabulary_size, Element, Vocabulary};

use crate::error::{Error, Result};
use crate::graph::LabeledDatum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FoldChange,
    Linear,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::FoldChange => "fold_change",
            Variant::Linear => "linear",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fold_change" | "fold-change" => Ok(Variant::FoldChange),
            "linear" => Ok(Variant::Linear),
            other => Err(Error::InvalidParameter(format!("unknown kernel variant '{other}'"))),
        }
    }
}

/// Significance level for the fold-change filter. Values `>= 1`, including
/// infinity, disable the filter. Serialized as a number, or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Alpha(pub f64);

impl Alpha {
    pub const DISABLED: Alpha = Alpha(f64::INFINITY);

    pub fn is_enabled(self) -> bool {
        self.0 < 1.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(Alpha::DISABLED),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|a| *a > 0.0)
                .map(Alpha)
                .ok_or_else(|| Error::InvalidParameter(format!("invalid significance level '{other}'"))),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else {
            serializer.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(a) if a > 0.0 => Ok(Alpha(a)),
            Repr::Number(a) => Err(serde::de::Error::custom(format!("alpha must be positive, got {a}"))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Hyperparameters recorded with a kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelHyper {
    pub tau: f64,
    pub alpha: Alpha,
    pub lambda: f64,
}

/// The fitted lookup table from vocabulary elements to class weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    vocabulary: Vocabulary,
    weights: Vec<f64>,
    scaler: Scaler,
    variant: Variant,
    hyper: KernelHyper,
    fitted_on: String,
}

impl Kernel {
    pub fn new(
        vocabulary: Vocabulary,
        weights: Vec<f64>,
        scaler: Scaler,
        variant: Variant,
        hyper: KernelHyper,
        fitted_on: impl Into<String>,
    ) -> Result<Self> {
        if weights.len() != vocabulary.len() {
            return Err(Error::LengthMismatch {
                what: "kernel weights",
                expected: vocabulary.len(),
                actual: weights.len(),
            });
        }
        if scaler.len() != vocabulary.len() {
            return Err(Error::LengthMismatch {
                what: "kernel idf",
                expected: vocabulary.len(),
                actual: scaler.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("kernel weights".into()));
        }
        Ok(Self {
            vocabulary,
            weights,
            scaler,
            variant,
            hyper,
            fitted_on: fitted_on.into(),
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn concept_count(&self) -> usize {
        self.vocabulary.concept_count()
    }

    pub fn radius(&self) -> usize {
        self.vocabulary.radius()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn hyper(&self) -> KernelHyper {
        self.hyper
    }

    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }

    pub fn lookup(&self, element: Element) -> Result<f64> {
        Ok(self.weights[self.vocabulary.index_of(element)?])
    }

    #[inline]
    pub(crate) fn mono(&self, c: u32) -> f64 {
        self.weights[self.vocabulary.mono_index(c)]
    }

    #[inline]
    pub(crate) fn pair(&self, a: u32, b: u32) -> f64 {
        self.weights[self.vocabulary.bigram_index(a, b)]
    }
}

pub fn kernel_lookup(kernel: &Kernel, element: Element) -> Result<f64> {
    kernel.lookup(element)
}

/// On-disk form of a kernel. Vocabulary order is implied by `K` and `r`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    #[serde(rename = "K")]
    k: usize,
    r: usize,
    variant: Variant,
    tau: f64,
    alpha: Alpha,
    lambda: f64,
    document_count: u64,
    document_frequency: Vec<u64>,
    idf: Vec<f64>,
    weights: Vec<f64>,
    fitted_on: String,
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        KernelFile {
            k: self.concept_count(),
            r: self.radius(),
            variant: self.variant,
            tau: self.hyper.tau,
            alpha: self.hyper.alpha,
            lambda: self.hyper.lambda,
            document_count: self.scaler.document_count,
            document_frequency: self.scaler.document_frequency.clone(),
            idf: self.scaler.idf.clone(),
            weights: self.weights.clone(),
            fitted_on: self.fitted_on.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = KernelFile::deserialize(deserializer)?;
        let vocabulary = Vocabulary::new(file.k, file.r).map_err(serde::de::Error::custom)?;
        if file.document_frequency.len() != file.idf.len() {
            return Err(serde::de::Error::custom("document_frequency and idf lengths differ"));
        }
        let scaler = Scaler {
            idf: file.idf,
            document_frequency: file.document_frequency,
            document_count: file.document_count,
        };
        if scaler.idf.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(serde::de::Error::custom("idf values must be finite and positive"));
        }
        Kernel::new(
            vocabulary,
            file.weights,
            scaler,
            file.variant,
            KernelHyper {
                tau: file.tau,
                alpha: file.alpha,
                lambda: file.lambda,
            },
            file.fitted_on,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// SHA-256 over ids, labels and embedding bytes, in dataset order.
pub fn dataset_fingerprint(data: &[LabeledDatum]) -> String {
    let mut hasher = Sha256::new();
    for datum in data {
        hasher.update(datum.id().as_bytes());
        hasher.update([0u8, datum.label()]);
        hasher.update((datum.graph.vertex_count() as u64).to_le_bytes());
        hasher.update((datum.graph.dim() as u64).to_le_bytes());
        for x in datum.graph.embeddings() {
            hasher.update(x.to_le_bytes());
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(crate) fn check_training_set(embeddings: &[SpriteEmbedding], labels: &[u8]) -> Result<usize> {
    if embeddings.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: embeddings.len(),
            actual: labels.len(),
        });
    }
    let len = embeddings
        .first()
        .ok_or_else(|| Error::Empty("no training sprite embeddings".into()))?
        .len();
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
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidParameter(format!("label must be 0 or 1, got {bad}")));
    }
    for class in [0u8, 1] {
        if !labels.contains(&class) {
            return Err(Error::MissingClass(class));
        }
    }
    Ok(len)
}
