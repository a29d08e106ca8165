use serde::{Deserialize, Serialize};

use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::graph::{Neighborhoods, Sprite};

/// Datum-level vector over a vocabulary: raw rollup counts, or their
/// TF-IDF scaled form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpriteEmbedding {
    pub values: Vec<f64>,
    pub scaled: bool,
}

impl SpriteEmbedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Counts monograms (once per vertex) and skip-bigrams (once per ordered
/// center/neighbor traversal, so every pair within range counts twice).
pub fn rollup(sprite: &Sprite, radius: usize, vocab: &Vocabulary) -> Result<SpriteEmbedding> {
    let hoods = Neighborhoods::build(sprite.adjacency(), radius);
    rollup_with(sprite, &hoods, vocab)
}

pub fn rollup_with(sprite: &Sprite, hoods: &Neighborhoods, vocab: &Vocabulary) -> Result<SpriteEmbedding> {
    if sprite.concept_count() != vocab.concept_count() {
        return Err(Error::ConceptMismatch {
            expected: vocab.concept_count(),
            actual: sprite.concept_count(),
        });
    }
    if hoods.radius() != vocab.radius() {
        return Err(Error::RadiusMismatch {
            expected: vocab.radius(),
            actual: hoods.radius(),
        });
    }
    if hoods.vertex_count() != sprite.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "neighborhoods",
            expected: sprite.vertex_count(),
            actual: hoods.vertex_count(),
        });
    }
    let concepts = sprite.concepts();
    let mut counts = vec![0u64; vocab.len()];
    for (center, &c) in concepts.iter().enumerate() {
        counts[vocab.mono_index(c)] += 1;
        if vocab.has_bigrams() {
            for &j in hoods.of(center) {
                if j as usize != center {
                    counts[vocab.bigram_index(c, concepts[j as usize])] += 1;
                }
            }
        }
    }
    Ok(SpriteEmbedding {
        values: counts.into_iter().map(|n| n as f64).collect(),
        scaled: false,
    })
}
