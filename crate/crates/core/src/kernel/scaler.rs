use serde::{Deserialize, Serialize};

use super::rollup::SpriteEmbedding;
use crate::error::{Error, Result};

/// Smoothed TF-IDF fitted on training sprite embeddings.
///
/// `idf_t = ln((1 + N) / (1 + df_t)) + 1`, where `df_t` counts training
/// embeddings with a nonzero entry `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub idf: Vec<f64>,
    pub document_frequency: Vec<u64>,
    pub document_count: u64,
}

pub fn fit_scaler(raw: &[SpriteEmbedding]) -> Result<Scaler> {
    let first = raw
        .first()
        .ok_or_else(|| Error::Empty("no sprite embeddings to fit a scaler on".into()))?;
    let len = first.len();
    let mut df = vec![0u64; len];
    for z in raw {
        if z.len() != len {
            return Err(Error::LengthMismatch {
                what: "sprite embedding",
                expected: len,
                actual: z.len(),
            });
        }
        for (count, &v) in df.iter_mut().zip(&z.values) {
            if v > 0.0 {
                *count += 1;
            }
        }
    }
    let n = raw.len() as u64;
    Ok(Scaler::from_frequencies(df, n))
}

impl Scaler {
    pub fn from_frequencies(document_frequency: Vec<u64>, document_count: u64) -> Self {
        let idf = document_frequency
            .iter()
            .map(|&df| ((1.0 + document_count as f64) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        Self {
            idf,
            document_frequency,
            document_count,
        }
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Term frequency (`count / total`, zero for an empty vector) times idf.
    pub fn scale(&self, raw: &SpriteEmbedding) -> Result<SpriteEmbedding> {
        if raw.scaled {
            return Err(Error::InvalidParameter("sprite embedding is already scaled".into()));
        }
        if raw.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "sprite embedding",
                expected: self.len(),
                actual: raw.len(),
            });
        }
        let total: f64 = raw.values.iter().sum();
        let values = if total > 0.0 {
            raw.values
                .iter()
                .zip(&self.idf)
                .map(|(&v, &idf)| v / total * idf)
                .collect()
        } else {
            vec![0.0; raw.len()]
        };
        Ok(SpriteEmbedding { values, scaled: true })
    }
}

pub fn scale(raw: &SpriteEmbedding, scaler: &Scaler) -> Result<SpriteEmbedding> {
    scaler.scale(raw)
}
