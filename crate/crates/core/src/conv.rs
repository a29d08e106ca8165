//! Layer II inference: K2conv over a sprite.
//!
//! The score of vertex `v` sums the monogram weight of every vertex in
//! `N_r(v)` (which includes `v`) and the bigram weight of every unordered
//! pair of distinct vertices in `N_r(v)`. Pairs are aggregated per concept
//! so each neighborhood costs `O(|N_r| + m^2)` for `m` distinct concepts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Neighborhoods, ProspectMap, Sprite};
use crate::kernel::Kernel;

pub fn k2conv(sprite: &Sprite, kernel: &Kernel) -> Result<ProspectMap> {
    let hoods = Neighborhoods::build(sprite.adjacency(), kernel.radius());
    k2conv_with(sprite, &hoods, kernel)
}

pub fn k2conv_with(sprite: &Sprite, hoods: &Neighborhoods, kernel: &Kernel) -> Result<ProspectMap> {
    if sprite.concept_count() != kernel.concept_count() {
        return Err(Error::ConceptMismatch {
            expected: kernel.concept_count(),
            actual: sprite.concept_count(),
        });
    }
    if hoods.radius() != kernel.radius() {
        return Err(Error::RadiusMismatch {
            expected: kernel.radius(),
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
    let k = kernel.concept_count();
    let scores: Vec<f64> = (0..sprite.vertex_count())
        .into_par_iter()
        .map_init(
            || (vec![0u32; k], Vec::<u32>::new()),
            |(counts, present), v| score_vertex(concepts, hoods.of(v), kernel, counts, present),
        )
        .collect();
    ProspectMap::new(sprite.datum_id(), scores, false, sprite.adjacency().clone())
}

fn score_vertex(
    concepts: &[u32],
    hood: &[u32],
    kernel: &Kernel,
    counts: &mut [u32],
    present: &mut Vec<u32>,
) -> f64 {
    present.clear();
    for &u in hood {
        let c = concepts[u as usize];
        if counts[c as usize] == 0 {
            present.push(c);
        }
        counts[c as usize] += 1;
    }
    present.sort_unstable();

    let mut score = 0.0;
    for &c in present.iter() {
        score += counts[c as usize] as f64 * kernel.mono(c);
    }
    if kernel.vocabulary().has_bigrams() {
        for (i, &a) in present.iter().enumerate() {
            let na = counts[a as usize] as f64;
            if na > 1.0 {
                score += na * (na - 1.0) / 2.0 * kernel.pair(a, a);
            }
            for &b in &present[i + 1..] {
                score += na * counts[b as usize] as f64 * kernel.pair(a, b);
            }
        }
    }
    for &c in present.iter() {
        counts[c as usize] = 0;
    }
    score
}

/// Per-datum min-max rescale to `[0, 1]`; a constant map becomes all zeros.
pub fn scale_map(map: &ProspectMap) -> Result<ProspectMap> {
    if map.is_scaled() {
        return Err(Error::InvalidParameter("prospect map is already scaled".into()));
    }
    let scores = map.scores();
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("prospect map scores".into()));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let scaled = if span > 0.0 {
        scores.iter().map(|&s| ((s - lo) / span).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; scores.len()]
    };
    ProspectMap::new(map.datum_id(), scaled, true, map.adjacency().clone())
}
