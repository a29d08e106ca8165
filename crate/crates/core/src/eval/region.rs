use crate::error::{Error, Result};
use crate::graph::{connected_components, Adjacency};

/// Fraction of tokens inside the region.
pub fn region_prevalence(mask: &[bool]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

/// Number of connected components of the region divided by their mean size.
pub fn region_dispersion(mask: &[bool], adjacency: &Adjacency) -> Result<f64> {
    if mask.len() != adjacency.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "mask",
            expected: adjacency.vertex_count(),
            actual: mask.len(),
        });
    }
    let members: Vec<usize> = (0..mask.len()).filter(|&v| mask[v]).collect();
    if members.is_empty() {
        return Err(Error::Empty("region has no tokens".into()));
    }
    let components = connected_components(adjacency, &members);
    let count = components.len() as f64;
    let mean_size = members.len() as f64 / count;
    Ok(count / mean_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_chain_graph;

    #[test]
    fn prevalence_examples() {
        let mut m = vec![false; 10];
        m[3] = true;
        m[7] = true;
        assert_eq!(region_prevalence(&m), 0.2);
        assert_eq!(region_prevalence(&[false; 4]), 0.0);
        assert_eq!(region_prevalence(&[true; 4]), 1.0);
    }

    #[test]
    fn dispersion_examples() {
        let adj = build_chain_graph(12, 1).unwrap();
        let bits = |on: &[usize]| {
            let mut m = vec![false; 12];
            for &v in on {
                m[v] = true;
            }
            m
        };
        assert_eq!(region_dispersion(&bits(&[2, 3, 4, 5]), &adj).unwrap(), 0.25);
        let v = region_dispersion(&bits(&[0, 1, 5, 6, 7, 8]), &adj).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(region_dispersion(&bits(&[0, 2, 4, 6]), &adj).unwrap(), 4.0);
        assert!(region_dispersion(&bits(&[]), &adj).is_err());
    }
}
