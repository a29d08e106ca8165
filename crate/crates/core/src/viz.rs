//! Semantic-network views of kernels and sprite embeddings: DOT graphs
//! over the `K` concepts and heatmap tables.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::kernel::{Element, Kernel, SpriteEmbedding, Vocabulary};

/// Concept graph with one node per concept and one undirected edge per
/// nonzero bigram value, self-loops included.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticNetwork {
    pub name: String,
    pub nodes: Vec<f64>,
    /// `(lo, hi, value)` with `lo <= hi`, in vocabulary order.
    pub edges: Vec<(u32, u32, f64)>,
    /// Full symmetric bigram matrix, zero where the vocabulary has no bigrams.
    pub matrix: Vec<Vec<f64>>,
}

impl SemanticNetwork {
    pub fn from_values(name: impl Into<String>, vocab: &Vocabulary, values: &[f64]) -> Result<Self> {
        if values.len() != vocab.len() {
            return Err(Error::LengthMismatch {
                what: "vocabulary values",
                expected: vocab.len(),
                actual: values.len(),
            });
        }
        let k = vocab.concept_count();
        let mut nodes = vec![0.0; k];
        let mut edges = Vec::new();
        let mut matrix = vec![vec![0.0; k]; k];
        for (element, &v) in vocab.entries().iter().zip(values) {
            match *element {
                Element::Mono(c) => nodes[c as usize] = v,
                Element::Bigram(a, b) => {
                    matrix[a as usize][b as usize] = v;
                    matrix[b as usize][a as usize] = v;
                    if v != 0.0 {
                        edges.push((a, b, v));
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            nodes,
            edges,
            matrix,
        })
    }

    pub fn from_kernel(kernel: &Kernel) -> Result<Self> {
        Self::from_values("kernel", kernel.vocabulary(), kernel.weights())
    }

    pub fn from_embedding(name: impl Into<String>, vocab: &Vocabulary, embedding: &SpriteEmbedding) -> Result<Self> {
        Self::from_values(name, vocab, &embedding.values)
    }

    pub fn concept_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        writeln!(out, "graph \"{}\" {{", self.name.replace('"', "\\\"")).unwrap();
        for (c, w) in self.nodes.iter().enumerate() {
            writeln!(out, "  {c} [label=\"{c}\", weight={w}];").unwrap();
        }
        for &(a, b, w) in &self.edges {
            writeln!(out, "  {a} -- {b} [weight={w}];").unwrap();
        }
        out.push_str("}\n");
        out
    }

    /// K×K bigram matrix with a header row and a leading concept column.
    pub fn heatmap_csv(&self) -> String {
        let k = self.concept_count();
        let mut out = String::from("concept");
        for c in 0..k {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (a, row) in self.matrix.iter().enumerate() {
            write!(out, "{a}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn monogram_csv(&self) -> String {
        let mut out = String::from("concept,weight\n");
        for (c, w) in self.nodes.iter().enumerate() {
            writeln!(out, "{c},{w}").unwrap();
        }
        out
    }
}
