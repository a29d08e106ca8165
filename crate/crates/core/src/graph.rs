//! Map graphs of tokens and the graphs derived from them.
//!
//! A [`MapGraph`] carries one embedding per vertex. Quantizing it yields a
//! [`Sprite`] (one concept per vertex) and convolving a sprite yields a
//! [`ProspectMap`] (one score per vertex). All three share the same
//! [`Adjacency`] through an `Arc`, so topology is never copied.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Undirected, unweighted adjacency in compressed sparse row form.
///
/// Neighbor lists are sorted ascending. Construction rejects self-edges,
/// duplicate edges and out-of-range endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::Graph("a map graph needs at least one vertex".into()));
        }
        if vertex_count > u32::MAX as usize {
            return Err(Error::Graph(format!("too many vertices: {vertex_count}")));
        }
        let mut degree = vec![0usize; vertex_count];
        for &(i, j) in edges {
            if i >= vertex_count || j >= vertex_count {
                return Err(Error::Graph(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if i == j {
                return Err(Error::Graph(format!("self-edge at vertex {i}")));
            }
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..vertex_count].to_vec();
        let mut targets = vec![0u32; offsets[vertex_count]];
        for &(i, j) in edges {
            targets[cursor[i]] = j as u32;
            cursor[i] += 1;
            targets[cursor[j]] = i as u32;
            cursor[j] += 1;
        }
        for v in 0..vertex_count {
            let list = &mut targets[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Graph(format!("duplicate edge ({v}, {})", w[0])));
            }
        }
        Ok(Self { offsets, targets })
    }

    /// A graph with `vertex_count` vertices and no edges.
    pub fn isolated(vertex_count: usize) -> Result<Self> {
        Self::from_edges(vertex_count, &[])
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Connectivity: the maximum vertex degree.
    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.vertex_count() && self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Every edge once as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }
}

/// Path-like graph over `vertex_count` tokens where each token links to every
/// token at most `hop` positions away. There is no wraparound.
pub fn build_chain_graph(vertex_count: usize, hop: usize) -> Result<Adjacency> {
    if hop == 0 {
        return Err(Error::InvalidParameter("chain hop must be at least 1".into()));
    }
    let mut edges = Vec::with_capacity(vertex_count.saturating_mul(hop));
    for i in 0..vertex_count {
        for j in (i + 1)..vertex_count.min(i + hop + 1) {
            edges.push((i, j));
        }
    }
    Adjacency::from_edges(vertex_count, &edges)
}

/// Row-major `height x width` grid with 4-way or 8-way connectivity.
pub fn build_grid_graph(height: usize, width: usize, connectivity: usize) -> Result<Adjacency> {
    if connectivity != 4 && connectivity != 8 {
        return Err(Error::InvalidParameter(format!(
            "grid connectivity must be 4 or 8, got {connectivity}"
        )));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("grid sides must be positive".into()));
    }
    let id = |r: usize, c: usize| r * width + c;
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if c + 1 < width {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < height {
                edges.push((id(r, c), id(r + 1, c)));
                if connectivity == 8 {
                    if c + 1 < width {
                        edges.push((id(r, c), id(r + 1, c + 1)));
                    }
                    if c > 0 {
                        edges.push((id(r, c), id(r + 1, c - 1)));
                    }
                }
            }
        }
    }
    Adjacency::from_edges(height * width, &edges)
}

/// Links every pair of points within Euclidean distance `epsilon`.
pub fn build_geometric_graph(coords: &[[f64; 3]], epsilon: f64) -> Result<Adjacency> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "edge cutoff must be positive and finite, got {epsilon}"
        )));
    }
    if coords.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("coordinates".into()));
    }
    let cutoff = epsilon * epsilon;
    let mut edges = Vec::new();
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let d2: f64 = (0..3).map(|a| (coords[i][a] - coords[j][a]).powi(2)).sum();
            if d2 <= cutoff {
                edges.push((i, j));
            }
        }
    }
    Adjacency::from_edges(coords.len(), &edges)
}

/// All vertices within `radius` hops of `v`, including `v`, ascending.
pub fn neighborhood(adjacency: &Adjacency, v: usize, radius: usize) -> Vec<usize> {
    let mut seen = vec![false; adjacency.vertex_count()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen[v] = true;
    queue.push_back((v, 0usize));
    while let Some((u, depth)) = queue.pop_front() {
        out.push(u);
        if depth == radius {
            continue;
        }
        for &w in adjacency.neighbors(u) {
            let w = w as usize;
            if !seen[w] {
                seen[w] = true;
                queue.push_back((w, depth + 1));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Precomputed r-hop neighborhoods for every vertex of a graph.
///
/// Each list contains the center itself and is sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhoods {
    radius: usize,
    offsets: Vec<usize>,
    members: Vec<u32>,
}

impl Neighborhoods {
    pub fn build(adjacency: &Adjacency, radius: usize) -> Self {
        let n = adjacency.vertex_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut members: Vec<u32> = Vec::with_capacity(n);
        // Visit stamps avoid clearing a seen-array per center.
        let mut stamp = vec![u32::MAX; n];
        let mut frontier: Vec<u32> = Vec::new();
        let mut next: Vec<u32> = Vec::new();
        for center in 0..n {
            let start = members.len();
            let mark = center as u32;
            stamp[center] = mark;
            members.push(mark);
            frontier.clear();
            frontier.push(mark);
            for _ in 0..radius {
                next.clear();
                for &u in &frontier {
                    for &w in adjacency.neighbors(u as usize) {
                        if stamp[w as usize] != mark {
                            stamp[w as usize] = mark;
                            next.push(w);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                members.extend_from_slice(&next);
                std::mem::swap(&mut frontier, &mut next);
            }
            members[start..].sort_unstable();
            offsets.push(members.len());
        }
        Self {
            radius,
            offsets,
            members,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn of(&self, v: usize) -> &[u32] {
        &self.members[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Maximal connected groups of `subset` in the induced subgraph.
///
/// Components are ordered by their smallest vertex; members are ascending.
pub fn connected_components(adjacency: &Adjacency, subset: &[usize]) -> Vec<Vec<usize>> {
    let n = adjacency.vertex_count();
    let mut inside = vec![false; n];
    for &v in subset {
        inside[v] = true;
    }
    let mut dsu = DisjointSet::new(n);
    for &v in subset {
        for &w in adjacency.neighbors(v) {
            if inside[w as usize] {
                dsu.union(v, w as usize);
            }
        }
    }
    let mut root_slot = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for v in (0..n).filter(|&v| inside[v]) {
        let root = dsu.find(v);
        if root_slot[root] == usize::MAX {
            root_slot[root] = components.len();
            components.push(Vec::new());
        }
        components[root_slot[root]].push(v);
    }
    components
}

/// A tokenized datum: one `dim`-dimensional embedding per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct MapGraph {
    id: String,
    dim: usize,
    embeddings: Vec<f32>,
    adjacency: Arc<Adjacency>,
    coords: Option<Vec<Vec<f64>>>,
}

impl MapGraph {
    /// `embeddings` is row-major, `vertex_count x dim`.
    pub fn new(
        id: impl Into<String>,
        embeddings: Vec<f32>,
        dim: usize,
        adjacency: Arc<Adjacency>,
        coords: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Graph("embedding dimension must be at least 1".into()));
        }
        let t = adjacency.vertex_count();
        if embeddings.len() != t * dim {
            return Err(Error::LengthMismatch {
                what: "embedding matrix",
                expected: t * dim,
                actual: embeddings.len(),
            });
        }
        if embeddings.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("token embeddings".into()));
        }
        if let Some(points) = &coords {
            if points.len() != t {
                return Err(Error::LengthMismatch {
                    what: "coordinates",
                    expected: t,
                    actual: points.len(),
                });
            }
            let space = points.first().map_or(0, Vec::len);
            if !(1..=3).contains(&space) || points.iter().any(|p| p.len() != space) {
                return Err(Error::Graph(
                    "coordinates must all share one dimension in 1..=3".into(),
                ));
            }
            if points.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("coordinates".into()));
            }
        }
        Ok(Self {
            id: id.into(),
            dim,
            embeddings,
            adjacency,
            coords,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.vertex_count()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self, v: usize) -> &[f32] {
        &self.embeddings[v * self.dim..(v + 1) * self.dim]
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn adjacency(&self) -> &Arc<Adjacency> {
        &self.adjacency
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }
}

/// A map graph whose vertices carry concept ids in `0..concept_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sprite {
    datum_id: String,
    concept_count: usize,
    concepts: Vec<u32>,
    adjacency: Arc<Adjacency>,
}

impl Sprite {
    pub fn new(
        datum_id: impl Into<String>,
        concepts: Vec<u32>,
        concept_count: usize,
        adjacency: Arc<Adjacency>,
    ) -> Result<Self> {
        if concepts.len() != adjacency.vertex_count() {
            return Err(Error::LengthMismatch {
                what: "sprite concepts",
                expected: adjacency.vertex_count(),
                actual: concepts.len(),
            });
        }
        if let Some(&c) = concepts.iter().find(|&&c| c as usize >= concept_count) {
            return Err(Error::InvalidParameter(format!(
                "concept {c} outside 0..{concept_count}"
            )));
        }
        Ok(Self {
            datum_id: datum_id.into(),
            concept_count,
            concepts,
            adjacency,
        })
    }

    pub fn datum_id(&self) -> &str {
        &self.datum_id
    }

    pub fn concept_count(&self) -> usize {
        self.concept_count
    }

    pub fn concepts(&self) -> &[u32] {
        &self.concepts
    }

    pub fn vertex_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn adjacency(&self) -> &Arc<Adjacency> {
        &self.adjacency
    }
}

/// Per-vertex attribution scores over a datum's topology.
#[derive(Clone, Debug, PartialEq)]
pub struct ProspectMap {
    datum_id: String,
    scores: Vec<f64>,
    scaled: bool,
    adjacency: Arc<Adjacency>,
}

impl ProspectMap {
    pub fn new(
        datum_id: impl Into<String>,
        scores: Vec<f64>,
        scaled: bool,
        adjacency: Arc<Adjacency>,
    ) -> Result<Self> {
        if scores.len() != adjacency.vertex_count() {
            return Err(Error::LengthMismatch {
                what: "prospect map scores",
                expected: adjacency.vertex_count(),
                actual: scores.len(),
            });
        }
        if scaled && scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidParameter(
                "scaled prospect map scores must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            datum_id: datum_id.into(),
            scores,
            scaled,
            adjacency,
        })
    }

    pub fn datum_id(&self) -> &str {
        &self.datum_id
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn adjacency(&self) -> &Arc<Adjacency> {
        &self.adjacency
    }

    pub fn vertex_count(&self) -> usize {
        self.scores.len()
    }
}

/// A map graph with its binary datum label and optional ground-truth mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDatum {
    pub graph: MapGraph,
    label: u8,
    mask: Option<Vec<bool>>,
}

impl LabeledDatum {
    pub fn new(graph: MapGraph, label: u8, mask: Option<Vec<bool>>) -> Result<Self> {
        if label > 1 {
            return Err(Error::InvalidParameter(format!("label must be 0 or 1, got {label}")));
        }
        if let Some(m) = &mask {
            if m.len() != graph.vertex_count() {
                return Err(Error::LengthMismatch {
                    what: "mask",
                    expected: graph.vertex_count(),
                    actual: m.len(),
                });
            }
            if label == 0 && m.iter().any(|&b| b) {
                return Err(Error::InvalidParameter(format!(
                    "class 0 datum '{}' has positive mask tokens",
                    graph.id()
                )));
            }
        }
        Ok(Self { graph, label, mask })
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn id(&self) -> &str {
        self.graph.id()
    }
}
