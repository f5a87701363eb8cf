//! Simple undirected graphs and the vertex/edge subset types shared by every
//! other module.
//!
//! Edges are stored normalized (`u < v`) and sorted lexicographically, so edge
//! indices are reproducible from the edge set alone.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Graph {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (position, (u, v)) in pairs.into_iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::EndpointOutOfRange { u, v, n });
            }
            if u == v {
                return Err(Error::SelfLoop { vertex: u, position });
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            let (u, v) = w[0];
            return Err(Error::DuplicateEdge { u, v });
        }
        Ok(Self { n, edges })
    }

    /// Parses the `{"n": .., "edges": [[u,v], ..]}` document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        Self::new(doc.n, doc.edges.into_iter().map(|[u, v]| (u, v)))
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&doc).expect("graph document serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    /// Index of the edge `{u,v}` in canonical order, if present.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn all_edges(&self) -> EdgeSet {
        EdgeSet((0..self.m()).collect())
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet((0..self.n).collect())
    }

    /// `E(X)`: the edges with both endpoints in `x`.
    pub fn induced_edges(&self, x: &VertexSet) -> Result<EdgeSet> {
        self.check_vertices(x)?;
        let mask = x.mask(self.n);
        Ok(EdgeSet(
            self.edges
                .iter()
                .enumerate()
                .filter(|(_, &(u, v))| mask[u] && mask[v])
                .map(|(i, _)| i)
                .collect(),
        ))
    }

    /// `|F ∩ E(X)|` with `X` given as a membership mask.
    pub fn count_induced(&self, f: &EdgeSet, mask: &[bool]) -> usize {
        f.iter()
            .filter(|&e| {
                let (u, v) = self.edges[e];
                mask[u] && mask[v]
            })
            .count()
    }

    pub fn check_vertices(&self, x: &VertexSet) -> Result<()> {
        match x.iter().find(|&v| v >= self.n) {
            Some(vertex) => Err(Error::VertexOutOfRange { vertex, n: self.n }),
            None => Ok(()),
        }
    }

    pub fn check_edges(&self, f: &EdgeSet) -> Result<()> {
        match f.iter().find(|&e| e >= self.m()) {
            Some(edge) => Err(Error::EdgeOutOfRange { edge, m: self.m() }),
            None => Ok(()),
        }
    }

    /// Subgraph `(V, F)` as a fresh graph, keeping the vertex set.
    pub fn spanning_subgraph(&self, f: &EdgeSet) -> Graph {
        Graph {
            n: self.n,
            edges: f.iter().map(|e| self.edges[e]).collect(),
        }
    }
}

/// Guard used by every downstream entry point: `n >= 2` and valid `(k, l)`.
pub fn validate_instance(g: &Graph, p: SparsityParams) -> Result<()> {
    if g.n() < 2 {
        return Err(Error::TooFewVertices(g.n()));
    }
    SparsityParams::new(p.k(), p.l()).map(|_| ())
}

/// The pair `(k, l)` with `k >= 1` and `0 <= l <= 2k - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SparsityParams {
    k: i64,
    l: i64,
}

impl SparsityParams {
    pub fn new(k: i64, l: i64) -> Result<Self> {
        if k < 1 || l < 0 || l > 2 * k - 1 {
            return Err(Error::InvalidParams { k, l });
        }
        Ok(Self { k, l })
    }

    pub fn k(self) -> i64 {
        self.k
    }

    pub fn l(self) -> i64 {
        self.l
    }

    /// `max{k·size − l, 0}`.
    pub fn bound(self, size: usize) -> i64 {
        (self.k * size as i64 - self.l).max(0)
    }

    /// Edge count of a tight spanning subgraph on `n` vertices.
    pub fn tight_count(self, n: usize) -> usize {
        self.bound(n) as usize
    }
}

impl fmt::Display for SparsityParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

/// Sorted, duplicate-free set of vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// Members of the bitmask `bits`, lowest bit first.
    pub fn from_bits(bits: u64) -> Self {
        Self((0..64).filter(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for v in self.iter().filter(|&v| v < n) {
            mask[v] = true;
        }
        mask
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Sorted, duplicate-free set of edge indices into [`Graph::edges`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeSet(Vec<usize>);

impl EdgeSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// Resolves endpoint pairs through the graph's canonical edge order.
    pub fn from_pairs(g: &Graph, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (u, v) in pairs {
            if u >= g.n() || v >= g.n() {
                return Err(Error::EndpointOutOfRange { u, v, n: g.n() });
            }
            match g.edge_index(u, v) {
                Some(e) => out.push(e),
                None => {
                    return Err(Error::NotABasis(format!("{{{u},{v}}} is not an edge of the graph")))
                }
            }
        }
        Ok(Self::new(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }

    pub fn minus(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.iter().filter(|&e| !other.contains(e)).collect())
    }

    pub fn with_swap(&self, remove: usize, add: usize) -> EdgeSet {
        EdgeSet::new(self.iter().filter(|&e| e != remove).chain(std::iter::once(add)))
    }
}

impl fmt::Display for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Enumeration guards. Every exponential enumeration checks its size against
/// one of these before starting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Cap on `C(|E|, k·n − l)` candidate subsets for basis enumeration.
    pub max_enum: u128,
    /// Cap on the vertex count for `2^n` row enumeration and the brute-force
    /// feasibility oracles.
    pub max_row_vertices: usize,
    /// Cap on the number of subsets the brute-force sparsity oracle may visit.
    pub max_bruteforce: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_enum: 10_000_000,
            max_row_vertices: 16,
            max_bruteforce: 1 << 20,
        }
    }
}

impl Limits {
    pub fn with_max_enum(max_enum: u128) -> Self {
        Self {
            max_enum,
            ..Self::default()
        }
    }
}
