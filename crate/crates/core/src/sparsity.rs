//! (k,l)-sparsity and tightness oracles, and basis enumeration.
//!
//! Two independent deciders sit behind [`SparsityOracle`]: the pebble game
//! (production path) and literal subset enumeration (test oracle). They are
//! looked up by name through [`oracle`].

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph, Limits, SparsityParams};

pub trait SparsityOracle: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether `(V, F)` is (k,l)-sparse.
    fn is_sparse(&self, g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool>;

    /// Sparse and spanning with exactly `max{k·n − l, 0}` edges.
    fn is_tight(&self, g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
        Ok(f.len() == p.tight_count(g.n()) && self.is_sparse(g, p, f)?)
    }
}

static PEBBLE: PebbleGame = PebbleGame;
static BRUTE_FORCE: BruteForce = BruteForce {
    max_subsets: 1 << 20,
};

/// Names accepted by [`oracle`].
pub const ORACLE_NAMES: [&str; 2] = ["pebble", "bruteforce"];

pub fn oracle(name: &str) -> Result<&'static dyn SparsityOracle> {
    match name {
        "pebble" => Ok(&PEBBLE),
        "bruteforce" | "brute-force" => Ok(&BRUTE_FORCE),
        _ => Err(Error::UnknownStrategy {
            kind: "sparsity oracle",
            name: name.to_string(),
        }),
    }
}

pub fn oracles() -> [&'static dyn SparsityOracle; 2] {
    [&PEBBLE, &BRUTE_FORCE]
}

pub fn is_sparse_pebble(g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
    PEBBLE.is_sparse(g, p, f)
}

pub fn is_sparse_bruteforce(g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
    BRUTE_FORCE.is_sparse(g, p, f)
}

pub fn is_tight(g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
    PEBBLE.is_tight(g, p, f)
}

/// Literal enumeration of the sparsity condition.
///
/// Two equivalent forms are available and the cheaper one is used per
/// instance: the edge form checks `|F'| <= max{k|V(F')| − l, 0}` for every
/// nonempty `F' ⊆ F` (`2^|F|` subsets); the vertex form checks
/// `|F ∩ E(X)| <= k|X| − l` for every `X ⊆ V` with `|X| >= 2` (`2^n` subsets).
/// The edge form is chosen when `|F| <= n`.
#[derive(Clone, Copy, Debug)]
pub struct BruteForce {
    pub max_subsets: u128,
}

impl BruteForce {
    pub fn with_limits(limits: &Limits) -> Self {
        Self {
            max_subsets: limits.max_bruteforce,
        }
    }

    fn edge_form(g: &Graph, p: SparsityParams, f: &EdgeSet) -> bool {
        let edges: Vec<(usize, usize)> = f.iter().map(|e| g.edge(e)).collect();
        let mut touched = vec![0u32; g.n()];
        (1u64..1 << edges.len()).all(|bits| {
            touched.iter_mut().for_each(|t| *t = 0);
            let mut span = 0;
            for (i, &(u, v)) in edges.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    for w in [u, v] {
                        if touched[w] == 0 {
                            span += 1;
                        }
                        touched[w] += 1;
                    }
                }
            }
            bits.count_ones() as i64 <= p.bound(span)
        })
    }

    fn vertex_form(g: &Graph, p: SparsityParams, f: &EdgeSet) -> bool {
        let masks: Vec<u64> = f.iter().map(|e| {
            let (u, v) = g.edge(e);
            1u64 << u | 1u64 << v
        }).collect();
        (0u64..1 << g.n())
            .filter(|bits| bits.count_ones() >= 2)
            .all(|bits| {
                let inside = masks.iter().filter(|&&m| m & bits == m).count() as i64;
                inside <= p.bound(bits.count_ones() as usize)
            })
    }
}

impl SparsityOracle for BruteForce {
    fn name(&self) -> &'static str {
        "bruteforce"
    }

    fn is_sparse(&self, g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
        g.check_edges(f)?;
        let use_edges = f.len() <= g.n();
        let exponent = if use_edges { f.len() } else { g.n() };
        let size = if exponent >= 127 { u128::MAX } else { 1u128 << exponent };
        if exponent >= 63 || size > self.max_subsets {
            return Err(Error::GuardExceeded {
                what: "brute-force sparsity subsets",
                size,
                limit: self.max_subsets,
            });
        }
        Ok(if use_edges {
            Self::edge_form(g, p, f)
        } else {
            Self::vertex_form(g, p, f)
        })
    }
}

/// The (k,l)-pebble game, valid for `0 <= l <= 2k − 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PebbleGame;

impl SparsityOracle for PebbleGame {
    fn name(&self) -> &'static str {
        "pebble"
    }

    fn is_sparse(&self, g: &Graph, p: SparsityParams, f: &EdgeSet) -> Result<bool> {
        g.check_edges(f)?;
        let mut board = PebbleBoard::new(g.n(), p);
        Ok(f.iter().all(|e| {
            let (u, v) = g.edge(e);
            board.insert(u, v)
        }))
    }
}

/// Pebble placement with the accepted edges directed away from the vertex
/// whose pebble covers them.
#[derive(Clone, Debug)]
pub struct PebbleBoard {
    params: SparsityParams,
    free: Vec<i64>,
    out: Vec<Vec<usize>>,
}

impl PebbleBoard {
    pub fn new(n: usize, params: SparsityParams) -> Self {
        Self {
            params,
            free: vec![params.k(); n],
            out: vec![Vec::new(); n],
        }
    }

    pub fn free_pebbles(&self, v: usize) -> i64 {
        self.free[v]
    }

    /// Tries to accept the edge `{u,v}`; returns whether it was independent.
    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        let (u, v) = (u.min(v), u.max(v));
        let need = self.params.l() + 1;
        while self.free[u] + self.free[v] < need {
            if !self.gather(u, v) && !self.gather(v, u) {
                return false;
            }
        }
        let tail = if self.free[u] > 0 { u } else { v };
        let head = if tail == u { v } else { u };
        self.free[tail] -= 1;
        self.out[tail].push(head);
        true
    }

    /// Moves one free pebble onto `root` along a directed path that avoids
    /// `keep`. Breadth-first, lowest vertex index first.
    fn gather(&mut self, root: usize, keep: usize) -> bool {
        let n = self.free.len();
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        parent[keep] = keep;
        let mut queue = VecDeque::from([root]);
        let mut found = None;
        'search: while let Some(a) = queue.pop_front() {
            let mut next = self.out[a].clone();
            next.sort_unstable();
            for b in next {
                if parent[b] != usize::MAX {
                    continue;
                }
                parent[b] = a;
                if self.free[b] > 0 {
                    found = Some(b);
                    break 'search;
                }
                queue.push_back(b);
            }
        }
        let Some(source) = found else {
            return false;
        };
        let mut c = source;
        while c != root {
            let a = parent[c];
            let pos = self.out[a].iter().position(|&h| h == c).expect("path edge");
            self.out[a].swap_remove(pos);
            self.out[c].push(a);
            c = a;
        }
        self.free[source] -= 1;
        self.free[root] += 1;
        true
    }
}

/// A tight spanning edge set: one vertex of the base polytope.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Basis(EdgeSet);

impl Basis {
    /// Checks tightness with the pebble game.
    pub fn new(g: &Graph, p: SparsityParams, edges: EdgeSet) -> Result<Self> {
        if edges.len() != p.tight_count(g.n()) {
            return Err(Error::NotABasis(format!(
                "|F| = {} but a basis has {} edges",
                edges.len(),
                p.tight_count(g.n())
            )));
        }
        if !is_sparse_pebble(g, p, &edges)? {
            return Err(Error::NotABasis(format!("{edges} is not {p}-sparse")));
        }
        Ok(Self(edges))
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.0
    }

    pub fn cardinality(&self) -> usize {
        self.0.len()
    }
}

pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic r-combinations of `0..n`.
pub struct Combinations {
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, r: usize) -> Self {
        Self {
            idx: (0..r).collect(),
            n,
            done: r > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let r = self.idx.len();
        match (0..r).rev().find(|&i| self.idx[i] != i + self.n - r) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..r {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// All bases in lexicographic edge-index order. An empty family is a valid
/// answer (the polytope is empty).
pub fn enumerate_bases(g: &Graph, p: SparsityParams, limits: &Limits) -> Result<Vec<Basis>> {
    let r = p.tight_count(g.n());
    if r > g.m() {
        return Ok(Vec::new());
    }
    let candidates = binomial(g.m(), r);
    if candidates > limits.max_enum {
        return Err(Error::GuardExceeded {
            what: "candidate basis subsets",
            size: candidates,
            limit: limits.max_enum,
        });
    }
    let mut bases = Vec::new();
    for combo in Combinations::new(g.m(), r) {
        let f = EdgeSet::new(combo);
        if is_sparse_pebble(g, p, &f)? {
            bases.push(Basis(f));
        }
    }
    Ok(bases)
}
