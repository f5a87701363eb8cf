//! Orientations of an edge subset with a prescribed in-degree at every vertex.
//!
//! Construction starts from the canonical orientation (every head at the
//! higher-index endpoint) and repairs it by path reversal: while some vertex
//! `s` has in-degree above target, search backwards from `s` for a vertex `t`
//! below target and reverse the directed `t → … → s` path. If no such `t` is
//! reachable, the set of vertices that reach `s` violates the counting
//! condition and is returned as a witness.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph, Limits, SparsityParams, VertexSet};

/// Prescribed in-degree per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct InDegreeTarget(Vec<usize>);

impl InDegreeTarget {
    pub fn new(m: Vec<usize>) -> Self {
        Self(m)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn sum_over(&self, x: &VertexSet) -> usize {
        x.iter().map(|v| self.0[v]).sum()
    }
}

impl fmt::Display for InDegreeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A head for every edge of an edge subset, with the derived in-degrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Orientation {
    edges: Vec<usize>,
    heads: Vec<usize>,
    rho: Vec<usize>,
}

/// One oriented edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Arc {
    pub edge: usize,
    pub tail: usize,
    pub head: usize,
}

impl Orientation {
    fn canonical(g: &Graph, f: &EdgeSet) -> Self {
        let edges: Vec<usize> = f.iter().collect();
        let heads: Vec<usize> = edges.iter().map(|&e| g.edge(e).1).collect();
        let mut rho = vec![0; g.n()];
        for &h in &heads {
            rho[h] += 1;
        }
        Self { edges, heads, rho }
    }

    pub fn rho(&self) -> &[usize] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Arcs in ascending edge-index order.
    pub fn arcs<'a>(&'a self, g: &'a Graph) -> impl Iterator<Item = Arc> + 'a {
        self.edges.iter().zip(&self.heads).map(move |(&edge, &head)| {
            let (u, v) = g.edge(edge);
            let tail = if head == v { u } else { v };
            Arc { edge, tail, head }
        })
    }

    pub fn head_of(&self, edge: usize) -> Option<usize> {
        self.edges.binary_search(&edge).ok().map(|i| self.heads[i])
    }

    /// Number of arcs `(u, v)` with `u ∉ X` and `v ∈ X`.
    pub fn entering(&self, g: &Graph, mask: &[bool]) -> usize {
        self.arcs(g).filter(|a| !mask[a.tail] && mask[a.head]).count()
    }

    /// Recomputes in-degrees from the heads, for consistency checks.
    pub fn recount(&self, n: usize) -> Vec<usize> {
        let mut rho = vec![0; n];
        for &h in &self.heads {
            rho[h] += 1;
        }
        rho
    }
}

/// Literal check of the two counting conditions: `|F| = Σ m` and
/// `|F(X)| <= Σ_{v∈X} m(v)` for every `X ⊆ V`. Returns a violating `X` for
/// the second condition, or `V` when `|F| > Σ m`.
pub fn hakimi_violation_bruteforce(
    g: &Graph,
    f: &EdgeSet,
    m: &InDegreeTarget,
    limits: &Limits,
) -> Result<HakimiVerdict> {
    check_target(g, f, m)?;
    let n = g.n();
    if n > limits.max_row_vertices || n >= 63 {
        return Err(Error::GuardExceeded {
            what: "vertex subsets for the orientation condition",
            size: 1u128 << n.min(127),
            limit: 1u128 << limits.max_row_vertices,
        });
    }
    let masks: Vec<u64> = f
        .iter()
        .map(|e| {
            let (u, v) = g.edge(e);
            1u64 << u | 1u64 << v
        })
        .collect();
    let m = m.as_slice();
    for bits in 1u64..1 << n {
        let inside = masks.iter().filter(|&&e| e & bits == e).count();
        let budget: usize = (0..n).filter(|v| bits >> v & 1 == 1).map(|v| m[v]).sum();
        if inside > budget {
            return Ok(HakimiVerdict::Violated(VertexSet::from_bits(bits)));
        }
    }
    if f.len() != m.iter().sum::<usize>() {
        return Ok(HakimiVerdict::TotalMismatch);
    }
    Ok(HakimiVerdict::Feasible)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HakimiVerdict {
    Feasible,
    /// `|F| < Σ m`: every subset condition holds but the totals differ.
    TotalMismatch,
    Violated(VertexSet),
}

impl HakimiVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, HakimiVerdict::Feasible)
    }
}

/// Whether `(V, F)` admits an orientation with in-degrees exactly `m`.
///
/// Uses subset enumeration when `n` is within the row guard and the
/// constructive test otherwise.
pub fn hakimi_feasible(g: &Graph, f: &EdgeSet, m: &InDegreeTarget, limits: &Limits) -> Result<bool> {
    if g.n() <= limits.max_row_vertices {
        Ok(hakimi_violation_bruteforce(g, f, m, limits)?.is_feasible())
    } else {
        match orient_with_targets(g, f, m) {
            Ok(_) => Ok(true),
            Err(Error::InfeasibleTarget { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

fn check_target(g: &Graph, f: &EdgeSet, m: &InDegreeTarget) -> Result<()> {
    g.check_edges(f)?;
    if m.len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} entries for {} vertices",
            m.len(),
            g.n()
        )));
    }
    Ok(())
}

/// Deterministic orientation of `F` with `rho = m`.
pub fn orient_with_targets(g: &Graph, f: &EdgeSet, m: &InDegreeTarget) -> Result<Orientation> {
    check_target(g, f, m)?;
    let total = m.total();
    if f.len() != total {
        let witness = (f.len() > total).then(|| g.all_vertices());
        return Err(Error::InfeasibleTarget {
            reason: format!("|F| = {} but the targets sum to {total}", f.len()),
            witness,
        });
    }
    let n = g.n();
    let m = m.as_slice();
    let mut orient = Orientation::canonical(g, f);
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];

    while let Some(s) = (0..n).find(|&v| orient.rho[v] > m[v]) {
        for p in preds.iter_mut() {
            p.clear();
        }
        for (slot, arc) in orient.arcs(g).enumerate() {
            preds[arc.head].push((arc.tail, slot));
        }
        for p in preds.iter_mut() {
            p.sort_unstable();
        }

        // parent[v] = arc slot leading from v towards s
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut sink = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for &(u, slot) in &preds[v] {
                if seen[u] {
                    continue;
                }
                seen[u] = true;
                parent[u] = Some(slot);
                if orient.rho[u] < m[u] {
                    sink = Some(u);
                    break 'bfs;
                }
                queue.push_back(u);
            }
        }

        let Some(t) = sink else {
            let witness = VertexSet::new((0..n).filter(|&v| seen[v]));
            return Err(Error::InfeasibleTarget {
                reason: format!("vertex {s} cannot shed in-degree"),
                witness: Some(witness),
            });
        };
        let mut v = t;
        while v != s {
            let slot = parent[v].expect("bfs parent");
            let (a, b) = g.edge(orient.edges[slot]);
            let head = orient.heads[slot];
            let tail = if head == a { b } else { a };
            debug_assert_eq!(tail, v);
            orient.heads[slot] = tail;
            v = head;
        }
        orient.rho[t] += 1;
        orient.rho[s] -= 1;
    }
    debug_assert_eq!(orient.rho, orient.recount(n));
    Ok(orient)
}

/// Targets for the single-vertex protocol: `m(x) = k − l`, `m(z) = k`.
pub fn protocol_targets_a(n: usize, p: SparsityParams, x: usize) -> Result<InDegreeTarget> {
    if p.k() < p.l() {
        return Err(Error::Regime {
            variant: "A",
            requirement: "k >= l",
            k: p.k(),
            l: p.l(),
        });
    }
    if x >= n {
        return Err(Error::VertexOutOfRange { vertex: x, n });
    }
    let k = p.k() as usize;
    let mut m = vec![k; n];
    m[x] = (p.k() - p.l()) as usize;
    Ok(InDegreeTarget(m))
}

/// Targets for the two-vertex protocol: `m(x) = 0`, `m(y) = 2k − l`,
/// `m(z) = k`.
pub fn protocol_targets_b(
    n: usize,
    p: SparsityParams,
    x: usize,
    y: usize,
) -> Result<InDegreeTarget> {
    if p.k() > p.l() {
        return Err(Error::Regime {
            variant: "B",
            requirement: "k <= l",
            k: p.k(),
            l: p.l(),
        });
    }
    if x == y {
        return Err(Error::RepeatedAliceVertex(x));
    }
    for v in [x, y] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    let mut m = vec![p.k() as usize; n];
    m[x] = 0;
    m[y] = (2 * p.k() - p.l()) as usize;
    Ok(InDegreeTarget(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{complete, path};

    fn params(k: i64, l: i64) -> SparsityParams {
        SparsityParams::new(k, l).unwrap()
    }

    fn k4_minus_23() -> (Graph, EdgeSet) {
        let g = complete(4);
        let f = EdgeSet::from_pairs(&g, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        (g, f)
    }

    #[test]
    fn feasibility_examples() {
        let lim = Limits::default();
        let k3 = complete(3);
        let t = InDegreeTarget::new(vec![1, 1, 1]);
        assert!(hakimi_feasible(&k3, &k3.all_edges(), &t, &lim).unwrap());

        let p3 = path(3);
        let t = InDegreeTarget::new(vec![0, 0, 2]);
        assert!(!hakimi_feasible(&p3, &p3.all_edges(), &t, &lim).unwrap());
        match hakimi_violation_bruteforce(&p3, &p3.all_edges(), &t, &lim).unwrap() {
            HakimiVerdict::Violated(x) => assert_eq!(x, VertexSet::new([0, 1])),
            other => panic!("expected a witness, got {other:?}"),
        }

        let (g, f) = k4_minus_23();
        let t = InDegreeTarget::new(vec![0, 1, 2, 2]);
        assert!(hakimi_feasible(&g, &f, &t, &lim).unwrap());
    }

    #[test]
    fn tree_orientation_is_forced() {
        let g = complete(3);
        let f = EdgeSet::from_pairs(&g, [(0, 1), (1, 2)]).unwrap();
        let o = orient_with_targets(&g, &f, &InDegreeTarget::new(vec![0, 1, 1])).unwrap();
        let arcs: Vec<_> = o.arcs(&g).map(|a| (a.tail, a.head)).collect();
        assert_eq!(arcs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn triangle_becomes_a_cycle() {
        let g = complete(3);
        let o = orient_with_targets(&g, &g.all_edges(), &InDegreeTarget::new(vec![1, 1, 1])).unwrap();
        assert_eq!(o.rho(), &[1, 1, 1]);
        let arcs: Vec<_> = o.arcs(&g).map(|a| (a.tail, a.head)).collect();
        // canonical 0→1, 0→2, 1→2; vertex 2 sheds to 0 along 0→2
        assert_eq!(arcs, vec![(0, 1), (2, 0), (1, 2)]);
        let again = orient_with_targets(&g, &g.all_edges(), &InDegreeTarget::new(vec![1, 1, 1])).unwrap();
        assert_eq!(o, again);
    }

    #[test]
    fn k4_minus_edge() {
        let (g, f) = k4_minus_23();
        let o = orient_with_targets(&g, &f, &InDegreeTarget::new(vec![0, 1, 2, 2])).unwrap();
        assert_eq!(o.rho(), &[0, 1, 2, 2]);
        assert_eq!(o.recount(4), vec![0, 1, 2, 2]);
    }

    #[test]
    fn protocol_a_entering_example() {
        // F = {02, 12}, x = 0: canonical 0→2, 1→2 repaired to 0→2, 2→1
        let g = complete(3);
        let f = EdgeSet::from_pairs(&g, [(0, 2), (1, 2)]).unwrap();
        let t = protocol_targets_a(3, params(1, 1), 0).unwrap();
        let o = orient_with_targets(&g, &f, &t).unwrap();
        let arcs: Vec<_> = o.arcs(&g).map(|a| (a.tail, a.head)).collect();
        assert_eq!(arcs, vec![(0, 2), (2, 1)]);
        assert_eq!(o.entering(&g, &VertexSet::new([0, 1]).mask(3)), 1);
    }

    #[test]
    fn infeasible_reports_witness() {
        let p3 = path(3);
        let err = orient_with_targets(&p3, &p3.all_edges(), &InDegreeTarget::new(vec![0, 0, 2]))
            .unwrap_err();
        match err {
            Error::InfeasibleTarget { witness: Some(x), .. } => {
                let inside = p3.induced_edges(&x).unwrap().len();
                let budget: usize = x.iter().map(|v| [0, 0, 2][v]).sum();
                assert!(inside > budget);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = orient_with_targets(&p3, &p3.all_edges(), &InDegreeTarget::new(vec![1, 1, 1]))
            .unwrap_err();
        assert!(matches!(err, Error::InfeasibleTarget { witness: None, .. }));
        assert!(matches!(
            orient_with_targets(&p3, &p3.all_edges(), &InDegreeTarget::new(vec![1, 1])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn targets() {
        assert_eq!(protocol_targets_a(3, params(1, 1), 0).unwrap().as_slice(), &[0, 1, 1]);
        assert_eq!(protocol_targets_a(4, params(2, 2), 3).unwrap().as_slice(), &[2, 2, 2, 0]);
        assert!(matches!(protocol_targets_a(3, params(2, 3), 0), Err(Error::Regime { .. })));
        assert_eq!(protocol_targets_b(4, params(2, 3), 0, 1).unwrap().as_slice(), &[0, 1, 2, 2]);
        assert_eq!(protocol_targets_b(3, params(1, 1), 0, 1).unwrap().as_slice(), &[0, 1, 1]);
        assert!(matches!(
            protocol_targets_b(4, params(2, 3), 1, 1),
            Err(Error::RepeatedAliceVertex(1))
        ));
        assert!(matches!(protocol_targets_b(4, params(2, 1), 0, 1), Err(Error::Regime { .. })));
        for (n, p) in [(5, params(3, 3)), (6, params(2, 1))] {
            let t = protocol_targets_a(n, p, 1).unwrap();
            assert_eq!(t.total() as i64, p.k() * n as i64 - p.l());
        }
    }
}
