//! Small named graphs used by tests, the acceptance suite and examples.

use crate::graph::{Graph, SparsityParams};

pub fn complete(n: usize) -> Graph {
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("complete graph")
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|v| (v - 1, v))).expect("path graph")
}

pub fn cycle(n: usize) -> Graph {
    Graph::new(n, (0..n).map(|v| (v, (v + 1) % n))).expect("cycle graph")
}

/// Wheel with hub `0` and a rim cycle on `1..=rim`.
pub fn wheel(rim: usize) -> Graph {
    let spokes = (1..=rim).map(|v| (0, v));
    let rim_edges = (1..=rim).map(move |v| (v, v % rim + 1));
    Graph::new(rim + 1, spokes.chain(rim_edges)).expect("wheel graph")
}

/// Triangular prism: triangles `0,1,2` and `3,4,5` joined by `i — i+3`.
pub fn prism() -> Graph {
    Graph::new(
        6,
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)],
    )
    .expect("prism graph")
}

/// The named desk-scale corpus: K3, K4, K5, the wheel W5 (hub plus a 5-cycle)
/// and the triangular prism.
pub fn corpus() -> Vec<(&'static str, Graph)> {
    vec![
        ("K3", complete(3)),
        ("K4", complete(4)),
        ("K5", complete(5)),
        ("W5", wheel(5)),
        ("prism", prism()),
    ]
}

/// Parameter pairs exercised by the corpus.
pub fn corpus_params() -> Vec<SparsityParams> {
    [(1, 0), (1, 1), (2, 1), (2, 2), (2, 3), (3, 3), (3, 5)]
        .into_iter()
        .map(|(k, l)| SparsityParams::new(k, l).expect("corpus parameters are valid"))
        .collect()
}
