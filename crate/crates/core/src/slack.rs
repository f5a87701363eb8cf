//! Slack matrix of the base polytope and the nonnegative factorization
//! `S = T·U` read off the protocol transcripts.
//!
//! Rows are vertex sets `X` with `2 <= |X| <= n − 1`, columns are bases.
//! Transcripts `w = (alice message, edge, head flag)` index the inner
//! dimension:
//!
//! * `T[X][w] = k·n − l` when `w` carries Alice's choice for `X` and its arc
//!   enters `X`, else `0`;
//! * `U[w][F] = 1/|F|` when `w`'s arc belongs to Bob's orientation of `F`
//!   for `w`'s message, else `0`.

use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate_instance, Graph, Limits, SparsityParams, VertexSet};
use crate::orientation::Arc;
use crate::protocol::{bob_orientation, AliceMessage, Protocol, Variant};
use crate::rational::{self, frac, int, Rational};
use crate::sparsity::{enumerate_bases, Basis};

/// A counting-inequality row, identified by its vertex set.
pub type RowIndex = VertexSet;

/// All `X` with `2 <= |X| <= n − 1`, in lexicographic order of their sorted
/// member lists.
pub fn enumerate_rows(g: &Graph, p: SparsityParams, limits: &Limits) -> Result<Vec<RowIndex>> {
    validate_instance(g, p)?;
    let n = g.n();
    if n > limits.max_row_vertices || n >= 63 {
        return Err(Error::GuardExceeded {
            what: "vertex subsets for slack rows",
            size: 1u128 << n.min(127),
            limit: 1u128 << limits.max_row_vertices,
        });
    }
    let mut rows: Vec<RowIndex> = (0u64..1 << n)
        .filter(|b| (2..n as u32).contains(&b.count_ones()))
        .map(VertexSet::from_bits)
        .collect();
    rows.sort();
    Ok(rows)
}

/// `k|X| − l − |F ∩ E(X)|`.
pub fn slack_value(g: &Graph, p: SparsityParams, x: &RowIndex, f: &Basis) -> Rational {
    int(slack_int(g, p, &x.mask(g.n()), x.len(), f))
}

fn slack_int(g: &Graph, p: SparsityParams, mask: &[bool], size: usize, f: &Basis) -> i64 {
    p.k() * size as i64 - p.l() - g.count_induced(f.edges(), mask) as i64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlackMatrix {
    pub rows: Vec<RowIndex>,
    pub cols: Vec<Basis>,
    pub entries: Vec<Vec<Rational>>,
}

impl SlackMatrix {
    pub fn from_parts(g: &Graph, p: SparsityParams, rows: Vec<RowIndex>, cols: Vec<Basis>) -> Self {
        let entries = rows
            .iter()
            .map(|x| {
                let mask = x.mask(g.n());
                cols.iter().map(|f| int(slack_int(g, p, &mask, x.len(), f))).collect()
            })
            .collect();
        Self { rows, cols, entries }
    }

    pub fn to_csv(&self) -> String {
        let row_labels: Vec<String> = self.rows.iter().map(row_label).collect();
        let col_labels: Vec<String> = self.cols.iter().map(basis_label).collect();
        csv(&row_labels, &col_labels, &self.entries)
    }
}

pub fn slack_matrix(g: &Graph, p: SparsityParams, limits: &Limits) -> Result<SlackMatrix> {
    let rows = enumerate_rows(g, p, limits)?;
    let cols = enumerate_bases(g, p, limits)?;
    Ok(SlackMatrix::from_parts(g, p, rows, cols))
}

/// Inner index of the factorization: one complete transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TranscriptKey {
    pub alice: AliceMessage,
    pub edge: usize,
    /// `false`: head at the higher-index endpoint.
    pub reversed: bool,
}

impl TranscriptKey {
    pub fn arc(&self, g: &Graph) -> Arc {
        let (u, v) = g.edge(self.edge);
        let (tail, head) = if self.reversed { (v, u) } else { (u, v) };
        Arc {
            edge: self.edge,
            tail,
            head,
        }
    }

    pub fn label(&self, g: &Graph) -> String {
        let a = self.arc(g);
        format!("{}:{}>{}", self.alice, a.tail, a.head)
    }
}

/// Lexicographic over (message, edge index, head flag).
pub fn transcript_keys(g: &Graph, protocol: &dyn Protocol) -> Vec<TranscriptKey> {
    protocol
        .messages(g.n())
        .into_iter()
        .flat_map(|alice| {
            (0..g.m()).flat_map(move |edge| {
                [false, true].map(|reversed| TranscriptKey {
                    alice,
                    edge,
                    reversed,
                })
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub variant: Variant,
    pub transcripts: Vec<TranscriptKey>,
    /// rows × transcripts
    pub t: Vec<Vec<Rational>>,
    /// transcripts × bases
    pub u: Vec<Vec<Rational>>,
}

impl Factorization {
    pub fn inner_dim(&self) -> usize {
        self.transcripts.len()
    }

    /// `Σ_w T[i][w]·U[w][j]`.
    pub fn product_entry(&self, i: usize, j: usize) -> Rational {
        self.t[i]
            .iter()
            .zip(&self.u)
            .filter(|(t, _)| !t.is_zero())
            .map(|(t, u_row)| t * &u_row[j])
            .sum()
    }

    pub fn t_csv(&self, g: &Graph, rows: &[RowIndex]) -> String {
        let row_labels: Vec<String> = rows.iter().map(row_label).collect();
        let col_labels: Vec<String> = self.transcripts.iter().map(|w| w.label(g)).collect();
        csv(&row_labels, &col_labels, &self.t)
    }

    pub fn u_csv(&self, g: &Graph, cols: &[Basis]) -> String {
        let row_labels: Vec<String> = self.transcripts.iter().map(|w| w.label(g)).collect();
        let col_labels: Vec<String> = cols.iter().map(basis_label).collect();
        csv(&row_labels, &col_labels, &self.u)
    }
}

/// Builds `T` and `U` for the given rows and bases.
pub fn factorize(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    rows: &[RowIndex],
    bases: &[Basis],
) -> Result<Factorization> {
    validate_instance(g, p)?;
    protocol.check_regime(p)?;
    let transcripts = transcript_keys(g, protocol);
    let messages = protocol.messages(g.n());
    let per_message = 2 * g.m();
    let payoff = p.bound(g.n());

    let mut u = vec![vec![Rational::zero(); bases.len()]; transcripts.len()];
    for (mi, &msg) in messages.iter().enumerate() {
        for (j, f) in bases.iter().enumerate() {
            let weight = frac(1, f.cardinality() as i64);
            for arc in bob_orientation(g, p, protocol, msg, f)?.arcs(g) {
                let (lo, _) = g.edge(arc.edge);
                let w = mi * per_message + 2 * arc.edge + usize::from(arc.tail != lo);
                u[w][j] = weight.clone();
            }
        }
    }

    let mut t = vec![vec![Rational::zero(); transcripts.len()]; rows.len()];
    for (i, x) in rows.iter().enumerate() {
        let msg = protocol.alice_choice(x)?;
        let mi = messages
            .iter()
            .position(|&m| m == msg)
            .ok_or_else(|| Error::Internal(format!("message {msg} missing from transcript order")))?;
        let mask = x.mask(g.n());
        for w in mi * per_message..(mi + 1) * per_message {
            let arc = transcripts[w].arc(g);
            if !mask[arc.tail] && mask[arc.head] {
                t[i][w] = int(payoff);
            }
        }
    }

    Ok(Factorization {
        variant: protocol.variant(),
        transcripts,
        t,
        u,
    })
}

/// Slack matrix plus the protocol factorization over the same rows/columns.
pub fn build_factorization(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    limits: &Limits,
) -> Result<(SlackMatrix, Factorization)> {
    protocol.check_regime(p)?;
    let s = slack_matrix(g, p, limits)?;
    let fac = factorize(g, p, protocol, &s.rows, &s.cols)?;
    Ok((s, fac))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FactorizationCheck {
    Exact,
    Negative {
        factor: &'static str,
        row: usize,
        col: usize,
        value: String,
    },
    Mismatch {
        row: usize,
        col: usize,
        expected: String,
        got: String,
    },
}

impl FactorizationCheck {
    pub fn holds(&self) -> bool {
        matches!(self, FactorizationCheck::Exact)
    }
}

/// Exact check of `T, U >= 0` and `T·U = S`, reporting the first violation.
pub fn verify_factorization(s: &SlackMatrix, fac: &Factorization) -> Result<FactorizationCheck> {
    let inner = fac.inner_dim();
    if fac.t.len() != s.rows.len()
        || fac.t.iter().any(|r| r.len() != inner)
        || fac.u.len() != inner
        || fac.u.iter().any(|r| r.len() != s.cols.len())
        || s.entries.len() != s.rows.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, T is {}x{}, U is {}x{}",
            s.rows.len(),
            s.cols.len(),
            fac.t.len(),
            fac.t.first().map_or(inner, Vec::len),
            fac.u.len(),
            fac.u.first().map_or(s.cols.len(), Vec::len),
        )));
    }
    for (factor, m) in [("T", &fac.t), ("U", &fac.u)] {
        for (row, r) in m.iter().enumerate() {
            if let Some(col) = r.iter().position(|v| !rational::is_nonnegative(v)) {
                return Ok(FactorizationCheck::Negative {
                    factor,
                    row,
                    col,
                    value: rational::fmt(&r[col]),
                });
            }
        }
    }
    for (i, s_row) in s.entries.iter().enumerate() {
        for (j, expected) in s_row.iter().enumerate() {
            let got = fac.product_entry(i, j);
            if &got != expected {
                return Ok(FactorizationCheck::Mismatch {
                    row: i,
                    col: j,
                    expected: rational::fmt(expected),
                    got: rational::fmt(&got),
                });
            }
        }
    }
    Ok(FactorizationCheck::Exact)
}

pub fn row_label(x: &RowIndex) -> String {
    let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    format!("X={}", parts.join(" "))
}

pub fn basis_label(f: &Basis) -> String {
    let parts: Vec<String> = f.edges().iter().map(|e| e.to_string()).collect();
    format!("F={}", parts.join(" "))
}

/// CSV with a header line of column labels and one labelled line per row;
/// entries as exact rationals `p/q`.
fn csv(row_labels: &[String], col_labels: &[String], entries: &[Vec<Rational>]) -> String {
    let mut out = String::new();
    out.push_str("index");
    for c in col_labels {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (label, row) in row_labels.iter().zip(entries) {
        out.push_str(label);
        for v in row {
            let _ = write!(out, ",{}", rational::fmt(v));
        }
        out.push('\n');
    }
    out
}
