//! The two randomized protocols computing the slack matrix in expectation.
//!
//! Alice holds a vertex set `X`, Bob holds a basis `F`. Alice announces one
//! vertex (variant A, `k >= l`) or two vertices (variant B, `k <= l`) of `X`;
//! Bob orients `F` to the in-degree targets those vertices induce, then sends
//! a uniformly random arc `(u, v)`; the output is `k·n − l` when the arc
//! enters `X` and `0` otherwise.
//!
//! Each variant implements [`Protocol`] and is looked up by name through
//! [`protocol`] or chosen from the parameters by [`resolve`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate_instance, Graph, SparsityParams, VertexSet};
use crate::orientation::{
    orient_with_targets, protocol_targets_a, protocol_targets_b, Arc, InDegreeTarget, Orientation,
};
use crate::rational::{frac, int, Rational};
use crate::sparsity::Basis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Variant selection as given on the command line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VariantChoice {
    #[default]
    Auto,
    Fixed(Variant),
}

impl FromStr for VariantChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(VariantChoice::Auto),
            "A" | "a" => Ok(VariantChoice::Fixed(Variant::A)),
            "B" | "b" => Ok(VariantChoice::Fixed(Variant::B)),
            _ => Err(Error::UnknownStrategy {
                kind: "protocol variant",
                name: s.to_string(),
            }),
        }
    }
}

/// What Alice announces in the first step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AliceMessage {
    Vertex(usize),
    Pair(usize, usize),
}

impl AliceMessage {
    pub fn vertices(self) -> Vec<usize> {
        match self {
            AliceMessage::Vertex(x) => vec![x],
            AliceMessage::Pair(x, y) => vec![x, y],
        }
    }
}

impl fmt::Display for AliceMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AliceMessage::Vertex(x) => write!(f, "x{x}"),
            AliceMessage::Pair(x, y) => write!(f, "x{x}y{y}"),
        }
    }
}

pub trait Protocol: Send + Sync {
    fn variant(&self) -> Variant;

    fn name(&self) -> &'static str {
        self.variant().name()
    }

    fn check_regime(&self, p: SparsityParams) -> Result<()>;

    fn supports(&self, p: SparsityParams) -> bool {
        self.check_regime(p).is_ok()
    }

    /// Deterministic choice of Alice's announced vertices from `X`.
    fn alice_choice(&self, x: &VertexSet) -> Result<AliceMessage>;

    /// Every message Alice might send on `n` vertices, in transcript order.
    fn messages(&self, n: usize) -> Vec<AliceMessage>;

    /// Bob's in-degree targets for a given message.
    fn targets(&self, n: usize, p: SparsityParams, msg: AliceMessage) -> Result<InDegreeTarget>;

    /// Bits Alice spends in the first step.
    fn alice_bits(&self, n: usize) -> u32;
}

/// Single-vertex protocol, valid when `k >= l`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProtocolA;

/// Two-vertex protocol, valid when `k <= l`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProtocolB;

impl Protocol for ProtocolA {
    fn variant(&self) -> Variant {
        Variant::A
    }

    fn check_regime(&self, p: SparsityParams) -> Result<()> {
        if p.k() >= p.l() {
            Ok(())
        } else {
            Err(Error::Regime {
                variant: "A",
                requirement: "k >= l",
                k: p.k(),
                l: p.l(),
            })
        }
    }

    fn alice_choice(&self, x: &VertexSet) -> Result<AliceMessage> {
        x.iter().next().map(AliceMessage::Vertex).ok_or(Error::AliceSetTooSmall {
            variant: "A",
            needed: 1,
            got: 0,
        })
    }

    fn messages(&self, n: usize) -> Vec<AliceMessage> {
        (0..n).map(AliceMessage::Vertex).collect()
    }

    fn targets(&self, n: usize, p: SparsityParams, msg: AliceMessage) -> Result<InDegreeTarget> {
        match msg {
            AliceMessage::Vertex(x) => protocol_targets_a(n, p, x),
            AliceMessage::Pair(..) => Err(Error::Internal("variant A takes a single vertex".into())),
        }
    }

    fn alice_bits(&self, n: usize) -> u32 {
        ceil_log2(n)
    }
}

impl Protocol for ProtocolB {
    fn variant(&self) -> Variant {
        Variant::B
    }

    fn check_regime(&self, p: SparsityParams) -> Result<()> {
        if p.k() <= p.l() {
            Ok(())
        } else {
            Err(Error::Regime {
                variant: "B",
                requirement: "k <= l",
                k: p.k(),
                l: p.l(),
            })
        }
    }

    fn alice_choice(&self, x: &VertexSet) -> Result<AliceMessage> {
        match x.as_slice() {
            [a, b, ..] => Ok(AliceMessage::Pair(*a, *b)),
            s => Err(Error::AliceSetTooSmall {
                variant: "B",
                needed: 2,
                got: s.len(),
            }),
        }
    }

    fn messages(&self, n: usize) -> Vec<AliceMessage> {
        (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| AliceMessage::Pair(x, y)))
            .collect()
    }

    fn targets(&self, n: usize, p: SparsityParams, msg: AliceMessage) -> Result<InDegreeTarget> {
        match msg {
            AliceMessage::Pair(x, y) => protocol_targets_b(n, p, x, y),
            AliceMessage::Vertex(..) => Err(Error::Internal("variant B takes a vertex pair".into())),
        }
    }

    fn alice_bits(&self, n: usize) -> u32 {
        2 * ceil_log2(n)
    }
}

static PROTOCOL_A: ProtocolA = ProtocolA;
static PROTOCOL_B: ProtocolB = ProtocolB;

pub fn protocols() -> [&'static dyn Protocol; 2] {
    [&PROTOCOL_A, &PROTOCOL_B]
}

pub fn protocol(name: &str) -> Result<&'static dyn Protocol> {
    match VariantChoice::from_str(name)? {
        VariantChoice::Fixed(v) => Ok(by_variant(v)),
        VariantChoice::Auto => Err(Error::UnknownStrategy {
            kind: "protocol",
            name: name.to_string(),
        }),
    }
}

pub fn by_variant(v: Variant) -> &'static dyn Protocol {
    match v {
        Variant::A => &PROTOCOL_A,
        Variant::B => &PROTOCOL_B,
    }
}

/// `auto` picks A whenever `k >= l` (including `k = l`, where both apply and
/// A yields fewer transcripts), otherwise B. A fixed choice is checked
/// against the parameters.
pub fn resolve(choice: VariantChoice, p: SparsityParams) -> Result<&'static dyn Protocol> {
    let chosen = match choice {
        VariantChoice::Auto if p.k() >= p.l() => by_variant(Variant::A),
        VariantChoice::Auto => by_variant(Variant::B),
        VariantChoice::Fixed(v) => by_variant(v),
    };
    chosen.check_regime(p)?;
    Ok(chosen)
}

/// Every variant legal for `p`, in registry order.
pub fn applicable(p: SparsityParams) -> Vec<&'static dyn Protocol> {
    protocols().into_iter().filter(|pr| pr.supports(p)).collect()
}

pub fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Total bits exchanged: Alice's announcement, then an edge index plus one
/// orientation bit from Bob.
pub fn bit_complexity(g: &Graph, protocol: &dyn Protocol) -> Result<u32> {
    if g.m() == 0 {
        return Err(Error::DimensionMismatch("bit complexity needs |E| >= 1".into()));
    }
    Ok(protocol.alice_bits(g.n()) + ceil_log2(g.m()) + 1)
}

/// Bob's deterministic orientation of `F` for Alice's message. Failure means
/// the orientation lemmas were contradicted, which is reported as an
/// internal error.
pub fn bob_orientation(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    msg: AliceMessage,
    f: &Basis,
) -> Result<Orientation> {
    let targets = protocol.targets(g.n(), p, msg)?;
    orient_with_targets(g, f.edges(), &targets).map_err(|e| {
        Error::Internal(format!(
            "no orientation of {} with in-degrees {targets} for {msg}: {e}",
            f.edges()
        ))
    })
}

/// One complete protocol run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub alice: AliceMessage,
    pub arc: Arc,
    #[serde(serialize_with = "ser_rational")]
    pub output: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::rational::fmt(r))
}

/// Step-3 output for an arc: `k·n − l` when it enters `X`, else `0`.
pub fn output_for(g: &Graph, p: SparsityParams, mask: &[bool], arc: &Arc) -> i64 {
    if !mask[arc.tail] && mask[arc.head] {
        p.bound(g.n())
    } else {
        0
    }
}

struct Prepared {
    msg: AliceMessage,
    orientation: Orientation,
    mask: Vec<bool>,
}

fn prepare(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    x: &VertexSet,
    f: &Basis,
) -> Result<Prepared> {
    validate_instance(g, p)?;
    protocol.check_regime(p)?;
    g.check_vertices(x)?;
    g.check_edges(f.edges())?;
    if f.cardinality() != p.tight_count(g.n()) {
        return Err(Error::NotABasis(format!(
            "|F| = {} but a basis has {} edges",
            f.cardinality(),
            p.tight_count(g.n())
        )));
    }
    let msg = protocol.alice_choice(x)?;
    let orientation = bob_orientation(g, p, protocol, msg, f)?;
    Ok(Prepared {
        msg,
        orientation,
        mask: x.mask(g.n()),
    })
}

/// A single seeded execution of all three steps.
pub fn run_once(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    x: &VertexSet,
    f: &Basis,
    seed: u64,
) -> Result<Transcript> {
    let prep = prepare(g, p, protocol, x, f)?;
    let arcs: Vec<Arc> = prep.orientation.arcs(g).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arc = arcs[rng.gen_range(0..arcs.len())];
    Ok(Transcript {
        alice: prep.msg,
        output: int(output_for(g, p, &prep.mask, &arc)),
        arc,
    })
}

/// Every equally likely transcript for `(X, F)`, each with probability `1/|F|`.
pub fn transcripts(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    x: &VertexSet,
    f: &Basis,
) -> Result<Vec<Transcript>> {
    let prep = prepare(g, p, protocol, x, f)?;
    Ok(prep
        .orientation
        .arcs(g)
        .map(|arc| Transcript {
            alice: prep.msg,
            output: int(output_for(g, p, &prep.mask, &arc)),
            arc,
        })
        .collect())
}

/// Expected output by enumerating Bob's `|F|` equally likely arcs.
pub fn exact_expectation(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    x: &VertexSet,
    f: &Basis,
) -> Result<Rational> {
    let all = transcripts(g, p, protocol, x, f)?;
    let weight = frac(1, all.len() as i64);
    Ok(all.iter().map(|t| &t.output * &weight).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarlo {
    #[serde(serialize_with = "ser_rational")]
    pub mean: Rational,
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
}

/// Sample mean and standard error over `samples` runs.
///
/// Draws come from one ChaCha8 stream seeded with `seed`, so results are
/// reproducible for a fixed seed.
pub fn monte_carlo(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    x: &VertexSet,
    f: &Basis,
    samples: u64,
    seed: u64,
) -> Result<MonteCarlo> {
    if samples == 0 {
        return Err(Error::DimensionMismatch("monte carlo needs samples >= 1".into()));
    }
    let prep = prepare(g, p, protocol, x, f)?;
    let arcs: Vec<Arc> = prep.orientation.arcs(g).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let arc = &arcs[rng.gen_range(0..arcs.len())];
            output_for(g, p, &prep.mask, arc) != 0
        })
        .count() as u64;
    let payoff = p.bound(g.n());
    let mean = Rational::new((hits as i64 * payoff).into(), (samples as i64).into());
    // outputs are 0 or `payoff`, so the sample variance has a closed form
    let stderr = if samples > 1 {
        let s = samples as f64;
        let q = hits as f64 / s;
        let var = (payoff as f64).powi(2) * q * (1.0 - q) * s / (s - 1.0);
        (var / s).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarlo {
        mean,
        stderr,
        samples,
        hits,
    })
}
