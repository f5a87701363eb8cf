//! The extended formulation induced by a protocol factorization.
//!
//! Variables are the original edge variables `x` followed by one variable
//! `y_w` per transcript. The system is
//!
//! ```text
//! Σ_{e∈E(X)} x_e + Σ_w T[X][w]·y_w = k|X| − l     for every slack row X
//! Σ_{e∈E} x_e                      = k·n − l
//! x >= 0, y >= 0
//! ```
//!
//! Projecting out `y` gives back the base polytope: every basis lifts with
//! `y = U[·][F]`, and since `T >= 0` each equality row forces the matching
//! counting inequality on `x`.

use std::io::Write;
use std::path::Path;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate_instance, Graph, Limits, SparsityParams, VertexSet};
use crate::protocol::{bit_complexity, bob_orientation, Protocol, Variant};
use crate::rational::{self, frac, int, Rational};
use crate::slack::{
    enumerate_rows, factorize, transcript_keys, verify_factorization, Factorization,
    FactorizationCheck, RowIndex, SlackMatrix, TranscriptKey,
};
use crate::sparsity::{enumerate_bases, Basis};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualityRow {
    pub set: RowIndex,
    /// Edges of `E(X)`, each with coefficient one.
    pub x_support: Vec<usize>,
    /// Nonzero `T[X][w]` entries.
    pub y_terms: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedPolytope {
    pub n: usize,
    pub params: SparsityParams,
    pub variant: Variant,
    pub x_vars: usize,
    pub transcripts: Vec<TranscriptKey>,
    pub rows: Vec<EqualityRow>,
    pub global_rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedPoint {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
}

impl LiftedPoint {
    /// `Σ λ_i · p_i`.
    pub fn combine(points: &[(Rational, &LiftedPoint)]) -> Option<LiftedPoint> {
        let (_, first) = points.first()?;
        let mut x = vec![Rational::zero(); first.x.len()];
        let mut y = vec![Rational::zero(); first.y.len()];
        for (lambda, p) in points {
            for (acc, v) in x.iter_mut().zip(&p.x) {
                *acc += lambda * v;
            }
            for (acc, v) in y.iter_mut().zip(&p.y) {
                *acc += lambda * v;
            }
        }
        Some(LiftedPoint { x, y })
    }
}

impl LiftedPolytope {
    pub fn from_factorization(
        g: &Graph,
        p: SparsityParams,
        rows: &[RowIndex],
        fac: &Factorization,
    ) -> Result<Self> {
        if fac.t.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} slack rows but T has {} rows",
                rows.len(),
                fac.t.len()
            )));
        }
        let rows = rows
            .iter()
            .zip(&fac.t)
            .map(|(x, t_row)| {
                Ok(EqualityRow {
                    set: x.clone(),
                    x_support: g.induced_edges(x)?.iter().collect(),
                    y_terms: t_row
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(w, v)| (w, v.clone()))
                        .collect(),
                    rhs: int(p.k() * x.len() as i64 - p.l()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: g.n(),
            params: p,
            variant: fac.variant,
            x_vars: g.m(),
            transcripts: fac.transcripts.clone(),
            rows,
            global_rhs: int(p.bound(g.n())),
        })
    }

    pub fn y_vars(&self) -> usize {
        self.transcripts.len()
    }

    /// Row equalities plus the global equality.
    pub fn equality_count(&self) -> usize {
        self.rows.len() + 1
    }

    /// Nonnegativity constraints on `x` and `y`.
    pub fn inequality_count(&self) -> usize {
        self.x_vars + self.y_vars()
    }

    /// First violated constraint of `Q`, if any.
    pub fn violation(&self, point: &LiftedPoint) -> Option<String> {
        if point.x.len() != self.x_vars || point.y.len() != self.y_vars() {
            return Some(format!(
                "point has {}+{} coordinates, expected {}+{}",
                point.x.len(),
                point.y.len(),
                self.x_vars,
                self.y_vars()
            ));
        }
        if let Some(e) = point.x.iter().position(|v| !rational::is_nonnegative(v)) {
            return Some(format!("x[{e}] = {} < 0", rational::fmt(&point.x[e])));
        }
        if let Some(w) = point.y.iter().position(|v| !rational::is_nonnegative(v)) {
            return Some(format!("y[{w}] = {} < 0", rational::fmt(&point.y[w])));
        }
        for row in &self.rows {
            let lhs: Rational = row.x_support.iter().map(|&e| point.x[e].clone()).sum::<Rational>()
                + row.y_terms.iter().map(|(w, t)| t * &point.y[*w]).sum::<Rational>();
            if lhs != row.rhs {
                return Some(format!(
                    "row {} has value {} but right-hand side {}",
                    row.set,
                    rational::fmt(&lhs),
                    rational::fmt(&row.rhs)
                ));
            }
        }
        let total: Rational = point.x.iter().cloned().sum();
        if total != self.global_rhs {
            return Some(format!(
                "Σx = {} but the global equality needs {}",
                rational::fmt(&total),
                rational::fmt(&self.global_rhs)
            ));
        }
        None
    }

    pub fn check_feasible(&self, point: &LiftedPoint) -> Result<()> {
        match self.violation(point) {
            Some(msg) => Err(Error::InfeasiblePoint(msg)),
            None => Ok(()),
        }
    }

    /// cdd/lrs H-representation: every constraint as `b − A·z >= 0` (or
    /// `= 0` for rows listed on the `linearity` line), equalities first.
    pub fn write_ine(&self, out: &mut impl Write) -> std::io::Result<()> {
        let cols = 1 + self.x_vars + self.y_vars();
        let eqs = self.equality_count();
        let total = eqs + self.inequality_count();
        writeln!(
            out,
            "* (k,l)=({},{}) n={} m={} variant {}",
            self.params.k(),
            self.params.l(),
            self.n,
            self.x_vars,
            self.variant
        )?;
        writeln!(out, "H-representation")?;
        write!(out, "linearity {eqs}")?;
        for i in 1..=eqs {
            write!(out, " {i}")?;
        }
        writeln!(out)?;
        writeln!(out, "begin")?;
        writeln!(out, "{total} {cols} rational")?;

        let mut line = vec![Rational::zero(); cols];
        let emit = |line: &[Rational], out: &mut dyn Write| -> std::io::Result<()> {
            let parts: Vec<String> = line.iter().map(rational::fmt).collect();
            writeln!(out, "{}", parts.join(" "))
        };
        for row in &self.rows {
            line.iter_mut().for_each(|v| v.set_zero());
            line[0] = row.rhs.clone();
            for &e in &row.x_support {
                line[1 + e] = -Rational::one();
            }
            for (w, t) in &row.y_terms {
                line[1 + self.x_vars + w] = -t.clone();
            }
            emit(&line, out)?;
        }
        line.iter_mut().for_each(|v| v.set_zero());
        line[0] = self.global_rhs.clone();
        for v in line.iter_mut().skip(1).take(self.x_vars) {
            *v = -Rational::one();
        }
        emit(&line, out)?;
        for var in 0..self.inequality_count() {
            line.iter_mut().for_each(|v| v.set_zero());
            line[1 + var] = Rational::one();
            emit(&line, out)?;
        }
        writeln!(out, "end")
    }

    pub fn to_ine(&self) -> String {
        let mut buf = Vec::new();
        self.write_ine(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// The lifted system for `(G, (k,l))` under the given protocol. Refuses an
/// empty basis family.
pub fn build_lifted(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    limits: &Limits,
) -> Result<LiftedPolytope> {
    validate_instance(g, p)?;
    protocol.check_regime(p)?;
    if enumerate_bases(g, p, limits)?.is_empty() {
        return Err(Error::EmptyBasisFamily);
    }
    let rows = enumerate_rows(g, p, limits)?;
    let fac = factorize(g, p, protocol, &rows, &[])?;
    LiftedPolytope::from_factorization(g, p, &rows, &fac)
}

/// `x = χ_F` and `y_w = 1/|F|` for each transcript whose arc lies in Bob's
/// orientation of `F` for that transcript's message.
pub fn lift_vertex(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    f: &Basis,
) -> Result<LiftedPoint> {
    let mut x = vec![Rational::zero(); g.m()];
    for e in f.edges().iter() {
        x[e] = Rational::one();
    }
    let keys = transcript_keys(g, protocol);
    let per_message = 2 * g.m();
    let weight = frac(1, f.cardinality() as i64);
    let mut y = vec![Rational::zero(); keys.len()];
    for (mi, msg) in protocol.messages(g.n()).into_iter().enumerate() {
        for arc in bob_orientation(g, p, protocol, msg, f)?.arcs(g) {
            let (lo, _) = g.edge(arc.edge);
            y[mi * per_message + 2 * arc.edge + usize::from(arc.tail != lo)] = weight.clone();
        }
    }
    Ok(LiftedPoint { x, y })
}

/// First constraint of `P` violated by the `x`-part, over every counting
/// inequality with `|X| >= 2`, the global equality and `x >= 0`.
pub fn projection_violation(
    g: &Graph,
    p: SparsityParams,
    x: &[Rational],
    limits: &Limits,
) -> Result<Option<String>> {
    let n = g.n();
    if n > limits.max_row_vertices || n >= 63 {
        return Err(Error::GuardExceeded {
            what: "vertex subsets for the projection audit",
            size: 1u128 << n.min(127),
            limit: 1u128 << limits.max_row_vertices,
        });
    }
    if x.len() != g.m() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} coordinates for {} edges",
            x.len(),
            g.m()
        )));
    }
    if let Some(e) = x.iter().position(|v| !rational::is_nonnegative(v)) {
        return Ok(Some(format!("x[{e}] < 0")));
    }
    let total: Rational = x.iter().cloned().sum();
    if total != int(p.bound(n)) {
        return Ok(Some(format!("Σx = {} != {}", rational::fmt(&total), p.bound(n))));
    }
    for bits in (0u64..1 << n).filter(|b| b.count_ones() >= 2) {
        let set = VertexSet::from_bits(bits);
        let inside: Rational = g.induced_edges(&set)?.iter().map(|e| x[e].clone()).sum();
        if inside > int(p.bound(set.len())) {
            return Ok(Some(format!(
                "Σ over E({set}) is {} > {}",
                rational::fmt(&inside),
                p.bound(set.len())
            )));
        }
    }
    Ok(None)
}

/// Whether a point of `Q` projects into `P`. A point outside `Q` is an
/// error, not a `false`.
pub fn check_projection(
    g: &Graph,
    p: SparsityParams,
    q: &LiftedPolytope,
    point: &LiftedPoint,
    limits: &Limits,
) -> Result<bool> {
    q.check_feasible(point)?;
    Ok(projection_violation(g, p, &point.x, limits)?.is_none())
}

#[derive(Clone, Debug, Serialize)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub k: i64,
    pub l: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counts {
    pub x_vars: usize,
    pub y_vars: usize,
    pub slack_rows: usize,
    pub equalities: usize,
    /// Nonnegativity constraints on both `x` and `y`.
    pub inequalities: usize,
    /// Nonnegativity constraints on `y` only.
    pub inequalities_without_x_bounds: usize,
    pub bases: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bounds {
    pub bit_complexity: u32,
    pub protocol_bound: u128,
    /// `3·n·|E|` for A, `3·n²·|E|` for B.
    pub size_bound: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Checks {
    pub factorization_exact: bool,
    pub lifted_vertices: usize,
    pub lifts_feasible: bool,
    pub projection_audits: usize,
    pub projections_inside: bool,
    pub rows_dominate_counting_inequalities: bool,
    pub transcripts_within_protocol_bound: bool,
    pub inequalities_within_protocol_bound: bool,
    pub inequalities_within_size_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub instance: Instance,
    pub variant: Variant,
    pub counts: Counts,
    pub bounds: Bounds,
    pub checks: Checks,
    pub note: &'static str,
    pub pass: bool,
}

impl ExtensionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything `verify_extension` computes, for callers that want the
/// intermediate objects too.
#[derive(Clone, Debug)]
pub struct Extension {
    pub slack: SlackMatrix,
    pub factorization: Factorization,
    pub lifted: LiftedPolytope,
    pub lifts: Vec<LiftedPoint>,
}

pub fn build_extension(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    limits: &Limits,
) -> Result<Extension> {
    validate_instance(g, p)?;
    protocol.check_regime(p)?;
    let bases = enumerate_bases(g, p, limits)?;
    if bases.is_empty() {
        return Err(Error::EmptyBasisFamily);
    }
    let rows = enumerate_rows(g, p, limits)?;
    let fac = factorize(g, p, protocol, &rows, &bases)?;
    let lifted = LiftedPolytope::from_factorization(g, p, &rows, &fac)?;
    let lifts = bases
        .iter()
        .map(|f| lift_vertex(g, p, protocol, f))
        .collect::<Result<Vec<_>>>()?;
    let slack = SlackMatrix::from_parts(g, p, rows, bases);
    Ok(Extension {
        slack,
        factorization: fac,
        lifted,
        lifts,
    })
}

/// Audits both containments and the size accounting. A lifted basis outside
/// `Q`, or any audited point projecting outside `P`, aborts with a witness;
/// size checks are reported in the returned flags.
pub fn verify_extension(
    g: &Graph,
    p: SparsityParams,
    protocol: &dyn Protocol,
    limits: &Limits,
    audit_samples: usize,
    seed: u64,
) -> Result<ExtensionReport> {
    let ext = build_extension(g, p, protocol, limits)?;
    let q = &ext.lifted;

    let factorization_exact = match verify_factorization(&ext.slack, &ext.factorization)? {
        FactorizationCheck::Exact => true,
        other => {
            return Err(Error::VerificationFailed(format!("factorization: {other:?}")));
        }
    };

    for (f, point) in ext.slack.cols.iter().zip(&ext.lifts) {
        if let Some(msg) = q.violation(point) {
            return Err(Error::VerificationFailed(format!(
                "lift of basis {} is infeasible: {msg}",
                f.edges()
            )));
        }
        if let Some(msg) = projection_violation(g, p, &point.x, limits)? {
            return Err(Error::VerificationFailed(format!(
                "basis {} projects outside P: {msg}",
                f.edges()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for sample in 0..audit_samples {
        let raw: Vec<i64> = ext.lifts.iter().map(|_| rng.gen_range(0..=8)).collect();
        let total: i64 = raw.iter().sum::<i64>().max(1);
        let mut weighted: Vec<(Rational, &LiftedPoint)> = raw
            .iter()
            .zip(&ext.lifts)
            .filter(|(w, _)| **w > 0)
            .map(|(w, pt)| (frac(*w, total), pt))
            .collect();
        if weighted.is_empty() {
            weighted.push((Rational::one(), &ext.lifts[sample % ext.lifts.len()]));
        }
        let point = LiftedPoint::combine(&weighted).expect("nonempty combination");
        if let Some(msg) = q.violation(&point) {
            return Err(Error::VerificationFailed(format!(
                "convex combination #{sample} left Q: {msg}"
            )));
        }
        if let Some(msg) = projection_violation(g, p, &point.x, limits)? {
            return Err(Error::VerificationFailed(format!(
                "convex combination #{sample} projects outside P: {msg}"
            )));
        }
    }

    let rows_dominate = q
        .rows
        .iter()
        .all(|r| r.y_terms.iter().all(|(_, t)| rational::is_nonnegative(t)));

    let bits = bit_complexity(g, protocol)?;
    let protocol_bound = 1u128 << bits;
    let (n, m) = (g.n() as u128, g.m() as u128);
    let size_bound = match protocol.variant() {
        Variant::A => 3 * n * m,
        Variant::B => 3 * n * n * m,
    };
    let inequalities = q.inequality_count();
    let checks = Checks {
        factorization_exact,
        lifted_vertices: ext.lifts.len(),
        lifts_feasible: true,
        projection_audits: audit_samples,
        projections_inside: true,
        rows_dominate_counting_inequalities: rows_dominate,
        transcripts_within_protocol_bound: q.y_vars() as u128 <= protocol_bound,
        inequalities_within_protocol_bound: inequalities as u128 <= protocol_bound,
        inequalities_within_size_bound: inequalities as u128 <= size_bound,
    };
    let pass = checks.factorization_exact
        && checks.rows_dominate_counting_inequalities
        && checks.transcripts_within_protocol_bound
        && checks.inequalities_within_size_bound;
    Ok(ExtensionReport {
        instance: Instance {
            n: g.n(),
            m: g.m(),
            k: p.k(),
            l: p.l(),
        },
        variant: protocol.variant(),
        counts: Counts {
            x_vars: q.x_vars,
            y_vars: q.y_vars(),
            slack_rows: q.rows.len(),
            equalities: q.equality_count(),
            inequalities,
            inequalities_without_x_bounds: q.y_vars(),
            bases: ext.lifts.len(),
        },
        bounds: Bounds {
            bit_complexity: bits,
            protocol_bound,
            size_bound,
        },
        checks,
        note: "size is the number of inequality constraints, an upper bound on the facet count",
        pass,
    })
}

/// Writes the `.ine` file for `q`.
pub fn emit_ine(q: &LiftedPolytope, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    q.write_ine(&mut file)?;
    file.flush()?;
    Ok(())
}
