use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sparsity_ef::formulation::{self, build_lifted, emit_ine, verify_extension};
use sparsity_ef::orientation::{orient_with_targets, InDegreeTarget};
use sparsity_ef::protocol::{self, exact_expectation, monte_carlo, AliceMessage, VariantChoice};
use sparsity_ef::rational;
use sparsity_ef::slack::{build_factorization, slack_matrix, slack_value, verify_factorization};
use sparsity_ef::sparsity::{self, enumerate_bases, Basis};
use sparsity_ef::{graph::validate_instance, EdgeSet, Error, Graph, Limits, SparsityParams, VertexSet};

const EXIT_INVALID: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_EMPTY: u8 = 4;

/// Extended formulations of (k,l)-sparsity matroid base polytopes.
#[derive(Parser, Debug)]
#[command(name = "sparsity-ef", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Instance {
    /// Graph JSON file: {"n": <int>, "edges": [[u,v], ...]}
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: i64,
    #[arg(long = "l")]
    l: i64,
    /// Cap on enumerated candidate subsets.
    #[arg(long = "max-enum", env = "SPARSITY_EF_MAX_ENUM")]
    max_enum: Option<u128>,
}

#[derive(Args, Debug, Clone)]
struct VariantArg {
    /// Protocol variant: auto, A or B.
    #[arg(long, default_value = "auto")]
    variant: VariantChoice,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide sparsity and tightness with both oracles.
    Check {
        #[command(flatten)]
        instance: Instance,
        /// Edge subset (indices or u-v pairs); defaults to all edges.
        #[arg(long)]
        edges: Option<String>,
    },
    /// List all bases, one per line.
    Bases {
        #[command(flatten)]
        instance: Instance,
    },
    /// Orient an edge subset to prescribed in-degrees.
    Orient {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        variant: VariantArg,
        #[arg(long)]
        edges: String,
        /// Explicit in-degree target per vertex.
        #[arg(long, conflicts_with = "alice")]
        targets: Option<String>,
        /// Alice's vertices; targets come from the protocol variant.
        #[arg(long)]
        alice: Option<String>,
    },
    /// Run the protocol on one (X, F) cell.
    Protocol {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        variant: VariantArg,
        /// Alice's vertex set X.
        #[arg(long)]
        x: String,
        /// Bob's basis F.
        #[arg(long)]
        edges: String,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the slack matrix as CSV.
    Slack {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify the protocol factorization S = T·U.
    Factorize {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        variant: VariantArg,
        /// Directory for S.csv, T.csv and U.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the lifted polytope as a .ine H-representation.
    Emit {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        variant: VariantArg,
        #[arg(long)]
        out: PathBuf,
        /// Also run the extension audit and print its JSON report.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random convex combinations audited by --verify.
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Audit the extended formulation and print a JSON report.
    Verify {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        variant: VariantArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

struct Loaded {
    graph: Graph,
    params: SparsityParams,
    limits: Limits,
}

fn load(instance: &Instance) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(&instance.graph)
        .with_context(|| format!("reading {}", instance.graph.display()))?;
    let graph = Graph::from_json(&text)?;
    let params = SparsityParams::new(instance.k, instance.l)?;
    validate_instance(&graph, params)?;
    let limits = match instance.max_enum {
        Some(cap) => Limits::with_max_enum(cap),
        None => Limits::default(),
    };
    Ok(Loaded {
        graph,
        params,
        limits,
    })
}

fn parse_indices(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().with_context(|| format!("bad index `{s}`")))
        .collect()
}

/// Comma-separated edge indices, or `u-v` endpoint pairs.
fn parse_edges(g: &Graph, text: &str) -> anyhow::Result<EdgeSet> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.iter().any(|s| s.contains('-')) {
        let mut pairs = Vec::new();
        for item in items {
            let Some((u, v)) = item.split_once('-') else {
                bail!("mixed edge formats in `{text}`");
            };
            pairs.push((u.trim().parse()?, v.trim().parse()?));
        }
        Ok(EdgeSet::from_pairs(g, pairs)?)
    } else {
        let f = EdgeSet::new(parse_indices(text)?);
        g.check_edges(&f)?;
        Ok(f)
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run(cli: Cli, out: &mut String) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check { instance, edges } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let f = match edges {
                Some(text) => parse_edges(&graph, &text)?,
                None => graph.all_edges(),
            };
            let brute = sparsity::BruteForce::with_limits(&limits);
            let oracles: [&dyn sparsity::SparsityOracle; 2] = [sparsity::oracle("pebble")?, &brute];
            let mut verdicts = Vec::new();
            for oracle in oracles {
                let sparse = oracle.is_sparse(&graph, params, &f)?;
                let tight = oracle.is_tight(&graph, params, &f)?;
                writeln!(out, "{}: sparse {}, tight {}", oracle.name(), yes(sparse), yes(tight))?;
                verdicts.push((sparse, tight));
            }
            if verdicts[0] != verdicts[1] {
                writeln!(out, "oracle disagreement")?;
                return Ok(EXIT_CHECK_FAILED);
            }
            let (sparse, tight) = verdicts[0];
            writeln!(out, "sparse: {}, tight: {}", yes(sparse), yes(tight))?;
            Ok(if sparse { 0 } else { EXIT_INVALID })
        }
        Command::Bases { instance } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let bases = enumerate_bases(&graph, params, &limits)?;
            for b in &bases {
                let parts: Vec<String> = b.edges().iter().map(|e| e.to_string()).collect();
                writeln!(out, "{}", parts.join(","))?;
            }
            writeln!(out, "count,{}", bases.len())?;
            Ok(0)
        }
        Command::Orient {
            instance,
            variant,
            edges,
            targets,
            alice,
        } => {
            let Loaded { graph, params, .. } = load(&instance)?;
            let f = parse_edges(&graph, &edges)?;
            let target = match (targets, alice) {
                (Some(t), _) => InDegreeTarget::new(parse_indices(&t)?),
                (None, Some(a)) => {
                    let pr = protocol::resolve(variant.variant, params)?;
                    let msg = match parse_indices(&a)?.as_slice() {
                        [x] => AliceMessage::Vertex(*x),
                        [x, y] => AliceMessage::Pair(*x, *y),
                        other => bail!("--alice takes one or two vertices, got {}", other.len()),
                    };
                    pr.targets(graph.n(), params, msg)?
                }
                (None, None) => bail!("pass --targets or --alice"),
            };
            let o = orient_with_targets(&graph, &f, &target)?;
            writeln!(out, "targets {target}")?;
            for arc in o.arcs(&graph) {
                writeln!(out, "{}>{}", arc.tail, arc.head)?;
            }
            writeln!(out, "rho {}", InDegreeTarget::new(o.rho().to_vec()))?;
            Ok(0)
        }
        Command::Protocol {
            instance,
            variant,
            x,
            edges,
            mode,
            samples,
            seed,
        } => {
            let Loaded { graph, params, .. } = load(&instance)?;
            let pr = protocol::resolve(variant.variant, params)?;
            let x = VertexSet::new(parse_indices(&x)?);
            let f = Basis::new(&graph, params, parse_edges(&graph, &edges)?)?;
            match mode {
                Mode::Exact => {
                    let e = exact_expectation(&graph, params, pr, &x, &f)?;
                    let s = slack_value(&graph, params, &x, &f);
                    let verdict = if e == s { "MATCH" } else { "MISMATCH" };
                    writeln!(
                        out,
                        "expectation {}, slack {}, {verdict}",
                        rational::fmt(&e),
                        rational::fmt(&s)
                    )?;
                    Ok(if e == s { 0 } else { EXIT_CHECK_FAILED })
                }
                Mode::Mc => {
                    let mc = monte_carlo(&graph, params, pr, &x, &f, samples, seed)?;
                    writeln!(
                        out,
                        "mean {} ({:.6}), stderr {:.6}, samples {}",
                        rational::fmt(&mc.mean),
                        rational::to_f64(&mc.mean),
                        mc.stderr,
                        mc.samples
                    )?;
                    Ok(0)
                }
            }
        }
        Command::Slack { instance, out: path } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let csv = slack_matrix(&graph, params, &limits)?.to_csv();
            match path {
                Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => out.push_str(&csv),
            }
            Ok(0)
        }
        Command::Factorize {
            instance,
            variant,
            out: dir,
        } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let pr = protocol::resolve(variant.variant, params)?;
            let (s, fac) = build_factorization(&graph, params, pr, &limits)?;
            let check = verify_factorization(&s, &fac)?;
            writeln!(out, "variant {}", pr.name())?;
            writeln!(out, "rows {}", s.rows.len())?;
            writeln!(out, "bases {}", s.cols.len())?;
            writeln!(out, "transcripts {}", fac.inner_dim())?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir)?;
                write_file(&dir.join("S.csv"), &s.to_csv())?;
                write_file(&dir.join("T.csv"), &fac.t_csv(&graph, &s.rows))?;
                write_file(&dir.join("U.csv"), &fac.u_csv(&graph, &s.cols))?;
            }
            if check.holds() {
                writeln!(out, "verify PASS")?;
                Ok(0)
            } else {
                writeln!(out, "verify FAIL {check:?}")?;
                Ok(EXIT_CHECK_FAILED)
            }
        }
        Command::Emit {
            instance,
            variant,
            out: path,
            verify,
            seed,
            samples,
        } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let pr = protocol::resolve(variant.variant, params)?;
            let q = build_lifted(&graph, params, pr, &limits)?;
            emit_ine(&q, &path)?;
            writeln!(
                out,
                "wrote {} ({} rows, {} columns)",
                path.display(),
                q.equality_count() + q.inequality_count(),
                1 + q.x_vars + q.y_vars()
            )?;
            if verify {
                let report = verify_extension(&graph, params, pr, &limits, samples, seed)?;
                writeln!(out, "{}", report.to_json())?;
                return Ok(if report.pass { 0 } else { EXIT_CHECK_FAILED });
            }
            Ok(0)
        }
        Command::Verify {
            instance,
            variant,
            seed,
            samples,
        } => {
            let Loaded { graph, params, limits } = load(&instance)?;
            let pr = protocol::resolve(variant.variant, params)?;
            let report: formulation::ExtensionReport =
                verify_extension(&graph, params, pr, &limits, samples, seed)?;
            writeln!(out, "{}", report.to_json())?;
            Ok(if report.pass { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::GuardExceeded { .. }) => EXIT_GUARD,
        Some(Error::EmptyBasisFamily) => EXIT_EMPTY,
        Some(Error::VerificationFailed(_)) | Some(Error::Internal(_)) => EXIT_CHECK_FAILED,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    };
    print!("{out}");
    ExitCode::from(code)
}
