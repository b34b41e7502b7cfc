//! `bw`: batch front end for the lattice toolkit.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 input or usage error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bw_core::barnes_wall::{construct_bw, verify_condition_x, BwTower};
use bw_core::json::{self, FormatError};
use bw_core::svp::{self, DEFAULT_BUDGET};
use bw_core::testkit::{canonical, random_instance, InstanceSpec};
use bw_core::twofour::verify_lemma_suite;
use bw_core::uniqueness::{self, passes_x, tower_quotient, GlueCandidate, DEFAULT_LOG2_BOUND};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "bw", version, about = "Exact Barnes-Wall and dihedral-action checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Enumeration node budget for minimum certification.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the Barnes-Wall tower of depth d.
    Construct {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check Condition X on a tower file (or a freshly built tower with --d).
    VerifyX {
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        d: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the lemma suite on an instance file or a canonical instance.
    Lemmas {
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        canonical: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate glue subgroups and filter them by Condition X.
    Glue {
        #[arg(long, default_value_t = 3)]
        d: u32,
        /// Required for d ≠ 3. Certifies only X-passers and, with --json,
        /// streams one line per candidate.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Certify the minimum of a lattice, or list vectors of norm ≤ bound.
    Svp {
        file: PathBuf,
        #[arg(long)]
        bound: Option<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a seeded random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize, Debug, Clone)]
struct Row {
    group: String,
    check: String,
    computed: String,
    expected: String,
    pass: bool,
}

impl Row {
    fn new(group: &str, check: &str, computed: impl ToString, expected: impl ToString, pass: bool) -> Self {
        Row {
            group: group.into(),
            check: check.into(),
            computed: computed.to_string(),
            expected: expected.to_string(),
            pass,
        }
    }
}

#[derive(Serialize, Debug)]
struct RunReport {
    command: String,
    inputs_digest: String,
    rows: Vec<Row>,
    pass: bool,
    wall_clock_s: f64,
    nodes: u64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
}

enum Failure {
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Outcome {
    rows: Vec<Row>,
    nodes: u64,
    details: serde_json::Value,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T>(path: &Path, f: impl FnOnce(&str) -> Result<T, FormatError>) -> Result<T, Failure> {
    let text = read(path)?;
    f(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => Ok(()),
    }
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn construct(d: u32, out: &Option<PathBuf>) -> Result<Outcome, Failure> {
    let tower = construct_bw(d)?;
    let text = json::tower_to_string(&tower);
    write_out(out, &text)?;
    let l = tower.lattice();
    let rows = vec![
        Row::new("construct", "rank", l.rank(), 1usize << d, l.rank() == 1 << d),
        Row::new("construct", "det", l.determinant(), bw_core::barnes_wall::expected_determinant(d), {
            l.determinant().to_integer() == bw_core::barnes_wall::expected_determinant(d) && l.determinant().is_integer()
        }),
        Row::new("construct", "even", l.is_even(), true, l.is_even()),
    ];
    let details = if out.is_none() {
        serde_json::from_str(&text).expect("valid json")
    } else {
        serde_json::Value::Null
    };
    Ok(Outcome {
        rows,
        nodes: 0,
        details,
    })
}

fn verify_x(tower: &BwTower, budget: u64) -> Outcome {
    let rep = verify_condition_x(tower, budget);
    let rows = rep
        .rows
        .iter()
        .map(|r| Row::new(&format!("X({})", r.clause), &r.check, &r.computed, &r.expected, r.pass))
        .collect();
    Outcome {
        rows,
        nodes: rep.nodes,
        details: serde_json::Value::Null,
    }
}

fn lemmas(action: &bw_core::action::DihedralAction) -> Outcome {
    let rep = verify_lemma_suite(action);
    let rows = rep
        .rows
        .iter()
        .map(|r| Row::new(&r.lemma, &r.check, &r.computed, &r.expected, r.pass))
        .collect();
    Outcome {
        rows,
        nodes: 0,
        details: serde_json::to_value(&rep.values).expect("serializable"),
    }
}

#[derive(Serialize)]
struct GlueLine {
    generators: Vec<String>,
    certificate: Option<uniqueness::Certificate>,
    passes_x: bool,
}

fn bits(c: &GlueCandidate) -> Vec<String> {
    c.generators
        .iter()
        .map(|g| g.to_ints().iter().map(|b| b.to_string()).collect())
        .collect()
}

fn glue(d: u32, full: bool, budget: u64, json_out: bool) -> Result<Outcome, Failure> {
    if d != 3 && !full {
        return Err(Failure::Input(format!("glue at d = {d} is opt-in: pass --full")));
    }
    let tower = construct_bw(d)?;
    let bound = if full { 64 } else { DEFAULT_LOG2_BOUND };
    let q = tower_quotient(&tower, bound)?;
    let mut visited = 0u64;
    let mut lines = Vec::new();
    let mut passers = 0u64;
    let mut certified = true;
    let mut fixed_passes = false;
    let mut nodes = 0u64;
    let stdout = io::stdout();
    let mut failure = None;
    uniqueness::for_each_glue(&q, |c| {
        visited += 1;
        let ok = passes_x(&c, &tower, budget);
        // Streaming mode certifies only the passers.
        let certificate = if ok || !full {
            match uniqueness::certificate(&c.lattice, budget) {
                Ok(cert) => Some(cert),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    None
                }
            }
        } else {
            None
        };
        if ok {
            passers += 1;
            fixed_passes |= c.t_fixed;
            let unimodular = tower.lattice().determinant();
            certified &= certificate.as_ref().is_some_and(|k| {
                k.rank == tower.lattice().rank()
                    && k.even
                    && k.determinant == unimodular
                    && k.min_norm.is_integer()
                    && k.min_norm.to_integer() == bw_core::barnes_wall::expected_minimum(d)
            });
        }
        if let Some(k) = &certificate {
            nodes += k.nodes;
        }
        let line = GlueLine {
            generators: bits(&c),
            certificate,
            passes_x: ok,
        };
        if full && json_out {
            let mut h = stdout.lock();
            let _ = writeln!(h, "{}", serde_json::to_string(&line).expect("serializable"));
        } else {
            lines.push(line);
        }
    });
    if let Some(e) = failure {
        return Err(Failure::Input(e));
    }
    let expected = q.subgroup_count();
    let rows = vec![
        Row::new("glue", "quotient order", format!("2^{}", q.dim()), "", true),
        Row::new("glue", "subgroups visited", visited, expected, visited == expected),
        Row::new("glue", "X-passing candidates", passers, "≥ 1", passers >= 1),
        Row::new("glue", "passers share certificate", certified, true, certified),
        Row::new("glue", "t-fixed glue passes", fixed_passes, true, fixed_passes),
    ];
    let details = if lines.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::to_value(&lines).expect("serializable")
    };
    Ok(Outcome { rows, nodes, details })
}

fn svp_cmd(file: &Path, bound: Option<i64>, budget: u64) -> Result<Outcome, Failure> {
    let l = parse(file, json::lattice_from_str)?;
    match bound {
        Some(b) => {
            let r = svp::vectors_below(&l, &b.into(), budget);
            let vecs: Vec<Vec<String>> = r
                .vectors
                .iter()
                .map(|v| v.iter().map(|x| x.to_string()).collect())
                .collect();
            let norms: Vec<String> = r.norms.iter().map(|x| x.to_string()).collect();
            let rows = vec![
                Row::new("svp", "exhaustive", r.exhaustive, true, r.exhaustive),
                Row::new("svp", "vectors with norm ≤ bound (up to sign)", r.vectors.len(), "", true),
            ];
            Ok(Outcome {
                rows,
                nodes: r.nodes,
                details: serde_json::json!({"bound": b.to_string(), "vectors": vecs, "norms": norms}),
            })
        }
        None => match svp::min_norm(&l, budget) {
            Ok(m) => {
                let w: Vec<String> = m.witness.iter().map(|x| x.to_string()).collect();
                Ok(Outcome {
                    rows: vec![Row::new("svp", "minimum norm", &m.norm, "", true)],
                    nodes: m.nodes,
                    details: serde_json::json!({"min_norm": m.norm.to_string(), "witness": w}),
                })
            }
            Err(e) => Ok(Outcome {
                rows: vec![Row::new("svp", "minimum norm", e, "certified", false)],
                nodes: budget,
                details: serde_json::Value::Null,
            }),
        },
    }
}

fn gen(spec: InstanceSpec, out: &Option<PathBuf>) -> Result<Outcome, Failure> {
    let a = random_instance(&spec)?;
    let text = json::instance_to_string(&a, Some(spec));
    write_out(out, &text)?;
    let details = if out.is_none() {
        serde_json::from_str(&text).expect("valid json")
    } else {
        serde_json::Value::Null
    };
    Ok(Outcome {
        rows: vec![Row::new("gen", "rank", a.lattice().rank(), 2 * spec.n, a.lattice().rank() == 2 * spec.n)],
        nodes: 0,
        details,
    })
}

fn run(cmd: &Command) -> Result<(String, String, Outcome, Common), Failure> {
    Ok(match cmd {
        Command::Construct { d, out, common } => {
            let o = construct(*d, out)?;
            ("construct".into(), digest(&[b"construct", &d.to_le_bytes()]), o, common.clone())
        }
        Command::VerifyX { file, d, common } => {
            let (tower, dig) = match (file, d) {
                (Some(p), _) => {
                    let text = read(p)?;
                    let t = json::tower_from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
                    (t, digest(&[b"verify-x", text.as_bytes()]))
                }
                (None, Some(d)) => (construct_bw(*d)?, digest(&[b"verify-x", &d.to_le_bytes()])),
                (None, None) => return Err(Failure::Input("verify-x needs a tower file or --d".into())),
            };
            ("verify-x".into(), dig, verify_x(&tower, common.budget), common.clone())
        }
        Command::Lemmas { file, canonical: name, common } => {
            let (action, dig) = match (file, name) {
                (Some(p), _) => {
                    let text = read(p)?;
                    let a = json::instance_from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
                    (a, digest(&[b"lemmas", text.as_bytes()]))
                }
                (None, Some(n)) => (canonical(n)?, digest(&[b"lemmas", n.as_bytes()])),
                (None, None) => return Err(Failure::Input("lemmas needs an instance file or --canonical".into())),
            };
            ("lemmas".into(), dig, lemmas(&action), common.clone())
        }
        Command::Glue { d, full, common } => {
            let o = glue(*d, *full, common.budget, common.json)?;
            ("glue".into(), digest(&[b"glue", &d.to_le_bytes(), &[*full as u8]]), o, common.clone())
        }
        Command::Svp { file, bound, common } => {
            let o = svp_cmd(file, *bound, common.budget)?;
            let text = read(file)?;
            let b = bound.map(|b| b.to_string()).unwrap_or_default();
            ("svp".into(), digest(&[b"svp", text.as_bytes(), b.as_bytes()]), o, common.clone())
        }
        Command::Gen {
            seed,
            n,
            depth,
            out,
            common,
        } => {
            let spec = InstanceSpec {
                seed: *seed,
                n: *n,
                sublattice_depth: *depth,
            };
            let o = gen(spec, out)?;
            let dig = digest(&[b"gen", &seed.to_le_bytes(), &n.to_le_bytes(), &depth.to_le_bytes()]);
            ("gen".into(), dig, o, common.clone())
        }
    })
}

fn render_table(r: &RunReport) -> String {
    let mut s = String::new();
    let w = r.rows.iter().map(|x| x.group.len() + x.check.len() + 1).max().unwrap_or(0);
    for x in &r.rows {
        let label = format!("{} {}", x.group, x.check);
        let status = if x.pass { "PASS" } else { "FAIL" };
        if x.expected.is_empty() {
            s.push_str(&format!("{status}  {label:<w$}  {}\n", x.computed));
        } else {
            s.push_str(&format!("{status}  {label:<w$}  {} (expected {})\n", x.computed, x.expected));
        }
    }
    s.push_str(&format!(
        "{}: {} ({} rows, {} nodes, {:.2} s)\n",
        r.command,
        if r.pass { "pass" } else { "FAIL" },
        r.rows.len(),
        r.nodes,
        r.wall_clock_s
    ));
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let (command, inputs_digest, outcome, common) = match run(&cli.command) {
        Ok(x) => x,
        Err(Failure::Input(msg)) => {
            eprintln!("bw: {msg}");
            return ExitCode::from(2);
        }
    };
    let pass = outcome.rows.iter().all(|r| r.pass);
    let report = RunReport {
        command,
        inputs_digest,
        rows: outcome.rows,
        pass,
        wall_clock_s: start.elapsed().as_secs_f64(),
        nodes: outcome.nodes,
        details: outcome.details,
    };
    let text = if common.json {
        serde_json::to_string_pretty(&report).expect("serializable") + "\n"
    } else {
        render_table(&report)
    };
    let _ = io::stdout().write_all(text.as_bytes());
    ExitCode::from(if pass { 0 } else { 1 })
}
