//! The `locc` command line: argument parsing, the five commands and their
//! JSON reports.
//!
//! Commands return a [`CommandOutput`]; printing and file writes happen in
//! [`run`], so tests can drive every command in-process.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nondisturb::{solve_local_space_with, Side};
use crate::protocol::{self, execute, synthesize, Outcome, Protocol};
use crate::random::stream;
use crate::states::{lemma5_set, Sign, StateSet};
use crate::tol;
use crate::upb::{theorem4_verify, UpbParams, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::UnknownLabel(_) => 2,
        Error::Dimension(_) => 3,
        Error::Validation(_) | Error::Precondition(_) | Error::Numerical(_) => 4,
        Error::ParameterDomain(_) => 5,
    }
}

#[derive(Debug, Parser)]
#[command(name = "locc", version, about = "Finite-LOCC discrimination of bipartite product-state sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Numerical tolerance override (meaning depends on the command).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Shots per state for `simulate`.
    #[arg(long, global = true, default_value_t = 1000)]
    pub samples: usize,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timing in the report (breaks byte-identity).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local non-disturbing operator spaces of a state set.
    Nondisturb {
        file: PathBuf,
        /// A, B or both.
        #[arg(long, default_value = "both")]
        side: String,
    },
    /// Synthesize a finite local discrimination protocol.
    Synth {
        file: PathBuf,
        /// Where to write the protocol (or failure certificate) JSON.
        #[arg(long)]
        protocol: Option<PathBuf>,
    },
    /// Run a protocol on every member of a state set.
    Simulate { protocol: PathBuf, file: PathBuf },
    /// The 16 domino-derived sets.
    Domino,
    /// Certify two-qutrit UPBs against non-disturbing product operators.
    Upb {
        /// Parameter file with thetaA, gammaA, phiA, thetaB, gammaB, phiB.
        params: Option<PathBuf>,
        /// Number of random parameter tuples instead of a file.
        #[arg(long, conflicts_with = "params")]
        random: Option<usize>,
    },
}

/// Settings shared by all commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub tol: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub timing: bool,
}

impl RunConfig {
    pub fn new(tol: Option<f64>, seed: u64, samples: usize) -> Result<Self> {
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Validation(format!("--tol must be positive, got {t}")));
            }
        }
        if samples == 0 {
            return Err(Error::Validation("--samples must be at least 1".into()));
        }
        Ok(RunConfig {
            tol,
            seed,
            samples,
            timing: false,
        })
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: None,
            seed: 0,
            samples: 1000,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    /// SHA-256 over the command name, configuration and input bytes.
    pub inputs_digest: String,
    pub verdicts: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    fn new(command: &str, cfg: &RunConfig, inputs: &[&[u8]], verdicts: Value) -> Report {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(format!("|tol={:?}|seed={}|samples={}", cfg.tol, cfg.seed, cfg.samples).as_bytes());
        for input in inputs {
            h.update((input.len() as u64).to_le_bytes());
            h.update(input);
        }
        Report {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs_digest: hex::encode(h.finalize()),
            verdicts,
            timing_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite JSON");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub report: Report,
    pub exit: i32,
    /// Human-readable summary.
    pub summary: String,
    /// Extra files to write, e.g. the synthesized protocol.
    pub artifacts: Vec<(PathBuf, String)>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_set(bytes: &[u8]) -> Result<StateSet> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    StateSet::from_json_str(text)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn cmd_nondisturb(path: &Path, side: &str, cfg: &RunConfig) -> Result<CommandOutput> {
    let bytes = read(path)?;
    let set = load_set(&bytes)?;
    let sides = match side {
        "both" => vec![Side::A, Side::B],
        s => vec![s.parse::<Side>()?],
    };
    let threshold = cfg.tol_or(tol::NULLSPACE);
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut any_candidates = false;
    for s in sides {
        let space = solve_local_space_with(&set, s, threshold);
        let verdict = if space.is_scalar() {
            "no nontrivial local non-disturbing operator"
        } else {
            any_candidates = true;
            "candidates exist"
        };
        let (kept, dropped) = space.threshold_margins();
        summary.push_str(&format!("side {s}: dim {} ({verdict})\n", space.dim));
        rows.push(json!({
            "side": s,
            "dim": space.dim,
            "verdict": verdict,
            "basis": space.basis,
            "smallest_kept_singular_value": kept,
            "largest_dropped_singular_value": dropped,
        }));
    }
    let overall = if any_candidates {
        "candidates exist"
    } else {
        "finite-LOCC necessary condition fails: no nontrivial local non-disturbing operator"
    };
    summary.push_str(overall);
    summary.push('\n');
    let verdicts = json!({ "threshold": threshold, "sides": rows, "verdict": overall });
    Ok(CommandOutput {
        report: Report::new("nondisturb", cfg, &[&bytes, side.as_bytes()], verdicts),
        exit: EXIT_OK,
        summary,
        artifacts: vec![],
    })
}

pub fn cmd_synth(path: &Path, protocol_out: Option<&Path>, cfg: &RunConfig) -> Result<CommandOutput> {
    let bytes = read(path)?;
    let set = load_set(&bytes)?;
    let (proto, cert) = synthesize(&set)?;
    let soundness = cfg.tol_or(1e-8);
    let mut exit = EXIT_OK;
    let mut summary = String::new();
    let verdicts = match cert.outcome {
        Outcome::Success => {
            let mut probs = serde_json::Map::new();
            for s in &set.states {
                let d = execute(&proto, s)?;
                let p = d.probability(&s.label);
                if p < 1.0 - soundness {
                    exit = EXIT_NEGATIVE;
                }
                probs.insert(s.label.clone(), json!(p));
            }
            let audit = protocol::audit(&proto, &set, tol::NONDISTURB)?;
            if !audit.all_pass() {
                exit = EXIT_NEGATIVE;
            }
            summary.push_str(&format!(
                "success: depth {}, {} leaves, {} measurement nodes\n",
                proto.depth,
                proto.leaf_count(),
                audit.measure_nodes
            ));
            if !cert.hypothesis.within {
                summary.push_str("note: sound, but the input is outside the full-rank / one-non-product hypothesis\n");
            }
            json!({
                "outcome": "success",
                "hypothesis": cert.hypothesis,
                "depth": proto.depth,
                "leaves": proto.leaf_count(),
                "probabilities": probs,
                "audit": audit,
                "protocol": proto,
            })
        }
        Outcome::Failure => {
            let stuck = cert.failure_node_stateset.as_ref().expect("failure carries a set");
            let dims = cert.space_dims.expect("failure carries dimensions");
            summary.push_str(&format!(
                "failure: stuck on {} states with local space dims A={} B={}\n",
                stuck.len(),
                dims.0,
                dims.1
            ));
            json!({
                "outcome": "failure",
                "hypothesis": cert.hypothesis,
                "certificate": {
                    "labels": stuck.labels(),
                    "space_dims": [dims.0, dims.1],
                    "stateset": stuck.to_json(),
                },
                "protocol": proto,
            })
        }
    };
    let mut artifacts = vec![];
    if let Some(p) = protocol_out {
        let body = match cert.outcome {
            Outcome::Success => serde_json::to_string_pretty(&proto).expect("protocol"),
            Outcome::Failure => serde_json::to_string_pretty(&verdicts["certificate"]).expect("certificate"),
        };
        artifacts.push((p.to_path_buf(), body + "\n"));
    }
    Ok(CommandOutput {
        report: Report::new("synth", cfg, &[&bytes], verdicts),
        exit,
        summary,
        artifacts,
    })
}

/// Draw `n` outcomes from a finite distribution.
fn sample_counts<R: Rng>(rng: &mut R, outcomes: &[(String, f64)], n: usize) -> Vec<(String, usize)> {
    let mut counts = vec![0usize; outcomes.len()];
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let mut pick = outcomes.len() - 1;
        for (k, (_, p)) in outcomes.iter().enumerate() {
            if u < *p {
                pick = k;
                break;
            }
            u -= p;
        }
        counts[pick] += 1;
    }
    outcomes.iter().map(|(l, _)| l.clone()).zip(counts).collect()
}

pub fn cmd_simulate(protocol_path: &Path, set_path: &Path, cfg: &RunConfig) -> Result<CommandOutput> {
    let pbytes = read(protocol_path)?;
    let sbytes = read(set_path)?;
    let text = std::str::from_utf8(&pbytes).map_err(|e| Error::Parse(e.to_string()))?;
    let proto = Protocol::from_json_str(text)?;
    let set = load_set(&sbytes)?;
    if (set.d_a, set.d_b) != (proto.d_a, proto.d_b) {
        return Err(Error::Dimension(format!(
            "protocol is for {}x{}, state set is {}x{}",
            proto.d_a, proto.d_b, set.d_a, set.d_b
        )));
    }
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut all_correct = true;
    for (i, s) in set.states.iter().enumerate() {
        let d = execute(&proto, s)?;
        let mut outcomes: Vec<(String, f64)> = d.verdicts.iter().map(|(k, v)| (k.clone(), *v)).collect();
        outcomes.push(("<fail>".into(), d.fail));
        outcomes.push(("<unreachable>".into(), d.unreachable));
        let counts = sample_counts(&mut stream(cfg.seed, i as u64), &outcomes, cfg.samples);
        let p = d.probability(&s.label);
        all_correct &= p >= 1.0 - cfg.tol_or(1e-8);
        summary.push_str(&format!("{}: P(correct) = {p:.12}\n", s.label));
        rows.push(json!({
            "label": s.label,
            "p_correct": p,
            "distribution": d,
            "sampled": counts.into_iter().filter(|(_, c)| *c > 0).collect::<std::collections::BTreeMap<_, _>>(),
        }));
    }
    let verdicts = json!({ "all_correct": all_correct, "states": rows });
    Ok(CommandOutput {
        report: Report::new("simulate", cfg, &[&pbytes, &sbytes], verdicts),
        exit: EXIT_OK,
        summary,
        artifacts: vec![],
    })
}

fn signs_string(signs: &[Sign; 4]) -> String {
    signs.iter().map(|s| s.to_string()).collect()
}

/// Local space dimensions of one set at `threshold`.
fn domino_dims(set: &StateSet, threshold: f64) -> (usize, usize) {
    (
        solve_local_space_with(set, Side::A, threshold).dim,
        solve_local_space_with(set, Side::B, threshold).dim,
    )
}

/// A row is tolerance-sensitive when its dimensions at the requested
/// threshold differ from those at the default threshold or at either
/// neighbouring decade.
pub fn cmd_domino(cfg: &RunConfig) -> Result<CommandOutput> {
    let threshold = cfg.tol_or(tol::NULLSPACE);
    let mut rows = Vec::new();
    let mut all_scalar = true;
    let mut sensitive_rows = 0;
    let mut summary = String::new();
    for signs in Sign::all_choices() {
        let set = lemma5_set(signs);
        let (dim_a, dim_b) = domino_dims(&set, threshold);
        let gap = [Side::A, Side::B]
            .iter()
            .filter_map(|&s| solve_local_space_with(&set, s, threshold).threshold_margins().0)
            .reduce(f64::min);
        let probes = [tol::NULLSPACE, threshold * 10.0, threshold / 10.0];
        let sensitive = probes.iter().any(|&t| domino_dims(&set, t) != (dim_a, dim_b));
        let (_, cert) = synthesize(&set)?;
        let root_failure = cert.outcome == Outcome::Failure
            && cert.failure_node_stateset.as_ref().is_some_and(|s| s.len() == set.len());
        let scalar = dim_a == 1 && dim_b == 1;
        all_scalar &= scalar;
        if sensitive {
            sensitive_rows += 1;
        }
        let sign_text = signs_string(&signs);
        summary.push_str(&format!(
            "{sign_text}: dim A = {dim_a}, dim B = {dim_b}{}{}\n",
            if root_failure { ", synthesis fails at root" } else { "" },
            if sensitive { "  [tolerance-sensitive]" } else { "" }
        ));
        rows.push(json!({
            "signs": sign_text,
            "dim_a": dim_a,
            "dim_b": dim_b,
            "scalar_only": scalar,
            "root_failure": root_failure,
            "tolerance_sensitive": sensitive,
            "smallest_kept_singular_value": gap,
        }));
    }
    let verdict = match (all_scalar, sensitive_rows) {
        (true, 0) => "all scalar".to_string(),
        (true, n) => format!("all scalar, {n} tolerance-sensitive rows"),
        (false, _) => "non-scalar local operator found".to_string(),
    };
    summary.push_str(&format!("{verdict}\n"));
    let verdicts = json!({
        "threshold": threshold,
        "rows": rows,
        "scalar_rows": rows.iter().filter(|r| r["scalar_only"] == json!(true)).count(),
        "tolerance_sensitive_rows": sensitive_rows,
        "verdict": verdict,
    });
    Ok(CommandOutput {
        report: Report::new("domino", cfg, &[], verdicts),
        exit: if all_scalar { EXIT_OK } else { EXIT_NEGATIVE },
        summary,
        artifacts: vec![],
    })
}

pub fn cmd_upb(params: Option<&Path>, random: Option<usize>, cfg: &RunConfig) -> Result<CommandOutput> {
    let tol = cfg.tol_or(tol::NONDISTURB);
    let (inputs, tuples): (Vec<u8>, Vec<UpbParams>) = match (params, random) {
        (Some(p), None) => {
            let bytes = read(p)?;
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(e.to_string()))?;
            let params = UpbParams::from_json_str(text)?;
            (bytes, vec![params])
        }
        (None, Some(n)) if n >= 1 => {
            let tuples = (0..n as u64).map(|i| UpbParams::random(&mut stream(cfg.seed, i))).collect();
            (format!("random:{n}").into_bytes(), tuples)
        }
        (None, Some(_)) => return Err(Error::Validation("--random needs N >= 1".into())),
        _ => return Err(Error::Parse("give a parameter file or --random N".into())),
    };
    let mut samples = Vec::new();
    let mut certified = 0;
    let mut witness = false;
    for (i, p) in tuples.iter().enumerate() {
        let rep = theorem4_verify(p, tol)?;
        if rep.certified {
            certified += 1;
        }
        witness |= rep.cycles.iter().any(|r| r.verdict == Verdict::WitnessFound);
        let mut v = to_value(&rep);
        v["sample"] = json!(i);
        samples.push(v);
    }
    let n = tuples.len();
    let summary = format!("certified {certified}/{n}\n");
    let verdicts = json!({
        "tol": tol,
        "certified": certified,
        "total": n,
        "summary": format!("certified {certified}/{n}"),
        "samples": samples,
    });
    Ok(CommandOutput {
        report: Report::new("upb", cfg, &[&inputs], verdicts),
        exit: if certified == n && !witness { EXIT_OK } else { EXIT_NEGATIVE },
        summary,
        artifacts: vec![],
    })
}

/// Dispatch without touching stdout or the file system (beyond reading
/// inputs).
pub fn dispatch(cli: &Cli) -> Result<CommandOutput> {
    let g = &cli.global;
    let mut cfg = RunConfig::new(g.tol, g.seed, g.samples)?;
    cfg.timing = g.timing;
    let start = std::time::Instant::now();
    let mut out = match &cli.command {
        Command::Nondisturb { file, side } => cmd_nondisturb(file, side, &cfg),
        Command::Synth { file, protocol } => cmd_synth(file, protocol.as_deref(), &cfg),
        Command::Simulate { protocol, file } => cmd_simulate(protocol, file, &cfg),
        Command::Domino => cmd_domino(&cfg),
        Command::Upb { params, random } => cmd_upb(params.as_deref(), *random, &cfg),
    }?;
    if cfg.timing {
        out.report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(out)
}

/// Parse `args`, run, print, write files; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            let json = out.report.to_json();
            if cli.global.json {
                print!("{json}");
            } else {
                print!("{}", out.summary);
            }
            let mut writes: Vec<(&Path, &str)> = out.artifacts.iter().map(|(p, b)| (p.as_path(), b.as_str())).collect();
            if let Some(p) = &cli.global.out {
                writes.push((p.as_path(), json.as_str()));
            }
            for (path, body) in writes {
                if let Err(e) = fs::write(path, body) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 2;
                }
            }
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
