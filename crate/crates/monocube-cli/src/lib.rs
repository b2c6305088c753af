//! Command-line front end: argument parsing, artifact writing and exit
//! codes. Every JSON or CSV artifact embeds the parsed command.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use monocube::correlation::{delta_search, DeltaSearchOptions};
use monocube::cube::{named_family, random_monotone, Family, Vertex, VertexSet};
use monocube::digraph::{directed_energy, WeightedDigraph};
use monocube::fkg::{best_c, equality_grid_joint, fkg_theorem_check, FiniteJoint};
use monocube::flow::{flow_trace_checks, heat_flow_solve, FlowOptions};
use monocube::mset::MsetFile;
use monocube::suite::{run_suite, SuiteConfig};
use monocube::walk::{mixing_bound, mixing_time_tv, simulate_walk, spectral_gap_gamma};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "monocube",
    version,
    about = "Spectral gaps, heat flow and correlation checks on monotone subsets of the hypercube"
)]
pub struct Cli {
    /// Worker threads (default: all cores; MONOCUBE_THREADS overrides).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Write a named or random set to an .mset file.
    Gen(GenArgs),
    /// Spectral gap of the censored walk on a set.
    Gap(GapArgs),
    /// Exact worst-start total-variation mixing time.
    Mix(MixArgs),
    /// Simulate one censored walk.
    Walk(WalkArgs),
    /// Directed heat flow on the hypercube.
    ///
    /// The trace CSV has columns t, energy, laplacian_norm_sq.
    Flow(FlowArgs),
    /// Covariance bounds for a joint law, or the correlation search on a set.
    Fkg(FkgArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Spectral gap (and optionally mixing time) across dimensions.
    ///
    /// The CSV has columns n, size, mu, gamma, bound, margin and, with
    /// --mix, t_mix and mix_bound.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FamilyName {
    FullCube,
    MiddleSliceBridge,
    TwoSubcubes,
    Halfspace,
    WeightThreshold,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    /// Comma-separated `key=value` pairs, e.g. `n=8,m=4`. Halfspace
    /// coefficients are colon-separated: `n=3,a=1:1:1,b=2`. Random sets take
    /// `n`, `p` and `seed`.
    #[arg(long, default_value = "")]
    pub params: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Omit the `minimal=` line.
    #[arg(long)]
    pub no_minimal: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub set: PathBuf,
    /// Print the JSON report instead of a table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MixArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Step cap (default: twice the mixing bound).
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// CSV of the worst-start TV curve, columns t, max_tv.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start vertex as a bitstring `x_1...x_n` (default: all ones).
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartFunction {
    Random,
    AntiDictator,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    #[arg(long)]
    pub set_dim: u32,
    #[arg(long, value_enum, default_value = "random")]
    pub f: StartFunction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// RK4 step (default: 0.1 / n).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FkgExample {
    /// A 3×3 joint on {0,2,3}² where the covariance bound is tight.
    EqualityGrid,
}

#[derive(Debug, Args, Serialize)]
pub struct FkgArgs {
    /// Run the correlation search on this set.
    #[arg(long, conflicts_with_all = ["joint", "example"])]
    pub set: Option<PathBuf>,
    /// Joint law as `x,y,p` CSV rows.
    #[arg(long, conflicts_with = "example")]
    pub joint: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub example: Option<FkgExample>,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 4)]
    pub n_max: u32,
    #[arg(long, default_value_t = 100)]
    pub random_trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the full JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report to stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    /// Inclusive range `a..b` or a single value.
    #[arg(long)]
    pub n: String,
    /// Extra parameters, as for `gen`; `n` is supplied by the sweep.
    #[arg(long, default_value = "")]
    pub params: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also compute exact mixing times.
    #[arg(long)]
    pub mix: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] monocube::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_set(path: &Path) -> CliResult<VertexSet> {
    Ok(MsetFile::parse(&read(path)?)?.set)
}

/// Parse `key=value,key=value`.
pub fn parse_params(text: &str) -> CliResult<Vec<(String, String)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| config_err(format!("parameter {kv:?} is not key=value")))
        })
        .collect()
}

fn param<T: std::str::FromStr>(params: &[(String, String)], key: &str) -> CliResult<Option<T>> {
    match params.iter().rev().find(|(k, _)| k == key) {
        None => Ok(None),
        Some((_, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| config_err(format!("cannot parse {key}={v}"))),
    }
}

fn required<T: std::str::FromStr>(params: &[(String, String)], key: &str) -> CliResult<T> {
    param(params, key)?.ok_or_else(|| config_err(format!("missing parameter {key}")))
}

fn check_keys(params: &[(String, String)], allowed: &[&str]) -> CliResult<()> {
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(config_err(format!(
                "unknown parameter {k:?}; expected one of {allowed:?}"
            )));
        }
    }
    Ok(())
}

/// Build the set described by a family name and parameters.
pub fn build_set(family: FamilyName, params: &[(String, String)]) -> CliResult<VertexSet> {
    let n: u32 = required(params, "n")?;
    let fam = match family {
        FamilyName::FullCube => {
            check_keys(params, &["n"])?;
            Family::FullCube { n }
        }
        FamilyName::MiddleSliceBridge => {
            check_keys(params, &["n", "x_star"])?;
            match param::<String>(params, "x_star")? {
                None => Family::middle_slice_bridge(n),
                Some(s) => {
                    let (v, dim) = Vertex::parse_bitstring(&s)?;
                    if dim != n {
                        return Err(config_err(format!("x_star has {dim} bits, expected {n}")));
                    }
                    Family::MiddleSliceBridge { n, x_star: v.0 }
                }
            }
        }
        FamilyName::TwoSubcubes => {
            check_keys(params, &["n", "m"])?;
            Family::TwoSubcubes {
                n,
                m: required(params, "m")?,
            }
        }
        FamilyName::Halfspace => {
            check_keys(params, &["n", "a", "b"])?;
            let a: String = required(params, "a")?;
            let a = a
                .split(':')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| config_err(format!("bad coefficient {x:?}")))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            Family::Halfspace {
                n,
                a,
                b: required(params, "b")?,
            }
        }
        FamilyName::WeightThreshold => {
            check_keys(params, &["n", "k"])?;
            Family::WeightThreshold {
                n,
                k: required(params, "k")?,
            }
        }
        FamilyName::Random => {
            check_keys(params, &["n", "p", "seed"])?;
            let p: f64 = required(params, "p")?;
            let seed: u64 = param(params, "seed")?.unwrap_or(0);
            return Ok(random_monotone(n, p, seed)?.into_set());
        }
    };
    Ok(named_family(&fam)?.set().clone())
}

/// Parse `a..b` (inclusive) or a single integer.
pub fn parse_range(text: &str) -> CliResult<Vec<u32>> {
    let bad = || {
        config_err(format!(
            "bad range {text:?}; expected a..b or a single value"
        ))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<u32>().map_err(|_| bad())?,
            b.trim()
                .trim_start_matches('=')
                .parse::<u32>()
                .map_err(|_| bad())?,
        ),
        None => {
            let v = text.trim().parse::<u32>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.14e}")
}

/// Add the schema version and the parsed command to a JSON object.
fn envelope(cli: &Cli, payload: Value) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("config".into(), serde_json::to_value(cli).unwrap());
    match payload {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    Value::Object(doc)
}

fn csv_with_config(cli: &Cli, body: &str) -> String {
    let config = serde_json::to_string(&json!({ "schema": SCHEMA, "config": cli })).unwrap();
    format!("# config: {config}\n{body}")
}

fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap()
}

/// Size the global thread pool: MONOCUBE_THREADS, then `--threads`, then
/// the rayon default.
pub fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match std::env::var("MONOCUBE_THREADS") {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| config_err(format!("MONOCUBE_THREADS={v:?} is not a number")))?,
        ),
        _ => flag,
    };
    if let Some(k) = threads {
        if k == 0 {
            return Err(config_err("thread count must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    Ok(())
}

/// Execute the parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<Status> {
    configure_threads(cli.threads)?;
    let mut text = String::new();
    let status = match &cli.command {
        Command::Gen(a) => {
            let set = build_set(a.family, &parse_params(&a.params)?)?;
            let file = MsetFile {
                set,
                with_minimal: !a.no_minimal,
            };
            write(&a.out, &file.to_text())?;
            let s = &file.set;
            writeln!(
                text,
                "wrote {} (n={}, size={}, mu={}, monotone={})",
                a.out.display(),
                s.n(),
                s.len(),
                fmt_f(s.density()),
                s.is_upward_closed()
            )
            .unwrap();
            Status::Pass
        }
        Command::Gap(a) => {
            let set = load_set(&a.set)?;
            let monotone = set.is_upward_closed();
            let r = spectral_gap_gamma(&set)?;
            let mut payload = serde_json::to_value(&r).unwrap();
            payload["monotone"] = json!(monotone);
            payload["size"] = json!(set.len());
            let doc = envelope(cli, payload);
            if let Some(p) = &a.out {
                write(p, &to_pretty(&doc))?;
            }
            if a.json {
                writeln!(text, "{}", to_pretty(&doc)).unwrap();
            } else {
                writeln!(text, "n      {}", r.n).unwrap();
                writeln!(text, "size   {}", set.len()).unwrap();
                writeln!(text, "mu     {}", fmt_f(r.mu)).unwrap();
                writeln!(text, "gamma  {}", fmt_f(r.gamma)).unwrap();
                writeln!(text, "bound  {}", fmt_f(r.bound)).unwrap();
                writeln!(text, "margin {}", fmt_f(r.margin)).unwrap();
                writeln!(text, "method {}", r.method).unwrap();
                if !monotone {
                    writeln!(text, "note   set is not monotone; the bound does not apply").unwrap();
                }
            }
            // the bound is only claimed for monotone sets
            Status::from_pass(r.pass || !monotone)
        }
        Command::Mix(a) => {
            let set = load_set(&a.set)?;
            let cap = a
                .max_steps
                .unwrap_or_else(|| (2.0 * mixing_bound(&set)).ceil() as usize + 1);
            let r = mixing_time_tv(&set, a.eps, cap)?;
            if let Some(p) = &a.curve {
                write(p, &csv_with_config(cli, &r.curve_csv()))?;
            }
            let monotone = set.is_upward_closed();
            if a.json {
                let payload = json!({
                    "monotone": monotone,
                    "t_mix": r.t_mix,
                    "bound": r.bound,
                    "pass": r.pass,
                    "approximate": r.approximate,
                });
                writeln!(text, "{}", to_pretty(&envelope(cli, payload))).unwrap();
            } else {
                match r.t_mix {
                    Some(t) => writeln!(text, "t_mix  {t}").unwrap(),
                    None => writeln!(text, "t_mix  not reached within {cap} steps").unwrap(),
                }
                writeln!(text, "bound  {}", fmt_f(r.bound)).unwrap();
                writeln!(text, "pass   {}", r.pass).unwrap();
            }
            Status::from_pass(r.pass || !monotone)
        }
        Command::Walk(a) => {
            let set = load_set(&a.set)?;
            let start = match &a.start {
                Some(s) => {
                    let (v, dim) = Vertex::parse_bitstring(s)?;
                    if dim != set.n() {
                        return Err(config_err(format!(
                            "start has {dim} bits, expected {}",
                            set.n()
                        )));
                    }
                    v.0
                }
                None => (1u32 << set.n()) - 1,
            };
            let w = simulate_walk(&set, start, a.steps, a.seed)?;
            if a.json {
                writeln!(
                    text,
                    "{}",
                    to_pretty(&envelope(cli, serde_json::to_value(&w).unwrap()))
                )
                .unwrap();
            } else {
                writeln!(text, "steps             {}", w.steps).unwrap();
                writeln!(text, "censored_fraction {}", fmt_f(w.censored_fraction)).unwrap();
                writeln!(
                    text,
                    "final_vertex      {}",
                    Vertex(w.final_vertex).to_bitstring(set.n())
                )
                .unwrap();
                writeln!(text, "t,empirical_tv").unwrap();
                for (t, tv) in &w.checkpoints {
                    writeln!(text, "{t},{}", fmt_f(*tv)).unwrap();
                }
            }
            Status::Pass
        }
        Command::Flow(a) => {
            let n = a.set_dim;
            let cube = WeightedDigraph::hypercube(n)?;
            let len = 1usize << n;
            let f0: Vec<f64> = match a.f {
                StartFunction::Random => {
                    use rand::{Rng, SeedableRng};
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
                    (0..len).map(|_| rng.random::<f64>()).collect()
                }
                StartFunction::AntiDictator => (0..len).map(|x| -((x & 1) as f64)).collect(),
            };
            let mut opts = FlowOptions::for_graph(&cube);
            if let Some(h) = a.step {
                opts.step = h;
            }
            opts.tol = a.tol;
            opts.t_max = a.t_max;
            let flow = heat_flow_solve(&cube, &f0, &opts)?;
            let checks = flow_trace_checks(&cube, &flow, 1.0);
            if let Some(p) = &a.trace {
                write(p, &csv_with_config(cli, &flow.trace.to_csv()))?;
            }
            let e0 = directed_energy(&cube, &f0)?;
            let e_final = directed_energy(&cube, &flow.equilibrium)?;
            if a.json {
                let payload = json!({
                    "steps": flow.steps,
                    "time": flow.time,
                    "converged": flow.converged,
                    "residual": flow.residual,
                    "initial_energy": e0,
                    "final_energy": e_final,
                    "checks": checks,
                });
                writeln!(text, "{}", to_pretty(&envelope(cli, payload))).unwrap();
            } else {
                writeln!(text, "steps          {}", flow.steps).unwrap();
                writeln!(text, "time           {}", fmt_f(flow.time)).unwrap();
                writeln!(text, "converged      {}", flow.converged).unwrap();
                writeln!(text, "residual       {}", fmt_f(flow.residual)).unwrap();
                writeln!(text, "initial_energy {}", fmt_f(e0)).unwrap();
                writeln!(text, "final_energy   {}", fmt_f(e_final)).unwrap();
                writeln!(text, "checks_pass    {}", checks.all_pass()).unwrap();
            }
            Status::from_pass(flow.converged && checks.all_pass())
        }
        Command::Fkg(a) => fkg_command(cli, a, &mut text)?,
        Command::Verify(a) => {
            let cfg = SuiteConfig {
                n_max: a.n_max,
                random_trials: a.random_trials,
                seed: a.seed,
            };
            let outcome = run_suite(&cfg)?;
            let reports: Vec<_> = outcome
                .families
                .iter()
                .filter_map(|f| f.representative.as_ref())
                .collect();
            let doc = envelope(
                cli,
                json!({ "pass": outcome.pass, "reports": reports, "families": outcome.families }),
            );
            if let Some(p) = &a.out {
                write(p, &to_pretty(&doc))?;
            }
            if a.json {
                writeln!(text, "{}", to_pretty(&doc)).unwrap();
            } else {
                for f in &outcome.families {
                    let margin = f.representative.as_ref().map_or(f64::NAN, |r| r.margin);
                    writeln!(
                        text,
                        "{:<4} {:<28} cases={:<6} failures={:<4} worst_margin={}",
                        if f.pass { "PASS" } else { "FAIL" },
                        f.check,
                        f.cases,
                        f.failures,
                        fmt_f(margin)
                    )
                    .unwrap();
                }
            }
            let passed = outcome.families.iter().filter(|f| f.pass).count();
            writeln!(
                text,
                "{}: {passed}/{} check families passed",
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.families.len()
            )
            .unwrap();
            Status::from_pass(outcome.pass)
        }
        Command::Sweep(a) => {
            let extra = parse_params(&a.params)?;
            if extra.iter().any(|(k, _)| k == "n") {
                return Err(config_err("n is set by --n in a sweep"));
            }
            let mut body = String::from("n,size,mu,gamma,bound,margin");
            if a.mix {
                body.push_str(",t_mix,mix_bound");
            }
            body.push('\n');
            let mut all_pass = true;
            for n in parse_range(&a.n)? {
                let mut params = vec![("n".to_string(), n.to_string())];
                params.extend(extra.iter().cloned());
                let set = build_set(a.family, &params)?;
                let r = spectral_gap_gamma(&set)?;
                let monotone = set.is_upward_closed();
                all_pass &= r.pass || !monotone;
                write!(
                    body,
                    "{n},{},{},{},{},{}",
                    set.len(),
                    fmt_f(r.mu),
                    fmt_f(r.gamma),
                    fmt_f(r.bound),
                    fmt_f(r.margin)
                )
                .unwrap();
                if a.mix {
                    let bound = mixing_bound(&set);
                    let cap = (20.0 * bound).ceil() as usize + 1;
                    let m = mixing_time_tv(&set, 0.25, cap)?;
                    all_pass &= m.pass || !monotone;
                    let t = m.t_mix.map_or_else(String::new, |t| t.to_string());
                    write!(body, ",{t},{}", fmt_f(bound)).unwrap();
                }
                body.push('\n');
                writeln!(text, "n={n} gamma={}", fmt_f(r.gamma)).unwrap();
            }
            write(&a.out, &csv_with_config(cli, &body))?;
            writeln!(text, "wrote {}", a.out.display()).unwrap();
            Status::from_pass(all_pass)
        }
    };
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?;
    Ok(status)
}

fn fkg_command(cli: &Cli, a: &FkgArgs, text: &mut String) -> CliResult<Status> {
    if let Some(path) = &a.set {
        let set = load_set(path)?;
        let opts = DeltaSearchOptions {
            restarts: a.restarts,
            iters: a.iters,
            seed: a.seed,
            ..DeltaSearchOptions::default()
        };
        let r = delta_search(&set, &opts)?;
        if a.json {
            writeln!(
                text,
                "{}",
                to_pretty(&envelope(cli, serde_json::to_value(&r).unwrap()))
            )
            .unwrap();
        } else {
            writeln!(text, "mu        {}", fmt_f(r.mu)).unwrap();
            writeln!(text, "delta_hat {}", fmt_f(r.delta_hat)).unwrap();
            writeln!(text, "bound     {}", fmt_f(r.bound)).unwrap();
            writeln!(text, "margin    {}", fmt_f(r.margin)).unwrap();
            writeln!(text, "restarts  {}", r.restarts).unwrap();
        }
        return Ok(Status::from_pass(r.pass));
    }
    let joint = match (&a.joint, a.example) {
        (Some(p), _) => FiniteJoint::parse_csv(&read(p)?)?,
        (None, Some(FkgExample::EqualityGrid)) => equality_grid_joint(),
        (None, None) => return Err(config_err("fkg needs one of --set, --joint, --example")),
    };
    let report = fkg_theorem_check(&joint)?;
    let bc = best_c(&joint);
    let m = joint.moments();
    let equality = (m.cov - report.bound).abs() <= 1e-12;
    if a.json {
        let payload = json!({
            "best_c": bc.c,
            "argmin": bc.argmin,
            "cov": m.cov,
            "var_x": m.var_x,
            "var_y": m.var_y,
            "equality": equality,
            "report": report,
        });
        writeln!(text, "{}", to_pretty(&envelope(cli, payload))).unwrap();
    } else {
        writeln!(text, "best_c   {}", fmt_f(bc.c)).unwrap();
        writeln!(text, "cov      {}", fmt_f(m.cov)).unwrap();
        writeln!(text, "var_x    {}", fmt_f(m.var_x)).unwrap();
        writeln!(text, "var_y    {}", fmt_f(m.var_y)).unwrap();
        writeln!(text, "bound    {}", fmt_f(report.bound)).unwrap();
        writeln!(text, "equality {equality}").unwrap();
        writeln!(text, "pass     {}", report.all_pass()).unwrap();
    }
    Ok(Status::from_pass(report.all_pass()))
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli, out) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
