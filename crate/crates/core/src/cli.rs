//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code: 0 when the property holds or a
//! solution was produced, 1 when it is violated or unsatisfiable, 2 on
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{pruning_grid, pruning_instance, run_bench, BenchConfig, RandomShape};
use crate::family::{CostModel, Family, Formula};
use crate::model::{check_with, CheckerConfig, Specification, DEFAULT_TOLERANCE};
use crate::sketch::{goal_states, goal_states_of, parse_property};
use crate::synth::{
    outcome_json, realisation_json, solve, Engine, Query, QueryKind, SynthOptions, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "chainsynth",
    version,
    about = "Synthesise Markov chains from sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check one realisation against a property.
    Check(CheckArgs),
    /// Solve a synthesis query.
    Synth(SynthArgs),
    /// Compare the engines on random or constructed families.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Sketch,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Cost {
    Structural,
    OptionSum,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum QueryArg {
    Feasible,
    Partition,
    Max,
    Min,
    Eps,
}

#[derive(Args, Debug)]
struct Input {
    /// Sketch or JSON family.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to json for `.json` files and sketch otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Comparison slack for thresholds.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    input: Input,
    /// Property, e.g. `P>=0.1 [F s=4]`.
    #[arg(long)]
    spec: String,
    /// Total assignment, e.g. `k2=2,k3=4`.
    #[arg(long)]
    assign: Option<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(value_enum)]
    query: QueryArg,
    #[command(flatten)]
    input: Input,
    /// Property for feasible and partition queries.
    #[arg(long)]
    spec: Option<String>,
    /// Goal expression for max, min and eps queries.
    #[arg(long)]
    goal: Option<String>,
    #[arg(long, default_value = "enum")]
    engine: Engine,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Overrides the family's cost model.
    #[arg(long, value_enum)]
    cost: Option<Cost>,
    /// Pins holes, restricting the query to a subfamily.
    #[arg(long)]
    assign: Option<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Minimise cost among solutions.
    #[arg(long)]
    cheapest: bool,
    /// Include the per-iteration trace in JSON output.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 256)]
    max_realisations: u128,
    #[arg(long, default_value_t = 12)]
    max_states: usize,
    /// Engines to compare with enumeration (repeatable).
    #[arg(long)]
    engine: Vec<Engine>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Instead of random families, the one-hole pruning instance with this
    /// many options.
    #[arg(long, conflicts_with = "pruning_grid")]
    pruning: Option<usize>,
    /// The two-hole pruning instance with this many options per hole.
    #[arg(long)]
    pruning_grid: Option<usize>,
    #[arg(long)]
    json: bool,
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let res = match cli.command {
        Command::Check(a) => cmd_check(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match res {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

type CmdResult = Result<i32, String>;

fn load_family(input: &Input) -> Result<Family, String> {
    let text = std::fs::read_to_string(&input.input)
        .map_err(|e| format!("{}: {e}", input.input.display()))?;
    let format = input.format.unwrap_or_else(|| guess_format(&input.input));
    let fam = match format {
        Format::Json => Family::from_json(&text).map_err(|e| e.to_string())?,
        Format::Sketch => crate::sketch::load(&text).map_err(|e| e.to_string())?,
    };
    Ok(fam)
}

fn guess_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Sketch,
    }
}

fn property(fam: &Family, text: &str) -> Result<Specification, String> {
    let p = parse_property(text).map_err(|e| e.to_string())?;
    let goal = goal_states_of(fam, &p.goal).map_err(|e| e.to_string())?;
    if goal.is_empty() {
        return Err(format!("no state satisfies the goal of `{text}`"));
    }
    Specification::new(goal, p.op, p.threshold).map_err(|e| e.to_string())
}

fn checker(tolerance: f64) -> Result<CheckerConfig, String> {
    if !(0.0..1.0).contains(&tolerance) {
        return Err(format!("tolerance {tolerance} is outside [0, 1)"));
    }
    Ok(CheckerConfig::with_tolerance(tolerance))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), String> {
    writeln!(out, "{text}").map_err(|e| e.to_string())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let fam = load_family(&a.input)?;
    let spec = property(&fam, &a.spec)?;
    let cfg = checker(a.input.tolerance)?;
    let r = match &a.assign {
        Some(text) => fam.parse_realisation(text).map_err(|e| e.to_string())?,
        None if fam.holes().is_empty() => fam.full().first(),
        None => return Err("--assign must give every hole an option".into()),
    };
    let mc = fam.realise(&r).map_err(|e| e.to_string())?;
    let res = check_with(&mc, &spec, &cfg).map_err(|e| e.to_string())?;
    if a.input.json {
        let v = serde_json::json!({
            "realisation": realisation_json(&fam, &r),
            "spec": a.spec,
            "value": res.value,
            "holds": res.holds,
        });
        emit(out, &v.to_string())?;
    } else {
        let shown = if fam.holes().is_empty() {
            "(no holes)".to_string()
        } else {
            fam.describe(&r)
        };
        emit(out, &format!("realisation {shown}"))?;
        emit(out, &format!("value {}", res.value))?;
        emit(out, &format!("verdict {}", res.holds))?;
    }
    Ok(if res.holds { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CmdResult {
    let mut fam = load_family(&a.input)?;
    if let Some(c) = a.cost {
        fam = fam.with_cost_model(match c {
            Cost::Structural => CostModel::Structural,
            Cost::OptionSum => CostModel::OptionSum,
        });
    }
    if let Some(text) = &a.assign {
        let mut constraints = fam.constraints().to_vec();
        for (h, o) in fam.parse_assignment(text).map_err(|e| e.to_string())? {
            constraints.push(Formula::atom(h, o));
        }
        fam = fam
            .with_constraints(constraints)
            .map_err(|e| e.to_string())?;
    }
    let (query, shown) = build_query(&fam, a)?;
    let opts = SynthOptions {
        checker: checker(a.input.tolerance)?,
        threads: a.threads.max(1),
        trace: a.trace,
        ..SynthOptions::default()
    };
    let outcome = solve(a.engine, &fam, &query, &opts).map_err(|e| e.to_string())?;
    if a.input.json {
        let v = outcome_json(&fam, &query, &shown, a.engine, &outcome, a.trace);
        emit(out, &v.to_string())?;
    } else {
        emit(
            out,
            &render_outcome(&fam, &query, &shown, a.engine, &outcome.verdict),
        )?;
        let s = &outcome.stats;
        emit(
            out,
            &format!(
                "candidates {}  checks {}  iterations {}  {} ms",
                s.candidates, s.checks, s.iterations, s.wall_ms
            ),
        )?;
    }
    Ok(match outcome.verdict {
        Verdict::Unsatisfiable => EXIT_NEGATIVE,
        _ => EXIT_OK,
    })
}

fn build_query(fam: &Family, a: &SynthArgs) -> Result<(Query, String), String> {
    let need_spec = || {
        a.spec
            .as_deref()
            .ok_or_else(|| "this query needs --spec".to_string())
    };
    let goal = || -> Result<(Vec<usize>, String), String> {
        if let Some(g) = &a.goal {
            let states = goal_states(fam, g).map_err(|e| e.to_string())?;
            if states.is_empty() {
                return Err(format!("no state satisfies the goal `{g}`"));
            }
            return Ok((states, g.clone()));
        }
        match &a.spec {
            Some(s) => Ok((property(fam, s)?.goal().to_vec(), s.clone())),
            None => Err("this query needs --goal".into()),
        }
    };
    let err = |e: crate::model::ModelError| e.to_string();
    let (q, shown) = match a.query {
        QueryArg::Feasible => {
            let s = need_spec()?;
            (Query::feasibility(property(fam, s)?), s.to_string())
        }
        QueryArg::Partition => {
            let s = need_spec()?;
            (Query::partition(property(fam, s)?), s.to_string())
        }
        QueryArg::Max => {
            let (g, shown) = goal()?;
            (Query::max(g).map_err(err)?, shown)
        }
        QueryArg::Min => {
            let (g, shown) = goal()?;
            (Query::min(g).map_err(err)?, shown)
        }
        QueryArg::Eps => {
            let (g, shown) = goal()?;
            let eps = a.epsilon.ok_or("eps queries need --epsilon")?;
            (Query::eps_optimal(g, eps).map_err(err)?, shown)
        }
    };
    if a.epsilon.is_some() && a.query != QueryArg::Eps {
        return Err("--epsilon only applies to eps queries".into());
    }
    let q = q.with_budget(a.budget).with_cheapest(a.cheapest);
    q.validate().map_err(|e| e.to_string())?;
    Ok((q, shown))
}

fn render_outcome(fam: &Family, q: &Query, shown: &str, engine: Engine, v: &Verdict) -> String {
    let mut lines = vec![format!("{} {} via {}", q.kind.name(), shown, engine)];
    match v {
        Verdict::Feasible {
            witness,
            value,
            cost,
        }
        | Verdict::Optimal {
            witness,
            value,
            cost,
        } => {
            lines.push(format!("witness {}", fam.describe(witness)));
            lines.push(format!("value {value}"));
            lines.push(format!("cost {cost}"));
        }
        Verdict::Partition { accepted, rejected } => {
            lines.push(format!("T ({})", accepted.len()));
            lines.extend(accepted.iter().map(|r| format!("  {}", fam.describe(r))));
            lines.push(format!("F ({})", rejected.len()));
            lines.extend(rejected.iter().map(|r| format!("  {}", fam.describe(r))));
        }
        Verdict::Unsatisfiable => lines.push("unsatisfiable".into()),
    }
    if q.kind == QueryKind::Partition && q.budget.is_some() {
        lines.push("members over budget are listed in F".into());
    }
    lines.join("\n")
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let opts = SynthOptions {
        checker: checker(a.tolerance)?,
        threads: a.threads.max(1),
        ..SynthOptions::default()
    };
    let engines = if a.engine.is_empty() {
        Engine::ALL.to_vec()
    } else {
        let mut e = a.engine.clone();
        e.dedup();
        e
    };
    let constructed = a
        .pruning
        .map(pruning_instance)
        .or(a.pruning_grid.map(pruning_grid));
    if let Some((fam, spec)) = constructed {
        return bench_instance(&fam, &spec, &engines, &opts, a.json, out);
    }
    if a.max_states < 2 {
        return Err("--max-states must be at least 2".into());
    }
    let cfg = BenchConfig {
        seed: a.seed,
        instances: a.instances,
        shape: RandomShape {
            max_states: a.max_states,
            max_realisations: a.max_realisations.max(1),
            ..RandomShape::default()
        },
        engines,
        opts,
        value_tolerance: 1e-6,
    };
    let report = run_bench(&cfg);
    if a.json {
        emit(out, &report.to_json().to_string())?;
    } else {
        emit(out, report.render().trim_end())?;
    }
    Ok(if report.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

/// Partitions one constructed family with every engine and reports the
/// effort each needed.
fn bench_instance(
    fam: &Family,
    spec: &Specification,
    engines: &[Engine],
    opts: &SynthOptions,
    json: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let q = Query::partition(spec.clone());
    let mut rows = Vec::new();
    let mut first: Option<Verdict> = None;
    let mut agree = true;
    for &e in engines {
        let o = solve(e, fam, &q, opts).map_err(|x| x.to_string())?;
        match &first {
            None => first = Some(o.verdict.clone()),
            Some(v) => agree &= *v == o.verdict,
        }
        let accepted = match &o.verdict {
            Verdict::Partition { accepted, .. } => accepted.len(),
            _ => 0,
        };
        rows.push((e, accepted, o.stats));
    }
    let size = fam.product_size();
    if json {
        let v = serde_json::json!({
            "realisations": size.to_string(),
            "agree": agree,
            "engines": rows.iter().map(|(e, acc, s)| serde_json::json!({
                "engine": e.name(),
                "accepted": acc,
                "candidates": s.candidates,
                "checks": s.checks,
                "wall_ms": s.wall_ms,
            })).collect::<Vec<_>>(),
        });
        emit(out, &v.to_string())?;
    } else {
        emit(out, &format!("realisations {size}  agree {agree}"))?;
        emit(
            out,
            &format!(
                "{:<8}{:>10}{:>12}{:>10}{:>10}",
                "engine", "accepted", "candidates", "checks", "ms"
            ),
        )?;
        for (e, acc, s) in &rows {
            emit(
                out,
                &format!(
                    "{:<8}{:>10}{:>12}{:>10}{:>10}",
                    e.name(),
                    acc,
                    s.candidates,
                    s.checks,
                    s.wall_ms
                ),
            )?;
        }
    }
    Ok(if agree { EXIT_OK } else { EXIT_NEGATIVE })
}
