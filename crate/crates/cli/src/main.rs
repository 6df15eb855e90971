use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use esslab_core::clique::{max_clique, max_clique_with_all, MotzkinStraus};
use esslab_core::ess::{
    best_response_face, check_ess_with, ess_enumerate_with, invasion_threshold, EssEnumeration, Limits,
};
use esslab_core::game::{fixtures, game_from_json, game_to_json, strategy_from_json, MixedStrategy, SymmetricGame};
use esslab_core::graph::{parse_graph, Graph};
use esslab_core::rational::{approx, format_rational, parse_rational, Rational};
use esslab_core::reduction::{
    build_game, default_a, default_x1, in_validity_region, intervals, regime_table, robust_rectangle, Regime,
    ReductionParams,
};
use esslab_core::robust::{fuzz_rectangle, random_game_experiment};
use esslab_core::search::{binary_clique_search, call_budget, IntervalMode, SearchOptions};
use esslab_core::Error;

#[derive(Parser)]
#[command(name = "esslab", version, about = "Exact ESS analysis and clique reduction games")]
struct Cli {
    /// Output format
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    El1,
    Elx,
}

#[derive(Subcommand)]
enum Command {
    /// Valid (tau, rho) intervals for graphs of order n
    Intervals {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        regime: Family,
        #[arg(long)]
        x: Option<u32>,
        #[arg(long)]
        rho: Option<String>,
    },
    /// Robust perturbation rectangle
    Rectangle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        x0: u32,
        /// Defaults to a dyadic near the middle of the admissible range
        #[arg(long)]
        x1: Option<String>,
        /// Defaults to C/2
        #[arg(long = "A")]
        a: Option<String>,
    },
    /// Build the reduction game of a graph
    Reduce {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        regime: Family,
        #[arg(long)]
        x: Option<u32>,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        rho: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// ESS decision, enumeration and verification
    Ess {
        #[command(subcommand)]
        action: EssAction,
    },
    /// Invasion threshold of a mutant against an incumbent
    Invasion {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        incumbent: PathBuf,
        #[arg(long)]
        mutant: PathBuf,
    },
    /// Clique number, directly or through the ESS oracle
    Clique {
        #[command(subcommand)]
        action: CliqueAction,
    },
    /// Perturbation fuzzing inside the robust rectangle
    Fuzz {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        x0: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Random-game experiments
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Motzkin–Straus value of a graph (optionally with tau/rho entries)
    Motzkin {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, requires = "rho")]
        tau: Option<String>,
        #[arg(long, requires = "tau")]
        rho: Option<String>,
        /// Simplex mass l
        #[arg(long)]
        mass: Option<String>,
    },
    /// Built-in example games
    Demo {
        #[arg(value_enum)]
        which: DemoGame,
    },
}

#[derive(Subcommand)]
enum EssAction {
    /// Exit 0 if an ESS exists, 1 otherwise
    Decide {
        #[arg(long)]
        game: PathBuf,
    },
    /// List symmetric equilibria and their ESS verdicts
    Enumerate {
        #[arg(long)]
        game: PathBuf,
    },
    /// Verify one strategy
    Check {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
    },
}

#[derive(Subcommand)]
enum CliqueAction {
    Max {
        #[arg(long)]
        graph: PathBuf,
        /// Also list every maximum clique
        #[arg(long)]
        all: bool,
    },
    /// Binary search using only ESS-existence answers
    ViaEss {
        #[arg(long)]
        graph: PathBuf,
        /// Power-family exponent; the (k-1)/k family when absent
        #[arg(long)]
        x: Option<u32>,
        #[arg(long)]
        adaptive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Frequency of ESS with support at most two in random games
    RandomEss {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Emit CSV instead of text/JSON
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoGame {
    Crab,
    Rps,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<Outcome, Failure>;

/// What a command prints and whether its decision was positive.
struct Outcome {
    json: Value,
    text: String,
    positive: bool,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Outcome {
            json,
            text,
            positive: true,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    parse_graph(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<SymmetricGame, Failure> {
    game_from_json(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_strategy(path: &Path) -> Result<MixedStrategy, Failure> {
    strategy_from_json(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn literal(text: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn family(regime: Family, x: Option<u32>) -> Result<Regime, Failure> {
    match (regime, x) {
        (Family::El1, None) => Ok(Regime::El1),
        (Family::El1, Some(_)) => Err(Failure::Usage("--x only applies to --regime elx".into())),
        (Family::Elx, Some(x)) => Ok(Regime::power(x)?),
        (Family::Elx, None) => Err(Failure::Usage("--regime elx needs --x".into())),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn describe_all(game: &SymmetricGame, items: impl Iterator<Item = MixedStrategy>) -> Vec<String> {
    items.map(|s| s.describe(game)).collect()
}

fn enumeration_text(game: &SymmetricGame, e: &EssEnumeration) -> String {
    let mut out = String::new();
    for v in &e.verdicts {
        let _ = writeln!(
            out,
            "{:<40} ne={:<5} ess={:<5}{}",
            v.strategy.describe(game),
            v.is_symmetric_ne,
            v.is_ess,
            if v.degeneracy_limited { " (degenerate component)" } else { "" }
        );
    }
    let ess = describe_all(game, e.ess().cloned());
    let _ = writeln!(out, "ESS: {}", if ess.is_empty() { "none".to_string() } else { ess.join(", ") });
    out
}

fn cmd_intervals(n: usize, regime: Family, x: Option<u32>, rho: Option<String>) -> CmdResult {
    let fam = family(regime, x)?;
    match rho {
        None => {
            let table = regime_table(n, fam)?;
            let mut text = format!("n = {n}, family {fam}\n");
            for row in &table.rows {
                let iv = &row.rho_interval;
                let _ = writeln!(
                    text,
                    "range {}: rho in {}{:.9}, {}{}   tau in [{}, {})",
                    row.regime,
                    if iv.lower_closed { "[" } else { "(" },
                    iv.lower.approx(),
                    if iv.upper.approx().is_infinite() { "inf".to_string() } else { format!("{:.9}", iv.upper.approx()) },
                    if iv.upper_closed { "]" } else { ")" },
                    row.tau_lower,
                    row.tau_upper
                );
            }
            Ok(Outcome::ok(to_json(&table), text))
        }
        Some(rho) => {
            let rho = literal(&rho)?;
            let rep = intervals(n, fam, &rho)?;
            let mut text = format!("n = {n}, family {fam}, rho = {}\n", format_rational(&rho));
            match (&rep.regime, &rep.tau_interval) {
                (Some(r), Some(t)) => {
                    let _ = writeln!(
                        text,
                        "range {r}: tau in [{:.9}, {:.9})  nonempty = {}",
                        t.lower.approx(),
                        t.upper.approx(),
                        rep.nonempty
                    );
                }
                _ => {
                    let _ = writeln!(text, "rho is outside every range; nonempty = false");
                }
            }
            for note in &rep.notes {
                let _ = writeln!(text, "note: {note}");
            }
            Ok(Outcome::ok(to_json(&rep), text))
        }
    }
}

fn cmd_rectangle(n: usize, x0: u32, x1: Option<String>, a: Option<String>) -> CmdResult {
    let x1 = match x1 {
        Some(t) => literal(&t)?,
        None => default_x1(n, x0)?,
    };
    let a = match a {
        Some(t) => literal(&t)?,
        None => default_a(n, x0, &x1)?,
    };
    let r = robust_rectangle(n, x0, &x1, &a)?;
    let text = format!(
        "n = {n}, x0 = {x0}, x1 = {}\nC ~ {:.12}  D ~ {:.12}  A ~ {:.12}  B ~ {:.12}\nrho_C ~ {:.12}\n\
         tau in [{:.12}, {:.12})\nrho in ({:.12}, {:.12})\n",
        format_rational(&x1),
        approx(&r.c.midpoint()),
        approx(&r.d.midpoint()),
        approx(&r.a),
        approx(&r.b.midpoint()),
        approx(&r.rho_c.midpoint()),
        r.tau_interval.lower.approx(),
        r.tau_interval.upper.approx(),
        r.rho_interval.lower.approx(),
        r.rho_interval.upper.approx(),
    );
    Ok(Outcome::ok(to_json(&r), text))
}

#[allow(clippy::too_many_arguments)]
fn cmd_reduce(
    graph: &Path,
    k: usize,
    regime: Family,
    x: Option<u32>,
    tau: &str,
    rho: &str,
    output: Option<PathBuf>,
) -> CmdResult {
    let g = load_graph(graph)?;
    let fam = family(regime, x)?;
    let params = ReductionParams::new(k, fam, literal(tau)?, literal(rho)?)?;
    if !in_validity_region(g.order().max(2), fam, &params.tau, &params.rho) {
        eprintln!("warning: (tau, rho) lies outside the stated validity region for n = {}", g.order());
    }
    let game = build_game(&g, &params)?;
    let body = game_to_json(&game);
    match output {
        Some(path) => {
            std::fs::write(&path, &body).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome::ok(
                json!({ "written": path.display().to_string(), "size": game.size(), "params": to_json(&params) }),
                format!("wrote {}x{} game to {}\n", game.size(), game.size(), path.display()),
            ))
        }
        None => Ok(Outcome::ok(serde_json::from_str(&body).expect("valid json"), body)),
    }
}

fn cmd_ess(action: EssAction, limits: &Limits) -> CmdResult {
    match action {
        EssAction::Decide { game } => {
            let game = load_game(&game)?;
            let e = ess_enumerate_with(&game, limits, None)?;
            let ess = describe_all(&game, e.ess().cloned());
            Ok(Outcome {
                json: json!({ "ess_exists": e.exists(), "ess": ess }),
                text: format!("{}\n", if e.exists() { "yes" } else { "no" }),
                positive: e.exists(),
            })
        }
        EssAction::Enumerate { game } => {
            let game = load_game(&game)?;
            let e = ess_enumerate_with(&game, limits, None)?;
            let text = enumeration_text(&game, &e);
            Ok(Outcome {
                json: json!({ "ess_exists": e.exists(), "degenerate": e.degenerate(), "enumeration": to_json(&e) }),
                text,
                positive: e.exists(),
            })
        }
        EssAction::Check { game, strategy } => {
            let game = load_game(&game)?;
            let s = load_strategy(&strategy)?;
            let v = check_ess_with(&game, &s, limits)?;
            let mut text = format!(
                "{}: symmetric NE = {}, ESS = {}\n",
                s.describe(&game),
                v.is_symmetric_ne,
                v.is_ess
            );
            if let Some(t) = &v.counterexample {
                let _ = writeln!(text, "counterexample: {}", t.describe(&game));
            }
            Ok(Outcome {
                positive: v.is_ess,
                json: to_json(&v),
                text,
            })
        }
    }
}

fn cmd_invasion(game: &Path, incumbent: &Path, mutant: &Path) -> CmdResult {
    let game = load_game(game)?;
    let s = load_strategy(incumbent)?;
    let t = load_strategy(mutant)?;
    let o = invasion_threshold(&game, &s, &t)?;
    let text = format!(
        "delta1 = {}, delta2 = {}, threshold = {}\n",
        format_rational(&o.delta1),
        format_rational(&o.delta2),
        o.threshold.as_ref().map_or("none".to_string(), format_rational)
    );
    Ok(Outcome {
        positive: o.resists(),
        json: to_json(&o),
        text,
    })
}

fn cmd_clique(action: CliqueAction, limits: &Limits) -> CmdResult {
    match action {
        CliqueAction::Max { graph, all } => {
            let g = load_graph(&graph)?;
            let r = if all { max_clique_with_all(&g)? } else { max_clique(&g)? };
            let mut text = format!("clique number {} witness {:?}\n", r.max_clique_size, r.witness);
            for c in r.all_maximum_cliques.iter().flatten() {
                let _ = writeln!(text, "maximum clique {c:?}");
            }
            Ok(Outcome::ok(to_json(&r), text))
        }
        CliqueAction::ViaEss { graph, x, adaptive, seed } => {
            let g = load_graph(&graph)?;
            let options = SearchOptions {
                regime: match x {
                    Some(x) => Regime::power(x)?,
                    None => Regime::El1,
                },
                mode: if adaptive { IntervalMode::Adaptive } else { IntervalMode::Conservative },
                seed,
                limits: *limits,
            };
            let trace = binary_clique_search(&g, &options)?;
            let direct = max_clique(&g)?.max_clique_size;
            if trace.result != direct {
                return Err(Failure::Core(Error::InternalConsistency(format!(
                    "search returned {} but the clique number is {direct}",
                    trace.result
                ))));
            }
            if trace.oracle_calls > call_budget(g.order()) {
                return Err(Failure::Core(Error::InternalConsistency(format!(
                    "{} oracle calls exceed the budget {}",
                    trace.oracle_calls,
                    call_budget(g.order())
                ))));
            }
            let mut text = String::new();
            for s in &trace.steps {
                let _ = writeln!(
                    text,
                    "min={} max={} mid={} ess={} tau={} rho={}",
                    s.min,
                    s.max,
                    s.mid,
                    if s.ess_exists { "yes" } else { "no" },
                    format_rational(&s.params.tau),
                    format_rational(&s.params.rho)
                );
            }
            let _ = writeln!(text, "result {} after {} oracle calls", trace.result, trace.oracle_calls);
            Ok(Outcome::ok(to_json(&trace), text))
        }
    }
}

fn cmd_fuzz(n: usize, x0: u32, trials: u64, seed: u64, limits: &Limits) -> CmdResult {
    let rect = esslab_core::reduction::default_rectangle(n, x0)?;
    let report = fuzz_rectangle(&rect, trials, seed, limits)?;
    Ok(Outcome {
        positive: report.disagreements.is_empty(),
        text: report.to_text(),
        json: to_json(&report),
    })
}

fn cmd_experiment(action: ExperimentAction, limits: &Limits, format: Format) -> CmdResult {
    let ExperimentAction::RandomEss { sizes, trials, seed, csv } = action;
    let table = random_game_experiment(&sizes, trials, seed, limits)?;
    let text = if csv { table.to_csv() } else { table.to_text() };
    if csv && format == Format::Json {
        return Err(Failure::Usage("--csv and --format json are exclusive".into()));
    }
    Ok(Outcome::ok(to_json(&table), text))
}

fn cmd_motzkin(graph: &Path, tau: Option<String>, rho: Option<String>, mass: Option<String>) -> CmdResult {
    let g = load_graph(graph)?;
    let ms = MotzkinStraus::default();
    let d = max_clique(&g)?.max_clique_size;
    let (kind, value) = match (tau, rho, mass) {
        (Some(t), Some(r), None) => ("modified", ms.modified_value(&g, &literal(&t)?, &literal(&r)?)?),
        (None, None, Some(l)) => ("scaled", ms.scaled_value(&g, &literal(&l)?)?),
        (None, None, None) => ("plain", ms.value(&g)?),
        _ => return Err(Failure::Usage("use either --tau/--rho or --mass".into())),
    };
    let verified = g.order() <= ms.cross_check_limit;
    Ok(Outcome::ok(
        json!({
            "kind": kind,
            "clique_number": d,
            "value": format_rational(&value),
            "approx": approx(&value),
            "cross_checked": verified,
        }),
        format!(
            "{kind} value {} (clique number {d}{})\n",
            format_rational(&value),
            if verified { ", cross-checked" } else { "" }
        ),
    ))
}

fn cmd_demo(which: DemoGame, limits: &Limits) -> CmdResult {
    let (name, game) = match which {
        DemoGame::Crab => ("crab", fixtures::crab()),
        DemoGame::Rps => ("rock-paper-scissors", fixtures::rock_paper_scissors()),
    };
    let e = ess_enumerate_with(&game, limits, None)?;
    let pure: Vec<Value> = (0..game.size())
        .map(|i| {
            let s = MixedStrategy::pure(game.size(), i);
            check_ess_with(&game, &s, limits).map(|v| {
                json!({
                    "strategy": game.label(i),
                    "is_symmetric_ne": v.is_symmetric_ne,
                    "is_ess": v.is_ess,
                    "best_response": best_response_face(&game, &s)
                        .map(|b| b.ext_supp.iter().map(|&j| game.label(j).to_string()).collect::<Vec<_>>())
                        .unwrap_or_default(),
                })
            })
        })
        .collect::<Result<_, _>>()?;
    let ess = describe_all(&game, e.ess().cloned());
    let equilibria = describe_all(&game, e.equilibria.iter().map(|c| c.strategy.clone()));
    let mut text = format!("{name}\n");
    for p in &pure {
        let _ = writeln!(
            text,
            "pure {:<10} symmetric NE = {:<5} ESS = {}",
            p["strategy"].as_str().unwrap_or_default(),
            p["is_symmetric_ne"],
            p["is_ess"]
        );
    }
    text.push_str(&enumeration_text(&game, &e));
    Ok(Outcome {
        positive: e.exists(),
        json: json!({
            "game": name,
            "labels": game.labels(),
            "symmetric_equilibria": equilibria,
            "pure_strategies": pure,
            "ess": ess,
            "ess_exists": e.exists(),
        }),
        text,
    })
}

fn run(cli: Cli, limits: &Limits) -> CmdResult {
    match cli.command {
        Command::Intervals { n, regime, x, rho } => cmd_intervals(n, regime, x, rho),
        Command::Rectangle { n, x0, x1, a } => cmd_rectangle(n, x0, x1, a),
        Command::Reduce { graph, k, regime, x, tau, rho, output } => {
            cmd_reduce(&graph, k, regime, x, &tau, &rho, output)
        }
        Command::Ess { action } => cmd_ess(action, limits),
        Command::Invasion { game, incumbent, mutant } => cmd_invasion(&game, &incumbent, &mutant),
        Command::Clique { action } => cmd_clique(action, limits),
        Command::Fuzz { n, x0, trials, seed } => cmd_fuzz(n, x0, trials, seed, limits),
        Command::Experiment { action } => cmd_experiment(action, limits, cli.format),
        Command::Motzkin { graph, tau, rho, mass } => cmd_motzkin(&graph, tau, rho, mass),
        Command::Demo { which } => cmd_demo(which, limits),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let limits = match Limits::from_env() {
        Ok((limits, warning)) => {
            if let Some(w) = warning {
                eprintln!("{w}");
            }
            limits
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli, &limits) {
        Ok(out) => {
            let body = match format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json") + "\n",
                Format::Text => out.text,
            };
            // A closed pipe downstream is not a failure of the command.
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            ExitCode::from(if out.positive { 0 } else { 1 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 3 } else { 2 })
        }
    }
}
