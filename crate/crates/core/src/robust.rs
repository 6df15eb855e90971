//! Perturbation fuzzing of the reduction inside the robust rectangle, and the
//! random-game ESS frequency experiment.

use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clique::{has_clique, max_clique};
use crate::error::{Error, Result};
use crate::ess::{all_ess_with, Limits};
use crate::game::SymmetricGame;
use crate::graph::{random_graph, Graph};
use crate::rational::{approx, format_rational, pow2, serde_rational, Rational};
use crate::reduction::{
    certificates, default_rectangle, partition_game, Certificates, RobustRectangle,
};

/// Denominator exponent of random payoffs in the frequency experiment.
pub const PAYOFF_BITS: u32 = 16;

/// RNG for one trial: independent of scheduling, so parallel runs reproduce.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One value per payoff partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerturbationSample {
    #[serde(with = "serde_rational")]
    pub w_tau: Rational,
    #[serde(with = "serde_rational")]
    pub w_rho: Rational,
    #[serde(with = "serde_rational")]
    pub w_lambda: Rational,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzTrial {
    pub trial: u64,
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
    pub sample: PerturbationSample,
    pub ess_found: bool,
    pub has_k_clique: bool,
    pub agrees: bool,
    pub certificates: Certificates,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub n: usize,
    pub x0: u32,
    #[serde(with = "serde_rational")]
    pub x1: Rational,
    #[serde(with = "serde_rational")]
    pub a: Rational,
    pub seed: u64,
    pub trials: u64,
    pub agreements: u64,
    pub disagreements: Vec<FuzzTrial>,
    pub incoherent_certificates: u64,
    pub records: Vec<FuzzTrial>,
}

impl FuzzReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "fuzz n={} x0={} x1={} A~{:.3e} seed={} trials={} agreements={} disagreements={} incoherent certificates={}",
            self.n,
            self.x0,
            format_rational(&self.x1),
            approx(&self.a),
            self.seed,
            self.trials,
            self.agreements,
            self.disagreements.len(),
            self.incoherent_certificates
        );
        if !self.disagreements.is_empty() {
            let _ = writeln!(out, "{:>6}  {:>2}  {:>5}  {:>7}  {:>12}  {:>12}  {:>12}  edges", "trial", "k", "ess", "clique", "tau", "rho", "lambda");
            for t in &self.disagreements {
                let _ = writeln!(
                    out,
                    "{:>6}  {:>2}  {:>5}  {:>7}  {:>12.9}  {:>12.9}  {:>12.9}  {:?}",
                    t.trial,
                    t.k,
                    t.ess_found,
                    t.has_k_clique,
                    approx(&t.sample.w_tau),
                    approx(&t.sample.w_rho),
                    approx(&t.sample.w_lambda),
                    t.edges
                );
            }
        }
        out
    }
}

/// Runs one trial on a fixed graph, `k` and sample.
pub fn fuzz_trial(
    g: &Graph,
    k: usize,
    sample: PerturbationSample,
    trial: u64,
    limits: &Limits,
) -> Result<FuzzTrial> {
    let game = partition_game(g, &sample.w_tau, &sample.w_rho, &sample.w_lambda)?;
    let ess_found = !all_ess_with(&game, limits, None)?.is_empty();
    let has_k_clique = k <= g.order() && has_clique(g, k)?;
    let d = max_clique(g)?.max_clique_size;
    let certs = certificates(d, k, &sample.w_tau, &sample.w_rho, &sample.w_lambda);
    Ok(FuzzTrial {
        trial,
        edges: g.edges(),
        k,
        agrees: ess_found != has_k_clique,
        ess_found,
        has_k_clique,
        certificates: certs,
        sample,
    })
}

pub fn fuzz_reduction(n: usize, x0: u32, trials: u64, seed: u64) -> Result<FuzzReport> {
    let rect = default_rectangle(n, x0)?;
    fuzz_rectangle(&rect, trials, seed, &Limits::default())
}

pub fn fuzz_rectangle(rect: &RobustRectangle, trials: u64, seed: u64, limits: &Limits) -> Result<FuzzReport> {
    let n = rect.n;
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let g = random_graph(n, &mut rng);
            let k = rng.gen_range(2..=n);
            let (w_tau, w_rho, w_lambda) = rect.sample(k, &mut rng).ok_or_else(|| Error::EmptyInterval {
                n,
                regime: format!("rectangle x0={}", rect.x0),
            })?;
            let sample = PerturbationSample {
                w_tau,
                w_rho,
                w_lambda,
                seed,
            };
            fuzz_trial(&g, k, sample, trial, limits)
        })
        .collect::<Result<Vec<_>>>()?;
    let agreements = records.iter().filter(|r| r.agrees).count() as u64;
    let incoherent_certificates = records.iter().filter(|r| !r.certificates.coherent).count() as u64;
    Ok(FuzzReport {
        n,
        x0: rect.x0,
        x1: rect.x1.clone(),
        a: rect.a.clone(),
        seed,
        trials,
        agreements,
        disagreements: records.iter().filter(|r| !r.agrees).cloned().collect(),
        incoherent_certificates,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyRow {
    pub n: usize,
    pub trials: u64,
    pub with_ess: u64,
    #[serde(with = "serde_rational")]
    pub frequency: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub seed: u64,
    pub max_support: usize,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn to_text(&self) -> String {
        let mut out = format!("{:>4}  {:>7}  {:>8}  {:>9}\n", "n", "trials", "with_ess", "frequency");
        for r in &self.rows {
            let _ = writeln!(out, "{:>4}  {:>7}  {:>8}  {:>9.4}", r.n, r.trials, r.with_ess, approx(&r.frequency));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,trials,with_ess,frequency,frequency_approx\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                r.trials,
                r.with_ess,
                format_rational(&r.frequency),
                approx(&r.frequency)
            );
        }
        out
    }
}

/// Game with i.i.d. payoffs uniform on `{0, 1/2^16, .., 1}`.
pub fn random_game<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymmetricGame {
    let den = pow2(PAYOFF_BITS);
    let top = 1u64 << PAYOFF_BITS;
    let payoff = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Rational::new(BigInt::from(rng.gen_range(0..=top)), den.clone()))
                .collect()
        })
        .collect();
    SymmetricGame::new(payoff).expect("square matrix")
}

/// Fraction of random games owning an ESS with support of at most two strategies.
pub fn random_game_experiment(sizes: &[usize], trials: u64, seed: u64, limits: &Limits) -> Result<FrequencyTable> {
    const MAX_SUPPORT: usize = 2;
    if let Some(&n) = sizes.iter().find(|&&n| n == 0 || n > limits.support_cap) {
        return Err(Error::CapExceeded {
            what: "random game size",
            size: n,
            cap: limits.support_cap,
        });
    }
    let rows = sizes
        .iter()
        .map(|&n| {
            let hits = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(seed, (n as u64) << 32 | trial);
                    let game = random_game(n, &mut rng);
                    all_ess_with(&game, limits, Some(MAX_SUPPORT)).map(|e| !e.is_empty())
                })
                .collect::<Result<Vec<_>>>()?;
            let with_ess = hits.iter().filter(|&&h| h).count() as u64;
            let frequency = if trials == 0 {
                Rational::from_integer(0.into())
            } else {
                Rational::new(BigInt::from(with_ess), BigInt::from(trials))
            };
            Ok(FrequencyRow {
                n,
                trials,
                with_ess,
                frequency,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyTable {
        seed,
        max_support: MAX_SUPPORT,
        rows,
    })
}
