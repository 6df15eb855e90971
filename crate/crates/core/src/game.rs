//! Symmetric two-player games, mixed strategies and their file formats.

use serde::{Deserialize, Serialize};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, parse_rational, Rational};

/// Row player's payoff matrix `A`; the column player uses `A^T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricGame {
    payoff: Vec<Vec<Rational>>,
    labels: Vec<String>,
}

impl SymmetricGame {
    pub fn new(payoff: Vec<Vec<Rational>>) -> Result<Self> {
        let labels = (1..=payoff.len()).map(|i| i.to_string()).collect();
        Self::with_labels(payoff, labels)
    }

    pub fn with_labels(payoff: Vec<Vec<Rational>>, labels: Vec<String>) -> Result<Self> {
        let n = payoff.len();
        if n == 0 {
            return Err(Error::GameFormat("a game needs at least one strategy".into()));
        }
        if let Some(row) = payoff.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        Ok(SymmetricGame { payoff, labels })
    }

    pub fn size(&self) -> usize {
        self.payoff.len()
    }

    pub fn payoff(&self, i: usize, j: usize) -> &Rational {
        &self.payoff[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.payoff
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Payoff of every pure strategy against `t`, i.e. the vector `A t`.
    pub fn payoffs_against(&self, t: &MixedStrategy) -> Result<Vec<Rational>> {
        self.check_dim(t)?;
        Ok(self
            .payoff
            .iter()
            .map(|row| {
                row.iter()
                    .zip(t.probs())
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(a, p)| a * p)
                    .sum()
            })
            .collect())
    }

    fn check_dim(&self, s: &MixedStrategy) -> Result<()> {
        if s.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: s.len(),
            });
        }
        Ok(())
    }
}

/// `U1(s, t) = s^T A t`, exactly.
pub fn expected_payoff(game: &SymmetricGame, s: &MixedStrategy, t: &MixedStrategy) -> Result<Rational> {
    game.check_dim(s)?;
    let against_t = game.payoffs_against(t)?;
    Ok(s.probs()
        .iter()
        .zip(&against_t)
        .filter(|(p, _)| !p.is_zero())
        .map(|(p, v)| p * v)
        .sum())
}

/// A probability vector over pure strategies.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MixedStrategy {
    probs: Vec<Rational>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(Error::InvalidStrategy(format!(
                "negative probability {}",
                format_rational(p)
            )));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidStrategy(format!(
                "probabilities sum to {}, not 1",
                format_rational(&total)
            )));
        }
        Ok(MixedStrategy { probs })
    }

    pub fn pure(size: usize, i: usize) -> Self {
        assert!(i < size, "pure strategy index out of range");
        let mut probs = vec![Rational::zero(); size];
        probs[i] = Rational::one();
        MixedStrategy { probs }
    }

    /// Uniform distribution over the given (0-based) indices.
    pub fn uniform_on(size: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty());
        let w = Rational::new(1.into(), (support.len() as i64).into());
        let mut probs = vec![Rational::zero(); size];
        for &i in support {
            probs[i] = w.clone();
        }
        MixedStrategy { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> &Rational {
        &self.probs[i]
    }

    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn as_pure(&self) -> Option<usize> {
        self.probs.iter().position(|p| p.is_one())
    }

    /// `(1 - eps) * self + eps * other`.
    pub fn blend(&self, other: &MixedStrategy, eps: &Rational) -> MixedStrategy {
        let keep = Rational::one() - eps;
        MixedStrategy {
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| &keep * a + eps * b)
                .collect(),
        }
    }

    pub fn to_literals(&self) -> Vec<String> {
        self.probs.iter().map(format_rational).collect()
    }

    /// Human-readable rendering such as `Large` or `1/3 R + 2/3 P`.
    pub fn describe(&self, game: &SymmetricGame) -> String {
        if let Some(i) = self.as_pure() {
            return game.label(i).to_string();
        }
        self.support()
            .into_iter()
            .map(|i| format!("{} {}", format_rational(&self.probs[i]), game.label(i)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl Serialize for MixedStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.probs.iter().map(format_rational))
    }
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    n: usize,
    #[serde(default)]
    labels: Option<Vec<String>>,
    payoffs: Vec<Vec<String>>,
}

/// Reads the JSON game format `{ "n", "labels", "payoffs" }`.
pub fn game_from_json(text: &str) -> Result<SymmetricGame> {
    let file: GameFile = serde_json::from_str(text)?;
    if file.payoffs.len() != file.n {
        return Err(Error::GameFormat(format!(
            "\"n\" is {} but {} payoff rows were given",
            file.n,
            file.payoffs.len()
        )));
    }
    let payoff = file
        .payoffs
        .iter()
        .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    match file.labels {
        Some(labels) => SymmetricGame::with_labels(payoff, labels),
        None => SymmetricGame::new(payoff),
    }
}

/// Writes the JSON game format; canonical documents round-trip byte for byte.
pub fn game_to_json(game: &SymmetricGame) -> String {
    let file = GameFile {
        n: game.size(),
        labels: Some(game.labels.clone()),
        payoffs: game
            .payoff
            .iter()
            .map(|row| row.iter().map(format_rational).collect())
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("game serialization");
    out.push('\n');
    out
}

/// Reads a strategy file: a JSON array of rational literals.
pub fn strategy_from_json(text: &str) -> Result<MixedStrategy> {
    let raw: Vec<String> = serde_json::from_str(text)?;
    let probs = raw.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
    MixedStrategy::new(probs)
}

pub fn strategy_to_json(s: &MixedStrategy) -> String {
    let mut out = serde_json::to_string(&s.to_literals()).expect("strategy serialization");
    out.push('\n');
    out
}

/// Built-in fixture games.
pub mod fixtures {
    use super::*;

    fn from_ints(rows: &[&[i64]], labels: &[&str]) -> SymmetricGame {
        let payoff = rows
            .iter()
            .map(|r| r.iter().map(|&v| int(v)).collect())
            .collect();
        SymmetricGame::with_labels(payoff, labels.iter().map(|s| s.to_string()).collect())
            .expect("fixture is square")
    }

    /// Crab body-size game: Small/Small 7, Small/Large 1, Large/Small 9, Large/Large 4.
    pub fn crab() -> SymmetricGame {
        from_ints(&[&[7, 1], &[9, 4]], &["Small", "Large"])
    }

    /// Rock-paper-scissors with win 1, loss -1, tie 0.
    pub fn rock_paper_scissors() -> SymmetricGame {
        from_ints(
            &[&[0, -1, 1], &[1, 0, -1], &[-1, 1, 0]],
            &["Rock", "Paper", "Scissors"],
        )
    }

    pub fn constant(size: usize, value: Rational) -> SymmetricGame {
        SymmetricGame::new(vec![vec![value; size]; size]).expect("square")
    }
}
