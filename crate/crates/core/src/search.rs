//! Binary search for the clique number driven only by an ESS-existence oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::ess::{all_ess_with, Limits};
use crate::game::SymmetricGame;
use crate::graph::Graph;
use crate::reduction::{build_game, interval_order, sample_params, ReductionParams, Regime};

/// Which graph order the interval formulas are evaluated at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMode {
    /// Always the full order `n`.
    #[default]
    Conservative,
    /// The current upper bound on the clique number.
    Adaptive,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub regime: Regime,
    pub mode: IntervalMode,
    pub seed: u64,
    pub limits: Limits,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            regime: Regime::El1,
            mode: IntervalMode::Conservative,
            seed: 0,
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStep {
    pub min: usize,
    pub max: usize,
    pub mid: usize,
    /// Oracle answer: an ESS exists, i.e. there is no `mid`-clique.
    pub ess_exists: bool,
    /// Order the parameter intervals were evaluated at.
    pub interval_order: usize,
    pub params: ReductionParams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchTrace {
    pub n: usize,
    pub regime: Regime,
    pub mode: IntervalMode,
    pub seed: u64,
    pub steps: Vec<SearchStep>,
    pub oracle_calls: usize,
    pub result: usize,
}

impl SearchTrace {
    pub fn params_used(&self) -> impl Iterator<Item = &ReductionParams> {
        self.steps.iter().map(|s| &s.params)
    }
}

/// True iff the game has at least one ESS.
pub fn dec_ess(game: &SymmetricGame) -> Result<bool> {
    dec_ess_with(game, &Limits::default())
}

pub fn dec_ess_with(game: &SymmetricGame, limits: &Limits) -> Result<bool> {
    Ok(!all_ess_with(game, limits, None)?.is_empty())
}

/// `ceil(log2 n)`, the oracle-call budget.
pub fn call_budget(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn binary_clique_search(g: &Graph, options: &SearchOptions) -> Result<SearchTrace> {
    crate::clique::has_clique(g, 1)?; // rejects the empty graph
    let n = g.order();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (mut min, mut max) = (1, n);
    let mut steps = Vec::new();
    while min < max {
        let mid = (min + max).div_ceil(2);
        let order = interval_order(match options.mode {
            IntervalMode::Conservative => n,
            IntervalMode::Adaptive => max,
        });
        let (tau, rho) = sample_params(order, options.regime, 1, &mut rng)?;
        let params = ReductionParams::new(mid, options.regime, tau, rho)?;
        let ess_exists = dec_ess_with(&build_game(g, &params)?, &options.limits)?;
        steps.push(SearchStep {
            min,
            max,
            mid,
            ess_exists,
            interval_order: order,
            params,
        });
        if ess_exists {
            max = mid - 1;
        } else {
            min = mid;
        }
    }
    Ok(SearchTrace {
        n,
        regime: options.regime,
        mode: options.mode,
        seed: options.seed,
        oracle_calls: steps.len(),
        steps,
        result: min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clique::max_clique;
    use crate::graph::{non_isomorphic_graphs, random_graph};
    use crate::reduction::ReductionParams;
    use crate::rational::rat;

    fn shape(t: &SearchTrace) -> Vec<(usize, usize, usize, bool)> {
        t.steps.iter().map(|s| (s.min, s.max, s.mid, s.ess_exists)).collect()
    }

    #[test]
    fn hand_traces() {
        let o = SearchOptions::default();
        let p3 = binary_clique_search(&Graph::path(3), &o).unwrap();
        assert_eq!(shape(&p3), vec![(1, 3, 2, false), (2, 3, 3, true)]);
        assert_eq!((p3.result, p3.oracle_calls), (2, 2));
        let k3 = binary_clique_search(&Graph::complete(3), &o).unwrap();
        assert_eq!(shape(&k3), vec![(1, 3, 2, false), (2, 3, 3, false)]);
        assert_eq!(k3.result, 3);
        let e3 = binary_clique_search(&Graph::empty(3).unwrap(), &o).unwrap();
        assert_eq!(shape(&e3), vec![(1, 3, 2, true)]);
        assert_eq!((e3.result, e3.oracle_calls), (1, 1));
        let one = binary_clique_search(&Graph::empty(1).unwrap(), &o).unwrap();
        assert_eq!((one.result, one.oracle_calls), (1, 0));
    }

    #[test]
    fn call_budget_values() {
        assert_eq!(
            (1..=9).map(call_budget).collect::<Vec<_>>(),
            vec![0, 1, 2, 2, 3, 3, 3, 3, 4]
        );
    }

    #[test]
    fn dec_ess_examples() {
        let p = |k| ReductionParams::new(k, Regime::El1, rat(2, 5), rat(4, 5)).unwrap();
        assert!(dec_ess(&build_game(&Graph::path(3), &p(3)).unwrap()).unwrap());
        assert!(!dec_ess(&build_game(&Graph::path(3), &p(2)).unwrap()).unwrap());
        assert!(!dec_ess(&build_game(&Graph::complete(3), &p(3)).unwrap()).unwrap());
    }

    #[test]
    fn search_matches_clique_oracle_on_small_graphs() {
        for mode in [IntervalMode::Conservative, IntervalMode::Adaptive] {
            for n in 1..=4 {
                for g in non_isomorphic_graphs(n) {
                    let o = SearchOptions { mode, seed: n as u64, ..Default::default() };
                    let t = binary_clique_search(&g, &o).unwrap();
                    let d = max_clique(&g).unwrap().max_clique_size;
                    assert_eq!(t.result, d);
                    assert!(t.oracle_calls <= call_budget(n));
                    for s in &t.steps {
                        assert!(s.min <= d && d <= s.max);
                    }
                }
            }
        }
    }

    #[test]
    fn traces_are_reproducible() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let g = random_graph(6, &mut rng);
        let o = SearchOptions { seed: 42, ..Default::default() };
        let a = serde_json::to_string(&binary_clique_search(&g, &o).unwrap()).unwrap();
        let b = serde_json::to_string(&binary_clique_search(&g, &o).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
