//! Exact maximum clique and the Motzkin–Straus quadratic-program identities.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::qp::{maximize, SimplexQpProblem};
use crate::rational::{format_rational, Rational};

/// Graphs up to this order have their closed forms checked against the QP engine.
pub const DEFAULT_CROSS_CHECK_LIMIT: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueReport {
    pub max_clique_size: usize,
    /// 1-based vertex ids of one maximum clique, ascending.
    pub witness: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_maximum_cliques: Option<Vec<Vec<usize>>>,
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(v)
        }
    })
}

struct Search<'a> {
    g: &'a Graph,
    best: Vec<usize>,
}

impl Search<'_> {
    /// Greedy sequential colouring of `p`; returns vertices by colour class and
    /// the colour count reached at each position (an upper bound on any clique
    /// among the vertices up to that position).
    fn colour_sort(&self, p: u64) -> (Vec<usize>, Vec<usize>) {
        let mut order = Vec::with_capacity(p.count_ones() as usize);
        let mut bounds = Vec::with_capacity(order.capacity());
        let mut uncoloured = p;
        let mut colour = 0;
        while uncoloured != 0 {
            colour += 1;
            let mut candidates = uncoloured;
            while candidates != 0 {
                let v = candidates.trailing_zeros() as usize;
                candidates &= !(1 << v) & !self.g.neighbor_mask(v);
                uncoloured &= !(1 << v);
                order.push(v);
                bounds.push(colour);
            }
        }
        (order, bounds)
    }

    fn expand(&mut self, current: &mut Vec<usize>, mut p: u64) {
        let (order, bounds) = self.colour_sort(p);
        for idx in (0..order.len()).rev() {
            if current.len() + bounds[idx] <= self.best.len() {
                return;
            }
            let v = order[idx];
            current.push(v);
            let next = p & self.g.neighbor_mask(v);
            if next == 0 {
                if current.len() > self.best.len() {
                    self.best = current.clone();
                }
            } else {
                self.expand(current, next);
            }
            current.pop();
            p &= !(1 << v);
        }
    }
}

fn require_vertices(g: &Graph) -> Result<()> {
    if g.order() == 0 {
        return Err(Error::OutOfRange {
            what: "vertex count",
            value: "0".into(),
            range: ">= 1".into(),
        });
    }
    Ok(())
}

/// Exact clique number with one witness (branch and bound, colouring bound).
pub fn max_clique(g: &Graph) -> Result<CliqueReport> {
    require_vertices(g)?;
    let all = if g.order() >= 64 {
        u64::MAX
    } else {
        (1u64 << g.order()) - 1
    };
    let mut search = Search {
        g,
        best: Vec::new(),
    };
    search.expand(&mut Vec::new(), all);
    let mut witness: Vec<usize> = search.best.iter().map(|v| v + 1).collect();
    witness.sort_unstable();
    Ok(CliqueReport {
        max_clique_size: witness.len(),
        witness,
        all_maximum_cliques: None,
    })
}

/// [`max_clique`] plus every maximum clique, in lexicographic order.
pub fn max_clique_with_all(g: &Graph) -> Result<CliqueReport> {
    let mut report = max_clique(g)?;
    let target = report.max_clique_size;
    let mut found = Vec::new();
    fn grow(g: &Graph, current: &mut Vec<usize>, cand: u64, target: usize, out: &mut Vec<Vec<usize>>) {
        if current.len() == target {
            out.push(current.iter().map(|v| v + 1).collect());
            return;
        }
        if current.len() + (cand.count_ones() as usize) < target {
            return;
        }
        for v in bits(cand) {
            current.push(v);
            // only larger indices, so each clique is produced once in ascending order
            let later = if v >= 63 { 0 } else { !((1u64 << (v + 1)) - 1) };
            grow(g, current, cand & g.neighbor_mask(v) & later, target, out);
            current.pop();
        }
    }
    let all = if g.order() >= 64 {
        u64::MAX
    } else {
        (1u64 << g.order()) - 1
    };
    grow(g, &mut Vec::new(), all, target, &mut found);
    report.all_maximum_cliques = Some(found);
    Ok(report)
}

/// True iff `g` contains a clique on `k` vertices (`1 <= k <= n`).
pub fn has_clique(g: &Graph, k: usize) -> Result<bool> {
    if k == 0 || k > g.order() {
        return Err(Error::OutOfRange {
            what: "clique size k",
            value: k.to_string(),
            range: format!("1..={}", g.order()),
        });
    }
    Ok(max_clique(g)?.max_clique_size >= k)
}

/// Closed-form Motzkin–Straus evaluations that verify themselves against the
/// exact simplex QP for graphs up to `cross_check_limit` vertices.
#[derive(Clone, Copy, Debug)]
pub struct MotzkinStraus {
    pub cross_check_limit: usize,
}

impl Default for MotzkinStraus {
    fn default() -> Self {
        MotzkinStraus {
            cross_check_limit: DEFAULT_CROSS_CHECK_LIMIT,
        }
    }
}

impl MotzkinStraus {
    fn verify(&self, g: &Graph, what: &str, closed: &Rational, problem: impl FnOnce() -> Result<SimplexQpProblem>) -> Result<()> {
        if g.order() > self.cross_check_limit {
            return Ok(());
        }
        let qp = maximize(&problem()?)?;
        if &qp.max_value != closed {
            return Err(Error::InternalConsistency(format!(
                "{what}: closed form {} but simplex maximum {} on a graph with {} vertices and edges {:?}",
                format_rational(closed),
                format_rational(&qp.max_value),
                g.order(),
                g.edges()
            )));
        }
        Ok(())
    }

    /// `(d - 1) / d` for clique number `d`; the maximum of `x^T A_G x` on the unit simplex.
    pub fn value(&self, g: &Graph) -> Result<Rational> {
        let d = max_clique(g)?.max_clique_size as i64;
        let closed = Rational::new((d - 1).into(), d.into());
        self.verify(g, "motzkin-straus", &closed, || {
            SimplexQpProblem::quadratic(g.adjacency_matrix())
        })?;
        Ok(closed)
    }

    /// `tau + (rho - tau)(d - 1)/d`, the maximum of `x^T A x` when the zeros of
    /// the adjacency matrix become `tau` and the ones become `rho`.
    ///
    /// The closed form needs `tau <= rho`; for `tau > rho` the maximum is `tau`
    /// instead, so that case is rejected.
    pub fn modified_value(&self, g: &Graph, tau: &Rational, rho: &Rational) -> Result<Rational> {
        if tau > rho {
            return Err(Error::InvalidParams(format!(
                "the modified-adjacency closed form needs tau <= rho (tau = {}, rho = {})",
                format_rational(tau),
                format_rational(rho)
            )));
        }
        let d = max_clique(g)?.max_clique_size as i64;
        let closed = tau + (rho - tau) * Rational::new((d - 1).into(), d.into());
        self.verify(g, "modified adjacency", &closed, || {
            SimplexQpProblem::quadratic(g.modified_adjacency(tau, rho))
        })?;
        Ok(closed)
    }

    /// `((d - 1)/d) l^2`, the maximum of `x^T A_G x` over the simplex of mass `l`.
    pub fn scaled_value(&self, g: &Graph, l: &Rational) -> Result<Rational> {
        if l.is_negative() {
            return Err(Error::OutOfRange {
                what: "simplex mass l",
                value: format_rational(l),
                range: ">= 0".into(),
            });
        }
        let d = max_clique(g)?.max_clique_size as i64;
        let closed = Rational::new((d - 1).into(), d.into()) * l * l;
        if l.is_zero() {
            return Ok(closed);
        }
        self.verify(g, "scaled simplex", &closed, || {
            SimplexQpProblem::quadratic(g.adjacency_matrix())?.with_mass(l.clone())
        })?;
        Ok(closed)
    }
}

pub fn motzkin_straus_value(g: &Graph) -> Result<Rational> {
    MotzkinStraus::default().value(g)
}

pub fn modified_adjacency_value(g: &Graph, tau: &Rational, rho: &Rational) -> Result<Rational> {
    MotzkinStraus::default().modified_value(g, tau, rho)
}

pub fn scaled_simplex_value(g: &Graph, l: &Rational) -> Result<Rational> {
    MotzkinStraus::default().scaled_value(g, l)
}

/// Clique number by exhaustive subset scan; slow, for use as an oracle only.
pub fn brute_force_clique_number(g: &Graph) -> usize {
    let n = g.order();
    assert!(n <= 20, "brute force is limited to n <= 20");
    (1u64..1 << n)
        .filter(|&s| bits(s).all(|v| (s & !(1 << v)) & !g.neighbor_mask(v) == 0))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{non_isomorphic_graphs, random_graph};
    use crate::rational::{int, rat};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_fixtures() {
        assert_eq!(max_clique(&Graph::path(3)).unwrap().max_clique_size, 2);
        assert_eq!(max_clique(&Graph::complete(3)).unwrap().max_clique_size, 3);
        assert_eq!(max_clique(&Graph::empty(5).unwrap()).unwrap().max_clique_size, 1);
        assert!(max_clique(&Graph::empty(0).unwrap()).is_err());
    }

    #[test]
    fn has_clique_examples_and_range() {
        let p3 = Graph::path(3);
        assert!(has_clique(&p3, 2).unwrap());
        assert!(!has_clique(&p3, 3).unwrap());
        assert!(has_clique(&Graph::complete(3), 3).unwrap());
        assert!(has_clique(&p3, 0).is_err());
        assert!(has_clique(&p3, 4).is_err());
    }

    #[test]
    fn motzkin_straus_examples() {
        assert_eq!(motzkin_straus_value(&Graph::complete(3)).unwrap(), rat(2, 3));
        assert_eq!(motzkin_straus_value(&Graph::empty(4).unwrap()).unwrap(), int(0));
        assert_eq!(motzkin_straus_value(&Graph::path(3)).unwrap(), rat(1, 2));
    }

    #[test]
    fn modified_adjacency_examples() {
        let p3 = Graph::path(3);
        assert_eq!(modified_adjacency_value(&p3, &rat(1, 3), &rat(7, 8)).unwrap(), rat(29, 48));
        assert_eq!(modified_adjacency_value(&p3, &rat(2, 5), &rat(2, 5)).unwrap(), rat(2, 5));
        assert_eq!(
            modified_adjacency_value(&Graph::complete(3), &int(0), &int(1)).unwrap(),
            rat(2, 3)
        );
        assert!(modified_adjacency_value(&p3, &int(1), &int(0)).is_err());
    }

    #[test]
    fn scaled_simplex_examples() {
        assert_eq!(scaled_simplex_value(&Graph::complete(3), &int(1)).unwrap(), rat(2, 3));
        assert_eq!(scaled_simplex_value(&Graph::path(3), &int(0)).unwrap(), int(0));
        assert_eq!(scaled_simplex_value(&Graph::path(3), &int(2)).unwrap(), int(2));
        assert!(scaled_simplex_value(&Graph::path(3), &int(-1)).is_err());
    }

    #[test]
    fn all_maximum_cliques_of_path() {
        let r = max_clique_with_all(&Graph::path(4)).unwrap();
        assert_eq!(r.all_maximum_cliques.unwrap(), vec![vec![1, 2], vec![2, 3], vec![3, 4]]);
    }

    #[test]
    fn branch_and_bound_matches_brute_force() {
        for n in 1..=5 {
            for g in non_isomorphic_graphs(n) {
                let r = max_clique(&g).unwrap();
                assert_eq!(r.max_clique_size, brute_force_clique_number(&g));
                assert!(g.is_clique(&r.witness));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [8, 12, 16] {
            for _ in 0..10 {
                let g = random_graph(n, &mut rng);
                assert_eq!(max_clique(&g).unwrap().max_clique_size, brute_force_clique_number(&g));
            }
        }
    }

    #[test]
    fn scale_law_for_several_masses() {
        for g in non_isomorphic_graphs(4) {
            for l in [rat(1, 2), int(1), int(2)] {
                scaled_simplex_value(&g, &l).unwrap();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn adding_an_edge_never_shrinks_the_clique(seed in any::<u64>(), n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(n, &mut rng);
            let before = max_clique(&g).unwrap().max_clique_size;
            let missing: Vec<_> = (1..=n)
                .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
                .filter(|&(u, v)| !g.adjacent(u - 1, v - 1))
                .collect();
            if let Some(&(u, v)) = missing.first() {
                let after = max_clique(&g.with_edge(u, v).unwrap()).unwrap().max_clique_size;
                prop_assert!(after >= before);
            }
        }

        #[test]
        fn has_clique_agrees_with_clique_number(seed in any::<u64>(), n in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(n, &mut rng);
            let d = max_clique(&g).unwrap().max_clique_size;
            for k in 1..=n {
                prop_assert_eq!(has_clique(&g, k).unwrap(), d >= k);
            }
        }

        #[test]
        fn modified_adjacency_self_verifies(seed in any::<u64>(), n in 1usize..=5, a in 0i64..40, b in 1i64..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(n, &mut rng);
            let tau = rat(a, 40);
            let rho = &tau + rat(b, 40);
            modified_adjacency_value(&g, &tau, &rho).unwrap();
        }
    }
}
