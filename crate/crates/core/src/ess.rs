//! Best responses, symmetric Nash equilibria, exact ESS verification and
//! invasion thresholds.
//!
//! Completeness of the enumeration: if `s` is an ESS with support `S`, the
//! equal-payoff system on `S` has `s` as its only solution. Otherwise some
//! other solution `s'` with `supp(s') ⊆ S` exists nearby, it is a best reply
//! to `s`, and `U(s, s') = U(s', s')` because both sides equal the common
//! payoff of `s'` on `S`. So every ESS appears as the unique solution of its
//! own support system, and enumerating those finds all of them.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{expected_payoff, MixedStrategy, SymmetricGame};
use crate::linalg::{common_denominator, scaled_to_integers, solve, solve_integer};
use crate::qp::{maximize_with_cap, SimplexQpProblem, SimplexQpSolution, DEFAULT_FACE_CAP};
use crate::rational::{serde_rational, Rational};

/// Default cap on the number of pure strategies for support enumeration.
pub const DEFAULT_SUPPORT_CAP: usize = 20;

/// Environment variable overriding both enumeration caps.
pub const MAX_N_ENV: &str = "ESSLAB_MAX_N";

const PARALLEL_FROM: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest game for symmetric-equilibrium support enumeration.
    pub support_cap: usize,
    /// Largest best-response face handed to the simplex QP.
    pub face_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            support_cap: DEFAULT_SUPPORT_CAP,
            face_cap: DEFAULT_FACE_CAP,
        }
    }
}

impl Limits {
    /// Reads [`MAX_N_ENV`]. Returns the limits and, when overridden, a warning
    /// the caller should surface.
    pub fn from_env() -> Result<(Limits, Option<String>)> {
        match std::env::var(MAX_N_ENV) {
            Err(_) => Ok((Limits::default(), None)),
            Ok(raw) => {
                let cap: usize = raw.trim().parse().map_err(|_| Error::OutOfRange {
                    what: MAX_N_ENV,
                    value: raw.clone(),
                    range: "a positive integer".into(),
                })?;
                if cap == 0 || cap > 63 {
                    return Err(Error::OutOfRange {
                        what: MAX_N_ENV,
                        value: raw,
                        range: "1..=63".into(),
                    });
                }
                let warning = format!(
                    "WARNING: {MAX_N_ENV}={cap} overrides the enumeration caps \
                     (defaults {DEFAULT_SUPPORT_CAP} / {DEFAULT_FACE_CAP}); running time grows as 2^{cap}"
                );
                Ok((
                    Limits {
                        support_cap: cap,
                        face_cap: cap,
                    },
                    Some(warning),
                ))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestResponseFace {
    /// Best payoff any pure strategy earns against `s`.
    #[serde(with = "serde_rational")]
    pub value: Rational,
    /// Pure strategies attaining it (0-based, ascending).
    pub ext_supp: Vec<usize>,
}

fn check_size(game: &SymmetricGame, s: &MixedStrategy) -> Result<()> {
    if s.len() != game.size() {
        return Err(Error::DimensionMismatch {
            expected: game.size(),
            found: s.len(),
        });
    }
    Ok(())
}

pub fn best_response_face(game: &SymmetricGame, s: &MixedStrategy) -> Result<BestResponseFace> {
    let payoffs = game.payoffs_against(s)?;
    let value = payoffs.iter().max().expect("games are nonempty").clone();
    let ext_supp = (0..payoffs.len()).filter(|&i| payoffs[i] == value).collect();
    Ok(BestResponseFace { value, ext_supp })
}

/// One symmetric equilibrium per feasible support system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NashCandidate {
    pub strategy: MixedStrategy,
    /// The support system has a positive-dimensional polytope of equilibria;
    /// `strategy` is then its vertex centroid.
    pub degenerate: bool,
    /// Vertices of that polytope (empty when not degenerate).
    pub component_vertices: Vec<MixedStrategy>,
}

fn masks(m: usize, max_support: usize) -> Vec<u64> {
    (1u64..1 << m)
        .filter(|s| s.count_ones() as usize <= max_support)
        .collect()
}

fn support_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// `(A x)_j` for `x` given on `support` only.
fn payoff_row(game: &SymmetricGame, j: usize, support: &[usize], x: &[Rational]) -> Rational {
    support
        .iter()
        .zip(x)
        .map(|(&l, xl)| game.payoff(j, l) * xl)
        .sum()
}

fn embed(m: usize, support: &[usize], x: &[Rational]) -> MixedStrategy {
    let mut probs = vec![Rational::zero(); m];
    for (&i, v) in support.iter().zip(x) {
        probs[i] = v.clone();
    }
    MixedStrategy::new(probs).expect("equilibrium points are probability vectors")
}

fn for_each_subset(n: usize, r: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == r {
            visit(cur);
            return;
        }
        for i in start..=n - (r - cur.len()) {
            cur.push(i);
            go(i + 1, n, r, cur, visit);
            cur.pop();
        }
    }
    if r <= n {
        go(0, n, r, &mut Vec::with_capacity(r), visit);
    }
}

/// With `components` false, positive-dimensional systems are skipped: they
/// never contain an ESS (see the module docs).
fn equilibria_on_support(
    game: &SymmetricGame,
    scaled: &ScaledPayoffs,
    mask: u64,
    components: bool,
) -> Option<NashCandidate> {
    let m = game.size();
    let support = support_of(mask);
    let s = support.len();
    // unknowns: x_S then L * v, in the integer-scaled game
    let mut rows = Vec::with_capacity(s + 1);
    for &i in &support {
        let mut row: Vec<BigInt> = support.iter().map(|&j| scaled.payoff[i][j].clone()).collect();
        row.push(-BigInt::one());
        row.push(BigInt::zero());
        rows.push(row);
    }
    let mut total = vec![BigInt::one(); s];
    total.push(BigInt::zero());
    total.push(BigInt::one());
    rows.push(total);
    let sol = solve_integer(rows, s + 1)?;
    if sol.dimension() == 0 && !sol.particular[..s].iter().all(|v| v.is_positive()) {
        return None;
    }
    if sol.dimension() > 0 && !components {
        return None;
    }
    let mut sol = sol.rational();
    // back to the payoff scale of the game
    let scale = Rational::from_integer(scaled.scale.clone());
    sol.particular[s] /= &scale;
    for dir in sol.basis.iter_mut() {
        dir[s] /= &scale;
    }
    let off: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 0).collect();

    // Every constraint as an affine function of the point z = (x_S, v):
    // x_i >= 0 on the support, v - (A x)_j >= 0 off it.
    let constraint = |z: &[Rational], idx: usize| -> Rational {
        if idx < s {
            z[idx].clone()
        } else {
            &z[s] - payoff_row(game, off[idx - s], &support, &z[..s])
        }
    };
    let n_constraints = s + off.len();

    if sol.dimension() == 0 {
        let z = &sol.particular;
        let feasible = z[..s].iter().all(|v| v.is_positive())
            && (s..n_constraints).all(|c| !constraint(z, c).is_negative());
        return feasible.then(|| NashCandidate {
            strategy: embed(m, &support, &z[..s]),
            degenerate: false,
            component_vertices: Vec::new(),
        });
    }

    if !components {
        return None;
    }
    // Positive-dimensional system: the feasible part is a polytope in the
    // coefficients c of z = particular + basis * c. Its vertices make r of the
    // constraints tight.
    let r = sol.dimension();
    let linear_part = |idx: usize| -> (Vec<Rational>, Rational) {
        let base = constraint(&sol.particular, idx);
        let zero_z = vec![Rational::zero(); s + 1];
        let offset = constraint(&zero_z, idx);
        let coeffs = sol
            .basis
            .iter()
            .map(|dir| constraint(dir, idx) - &offset)
            .collect();
        (coeffs, base)
    };
    let forms: Vec<(Vec<Rational>, Rational)> = (0..n_constraints).map(linear_part).collect();
    let mut vertices: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for_each_subset(n_constraints, r, &mut |tight| {
        let matrix: Vec<Vec<Rational>> = tight.iter().map(|&i| forms[i].0.clone()).collect();
        let rhs: Vec<Rational> = tight.iter().map(|&i| -&forms[i].1).collect();
        let Some(c) = solve(&matrix, &rhs) else { return };
        if c.dimension() != 0 {
            return;
        }
        let z = sol.point(&c.particular);
        if (0..n_constraints).all(|i| !constraint(&z, i).is_negative()) {
            vertices.insert(z);
        }
    });
    if vertices.is_empty() {
        return None;
    }
    let count = Rational::from_integer((vertices.len() as i64).into());
    let mut centroid = vec![Rational::zero(); s + 1];
    for v in &vertices {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= &count;
    }
    if !centroid[..s].iter().all(|v| v.is_positive()) {
        // every equilibrium of this system lives on a smaller support
        return None;
    }
    let degenerate = vertices.len() > 1;
    Some(NashCandidate {
        strategy: embed(m, &support, &centroid[..s]),
        degenerate,
        component_vertices: if degenerate {
            vertices.iter().map(|z| embed(m, &support, &z[..s])).collect()
        } else {
            Vec::new()
        },
    })
}

pub fn symmetric_ne_enumerate(game: &SymmetricGame) -> Result<Vec<NashCandidate>> {
    symmetric_ne_enumerate_with(game, &Limits::default(), None)
}

/// Support enumeration, optionally restricted to supports of at most
/// `max_support` strategies. Results are sorted by support, then by point.
pub fn symmetric_ne_enumerate_with(
    game: &SymmetricGame,
    limits: &Limits,
    max_support: Option<usize>,
) -> Result<Vec<NashCandidate>> {
    enumerate_supports(game, limits, max_support, true)
}

/// Payoffs times a common multiplier `scale` of their denominators.
struct ScaledPayoffs {
    payoff: Vec<Vec<BigInt>>,
    scale: BigInt,
}

impl ScaledPayoffs {
    fn new(game: &SymmetricGame) -> Self {
        let scale = common_denominator(game.matrix().iter().flatten());
        ScaledPayoffs {
            payoff: scaled_to_integers(game.matrix(), &scale),
            scale,
        }
    }
}

fn enumerate_supports(
    game: &SymmetricGame,
    limits: &Limits,
    max_support: Option<usize>,
    components: bool,
) -> Result<Vec<NashCandidate>> {
    let m = game.size();
    if m > limits.support_cap {
        return Err(Error::CapExceeded {
            what: "game size for support enumeration",
            size: m,
            cap: limits.support_cap,
        });
    }
    let all = masks(m, max_support.unwrap_or(m));
    let scaled = ScaledPayoffs::new(game);
    let mut found: Vec<NashCandidate> = if m >= PARALLEL_FROM {
        all.par_iter()
            .filter_map(|&mask| equilibria_on_support(game, &scaled, mask, components))
            .collect()
    } else {
        all.iter()
            .filter_map(|&mask| equilibria_on_support(game, &scaled, mask, components))
            .collect()
    };
    found.sort_by(|a, b| {
        (a.strategy.support(), &a.strategy).cmp(&(b.strategy.support(), &b.strategy))
    });
    Ok(found)
}

/// Every ESS, checking only isolated solutions of support systems. Faster
/// than [`ess_enumerate_with`] on degenerate games and finds the same ESS.
pub fn all_ess_with(game: &SymmetricGame, limits: &Limits, max_support: Option<usize>) -> Result<Vec<MixedStrategy>> {
    let mut out = Vec::new();
    for c in enumerate_supports(game, limits, max_support, false)? {
        if check_ess_with(game, &c.strategy, limits)?.is_ess {
            out.push(c.strategy);
        }
    }
    Ok(out)
}

pub fn all_ess(game: &SymmetricGame) -> Result<Vec<MixedStrategy>> {
    all_ess_with(game, &Limits::default(), None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EssVerdict {
    pub strategy: MixedStrategy,
    pub best_response: BestResponseFace,
    pub is_symmetric_ne: bool,
    pub is_ess: bool,
    /// Maximum of `t^T A t - s^T A t` over the best-response face; computed
    /// only for symmetric equilibria.
    pub condition2_margin: Option<SimplexQpSolution>,
    /// For a non-equilibrium: a strictly better pure reply. For an
    /// equilibrium that is not an ESS: a best reply `t != s` with
    /// `U(s, t) <= U(t, t)`.
    pub counterexample: Option<MixedStrategy>,
    /// The strategy belongs to a positive-dimensional equilibrium polytope.
    pub degeneracy_limited: bool,
}

pub fn check_ess(game: &SymmetricGame, s: &MixedStrategy) -> Result<EssVerdict> {
    check_ess_with(game, s, &Limits::default())
}

pub fn check_ess_with(game: &SymmetricGame, s: &MixedStrategy, limits: &Limits) -> Result<EssVerdict> {
    check_size(game, s)?;
    let br = best_response_face(game, s)?;
    let own = expected_payoff(game, s, s)?;
    if br.value != own {
        let better = MixedStrategy::pure(game.size(), br.ext_supp[0]);
        return Ok(EssVerdict {
            strategy: s.clone(),
            best_response: br,
            is_symmetric_ne: false,
            is_ess: false,
            condition2_margin: None,
            counterexample: Some(better),
            degeneracy_limited: false,
        });
    }

    // f(t) = t^T A t - s^T A t; linear part is -(s^T A)_i = -sum_j s_j A_ji.
    let m = game.size();
    let linear: Vec<Rational> = (0..m)
        .map(|i| {
            -s.probs()
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(j, p)| p * game.payoff(j, i))
                .sum::<Rational>()
        })
        .collect();
    let problem = SimplexQpProblem::new(
        game.matrix().to_vec(),
        linear,
        br.ext_supp.clone(),
        Rational::one(),
    )?;
    let margin = maximize_with_cap(&problem, limits.face_cap)?;
    if margin.max_value.is_negative() {
        return Err(Error::InternalConsistency(
            "condition-2 maximum is negative although s lies in its own best-response face".into(),
        ));
    }

    let is_ess = margin.max_value.is_zero() && margin.unique_maximizer;
    let counterexample = if is_ess {
        if margin.maximizers[0].point != s.probs() {
            return Err(Error::InternalConsistency(
                "unique condition-2 maximiser differs from the candidate".into(),
            ));
        }
        None
    } else {
        let t = margin
            .maximizers
            .iter()
            .find(|p| p.point != s.probs())
            .ok_or_else(|| {
                Error::InternalConsistency("no condition-2 maximiser distinct from the candidate".into())
            })?;
        let t = MixedStrategy::new(t.point.clone())?;
        verify_counterexample(game, s, &br, &t)?;
        Some(t)
    };

    Ok(EssVerdict {
        strategy: s.clone(),
        best_response: br,
        is_symmetric_ne: true,
        is_ess,
        condition2_margin: Some(margin),
        counterexample,
        degeneracy_limited: false,
    })
}

fn verify_counterexample(
    game: &SymmetricGame,
    s: &MixedStrategy,
    br: &BestResponseFace,
    t: &MixedStrategy,
) -> Result<()> {
    let in_face = t.support().iter().all(|i| br.ext_supp.binary_search(i).is_ok());
    let ok = in_face && t != s && expected_payoff(game, s, t)? <= expected_payoff(game, t, t)?;
    if !ok {
        return Err(Error::InternalConsistency(format!(
            "counterexample {:?} fails verification",
            t.to_literals()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EssEnumeration {
    pub equilibria: Vec<NashCandidate>,
    /// One verdict per distinct candidate (representatives and polytope
    /// vertices), sorted by support then point.
    pub verdicts: Vec<EssVerdict>,
}

impl EssEnumeration {
    pub fn ess(&self) -> impl Iterator<Item = &MixedStrategy> {
        self.verdicts.iter().filter(|v| v.is_ess).map(|v| &v.strategy)
    }

    pub fn exists(&self) -> bool {
        self.verdicts.iter().any(|v| v.is_ess)
    }

    pub fn degenerate(&self) -> bool {
        self.equilibria.iter().any(|c| c.degenerate)
    }
}

pub fn ess_enumerate(game: &SymmetricGame) -> Result<EssEnumeration> {
    ess_enumerate_with(game, &Limits::default(), None)
}

pub fn ess_enumerate_with(
    game: &SymmetricGame,
    limits: &Limits,
    max_support: Option<usize>,
) -> Result<EssEnumeration> {
    let equilibria = symmetric_ne_enumerate_with(game, limits, max_support)?;
    let mut candidates: Vec<(MixedStrategy, bool)> = Vec::new();
    for c in &equilibria {
        candidates.push((c.strategy.clone(), c.degenerate));
        candidates.extend(c.component_vertices.iter().map(|v| (v.clone(), true)));
    }
    candidates.sort_by(|a, b| (a.0.support(), &a.0).cmp(&(b.0.support(), &b.0)));
    candidates.dedup_by(|later, earlier| {
        if later.0 == earlier.0 {
            earlier.1 |= later.1;
            true
        } else {
            false
        }
    });
    let check = |(s, degenerate): &(MixedStrategy, bool)| {
        check_ess_with(game, s, limits).map(|mut v| {
            v.degeneracy_limited = *degenerate;
            v
        })
    };
    let verdicts = if game.size() >= PARALLEL_FROM {
        candidates.par_iter().map(check).collect::<Result<Vec<_>>>()?
    } else {
        candidates.iter().map(check).collect::<Result<Vec<_>>>()?
    };
    Ok(EssEnumeration {
        equilibria,
        verdicts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvasionOutcome {
    /// Supremum of mutant shares `eps` in (0, 1) for which the incumbent
    /// strictly out-earns the mutant in the blended population; `None` when
    /// no share works.
    #[serde(with = "serde_rational::option")]
    pub threshold: Option<Rational>,
    /// `U(s, s) - U(t, s)`.
    #[serde(with = "serde_rational")]
    pub delta1: Rational,
    /// `U(s, t) - U(t, t)`.
    #[serde(with = "serde_rational")]
    pub delta2: Rational,
}

impl InvasionOutcome {
    /// Incumbent minus mutant payoff against `(1 - eps) s + eps t`.
    pub fn advantage(&self, eps: &Rational) -> Rational {
        &self.delta1 + eps * (&self.delta2 - &self.delta1)
    }

    pub fn resists(&self) -> bool {
        self.threshold.as_ref().is_some_and(|t| t.is_positive())
    }
}

pub fn invasion_threshold(
    game: &SymmetricGame,
    incumbent: &MixedStrategy,
    mutant: &MixedStrategy,
) -> Result<InvasionOutcome> {
    check_size(game, incumbent)?;
    check_size(game, mutant)?;
    if incumbent == mutant {
        return Err(Error::InvalidStrategy("incumbent and mutant are the same strategy".into()));
    }
    let delta1 = expected_payoff(game, incumbent, incumbent)? - expected_payoff(game, mutant, incumbent)?;
    let delta2 = expected_payoff(game, incumbent, mutant)? - expected_payoff(game, mutant, mutant)?;
    let threshold = if delta1.is_positive() {
        if delta2 >= delta1 {
            Some(Rational::one())
        } else {
            let crossing = &delta1 / (&delta1 - &delta2);
            Some(crossing.min(Rational::one()))
        }
    } else if delta1.is_zero() && delta2.is_positive() {
        Some(Rational::one())
    } else {
        None
    };
    Ok(InvasionOutcome {
        threshold,
        delta1,
        delta2,
    })
}

/// All mixed strategies of `size` pure strategies on the grid of mesh `1/steps`.
pub fn strategy_grid(size: usize, steps: usize) -> Vec<MixedStrategy> {
    let mut out = Vec::new();
    let den = Rational::from_integer((steps as i64).into());
    crate::qp::for_each_composition(steps, size, &mut |parts| {
        let probs = parts
            .iter()
            .map(|&p| Rational::from_integer((p as i64).into()) / &den)
            .collect();
        out.push(MixedStrategy::new(probs).expect("grid points are probability vectors"));
    });
    out
}
