//! Reduction games from graphs to ESS instances, their parameter intervals
//! and the robust perturbation rectangle.
//!
//! Strategy order: `a`, `b`, `c`, then the vertices `1..n`.
//!
//! For any `tau < rho` the only possible ESS of a reduction game is pure `a`,
//! and for a best reply `t` putting mass `r` on the vertices with vertex part
//! `r y`, `U(t, t) - U(a, t) = r^2 (y^T A y - lambda)` where `A` is the
//! modified adjacency matrix. Hence `a` is an ESS iff `phi(d) < 0`, where
//! `phi(m) = tau + rho (m - 1) - m lambda` and `d` is the clique number.
//! `phi(m) / m` increases with `m`, which reduces exact validity of a
//! parameter choice to two sign checks per probed clique size.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::SymmetricGame;
use crate::graph::Graph;
use crate::rational::{
    approx, cmp_with_surd, dyadic_floor, format_rational, int, pow_enclosure, pow_int, rat,
    sample_in, serde_rational, sqrt_enclosure, Enclosure, Rational, TaggedEnclosure,
};

/// Precision (bits) of enclosures emitted in reports.
pub const ENCLOSURE_BITS: u32 = 128;
const MAX_REFINE_BITS: u32 = 8192;
const SAMPLE_ATTEMPTS: usize = 256;

pub const STRATEGY_A: usize = 0;
pub const STRATEGY_B: usize = 1;
pub const STRATEGY_C: usize = 2;

/// Index of vertex `v` (1-based) in a reduction game.
pub fn vertex_strategy(v: usize) -> usize {
    v + 2
}

/// How the `a`-row payoff against vertices depends on the probed size `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `lambda(k) = (k - 1) / k`.
    El1,
    /// `lambda(k) = 1 - 1 / k^x`, `x >= 3`.
    Power(u32),
}

impl Regime {
    pub fn power(x: u32) -> Result<Regime> {
        if x < 3 {
            return Err(Error::OutOfRange {
                what: "exponent x",
                value: x.to_string(),
                range: ">= 3".into(),
            });
        }
        Ok(Regime::Power(x))
    }

    pub fn lambda(&self, k: usize) -> Rational {
        let k = k as i64;
        match *self {
            Regime::El1 => rat(k - 1, k),
            Regime::Power(x) => {
                Rational::one() - Rational::new(BigInt::one(), pow_int(k, x))
            }
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::El1 => write!(f, "el1"),
            Regime::Power(x) => write!(f, "x={x}"),
        }
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionParams {
    pub k: usize,
    #[serde(with = "serde_rational")]
    pub tau: Rational,
    #[serde(with = "serde_rational")]
    pub rho: Rational,
    pub regime: Regime,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
}

fn check_values(tau: &Rational, rho: &Rational) -> Result<()> {
    if !tau.is_positive() {
        return Err(Error::InvalidParams(format!(
            "0 < tau violated: tau = {}",
            format_rational(tau)
        )));
    }
    if tau >= rho {
        return Err(Error::InvalidParams(format!(
            "tau < rho violated: tau = {}, rho = {}",
            format_rational(tau),
            format_rational(rho)
        )));
    }
    Ok(())
}

impl ReductionParams {
    pub fn new(k: usize, regime: Regime, tau: Rational, rho: Rational) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k >= 2 violated: k = {k}")));
        }
        if let Regime::Power(x) = regime {
            Regime::power(x)?;
        }
        check_values(&tau, &rho)?;
        Ok(ReductionParams {
            k,
            lambda: regime.lambda(k),
            tau,
            rho,
            regime,
        })
    }
}

/// Which of the three payoff values an entry of a reduction game carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PayoffClass {
    Tau,
    Rho,
    Lambda,
}

/// Symbolic payoff template of the reduction game for `g`.
pub fn payoff_template(g: &Graph) -> Vec<Vec<PayoffClass>> {
    use PayoffClass::*;
    let m = g.order() + 3;
    let mut t = vec![vec![Tau; m]; m];
    for (z, row) in t.iter_mut().enumerate() {
        if z != STRATEGY_B && z != STRATEGY_C {
            row[STRATEGY_A] = Rho;
        }
    }
    for v in 1..=g.order() {
        let col = vertex_strategy(v);
        t[STRATEGY_A][col] = Lambda;
        t[STRATEGY_B][col] = Rho;
        t[STRATEGY_C][col] = Rho;
        for u in 1..=g.order() {
            if g.adjacent(u - 1, v - 1) {
                t[vertex_strategy(u)][col] = Rho;
            }
        }
    }
    t
}

/// Strategy labels `a, b, c, 1, .., n`.
pub fn reduction_labels(n: usize) -> Vec<String> {
    ["a", "b", "c"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n).map(|v| v.to_string()))
        .collect()
}

/// Reduction game with one value per payoff partition.
pub fn partition_game(g: &Graph, tau: &Rational, rho: &Rational, lambda: &Rational) -> Result<SymmetricGame> {
    check_values(tau, rho)?;
    let payoff = payoff_template(g)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| match c {
                    PayoffClass::Tau => tau.clone(),
                    PayoffClass::Rho => rho.clone(),
                    PayoffClass::Lambda => lambda.clone(),
                })
                .collect()
        })
        .collect();
    SymmetricGame::with_labels(payoff, reduction_labels(g.order()))
}

pub fn build_game(g: &Graph, params: &ReductionParams) -> Result<SymmetricGame> {
    partition_game(g, &params.tau, &params.rho, &params.lambda)
}

/// `tau + rho (m - 1) - m lambda`.
pub fn phi(tau: &Rational, rho: &Rational, lambda: &Rational, m: usize) -> Rational {
    let m = int(m as i64);
    tau + rho * (&m - Rational::one()) - m * lambda
}

/// Exact prediction for a reduction game with `tau < rho`: pure `a` is an
/// ESS (and then the only one) iff `phi(d) < 0`.
pub fn predicts_ess(clique_number: usize, tau: &Rational, rho: &Rational, lambda: &Rational) -> bool {
    phi(tau, rho, lambda, clique_number).is_negative()
}

/// Sign certificates: `E = phi(d)` must be negative when `d < k`, and
/// `E' = phi(k)` (on a witnessed `k`-clique) non-negative when `d >= k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificates {
    pub clique_number: usize,
    pub k: usize,
    #[serde(with = "serde_rational::option")]
    pub e: Option<Rational>,
    #[serde(with = "serde_rational::option")]
    pub e_prime: Option<Rational>,
    pub coherent: bool,
}

pub fn certificates(clique_number: usize, k: usize, tau: &Rational, rho: &Rational, lambda: &Rational) -> Certificates {
    if clique_number < k {
        let e = phi(tau, rho, lambda, clique_number);
        Certificates {
            clique_number,
            k,
            coherent: e.is_negative(),
            e: Some(e),
            e_prime: None,
        }
    } else {
        let e_prime = phi(tau, rho, lambda, k);
        Certificates {
            clique_number,
            k,
            coherent: !e_prime.is_negative(),
            e: None,
            e_prime: Some(e_prime),
        }
    }
}

/// Whether "ESS exists iff no `k`-clique" holds for every graph on `n`
/// vertices and every `k` in `2..=n+1`, decided exactly.
pub fn exactly_valid(n: usize, regime: Regime, tau: &Rational, rho: &Rational) -> bool {
    tau < rho
        && (2..=n + 1).all(|k| {
            let lambda = regime.lambda(k);
            phi(tau, rho, &lambda, k - 1).is_negative()
                && (k > n || !phi(tau, rho, &lambda, k).is_negative())
        })
}

/// An interval endpoint: rational, `a + b sqrt(c)` with `b, c >= 0`, or `+inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Finite(Rational),
    Surd { a: Rational, b: Rational, c: Rational },
    Infinite,
}

impl Endpoint {
    fn surd(a: Rational, b: Rational, c: Rational) -> Endpoint {
        let e = sqrt_enclosure(&c, 0);
        if e.is_exact() {
            // c is a perfect square
            Endpoint::Finite(a + b * e.lo)
        } else {
            Endpoint::Surd { a, b, c }
        }
    }

    /// Ordering of `t` relative to this endpoint.
    pub fn cmp_value(&self, t: &Rational) -> Ordering {
        match self {
            Endpoint::Finite(q) => t.cmp(q),
            Endpoint::Surd { a, b, c } => cmp_with_surd(t, a, b, c),
            Endpoint::Infinite => Ordering::Less,
        }
    }

    pub fn enclosure(&self, bits: u32) -> Option<Enclosure> {
        match self {
            Endpoint::Finite(q) => Some(Enclosure::exact(q.clone())),
            Endpoint::Surd { a, b, c } => Some(sqrt_enclosure(c, bits).scale(b).add_rational(a)),
            Endpoint::Infinite => None,
        }
    }

    pub fn approx(&self) -> f64 {
        match self.enclosure(64) {
            Some(e) => approx(&e.midpoint()),
            None => f64::INFINITY,
        }
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        match self {
            Endpoint::Finite(q) => {
                map.serialize_entry("exact", &format_rational(q))?;
                map.serialize_entry("approx", &approx(q))?;
            }
            Endpoint::Surd { a, b, c } => {
                let e = self.enclosure(ENCLOSURE_BITS).expect("finite");
                map.serialize_entry(
                    "form",
                    &format!("{} + {}*sqrt({})", format_rational(a), format_rational(b), format_rational(c)),
                )?;
                map.serialize_entry("lower", &format_rational(&e.lo))?;
                map.serialize_entry("upper", &format_rational(&e.hi))?;
                map.serialize_entry("approx", &approx(&e.midpoint()))?;
            }
            Endpoint::Infinite => {
                map.serialize_entry("infinite", &true)?;
            }
        }
        map.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lower: Endpoint,
    pub upper: Endpoint,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Interval {
    pub fn new(lower: Endpoint, lower_closed: bool, upper: Endpoint, upper_closed: bool) -> Self {
        Interval {
            lower,
            upper,
            lower_closed,
            upper_closed,
        }
    }

    fn finite(lo: Rational, lower_closed: bool, hi: Rational, upper_closed: bool) -> Self {
        Interval::new(Endpoint::Finite(lo), lower_closed, Endpoint::Finite(hi), upper_closed)
    }

    pub fn contains(&self, t: &Rational) -> bool {
        let above = match self.lower.cmp_value(t) {
            Ordering::Greater => true,
            Ordering::Equal => self.lower_closed,
            Ordering::Less => false,
        } && self.lower != Endpoint::Infinite;
        let below = match self.upper.cmp_value(t) {
            Ordering::Less => true,
            Ordering::Equal => self.upper_closed,
            Ordering::Greater => false,
        };
        above && below
    }

    /// Exact emptiness test (at most one endpoint may be irrational).
    pub fn nonempty(&self) -> bool {
        match (&self.lower, &self.upper) {
            (_, Endpoint::Infinite) => true,
            (Endpoint::Infinite, _) => false,
            (Endpoint::Finite(lo), up) => match up.cmp_value(lo) {
                Ordering::Less => true,
                Ordering::Equal => self.lower_closed && self.upper_closed,
                Ordering::Greater => false,
            },
            (low, Endpoint::Finite(hi)) => low.cmp_value(hi) == Ordering::Greater,
            (low, up) => {
                let mut bits = 64;
                loop {
                    let (l, u) = (low.enclosure(bits).unwrap(), up.enclosure(bits).unwrap());
                    if l.hi < u.lo {
                        return true;
                    }
                    if u.hi < l.lo || bits >= MAX_REFINE_BITS {
                        return false;
                    }
                    bits *= 2;
                }
            }
        }
    }

    /// Rational bounds lying inside the interval (irrational endpoints are
    /// replaced by rationals on their inner side).
    fn inner_bounds(&self) -> Option<(Rational, bool, Rational, bool)> {
        let lo = match &self.lower {
            Endpoint::Finite(q) => (q.clone(), self.lower_closed),
            Endpoint::Surd { .. } => (self.lower.enclosure(64)?.hi, self.lower_closed),
            Endpoint::Infinite => return None,
        };
        let hi = match &self.upper {
            Endpoint::Finite(q) => (q.clone(), self.upper_closed),
            Endpoint::Surd { .. } => (self.upper.enclosure(64)?.lo, self.upper_closed),
            Endpoint::Infinite => return None,
        };
        Some((lo.0, lo.1, hi.0, hi.1))
    }

    /// Uniform draw on the `2^-20` grid of the (inner rational) interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Rational> {
        let (lo, lc, hi, hc) = self.inner_bounds()?;
        sample_in(&lo, &hi, lc, hc, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalReport {
    pub n: usize,
    pub family: Regime,
    #[serde(with = "serde_rational")]
    pub rho: Rational,
    /// Which bullet of the interval statement `rho` falls under (1 or 2).
    pub regime: Option<u8>,
    pub rho_interval: Option<Interval>,
    /// `[tau_lower, tau_upper)` at this `rho`.
    pub tau_interval: Option<Interval>,
    pub nonempty: bool,
    pub notes: Vec<String>,
}

impl IntervalReport {
    pub fn tau_lower(&self) -> Option<&Endpoint> {
        self.tau_interval.as_ref().map(|i| &i.lower)
    }

    pub fn tau_upper(&self) -> Option<&Endpoint> {
        self.tau_interval.as_ref().map(|i| &i.upper)
    }
}

fn require_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "graph order n",
            value: n.to_string(),
            range: ">= 2".into(),
        });
    }
    Ok(())
}

fn nn(n: usize) -> Rational {
    int(n as i64)
}

/// The two `rho` ranges for `lambda(k) = (k - 1)/k`.
pub fn el1_rho_ranges(n: usize) -> Result<[Interval; 2]> {
    require_order(n)?;
    let sq = int((n as i64 + 1) * (n as i64 + 1));
    let first_lo = Rational::one() - int(4) / &sq;
    let first_hi = Rational::one() - Rational::one() / &sq;
    Ok([
        Interval::finite(first_lo, false, first_hi.clone(), true),
        Interval::finite(first_hi, false, Rational::one(), false),
    ])
}

pub fn el1_intervals(n: usize, rho: &Rational) -> Result<IntervalReport> {
    let ranges = el1_rho_ranges(n)?;
    let lower = (Rational::one() - rho) * (nn(n) - Rational::one());
    let mut notes = Vec::new();
    let selected = ranges.iter().position(|r| r.contains(rho));
    let tau_interval = match selected {
        Some(0) => Some(Interval::new(
            Endpoint::Finite(lower),
            true,
            Endpoint::surd(int(2) * rho - int(2), int(2), Rational::one() - rho),
            false,
        )),
        Some(_) => Some(Interval::new(
            Endpoint::Finite(lower.clone()),
            true,
            Endpoint::Finite(lower + Rational::new(BigInt::one(), BigInt::from(n + 1))),
            false,
        )),
        None => {
            if rho.is_positive() && rho <= match &ranges[0].lower {
                Endpoint::Finite(q) => q,
                _ => unreachable!(),
            } {
                let wider = Interval::new(
                    Endpoint::Finite(lower),
                    true,
                    Endpoint::surd(int(2) * rho - int(2), int(2), Rational::one() - rho),
                    false,
                );
                notes.push(format!(
                    "rho is below the stated range; the wider case table would allow tau in [{:.6}, {:.6}) ({}), not used",
                    wider.lower.approx(),
                    wider.upper.approx(),
                    if wider.nonempty() { "nonempty" } else { "empty" }
                ));
            } else {
                notes.push("rho lies outside both ranges".into());
            }
            None
        }
    };
    let nonempty = tau_interval.as_ref().is_some_and(|t| t.nonempty());
    Ok(IntervalReport {
        n,
        family: Regime::El1,
        rho: rho.clone(),
        regime: selected.map(|i| i as u8 + 1),
        rho_interval: selected.map(|i| ranges[i].clone()),
        tau_interval,
        nonempty,
        notes,
    })
}

/// Bounds of the power family at a (possibly fractional) exponent, as enclosures.
struct PowerBounds {
    n: usize,
    two: Enclosure,
    n_pow: Enclosure,
    n1_pow: Enclosure,
}

impl PowerBounds {
    fn new(n: usize, x: &Rational, bits: u32) -> Self {
        PowerBounds {
            n,
            two: pow_enclosure(2, x, bits),
            n_pow: pow_enclosure(n as u64, x, bits),
            n1_pow: pow_enclosure(n as u64 + 1, x, bits),
        }
    }

    fn exact(e: &Enclosure) -> Rational {
        assert!(e.is_exact());
        e.lo.clone()
    }

    fn m1(&self) -> Rational {
        nn(self.n) - Rational::one()
    }

    /// `1 + (n^(x-1) - 2^x) / (2^x n^(x-1) (n-1))`.
    fn rho_min(&self) -> Enclosure {
        let m1 = self.m1().recip();
        self.two
            .recip_positive()
            .sub(&self.n_pow.recip_positive().scale(&nn(self.n)))
            .scale(&m1)
            .add_rational(&Rational::one())
    }

    /// `1 + ((n+1)^x - n 2^x) / (2^x (n+1)^x (n-1))`.
    fn rho_hat(&self) -> Enclosure {
        let m1 = self.m1().recip();
        self.two
            .recip_positive()
            .sub(&self.n1_pow.recip_positive().scale(&nn(self.n)))
            .scale(&m1)
            .add_rational(&Rational::one())
    }

    /// `(1 - rho)(n - 1) + 1 - 1/n^(x-1)`.
    fn tau_lower(&self, rho: &Rational) -> Enclosure {
        self.n_pow
            .recip_positive()
            .scale(&-nn(self.n))
            .add_rational(&((Rational::one() - rho) * self.m1() + Rational::one()))
    }

    /// `1 - 1/2^x`.
    fn tau_upper_flat(&self) -> Enclosure {
        self.two.recip_positive().neg().add_rational(&Rational::one())
    }

    /// `(1 - rho)(n - 1) + 1 - n/(n+1)^x`.
    fn tau_upper_slope(&self, rho: &Rational) -> Enclosure {
        self.n1_pow
            .recip_positive()
            .scale(&-nn(self.n))
            .add_rational(&((Rational::one() - rho) * self.m1() + Rational::one()))
    }
}

/// `rho` below which the power-family region is empty.
pub fn elx_rho_min(n: usize, x: u32) -> Result<Rational> {
    require_order(n)?;
    Regime::power(x)?;
    Ok(PowerBounds::exact(&PowerBounds::new(n, &int(x as i64), 0).rho_min()))
}

/// `rho` where the flat upper bound hands over to the sloped one.
pub fn elx_rho_hat(n: usize, x: u32) -> Result<Rational> {
    require_order(n)?;
    Regime::power(x)?;
    Ok(PowerBounds::exact(&PowerBounds::new(n, &int(x as i64), 0).rho_hat()))
}

/// Largest `rho` at which the lower `tau` bound is still non-negative.
fn elx_rho_nonneg_cap(n: usize, x: u32) -> Rational {
    let b = PowerBounds::new(n, &int(x as i64), 0);
    let n_term = nn(n) / PowerBounds::exact(&b.n_pow);
    Rational::one() + (Rational::one() - n_term) / b.m1()
}

pub fn elx_intervals(n: usize, x: u32, rho: &Rational) -> Result<IntervalReport> {
    require_order(n)?;
    let regime = Regime::power(x)?;
    let b = PowerBounds::new(n, &int(x as i64), 0);
    let rho_min = PowerBounds::exact(&b.rho_min());
    let rho_hat = PowerBounds::exact(&b.rho_hat());
    let lower = PowerBounds::exact(&b.tau_lower(rho));
    let (which, rho_interval, upper) = if rho <= &rho_hat {
        (
            1,
            Interval::finite(rho_min.clone(), false, rho_hat, true),
            PowerBounds::exact(&b.tau_upper_flat()),
        )
    } else {
        (
            2,
            Interval::new(Endpoint::Finite(rho_hat), false, Endpoint::Infinite, false),
            PowerBounds::exact(&b.tau_upper_slope(rho)),
        )
    };
    let mut notes = Vec::new();
    if rho <= &rho_min {
        notes.push(format!(
            "rho must exceed {} for the region to be nonempty",
            format_rational(&rho_min)
        ));
    }
    let tau_interval = Interval::finite(lower, true, upper, false);
    let nonempty = rho > &rho_min && tau_interval.nonempty();
    Ok(IntervalReport {
        n,
        family: regime,
        rho: rho.clone(),
        regime: Some(which),
        rho_interval: Some(rho_interval),
        tau_interval: Some(tau_interval),
        nonempty,
        notes,
    })
}

pub fn intervals(n: usize, regime: Regime, rho: &Rational) -> Result<IntervalReport> {
    match regime {
        Regime::El1 => el1_intervals(n, rho),
        Regime::Power(x) => elx_intervals(n, x, rho),
    }
}

/// Static description of both `rho` ranges of a family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegimeTable {
    pub n: usize,
    pub family: Regime,
    pub rows: Vec<RegimeRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegimeRow {
    pub regime: u8,
    pub rho_interval: Interval,
    pub tau_lower: String,
    pub tau_upper: String,
}

pub fn regime_table(n: usize, family: Regime) -> Result<RegimeTable> {
    let rows = match family {
        Regime::El1 => {
            let [r1, r2] = el1_rho_ranges(n)?;
            vec![
                RegimeRow {
                    regime: 1,
                    rho_interval: r1,
                    tau_lower: "(1 - rho)(n - 1)".into(),
                    tau_upper: "rho - (1 - sqrt(1 - rho))^2".into(),
                },
                RegimeRow {
                    regime: 2,
                    rho_interval: r2,
                    tau_lower: "(1 - rho)(n - 1)".into(),
                    tau_upper: "(1 - rho)(n - 1) + 1/(n + 1)".into(),
                },
            ]
        }
        Regime::Power(x) => {
            let rho_min = elx_rho_min(n, x)?;
            let rho_hat = elx_rho_hat(n, x)?;
            vec![
                RegimeRow {
                    regime: 1,
                    rho_interval: Interval::finite(rho_min, false, rho_hat.clone(), true),
                    tau_lower: "(1 - rho)(n - 1) + 1 - 1/n^(x-1)".into(),
                    tau_upper: "1 - 1/2^x".into(),
                },
                RegimeRow {
                    regime: 2,
                    rho_interval: Interval::new(Endpoint::Finite(rho_hat), false, Endpoint::Infinite, false),
                    tau_lower: "(1 - rho)(n - 1) + 1 - 1/n^(x-1)".into(),
                    tau_upper: "(1 - rho)(n - 1) + 1 - n/(n+1)^x".into(),
                },
            ]
        }
    };
    Ok(RegimeTable { n, family, rows })
}

/// Exact membership of `(tau, rho)` in the stated validity region.
/// Orders below 2 have no region and always return false.
pub fn in_validity_region(n: usize, regime: Regime, tau: &Rational, rho: &Rational) -> bool {
    if !tau.is_positive() || tau >= rho || n < 2 {
        return false;
    }
    let report = match intervals(n, regime, rho) {
        Ok(r) => r,
        Err(_) => return false,
    };
    report.nonempty
        && report.rho_interval.as_ref().is_some_and(|r| r.contains(rho))
        && report.tau_interval.as_ref().is_some_and(|t| t.contains(tau))
}

fn decide_sign(mut at: impl FnMut(u32) -> Enclosure, what: &str) -> Result<Ordering> {
    let mut bits = 64;
    loop {
        if let Some(s) = at(bits).sign() {
            return Ok(s);
        }
        if bits >= MAX_REFINE_BITS {
            return Err(Error::InternalConsistency(format!(
                "sign of {what} undecided at {MAX_REFINE_BITS} bits"
            )));
        }
        bits *= 2;
    }
}

/// Membership in the power-family region for a rational exponent `x >= 3`,
/// decided by refining enclosures of the irrational powers.
pub fn in_power_region(n: usize, x: &Rational, tau: &Rational, rho: &Rational) -> Result<bool> {
    if x < &int(3) {
        return Err(Error::OutOfRange {
            what: "exponent x",
            value: format_rational(x),
            range: ">= 3".into(),
        });
    }
    if !tau.is_positive() || tau >= rho || n < 2 {
        return Ok(false);
    }
    let at = |bits: u32| PowerBounds::new(n, x, bits);
    // rho > rho_min
    if decide_sign(|b| at(b).rho_min().neg().add_rational(rho), "rho - rho_min")? != Ordering::Greater {
        return Ok(false);
    }
    // tau >= lower
    if decide_sign(|b| at(b).tau_lower(rho).neg().add_rational(tau), "tau - tau_lower")? == Ordering::Less {
        return Ok(false);
    }
    // tau < min(flat, sloped)
    if decide_sign(|b| at(b).tau_upper_flat().add_rational(&-tau), "flat bound - tau")? != Ordering::Greater {
        return Ok(false);
    }
    Ok(decide_sign(|b| at(b).tau_upper_slope(rho).add_rational(&-tau), "sloped bound - tau")? == Ordering::Greater)
}

/// A valid `(tau, rho)` for the given bullet (1 or 2) of the interval statement.
/// In the power family's open-ended second range, `rho` is drawn below the
/// point where the lower `tau` bound reaches zero.
pub fn sample_params<R: Rng + ?Sized>(
    n: usize,
    regime: Regime,
    bullet: u8,
    rng: &mut R,
) -> Result<(Rational, Rational)> {
    require_order(n)?;
    let empty = || Error::EmptyInterval {
        n,
        regime: format!("{regime} range {bullet}"),
    };
    let rho_range = match (regime, bullet) {
        (Regime::El1, 1 | 2) => el1_rho_ranges(n)?[bullet as usize - 1].clone(),
        (Regime::Power(x), 1) => regime_table(n, Regime::power(x)?)?.rows[0].rho_interval.clone(),
        (Regime::Power(x), 2) => {
            let hat = elx_rho_hat(n, x)?;
            Interval::finite(hat, false, elx_rho_nonneg_cap(n, x), true)
        }
        _ => {
            return Err(Error::OutOfRange {
                what: "regime bullet",
                value: bullet.to_string(),
                range: "1 or 2".into(),
            })
        }
    };
    for _ in 0..SAMPLE_ATTEMPTS {
        let Some(rho) = rho_range.sample(rng) else {
            return Err(empty());
        };
        let report = intervals(n, regime, &rho)?;
        if !report.nonempty {
            continue;
        }
        let Some(tau) = report.tau_interval.as_ref().and_then(|t| t.sample(rng)) else {
            continue;
        };
        if in_validity_region(n, regime, &tau, &rho) {
            return Ok((tau, rho));
        }
    }
    Err(empty())
}

/// The perturbation rectangle for exponents in `[x0, x1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustRectangle {
    pub n: usize,
    pub x0: u32,
    pub x1: Rational,
    pub a: Rational,
    pub c: Enclosure,
    pub d: Enclosure,
    pub b: Enclosure,
    pub rho_c: Enclosure,
    pub rho_hat: Rational,
    /// Inner rational version of `[1 - 2^-x0 - D, 1 - 2^-x0 - D + B)`.
    pub tau_interval: Interval,
    pub rho_interval: Interval,
}

impl RobustRectangle {
    /// Inner rational version of `[1 - 1/k^x0, 1 - 1/k^x1]`.
    pub fn lambda_interval(&self, k: usize) -> Interval {
        let lo = Regime::Power(self.x0).lambda(k);
        let kx1 = pow_enclosure(k as u64, &self.x1, ENCLOSURE_BITS);
        let hi = Rational::one() - kx1.lo.recip();
        Interval::finite(lo, true, hi, true)
    }

    /// Whether `lambda = 1 - 1/k^x` for some `x` in `[x0, x1]`, exactly.
    pub fn lambda_in_range(&self, k: usize, lambda: &Rational) -> bool {
        let lo = Regime::Power(self.x0).lambda(k);
        if lambda < &lo || lambda >= &Rational::one() {
            return false;
        }
        // 1 - lambda >= k^-x1  <=>  (1 - lambda)^q k^p >= 1
        let p = self.x1.numer().to_usize().expect("small exponent");
        let q = self.x1.denom().to_usize().expect("small exponent");
        let slack = num_traits::pow(Rational::one() - lambda, q) * Rational::from_integer(num_traits::pow(BigInt::from(k), p));
        slack >= Rational::one()
    }

    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Option<(Rational, Rational, Rational)> {
        Some((
            self.tau_interval.sample(rng)?,
            self.rho_interval.sample(rng)?,
            self.lambda_interval(k).sample(rng)?,
        ))
    }
}

impl Serialize for RobustRectangle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let lambdas: Vec<_> = (2..=self.n + 1)
            .map(|k| serde_json::json!({ "k": k, "interval": self.lambda_interval(k) }))
            .collect();
        let mut st = s.serialize_struct("RobustRectangle", 13)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("x0", &self.x0)?;
        st.serialize_field("x1", &format_rational(&self.x1))?;
        st.serialize_field("A", &format_rational(&self.a))?;
        st.serialize_field("C", &TaggedEnclosure::from(&self.c))?;
        st.serialize_field("D", &TaggedEnclosure::from(&self.d))?;
        st.serialize_field("B", &TaggedEnclosure::from(&self.b))?;
        st.serialize_field("rho_C", &TaggedEnclosure::from(&self.rho_c))?;
        st.serialize_field("rho_hat", &format_rational(&self.rho_hat))?;
        st.serialize_field("tau_interval", &self.tau_interval)?;
        st.serialize_field("rho_interval", &self.rho_interval)?;
        st.serialize_field("lambda_intervals", &lambdas)?;
        st.end()
    }
}

fn x1_parts(x1: &Rational) -> Result<(usize, usize)> {
    let p = x1.numer().to_usize();
    let q = x1.denom().to_usize();
    match (p, q) {
        (Some(p), Some(q)) if p <= 4096 && q <= 4096 => Ok((p, q)),
        _ => Err(Error::Inadmissible(format!(
            "x1 = {} must be a positive rational with numerator and denominator at most 4096",
            format_rational(x1)
        ))),
    }
}

/// Checks `x0 < x1 < x0 log_n(n+1)` exactly.
pub fn x1_admissible(n: usize, x0: u32, x1: &Rational) -> Result<()> {
    require_order(n)?;
    Regime::power(x0)?;
    if x1 <= &int(x0 as i64) {
        return Err(Error::Inadmissible(format!(
            "x0 < x1 violated: x0 = {x0}, x1 = {}",
            format_rational(x1)
        )));
    }
    let (p, q) = x1_parts(x1)?;
    let lhs = num_traits::pow(BigInt::from(n), p);
    let rhs = num_traits::pow(BigInt::from(n + 1), q * x0 as usize);
    if lhs >= rhs {
        return Err(Error::Inadmissible(format!(
            "x1 < x0 log_n(n+1) violated: n^(q x1) = {n}^{p} >= (n+1)^(q x0) = {}^{}",
            n + 1,
            q * x0 as usize
        )));
    }
    Ok(())
}

/// An admissible `x1` near the middle of `(x0, x0 log_n(n+1))`, with a
/// power-of-two denominator.
pub fn default_x1(n: usize, x0: u32) -> Result<Rational> {
    require_order(n)?;
    Regime::power(x0)?;
    let top = x0 as f64 * ((n + 1) as f64).ln() / (n as f64).ln();
    let mid = (x0 as f64 + top) / 2.0;
    for bits in 8..=30u32 {
        let scale = 1u64 << bits;
        let guess = Rational::new(BigInt::from((mid * scale as f64).round() as u64), BigInt::from(scale));
        if x1_admissible(n, x0, &guess).is_ok() {
            return Ok(guess);
        }
    }
    Err(Error::Inadmissible(format!(
        "no dyadic x1 found in (x0, x0 log_n(n+1)) for n = {n}, x0 = {x0}"
    )))
}

/// `C = n/(n-1) (1/n^x1 - 1/(n+1)^x0)`.
fn c_enclosure(n: usize, x0: u32, x1: &Rational, bits: u32) -> Enclosure {
    let n_x1 = pow_enclosure(n as u64, x1, bits);
    let n1_x0 = Rational::from_integer(pow_int(n as i64 + 1, x0));
    n_x1.recip_positive()
        .add_rational(&-n1_x0.recip())
        .scale(&(nn(n) / (nn(n) - Rational::one())))
}

/// `C / 2` rounded down to a dyadic rational (so `0 < A < C`).
pub fn default_a(n: usize, x0: u32, x1: &Rational) -> Result<Rational> {
    x1_admissible(n, x0, x1)?;
    let c = c_enclosure(n, x0, x1, ENCLOSURE_BITS);
    Ok(dyadic_floor(&(c.lo / int(2)), 96))
}

pub fn robust_rectangle(n: usize, x0: u32, x1: &Rational, a: &Rational) -> Result<RobustRectangle> {
    x1_admissible(n, x0, x1)?;
    if !a.is_positive() {
        return Err(Error::Inadmissible(format!("0 < A violated: A = {}", format_rational(a))));
    }
    let below_c = decide_sign(
        |bits| c_enclosure(n, x0, x1, bits).add_rational(&-a),
        "C - A",
    )?;
    if below_c != Ordering::Greater {
        return Err(Error::Inadmissible(format!(
            "A < C violated: A = {}, C ~ {:.12}",
            format_rational(a),
            approx(&c_enclosure(n, x0, x1, 64).midpoint())
        )));
    }
    let m1 = nn(n) - Rational::one();
    let c = c_enclosure(n, x0, x1, ENCLOSURE_BITS);
    let d = c.scale(&m1);
    let b = c.add_rational(&-a).scale(&m1);
    let flat = Rational::one() - Rational::new(BigInt::one(), pow_int(2, x0));
    let n_x1 = pow_enclosure(n as u64, x1, ENCLOSURE_BITS);
    let rho_c = n_x1
        .recip_positive()
        .scale(&-(nn(n) / &m1))
        .add_rational(&(Rational::one() - Rational::new(BigInt::one(), pow_int(2, x0) * BigInt::from(n - 1))));
    let rho_hat = elx_rho_hat(n, x0)?;
    // lower end closed: move it up to a rational >= the true value
    let tau_lo = &flat - &d.lo;
    // D - B = (n - 1) A exactly
    let tau_hi = &flat - &m1 * a;
    Ok(RobustRectangle {
        n,
        x0,
        x1: x1.clone(),
        a: a.clone(),
        c,
        d,
        b,
        rho_c,
        tau_interval: Interval::finite(tau_lo, true, tau_hi, false),
        rho_interval: Interval::finite(rho_hat.clone(), false, &rho_hat + a, false),
        rho_hat,
    })
}

/// Rectangle with the default `x1` and `A = C/2`.
pub fn default_rectangle(n: usize, x0: u32) -> Result<RobustRectangle> {
    let x1 = default_x1(n, x0)?;
    let a = default_a(n, x0, &x1)?;
    robust_rectangle(n, x0, &x1, &a)
}

/// Order used for interval formulas: single-vertex graphs reuse the `n = 2`
/// intervals (the regions only shrink as `n` grows, and a smaller graph
/// has fewer cliques to separate).
pub fn interval_order(n: usize) -> usize {
    n.max(2)
}
