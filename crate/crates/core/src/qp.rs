//! Exact global maximisation of `x^T M x + c^T x` over a face of a scaled
//! probability simplex.
//!
//! Every maximiser `x*` with support `T` satisfies the stationarity system
//! `((M + M^T) x + c)_i = mu` for `i in T`, `sum_T x = mass`, `x = 0` off `T`.
//! The objective is constant on each affine solution set of that system (a
//! direction `v` has `v^T (M + M^T) v = delta * sum v = 0`), and a positive
//! dimensional set meeting the open face can be followed to its boundary, so
//! the maximum is always attained at an isolated stationary point with
//! strictly positive support. The maximiser is unique exactly when one such
//! point attains the maximum: any other maximiser would sit inside a positive
//! dimensional set whose two boundary exits are distinct maximisers of
//! smaller support.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{common_denominator, scaled_to_integers, solve_integer, AffineSolution};
use crate::rational::{serde_rational, Rational};

/// Default cap on the face size (2^cap supports are enumerated).
pub const DEFAULT_FACE_CAP: usize = 22;

const PARALLEL_FROM: usize = 9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplexQpProblem {
    matrix: Vec<Vec<Rational>>,
    linear: Vec<Rational>,
    face: Vec<usize>,
    mass: Rational,
}

impl SimplexQpProblem {
    pub fn new(
        matrix: Vec<Vec<Rational>>,
        linear: Vec<Rational>,
        face: Vec<usize>,
        mass: Rational,
    ) -> Result<Self> {
        let m = matrix.len();
        if let Some(row) = matrix.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: row.len(),
            });
        }
        if linear.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: linear.len(),
            });
        }
        if face.is_empty() {
            return Err(Error::EmptyFace);
        }
        let mut face = face;
        face.sort_unstable();
        face.dedup();
        if let Some(&bad) = face.iter().find(|&&i| i >= m) {
            return Err(Error::OutOfRange {
                what: "face index",
                value: bad.to_string(),
                range: format!("0..{m}"),
            });
        }
        if !mass.is_positive() {
            return Err(Error::OutOfRange {
                what: "simplex mass",
                value: crate::rational::format_rational(&mass),
                range: "> 0".into(),
            });
        }
        Ok(SimplexQpProblem {
            matrix,
            linear,
            face,
            mass,
        })
    }

    /// `max x^T M x` over the whole unit simplex.
    pub fn quadratic(matrix: Vec<Vec<Rational>>) -> Result<Self> {
        let m = matrix.len();
        Self::new(matrix, vec![Rational::zero(); m], (0..m).collect(), Rational::one())
    }

    pub fn with_mass(mut self, mass: Rational) -> Result<Self> {
        if !mass.is_positive() {
            return Err(Error::OutOfRange {
                what: "simplex mass",
                value: crate::rational::format_rational(&mass),
                range: "> 0".into(),
            });
        }
        self.mass = mass;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn face(&self) -> &[usize] {
        &self.face
    }

    pub fn mass(&self) -> &Rational {
        &self.mass
    }

    /// Objective value at a full-length point.
    pub fn objective(&self, x: &[Rational]) -> Rational {
        let nz: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_zero()).collect();
        let mut total = Rational::zero();
        for &i in &nz {
            let mut row = Rational::zero();
            for &j in &nz {
                row += &self.matrix[i][j] * &x[j];
            }
            total += (row + &self.linear[i]) * &x[i];
        }
        total
    }

    /// True when `x` is feasible: non-negative, supported on the face, total mass.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| !v.is_negative())
            && x.iter()
                .enumerate()
                .all(|(i, v)| v.is_zero() || self.face.binary_search(&i).is_ok())
            && x.iter().sum::<Rational>() == self.mass
    }
}

/// An isolated stationary point with strictly positive support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StationaryPoint {
    pub support: Vec<usize>,
    #[serde(with = "serde_rational::vec")]
    pub point: Vec<Rational>,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

/// A positive-dimensional affine stationary set at the optimal level.
/// The set may extend outside the simplex; the objective is constant on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StationarySet {
    pub support: Vec<usize>,
    #[serde(with = "serde_rational::vec")]
    pub particular: Vec<Rational>,
    #[serde(serialize_with = "serialize_basis")]
    pub basis: Vec<Vec<Rational>>,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

fn serialize_basis<S: serde::Serializer>(
    basis: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(
        basis
            .iter()
            .map(|v| v.iter().map(crate::rational::format_rational).collect::<Vec<_>>()),
    )
}

impl StationarySet {
    pub fn point(&self, coeffs: &[Rational]) -> Vec<Rational> {
        AffineSolution {
            particular: self.particular.clone(),
            basis: self.basis.clone(),
        }
        .point(coeffs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimplexQpSolution {
    #[serde(with = "serde_rational")]
    pub max_value: Rational,
    /// Isolated maximisers, ordered by support and then by coordinates.
    pub maximizers: Vec<StationaryPoint>,
    pub stationary_sets: Vec<StationarySet>,
    pub unique_maximizer: bool,
}

enum SupportOutcome {
    Point(StationaryPoint),
    Set(StationarySet),
}

/// The stationarity system in integers: `L (M + M^T)`, `-L c` and the mass
/// `p / q`, for a common multiplier `L` of all denominators.
struct IntegerKkt {
    hessian: Vec<Vec<BigInt>>,
    rhs: Vec<BigInt>,
    mass_num: BigInt,
    mass_den: BigInt,
}

impl IntegerKkt {
    fn new(problem: &SimplexQpProblem) -> Self {
        let m = problem.dim();
        let sym: Vec<Vec<Rational>> = (0..m)
            .map(|i| (0..m).map(|j| &problem.matrix[i][j] + &problem.matrix[j][i]).collect())
            .collect();
        let neg_linear: Vec<Rational> = problem.linear.iter().map(|c| -c).collect();
        let scale = common_denominator(sym.iter().flatten().chain(&neg_linear));
        IntegerKkt {
            hessian: scaled_to_integers(&sym, &scale),
            rhs: scaled_to_integers(std::slice::from_ref(&neg_linear), &scale).remove(0),
            mass_num: problem.mass.numer().clone(),
            mass_den: problem.mass.denom().clone(),
        }
    }
}

fn solve_support(problem: &SimplexQpProblem, kkt: &IntegerKkt, support: &[usize]) -> Option<SupportOutcome> {
    let t = support.len();
    // unknowns: x_T (t of them) then L * mu
    let mut rows = Vec::with_capacity(t + 1);
    for &i in support {
        let mut row: Vec<BigInt> = support.iter().map(|&j| kkt.hessian[i][j].clone()).collect();
        row.push(-BigInt::one());
        row.push(kkt.rhs[i].clone());
        rows.push(row);
    }
    let mut sum_row = vec![kkt.mass_den.clone(); t];
    sum_row.push(BigInt::zero());
    sum_row.push(kkt.mass_num.clone());
    rows.push(sum_row);

    let sol = solve_integer(rows, t + 1)?;
    if sol.dimension() == 0 && !sol.particular[..t].iter().all(|v| v.is_positive()) {
        return None;
    }
    let sol = sol.rational();
    let embed = |z: &[Rational]| {
        let mut full = vec![Rational::zero(); problem.dim()];
        for (k, &i) in support.iter().enumerate() {
            full[i] = z[k].clone();
        }
        full
    };
    let particular = embed(&sol.particular);
    let value = problem.objective(&particular);
    if sol.dimension() == 0 {
        if support.iter().all(|&i| particular[i].is_positive()) {
            return Some(SupportOutcome::Point(StationaryPoint {
                support: support.to_vec(),
                point: particular,
                value,
            }));
        }
        return None;
    }
    Some(SupportOutcome::Set(StationarySet {
        support: support.to_vec(),
        particular,
        basis: sol.basis.iter().map(|d| embed(d)).collect(),
        value,
    }))
}

/// Exact global maximum with attainment structure.
pub fn maximize(problem: &SimplexQpProblem) -> Result<SimplexQpSolution> {
    maximize_with_cap(problem, DEFAULT_FACE_CAP)
}

pub fn maximize_with_cap(problem: &SimplexQpProblem, cap: usize) -> Result<SimplexQpSolution> {
    let f = problem.face.len();
    if f > cap {
        return Err(Error::CapExceeded {
            what: "simplex-qp face",
            size: f,
            cap,
        });
    }
    let subsets = 1u64..(1u64 << f);
    let support_of = |mask: u64| -> Vec<usize> {
        (0..f)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| problem.face[b])
            .collect()
    };
    let kkt = IntegerKkt::new(problem);
    let outcomes: Vec<SupportOutcome> = if f >= PARALLEL_FROM {
        subsets
            .into_par_iter()
            .filter_map(|mask| solve_support(problem, &kkt, &support_of(mask)))
            .collect()
    } else {
        subsets
            .filter_map(|mask| solve_support(problem, &kkt, &support_of(mask)))
            .collect()
    };

    let mut points = Vec::new();
    let mut sets = Vec::new();
    for o in outcomes {
        match o {
            SupportOutcome::Point(p) => points.push(p),
            SupportOutcome::Set(s) => sets.push(s),
        }
    }
    let max_value = points
        .iter()
        .map(|p| &p.value)
        .max()
        .cloned()
        .ok_or_else(|| {
            Error::InternalConsistency("no isolated stationary point found on a nonempty face".into())
        })?;
    let mut maximizers: Vec<_> = points.into_iter().filter(|p| p.value == max_value).collect();
    maximizers.sort_by(|a, b| a.support.cmp(&b.support).then_with(|| a.point.cmp(&b.point)));
    let mut stationary_sets: Vec<_> = sets.into_iter().filter(|s| s.value == max_value).collect();
    stationary_sets.sort_by(|a, b| a.support.cmp(&b.support));
    Ok(SimplexQpSolution {
        unique_maximizer: maximizers.len() == 1,
        max_value,
        maximizers,
        stationary_sets,
    })
}

/// Maximum over the grid of mesh `step` on the face; never above [`maximize`].
pub fn grid_check(problem: &SimplexQpProblem, step: &Rational) -> Result<Rational> {
    if !step.is_positive() {
        return Err(Error::OutOfRange {
            what: "grid step",
            value: crate::rational::format_rational(step),
            range: "> 0".into(),
        });
    }
    let units = &problem.mass / step;
    if !units.is_integer() {
        return Err(Error::OutOfRange {
            what: "grid step",
            value: crate::rational::format_rational(step),
            range: "a divisor of the simplex mass".into(),
        });
    }
    let units: usize = num_traits::ToPrimitive::to_usize(&units.to_integer())
        .ok_or_else(|| Error::CapExceeded {
            what: "grid resolution",
            size: usize::MAX,
            cap: u32::MAX as usize,
        })?;
    let mut best: Option<Rational> = None;
    for_each_composition(units, problem.face.len(), &mut |parts| {
        let mut x = vec![Rational::zero(); problem.dim()];
        for (k, &i) in problem.face.iter().enumerate() {
            x[i] = step * Rational::from_integer(BigInt::from(parts[k]));
        }
        let v = problem.objective(&x);
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    });
    Ok(best.expect("a nonempty face has at least one grid point"))
}

/// Calls `visit` with every way to write `total` as an ordered sum of `parts`
/// non-negative integers.
pub fn for_each_composition(total: usize, parts: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(rest: usize, slots: &mut Vec<usize>, parts: usize, visit: &mut dyn FnMut(&[usize])) {
        if slots.len() + 1 == parts {
            slots.push(rest);
            visit(slots);
            slots.pop();
            return;
        }
        for v in 0..=rest {
            slots.push(v);
            go(rest - v, slots, parts, visit);
            slots.pop();
        }
    }
    if parts == 0 {
        return;
    }
    go(total, &mut Vec::with_capacity(parts), parts, visit);
}
