//! Exact solution of rational linear systems.
//!
//! Rows are cleared to integers and brought to echelon form by Bareiss
//! fraction-free elimination, whose divisions are exact and whose entries stay
//! bounded by minors of the input; the echelon system is then solved by
//! rational back-substitution.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// The full solution set `{ particular + sum c_i * basis_i }` of a linear system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<Rational>,
    pub basis: Vec<Vec<Rational>>,
}

impl AffineSolution {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// `particular + sum coeffs[i] * basis[i]`.
    pub fn point(&self, coeffs: &[Rational]) -> Vec<Rational> {
        let mut out = self.particular.clone();
        for (c, dir) in coeffs.iter().zip(&self.basis) {
            if c.is_zero() {
                continue;
            }
            for (o, d) in out.iter_mut().zip(dir) {
                *o += c * d;
            }
        }
        out
    }
}

fn lcm_of_denominators<'a>(values: impl Iterator<Item = &'a Rational>) -> BigInt {
    values.fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Solution set of an integer system, every vector scaled by the common
/// positive denominator `den`: `{ (particular + sum c_i basis_i) / den }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerSolution {
    pub den: BigInt,
    pub particular: Vec<BigInt>,
    pub basis: Vec<Vec<BigInt>>,
}

impl IntegerSolution {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn rational(&self) -> AffineSolution {
        let q = |v: &[BigInt]| -> Vec<Rational> { v.iter().map(|x| Rational::new(x.clone(), self.den.clone())).collect() };
        AffineSolution {
            particular: q(&self.particular),
            basis: self.basis.iter().map(|d| q(d)).collect(),
        }
    }
}

/// Fraction-free back-substitution on the echelon rows: returns `den * z`
/// where `den` is the last Bareiss pivot, `z_free = free` and the right-hand
/// side is used only when `use_rhs` is set. Every division is exact because
/// each numerator is a Cramer determinant.
fn back_substitute(
    rows: &[Vec<BigInt>],
    pivots: &[usize],
    cols: usize,
    den: &BigInt,
    free: Option<usize>,
    use_rhs: bool,
) -> Vec<BigInt> {
    let mut z = vec![BigInt::zero(); cols];
    if let Some(f) = free {
        z[f] = den.clone();
    }
    for (r, &c) in pivots.iter().enumerate().rev() {
        let row = &rows[r];
        let mut acc = if use_rhs { &row[cols] * den } else { BigInt::zero() };
        for j in c + 1..cols {
            if !row[j].is_zero() && !z[j].is_zero() {
                acc -= &row[j] * &z[j];
            }
        }
        debug_assert!((&acc % &row[c]).is_zero(), "inexact back-substitution");
        z[c] = acc / &row[c];
    }
    z
}

/// Common positive multiplier clearing every denominator of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    lcm_of_denominators(values.into_iter())
}

/// `matrix` times `scale`, as integers; `scale` must clear every denominator.
pub fn scaled_to_integers(matrix: &[Vec<Rational>], scale: &BigInt) -> Vec<Vec<BigInt>> {
    matrix
        .iter()
        .map(|row| row.iter().map(|q| q.numer() * (scale / q.denom())).collect())
        .collect()
}

/// Solves `matrix * z = rhs`. Returns `None` when the system is inconsistent.
pub fn solve(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<AffineSolution> {
    assert_eq!(matrix.len(), rhs.len(), "row count mismatch");
    let cols = matrix.first().map_or(0, |r| r.len());
    let rows: Vec<Vec<BigInt>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            assert_eq!(row.len(), cols, "ragged matrix");
            let scale = lcm_of_denominators(row.iter().chain(std::iter::once(b)));
            row.iter()
                .chain(std::iter::once(b))
                .map(|q| q.numer() * (&scale / q.denom()))
                .collect()
        })
        .collect();
    solve_integer(rows, cols).map(|s| s.rational())
}

/// Solves an integer system given as augmented rows `[a_1 .. a_cols | b]`.
pub fn solve_integer(mut rows: Vec<Vec<BigInt>>, cols: usize) -> Option<IntegerSolution> {
    debug_assert!(rows.iter().all(|r| r.len() == cols + 1), "augmented rows expected");
    let mut pivots: Vec<usize> = Vec::new();
    let mut prev = BigInt::one();
    let mut next = 0;
    for col in 0..cols {
        if next == rows.len() {
            break;
        }
        let Some(pr) = (next..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next, pr);
        let (head, tail) = rows.split_at_mut(next + 1);
        let pivot_row = &head[next];
        let p = &pivot_row[col];
        for row in tail.iter_mut() {
            let e = std::mem::take(&mut row[col]);
            for j in col + 1..=cols {
                let v = &row[j] * p - &e * &pivot_row[j];
                debug_assert!((&v % &prev).is_zero(), "inexact Bareiss division");
                row[j] = v / &prev;
            }
        }
        prev = pivot_row[col].clone();
        pivots.push(col);
        next += 1;
    }

    if rows[next..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }

    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut den = prev;
    let mut particular = back_substitute(&rows, &pivots, cols, &den, None, true);
    let mut basis: Vec<Vec<BigInt>> = (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| back_substitute(&rows, &pivots, cols, &den, Some(f), false))
        .collect();
    if den.is_negative() {
        den = -den;
        for v in particular.iter_mut().chain(basis.iter_mut().flatten()) {
            *v = -&*v;
        }
    }
    Some(IntegerSolution { den, particular, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn mul(m: &[Vec<Rational>], z: &[Rational]) -> Vec<Rational> {
        m.iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn unique_solution() {
        let m = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let b = vec![int(3), int(5)];
        let s = solve(&m, &b).unwrap();
        assert_eq!(s.dimension(), 0);
        assert_eq!(s.particular, vec![rat(4, 5), rat(7, 5)]);
    }

    #[test]
    fn inconsistent_system() {
        let m = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        assert!(solve(&m, &[int(1), int(3)]).is_none());
    }

    #[test]
    fn singular_system_yields_basis() {
        let m = vec![vec![int(1), int(1), int(0)], vec![int(0), int(0), int(1)]];
        let s = solve(&m, &[int(1), rat(1, 2)]).unwrap();
        assert_eq!(s.dimension(), 1);
        for c in [int(0), int(3), rat(-7, 3)] {
            assert_eq!(mul(&m, &s.point(&[c])), vec![int(1), rat(1, 2)]);
        }
        assert_eq!(mul(&m, &s.basis[0]), vec![int(0), int(0)]);
    }

    proptest! {
        #[test]
        fn solutions_satisfy_the_system(
            entries in prop::collection::vec(-4i64..5, 16),
            rhs in prop::collection::vec(-4i64..5, 4),
            den in 1i64..4,
        ) {
            let m: Vec<Vec<Rational>> = entries.chunks(4).map(|c| c.iter().map(|&v| rat(v, den)).collect()).collect();
            let b: Vec<Rational> = rhs.iter().map(|&v| int(v)).collect();
            if let Some(s) = solve(&m, &b) {
                prop_assert_eq!(mul(&m, &s.particular), b.clone());
                for dir in &s.basis {
                    prop_assert!(mul(&m, dir).iter().all(|v| v.is_zero()));
                }
            }
        }
    }
}
