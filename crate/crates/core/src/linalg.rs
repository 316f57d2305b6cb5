//! Exact linear algebra over any field.
//!
//! Dense reduced row echelon form is used for small graded pieces and matrix
//! inverses. [`SparseSystem`] accumulates equations one at a time and is used
//! for the large overdetermined systems produced by associativity relations.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

/// Scalars for exact elimination.
pub trait Field:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Field for T where
    T: Clone
        + PartialEq
        + std::fmt::Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>
{
}

pub type Matrix<T> = Vec<Vec<T>>;

/// Brings `rows` to reduced row echelon form, visiting columns in `column_order`.
///
/// Pivots are chosen deterministically: the first row (in current order) with a
/// nonzero entry in the visited column. Returns the pivot columns in the order
/// they were found; row `k` of the result carries pivot `k`.
pub fn rref_with_order<T: Field>(rows: &mut Matrix<T>, column_order: &[usize]) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut next = 0;
    for &col in column_order {
        if next == rows.len() {
            break;
        }
        let Some(found) = (next..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next, found);
        let inv = T::one() / rows[next][col].clone();
        for x in rows[next].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x = x.clone() - factor.clone() * p.clone();
                }
            }
        }
        pivots.push(col);
        next += 1;
    }
    pivots
}

pub fn rref<T: Field>(rows: &mut Matrix<T>) -> Vec<usize> {
    let width = rows.first().map_or(0, Vec::len);
    let order: Vec<usize> = (0..width).collect();
    rref_with_order(rows, &order)
}

pub fn rank<T: Field>(rows: &Matrix<T>) -> usize {
    let mut copy = rows.clone();
    rref(&mut copy).len()
}

pub fn identity<T: Field>(n: usize) -> Matrix<T> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

pub fn inverse<T: Field>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.len();
    let mut aug: Matrix<T> = m
        .iter()
        .zip(identity::<T>(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    let order: Vec<usize> = (0..n).collect();
    let pivots = rref_with_order(&mut aug, &order);
    (pivots.len() == n).then(|| aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn transpose<T: Clone>(m: &Matrix<T>) -> Matrix<T> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_vec<T: Field>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

pub fn mat_mul<T: Field>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let bt = transpose(b);
    a.iter().map(|row| mat_vec(&bt, row)).collect()
}

/// Solves `m x = rhs` when the solution exists and is unique.
pub fn solve_unique<T: Field>(m: &Matrix<T>, rhs: &[T]) -> Option<Vec<T>> {
    let cols = m.first().map_or(0, Vec::len);
    let mut aug: Matrix<T> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) || pivots.len() != cols {
        return None;
    }
    Some(aug.iter().take(cols).map(|row| row[cols].clone()).collect())
}

/// One particular solution of `m x = rhs` (free variables set to zero), if any.
pub fn solve_particular<T: Field>(m: &Matrix<T>, rhs: &[T]) -> Option<Vec<T>> {
    let cols = m.first().map_or(0, Vec::len);
    let mut aug: Matrix<T> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![T::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// A sparse equation `sum coeffs[c] * x_c = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation<T> {
    pub coeffs: BTreeMap<usize, T>,
    pub rhs: T,
}

impl<T: Field> Equation<T> {
    pub fn new() -> Self {
        Equation { coeffs: BTreeMap::new(), rhs: T::zero() }
    }

    pub fn add_term(&mut self, column: usize, value: T) {
        if value.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(column).or_insert_with(T::zero);
        *entry = entry.clone() + value;
        if entry.is_zero() {
            self.coeffs.remove(&column);
        }
    }

    pub fn add_constant(&mut self, value: T) {
        self.rhs = self.rhs.clone() - value;
    }

    fn axpy(&mut self, factor: &T, other: &Equation<T>) {
        for (&c, v) in &other.coeffs {
            self.add_term(c, -(factor.clone() * v.clone()));
        }
        self.rhs = self.rhs.clone() - factor.clone() * other.rhs.clone();
    }
}

impl<T: Field> Default for Equation<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of reducing an equation against a [`SparseSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    NewPivot(usize),
    Redundant,
    Contradiction,
}

/// Incremental sparse elimination keeping rows in echelon form keyed by leading column.
#[derive(Debug, Clone)]
pub struct SparseSystem<T> {
    unknowns: usize,
    rows: BTreeMap<usize, Equation<T>>,
    contradictions: usize,
    equations: usize,
}

impl<T: Field> SparseSystem<T> {
    pub fn new(unknowns: usize) -> Self {
        SparseSystem { unknowns, rows: BTreeMap::new(), contradictions: 0, equations: 0 }
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn equations(&self) -> usize {
        self.equations
    }

    pub fn contradictions(&self) -> usize {
        self.contradictions
    }

    fn reduce(&self, mut eq: Equation<T>) -> Equation<T> {
        let mut floor = 0;
        loop {
            let next = eq
                .coeffs
                .range(floor..)
                .find(|(c, _)| self.rows.contains_key(c))
                .map(|(&c, v)| (c, v.clone()));
            let Some((col, value)) = next else { break };
            eq.axpy(&value, &self.rows[&col]);
            floor = col + 1;
        }
        eq
    }

    pub fn insert(&mut self, eq: Equation<T>) -> Insertion {
        self.equations += 1;
        let mut eq = self.reduce(eq);
        let Some((&lead, lead_value)) = eq.coeffs.iter().next() else {
            if eq.rhs.is_zero() {
                return Insertion::Redundant;
            }
            self.contradictions += 1;
            return Insertion::Contradiction;
        };
        let inv = T::one() / lead_value.clone();
        for v in eq.coeffs.values_mut() {
            *v = v.clone() * inv.clone();
        }
        eq.rhs = eq.rhs.clone() * inv;
        self.rows.insert(lead, eq);
        Insertion::NewPivot(lead)
    }

    /// Residual of an equation against a candidate solution.
    pub fn residual(eq: &Equation<T>, x: &[T]) -> T {
        eq.coeffs
            .iter()
            .fold(T::zero(), |acc, (&c, v)| acc + v.clone() * x[c].clone())
            - eq.rhs.clone()
    }

    /// Back substitution: every unknown whose value does not depend on a free variable.
    pub fn determined(&self) -> Vec<Option<T>> {
        let mut values: Vec<Option<T>> = vec![None; self.unknowns];
        let mut free_dependent = vec![false; self.unknowns];
        for col in 0..self.unknowns {
            if !self.rows.contains_key(&col) {
                free_dependent[col] = true;
            }
        }
        for (&lead, row) in self.rows.iter().rev() {
            let mut value = row.rhs.clone();
            let mut ok = true;
            for (&c, v) in row.coeffs.range(lead + 1..) {
                match &values[c] {
                    Some(x) if !free_dependent[c] => value = value - v.clone() * x.clone(),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                values[lead] = Some(value);
            } else {
                free_dependent[lead] = true;
            }
        }
        values
    }

    /// The unique solution, if the system is consistent and of full rank.
    pub fn solution(&self) -> Option<Vec<T>> {
        if self.contradictions > 0 || self.rank() != self.unknowns {
            return None;
        }
        self.determined().into_iter().collect()
    }
}
