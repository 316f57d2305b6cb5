//! Sparse multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::Q;

pub type Exponent = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Exponent, Q>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::monomial(Q::one(), vec![0; nvars])
    }

    pub fn monomial(coefficient: Q, exponent: Exponent) -> Self {
        let mut p = Self::zero(exponent.len());
        p.add_term(exponent, coefficient);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponent: &[u32]) -> Q {
        self.terms.get(exponent).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, exponent: Exponent, coefficient: Q) {
        debug_assert_eq!(exponent.len(), self.nvars);
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponent.clone()).or_insert_with(Q::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    pub fn add(&self, other: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &Q) -> SparsePoly {
        let mut out = SparsePoly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * factor);
        }
        out
    }

    pub fn mul(&self, other: &SparsePoly) -> SparsePoly {
        let mut out = SparsePoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> SparsePoly {
        let mut out = SparsePoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c * Q::from_integer(e[var].into()));
        }
        out
    }

    /// Weighted degree of every term, if the polynomial is homogeneous.
    pub fn homogeneous_degree(&self, weights: &[Q]) -> Option<Q> {
        let mut degrees = self.terms.keys().map(|e| weighted_degree(e, weights));
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }
}

pub fn weighted_degree(exponent: &[u32], weights: &[Q]) -> Q {
    exponent
        .iter()
        .zip(weights)
        .fold(Q::zero(), |acc, (&e, w)| acc + w * Q::from_integer(e.into()))
}

/// Renders a monomial as `x1^2*x3`, or `1` for the constant monomial.
pub fn format_monomial(exponent: &[u32]) -> String {
    let factors: Vec<String> = exponent
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
        .collect();
    if factors.is_empty() {
        "1".to_string()
    } else {
        factors.join("*")
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let m = format_monomial(e);
                if c.is_one() {
                    m
                } else if m == "1" {
                    c.to_string()
                } else {
                    format!("{c}*{m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
