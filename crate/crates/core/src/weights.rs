//! Weights, the inverse exponent matrix and the maximal diagonal symmetry group.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix};
use crate::poly::{AtomicBlock, BlockKind, InvertiblePolynomial};
use crate::rational::{frac, int, product, sign_power};
use crate::Q;

/// A diagonal symmetry `exp(2πiθ)`, stored with every phase in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(Vec<Q>);

impl GroupElement {
    pub fn new(theta: impl IntoIterator<Item = Q>) -> Self {
        GroupElement(theta.into_iter().map(|t| frac(&t)).collect())
    }

    pub fn identity(n: usize) -> Self {
        GroupElement(vec![Q::zero(); n])
    }

    pub fn theta(&self) -> &[Q] {
        &self.0
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b))
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement::new(self.0.iter().map(|a| -a))
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Indices `j` with `θ^{(j)} = 0`.
    pub fn fixed(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j].is_zero()).collect()
    }

    pub fn is_narrow(&self) -> bool {
        self.0.iter().all(|t| !t.is_zero())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Exact invariants of an invertible polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariants {
    /// `rho[i][j] = ρ_j^{(i)}`, the entries of the inverse exponent matrix.
    pub rho: Matrix<Q>,
    pub weights: Vec<Q>,
    pub milnor_number: Q,
    pub central_charge: Q,
    pub group_order: u64,
    pub j: GroupElement,
    pub zeta: GroupElement,
}

impl Invariants {
    pub fn nvars(&self) -> usize {
        self.weights.len()
    }

    /// Column `j` of the inverse exponent matrix, the generator `ρ_j`.
    pub fn generator(&self, j: usize) -> GroupElement {
        GroupElement::new(self.rho.iter().map(|row| row[j].clone()))
    }

    /// `I(m) = q + Σ m_j ρ_j mod 1`.
    pub fn i_map(&self, m: &[u32]) -> GroupElement {
        GroupElement::new((0..self.nvars()).map(|i| {
            let shift = m
                .iter()
                .enumerate()
                .fold(Q::zero(), |acc, (j, &mj)| acc + &self.rho[i][j] * int(mj as i64));
            &self.weights[i] + shift
        }))
    }

    pub fn sector_data(&self, gamma: &GroupElement) -> SectorData {
        let fixed = gamma.fixed();
        let iota = gamma
            .theta()
            .iter()
            .zip(&self.weights)
            .fold(Q::zero(), |acc, (t, q)| acc + t - q);
        let n_gamma = fixed.len();
        let degree = Q::new(BigInt::from(n_gamma), BigInt::from(2)) + &iota;
        SectorData { narrow: fixed.is_empty(), fixed, n_gamma, iota, degree }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorData {
    pub fixed: Vec<usize>,
    pub narrow: bool,
    pub n_gamma: usize,
    pub iota: Q,
    /// `n_γ/2 + ι_γ`, the degree of a basis element of the sector.
    pub degree: Q,
}

/// Closed-form inverse exponent matrix entry of a block, in local indices.
pub fn block_rho(block: &AtomicBlock, i: usize, j: usize) -> Q {
    let a: Vec<Q> = block.exponents.iter().map(|&x| int(x as i64)).collect();
    let n = a.len();
    match block.kind {
        BlockKind::Fermat => Q::one() / &a[0],
        BlockKind::Chain => {
            if j < i {
                Q::zero()
            } else {
                sign_power((j - i) as i64) / product(&a[i..=j])
            }
        }
        BlockKind::Loop => {
            let d = product(&a) + sign_power(n as i64 + 1);
            if j >= i {
                sign_power((j - i) as i64) * product(&a[j + 1..]) * product(&a[..i]) / d
            } else {
                sign_power((n + j - i) as i64) * product(&a[j + 1..i]) / d
            }
        }
    }
}

pub fn derive_invariants(w: &InvertiblePolynomial) -> Result<Invariants> {
    let n = w.nvars();
    let e = w.rational_matrix();
    let rho = inverse(&e).ok_or_else(|| Error::Internal("exponent matrix lost invertibility".into()))?;
    let weights: Vec<Q> = rho.iter().map(|row| row.iter().cloned().sum()).collect();

    for block in w.blocks() {
        check_block_identities(w, block, &rho, &weights)?;
    }

    let milnor_number = weights.iter().map(|q| Q::one() / q - Q::one()).product();
    let central_charge = weights.iter().map(|q| Q::one() - q - q).sum();
    let group_order = w.blocks().iter().map(AtomicBlock::group_order).product();
    let j = GroupElement::new(weights.iter().cloned());
    let half = Q::new(BigInt::from(1), BigInt::from(2));
    let zeta = GroupElement::new(weights.iter().map(|q| q * &half));
    debug_assert_eq!(n, weights.len());
    Ok(Invariants { rho, weights, milnor_number, central_charge, group_order, j, zeta })
}

fn check_block_identities(
    w: &InvertiblePolynomial,
    block: &AtomicBlock,
    rho: &Matrix<Q>,
    weights: &[Q],
) -> Result<()> {
    let n = block.len();
    let fail = |what: &str| Err(Error::Internal(format!("{what} fails on {} block {:?}", block.kind, block.vars)));
    for (li, &gi) in block.vars.iter().enumerate() {
        for (lj, &gj) in block.vars.iter().enumerate() {
            if rho[gi][gj] != block_rho(block, li, lj) {
                return fail("closed-form inverse entry");
            }
        }
        let next = match block.kind {
            BlockKind::Loop => weights[block.vars[(li + 1) % n]].clone(),
            _ if li + 1 < n => weights[block.vars[li + 1]].clone(),
            _ => Q::zero(),
        };
        if int(w.exponent(gi) as i64) * &weights[gi] != Q::one() - next {
            return fail("a_i q_i = 1 - q_(i+1)");
        }
        for (lj, &gj) in block.vars.iter().enumerate() {
            let prev = match (block.kind, lj) {
                (BlockKind::Loop, 0) => rho[gi][block.vars[n - 1]].clone(),
                (_, 0) => Q::zero(),
                _ => rho[gi][block.vars[lj - 1]].clone(),
            };
            let delta = if li == lj { Q::one() } else { Q::zero() };
            if prev + int(w.exponent(gj) as i64) * &rho[gi][gj] != delta {
                return fail("ρ_(j-1) + a_j ρ_j = δ");
            }
        }
    }
    Ok(())
}

/// The group generated by the columns of the inverse exponent matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGroup {
    pub elements: Vec<GroupElement>,
    pub generators: Vec<GroupElement>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }
}

pub fn enumerate_group(inv: &Invariants) -> Result<SymmetryGroup> {
    let n = inv.nvars();
    let generators: Vec<GroupElement> = (0..n).map(|j| inv.generator(j)).collect();
    let mut seen = BTreeSet::from([GroupElement::identity(n)]);
    let mut frontier = vec![GroupElement::identity(n)];
    while let Some(g) = frontier.pop() {
        for gen in &generators {
            let h = g.compose(gen);
            if seen.insert(h.clone()) {
                frontier.push(h);
            }
        }
    }
    if seen.len() as u64 != inv.group_order {
        return Err(Error::Internal(format!(
            "group closure has {} elements, expected {}",
            seen.len(),
            inv.group_order
        )));
    }
    Ok(SymmetryGroup { elements: seen.into_iter().collect(), generators })
}
