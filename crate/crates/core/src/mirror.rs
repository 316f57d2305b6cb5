//! The twisted state space `H(w, G_w)`, the mirror map from the dual Milnor ring,
//! the A-side pairing and product, and closed-form three-point values.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix};
use crate::milnor::{MilnorElement, MilnorRing, StandardVector};
use crate::model::Model;
use crate::poly::{restrict, AtomicBlock, BlockKind, InvertiblePolynomial};
use crate::rational::{int, is_integer, product};
use crate::sparse::SparsePoly;
use crate::weights::{GroupElement, Invariants};
use crate::Q;

/// A broad sector representative: a polynomial coefficient times the volume
/// form on the fixed coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernForm {
    pub coefficient: SparsePoly,
    pub fixed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectorForm {
    Narrow,
    Broad(ChernForm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasisElement {
    pub vector: StandardVector,
    pub gamma: GroupElement,
    pub form: SectorForm,
}

impl SectorBasisElement {
    pub fn is_broad(&self) -> bool {
        matches!(self.form, SectorForm::Broad(_))
    }
}

/// Coordinates of a state in the basis `θ(m)`, indexed like the ring basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateElement(pub Vec<Q>);

impl StateElement {
    pub fn basis(dim: usize, i: usize) -> Self {
        StateElement(MilnorElement::basis(dim, i).0)
    }

    pub fn zero(dim: usize) -> Self {
        StateElement(vec![Q::zero(); dim])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// The mirror map: a ring element and its image share coordinates.
    pub fn from_milnor(m: &MilnorElement) -> Self {
        StateElement(m.0.clone())
    }

    pub fn to_milnor(&self) -> MilnorElement {
        MilnorElement(self.0.clone())
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.0.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }
}

fn local(block: &AtomicBlock, e: &[u32]) -> Vec<u32> {
    block.vars.iter().map(|&g| e[g]).collect()
}

fn is_even_loop(block: &AtomicBlock) -> bool {
    block.kind == BlockKind::Loop && block.len().is_multiple_of(2)
}

/// Which of the two broad loop vectors a local exponent is, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopParity {
    Odd,
    Even,
}

fn loop_parity(block: &AtomicBlock, m: &[u32]) -> Option<LoopParity> {
    if !is_even_loop(block) {
        return None;
    }
    let pattern = |odd: bool| -> Vec<u32> {
        block
            .exponents
            .iter()
            .enumerate()
            .map(|(l, &a)| if (l % 2 == 0) == odd { a - 1 } else { 0 })
            .collect()
    };
    if m == pattern(true).as_slice() {
        Some(LoopParity::Odd)
    } else if m == pattern(false).as_slice() {
        Some(LoopParity::Even)
    } else {
        None
    }
}

/// `∏ (-a_j)` over local positions with the given 1-based parity.
fn signed_exponent_product(block: &AtomicBlock, odd: bool) -> Q {
    let factors: Vec<Q> = block
        .exponents
        .iter()
        .enumerate()
        .filter(|(l, _)| (l % 2 == 0) == odd)
        .map(|(_, &a)| -int(a as i64))
        .collect();
    product(&factors)
}

/// `∏_{i<k} (-a_{n-2i-1})` for a chain block.
fn chain_stratum_factor(block: &AtomicBlock, k: usize) -> Q {
    let n = block.len();
    let factors: Vec<Q> = (0..k).map(|i| -int(block.exponents[n - 2 * i - 2] as i64)).collect();
    product(&factors)
}

fn block_form(block: &AtomicBlock, m: &[u32], k: usize, nvars: usize) -> Option<ChernForm> {
    let n = block.len();
    let power = |l: usize, coefficient: Q| {
        let mut e = vec![0; nvars];
        e[block.vars[l]] = block.exponents[l] - 1;
        SparsePoly::monomial(coefficient, e)
    };
    let times = |acc: SparsePoly, p: SparsePoly| acc.mul(&p);
    match block.kind {
        BlockKind::Chain if k >= 1 => {
            let coefficient = (0..k)
                .map(|i| n - 2 * i - 2)
                .map(|l| power(l, -int(block.exponents[l] as i64)))
                .fold(SparsePoly::one(nvars), times);
            Some(ChernForm { coefficient, fixed: block.vars[n - 2 * k..].to_vec() })
        }
        BlockKind::Loop => {
            let parity = loop_parity(block, m)?;
            let odd_plain = (0..n).filter(|l| l % 2 == 0).map(|l| power(l, Q::one())).fold(SparsePoly::one(nvars), times);
            let even_plain = (0..n).filter(|l| l % 2 == 1).map(|l| power(l, Q::one())).fold(SparsePoly::one(nvars), times);
            let odd_signed = (0..n)
                .filter(|l| l % 2 == 0)
                .map(|l| power(l, -int(block.exponents[l] as i64)))
                .fold(SparsePoly::one(nvars), times);
            let even_signed = (0..n)
                .filter(|l| l % 2 == 1)
                .map(|l| power(l, -int(block.exponents[l] as i64)))
                .fold(SparsePoly::one(nvars), times);
            let coefficient = match parity {
                LoopParity::Odd => odd_plain.add(&even_signed.scale(&-Q::one())),
                LoopParity::Even => odd_signed.add(&even_plain.scale(&-Q::one())),
            };
            Some(ChernForm { coefficient, fixed: block.vars.clone() })
        }
        _ => None,
    }
}

/// The pairing value of a basis vector against its partner inside one block.
fn block_pair_value(block: &AtomicBlock, m1: &[u32], k1: usize, m2: &[u32]) -> Q {
    match (loop_parity(block, m1), loop_parity(block, m2)) {
        (Some(LoopParity::Odd), Some(LoopParity::Odd)) => return signed_exponent_product(block, false),
        (Some(LoopParity::Even), Some(LoopParity::Even)) => return signed_exponent_product(block, true),
        _ => {}
    }
    if block.kind == BlockKind::Chain && k1 >= 1 {
        return chain_stratum_factor(block, k1);
    }
    Q::one()
}

/// The state space together with its A-side pairing and product tables.
#[derive(Debug, Clone)]
pub struct StateSpace {
    elements: Vec<SectorBasisElement>,
    direct_gram: Matrix<Q>,
    eta: Matrix<Q>,
    product: Vec<Vec<StateElement>>,
}

impl StateSpace {
    pub fn build(
        w: &InvertiblePolynomial,
        inv: &Invariants,
        ring: &MilnorRing,
        vectors: &[StandardVector],
    ) -> Result<Self> {
        let n = w.nvars();
        let mut elements = Vec::with_capacity(vectors.len());
        for v in vectors {
            let gamma = inv.i_map(&v.exponent);
            let mut fixed = Vec::new();
            let mut coefficient = SparsePoly::one(n);
            let mut broad = false;
            for (block, &k) in w.blocks().iter().zip(&v.strata) {
                if let Some(f) = block_form(block, &local(block, &v.exponent), k, n) {
                    broad = true;
                    coefficient = coefficient.mul(&f.coefficient);
                    fixed.extend(f.fixed);
                }
            }
            fixed.sort_unstable();
            if fixed != gamma.fixed() {
                return Err(Error::Internal(format!(
                    "sector of {:?} fixes {:?} but its form lives on {:?}",
                    v.exponent,
                    gamma.fixed(),
                    fixed
                )));
            }
            let form = if broad { SectorForm::Broad(ChernForm { coefficient, fixed }) } else { SectorForm::Narrow };
            elements.push(SectorBasisElement { vector: v.clone(), gamma, form });
        }

        let dim = elements.len();
        let direct_gram: Matrix<Q> = (0..dim)
            .map(|i| (0..dim).map(|j| direct_pair(w, &elements[i], &elements[j])).collect())
            .collect();
        let eta = inverse(&direct_gram)
            .ok_or_else(|| Error::Internal("A-side pairing is degenerate".into()))?;

        let gram_b = ring.gram();
        let mut product = vec![vec![StateElement::zero(dim); dim]; dim];
        for i in 0..dim {
            for j in i..dim {
                let ij = ring.basis_product(i, j);
                let three: Vec<Q> = (0..dim)
                    .map(|k| ij.support().fold(Q::zero(), |acc, (l, c)| acc + c * &gram_b[l][k]))
                    .collect();
                let coords: Vec<Q> = (0..dim)
                    .map(|l| (0..dim).fold(Q::zero(), |acc, k| acc + &three[k] * &eta[k][l]))
                    .collect();
                product[i][j] = StateElement(coords.clone());
                product[j][i] = StateElement(coords);
            }
        }
        Ok(StateSpace { elements, direct_gram, eta, product })
    }

    pub fn elements(&self) -> &[SectorBasisElement] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Gram matrix of the explicit A-side pairing formulas.
    pub fn direct_gram(&self) -> &Matrix<Q> {
        &self.direct_gram
    }

    /// Inverse of [`Self::direct_gram`].
    pub fn eta(&self) -> &Matrix<Q> {
        &self.eta
    }

    /// Product of basis states `θ_i • θ_j`.
    pub fn basis_product(&self, i: usize, j: usize) -> &StateElement {
        &self.product[i][j]
    }
}

fn direct_pair(w: &InvertiblePolynomial, a: &SectorBasisElement, b: &SectorBasisElement) -> Q {
    if b.gamma != a.gamma.inverse() {
        return Q::zero();
    }
    w.blocks()
        .iter()
        .enumerate()
        .map(|(bi, block)| {
            block_pair_value(
                block,
                &local(block, &a.vector.exponent),
                a.vector.strata[bi],
                &local(block, &b.vector.exponent),
            )
        })
        .product()
}

impl Model {
    /// The state `θ_j = θ(x_j)`.
    pub fn generator(&self, j: usize) -> StateElement {
        StateElement::from_milnor(&self.ring().variable(j))
    }

    /// Production pairing: the normalized residue of the ring preimages.
    pub fn pairing_a(&self, a: &StateElement, b: &StateElement) -> Q {
        self.ring().normalized_residue_pair(&a.to_milnor(), &b.to_milnor())
    }

    /// Pairing from the explicit sector formulas.
    pub fn pairing_a_direct(&self, a: &StateElement, b: &StateElement) -> Q {
        let g = self.state().direct_gram();
        let mut total = Q::zero();
        for (i, x) in a.support() {
            for (j, y) in b.support() {
                total += x * y * &g[i][j];
            }
        }
        total
    }

    /// Product through three-point values and the inverse A-side pairing.
    pub fn product_a(&self, a: &StateElement, b: &StateElement) -> StateElement {
        let mut out = StateElement::zero(self.dim());
        for (i, x) in a.support() {
            for (j, y) in b.support() {
                let c = x * y;
                for (k, z) in self.state().basis_product(i, j).support() {
                    out.0[k] += &c * z;
                }
            }
        }
        out
    }

    pub fn three_point(&self, a: &StateElement, b: &StateElement, c: &StateElement) -> Q {
        let r = self.ring();
        r.normalized_residue(&r.multiply(&r.multiply(&a.to_milnor(), &b.to_milnor()), &c.to_milnor()))
    }

    pub fn three_point_basis(&self, i: usize, j: usize, k: usize) -> Q {
        let r = self.ring();
        let ij = r.basis_product(i, j);
        ij.support().fold(Q::zero(), |acc, (l, c)| acc + c * &r.basis_product(l, k).0[r.socle()])
    }

    /// `∂_j w^T` evaluated on the generators with the A-side product.
    pub fn jacobian_relation(&self, j: usize) -> StateElement {
        let partial = self.ring().partial(j);
        let mut total = StateElement::zero(self.dim());
        for (e, c) in partial.terms() {
            let mut term = StateElement::basis(self.dim(), self.unit());
            for (var, &power) in e.iter().enumerate() {
                for _ in 0..power {
                    term = self.product_a(&term, &self.generator(var));
                }
            }
            for (k, v) in term.support() {
                total.0[k] += c * v;
            }
        }
        total
    }

    /// Dimension of the `G_w`-invariant part of the sector of `gamma`.
    pub fn sector_dimension(&self, gamma: &GroupElement) -> Result<usize> {
        let fixed = gamma.fixed();
        if fixed.is_empty() {
            return Ok(1);
        }
        let raw = restrict(self.w(), &fixed);
        let restricted = InvertiblePolynomial::from_raw(&raw)
            .map_err(|e| Error::Unsupported(format!("restriction to {fixed:?} is not invertible: {e}")))?;
        let ring = match MilnorRing::for_dual(&restricted.dual()) {
            Ok((ring, _)) => ring,
            Err(_) => MilnorRing::new(&restricted, None)?,
        };
        let generators = &self.group().generators;
        let count = ring
            .basis()
            .iter()
            .filter(|u| {
                generators.iter().all(|g| {
                    let s = fixed
                        .iter()
                        .zip(u.iter())
                        .fold(Q::zero(), |acc, (&j, &uj)| acc + int(uj as i64 + 1) * &g.theta()[j]);
                    is_integer(&s)
                })
            })
            .count();
        Ok(count)
    }

    /// `Σ_γ dim H_γ^G` over the whole group.
    pub fn state_space_dimension(&self) -> Result<usize> {
        self.group().elements.iter().map(|g| self.sector_dimension(g)).sum()
    }
}

/// A three-point configuration with a closed-form value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleCase {
    /// `⟨θ_j, θ(m), θ(comp(m+v_j))⟩` with `m` and `m+v_j` standard.
    Additive { j: usize, m: usize },
    /// `⟨θ_j, θ(m), θ(m+v_j)⟩` where `m+v_j` is a broad vector of an even loop.
    LoopSelf { j: usize, m: usize },
    /// `⟨θ_{j+1}, θ_{j+1}^{a_{j+1}-1}, θ(comp(v_{j-1} + (a_j-1)v_j))⟩`.
    IndexZero { j: usize },
    /// `⟨θ(0), θ(a), θ(b)⟩`.
    MetricAxiom { a: usize, b: usize },
}

/// An oracle case resolved to three basis insertions and its closed-form value.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub case: OracleCase,
    pub insertions: [usize; 3],
    pub expected: Q,
}

fn unit_vector(n: usize, j: usize, power: u32) -> Vec<u32> {
    let mut e = vec![0; n];
    e[j] = power;
    e
}

impl Model {
    /// Closed-form value of `⟨x^M, x^{comp M}⟩` per block.
    fn complement_pair_value(&self, e: &[u32], strata: &[usize]) -> Q {
        self.w()
            .blocks()
            .iter()
            .zip(strata)
            .map(|(block, &k)| {
                let m = local(block, e);
                match (block.kind, loop_parity(block, &m)) {
                    (BlockKind::Chain, _) if k >= 1 => chain_stratum_factor(block, k),
                    _ => Q::one(),
                }
            })
            .product()
    }

    /// The normalized residue of two standard basis monomials from the closed
    /// form: nonzero only on complementary pairs and on the broad loop vectors.
    pub fn residue_formula(&self, i: usize, j: usize) -> Q {
        let (vi, vj) = (&self.vectors()[i], &self.vectors()[j]);
        let partner = &self.vectors()[self.complement(i)];
        self.w()
            .blocks()
            .iter()
            .enumerate()
            .map(|(bi, block)| {
                let (mi, mj) = (local(block, &vi.exponent), local(block, &vj.exponent));
                let paired = mj == local(block, &partner.exponent)
                    || (mi == mj && loop_parity(block, &mi).is_some());
                if paired {
                    block_pair_value(block, &mi, vi.strata[bi], &mj)
                } else {
                    Q::zero()
                }
            })
            .product()
    }

    fn is_narrow_index(&self, i: usize) -> bool {
        !self.state().elements()[i].is_broad()
    }

    pub fn three_point_oracle(&self, case: &OracleCase) -> Result<OracleValue> {
        let n = self.nvars();
        let missing = |why: &str| Error::Precondition(format!("{case:?}: {why}"));
        let unmet = |why: &str| Err(missing(why));
        match *case {
            OracleCase::Additive { j, m } => {
                let Some(vj) = self.index_of(&unit_vector(n, j, 1)) else { return unmet("x_j is not standard") };
                let mut target = self.vectors()[m].exponent.clone();
                target[j] += 1;
                let Some(t) = self.index_of(&target) else { return unmet("m + v_j is not standard") };
                let expected = self.complement_pair_value(&target, &self.vectors()[t].strata);
                Ok(OracleValue { case: case.clone(), insertions: [vj, m, self.complement(t)], expected })
            }
            OracleCase::LoopSelf { j, m } => {
                let Some(vj) = self.index_of(&unit_vector(n, j, 1)) else { return unmet("x_j is not standard") };
                let mut target = self.vectors()[m].exponent.clone();
                target[j] += 1;
                let Some(t) = self.index_of(&target) else { return unmet("m + v_j is not standard") };
                let (bi, block) = self.w().block_of(j);
                let Some(parity) = loop_parity(block, &local(block, &target)) else {
                    return unmet("m + v_j is not a broad loop vector");
                };
                let mut third = self.vectors()[self.complement(t)].exponent.clone();
                for &g in &block.vars {
                    third[g] = target[g];
                }
                let third = self.index_of(&third).ok_or_else(|| Error::Internal("loop self partner".into()))?;
                let own = signed_exponent_product(block, parity == LoopParity::Even);
                let others: Q = self
                    .w()
                    .blocks()
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| *b != bi)
                    .map(|(b, other)| {
                        let k = self.vectors()[t].strata[b];
                        if other.kind == BlockKind::Chain && k >= 1 {
                            chain_stratum_factor(other, k)
                        } else {
                            Q::one()
                        }
                    })
                    .product();
                Ok(OracleValue { case: case.clone(), insertions: [vj, m, third], expected: own * others })
            }
            OracleCase::IndexZero { j } => {
                let (_, block) = self.w().block_of(j);
                let len = block.len();
                let l = block.local(j).expect("variable in its block");
                let cyclic = block.kind == BlockKind::Loop;
                if block.kind == BlockKind::Fermat || (!cyclic && l + 1 >= len) {
                    return unmet("x_j has no successor in its block");
                }
                let next = block.vars[(l + 1) % len];
                let prev = if cyclic { Some(block.vars[(l + len - 1) % len]) } else { l.checked_sub(1).map(|p| block.vars[p]) };
                let aj = block.exponents[l];
                let a_next = block.exponents[(l + 1) % len];
                let mut m = unit_vector(n, j, aj - 1);
                if let Some(p) = prev {
                    m[p] += 1;
                }
                let Some(mi) = self.index_of(&m) else { return unmet("v_(j-1) + (a_j-1)v_j is not standard") };
                let mut needed = vec![mi];
                if let Some(p) = prev {
                    needed.push(self.index_of(&unit_vector(n, p, 1)).ok_or_else(|| missing("x_(j-1) not standard"))?);
                }
                needed.push(self.index_of(&unit_vector(n, j, aj - 1)).ok_or_else(|| missing("x_j^(a_j-1) not standard"))?);
                for k in 1..a_next {
                    needed.push(self.index_of(&unit_vector(n, next, k)).ok_or_else(|| missing("x_(j+1)^k not standard"))?);
                }
                if !needed.iter().all(|&i| self.is_narrow_index(i)) {
                    return unmet("a participating insertion is broad");
                }
                let first = self.index_of(&unit_vector(n, next, 1)).expect("checked above");
                let second = self.index_of(&unit_vector(n, next, a_next - 1)).expect("checked above");
                Ok(OracleValue {
                    case: case.clone(),
                    insertions: [first, second, self.complement(mi)],
                    expected: -int(aj as i64),
                })
            }
            OracleCase::MetricAxiom { a, b } => {
                if a >= self.dim() || b >= self.dim() {
                    return unmet("index out of range");
                }
                Ok(OracleValue {
                    case: case.clone(),
                    insertions: [self.unit(), a, b],
                    expected: self.state().direct_gram()[a][b].clone(),
                })
            }
        }
    }

    /// Every oracle case whose preconditions hold.
    pub fn oracle_values(&self) -> Vec<OracleValue> {
        let n = self.nvars();
        let dim = self.dim();
        let mut cases = Vec::new();
        for j in 0..n {
            for m in 0..dim {
                cases.push(OracleCase::Additive { j, m });
                cases.push(OracleCase::LoopSelf { j, m });
            }
            cases.push(OracleCase::IndexZero { j });
        }
        for a in 0..dim {
            for b in 0..dim {
                cases.push(OracleCase::MetricAxiom { a, b });
            }
        }
        cases.iter().filter_map(|c| self.three_point_oracle(c).ok()).collect()
    }
}
