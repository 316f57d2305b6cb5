//! The Milnor ring of the transposed polynomial: standard basis, normal forms,
//! multiplication, the Hessian and the normalized residue pairing.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{rref_with_order, Matrix};
use crate::poly::{AtomicBlock, BlockKind, InvertiblePolynomial};
use crate::rational::int;
use crate::sparse::{weighted_degree, Exponent, SparsePoly};
use crate::weights::derive_invariants;
use crate::Q;

/// A standard basis vector of the dual Milnor ring together with, for every
/// block of the original polynomial, its chain stratum (always 0 off chains).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StandardVector {
    pub exponent: Exponent,
    pub strata: Vec<usize>,
}

/// Local standard vectors of one block, each with its stratum.
fn block_vectors(block: &AtomicBlock) -> Vec<(Vec<u32>, usize)> {
    let a = &block.exponents;
    let n = a.len();
    match block.kind {
        BlockKind::Fermat => (0..a[0] - 1).map(|m| (vec![m], 0)).collect(),
        BlockKind::Loop => boxes(&a.to_vec()).into_iter().map(|m| (m, 0)).collect(),
        BlockKind::Chain => {
            let mut out = Vec::new();
            for k in 0..=n / 2 {
                let free = n - 2 * k;
                let mut bounds: Vec<u32> = a[..free].to_vec();
                if free >= 1 {
                    bounds[free - 1] -= 1;
                }
                for head in boxes(&bounds) {
                    let mut m = head;
                    m.resize(n, 0);
                    for i in 0..k {
                        let pinned = n - 1 - 2 * i;
                        m[pinned] = a[pinned] - 1;
                    }
                    out.push((m, k));
                }
            }
            out
        }
    }
}

/// All vectors `m` with `0 ≤ m_i < bounds_i`.
fn boxes(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..b).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Socle vector of a block, in local indices.
fn block_socle(block: &AtomicBlock) -> Vec<u32> {
    let a = &block.exponents;
    match block.kind {
        BlockKind::Fermat => vec![a[0] - 2],
        BlockKind::Loop => a.iter().map(|x| x - 1).collect(),
        BlockKind::Chain => truncated_chain_socle(a, a.len()),
    }
}

/// Socle vector of the chain on the first `len` variables, padded with zeros.
fn truncated_chain_socle(a: &[u32], len: usize) -> Vec<u32> {
    let mut s: Vec<u32> = vec![0; a.len()];
    for i in 0..len {
        s[i] = if i + 1 == len { a[i] - 2 } else { a[i] - 1 };
    }
    s
}

/// The standard basis of the Milnor ring of `w^T`, described through the blocks of `w`.
pub fn standard_basis(w: &InvertiblePolynomial) -> Vec<StandardVector> {
    let n = w.nvars();
    let mut out = vec![StandardVector { exponent: vec![0; n], strata: Vec::new() }];
    for block in w.blocks() {
        let local = block_vectors(block);
        out = out
            .into_iter()
            .flat_map(|sv| {
                local.iter().map(move |(m, k)| {
                    let mut next = sv.clone();
                    for (l, &g) in block.vars.iter().enumerate() {
                        next.exponent[g] = m[l];
                    }
                    next.strata.push(*k);
                    next
                })
            })
            .collect();
    }
    out
}

pub fn socle_vector(w: &InvertiblePolynomial) -> Exponent {
    let mut s = vec![0; w.nvars()];
    for block in w.blocks() {
        for (l, v) in block_socle(block).into_iter().enumerate() {
            s[block.vars[l]] = v;
        }
    }
    s
}

/// The complementary vector: pinned chain tails are kept, every other entry is
/// reflected through the socle of the stratum it lives in.
pub fn complementary_vector(w: &InvertiblePolynomial, v: &StandardVector) -> StandardVector {
    let mut m = v.exponent.clone();
    for (block, &k) in w.blocks().iter().zip(&v.strata) {
        let local: Vec<u32> = block.vars.iter().map(|&g| v.exponent[g]).collect();
        let n = block.len();
        let reflected: Vec<u32> = match block.kind {
            BlockKind::Chain => {
                let free = n - 2 * k;
                let s = truncated_chain_socle(&block.exponents, free);
                (0..n).map(|i| if i >= free { local[i] } else { s[i] - local[i] }).collect()
            }
            _ => block_socle(block).iter().zip(&local).map(|(s, x)| s - x).collect(),
        };
        for (l, &g) in block.vars.iter().enumerate() {
            m[g] = reflected[l];
        }
    }
    StandardVector { exponent: m, strata: v.strata.clone() }
}

/// An element of the Milnor ring in standard-basis coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MilnorElement(pub Vec<Q>);

impl MilnorElement {
    pub fn zero(dim: usize) -> Self {
        MilnorElement(vec![Q::zero(); dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[index] = Q::one();
        v
    }

    pub fn coords(&self) -> &[Q] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        MilnorElement(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: &Q) -> Self {
        MilnorElement(self.0.iter().map(|a| a * c).collect())
    }

    /// Nonzero coordinates as `(index, coefficient)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.0.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }
}

/// Quotient of the polynomial ring by the Jacobian ideal of a quasihomogeneous
/// invertible polynomial, with a chosen monomial basis.
#[derive(Debug, Clone)]
pub struct MilnorRing {
    poly: InvertiblePolynomial,
    weights: Vec<Q>,
    top: Q,
    basis: Vec<Exponent>,
    degrees: Vec<Q>,
    index: HashMap<Exponent, usize>,
    normal_forms: HashMap<Exponent, MilnorElement>,
    table: Vec<Vec<MilnorElement>>,
    socle: usize,
    hessian_factor: Q,
    milnor_number: Q,
}

impl MilnorRing {
    /// The ring of `w^T` with the standard basis read off the blocks of `w`.
    pub fn for_dual(w: &InvertiblePolynomial) -> Result<(Self, Vec<StandardVector>)> {
        let vectors = standard_basis(w);
        let monomials = vectors.iter().map(|v| v.exponent.clone()).collect();
        let ring = MilnorRing::new(&w.dual(), Some(monomials))?;
        if ring.basis[ring.socle] != socle_vector(w) {
            return Err(Error::Internal("top-degree basis element is not the socle vector".into()));
        }
        let ordered = ring
            .basis
            .iter()
            .map(|e| vectors.iter().find(|v| &v.exponent == e).cloned().expect("same basis"))
            .collect();
        Ok((ring, ordered))
    }

    /// Builds the ring of `f`. Without a basis, one is chosen greedily per degree.
    pub fn new(f: &InvertiblePolynomial, basis: Option<Vec<Exponent>>) -> Result<Self> {
        let inv = derive_invariants(f)?;
        let weights = inv.weights.clone();
        let top = inv.central_charge.clone();
        let n = f.nvars();
        let fpoly = to_sparse(f);
        let partials: Vec<SparsePoly> = (0..n).map(|j| fpoly.derivative(j)).collect();

        let mut by_degree: BTreeMap<Q, Vec<Exponent>> = BTreeMap::new();
        enumerate_monomials(&weights, &top, &mut vec![0; n], 0, &mut by_degree);

        let requested: Option<std::collections::HashSet<Exponent>> =
            basis.as_ref().map(|b| b.iter().cloned().collect());
        if let Some(b) = &basis {
            if let Some(bad) = b.iter().find(|e| weighted_degree(e, &weights) > top) {
                return Err(Error::Internal(format!("basis monomial {bad:?} lies above the top degree")));
            }
        }

        // Per degree: RREF of the Jacobian span, nonstandard columns first.
        let mut chosen: Vec<Exponent> = Vec::new();
        let mut relations: Vec<(Exponent, Vec<(Exponent, Q)>)> = Vec::new();
        for (d, monos) in &by_degree {
            let col: HashMap<&Exponent, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
            let mut rows: Matrix<Q> = Vec::new();
            for (j, p) in partials.iter().enumerate() {
                let shift = d - (Q::one() - &weights[j]);
                let Some(us) = by_degree.get(&shift) else { continue };
                for u in us {
                    let mut row = vec![Q::zero(); monos.len()];
                    for (e, c) in p.terms() {
                        let prod: Exponent = e.iter().zip(u).map(|(a, b)| a + b).collect();
                        let idx = col[&prod];
                        row[idx] += c;
                    }
                    rows.push(row);
                }
            }
            let order: Vec<usize> = match &requested {
                Some(std) => {
                    let (non, st): (Vec<usize>, Vec<usize>) =
                        (0..monos.len()).partition(|&i| !std.contains(&monos[i]));
                    non.into_iter().chain(st).collect()
                }
                None => (0..monos.len()).rev().collect(),
            };
            let pivots = if rows.is_empty() { Vec::new() } else { rref_with_order(&mut rows, &order) };
            let standard: Vec<usize> = (0..monos.len()).filter(|i| !pivots.contains(i)).collect();
            if let Some(std) = &requested {
                let expected: Vec<usize> =
                    (0..monos.len()).filter(|&i| std.contains(&monos[i])).collect();
                if expected != standard {
                    return Err(Error::Internal(format!(
                        "standard monomials do not form a basis in degree {d}"
                    )));
                }
            }
            chosen.extend(standard.iter().map(|&i| monos[i].clone()));
            for (r, &p) in pivots.iter().enumerate() {
                let tail = standard
                    .iter()
                    .filter(|&&s| !rows[r][s].is_zero())
                    .map(|&s| (monos[s].clone(), -rows[r][s].clone()))
                    .collect();
                relations.push((monos[p].clone(), tail));
            }
        }

        let milnor_number = inv.milnor_number.clone();
        if int(chosen.len() as i64) != milnor_number {
            return Err(Error::Internal(format!(
                "graded pieces sum to {} but the Milnor number is {}",
                chosen.len(),
                milnor_number
            )));
        }
        if let Some(b) = &basis {
            if b.len() != chosen.len() {
                return Err(Error::Internal("basis size differs from the Milnor number".into()));
            }
        }
        chosen.sort_by(|a, b| {
            weighted_degree(a, &weights).cmp(&weighted_degree(b, &weights)).then_with(|| a.cmp(b))
        });
        let dim = chosen.len();
        let index: HashMap<Exponent, usize> = chosen.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut normal_forms: HashMap<Exponent, MilnorElement> = HashMap::new();
        for (e, &i) in &index {
            normal_forms.insert(e.clone(), MilnorElement::basis(dim, i));
        }
        for (e, tail) in relations {
            let mut v = MilnorElement::zero(dim);
            for (s, c) in tail {
                v.0[index[&s]] += c;
            }
            normal_forms.insert(e, v);
        }
        let degrees: Vec<Q> = chosen.iter().map(|e| weighted_degree(e, &weights)).collect();
        let tops: Vec<usize> = (0..dim).filter(|&i| degrees[i] == top).collect();
        let [socle] = tops.as_slice() else {
            return Err(Error::Internal(format!("{} basis elements in the top degree", tops.len())));
        };
        let socle = *socle;

        let mut ring = MilnorRing {
            poly: f.clone(),
            weights,
            top,
            basis: chosen,
            degrees,
            index,
            normal_forms,
            table: Vec::new(),
            socle,
            hessian_factor: Q::zero(),
            milnor_number,
        };
        ring.table = (0..dim)
            .map(|a| {
                (0..dim)
                    .map(|b| {
                        let e: Exponent = ring.basis[a].iter().zip(&ring.basis[b]).map(|(x, y)| x + y).collect();
                        ring.monomial_nf(&e)
                    })
                    .collect()
            })
            .collect();
        let hess = ring.normal_form(&ring.hessian());
        let h = hess.0[socle].clone();
        if h.is_zero() || hess.support().count() != 1 {
            return Err(Error::Internal("Hessian does not reduce to a nonzero socle multiple".into()));
        }
        ring.hessian_factor = h;
        Ok(ring)
    }

    pub fn polynomial(&self) -> &InvertiblePolynomial {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Exponent] {
        &self.basis
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn top_degree(&self) -> &Q {
        &self.top
    }

    pub fn degree(&self, i: usize) -> &Q {
        &self.degrees[i]
    }

    pub fn index_of(&self, e: &[u32]) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn socle(&self) -> usize {
        self.socle
    }

    pub fn unit(&self) -> usize {
        self.index[&vec![0; self.poly.nvars()]]
    }

    /// `h` in `NF(Hess) = h · soc`.
    pub fn hessian_factor(&self) -> &Q {
        &self.hessian_factor
    }

    pub fn milnor_number(&self) -> &Q {
        &self.milnor_number
    }

    pub fn monomial_nf(&self, e: &[u32]) -> MilnorElement {
        self.normal_forms.get(e).cloned().unwrap_or_else(|| MilnorElement::zero(self.dim()))
    }

    pub fn normal_form(&self, p: &SparsePoly) -> MilnorElement {
        p.terms().fold(MilnorElement::zero(self.dim()), |acc, (e, c)| {
            acc.add(&self.monomial_nf(e).scale(c))
        })
    }

    pub fn multiply(&self, a: &MilnorElement, b: &MilnorElement) -> MilnorElement {
        let mut out = MilnorElement::zero(self.dim());
        for (i, x) in a.support() {
            for (j, y) in b.support() {
                let c = x * y;
                for (k, z) in self.table[i][j].support() {
                    out.0[k] += &c * z;
                }
            }
        }
        out
    }

    /// Product of two basis elements.
    pub fn basis_product(&self, i: usize, j: usize) -> &MilnorElement {
        &self.table[i][j]
    }

    /// The Grothendieck residue, anchored so that `Res(Hess) = μ`.
    pub fn residue(&self, a: &MilnorElement) -> Q {
        &a.0[self.socle] * &self.milnor_number / &self.hessian_factor
    }

    /// The residue rescaled so that the socle has residue 1.
    pub fn normalized_residue(&self, a: &MilnorElement) -> Q {
        a.0[self.socle].clone()
    }

    pub fn residue_pair(&self, a: &MilnorElement, b: &MilnorElement) -> Q {
        self.residue(&self.multiply(a, b))
    }

    pub fn normalized_residue_pair(&self, a: &MilnorElement, b: &MilnorElement) -> Q {
        self.normalized_residue(&self.multiply(a, b))
    }

    /// Gram matrix of the normalized residue pairing on the basis.
    pub fn gram(&self) -> Matrix<Q> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.table[i][j].0[self.socle].clone()).collect())
            .collect()
    }

    /// The basis element `x_j` as a ring element.
    pub fn variable(&self, j: usize) -> MilnorElement {
        let mut e = vec![0; self.poly.nvars()];
        e[j] = 1;
        self.monomial_nf(&e)
    }

    /// Determinant of the matrix of second derivatives, by permutation expansion.
    pub fn hessian(&self) -> SparsePoly {
        let n = self.poly.nvars();
        let f = to_sparse(&self.poly);
        let second: Vec<Vec<SparsePoly>> =
            (0..n).map(|i| (0..n).map(|j| f.derivative(i).derivative(j)).collect()).collect();
        let mut total = SparsePoly::zero(n);
        permutations(n, &mut |perm, sign| {
            let mut term = SparsePoly::monomial(int(sign), vec![0; n]);
            for (i, &j) in perm.iter().enumerate() {
                if second[i][j].is_zero() {
                    return;
                }
                term = term.mul(&second[i][j]);
            }
            total = total.add(&term);
        });
        total
    }

    /// The partial derivative `∂_j f` as a polynomial.
    pub fn partial(&self, j: usize) -> SparsePoly {
        to_sparse(&self.poly).derivative(j)
    }
}

pub fn to_sparse(f: &InvertiblePolynomial) -> SparsePoly {
    let mut p = SparsePoly::zero(f.nvars());
    for row in f.monomials() {
        p.add_term(row.to_vec(), Q::one());
    }
    p
}

fn enumerate_monomials(
    weights: &[Q],
    top: &Q,
    current: &mut Vec<u32>,
    var: usize,
    out: &mut BTreeMap<Q, Vec<Exponent>>,
) {
    if var == weights.len() {
        out.entry(weighted_degree(current, weights)).or_default().push(current.clone());
        return;
    }
    loop {
        if &weighted_degree(current, weights) > top {
            break;
        }
        enumerate_monomials(weights, top, current, var + 1, out);
        current[var] += 1;
    }
    current[var] = 0;
}

/// Calls `f(permutation, sign)` for every permutation of `0..n` (Heap's algorithm).
fn permutations(n: usize, f: &mut dyn FnMut(&[usize], i64)) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    let mut sign = 1;
    f(&perm, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            f(&perm, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
