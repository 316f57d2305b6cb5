//! Genus-zero reconstruction: K-vector bookkeeping, WDVV rewriting, the exact
//! four-point solve and the recursive evaluation of higher-point correlators.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{One, Zero};

use crate::correlator::{nonvanishing, seeds, CorrelatorKey};
use crate::error::{Error, Result};
use crate::linalg::{inverse, solve_particular, Equation, Insertion, Matrix, SparseSystem};
use crate::milnor::MilnorElement;
use crate::model::Model;
use crate::poly::BlockKind;
use crate::rational::{int, square_sum, to_bigint};
use crate::Q;

/// Highest number of marked points handled by [`Reconstructor`].
pub const MAX_POINTS: usize = 6;

/// A correlator of basis insertions, stored as sorted basis indices.
pub type BasisKey = Vec<usize>;

pub fn basis_key(mut indices: Vec<usize>) -> BasisKey {
    indices.sort_unstable();
    indices
}

/// The monomial key of basis insertions.
pub fn correlator_key(model: &Model, key: &[usize]) -> CorrelatorKey {
    CorrelatorKey::new(key.iter().map(|&i| model.ring().basis()[i].clone()).collect())
}

pub fn basis_nonvanishing(model: &Model, key: &[usize]) -> bool {
    nonvanishing(model, &correlator_key(model, key))
}

/// All multisets of `k` basis indices avoiding the unit.
pub fn non_unit_keys(model: &Model, k: usize) -> Vec<BasisKey> {
    let candidates: Vec<usize> = (0..model.dim()).filter(|&i| i != model.unit()).collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(c: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<BasisKey>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for idx in start..c.len() {
            cur.push(c[idx]);
            rec(c, idx, k, cur, out);
            cur.pop();
        }
    }
    rec(&candidates, 0, k, &mut current, &mut out);
    out
}

/// `b = E^{-1}(ℓ + P + Q + 2)` and `K = ℓ - b + 1` for a correlator
/// `⟨θ_n^{ℓ_n}, …, θ_1^{ℓ_1}, α, β⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KVector {
    pub ell: Vec<i64>,
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    pub b: Vec<i64>,
    pub k: Vec<i64>,
}

impl KVector {
    pub fn new(model: &Model, ell: &[u32], alpha: &[u32], beta: &[u32]) -> Result<Self> {
        let n = model.nvars();
        let rho = &model.invariants().rho;
        let rhs: Vec<Q> = (0..n).map(|i| int(ell[i] as i64 + alpha[i] as i64 + beta[i] as i64 + 2)).collect();
        let b = (0..n)
            .map(|i| {
                let v = (0..n).fold(Q::zero(), |acc, j| acc + &rho[i][j] * &rhs[j]);
                to_bigint(&v)
                    .and_then(|x| i64::try_from(x).ok())
                    .ok_or_else(|| Error::Precondition(format!("b_{} = {v} is not an integer", i + 1)))
            })
            .collect::<Result<Vec<i64>>>()?;
        let ell: Vec<i64> = ell.iter().map(|&x| x as i64).collect();
        let k = (0..n).map(|i| ell[i] - b[i] + 1).collect();
        Ok(KVector {
            p: alpha.iter().map(|&x| x as i64).collect(),
            q: beta.iter().map(|&x| x as i64).collect(),
            ell,
            b,
            k,
        })
    }

    /// Split a basis key into generator multiplicities and the two remaining
    /// insertions of highest degree; `None` if more than two insertions are not
    /// single generators.
    pub fn of_basis_key(model: &Model, key: &[usize]) -> Option<Result<Self>> {
        let n = model.nvars();
        let basis = model.ring().basis();
        let mut order: Vec<usize> = key.to_vec();
        order.sort_by(|a, b| model.ring().degree(*b).cmp(model.ring().degree(*a)).then(basis[*b].cmp(&basis[*a])));
        let is_generator = |i: usize| basis[i].iter().sum::<u32>() == 1;
        let non_generators: Vec<usize> = order.iter().copied().filter(|&i| !is_generator(i)).collect();
        if non_generators.len() > 2 {
            return None;
        }
        let mut special = non_generators;
        for &i in &order {
            if special.len() == 2 {
                break;
            }
            if is_generator(i) {
                special.push(i);
            }
        }
        if special.len() < 2 {
            return None;
        }
        let mut ell = vec![0u32; n];
        let mut used = special.clone();
        for &i in &order {
            if let Some(pos) = used.iter().position(|&u| u == i) {
                used.remove(pos);
                continue;
            }
            for (j, &e) in basis[i].iter().enumerate() {
                ell[j] += e;
            }
        }
        Some(KVector::new(model, &ell, &basis[special[0]], &basis[special[1]]))
    }

    pub fn sum(&self) -> i64 {
        self.k.iter().sum()
    }
}

/// Violations of the chain K-vector constraints, empty when the shape is allowed.
pub fn chain_shape_violations(model: &Model, kv: &KVector) -> Vec<String> {
    let w = model.w();
    let mut out = Vec::new();
    if !w.is_atomic() || w.blocks()[0].kind != BlockKind::Chain {
        out.push("K-vector constraints are stated for chains only".into());
        return out;
    }
    let vars = &w.blocks()[0].vars;
    let a: Vec<i64> = vars.iter().map(|&v| w.exponent(v) as i64).collect();
    let at = |v: &[i64], l: usize| v[vars[l]];
    let n = vars.len();
    if kv.sum() != 1 {
        out.push(format!("sum K = {}", kv.sum()));
    }
    for l in 0..n.saturating_sub(1) {
        let (ki, kj) = (at(&kv.k, l), at(&kv.k, l + 1));
        if ki <= 0 && ki + kj < 0 {
            out.push(format!("K_{} + K_{} = {} < 0", l + 1, l + 2, ki + kj));
        }
        if ki < 0 && ki + kj == 0 && (ki, kj) != (-1, 1) {
            out.push(format!("(K_{}, K_{}) = ({ki}, {kj})", l + 1, l + 2));
        }
        if (ki, kj) == (-1, 1) {
            let pq = at(&kv.p, l) + at(&kv.q, l);
            if at(&kv.ell, l) != 0 || at(&kv.ell, l + 1) != 0 || pq != 2 * a[l] - 2 {
                out.push(format!("(K_{}, K_{}) = (-1, 1) without l = 0 and p + q = 2a - 2", l + 1, l + 2));
            }
        }
    }
    let kn = at(&kv.k, n - 1);
    if kn < -1 || kn > at(&kv.ell, n - 1) {
        out.push(format!("K_n = {kn} outside [-1, l_n]"));
    }
    if kn == -1 {
        let pq = at(&kv.p, n - 1) + at(&kv.q, n - 1);
        if at(&kv.ell, n - 1) != 0 || pq != 2 * a[n - 1] - 2 {
            out.push("K_n = -1 without l_n = 0 and p_n + q_n = 2a_n - 2".into());
        }
    }
    if kn >= 0 {
        let local: Vec<i64> = (0..n).map(|l| at(&kv.k, l)).collect();
        if !concatenation_shape(&local) {
            out.push(format!("K = {local:?} is not a permitted concatenation"));
        }
    }
    out
}

/// Concatenations of `(0)` and `(-1, 1)` followed by `(1)`, or containing one
/// `(1)`, `(-1, 2)` or `(-2, 3)` and ending in `(0)`.
pub fn concatenation_shape(k: &[i64]) -> bool {
    fn parse(k: &[i64], special_used: bool, memo: &mut HashMap<(usize, bool), bool>, start: usize) -> bool {
        if let Some(&v) = memo.get(&(start, special_used)) {
            return v;
        }
        let rest = &k[start..];
        let result = if rest.is_empty() {
            false
        } else {
            let mut ok = false;
            if rest == [1] && !special_used {
                ok = true;
            }
            if rest == [0] && special_used {
                ok = true;
            }
            if !ok && rest[0] == 0 {
                ok = parse(k, special_used, memo, start + 1);
            }
            if !ok && rest.len() >= 2 && rest[..2] == [-1, 1] {
                ok = parse(k, special_used, memo, start + 2);
            }
            if !ok && !special_used {
                if rest[0] == 1 {
                    ok = parse(k, true, memo, start + 1);
                }
                if !ok && rest.len() >= 2 && (rest[..2] == [-1, 2] || rest[..2] == [-2, 3]) {
                    ok = parse(k, true, memo, start + 2);
                }
            }
            ok
        };
        memo.insert((start, special_used), result);
        result
    }
    parse(k, false, &mut HashMap::new(), 0)
}

/// The solved four-point sector.
#[derive(Debug, Clone)]
pub struct FourPointTable {
    /// Value of every nonvanishing four-point key.
    pub values: BTreeMap<BasisKey, Q>,
    pub equations: usize,
    pub rank: usize,
    /// Number of stored equations whose residual at the solution is nonzero.
    pub nonzero_residuals: usize,
}

/// A four-point WDVV instance on basis elements `(a, b, c, d)` with spectator `x`:
/// `⟨a•b,c,d,x⟩ + ⟨a,b,x,c•d⟩ - ⟨a•c,b,d,x⟩ - ⟨a,c,x,b•d⟩ = 0`.
fn four_point_wdvv(model: &Model, [a, b, c, d, x]: [usize; 5]) -> BTreeMap<BasisKey, Q> {
    let ring = model.ring();
    let mut terms: BTreeMap<BasisKey, Q> = BTreeMap::new();
    let mut add = |prod: &MilnorElement, others: [usize; 3], sign: &Q| {
        for (k, coeff) in prod.support() {
            if k == model.unit() || others.contains(&model.unit()) {
                continue;
            }
            let key = basis_key(vec![k, others[0], others[1], others[2]]);
            let entry = terms.entry(key.clone()).or_insert_with(Q::zero);
            *entry += coeff * sign;
            if entry.is_zero() {
                terms.remove(&key);
            }
        }
    };
    let (plus, minus) = (Q::one(), -Q::one());
    add(ring.basis_product(a, b), [c, d, x], &plus);
    add(ring.basis_product(c, d), [a, b, x], &plus);
    add(ring.basis_product(a, c), [b, d, x], &minus);
    add(ring.basis_product(b, d), [a, c, x], &minus);
    terms
}

fn seed_terms(model: &Model, key: &CorrelatorKey) -> BTreeMap<BasisKey, Q> {
    let elements: Vec<MilnorElement> = key.insertions().iter().map(|e| model.ring().monomial_nf(e)).collect();
    let mut terms = BTreeMap::new();
    expand(&elements, &mut Vec::new(), Q::one(), &mut |idx, c| {
        if idx.contains(&model.unit()) {
            return;
        }
        *terms.entry(basis_key(idx.to_vec())).or_insert_with(Q::zero) += c;
    });
    terms.retain(|_, v: &mut Q| !v.is_zero());
    terms
}

fn expand(elements: &[MilnorElement], prefix: &mut Vec<usize>, coeff: Q, f: &mut impl FnMut(&[usize], Q)) {
    let Some((first, rest)) = elements.split_first() else {
        f(prefix, coeff);
        return;
    };
    for (i, c) in first.support() {
        prefix.push(i);
        expand(rest, prefix, &coeff * c, f);
        prefix.pop();
    }
}

/// Five-tuples of non-unit basis indices whose degrees sum to `target`.
fn wdvv_tuples(model: &Model, target: Option<&Q>) -> Vec<[usize; 5]> {
    let ring = model.ring();
    let idx: Vec<usize> = (0..model.dim()).filter(|&i| i != model.unit()).collect();
    let mut out = Vec::new();
    for &a in &idx {
        for &b in &idx {
            for &c in &idx {
                if b > c {
                    continue;
                }
                for &d in &idx {
                    if a > d {
                        continue;
                    }
                    for &x in &idx {
                        let total = [a, b, c, d, x].iter().fold(Q::zero(), |acc, &i| acc + ring.degree(i));
                        if target.is_none_or(|t| &total == t) {
                            out.push([a, b, c, d, x]);
                        }
                    }
                }
            }
        }
    }
    out
}

struct KeyedSystem {
    index: HashMap<BasisKey, usize>,
    keys: Vec<BasisKey>,
    system: SparseSystem<Q>,
    stored: Vec<Equation<Q>>,
}

impl KeyedSystem {
    fn new(keys: Vec<BasisKey>) -> Self {
        let index = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let system = SparseSystem::new(keys.len());
        KeyedSystem { index, keys, system, stored: Vec::new() }
    }

    fn insert(&mut self, terms: &BTreeMap<BasisKey, Q>, rhs: Q) -> Insertion {
        let mut eq = Equation::new();
        for (key, c) in terms {
            if let Some(&col) = self.index.get(key) {
                eq.add_term(col, c.clone());
            }
        }
        eq.rhs = rhs;
        if eq.coeffs.is_empty() && eq.rhs.is_zero() {
            return Insertion::Redundant;
        }
        self.stored.push(eq.clone());
        self.system.insert(eq)
    }
}

/// Solve the four-point sector from WDVV and the `𝔉_i` seeds.
pub fn solve_four_point_sector(model: &Model) -> Result<FourPointTable> {
    if !model.w().is_atomic() {
        return Err(Error::Unsupported("four-point reconstruction needs a single atomic block".into()));
    }
    let keys: Vec<BasisKey> = non_unit_keys(model, 4).into_iter().filter(|k| basis_nonvanishing(model, k)).collect();
    let mut ks = KeyedSystem::new(keys);
    for (key, value) in seeds(model) {
        ks.insert(&seed_terms(model, &key), value);
    }
    let target = &model.invariants().central_charge + Q::one();
    for t in wdvv_tuples(model, Some(&target)) {
        ks.insert(&four_point_wdvv(model, t), Q::zero());
    }
    if ks.system.contradictions() > 0 {
        return Err(Error::Inconsistent(format!(
            "{} contradictory four-point equations",
            ks.system.contradictions()
        )));
    }
    let solution = ks.system.solution().ok_or_else(|| {
        Error::Underdetermined(format!(
            "four-point system has rank {} for {} unknowns",
            ks.system.rank(),
            ks.keys.len()
        ))
    })?;
    let nonzero_residuals =
        ks.stored.iter().filter(|eq| !SparseSystem::residual(eq, &solution).is_zero()).count();
    Ok(FourPointTable {
        values: ks.keys.iter().cloned().zip(solution).collect(),
        equations: ks.system.equations(),
        rank: ks.system.rank(),
        nonzero_residuals,
    })
}

/// Four-point values determined by WDVV and the seeds when every non-unit key
/// is an unknown, including keys that fail the nonvanishing test.
#[derive(Debug, Clone)]
pub struct SelectionAudit {
    pub determined: BTreeMap<BasisKey, Q>,
    pub undetermined: usize,
    pub contradictions: usize,
}

pub fn audit_four_point_selection(model: &Model) -> Result<SelectionAudit> {
    if !model.w().is_atomic() {
        return Err(Error::Unsupported("four-point reconstruction needs a single atomic block".into()));
    }
    let mut ks = KeyedSystem::new(non_unit_keys(model, 4));
    for (key, value) in seeds(model) {
        ks.insert(&seed_terms(model, &key), value);
    }
    for t in wdvv_tuples(model, None) {
        ks.insert(&four_point_wdvv(model, t), Q::zero());
    }
    let values = ks.system.determined();
    let mut determined = BTreeMap::new();
    let mut undetermined = 0;
    for (key, v) in ks.keys.iter().zip(values) {
        match v {
            Some(v) => {
                determined.insert(key.clone(), v);
            }
            None => undetermined += 1,
        }
    }
    Ok(SelectionAudit { determined, undetermined, contradictions: ks.system.contradictions() })
}

/// An element insertion of a correlator.
pub type Insertions = Vec<MilnorElement>;

/// One splitting term `Σ_{μν} ⟨left, e_μ⟩ η^{μν} ⟨e_ν, right⟩`.
#[derive(Debug, Clone)]
pub struct SplitTerm {
    pub coefficient: Q,
    pub left: Insertions,
    pub right: Insertions,
}

/// Right-hand side of a WDVV rewrite of `⟨ξ_1, …, ξ_{k-3}, γ, δ, ε•φ⟩`.
#[derive(Debug, Clone)]
pub struct Rewrite {
    pub terms: Vec<(Q, Insertions)>,
    pub splits: Vec<SplitTerm>,
}

/// Coefficient-form WDVV: isolates `⟨ξ, γ, δ, ε•φ⟩` on the left.
pub fn wdvv_rewrite(
    model: &Model,
    spectators: &[MilnorElement],
    gamma: &MilnorElement,
    delta: &MilnorElement,
    epsilon: &MilnorElement,
    phi: &MilnorElement,
) -> Rewrite {
    let ring = model.ring();
    let with = |extra: [&MilnorElement; 3]| -> Insertions {
        spectators.iter().cloned().chain(extra.into_iter().cloned()).collect()
    };
    let terms = vec![
        (Q::one(), with([&ring.multiply(epsilon, gamma), phi, delta])),
        (Q::one(), with([epsilon, gamma, &ring.multiply(phi, delta)])),
        (-Q::one(), with([epsilon, phi, &ring.multiply(gamma, delta)])),
    ];
    let mut splits = Vec::new();
    let m = spectators.len();
    for mask in 1..(1u32 << m) - 1 {
        let (i1, i2): (Vec<_>, Vec<_>) = (0..m).partition(|&s| mask & (1 << s) != 0);
        let pick = |idx: &[usize]| -> Insertions { idx.iter().map(|&s| spectators[s].clone()).collect() };
        let side = |x: &MilnorElement, y: &MilnorElement, idx: &[usize]| -> Insertions {
            let mut v = vec![x.clone(), y.clone()];
            v.extend(pick(idx));
            v
        };
        splits.push(SplitTerm { coefficient: Q::one(), left: side(epsilon, gamma, &i1), right: side(phi, delta, &i2) });
        splits.push(SplitTerm { coefficient: -Q::one(), left: side(epsilon, phi, &i1), right: side(gamma, delta, &i2) });
    }
    Rewrite { terms, splits }
}

struct Choice {
    pos: usize,
    j: usize,
    phi: MilnorElement,
    g: usize,
    d: usize,
    strict: bool,
}

/// Memoized evaluation of genus-zero correlators with up to [`MAX_POINTS`] insertions.
pub struct Reconstructor<'a> {
    model: &'a Model,
    four: FourPointTable,
    eta_inverse: Matrix<Q>,
    memo: HashMap<BasisKey, Q>,
    in_progress: HashSet<BasisKey>,
    max_points: usize,
    /// Number of WDVV rewrites performed.
    pub rewrites: usize,
}

impl<'a> Reconstructor<'a> {
    pub fn new(model: &'a Model, max_points: usize) -> Result<Self> {
        if max_points > MAX_POINTS {
            return Err(Error::Precondition(format!("at most {MAX_POINTS} points are supported, got {max_points}")));
        }
        let four = solve_four_point_sector(model)?;
        let eta_inverse = inverse(&model.ring().gram())
            .ok_or_else(|| Error::Internal("residue pairing is degenerate".into()))?;
        Ok(Reconstructor { model, four, eta_inverse, memo: HashMap::new(), in_progress: HashSet::new(), max_points, rewrites: 0 })
    }

    pub fn four_point(&self) -> &FourPointTable {
        &self.four
    }

    /// Multilinear value of a correlator of ring elements.
    pub fn correlator(&mut self, insertions: &[MilnorElement]) -> Result<Q> {
        let mut keys: Vec<(BasisKey, Q)> = Vec::new();
        expand(insertions, &mut Vec::new(), Q::one(), &mut |idx, c| keys.push((basis_key(idx.to_vec()), c)));
        let mut total = Q::zero();
        for (key, c) in keys {
            let v = self.value(&key)?;
            if !v.is_zero() {
                total += c * v;
            }
        }
        Ok(total)
    }

    /// Value of a correlator of basis insertions.
    pub fn value(&mut self, key: &[usize]) -> Result<Q> {
        let key = basis_key(key.to_vec());
        let k = key.len();
        if k < 3 {
            return Err(Error::Precondition(format!("a correlator needs at least 3 insertions, got {k}")));
        }
        if k > self.max_points {
            return Err(Error::Precondition(format!("{k} points exceed the cap {}", self.max_points)));
        }
        if k == 3 {
            return Ok(self.model.three_point_basis(key[0], key[1], key[2]));
        }
        if key.contains(&self.model.unit()) || !basis_nonvanishing(self.model, &key) {
            return Ok(Q::zero());
        }
        if k == 4 {
            return Ok(self.four.values.get(&key).cloned().unwrap_or_else(Q::zero));
        }
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        if self.in_progress.contains(&key) {
            return Err(Error::Unsupported(format!("{} recurs in its own rewrite", correlator_key(self.model, &key))));
        }
        let v = self.reduce(&key)?;
        self.memo.insert(key, v.clone());
        Ok(v)
    }

    fn measure(&self, key: &[usize]) -> Q {
        let degrees: Vec<Q> = key.iter().map(|&i| self.model.ring().degree(i).clone()).collect();
        square_sum(&degrees)
    }

    /// Write `e_xi = x_j • φ` with `φ` homogeneous of positive degree.
    fn factor(&self, xi: usize, j: usize) -> Option<MilnorElement> {
        let ring = self.model.ring();
        let eps = ring.variable(j);
        if eps.is_zero() {
            return None;
        }
        let target = ring.degree(xi) - &ring.weights()[j];
        if target <= Q::zero() {
            return None;
        }
        let columns: Vec<usize> = (0..ring.dim()).filter(|&i| ring.degree(i) == &target).collect();
        if columns.is_empty() {
            return None;
        }
        let products: Vec<MilnorElement> =
            columns.iter().map(|&c| ring.multiply(&eps, &MilnorElement::basis(ring.dim(), c))).collect();
        let m: Matrix<Q> = (0..ring.dim()).map(|r| products.iter().map(|p| p.0[r].clone()).collect()).collect();
        let rhs = MilnorElement::basis(ring.dim(), xi).0;
        let x = solve_particular(&m, &rhs)?;
        let mut phi = MilnorElement::zero(ring.dim());
        for (c, v) in columns.iter().zip(x) {
            phi.0[*c] = v;
        }
        Some(phi)
    }

    /// Every usable WDVV rewrite of `key`: strict ones (the degree spread
    /// grows in every term) first, then those that keep it level.
    fn choices(&self, key: &[usize]) -> Vec<Choice> {
        let ring = self.model.ring();
        let mut positions: Vec<usize> = (0..key.len()).collect();
        positions.sort_by(|&a, &b| ring.degree(key[b]).cmp(ring.degree(key[a])));
        let mut seen = HashSet::new();
        let (mut strict, mut level) = (Vec::new(), Vec::new());
        for &pos in &positions {
            for j in (0..self.model.nvars()).rev() {
                let Some(phi) = self.factor(key[pos], j) else { continue };
                let d_phi = ring.degree(key[pos]) - &ring.weights()[j];
                let d_eps = &ring.weights()[j];
                for g in (0..key.len()).filter(|&g| g != pos) {
                    for d in (0..key.len()).filter(|&d| d != pos && d != g) {
                        let (dg, dd) = (ring.degree(key[g]), ring.degree(key[d]));
                        if dg < &d_phi || dd < d_eps || !seen.insert((key[pos], j, key[g], key[d])) {
                            continue;
                        }
                        let choice = Choice { pos, j, phi: phi.clone(), g, d, strict: dg > &d_phi && dd > d_eps };
                        if choice.strict {
                            strict.push(choice);
                        } else {
                            level.push(choice);
                        }
                    }
                }
            }
        }
        strict.extend(level);
        strict
    }

    fn reduce(&mut self, key: &[usize]) -> Result<Q> {
        self.in_progress.insert(key.to_vec());
        let result = self.reduce_by_choices(key);
        self.in_progress.remove(key);
        result
    }

    fn reduce_by_choices(&mut self, key: &[usize]) -> Result<Q> {
        let dim = self.model.dim();
        let basis = |i: usize| MilnorElement::basis(dim, i);
        for c in self.choices(key) {
            let spectators: Vec<MilnorElement> =
                (0..key.len()).filter(|&p| p != c.pos && p != c.g && p != c.d).map(|p| basis(key[p])).collect();
            let epsilon = self.model.ring().variable(c.j);
            let rewrite = wdvv_rewrite(self.model, &spectators, &basis(key[c.g]), &basis(key[c.d]), &epsilon, &c.phi);
            self.rewrites += 1;
            match self.evaluate_rewrite(key, &rewrite, c.strict) {
                Err(Error::Unsupported(_)) => continue,
                other => return other,
            }
        }
        if self.is_chain() {
            if let Some(Ok(kv)) = KVector::of_basis_key(self.model, key) {
                if !chain_shape_violations(self.model, &kv).is_empty() {
                    return Ok(Q::zero());
                }
            }
        }
        Err(Error::Unsupported(format!("no WDVV rewrite applies to {}", correlator_key(self.model, key))))
    }

    fn is_chain(&self) -> bool {
        self.model.w().blocks().iter().all(|b| b.kind == BlockKind::Chain)
    }

    fn evaluate_rewrite(&mut self, key: &[usize], rewrite: &Rewrite, strict: bool) -> Result<Q> {
        let before = self.measure(key);
        let mut total = Q::zero();
        for (c, insertions) in &rewrite.terms {
            let mut keys: Vec<(BasisKey, Q)> = Vec::new();
            expand(insertions, &mut Vec::new(), Q::one(), &mut |idx, v| keys.push((basis_key(idx.to_vec()), v)));
            for (k, v) in keys {
                let after = self.measure(&k);
                if after < before || (strict && after == before) {
                    return Err(Error::Internal(format!(
                        "rewrite of {} does not increase the degree spread",
                        correlator_key(self.model, key)
                    )));
                }
                let value = self.value(&k)?;
                total += c * v * value;
            }
        }
        for split in &rewrite.splits {
            total += &split.coefficient * self.split_value(split)?;
        }
        Ok(total)
    }

    fn split_value(&mut self, split: &SplitTerm) -> Result<Q> {
        let dim = self.model.dim();
        let mut left = Vec::with_capacity(dim);
        for mu in 0..dim {
            let mut ins = split.left.clone();
            ins.push(MilnorElement::basis(dim, mu));
            left.push(self.correlator(&ins)?);
        }
        let mut total = Q::zero();
        for nu in 0..dim {
            let weight = (0..dim).fold(Q::zero(), |acc, mu| acc + &left[mu] * &self.eta_inverse[mu][nu]);
            if weight.is_zero() {
                continue;
            }
            let mut ins = vec![MilnorElement::basis(dim, nu)];
            ins.extend(split.right.iter().cloned());
            total += weight * self.correlator(&ins)?;
        }
        Ok(total)
    }
}

/// Five-point values from a direct solve of every five-point WDVV instance,
/// with four-point data as constants.
pub fn solve_five_point_directly(model: &Model, four: &FourPointTable) -> Result<BTreeMap<BasisKey, Q>> {
    let ring = model.ring();
    let dim = model.dim();
    let keys: Vec<BasisKey> = non_unit_keys(model, 5).into_iter().filter(|k| basis_nonvanishing(model, k)).collect();
    let mut ks = KeyedSystem::new(keys);
    let eta_inverse = inverse(&ring.gram()).ok_or_else(|| Error::Internal("degenerate pairing".into()))?;
    let four_value = |k: BasisKey| -> Q {
        if k.contains(&model.unit()) {
            Q::zero()
        } else {
            four.values.get(&basis_key(k)).cloned().unwrap_or_else(Q::zero)
        }
    };
    let idx: Vec<usize> = (0..dim).filter(|&i| i != model.unit()).collect();
    let target = &model.invariants().central_charge + int(2);
    for &a in &idx {
        for &b in &idx {
            for &c in &idx {
                if b > c {
                    continue;
                }
                for &d in &idx {
                    for &x in &idx {
                        for &y in &idx {
                            if x > y {
                                continue;
                            }
                            let total = [a, b, c, d, x, y].iter().fold(Q::zero(), |acc, &i| acc + ring.degree(i));
                            if total != target {
                                continue;
                            }
                            let mut terms: BTreeMap<BasisKey, Q> = BTreeMap::new();
                            let mut push = |prod: &MilnorElement, rest: [usize; 4], sign: Q| {
                                for (k, v) in prod.support() {
                                    let key = basis_key(vec![k, rest[0], rest[1], rest[2], rest[3]]);
                                    *terms.entry(key).or_insert_with(Q::zero) += v * &sign;
                                }
                            };
                            push(ring.basis_product(a, b), [c, d, x, y], Q::one());
                            push(ring.basis_product(c, d), [a, b, x, y], Q::one());
                            push(ring.basis_product(a, c), [b, d, x, y], -Q::one());
                            push(ring.basis_product(b, d), [a, c, x, y], -Q::one());
                            terms.retain(|k, v| !v.is_zero() && !k.contains(&model.unit()));
                            let mut constant = Q::zero();
                            for (s1, s2) in [(x, y), (y, x)] {
                                for mu in 0..dim {
                                    let l_ab = four_value(vec![a, b, s1, mu]);
                                    let l_ac = four_value(vec![a, c, s1, mu]);
                                    if l_ab.is_zero() && l_ac.is_zero() {
                                        continue;
                                    }
                                    for nu in 0..dim {
                                        let e = &eta_inverse[mu][nu];
                                        if e.is_zero() {
                                            continue;
                                        }
                                        constant += &l_ab * e * four_value(vec![nu, c, d, s2]);
                                        constant -= &l_ac * e * four_value(vec![nu, b, d, s2]);
                                    }
                                }
                            }
                            ks.insert(&terms, -constant);
                        }
                    }
                }
            }
        }
    }
    if ks.system.contradictions() > 0 {
        return Err(Error::Inconsistent(format!("{} contradictory five-point equations", ks.system.contradictions())));
    }
    let solution = ks.system.solution().ok_or_else(|| {
        Error::Underdetermined(format!("five-point system has rank {} for {} unknowns", ks.system.rank(), ks.keys.len()))
    })?;
    Ok(ks.keys.into_iter().zip(solution).collect())
}

/// One stored prepotential coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepotentialEntry {
    pub key: BasisKey,
    pub value: Q,
    /// `value / ∏ multiplicity!`, the coefficient of `∏ t^{m}` in the potential.
    pub coefficient: Q,
}

/// All nonzero primary correlators with `3 <= k <= max_k`.
pub fn prepotential(model: &Model, max_k: usize) -> Result<Vec<PrepotentialEntry>> {
    let mut r = Reconstructor::new(model, max_k)?;
    let mut out = Vec::new();
    for k in 3..=max_k {
        let keys = if k == 3 {
            let mut all = Vec::new();
            for a in 0..model.dim() {
                for b in a..model.dim() {
                    for c in b..model.dim() {
                        all.push(vec![a, b, c]);
                    }
                }
            }
            all
        } else {
            non_unit_keys(model, k)
        };
        for key in keys {
            let value = r.value(&key)?;
            if value.is_zero() {
                continue;
            }
            let mut denominator = Q::one();
            let mut counts: BTreeMap<usize, i64> = BTreeMap::new();
            for &i in &key {
                *counts.entry(i).or_default() += 1;
            }
            for &m in counts.values() {
                denominator *= (1..=m).map(int).fold(Q::one(), |acc, x| acc * x);
            }
            out.push(PrepotentialEntry { coefficient: &value / denominator, key, value });
        }
    }
    Ok(out)
}
