//! Genus-zero selection rules, boundary decorations on four-pointed curves,
//! the Chiodo degree-one class and the special four-point correlators.

use std::fmt;
use std::sync::OnceLock;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::milnor::MilnorElement;
use crate::model::Model;
use crate::poly::BlockKind;
use crate::rational::{bernoulli2, int, is_integer, ratio, to_i64};
use crate::sparse::{format_monomial, weighted_degree, Exponent};
use crate::weights::{GroupElement, Invariants};
use crate::Q;

/// A multiset of insertions `∏_i θ_i^{e_i}`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrelatorKey(Vec<Exponent>);

impl CorrelatorKey {
    pub fn new(mut insertions: Vec<Exponent>) -> Self {
        insertions.sort();
        CorrelatorKey(insertions)
    }

    pub fn insertions(&self) -> &[Exponent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for CorrelatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| format_monomial(e)).collect();
        write!(f, "<{}>", parts.join(", "))
    }
}

/// Genus-zero sector decorations of the marked points.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoration {
    pub gammas: Vec<GroupElement>,
}

impl Decoration {
    pub fn new(gammas: Vec<GroupElement>) -> Self {
        Decoration { gammas }
    }

    /// Decoration of a key: each insertion `x^e` sits in sector `I(e)`.
    pub fn of_key(inv: &Invariants, key: &CorrelatorKey) -> Self {
        Decoration { gammas: key.insertions().iter().map(|e| inv.i_map(e)).collect() }
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `deg L_j = (r - 2) q_j - Σ_i θ_{γ_i}^{(j)}`, not necessarily integral.
    pub fn line_bundle_degrees(&self, inv: &Invariants) -> Vec<Q> {
        let r = int(self.gammas.len() as i64 - 2);
        (0..inv.nvars())
            .map(|j| {
                self.gammas.iter().fold(&r * &inv.weights[j], |acc, g| acc - &g.theta()[j])
            })
            .collect()
    }

    /// Every line bundle degree is an integer.
    pub fn selection_rule(&self, inv: &Invariants) -> bool {
        self.line_bundle_degrees(inv).iter().all(is_integer)
    }

    fn integral_degrees(&self, inv: &Invariants) -> Result<Vec<i64>> {
        self.line_bundle_degrees(inv)
            .iter()
            .map(|d| to_i64(d).ok_or_else(|| Error::Precondition(format!("decoration fails the selection rule: degree {d}"))))
            .collect()
    }
}

/// One boundary stratum of the four-pointed moduli: markings `split.0` and
/// `split.1` share a component whose node carries `node_plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGraph {
    pub split: (usize, usize),
    pub node_plus: GroupElement,
    pub node_minus: GroupElement,
}

pub fn boundary_decorations(inv: &Invariants, d: &Decoration) -> Result<[BoundaryGraph; 3]> {
    if d.len() != 4 {
        return Err(Error::Precondition(format!("boundary graphs need 4 markings, got {}", d.len())));
    }
    if !d.selection_rule(inv) {
        return Err(Error::Precondition("decoration fails the selection rule".into()));
    }
    let graph = |b: usize| {
        let (ga, gb) = (&d.gammas[0], &d.gammas[b]);
        let node_plus = GroupElement::new(
            (0..inv.nvars()).map(|j| &inv.weights[j] - &ga.theta()[j] - &gb.theta()[j]),
        );
        let node_minus = node_plus.inverse();
        BoundaryGraph { split: (0, b), node_plus, node_minus }
    };
    Ok([graph(1), graph(2), graph(3)])
}

/// The degree-one Chiodo class of `L_j` integrated over the four-pointed
/// moduli, with every fundamental-class integral equal to one.
pub fn chiodo_t(inv: &Invariants, j: usize, d: &Decoration) -> Result<Q> {
    let graphs = boundary_decorations(inv, d)?;
    let half = ratio(1, 2);
    let markings = d.gammas.iter().fold(Q::zero(), |acc, g| acc + bernoulli2(&g.theta()[j]));
    let nodes = graphs.iter().fold(Q::zero(), |acc, g| acc + bernoulli2(&g.node_plus.theta()[j]));
    Ok(half * (markings - nodes - bernoulli2(&inv.weights[j])))
}

/// Insertion degree `deg x^e` in the graded ring of `w^T`.
pub fn insertion_degree(model: &Model, e: &[u32]) -> Q {
    weighted_degree(e, model.ring().weights())
}

/// Integrality of `-2q_j - Σ ρ^{(j)} e` and the degree count `ĉ + k - 3`.
pub fn nonvanishing(model: &Model, key: &CorrelatorKey) -> bool {
    let inv = model.invariants();
    let integral = (0..inv.nvars()).all(|j| {
        let total = key.insertions().iter().fold(int(-2) * &inv.weights[j], |acc, e| {
            e.iter().enumerate().fold(acc, |acc, (i, &ei)| acc - &inv.rho[j][i] * int(ei as i64))
        });
        is_integer(&total)
    });
    integral && degree_matches(model, key)
}

/// `Σ deg = ĉ + k - 3`.
pub fn degree_matches(model: &Model, key: &CorrelatorKey) -> bool {
    let total = key.insertions().iter().fold(Q::zero(), |acc, e| acc + insertion_degree(model, e));
    total == &model.invariants().central_charge + int(key.len() as i64 - 3)
}

/// The key of `𝔉_i`: `⟨θ_i, θ_i, θ_{i-1} θ_i^{a_i-2}, θ(soc)⟩`.
///
/// Defined for the last variable of a chain, every loop variable and every
/// Fermat variable, whenever no insertion vanishes in the ring.
pub fn special_key(model: &Model, i: usize) -> Option<CorrelatorKey> {
    let n = model.nvars();
    let (_, block) = model.w().block_of(i);
    let l = block.local(i)?;
    let a = model.w().exponent(i);
    let prev = match block.kind {
        BlockKind::Fermat => None,
        BlockKind::Chain if l + 1 == block.len() => Some(block.vars[l - 1]),
        BlockKind::Chain => return None,
        BlockKind::Loop => Some(block.vars[(l + block.len() - 1) % block.len()]),
    };
    let mut vi = vec![0; n];
    vi[i] = 1;
    let mut third = vec![0; n];
    third[i] = a.checked_sub(2)?;
    if let Some(p) = prev {
        third[p] += 1;
    }
    let soc = model.ring().basis()[model.socle()].clone();
    let key = CorrelatorKey::new(vec![vi.clone(), vi, third, soc]);
    let nonzero = key.insertions().iter().all(|e| !model.ring().monomial_nf(e).is_zero());
    let non_unit = key.insertions().iter().all(|e| e.iter().any(|&x| x > 0));
    (nonzero && non_unit).then_some(key)
}

/// `𝔉_i = -q_i`.
pub fn four_point_special(model: &Model, i: usize) -> Q {
    -model.invariants().weights[i].clone()
}

/// The nonconcave shapes, after rotating a loop so that `i` is last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonconcaveType {
    /// Loop with `n >= 3` and `a_i = 2`.
    A,
    /// Two-variable loop with `a_i = 2` and `a_p >= 3`.
    B,
    /// Two-variable loop with both exponents 2.
    C,
    /// Chain ending in `x_i^2`.
    D,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FourPointClass {
    /// `𝔉_i = -a_p T_p + T_i` with `p` the predecessor of `i`.
    Nonconcave { kind: NonconcaveType, i: usize, p: usize },
    /// Exactly one bundle of degree -2, all others -1.
    Concave { j0: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiodoEvaluation {
    pub key: CorrelatorKey,
    pub degrees: Vec<i64>,
    pub class: FourPointClass,
    /// `T_j` for every variable.
    pub t: Vec<Q>,
    pub value: Q,
}

/// The sign relating the concave Euler class to `T_{j0}`, fixed once against
/// `𝔉 = -1/3` for `x^3`.
pub fn concave_sign() -> &'static Q {
    static SIGN: OnceLock<Q> = OnceLock::new();
    SIGN.get_or_init(|| {
        let model = Model::from_text("x1^3").expect("x1^3 is invertible");
        let key = special_key(&model, 0).expect("x1^3 has a special key");
        let d = Decoration::of_key(model.invariants(), &key);
        let t = chiodo_t(model.invariants(), 0, &d).expect("x1^3 special key is admissible");
        four_point_special(&model, 0) / t
    })
}

fn classify(model: &Model, i: usize, degrees: &[i64]) -> Option<FourPointClass> {
    let (_, block) = model.w().block_of(i);
    let l = block.local(i)?;
    let n = block.len();
    let exponent = |var: usize| model.w().exponent(var);
    if exponent(i) == 2 {
        let shape = match block.kind {
            BlockKind::Loop if n >= 3 => Some((NonconcaveType::A, block.vars[(l + n - 1) % n])),
            BlockKind::Loop => {
                let p = block.vars[(l + 1) % 2];
                let kind = if exponent(p) >= 3 { NonconcaveType::B } else { NonconcaveType::C };
                Some((kind, p))
            }
            BlockKind::Chain if l + 1 == n => Some((NonconcaveType::D, block.vars[l - 1])),
            _ => None,
        };
        if let Some((kind, p)) = shape {
            return Some(FourPointClass::Nonconcave { kind, i, p });
        }
    }
    let minus_two: Vec<usize> = (0..degrees.len()).filter(|&j| degrees[j] == -2).collect();
    let rest_ok = degrees.iter().all(|&d| d == -1 || d == -2);
    match (minus_two.as_slice(), rest_ok) {
        ([j0], true) => Some(FourPointClass::Concave { j0: *j0 }),
        _ => None,
    }
}

/// `𝔉_i` from the Chiodo class: nonconcave correlators use
/// `-a_p T_p + T_i`, concave ones the calibrated `s T_{j0}`.
pub fn four_point_via_chiodo(model: &Model, i: usize) -> Result<ChiodoEvaluation> {
    let key = special_key(model, i)
        .ok_or_else(|| Error::Precondition(format!("no special four-point key for variable {}", i + 1)))?;
    let inv = model.invariants();
    let d = Decoration::of_key(inv, &key);
    let degrees = d.integral_degrees(inv)?;
    let t = (0..model.nvars()).map(|j| chiodo_t(inv, j, &d)).collect::<Result<Vec<_>>>()?;
    let class = classify(model, i, &degrees)
        .ok_or_else(|| Error::Unclassified(format!("{key} has line bundle degrees {degrees:?}")))?;
    let value = match class {
        FourPointClass::Nonconcave { i, p, .. } => -int(model.w().exponent(p) as i64) * &t[p] + &t[i],
        FourPointClass::Concave { j0 } => concave_sign() * &t[j0],
    };
    Ok(ChiodoEvaluation { key, degrees, class, t, value })
}

/// Every `𝔉_i` key with its value `-q_i`.
pub fn seeds(model: &Model) -> Vec<(CorrelatorKey, Q)> {
    (0..model.nvars())
        .filter_map(|i| special_key(model, i).map(|k| (k, four_point_special(model, i))))
        .collect()
}

/// Reduce an insertion `x^e` to ring coordinates.
pub fn insertion_element(model: &Model, e: &[u32]) -> MilnorElement {
    model.ring().monomial_nf(e)
}

/// Three-point value of monomial insertions.
pub fn three_point_key(model: &Model, key: &CorrelatorKey) -> Result<Q> {
    if key.len() != 3 {
        return Err(Error::Precondition(format!("{key} is not a three-point key")));
    }
    let mut total = MilnorElement::basis(model.dim(), model.unit());
    for e in key.insertions() {
        total = model.ring().multiply(&total, &insertion_element(model, e));
    }
    Ok(model.ring().normalized_residue(&total))
}

impl fmt::Display for FourPointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FourPointClass::Nonconcave { kind, i, p } => {
                write!(f, "nonconcave type {kind:?} (i={}, p={})", i + 1, p + 1)
            }
            FourPointClass::Concave { j0 } => write!(f, "concave(j0={})", j0 + 1),
        }
    }
}
