use crate::error::Result;
use crate::milnor::{complementary_vector, MilnorRing, StandardVector};
use crate::mirror::StateSpace;
use crate::poly::InvertiblePolynomial;
use crate::weights::{derive_invariants, enumerate_group, Invariants, SymmetryGroup};

/// Everything derived from one invertible polynomial `w`: its dual, invariants,
/// symmetry group, the Milnor ring of `w^T` and the mirror state space.
///
/// Basis indices are shared: index `i` names the standard vector `vectors()[i]`,
/// the ring basis monomial `ring().basis()[i]` and the state `θ(vectors()[i])`.
#[derive(Debug, Clone)]
pub struct Model {
    w: InvertiblePolynomial,
    dual: InvertiblePolynomial,
    invariants: Invariants,
    group: SymmetryGroup,
    ring: MilnorRing,
    vectors: Vec<StandardVector>,
    complements: Vec<usize>,
    state: StateSpace,
}

impl Model {
    pub fn new(w: InvertiblePolynomial) -> Result<Self> {
        let dual = w.dual();
        let invariants = derive_invariants(&w)?;
        let group = enumerate_group(&invariants)?;
        let (ring, vectors) = MilnorRing::for_dual(&w)?;
        let complements = vectors
            .iter()
            .map(|v| {
                let c = complementary_vector(&w, v);
                ring.index_of(&c.exponent).ok_or_else(|| {
                    crate::Error::Internal(format!("complement of {:?} is not standard", v.exponent))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let state = StateSpace::build(&w, &invariants, &ring, &vectors)?;
        Ok(Model { w, dual, invariants, group, ring, vectors, complements, state })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Model::new(text.parse()?)
    }

    pub fn w(&self) -> &InvertiblePolynomial {
        &self.w
    }

    pub fn dual(&self) -> &InvertiblePolynomial {
        &self.dual
    }

    pub fn invariants(&self) -> &Invariants {
        &self.invariants
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn ring(&self) -> &MilnorRing {
        &self.ring
    }

    pub fn vectors(&self) -> &[StandardVector] {
        &self.vectors
    }

    pub fn state(&self) -> &StateSpace {
        &self.state
    }

    pub fn nvars(&self) -> usize {
        self.w.nvars()
    }

    pub fn dim(&self) -> usize {
        self.ring.dim()
    }

    /// Index of the complementary vector of basis element `i`.
    pub fn complement(&self, i: usize) -> usize {
        self.complements[i]
    }

    pub fn unit(&self) -> usize {
        self.ring.unit()
    }

    pub fn socle(&self) -> usize {
        self.ring.socle()
    }

    /// Basis index of the monomial `x^e`, if it is a standard vector.
    pub fn index_of(&self, e: &[u32]) -> Option<usize> {
        self.ring.index_of(e)
    }
}
