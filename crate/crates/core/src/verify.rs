//! Per-polynomial consistency checks grouped by acceptance criterion.

use std::fmt::Display;

use num_traits::{One, Zero};

use crate::correlator::{four_point_special, four_point_via_chiodo, special_key, FourPointClass, NonconcaveType};
use crate::mirror::StateElement;
use crate::poly::BlockKind;
use crate::rational::ratio;
use crate::reconstruction::{
    audit_four_point_selection, basis_nonvanishing, chain_shape_violations, non_unit_keys, solve_five_point_directly,
    solve_four_point_sector, KVector, Reconstructor,
};
use crate::weights::derive_invariants;
use crate::{Model, Q};

/// Largest Milnor number for which the five-point cross-check runs.
pub const FIVE_POINT_MAX_MU: usize = 9;
/// Largest group order for which the selection audit runs.
pub const SELECTION_MAX_GROUP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub got: String,
}

impl Check {
    fn compare(criterion: u8, name: impl Into<String>, expected: impl Display, got: impl Display) -> Self {
        let (expected, got) = (expected.to_string(), got.to_string());
        Check { criterion, name: name.into(), passed: expected == got, expected, got }
    }

    fn failure(criterion: u8, name: impl Into<String>, expected: impl Display, err: impl Display) -> Self {
        Check { criterion, name: name.into(), passed: false, expected: expected.to_string(), got: format!("error: {err}") }
    }

    /// A check that counts mismatches, passing when there are none.
    fn count(criterion: u8, name: impl Into<String>, total: usize, bad: &[String]) -> Self {
        let got = match bad.first() {
            None => format!("0 of {total} mismatched"),
            Some(first) => format!("{} of {total} mismatched, first {first}", bad.len()),
        };
        Check { criterion, name: name.into(), passed: bad.is_empty(), expected: format!("0 of {total} mismatched"), got }
    }
}

/// Every check that applies to `model`, in criterion order.
pub fn verify(model: &Model) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(nonconcave_closed_forms(model));
    out.extend(four_point_paths(model));
    out.push(twisted_rank(model));
    out.push(frobenius(model));
    out.push(pairing(model));
    out.push(jacobian(model));
    out.extend(hessian(model));
    if model.w().is_atomic() {
        out.extend(wdvv(model));
        out.extend(audits(model));
    }
    out
}

/// Closed forms of `T_p`, `T_i` and `𝔉_i` for the nonconcave shapes with two
/// distinguished variables.
fn nonconcave_closed_forms(model: &Model) -> Vec<Check> {
    let mut out = Vec::new();
    for i in 0..model.nvars() {
        let Ok(eval) = four_point_via_chiodo(model, i) else { continue };
        let FourPointClass::Nonconcave { kind, p, .. } = eval.class else { continue };
        let ap = model.w().exponent(p) as i64;
        let expected = match kind {
            NonconcaveType::A => None,
            NonconcaveType::B => Some((ratio(1, 2 * ap - 1), ratio(1, 2 * ap - 1), ratio(-(ap - 1), 2 * ap - 1))),
            NonconcaveType::C => Some((ratio(1, 3), ratio(1, 3), ratio(-1, 3))),
            NonconcaveType::D => Some((ratio(1, 2 * ap), Q::zero(), ratio(-1, 2))),
        };
        let (tp, ti, value) = expected.unwrap_or_else(|| (eval.t[p].clone(), eval.t[i].clone(), four_point_special(model, i)));
        let name = format!("nonconcave type {kind:?} F_{}", i + 1);
        out.push(Check::compare(
            1,
            name,
            format!("T_p={tp} T_i={ti} F={value}"),
            format!("T_p={} T_i={} F={}", eval.t[p], eval.t[i], eval.value),
        ));
    }
    out
}

/// `𝔉_i = -q_i` through the Chiodo class.
fn four_point_paths(model: &Model) -> Vec<Check> {
    (0..model.nvars())
        .filter(|&i| special_key(model, i).is_some())
        .map(|i| {
            let expected = four_point_special(model, i);
            let name = format!("F_{} via chiodo", i + 1);
            match four_point_via_chiodo(model, i) {
                Ok(eval) => Check::compare(2, name, &expected, &eval.value),
                Err(e) => Check::failure(2, name, &expected, e),
            }
        })
        .collect()
}

fn twisted_rank(model: &Model) -> Check {
    let name = "state space rank equals dual milnor number";
    let expected = match derive_invariants(model.dual()) {
        Ok(inv) => inv.milnor_number,
        Err(e) => return Check::failure(3, name, "dual invariants", e),
    };
    match model.state_space_dimension() {
        Ok(d) => Check::compare(3, name, expected, d),
        Err(e) => Check::failure(3, name, expected, e),
    }
}

fn frobenius(model: &Model) -> Check {
    let oracles = model.oracle_values();
    let bad: Vec<String> = oracles
        .iter()
        .filter_map(|o| {
            let [a, b, c] = o.insertions;
            let got = model.three_point_basis(a, b, c);
            (got != o.expected).then(|| format!("{:?}: expected {} got {got}", o.case, o.expected))
        })
        .collect();
    Check::count(4, "closed-form three-point values", oracles.len(), &bad)
}

fn pairing(model: &Model) -> Check {
    let d = model.dim();
    let mut bad = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let (a, b) = (StateElement::basis(d, i), StateElement::basis(d, j));
            let (prod, direct) = (model.pairing_a(&a, &b), model.pairing_a_direct(&a, &b));
            if prod != direct {
                bad.push(format!("({i},{j}): residue {prod} sector {direct}"));
            }
        }
    }
    Check::count(5, "pairing on both sides", d * d, &bad)
}

fn jacobian(model: &Model) -> Check {
    let bad: Vec<String> = (0..model.nvars())
        .filter(|&j| !model.jacobian_relation(j).is_zero())
        .map(|j| format!("relation {}", j + 1))
        .collect();
    Check::count(6, "jacobian relations vanish", model.nvars(), &bad)
}

fn hessian(model: &Model) -> Vec<Check> {
    let ring = model.ring();
    let soc = crate::milnor::MilnorElement::basis(model.dim(), model.socle());
    let nf = ring.normal_form(&ring.hessian());
    let off_socle = nf.support().filter(|(k, _)| *k != model.socle()).count();
    let multiple = Check {
        criterion: 7,
        name: "hessian normal form is a nonzero socle multiple".into(),
        passed: off_socle == 0 && !ring.hessian_factor().is_zero() && &nf.0[model.socle()] == ring.hessian_factor(),
        expected: "h * soc with h != 0".into(),
        got: format!("{} * soc, {off_socle} other terms", nf.0[model.socle()]),
    };
    let normalized = Check::compare(7, "normalized residue of the socle", Q::one(), ring.normalized_residue(&soc));
    let gram = ring.gram();
    let mut bad = Vec::new();
    for i in 0..model.dim() {
        for j in 0..model.dim() {
            let expected = model.residue_formula(i, j);
            if gram[i][j] != expected {
                bad.push(format!("({i},{j}): expected {expected} got {}", gram[i][j]));
            }
        }
    }
    let entries = Check::count(7, "residue gram matches closed form", model.dim() * model.dim(), &bad);
    vec![multiple, normalized, entries]
}

fn wdvv(model: &Model) -> Vec<Check> {
    let four = match solve_four_point_sector(model) {
        Ok(t) => t,
        Err(e) => return vec![Check::failure(8, "four-point system uniquely solvable", "unique solution", e)],
    };
    let mut out = vec![Check::compare(8, "four-point WDVV residuals", 0, four.nonzero_residuals)];
    if model.dim() > FIVE_POINT_MAX_MU {
        return out;
    }
    let name = "five-point reduction matches direct solve";
    let direct = match solve_five_point_directly(model, &four) {
        Ok(d) => d,
        Err(e) => {
            out.push(Check::failure(8, name, "unique solution", e));
            return out;
        }
    };
    let mut r = match Reconstructor::new(model, 5) {
        Ok(r) => r,
        Err(e) => {
            out.push(Check::failure(8, name, "reconstructor", e));
            return out;
        }
    };
    let bad: Vec<String> = direct
        .iter()
        .filter_map(|(key, v)| match r.value(key) {
            Ok(got) if &got == v => None,
            Ok(got) => Some(format!("{key:?}: direct {v} reduced {got}")),
            Err(e) => Some(format!("{key:?}: {e}")),
        })
        .collect();
    out.push(Check::count(8, name, direct.len(), &bad));
    out
}

fn audits(model: &Model) -> Vec<Check> {
    let mut out = Vec::new();
    if model.group().order() <= SELECTION_MAX_GROUP {
        out.push(selection_three(model));
        out.push(selection_four(model));
    }
    let block = &model.w().blocks()[0];
    if block.kind == BlockKind::Chain && block.len() <= 3 && block.exponents.iter().all(|&a| a <= 3) {
        out.push(k_shapes(model));
    }
    out
}

fn selection_three(model: &Model) -> Check {
    let d = model.dim();
    let mut total = 0;
    let mut bad = Vec::new();
    for a in 0..d {
        for b in a..d {
            for c in b..d {
                total += 1;
                let v = model.three_point_basis(a, b, c);
                if !v.is_zero() && !basis_nonvanishing(model, &[a, b, c]) {
                    bad.push(format!("[{a}, {b}, {c}] = {v} fails the selection rule"));
                }
            }
        }
    }
    Check::count(9, "selection rule on three-point values", total, &bad)
}

fn selection_four(model: &Model) -> Check {
    let name = "selection rule on four-point values";
    let audit = match audit_four_point_selection(model) {
        Ok(a) => a,
        Err(e) => return Check::failure(9, name, "audit", e),
    };
    let mut bad: Vec<String> = audit
        .determined
        .iter()
        .filter(|(k, v)| !v.is_zero() && !basis_nonvanishing(model, k))
        .map(|(k, v)| format!("{k:?} = {v} fails the selection rule"))
        .collect();
    if audit.contradictions > 0 {
        bad.push(format!("{} contradictory equations", audit.contradictions));
    }
    Check::count(9, name, audit.determined.len(), &bad)
}

/// Every four- and five-point key whose K-vector is forbidden must vanish.
fn k_shapes(model: &Model) -> Check {
    let name = "K-vector shapes of nonzero correlators";
    let mut r = match Reconstructor::new(model, 5) {
        Ok(r) => r,
        Err(e) => return Check::failure(9, name, "reconstructor", e),
    };
    let mut total = 0;
    let mut bad = Vec::new();
    for k in 4..=5 {
        for key in non_unit_keys(model, k) {
            let Some(kv) = KVector::of_basis_key(model, &key) else { continue };
            total += 1;
            let reason = match kv {
                Err(e) => vec![e.to_string()],
                Ok(kv) => chain_shape_violations(model, &kv),
            };
            if reason.is_empty() {
                continue;
            }
            match r.value(&key) {
                Ok(v) if v.is_zero() => {}
                Ok(v) => bad.push(format!("{key:?} = {v} with {}", reason.join("; "))),
                Err(e) => bad.push(format!("{key:?}: {e}")),
            }
        }
    }
    Check::count(9, name, total, &bad)
}

/// `true` when every check passed.
pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
