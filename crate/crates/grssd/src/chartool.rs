//! Difference products and quadratic-character uniformity.
//!
//! For a point set S the quantity that decides self-duality is
//! delta_S(e) = prod over e' != e of (e - e'). Two independent evaluation
//! routes are kept: a brute product over the whole set, and a factored route
//! that multiplies per-piece closed forms (the vanishing polynomial of a
//! disjoint piece evaluates in O(log) time when the piece is a coset). The
//! table builder always cross-checks a sample of elements through the other
//! route; a disagreement is a hard error, because it means one of the two
//! code paths is wrong.

use crate::cosets::CosetError;
use crate::evalsets::{combine, EvalSet, Piece, PieceKind, SubsetFamily};
use crate::gf::{El, FieldSpec, GfError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Elements sampled through the secondary route on every table build.
pub const DEFAULT_SPOT_CHECKS: usize = 32;

/// Full-evaluation ceiling for the uniformity-transfer check.
pub const TRANSFER_CHECK_CAP: usize = 20_000;

#[derive(Debug, Error)]
pub enum CharError {
    #[error("element {0} is not in the set")]
    NotInSet(u32),
    #[error("set has {0} elements, need at least 1")]
    TooSmall(usize),
    #[error("set has {0} elements, over the full-evaluation cap")]
    TooLarge(usize),
    #[error("element {0} is not covered by any piece")]
    NotInAnyPiece(u32),
    #[error("pieces do not partition the element list")]
    PiecesNotPartition,
    #[error("routes disagree at element {element}: primary {primary}, check {check}")]
    CrossCheckMismatch { element: u32, primary: u32, check: u32 },
    #[error("difference product vanished at {0}; set elements are not distinct")]
    ZeroDelta(u32),
    #[error("character constant must be +1 or -1, got {0}")]
    BadConstant(i8),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Coset(#[from] CosetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    Brute,
    Factored,
}

/// delta_S over every element of S, tagged with the route that produced it.
#[derive(Debug, Clone)]
pub struct DeltaTable {
    /// (element, delta) pairs in element order.
    pub entries: Vec<(El, El)>,
    pub method: DeltaMethod,
}

impl DeltaTable {
    pub fn get(&self, e: El) -> Option<El> {
        self.entries
            .binary_search_by_key(&e, |&(el, _)| el)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Product of (x - a) over a set given as a slice.
pub fn pi_over(field: &FieldSpec, elements: &[El], x: El) -> El {
    elements
        .iter()
        .fold(El::ONE, |acc, &a| field.mul(acc, field.sub(x, a)))
}

/// Product of (x - a) over the set, skipping x itself.
pub fn delta_over(field: &FieldSpec, elements: &[El], x: El) -> El {
    elements
        .iter()
        .filter(|&&a| a != x)
        .fold(El::ONE, |acc, &a| field.mul(acc, field.sub(x, a)))
}

/// Brute-force delta_S(e): the product over every other element of S.
pub fn delta_brute(field: &FieldSpec, set: &EvalSet, e: El) -> Result<El, CharError> {
    if set.is_empty() {
        return Err(CharError::TooSmall(0));
    }
    if set.elements.binary_search(&e).is_err() {
        return Err(CharError::NotInSet(e.0));
    }
    let d = delta_over(field, &set.elements, e);
    if d.is_zero() {
        return Err(CharError::ZeroDelta(e.0));
    }
    Ok(d)
}

/// Vanishing polynomial of one piece at x; zero exactly when x is a member.
fn pi_piece(field: &FieldSpec, piece: &Piece, x: El) -> Result<El, CharError> {
    Ok(match &piece.kind {
        PieceKind::Coset(c) => c.pi_at(field, x),
        PieceKind::CosetMinus(c, out) => {
            if !c.contains(field, x) {
                // x outside the parent coset: divide the carved points back
                // out of the closed form.
                let excl = pi_over(field, out, x);
                field.mul(c.pi_at(field, x), field.inv(excl)?)
            } else if out.contains(&x) {
                // x is one of the carved points: the parent's derivative
                // supplies the product over the remaining members.
                let excl = delta_over(field, out, x);
                field.mul(c.delta_at(field, x)?, field.inv(excl)?)
            } else {
                El::ZERO
            }
        }
        PieceKind::Singleton(z) => field.sub(x, *z),
        PieceKind::Explicit(v) => pi_over(field, v, x),
    })
}

/// Difference product within one piece at a member x.
fn delta_piece(field: &FieldSpec, piece: &Piece, x: El) -> Result<El, CharError> {
    Ok(match &piece.kind {
        PieceKind::Coset(c) => c.delta_at(field, x)?,
        PieceKind::CosetMinus(c, out) => {
            let excl = pi_over(field, out, x);
            field.mul(c.delta_at(field, x)?, field.inv(excl)?)
        }
        PieceKind::Singleton(_) => El::ONE,
        PieceKind::Explicit(v) => delta_over(field, v, x),
    })
}

/// Factored delta_S(e): the difference product of e's own piece times the
/// vanishing polynomials of all other pieces, each in closed form where the
/// piece admits one. Requires the pieces to partition S.
pub fn delta_factored(field: &FieldSpec, set: &EvalSet, e: El) -> Result<El, CharError> {
    if set.is_empty() {
        return Err(CharError::TooSmall(0));
    }
    let own = set
        .pieces
        .iter()
        .position(|p| p.contains(field, e))
        .ok_or(CharError::NotInAnyPiece(e.0))?;
    let mut acc = delta_piece(field, &set.pieces[own], e)?;
    for (i, p) in set.pieces.iter().enumerate() {
        if i != own {
            let factor = pi_piece(field, p, e)?;
            if factor.is_zero() {
                // e sits in two pieces; the decomposition is not disjoint.
                return Err(CharError::PiecesNotPartition);
            }
            acc = field.mul(acc, factor);
        }
    }
    if acc.is_zero() {
        return Err(CharError::ZeroDelta(e.0));
    }
    Ok(acc)
}

/// Build the delta table with the default spot-check sample.
pub fn delta_table(field: &FieldSpec, set: &EvalSet) -> Result<DeltaTable, CharError> {
    delta_table_with(field, set, DEFAULT_SPOT_CHECKS)
}

/// Build the delta table.
///
/// Route selection: factored when every piece has a closed form, brute
/// otherwise. `spot_checks` elements (evenly spaced) are recomputed through
/// the other route and must agree exactly.
pub fn delta_table_with(
    field: &FieldSpec,
    set: &EvalSet,
    spot_checks: usize,
) -> Result<DeltaTable, CharError> {
    if set.is_empty() {
        return Err(CharError::TooSmall(0));
    }
    if !set.pieces_partition_elements(field) {
        return Err(CharError::PiecesNotPartition);
    }
    let factored = set.fully_closed_form();
    let entries: Vec<(El, El)> = if factored {
        set.elements
            .par_iter()
            .map(|&e| delta_factored(field, set, e).map(|d| (e, d)))
            .collect::<Result<_, _>>()?
    } else {
        set.elements
            .par_iter()
            .map(|&e| delta_brute(field, set, e).map(|d| (e, d)))
            .collect::<Result<_, _>>()?
    };

    let n = entries.len();
    let stride = (n / spot_checks.max(1)).max(1);
    for idx in (0..n).step_by(stride).take(spot_checks) {
        let (e, primary) = entries[idx];
        let check = if factored {
            delta_brute(field, set, e)?
        } else {
            delta_factored(field, set, e)?
        };
        if check != primary {
            return Err(CharError::CrossCheckMismatch {
                element: e.0,
                primary: primary.0,
                check: check.0,
            });
        }
    }
    Ok(DeltaTable {
        entries,
        method: if factored { DeltaMethod::Factored } else { DeltaMethod::Brute },
    })
}

/// Quadratic character of every difference product, and whether they agree.
#[derive(Debug, Clone)]
pub struct CharacterReport {
    /// (element, eta of its difference product) in element order.
    pub per_element: Vec<(El, i8)>,
    pub uniform: bool,
    /// The shared character value when uniform.
    pub common: Option<i8>,
    /// Whether eta(-delta) = +1 everywhere, the extended-code hypothesis.
    pub negated_uniform: bool,
}

impl CharacterReport {
    /// Counts of +1 and -1 characters, for diagnostics.
    pub fn counts(&self) -> (usize, usize) {
        let plus = self.per_element.iter().filter(|&&(_, s)| s == 1).count();
        (plus, self.per_element.len() - plus)
    }
}

pub fn character_report(field: &FieldSpec, set: &EvalSet) -> Result<CharacterReport, CharError> {
    let table = delta_table(field, set)?;
    character_report_from_table(field, &table)
}

pub fn character_report_from_table(
    field: &FieldSpec,
    table: &DeltaTable,
) -> Result<CharacterReport, CharError> {
    let mut per_element = Vec::with_capacity(table.entries.len());
    let mut negated_uniform = true;
    for &(e, d) in &table.entries {
        per_element.push((e, field.eta(d)?));
        if field.eta(field.neg(d))? != 1 {
            negated_uniform = false;
        }
    }
    let first = per_element[0].1;
    let uniform = per_element.iter().all(|&(_, s)| s == first);
    let common = if uniform { Some(first) } else { None };
    // In this field -1 is always a square, so the negated condition must
    // coincide with uniformity at +1. A mismatch is an arithmetic bug.
    assert_eq!(
        negated_uniform,
        uniform && common == Some(1),
        "negated-character identity violated"
    );
    Ok(CharacterReport {
        per_element,
        uniform,
        common,
        negated_uniform,
    })
}

#[derive(Serialize)]
struct DumpLine {
    element: u32,
    delta: u32,
    eta: i8,
}

/// JSON-lines dump of a delta table with characters, one element per line.
pub fn dump_character_lines(field: &FieldSpec, table: &DeltaTable) -> Result<String, CharError> {
    let mut out = String::new();
    for &(e, d) in &table.entries {
        let line = DumpLine {
            element: e.0,
            delta: d.0,
            eta: field.eta(d)?,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
        out.push('\n');
    }
    Ok(out)
}

/// Expand the vanishing polynomial of S, differentiate formally, and compare
/// its value at every member with the difference product. Small sets only.
pub fn vanishing_derivative_matches(field: &FieldSpec, set: &EvalSet) -> Result<bool, CharError> {
    if set.len() > 64 {
        return Err(CharError::TooLarge(set.len()));
    }
    if set.is_empty() {
        return Err(CharError::TooSmall(0));
    }
    // Coefficients of prod (x - a), low degree first.
    let mut coeffs = vec![El::ONE];
    for &a in &set.elements {
        let mut next = vec![El::ZERO; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] = field.add(next[i + 1], c);
            next[i] = field.sub(next[i], field.mul(a, c));
        }
        coeffs = next;
    }
    // Formal derivative, then Horner evaluation at each member.
    let deriv: Vec<El> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| field.mul(field.scalar(i as u64), c))
        .collect();
    for &e in &set.elements {
        let val = deriv
            .iter()
            .rev()
            .fold(El::ZERO, |acc, &c| field.add(field.mul(acc, e), c));
        if val != delta_brute(field, set, e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the uniformity-transfer check.
#[derive(Debug, Clone)]
pub struct Theorem1Outcome {
    /// Every odd-overlap region element has per-region character c.
    pub hypothesis_holds: bool,
    /// The combined set's difference products all have character c.
    pub conclusion_holds: bool,
    /// Elements violating the hypothesis, capped at 16.
    pub witnesses: Vec<El>,
}

/// Check the sufficient criterion that per-region character uniformity
/// transfers to the combined set.
///
/// For each element a kept by the combiner (membership index set I, |I| odd)
/// the hypothesis asks that the product of the difference products of a's own
/// subsets and the vanishing polynomials of all other subsets has character
/// c. The conclusion is that the combined set is character-uniform at c. Only
/// the implication hypothesis => conclusion is certified; the converse need
/// not hold. Every element is evaluated, so the set size is capped.
pub fn theorem1_check(
    field: &FieldSpec,
    family: &SubsetFamily<'_>,
    c: i8,
) -> Result<Theorem1Outcome, CharError> {
    if c != 1 && c != -1 {
        return Err(CharError::BadConstant(c));
    }
    let set = combine(family);
    if set.len() > TRANSFER_CHECK_CAP {
        return Err(CharError::TooLarge(set.len()));
    }
    let subsets = family.subsets();
    let masks = family.masks();

    let mut witnesses = Vec::new();
    for &a in &set.elements {
        let mask = masks[&a];
        let mut prod = El::ONE;
        for (j, subset) in subsets.iter().enumerate() {
            let factor = if mask >> j & 1 == 1 {
                delta_over(field, subset, a)
            } else {
                pi_over(field, subset, a)
            };
            prod = field.mul(prod, factor);
        }
        if prod.is_zero() {
            return Err(CharError::ZeroDelta(a.0));
        }
        if field.eta(prod)? != c && witnesses.len() < 16 {
            witnesses.push(a);
        }
    }
    let hypothesis_holds = witnesses.is_empty();

    let conclusion_holds = if set.len() < 2 {
        true
    } else {
        let report = character_report(field, &set)?;
        report.uniform && report.common == Some(c)
    };
    Ok(Theorem1Outcome {
        hypothesis_holds,
        conclusion_holds,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosets::{divisors, CosetSpec, CosetUnion};
    use crate::evalsets::{build, ConstructionParams, Provenance};
    use crate::gf::FieldSpec;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(r: u64) -> FieldSpec {
        FieldSpec::for_r(r).unwrap()
    }

    /// EvalSet with explicit single-piece decomposition, for brute paths.
    fn adhoc_set(elements: Vec<El>) -> EvalSet {
        let mut elements = elements;
        elements.sort();
        EvalSet {
            pieces: vec![Piece {
                kind: PieceKind::Explicit(elements.clone()),
                label: "all".to_string(),
            }],
            elements,
            provenance: Provenance {
                tag: "adhoc".to_string(),
                params: vec![],
            },
        }
    }

    /// EvalSet from disjoint coset pieces.
    fn coset_set(field: &FieldSpec, cosets: Vec<CosetSpec>, zero: bool) -> EvalSet {
        let union = CosetUnion::new(cosets.clone(), zero);
        assert!(union.pairwise_disjoint());
        let elements = union.materialize(field);
        let mut pieces: Vec<Piece> = cosets
            .into_iter()
            .enumerate()
            .map(|(i, c)| Piece {
                kind: PieceKind::Coset(c),
                label: format!("coset{i}"),
            })
            .collect();
        if zero {
            pieces.push(Piece {
                kind: PieceKind::Singleton(El::ZERO),
                label: "zero".to_string(),
            });
        }
        EvalSet {
            elements,
            provenance: Provenance {
                tag: "adhoc".to_string(),
                params: vec![],
            },
            pieces,
        }
    }

    #[test]
    fn brute_delta_on_tiny_sets() {
        let f = gf(7);
        let minus_one = f.neg(El::ONE);
        let s = adhoc_set(vec![El::ZERO, El::ONE]);
        assert_eq!(delta_brute(&f, &s, El::ZERO).unwrap(), minus_one);
        let s = adhoc_set(vec![El::ZERO, El::ONE, minus_one]);
        assert_eq!(delta_brute(&f, &s, El::ZERO).unwrap(), minus_one);
        assert!(matches!(
            delta_brute(&f, &s, El(5)),
            Err(CharError::NotInSet(5))
        ));
    }

    #[test]
    fn factored_matches_brute_on_single_cosets() {
        let f = gf(7);
        for &d in divisors(48).iter() {
            let c = CosetSpec::new(&f, 1, d as u32).unwrap();
            if c.size(&f) < 2 {
                continue;
            }
            let s = coset_set(&f, vec![c], false);
            for &e in &s.elements {
                assert_eq!(
                    delta_factored(&f, &s, e).unwrap(),
                    delta_brute(&f, &s, e).unwrap(),
                    "d={d} e={e}"
                );
            }
        }
    }

    #[test]
    fn factored_matches_brute_on_random_disjoint_unions() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let divs = divisors(48);
        for round in 0..20 {
            // Random step, then as many pairwise-disjoint translates as the
            // draw allows, optionally with zero.
            let d = divs[rng.gen_range(1..divs.len())] as u32;
            let count = rng.gen_range(1..=d.min(4));
            let mut offsets: Vec<i64> = (0..d as i64).collect();
            offsets.shuffle(&mut rng);
            let cosets: Vec<CosetSpec> = offsets[..count as usize]
                .iter()
                .map(|&o| CosetSpec::new(&f, o, d).unwrap())
                .collect();
            let s = coset_set(&f, cosets, rng.gen_bool(0.5));
            if s.len() < 2 {
                continue;
            }
            for &e in &s.elements {
                assert_eq!(
                    delta_factored(&f, &s, e).unwrap(),
                    delta_brute(&f, &s, e).unwrap(),
                    "round {round} e={e}"
                );
            }
        }
    }

    #[test]
    fn factored_matches_brute_on_carved_coset_sets() {
        // The carved-coset piece exercises both the member-of-carved-list
        // and the outside-parent branches of the factored route.
        let f = gf(19);
        let p = ConstructionParams::Thm3 { l: 18, s: 0, l1: 2, l2: 3 };
        let set = build(&f, &p).unwrap();
        for &e in &set.elements {
            assert_eq!(
                delta_factored(&f, &set, e).unwrap(),
                delta_brute(&f, &set, e).unwrap(),
                "e={e}"
            );
        }
    }

    #[test]
    fn table_uses_factored_route_for_closed_form_sets() {
        let f = gf(19);
        let set = build(&f, &ConstructionParams::Thm2 { l: 6, s: 2, l1: 1, l2: 1 }).unwrap();
        let table = delta_table(&f, &set).unwrap();
        assert_eq!(table.method, DeltaMethod::Factored);
        assert_eq!(table.entries.len(), set.len());
        for &(e, d) in &table.entries {
            assert_eq!(d, delta_brute(&f, &set, e).unwrap());
        }
        let set = build(
            &f,
            &ConstructionParams::Thm4 { u: 20, v: 18, s: 9, s_prime: 10, t: 2 },
        )
        .unwrap();
        let table = delta_table(&f, &set).unwrap();
        assert_eq!(table.method, DeltaMethod::Brute);
    }

    #[test]
    fn table_rejects_non_partition_pieces() {
        let f = gf(7);
        let c = CosetSpec::new(&f, 0, 8).unwrap();
        let mut s = coset_set(&f, vec![c], false);
        s.elements.pop(); // pieces now cover more than the element list
        assert!(matches!(
            delta_table(&f, &s),
            Err(CharError::PiecesNotPartition)
        ));
    }

    #[test]
    fn built_families_are_character_uniform() {
        let f = gf(19);
        for (p, want) in [
            (ConstructionParams::Thm2 { l: 18, s: 0, l1: 3, l2: 2 }, 1i8),
            (ConstructionParams::Thm2 { l: 6, s: 2, l1: 1, l2: 1 }, 1),
            (ConstructionParams::Thm4 { u: 20, v: 18, s: 9, s_prime: 10, t: 2 }, 1),
            (ConstructionParams::Thm5 { u: 20, v: 36, s: 2, s_prime: 4, t: 7 }, 1),
        ] {
            let set = build(&f, &p).unwrap();
            let rep = character_report(&f, &set).unwrap();
            assert!(rep.uniform, "{p:?} counts {:?}", rep.counts());
            assert_eq!(rep.common, Some(want), "{p:?}");
            assert_eq!(rep.negated_uniform, want == 1, "{p:?}");
        }
    }

    #[test]
    fn odd_sign_constant_two_subgroup_family() {
        // s' odd makes the shared character value -1: uniform but not
        // extendable through the negated condition.
        let f = gf(19);
        let p = ConstructionParams::Thm4 { u: 20, v: 18, s: 10, s_prime: 9, t: 2 };
        let set = build(&f, &p).unwrap();
        let rep = character_report(&f, &set).unwrap();
        assert!(rep.uniform);
        assert_eq!(rep.common, Some(-1));
        assert!(!rep.negated_uniform);
    }

    #[test]
    fn random_small_subset_report_is_informational() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut els: Vec<El> = (0..f.q()).map(El).collect();
        els.shuffle(&mut rng);
        let s = adhoc_set(els[..6].to_vec());
        let rep = character_report(&f, &s).unwrap();
        assert_eq!(rep.per_element.len(), 6);
        let (plus, minus) = rep.counts();
        assert_eq!(plus + minus, 6);
    }

    #[test]
    fn derivative_of_vanishing_polynomial_equals_delta() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let mut els: Vec<El> = (0..f.q()).map(El).collect();
            els.shuffle(&mut rng);
            let n = rng.gen_range(2..=30);
            let s = adhoc_set(els[..n].to_vec());
            assert!(vanishing_derivative_matches(&f, &s).unwrap());
        }
        let f19 = gf(19);
        let set = build(&f19, &ConstructionParams::Thm2 { l: 6, s: 2, l1: 1, l2: 1 }).unwrap();
        assert!(vanishing_derivative_matches(&f19, &set).unwrap());
    }

    #[test]
    fn dump_lines_are_valid_json() {
        let f = gf(7);
        let set = build(&f, &ConstructionParams::Thm2 { l: 6, s: 0, l1: 1, l2: 0 }).unwrap();
        let table = delta_table(&f, &set).unwrap();
        let dump = dump_character_lines(&f, &table).unwrap();
        assert_eq!(dump.lines().count(), set.len());
        for line in dump.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["element"].is_u64() && v["delta"].is_u64());
            let eta = v["eta"].as_i64().unwrap();
            assert!(eta == 1 || eta == -1);
        }
    }

    #[test]
    fn transfer_check_two_disjoint_cosets() {
        // With two disjoint subsets the kept set is the full union and the
        // hypothesis product at a point of one subset is its own difference
        // product times the other's vanishing polynomial.
        let f = gf(7);
        let a = CosetSpec::new(&f, 0, 16).unwrap(); // 3 elements
        let b = CosetSpec::new(&f, 1, 16).unwrap();
        let fam = SubsetFamily::new(&f, vec![a.materialize(&f), b.materialize(&f)]).unwrap();
        let set = combine(&fam);
        assert_eq!(set.len(), 6);
        for c in [1i8, -1] {
            let out = theorem1_check(&f, &fam, c).unwrap();
            // Manual hypothesis evaluation.
            let mut manual = true;
            for (own, other) in [(&a, &b), (&b, &a)] {
                for e in own.members(&f) {
                    let prod = f.mul(own.delta_at(&f, e).unwrap(), other.pi_at(&f, e));
                    if f.eta(prod).unwrap() != c {
                        manual = false;
                    }
                }
            }
            assert_eq!(out.hypothesis_holds, manual, "c={c}");
            if out.hypothesis_holds {
                assert!(out.conclusion_holds, "c={c}");
            }
        }
    }

    #[test]
    fn transfer_check_on_built_families() {
        let f = gf(19);
        for p in [
            ConstructionParams::Thm2 { l: 18, s: 0, l1: 3, l2: 2 },
            ConstructionParams::Thm4 { u: 20, v: 18, s: 9, s_prime: 10, t: 2 },
            ConstructionParams::Thm6 { u: 2, v: 18, w: 18, s: 1, t: 1, f: 4 },
        ] {
            let subsets = rebuild_family_subsets(&f, &p);
            let fam = SubsetFamily::new(&f, subsets).unwrap();
            let mut implied = false;
            for c in [1i8, -1] {
                let out = theorem1_check(&f, &fam, c).unwrap();
                if out.hypothesis_holds {
                    assert!(out.conclusion_holds, "{p:?} c={c}");
                    implied = true;
                }
            }
            assert!(implied, "{p:?}: hypothesis holds for one sign");
        }
    }

    #[test]
    fn transfer_check_reports_witnesses() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut els: Vec<El> = (1..f.q()).map(El).collect();
        els.shuffle(&mut rng);
        // A lopsided random family fails the hypothesis for both signs.
        let fam = SubsetFamily::new(&f, vec![els[..9].to_vec(), els[9..14].to_vec()]).unwrap();
        let plus = theorem1_check(&f, &fam, 1).unwrap();
        let minus = theorem1_check(&f, &fam, -1).unwrap();
        assert!(!plus.hypothesis_holds && !minus.hypothesis_holds);
        assert!(!plus.witnesses.is_empty() && !minus.witnesses.is_empty());
    }

    /// The three theorem subsets, rebuilt for transfer checks.
    fn rebuild_family_subsets(f: &FieldSpec, p: &ConstructionParams) -> Vec<Vec<El>> {
        match *p {
            ConstructionParams::Thm2 { l, s, l1, l2 } => {
                let mut a = Vec::new();
                for k in 1..=s {
                    a.extend(crate::cosets::h_coset(f, l, s, k).unwrap().members(f));
                }
                let mut b = vec![El::ZERO];
                for i in 0..l1 {
                    b.extend(crate::cosets::norm_fiber(f, l, 2 * i + 1).unwrap().members(f));
                }
                let mut c = Vec::new();
                for j in 0..l2 {
                    c.extend(crate::cosets::norm_fiber(f, l, 2 * j).unwrap().members(f));
                }
                [a, b, c].into_iter().filter(|s| !s.is_empty()).collect()
            }
            ConstructionParams::Thm4 { u, v, s, s_prime, t } => {
                two_subgroup_subsets(f, u, v, s, s_prime, t)
            }
            ConstructionParams::Thm6 { u, v, w, s, t, f: fc } => {
                let mut a = Vec::new();
                for i in 0..s {
                    a.extend(CosetSpec::new(f, i as i64 * v as i64, u).unwrap().members(f));
                }
                let mut b = Vec::new();
                for j in 0..t {
                    b.extend(CosetSpec::new(f, j as i64 * w as i64, v).unwrap().members(f));
                }
                let mut c = Vec::new();
                for k in 0..fc {
                    c.extend(CosetSpec::new(f, k as i64 * u as i64, w).unwrap().members(f));
                }
                [a, b, c].into_iter().filter(|s| !s.is_empty()).collect()
            }
            _ => unreachable!("only three families used here"),
        }
    }

    fn two_subgroup_subsets(
        f: &FieldSpec,
        u: u32,
        v: u32,
        s: u32,
        sp: u32,
        t: u32,
    ) -> Vec<Vec<El>> {
        let mut a = Vec::new();
        for i in 0..s {
            a.extend(CosetSpec::new(f, i as i64 * v as i64, u).unwrap().members(f));
        }
        let mut b = Vec::new();
        for j in 0..t {
            b.extend(CosetSpec::new(f, j as i64 * u as i64, v).unwrap().members(f));
        }
        let mut c = Vec::new();
        for k in 0..sp {
            c.extend(
                CosetSpec::new(f, (2 * k as i64 + 1) * v as i64 / 2, u)
                    .unwrap()
                    .members(f),
            );
        }
        [a, b, c].into_iter().filter(|s| !s.is_empty()).collect()
    }
}
