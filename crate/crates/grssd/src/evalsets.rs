//! Evaluation-set assembly: a generic odd-overlap combiner plus validated
//! builders for eight construction families.
//!
//! The combiner takes n subsets and keeps exactly the elements covered an odd
//! number of times, recording the exact-membership regions it kept. Builders
//! wire up the three subsets each family prescribes, adjoin zero where the
//! construction calls for it, and hard-assert the resulting cardinality
//! against the family's closed-form length. A mismatch is an error, not a
//! warning: it means either a bad parameter set or a bug, and both must
//! surface.

use crate::cosets::{
    fiber_field_intersection, gcd, h_coset, intersection_card2, intersection_card3, norm_fiber,
    subgroup_of_size, CosetError, CosetSpec,
};
use crate::gf::{El, FieldSpec, GfError};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("subset family must contain at least one subset")]
    EmptyFamily,
    #[error("subset {0} is empty")]
    EmptySubset(usize),
    #[error("subset {0} contains a duplicate element")]
    DuplicateInSubset(usize),
    #[error("subset {index} holds {el}, outside the field of size {q}")]
    OutOfUniverse { index: usize, el: u32, q: u32 },
    #[error("at most 64 subsets are supported, got {0}")]
    TooManySubsets(usize),
    #[error("hypotheses failed: {0}")]
    Validation(String),
    #[error("cardinality mismatch: formula predicts {expected}, construction produced {got}")]
    Cardinality { expected: u64, got: u64 },
    #[error("malformed evaluation-set file: {0}")]
    Parse(String),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A list of subsets of one field, the input to [`combine`].
pub struct SubsetFamily<'f> {
    field: &'f FieldSpec,
    subsets: Vec<Vec<El>>,
}

impl<'f> SubsetFamily<'f> {
    /// Validates: at least one subset, each nonempty, no duplicates inside a
    /// subset, every element inside the field.
    pub fn new(field: &'f FieldSpec, subsets: Vec<Vec<El>>) -> Result<Self, EvalError> {
        if subsets.is_empty() {
            return Err(EvalError::EmptyFamily);
        }
        if subsets.len() > 64 {
            return Err(EvalError::TooManySubsets(subsets.len()));
        }
        let mut subsets = subsets;
        for (i, s) in subsets.iter_mut().enumerate() {
            if s.is_empty() {
                return Err(EvalError::EmptySubset(i));
            }
            for &el in s.iter() {
                if el.0 >= field.q() {
                    return Err(EvalError::OutOfUniverse {
                        index: i,
                        el: el.0,
                        q: field.q(),
                    });
                }
            }
            let before = s.len();
            s.sort();
            s.dedup();
            if s.len() != before {
                return Err(EvalError::DuplicateInSubset(i));
            }
        }
        Ok(SubsetFamily { field, subsets })
    }

    pub fn field(&self) -> &FieldSpec {
        self.field
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subsets(&self) -> &[Vec<El>] {
        &self.subsets
    }

    /// Per-element membership bitmask over all subsets.
    pub(crate) fn masks(&self) -> BTreeMap<El, u64> {
        let mut masks: BTreeMap<El, u64> = BTreeMap::new();
        for (i, s) in self.subsets.iter().enumerate() {
            for &el in s {
                *masks.entry(el).or_insert(0) |= 1 << i;
            }
        }
        masks
    }
}

/// One block of an evaluation set's disjoint decomposition. Closed-form kinds
/// let the difference products downstream factor instead of looping over the
/// whole set.
#[derive(Debug, Clone)]
pub enum PieceKind {
    /// A full multiplicative coset.
    Coset(CosetSpec),
    /// A coset minus a short list of its own members.
    CosetMinus(CosetSpec, Vec<El>),
    /// A single element.
    Singleton(El),
    /// Anything else, materialized.
    Explicit(Vec<El>),
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub kind: PieceKind,
    pub label: String,
}

impl Piece {
    pub fn materialize(&self, field: &FieldSpec) -> Vec<El> {
        match &self.kind {
            PieceKind::Coset(c) => c.materialize(field),
            PieceKind::CosetMinus(c, out) => {
                let mut v = c.materialize(field);
                v.retain(|x| !out.contains(x));
                v
            }
            PieceKind::Singleton(x) => vec![*x],
            PieceKind::Explicit(v) => v.clone(),
        }
    }

    pub fn len(&self, field: &FieldSpec) -> usize {
        match &self.kind {
            PieceKind::Coset(c) => c.size(field) as usize,
            PieceKind::CosetMinus(c, out) => c.size(field) as usize - out.len(),
            PieceKind::Singleton(_) => 1,
            PieceKind::Explicit(v) => v.len(),
        }
    }

    pub fn contains(&self, field: &FieldSpec, x: El) -> bool {
        match &self.kind {
            PieceKind::Coset(c) => c.contains(field, x),
            PieceKind::CosetMinus(c, out) => c.contains(field, x) && !out.contains(&x),
            PieceKind::Singleton(y) => x == *y,
            PieceKind::Explicit(v) => v.binary_search(&x).is_ok(),
        }
    }

    /// Whether the difference product over this piece has a closed form.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, PieceKind::Explicit(_))
    }
}

/// Where an evaluation set came from: construction tag plus the parameters
/// used, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub tag: String,
    pub params: Vec<(String, u64)>,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { " " } else { "," })?;
        }
        Ok(())
    }
}

/// A set of evaluation points: sorted distinct elements plus the disjoint
/// piece decomposition they were assembled from.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub elements: Vec<El>,
    pub provenance: Provenance,
    pub pieces: Vec<Piece>,
}

impl EvalSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Code length this set yields: |S| when even, |S| + 1 when the code is
    /// extended by one coordinate to restore evenness.
    pub fn code_length(&self) -> usize {
        if self.elements.len() % 2 == 0 {
            self.elements.len()
        } else {
            self.elements.len() + 1
        }
    }

    /// An odd-size set forces the extended construction.
    pub fn is_extended(&self) -> bool {
        self.elements.len() % 2 == 1
    }

    /// True when every piece admits a closed-form difference product.
    pub fn fully_closed_form(&self) -> bool {
        self.pieces.iter().all(|p| p.has_closed_form())
    }

    /// Checks that the pieces are pairwise disjoint and cover `elements`
    /// exactly.
    pub fn pieces_partition_elements(&self, field: &FieldSpec) -> bool {
        let mut all: Vec<El> = self
            .pieces
            .iter()
            .flat_map(|p| p.materialize(field))
            .collect();
        let n = all.len();
        all.sort();
        all.dedup();
        n == all.len() && all == self.elements
    }
}

/// Keep the elements covered by an odd number of subsets.
///
/// Equivalently: the union over all odd-size index sets I of the region held
/// by exactly the subsets in I. Each nonempty region kept becomes one
/// materialized piece. Runs in O(n * total subset size) by classifying every
/// element's membership mask instead of walking the exponential set algebra.
pub fn combine(family: &SubsetFamily<'_>) -> EvalSet {
    let masks = family.masks();
    let mut regions: BTreeMap<u64, Vec<El>> = BTreeMap::new();
    for (el, mask) in masks {
        if mask.count_ones() % 2 == 1 {
            regions.entry(mask).or_default().push(el);
        }
    }
    let mut elements: Vec<El> = regions.values().flatten().copied().collect();
    elements.sort();
    let pieces = regions
        .into_iter()
        .map(|(mask, els)| Piece {
            kind: PieceKind::Explicit(els),
            label: mask_label(mask),
        })
        .collect();
    EvalSet {
        elements,
        provenance: Provenance {
            tag: "combine".to_string(),
            params: vec![("subsets".to_string(), family.len() as u64)],
        },
        pieces,
    }
}

fn mask_label(mask: u64) -> String {
    let idx: Vec<String> = (0..64)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (i + 1).to_string())
        .collect();
    format!("I={{{}}}", idx.join(","))
}

/// Bookkeeping identity behind the combiner, checked by brute force.
///
/// For B_l the union over j != l of the pairwise overlaps of subset l, two
/// facts must hold: elements held by exactly one subset miss every B_l, and
/// an element held by exactly the subsets in I (|I| >= 2) lies in exactly |I|
/// of the B_l. Consequently the disjoint union of all B_l equals, as a
/// multiset, the regions with |I| >= 2 each repeated |I| times. The two sides
/// are computed along independent routes (set operations vs mask counts).
pub fn multiset_identity_check(family: &SubsetFamily<'_>) -> bool {
    let n = family.len();
    if n < 2 {
        return false;
    }
    let subsets = family.subsets();

    // Route 1: materialize each B_l by raw set operations.
    let mut b_count: BTreeMap<El, u32> = BTreeMap::new();
    let mut b_sets: Vec<Vec<El>> = Vec::with_capacity(n);
    for l in 0..n {
        let mut bl: Vec<El> = subsets[l]
            .iter()
            .copied()
            .filter(|x| {
                (0..n).any(|j| j != l && subsets[j].binary_search(x).is_ok())
            })
            .collect();
        bl.sort();
        for &x in &bl {
            *b_count.entry(x).or_insert(0) += 1;
        }
        b_sets.push(bl);
    }

    // Route 2: membership masks.
    for (el, mask) in family.masks() {
        let k = mask.count_ones();
        let in_b = (0..n)
            .filter(|&l| b_sets[l].binary_search(&el).is_ok())
            .count() as u32;
        if k == 1 {
            // Exclusive elements must miss every B_l.
            if in_b != 0 {
                return false;
            }
        } else {
            // Shared elements must lie in exactly k of the B_l, which is
            // also their multiplicity on the left side.
            if in_b != k || b_count.get(&el).copied().unwrap_or(0) != k {
                return false;
            }
        }
    }
    true
}

/// Parameters for the eight construction families, tagged by origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructionParams {
    Thm2 { l: u32, s: u32, l1: u32, l2: u32 },
    Thm3 { l: u32, s: u32, l1: u32, l2: u32 },
    Thm4 { u: u32, v: u32, s: u32, s_prime: u32, t: u32 },
    Cor1 { u: u32, v: u32, s: u32, s_prime: u32, t: u32 },
    Thm5 { u: u32, v: u32, s: u32, s_prime: u32, t: u32 },
    Thm6 { u: u32, v: u32, w: u32, s: u32, t: u32, f: u32 },
    Cor2 { u: u32, v: u32, w: u32, s: u32, t: u32, f: u32 },
    Cor3 { u: u32, v: u32, w: u32, s: u32, t: u32, f: u32 },
}

impl ConstructionParams {
    pub fn tag(&self) -> &'static str {
        match self {
            ConstructionParams::Thm2 { .. } => "thm2",
            ConstructionParams::Thm3 { .. } => "thm3",
            ConstructionParams::Thm4 { .. } => "thm4",
            ConstructionParams::Cor1 { .. } => "cor1",
            ConstructionParams::Thm5 { .. } => "thm5",
            ConstructionParams::Thm6 { .. } => "thm6",
            ConstructionParams::Cor2 { .. } => "cor2",
            ConstructionParams::Cor3 { .. } => "cor3",
        }
    }

    pub fn param_list(&self) -> Vec<(&'static str, u64)> {
        match *self {
            ConstructionParams::Thm2 { l, s, l1, l2 } | ConstructionParams::Thm3 { l, s, l1, l2 } => {
                vec![
                    ("l", l as u64),
                    ("s", s as u64),
                    ("l1", l1 as u64),
                    ("l2", l2 as u64),
                ]
            }
            ConstructionParams::Thm4 { u, v, s, s_prime, t }
            | ConstructionParams::Cor1 { u, v, s, s_prime, t }
            | ConstructionParams::Thm5 { u, v, s, s_prime, t } => vec![
                ("u", u as u64),
                ("v", v as u64),
                ("s", s as u64),
                ("sprime", s_prime as u64),
                ("t", t as u64),
            ],
            ConstructionParams::Thm6 { u, v, w, s, t, f }
            | ConstructionParams::Cor2 { u, v, w, s, t, f }
            | ConstructionParams::Cor3 { u, v, w, s, t, f } => vec![
                ("u", u as u64),
                ("v", v as u64),
                ("w", w as u64),
                ("s", s as u64),
                ("t", t as u64),
                ("f", f as u64),
            ],
        }
    }

    /// Reassemble from a tag and key-value pairs (file headers, CLI flags).
    pub fn from_tag(tag: &str, kv: &BTreeMap<String, u64>) -> Result<Self, EvalError> {
        let get = |k: &str| -> Result<u32, EvalError> {
            kv.get(k)
                .map(|&v| v as u32)
                .ok_or_else(|| EvalError::Parse(format!("missing parameter {k} for {tag}")))
        };
        Ok(match tag {
            "thm2" => ConstructionParams::Thm2 {
                l: get("l")?,
                s: get("s")?,
                l1: get("l1")?,
                l2: get("l2")?,
            },
            "thm3" => ConstructionParams::Thm3 {
                l: get("l")?,
                s: get("s")?,
                l1: get("l1")?,
                l2: get("l2")?,
            },
            "thm4" => ConstructionParams::Thm4 {
                u: get("u")?,
                v: get("v")?,
                s: get("s")?,
                s_prime: get("sprime")?,
                t: get("t")?,
            },
            "cor1" => ConstructionParams::Cor1 {
                u: get("u")?,
                v: get("v")?,
                s: get("s")?,
                s_prime: get("sprime")?,
                t: get("t")?,
            },
            "thm5" => ConstructionParams::Thm5 {
                u: get("u")?,
                v: get("v")?,
                s: get("s")?,
                s_prime: get("sprime")?,
                t: get("t")?,
            },
            "thm6" => ConstructionParams::Thm6 {
                u: get("u")?,
                v: get("v")?,
                w: get("w")?,
                s: get("s")?,
                t: get("t")?,
                f: get("f")?,
            },
            "cor2" => ConstructionParams::Cor2 {
                u: get("u")?,
                v: get("v")?,
                w: get("w")?,
                s: get("s")?,
                t: get("t")?,
                f: get("f")?,
            },
            "cor3" => ConstructionParams::Cor3 {
                u: get("u")?,
                v: get("v")?,
                w: get("w")?,
                s: get("s")?,
                t: get("t")?,
                f: get("f")?,
            },
            other => return Err(EvalError::Parse(format!("unknown construction tag {other}"))),
        })
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            tag: self.tag().to_string(),
            params: self
                .param_list()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

/// One hypothesis of a construction family with its outcome.
#[derive(Debug, Clone)]
pub struct HypothesisLine {
    pub desc: String,
    pub ok: bool,
}

/// Outcome of checking every hypothesis of a parameter set.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub lines: Vec<HypothesisLine>,
    pub pass: bool,
}

impl ValidationReport {
    fn from_lines(lines: Vec<HypothesisLine>) -> Self {
        let pass = lines.iter().all(|l| l.ok);
        ValidationReport { lines, pass }
    }

    pub fn failed_descriptions(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|l| !l.ok)
            .map(|l| l.desc.as_str())
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{} {}", if line.ok { "pass" } else { "FAIL" }, line.desc)?;
        }
        write!(f, "overall {}", if self.pass { "pass" } else { "FAIL" })
    }
}

fn line(desc: String, ok: bool) -> HypothesisLine {
    HypothesisLine { desc, ok }
}

/// Check every hypothesis of the family against the field. Failures are
/// report entries, never errors.
pub fn validate(field: &FieldSpec, params: &ConstructionParams) -> ValidationReport {
    let r = field.r() as u64;
    let qm1 = field.qm1() as u64;
    let mut ls = Vec::new();
    match *params {
        ConstructionParams::Thm2 { l, s, l1, l2 } | ConstructionParams::Thm3 { l, s, l1, l2 } => {
            let (l, s, l1, l2) = (l as u64, s as u64, l1 as u64, l2 as u64);
            ls.push(line(format!("r = {r} is 3 mod 4"), r % 4 == 3));
            ls.push(line(format!("l = {l} is even"), l % 2 == 0));
            ls.push(line(format!("s = {s} is even"), s % 2 == 0));
            ls.push(line(
                format!("l = {l} divides r - 1 = {}", r - 1),
                l != 0 && (r - 1) % l == 0,
            ));
            if l != 0 && (r - 1) % l == 0 {
                let hi = (r - 1) / l - 1;
                ls.push(line(format!("s = {s} is at most (r-1)/l - 1 = {hi}"), s <= hi));
            }
            ls.push(line(format!("l1 = {l1} is at most l/2 = {}", l / 2), l1 <= l / 2));
            ls.push(line(format!("l2 = {l2} is at most l/2 = {}", l / 2), l2 <= l / 2));
        }
        ConstructionParams::Thm4 { u, v, s, s_prime, t } => {
            let (u, v, s, sp, t) = (u as u64, v as u64, s as u64, s_prime as u64, t as u64);
            two_subgroup_common(&mut ls, qm1, u, v, s, sp, t);
            ls.push(line(
                format!("2u = {} divides (r+1)v = {}", 2 * u, (r + 1) * v),
                u != 0 && ((r + 1) * v) % (2 * u) == 0,
            ));
            ls.push(line(
                format!("v = {v} divides (r-1)u = {}", (r - 1) * u),
                v != 0 && ((r - 1) * u) % v == 0,
            ));
            ls.push(line(format!("4 does not divide v = {v}"), v % 4 != 0));
            if u != 0 && ((r + 1) * v) % (2 * u) == 0 {
                let m = (r + 1) * v / (2 * u);
                ls.push(line(format!("(r+1)v/2u = {m} is odd"), m % 2 == 1));
            }
            ls.push(line(
                format!("s + s' = {} is odd", s + sp),
                (s + sp) % 2 == 1,
            ));
        }
        ConstructionParams::Cor1 { u, v, s, s_prime, t } => {
            let (u, v, s, sp, t) = (u as u64, v as u64, s as u64, s_prime as u64, t as u64);
            two_subgroup_common(&mut ls, qm1, u, v, s, sp, t);
            ls.push(line(
                format!("2u = {} divides (r+1)v = {}", 2 * u, (r + 1) * v),
                u != 0 && ((r + 1) * v) % (2 * u) == 0,
            ));
            ls.push(line(
                format!("v = {v} divides (r-1)u = {}", (r - 1) * u),
                v != 0 && ((r - 1) * u) % v == 0,
            ));
            ls.push(line(format!("4 does not divide v = {v}"), v % 4 != 0));
            if u != 0 && ((r + 1) * v) % (2 * u) == 0 {
                let m = (r + 1) * v / (2 * u);
                ls.push(line(
                    format!("s = {s}, s' = {sp} both even, or (r+1)v/2u = {m} even"),
                    (s % 2 == 0 && sp % 2 == 0) || m % 2 == 0,
                ));
            }
        }
        ConstructionParams::Thm5 { u, v, s, s_prime, t } => {
            let (u, v, s, sp, t) = (u as u64, v as u64, s as u64, s_prime as u64, t as u64);
            two_subgroup_common(&mut ls, qm1, u, v, s, sp, t);
            // v sits exactly at 2-adic level lambda >= 2 and 2^lambda | u.
            let lam = v.trailing_zeros();
            ls.push(line(
                format!("v = {v} is 2^L mod 2^(L+1) for some L >= 2 (L = {lam})"),
                v != 0 && lam >= 2,
            ));
            ls.push(line(
                format!("2^L = {} divides u = {u}", 1u64 << lam),
                v != 0 && u % (1u64 << lam) == 0,
            ));
            ls.push(line(
                format!("2u = {} divides v(r+1) = {}", 2 * u, v * (r + 1)),
                u != 0 && (v * (r + 1)) % (2 * u) == 0,
            ));
            ls.push(line(
                format!("v = {v} divides u(r-1) = {}", u * (r - 1)),
                v != 0 && (u * (r - 1)) % v == 0,
            ));
            if u != 0 && (v * (r + 1)) % (2 * u) == 0 {
                let m = v * (r + 1) / (2 * u);
                ls.push(line(
                    format!("s = {s}, s' = {sp} both even, or v(r+1)/2u = {m} even"),
                    (s % 2 == 0 && sp % 2 == 0) || m % 2 == 0,
                ));
            }
        }
        ConstructionParams::Thm6 { u, v, w, s, t, f }
        | ConstructionParams::Cor2 { u, v, w, s, t, f }
        | ConstructionParams::Cor3 { u, v, w, s, t, f } => {
            let (u, v, w) = (u as u64, v as u64, w as u64);
            let (s, t, f) = (s as u64, t as u64, f as u64);
            for (name, d) in [("u", u), ("v", v), ("w", w)] {
                ls.push(line(format!("{name} = {d} is even"), d % 2 == 0));
                ls.push(line(
                    format!("{name} = {d} divides q - 1 = {qm1}"),
                    d != 0 && qm1 % d == 0,
                ));
            }
            for (num, den, label) in [
                ((r + 1) * v, u, "u | (r+1)v"),
                ((r + 1) * w, u, "u | (r+1)w"),
                ((r - 1) * u, v, "v | (r-1)u"),
                ((r - 1) * w, v, "v | (r-1)w"),
                ((r - 1) * u, w, "w | (r-1)u"),
                ((r - 1) * v, w, "w | (r-1)v"),
            ] {
                ls.push(line(format!("{label} ({den} | {num})"), den != 0 && num % den == 0));
            }
            if u != 0 && v != 0 && w != 0 && qm1 % u == 0 && qm1 % v == 0 && qm1 % w == 0 {
                ls.push(line(
                    format!("s = {s} is at most u/gcd(u,v) = {}", u / gcd(u, v)),
                    s <= u / gcd(u, v),
                ));
                ls.push(line(
                    format!("t = {t} is at most v/gcd(v,w) = {}", v / gcd(v, w)),
                    t <= v / gcd(v, w),
                ));
                ls.push(line(
                    format!("f = {f} is at most w/gcd(w,u) = {}", w / gcd(w, u)),
                    f <= w / gcd(w, u),
                ));
                if ((r + 1) * v) % u == 0 && ((r + 1) * w) % u == 0 {
                    let a = (r + 1) * v / u * s;
                    let b = (r + 1) * w / u * s;
                    ls.push(line(format!("(r+1)v/u * s = {a} is even"), a % 2 == 0));
                    ls.push(line(format!("(r+1)w/u * s = {b} is even"), b % 2 == 0));
                    if !matches!(params, ConstructionParams::Thm6 { .. }) {
                        let c = (r + 1) * v / u * (s * s.saturating_sub(1) / 2);
                        ls.push(line(
                            format!("(r+1)v/u * s(s-1)/2 = {c} is even"),
                            c % 2 == 0,
                        ));
                    }
                }
                if let Ok(n) = three_subgroup_size(field.q() as u64, u, v, w, s, t, f) {
                    match params {
                        ConstructionParams::Cor2 { .. } => {
                            ls.push(line(format!("n = {n} is odd"), n % 2 == 1))
                        }
                        _ => ls.push(line(format!("n = {n} is even"), n % 2 == 0)),
                    }
                }
            }
        }
    }
    ValidationReport::from_lines(ls)
}

/// Hypotheses shared by every two-subgroup family: u, v even distinct
/// divisors of q-1 and the three coset counts within range.
fn two_subgroup_common(
    ls: &mut Vec<HypothesisLine>,
    qm1: u64,
    u: u64,
    v: u64,
    s: u64,
    sp: u64,
    t: u64,
) {
    ls.push(line(format!("u = {u} is even"), u % 2 == 0));
    ls.push(line(format!("v = {v} is even"), v % 2 == 0));
    ls.push(line(format!("u = {u} and v = {v} are distinct"), u != v));
    ls.push(line(format!("u = {u} divides q - 1 = {qm1}"), u != 0 && qm1 % u == 0));
    ls.push(line(format!("v = {v} divides q - 1 = {qm1}"), v != 0 && qm1 % v == 0));
    if u != 0 && v != 0 && qm1 % u == 0 && qm1 % v == 0 {
        let g = gcd(u, v);
        ls.push(line(
            format!("s = {s} is at most u/gcd(u,v) = {}", u / g),
            s <= u / g,
        ));
        ls.push(line(
            format!("s' = {sp} is at most u/gcd(u,v) = {}", u / g),
            sp <= u / g,
        ));
        ls.push(line(
            format!("t = {t} is at most v/gcd(u,v) = {}", v / g),
            t <= v / g,
        ));
    }
}

/// n for the two-subgroup families.
fn two_subgroup_size(q: u64, u: u64, v: u64, s: u64, sp: u64, t: u64) -> Result<u64, EvalError> {
    let qm1 = q - 1;
    let overlap = intersection_card2(q, u, v, s, t)?;
    Ok((s + sp) * (qm1 / u) + t * (qm1 / v) - 2 * overlap)
}

/// n for the three-subgroup families.
fn three_subgroup_size(
    q: u64,
    u: u64,
    v: u64,
    w: u64,
    s: u64,
    t: u64,
    f: u64,
) -> Result<u64, EvalError> {
    let qm1 = q - 1;
    let card = intersection_card3(q, u, v, w, s, t, f)?;
    let pos = s * (qm1 / u) + t * (qm1 / v) + f * (qm1 / w) + 4 * card.abc;
    let neg = 2 * (card.ab + card.bc + card.ca);
    if pos < neg {
        return Err(EvalError::Cardinality {
            expected: 0,
            got: pos,
        });
    }
    Ok(pos - neg)
}

/// Cardinality the finished evaluation set must have.
pub fn expected_size(field: &FieldSpec, params: &ConstructionParams) -> Result<u64, EvalError> {
    let r = field.r() as u64;
    let q = field.q() as u64;
    Ok(match *params {
        ConstructionParams::Thm2 { l, s, l1, l2 } => {
            s as u64 * l as u64 + (l1 as u64 + l2 as u64) * (r + 1) + 1
        }
        ConstructionParams::Thm3 { l, s, l1, l2 } => {
            (s as u64 + 1) * l as u64 + (l1 as u64 + l2 as u64) * (r + 1) - 2 * l2 as u64 + 1
        }
        ConstructionParams::Thm4 { u, v, s, s_prime, t } => {
            two_subgroup_size(q, u as u64, v as u64, s as u64, s_prime as u64, t as u64)?
        }
        ConstructionParams::Cor1 { u, v, s, s_prime, t }
        | ConstructionParams::Thm5 { u, v, s, s_prime, t } => {
            two_subgroup_size(q, u as u64, v as u64, s as u64, s_prime as u64, t as u64)? + 1
        }
        ConstructionParams::Thm6 { u, v, w, s, t, f }
        | ConstructionParams::Cor2 { u, v, w, s, t, f } => {
            three_subgroup_size(q, u as u64, v as u64, w as u64, s as u64, t as u64, f as u64)?
        }
        ConstructionParams::Cor3 { u, v, w, s, t, f } => {
            three_subgroup_size(q, u as u64, v as u64, w as u64, s as u64, t as u64, f as u64)? + 1
        }
    })
}

/// Build the family's evaluation set. Validation must pass, and the result's
/// cardinality must equal the closed-form prediction.
pub fn build(field: &FieldSpec, params: &ConstructionParams) -> Result<EvalSet, EvalError> {
    let report = validate(field, params);
    if !report.pass {
        return Err(EvalError::Validation(
            report.failed_descriptions().join("; "),
        ));
    }
    let mut set = match *params {
        ConstructionParams::Thm2 { l, s, l1, l2 } => build_thm2(field, l, s, l1, l2)?,
        ConstructionParams::Thm3 { l, s, l1, l2 } => build_thm3(field, l, s, l1, l2)?,
        ConstructionParams::Thm4 { u, v, s, s_prime, t } => {
            build_two_subgroup(field, u, v, s, s_prime, t, false)?
        }
        ConstructionParams::Cor1 { u, v, s, s_prime, t }
        | ConstructionParams::Thm5 { u, v, s, s_prime, t } => {
            build_two_subgroup(field, u, v, s, s_prime, t, true)?
        }
        ConstructionParams::Thm6 { u, v, w, s, t, f }
        | ConstructionParams::Cor2 { u, v, w, s, t, f } => {
            build_three_subgroup(field, u, v, w, s, t, f, false)?
        }
        ConstructionParams::Cor3 { u, v, w, s, t, f } => {
            build_three_subgroup(field, u, v, w, s, t, f, true)?
        }
    };
    set.provenance = params.provenance();
    let expected = expected_size(field, params)?;
    if set.elements.len() as u64 != expected {
        return Err(EvalError::Cardinality {
            expected,
            got: set.elements.len() as u64,
        });
    }
    Ok(set)
}

/// Subsets: the s translated cosets of the subfield subgroup (the base coset
/// excluded), the first l1 odd norm fibers with zero adjoined, and the first
/// l2 even fibers. All three are pairwise disjoint, so the combiner reduces
/// to their union; the pieces keep their closed forms.
fn build_thm2(field: &FieldSpec, l: u32, s: u32, l1: u32, l2: u32) -> Result<EvalSet, EvalError> {
    let mut pieces = Vec::new();
    for k in 1..=s {
        pieces.push(Piece {
            kind: PieceKind::Coset(h_coset(field, l, s, k)?),
            label: format!("H{k}"),
        });
    }
    for i in 0..l1 {
        pieces.push(Piece {
            kind: PieceKind::Coset(norm_fiber(field, l, 2 * i + 1)?),
            label: format!("N{}", 2 * i + 1),
        });
    }
    pieces.push(Piece {
        kind: PieceKind::Singleton(El::ZERO),
        label: "zero".to_string(),
    });
    for j in 0..l2 {
        pieces.push(Piece {
            kind: PieceKind::Coset(norm_fiber(field, l, 2 * j)?),
            label: format!("N{}", 2 * j),
        });
    }
    assemble_from_closed_pieces(field, pieces)
}

/// Same skeleton with the base coset included; the first l2 even fibers each
/// share two subfield points with it, and the set is the plain union, so
/// those points are carved out of the base coset's piece to keep the
/// decomposition disjoint.
fn build_thm3(field: &FieldSpec, l: u32, s: u32, l1: u32, l2: u32) -> Result<EvalSet, EvalError> {
    let mut overlap = Vec::new();
    for j in 0..l2 {
        overlap.extend(fiber_field_intersection(field, l, 2 * j)?);
    }
    overlap.sort();
    let h0 = subgroup_of_size(field, l)?;
    for &x in &overlap {
        debug_assert!(h0.contains(field, x), "carved point outside base coset");
    }

    let mut pieces = Vec::new();
    if overlap.len() < h0.size(field) as usize {
        pieces.push(Piece {
            kind: if overlap.is_empty() {
                PieceKind::Coset(h0)
            } else {
                PieceKind::CosetMinus(h0, overlap)
            },
            label: "H0 minus shared subfield points".to_string(),
        });
    }
    for k in 1..=s {
        pieces.push(Piece {
            kind: PieceKind::Coset(h_coset(field, l, s, k)?),
            label: format!("H{k}"),
        });
    }
    for i in 0..l1 {
        pieces.push(Piece {
            kind: PieceKind::Coset(norm_fiber(field, l, 2 * i + 1)?),
            label: format!("N{}", 2 * i + 1),
        });
    }
    pieces.push(Piece {
        kind: PieceKind::Singleton(El::ZERO),
        label: "zero".to_string(),
    });
    for j in 0..l2 {
        pieces.push(Piece {
            kind: PieceKind::Coset(norm_fiber(field, l, 2 * j)?),
            label: format!("N{}", 2 * j),
        });
    }
    assemble_from_closed_pieces(field, pieces)
}

fn assemble_from_closed_pieces(
    field: &FieldSpec,
    pieces: Vec<Piece>,
) -> Result<EvalSet, EvalError> {
    let mut elements = Vec::new();
    for p in &pieces {
        elements.extend(p.materialize(field));
    }
    let n = elements.len();
    elements.sort();
    elements.dedup();
    if elements.len() != n {
        // The pieces were supposed to be disjoint by construction.
        return Err(EvalError::Cardinality {
            expected: n as u64,
            got: elements.len() as u64,
        });
    }
    Ok(EvalSet {
        elements,
        provenance: Provenance {
            tag: String::new(),
            params: Vec::new(),
        },
        pieces,
    })
}

/// The two-subgroup families share one skeleton: s translates of the step-u
/// subgroup against t translates of the step-v subgroup, plus s' cosets on
/// the odd side of the step-u lattice. The set is the odd-overlap combine;
/// zero is adjoined to the first subset when the construction extends.
fn build_two_subgroup(
    field: &FieldSpec,
    u: u32,
    v: u32,
    s: u32,
    s_prime: u32,
    t: u32,
    adjoin_zero: bool,
) -> Result<EvalSet, EvalError> {
    let mut a: Vec<El> = Vec::new();
    for i in 0..s {
        a.extend(CosetSpec::new(field, i as i64 * v as i64, u)?.members(field));
    }
    if adjoin_zero {
        a.push(El::ZERO);
    }
    let mut b: Vec<El> = Vec::new();
    for j in 0..t {
        b.extend(CosetSpec::new(field, j as i64 * u as i64, v)?.members(field));
    }
    let mut c: Vec<El> = Vec::new();
    for k in 0..s_prime {
        c.extend(CosetSpec::new(field, (2 * k as i64 + 1) * v as i64 / 2, u)?.members(field));
    }
    combine_nonempty(field, vec![a, b, c])
}

/// Three-subgroup skeleton: the subsets chase each other cyclically, each
/// being translates of one subgroup lattice by the next one's generator.
#[allow(clippy::too_many_arguments)]
fn build_three_subgroup(
    field: &FieldSpec,
    u: u32,
    v: u32,
    w: u32,
    s: u32,
    t: u32,
    f: u32,
    adjoin_zero: bool,
) -> Result<EvalSet, EvalError> {
    let mut a: Vec<El> = Vec::new();
    for i in 0..s {
        a.extend(CosetSpec::new(field, i as i64 * v as i64, u)?.members(field));
    }
    if adjoin_zero {
        a.push(El::ZERO);
    }
    let mut b: Vec<El> = Vec::new();
    for j in 0..t {
        b.extend(CosetSpec::new(field, j as i64 * w as i64, v)?.members(field));
    }
    let mut c: Vec<El> = Vec::new();
    for k in 0..f {
        c.extend(CosetSpec::new(field, k as i64 * u as i64, w)?.members(field));
    }
    combine_nonempty(field, vec![a, b, c])
}

fn combine_nonempty(field: &FieldSpec, subsets: Vec<Vec<El>>) -> Result<EvalSet, EvalError> {
    let nonempty: Vec<Vec<El>> = subsets.into_iter().filter(|s| !s.is_empty()).collect();
    if nonempty.is_empty() {
        return Err(EvalError::EmptyFamily);
    }
    let family = SubsetFamily::new(field, nonempty)?;
    Ok(combine(&family))
}

/// Text form: a one-line header followed by the sorted canonical encodings.
pub fn write_evalset(field: &FieldSpec, set: &EvalSet) -> String {
    let params: Vec<String> = set
        .provenance
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let modulus: Vec<String> = field.modulus().iter().map(|c| c.to_string()).collect();
    let mut out = format!(
        "q={} construction={} params={} modulus={}\n",
        field.q(),
        set.provenance.tag,
        params.join(","),
        modulus.join(",")
    );
    for el in &set.elements {
        out.push_str(&el.0.to_string());
        out.push('\n');
    }
    out
}

/// Header and element list recovered from the text form. Pieces are not
/// serialized; rebuild via [`build`] when they are needed.
#[derive(Debug, Clone)]
pub struct ParsedEvalSet {
    pub q: u32,
    pub tag: String,
    pub params: BTreeMap<String, u64>,
    pub modulus: Vec<u32>,
    pub elements: Vec<El>,
}

pub fn read_evalset(text: &str) -> Result<ParsedEvalSet, EvalError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| EvalError::Parse("empty file".into()))?;
    let mut q = None;
    let mut tag = None;
    let mut params = BTreeMap::new();
    let mut modulus = Vec::new();
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| EvalError::Parse(format!("bad header field {field}")))?;
        match key {
            "q" => {
                q = Some(
                    value
                        .parse::<u32>()
                        .map_err(|_| EvalError::Parse(format!("bad q {value}")))?,
                )
            }
            "construction" => tag = Some(value.to_string()),
            "params" => {
                for kv in value.split(',').filter(|s| !s.is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| EvalError::Parse(format!("bad parameter {kv}")))?;
                    let v = v
                        .parse::<u64>()
                        .map_err(|_| EvalError::Parse(format!("bad parameter value {kv}")))?;
                    params.insert(k.to_string(), v);
                }
            }
            "modulus" => {
                for c in value.split(',') {
                    modulus.push(
                        c.parse::<u32>()
                            .map_err(|_| EvalError::Parse(format!("bad modulus digit {c}")))?,
                    );
                }
            }
            other => return Err(EvalError::Parse(format!("unknown header key {other}"))),
        }
    }
    let q = q.ok_or_else(|| EvalError::Parse("header missing q".into()))?;
    let tag = tag.ok_or_else(|| EvalError::Parse("header missing construction".into()))?;
    let mut elements = Vec::new();
    for (i, l) in lines.enumerate() {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let enc = l
            .parse::<u32>()
            .map_err(|_| EvalError::Parse(format!("bad element on line {}", i + 2)))?;
        if enc >= q {
            return Err(EvalError::Parse(format!(
                "element {enc} outside field of size {q}"
            )));
        }
        elements.push(El(enc));
    }
    if !elements.windows(2).all(|w| w[0] < w[1]) {
        return Err(EvalError::Parse(
            "elements must be strictly ascending".into(),
        ));
    }
    Ok(ParsedEvalSet {
        q,
        tag,
        params,
        modulus,
        elements,
    })
}
