//! Built-in property suites behind the `self-test` command.
//!
//! Each property cross-checks a closed-form or combinatorial claim against
//! brute force on GF(49) and GF(361), small enough to run exhaustively in
//! seconds yet sharp enough that any sign, offset, or off-by-one regression
//! in the field tables, coset arithmetic, or difference products trips at
//! least one of them. Properties run in a fixed order and report the first
//! failure by name.

use crate::chartool::{delta_brute, delta_factored, theorem1_check};
use crate::cosets::{
    divisors, fiber_field_intersection, gcd, h_coset, intersection_card2, intersection_card3,
    norm_fiber, subgroup_of_size, CosetSpec, CosetUnion,
};
use crate::evalsets::{
    build, combine, multiset_identity_check, ConstructionParams, EvalSet, Piece, PieceKind,
    Provenance, SubsetFamily,
};
use crate::gf::{El, FieldSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Deliberate corruption switches for exercising the failure path. The CLI
/// exposes `delta_sign_error`, which multiplies every factored difference
/// product by the primitive element before comparison; that is a non-square,
/// so it flips the quadratic character and the factorization property must
/// report it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaultInjection {
    pub delta_sign_error: bool,
}

#[derive(Debug)]
pub struct Property {
    pub name: &'static str,
    pub result: Result<(), String>,
}

impl Property {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }
}

pub fn first_failure(suite: &[Property]) -> Option<&Property> {
    suite.iter().find(|p| !p.passed())
}

/// Run every property with a fixed seed. Returns all outcomes in suite
/// order; callers that only need pass/fail can use [`first_failure`].
pub fn run_suite(fault: FaultInjection, seed: u64) -> Vec<Property> {
    let f49 = FieldSpec::for_r(7).expect("GF(49)");
    let f361 = FieldSpec::for_r(19).expect("GF(361)");
    let f529 = FieldSpec::for_r(23).expect("GF(529)");
    let both = [&f49, &f361];

    let checks: [(&'static str, Result<(), String>); 10] = [
        (
            "lemma1-delta-factorization",
            lemma1_delta_factorization(&f49, &f361, fault, seed),
        ),
        ("lemma4-multiset-identity", lemma4_multiset_identity(&f49, seed)),
        (
            "lemma5-coset-distinctness",
            both.iter().copied().try_for_each(lemma5_coset_distinctness),
        ),
        (
            "lemma6-fiber-field-intersection",
            both.iter().copied().try_for_each(lemma6_fiber_field_intersection),
        ),
        ("lemma7-closed-forms", lemma7_closed_forms(&f49, &f361, seed)),
        (
            "lemma8-fiber-character-parity",
            both.iter().copied().try_for_each(lemma8_fiber_character_parity),
        ),
        ("lemma9-pairwise-intersection", lemma9_pairwise_intersection(&f361)),
        ("lemma10-triple-intersection", lemma10_triple_intersection(&f361, seed)),
        (
            "theorem1-uniformity-transfer",
            theorem1_uniformity_transfer(&f49, &f361, seed),
        ),
        ("eta-minus-one", eta_minus_one(&[&f49, &f361, &f529])),
    ];
    checks
        .into_iter()
        .map(|(name, result)| Property { name, result })
        .collect()
}

/// An evaluation set assembled from disjoint cosets, optionally with zero,
/// so the factored difference-product route stays in closed form.
fn coset_eval_set(field: &FieldSpec, cosets: Vec<CosetSpec>, zero: bool) -> EvalSet {
    let union = CosetUnion::new(cosets.clone(), zero);
    debug_assert!(union.pairwise_disjoint());
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
            tag: "selftest".to_string(),
            params: vec![],
        },
        pieces,
    }
}

fn dual_route_agrees(
    field: &FieldSpec,
    set: &EvalSet,
    fault: FaultInjection,
    context: &str,
) -> Result<(), String> {
    for &e in &set.elements {
        let mut factored =
            delta_factored(field, set, e).map_err(|err| format!("{context}: {err}"))?;
        if fault.delta_sign_error {
            factored = field.mul(factored, field.theta());
        }
        let brute = delta_brute(field, set, e).map_err(|err| format!("{context}: {err}"))?;
        if factored != brute {
            return Err(format!(
                "{context}: element {e} has factored delta {factored} but brute delta {brute}"
            ));
        }
    }
    Ok(())
}

fn lemma1_delta_factorization(
    f49: &FieldSpec,
    f361: &FieldSpec,
    fault: FaultInjection,
    seed: u64,
) -> Result<(), String> {
    // Every coset step in GF(49), with and without the zero point.
    for d in divisors(f49.qm1() as u64) {
        for zero in [false, true] {
            let take = d.min(3) as u32;
            let cosets: Vec<CosetSpec> = (0..take)
                .map(|off| CosetSpec::new(f49, off as i64, d as u32).expect("divisor step"))
                .collect();
            let set = coset_eval_set(f49, cosets, zero);
            dual_route_agrees(f49, &set, fault, &format!("GF(49) step {d} zero={zero}"))?;
        }
    }
    // Twenty random disjoint unions in GF(361).
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1e37);
    let divs: Vec<u64> = divisors(f361.qm1() as u64)
        .into_iter()
        .filter(|&d| d >= 4)
        .collect();
    for round in 0..20 {
        let d = divs[rng.gen_range(0..divs.len())];
        let picks = rng.gen_range(1..=d.min(3)) as usize;
        let mut offsets: Vec<u32> = (0..d as u32).collect();
        offsets.shuffle(&mut rng);
        offsets.truncate(picks);
        let cosets: Vec<CosetSpec> = offsets
            .into_iter()
            .map(|off| CosetSpec::new(f361, off as i64, d as u32).expect("divisor step"))
            .collect();
        let set = coset_eval_set(f361, cosets, rng.gen_bool(0.5));
        dual_route_agrees(f361, &set, fault, &format!("GF(361) round {round} step {d}"))?;
    }
    Ok(())
}

fn lemma4_multiset_identity(f49: &FieldSpec, seed: u64) -> Result<(), String> {
    let universe: Vec<El> = f49.all_elements().take(40).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4444);
    for round in 0..200 {
        let count = rng.gen_range(2..=4);
        let subsets: Vec<Vec<El>> = (0..count)
            .map(|_| {
                let size = rng.gen_range(1..=10);
                let mut pool = universe.clone();
                pool.shuffle(&mut rng);
                pool.truncate(size);
                pool
            })
            .collect();
        let family =
            SubsetFamily::new(f49, subsets).map_err(|e| format!("round {round}: {e}"))?;
        if !multiset_identity_check(&family) {
            return Err(format!("round {round}: multiset identity violated"));
        }
    }
    Ok(())
}

fn lemma5_coset_distinctness(field: &FieldSpec) -> Result<(), String> {
    let r = field.r() as u64;
    let qm1 = field.qm1() as u64;
    for l in divisors(r - 1) {
        let period = (r - 1) / l;
        let step = (qm1 / l) as u32;
        for i in 0..2 * period {
            let a = CosetSpec::new(field, (i * (r + 1)) as i64, step).expect("divisor step");
            let ma = a.materialize(field);
            for j in 0..2 * period {
                let b =
                    CosetSpec::new(field, (j * (r + 1)) as i64, step).expect("divisor step");
                let predicted = (i % period) == (j % period);
                if a.same_set(&b) != predicted || (ma == b.materialize(field)) != predicted {
                    return Err(format!(
                        "r={r} l={l}: translate pair ({i}, {j}) disagrees with the \
                         divisibility criterion"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn lemma6_fiber_field_intersection(field: &FieldSpec) -> Result<(), String> {
    let r = field.r() as u64;
    for l in divisors(r - 1).into_iter().filter(|d| d % 2 == 0) {
        for i in 0..l as u32 {
            let closed = fiber_field_intersection(field, l as u32, i)
                .map_err(|e| format!("l={l} i={i}: {e}"))?;
            let mut closed = closed;
            closed.sort();
            let fiber = norm_fiber(field, l as u32, i).map_err(|e| format!("l={l}: {e}"))?;
            let mut brute: Vec<El> = fiber
                .members(field)
                .filter(|&x| field.pow(x, r - 1) == El::ONE)
                .collect();
            brute.sort();
            if closed != brute {
                return Err(format!(
                    "r={r} l={l} i={i}: closed-form intersection {closed:?} != brute {brute:?}"
                ));
            }
        }
    }
    Ok(())
}

fn lemma7_closed_forms(f49: &FieldSpec, f361: &FieldSpec, seed: u64) -> Result<(), String> {
    // GF(49): every step, every offset, every point.
    for d in divisors(f49.qm1() as u64) {
        for off in 0..d {
            let c = CosetSpec::new(f49, off as i64, d as u32).expect("divisor step");
            for x in f49.all_elements() {
                if c.pi_at(f49, x) != c.pi_brute(f49, x) {
                    return Err(format!("GF(49) step {d} offset {off}: pi mismatch at {x}"));
                }
                if c.contains(f49, x) && c.delta_at(f49, x) != c.delta_brute(f49, x) {
                    return Err(format!(
                        "GF(49) step {d} offset {off}: delta mismatch at {x}"
                    ));
                }
            }
        }
    }
    // GF(361): every step, sampled offsets and points.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7777);
    for d in divisors(f361.qm1() as u64) {
        for off in [0, (d - 1).min(1)] {
            let c = CosetSpec::new(f361, off as i64, d as u32).expect("divisor step");
            for _ in 0..25 {
                let x = El(rng.gen_range(0..f361.q()));
                if c.pi_at(f361, x) != c.pi_brute(f361, x) {
                    return Err(format!("GF(361) step {d} offset {off}: pi mismatch at {x}"));
                }
            }
            for member in c.members(f361).take(5) {
                if c.delta_at(f361, member) != c.delta_brute(f361, member) {
                    return Err(format!(
                        "GF(361) step {d} offset {off}: delta mismatch at {member}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// The corrected fiber parity law: over the subgroup of size l, the
/// vanishing polynomial of that subgroup evaluated on the i-th norm fiber
/// (off the subgroup itself) has character (-1)^i, and the product over any
/// full translate ladder keeps character +1.
fn lemma8_fiber_character_parity(field: &FieldSpec) -> Result<(), String> {
    let r = field.r() as u64;
    for l in divisors(r - 1).into_iter().filter(|d| d % 2 == 0) {
        let l = l as u32;
        let h0 = subgroup_of_size(field, l).map_err(|e| format!("l={l}: {e}"))?;
        let max_s = ((r - 1) / l as u64 - 1) as u32 & !1;
        for i in 0..l {
            let fiber = norm_fiber(field, l, i).map_err(|e| format!("l={l} i={i}: {e}"))?;
            let want = if i % 2 == 0 { 1 } else { -1 };
            for b in fiber.members(field) {
                if h0.contains(field, b) {
                    continue;
                }
                let eta = field
                    .eta(h0.pi_at(field, b))
                    .map_err(|e| format!("l={l} i={i} b={b}: {e}"))?;
                if eta != want {
                    return Err(format!(
                        "r={r} l={l} i={i}: character of the subgroup vanishing polynomial \
                         at {b} is {eta}, parity law wants {want}"
                    ));
                }
                let mut s = 2;
                while s <= max_s {
                    let mut prod = El::ONE;
                    for k in 1..=s {
                        let hk =
                            h_coset(field, l, s, k).map_err(|e| format!("l={l} s={s}: {e}"))?;
                        prod = field.mul(prod, hk.pi_at(field, b));
                    }
                    let eta = field
                        .eta(prod)
                        .map_err(|e| format!("l={l} s={s} b={b}: {e}"))?;
                    if eta != 1 {
                        return Err(format!(
                            "r={r} l={l} s={s} i={i}: translate-ladder product at {b} has \
                             character {eta}, want +1"
                        ));
                    }
                    s += 2;
                }
            }
        }
    }
    Ok(())
}

fn lemma9_pairwise_intersection(field: &FieldSpec) -> Result<(), String> {
    let q = field.q() as u64;
    let qm1 = q - 1;
    let mut checked = 0u32;
    for &u in divisors(qm1).iter() {
        for &v in divisors(qm1).iter() {
            let g = gcd(u, v);
            if u / g < 2 || v / g < 2 {
                continue;
            }
            let (s, t) = (2u64, 2u64);
            let a: HashSet<El> = (0..s)
                .flat_map(|i| {
                    CosetSpec::new(field, i as i64 * v as i64, u as u32)
                        .expect("divisor step")
                        .materialize(field)
                })
                .collect();
            let inter = (0..t)
                .flat_map(|j| {
                    CosetSpec::new(field, j as i64 * u as i64, v as u32)
                        .expect("divisor step")
                        .materialize(field)
                })
                .filter(|x| a.contains(x))
                .count() as u64;
            let formula =
                intersection_card2(q, u, v, s, t).map_err(|e| format!("u={u} v={v}: {e}"))?;
            if formula != inter {
                return Err(format!(
                    "u={u} v={v}: formula {formula} != materialized {inter}"
                ));
            }
            checked += 1;
        }
    }
    if checked < 50 {
        return Err(format!("only {checked} divisor pairs exercised"));
    }
    Ok(())
}

fn lemma10_triple_intersection(field: &FieldSpec, seed: u64) -> Result<(), String> {
    let q = field.q() as u64;
    let divs = divisors(q - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaaaa);
    let mut done = 0;
    while done < 50 {
        let u = divs[rng.gen_range(0..divs.len())];
        let v = divs[rng.gen_range(0..divs.len())];
        let w = divs[rng.gen_range(0..divs.len())];
        let s = rng.gen_range(0..=u / gcd(u, v));
        let t = rng.gen_range(0..=v / gcd(v, w));
        let fc = rng.gen_range(0..=w / gcd(w, u));
        let card = intersection_card3(q, u, v, w, s, t, fc)
            .map_err(|e| format!("u={u} v={v} w={w}: {e}"))?;

        let materialize = |count: u64, offset_step: u64, step: u64| -> HashSet<El> {
            (0..count)
                .flat_map(|i| {
                    CosetSpec::new(field, (i * offset_step) as i64, step as u32)
                        .expect("divisor step")
                        .materialize(field)
                })
                .collect()
        };
        let a = materialize(s, v, u);
        let b = materialize(t, w, v);
        let c = materialize(fc, u, w);
        let got = (
            a.intersection(&b).count() as u64,
            b.intersection(&c).count() as u64,
            c.intersection(&a).count() as u64,
            a.iter().filter(|x| b.contains(x) && c.contains(x)).count() as u64,
        );
        if got != (card.ab, card.bc, card.ca, card.abc) {
            return Err(format!(
                "u={u} v={v} w={w} s={s} t={t} f={fc}: formula \
                 ({}, {}, {}, {}) != materialized {got:?}",
                card.ab, card.bc, card.ca, card.abc
            ));
        }
        done += 1;
    }
    Ok(())
}

fn theorem1_uniformity_transfer(
    f49: &FieldSpec,
    f361: &FieldSpec,
    seed: u64,
) -> Result<(), String> {
    // Built families: decompose each evaluation set into its own disjoint
    // pieces and require that the per-piece hypothesis holds for one sign
    // and that the conclusion always follows.
    let families = [
        ConstructionParams::Thm2 { l: 6, s: 2, l1: 1, l2: 1 },
        ConstructionParams::Thm3 { l: 18, s: 0, l1: 0, l2: 9 },
        ConstructionParams::Thm4 { u: 20, v: 18, s: 9, s_prime: 10, t: 2 },
        ConstructionParams::Thm5 { u: 20, v: 36, s: 2, s_prime: 4, t: 7 },
        ConstructionParams::Thm6 { u: 2, v: 18, w: 18, s: 1, t: 1, f: 4 },
    ];
    for params in &families {
        let set = build(f361, params).map_err(|e| format!("{}: {e}", params.tag()))?;
        let subsets: Vec<Vec<El>> = set.pieces.iter().map(|p| p.materialize(f361)).collect();
        let family =
            SubsetFamily::new(f361, subsets).map_err(|e| format!("{}: {e}", params.tag()))?;
        let mut held = false;
        for c in [1i8, -1] {
            let outcome =
                theorem1_check(f361, &family, c).map_err(|e| format!("{}: {e}", params.tag()))?;
            if outcome.hypothesis_holds {
                held = true;
                if !outcome.conclusion_holds {
                    return Err(format!(
                        "{}: hypothesis holds at c={c} but the combined set is not uniform",
                        params.tag()
                    ));
                }
            }
        }
        if !held {
            return Err(format!(
                "{}: hypothesis holds for neither sign on the built family",
                params.tag()
            ));
        }
    }

    // Randomized, possibly overlapping coset families in GF(49); keep
    // drawing until the hypothesis has held 100 times.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0101);
    let steps = [16u64, 24, 48];
    let mut hits = 0;
    for attempt in 0..200_000u32 {
        if hits >= 100 {
            return Ok(());
        }
        let count = rng.gen_range(2..=3);
        let subsets: Vec<Vec<El>> = (0..count)
            .map(|_| {
                let d = steps[rng.gen_range(0..steps.len())];
                let off = rng.gen_range(0..d) as i64;
                CosetSpec::new(f49, off, d as u32)
                    .expect("divisor step")
                    .materialize(f49)
            })
            .collect();
        let family = SubsetFamily::new(f49, subsets)
            .map_err(|e| format!("attempt {attempt}: {e}"))?;
        if combine(&family).len() < 2 {
            continue;
        }
        for c in [1i8, -1] {
            let outcome =
                theorem1_check(f49, &family, c).map_err(|e| format!("attempt {attempt}: {e}"))?;
            if outcome.hypothesis_holds {
                hits += 1;
                if !outcome.conclusion_holds {
                    return Err(format!(
                        "attempt {attempt}: hypothesis holds at c={c} without uniformity"
                    ));
                }
            }
        }
    }
    if hits < 100 {
        return Err(format!(
            "only {hits} of 100 hypothesis-holding random families found"
        ));
    }
    Ok(())
}

fn eta_minus_one(fields: &[&FieldSpec]) -> Result<(), String> {
    for field in fields {
        let minus_one = field.neg(El::ONE);
        let eta = field
            .eta(minus_one)
            .map_err(|e| format!("q={}: {e}", field.q()))?;
        if eta != 1 {
            return Err(format!("q={}: character of -1 is {eta}, want +1", field.q()));
        }
    }
    Ok(())
}
