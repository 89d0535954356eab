//! Length coverage census over GF(r^2).
//!
//! Eight construction classes each mark the even code lengths they can
//! reach. The hot path is pure integer arithmetic on the divisor lattice of
//! q-1 (coset counts, gcd/lcm overlap corrections); no field tables are
//! touched, so a full census at r=179 takes well under a second. Class
//! bitmaps are computed independently (parallel across outer divisor blocks,
//! OR-merged), then folded in class order for first-attribution counts.
//!
//! Witness parameter sets are recorded in a second, sequential pass so the
//! choice is schedule-independent. Class 2 only records witnesses from the
//! subfamily that end-to-end verification confirms (no odd norm fibers, or a
//! full complement of even fibers); its remaining claimed lengths stay in
//! the bitmap but carry no witness.

use crate::evalsets::{self, ConstructionParams, EvalError};
use crate::gf::{prime_factors, FieldSpec};
use crate::grscodes::{power_sums_vanish, solve_scaling, CodeSpec, GrsError};
use crate::chartool::{character_report_from_table, delta_table, CharError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

/// Abort threshold for the enumeration loops.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("r={0} is not an odd prime power congruent to 3 mod 4")]
    UnsupportedField(u64),
    #[error("q={0} exceeds the supported table size")]
    FieldTooLarge(u64),
    #[error("enumeration budget exhausted after {spent} inner iterations (budget {budget}); ranges are pathological")]
    BudgetExceeded { spent: u64, budget: u64 },
    #[error("malformed census file: {0}")]
    Malformed(String),
    #[error("witness for length {length} fails validation: {detail}")]
    BadWitness { length: u32, detail: String },
    #[error("spot verification failed at length {length}: {detail}")]
    SpotFailure { length: u32, detail: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grs(#[from] GrsError),
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fixed-size bitmap over code lengths 0..=q+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    fn new(len: usize) -> Self {
        Bitmap { words: vec![0; len.div_ceil(64)], len }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn or_assign(&mut self, other: &Bitmap) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Bits set here but not in `earlier`.
    fn count_new(&self, earlier: &Bitmap) -> u64 {
        self.words
            .iter()
            .zip(&earlier.words)
            .map(|(a, b)| (a & !b).count_ones() as u64)
            .sum()
    }
}

/// How class 5 ranges are read; the theorem text and the summary-table row
/// disagree (the row adds a divisibility restriction that contradicts the
/// rest of its own conditions, and drops the even-size branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Row5Mode {
    #[default]
    Theorem,
    TableRow,
}

#[derive(Debug, Clone, Copy)]
pub struct CensusOptions {
    /// Bit i-1 enables class i.
    pub classes: u8,
    pub row5: Row5Mode,
    /// Record one witness parameter set per reachable length.
    pub witnesses: bool,
    pub budget: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            classes: 0xFF,
            row5: Row5Mode::Theorem,
            witnesses: false,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl CensusOptions {
    pub fn with_classes(ids: &[u8]) -> Self {
        let mut mask = 0u8;
        for &id in ids {
            assert!((1..=8).contains(&id), "class id out of range");
            mask |= 1 << (id - 1);
        }
        CensusOptions { classes: mask, ..Default::default() }
    }

    fn has(&self, id: u8) -> bool {
        self.classes >> (id - 1) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub class_id: u8,
    pub params: ConstructionParams,
}

#[derive(Debug, Clone)]
pub struct LengthCensus {
    pub r: u64,
    pub q: u64,
    achievable: Bitmap,
    /// First class (1..8) to reach each length; 0 = unreached.
    attribution: Vec<u8>,
    /// Lengths first attributed to each class, indexed by class id - 1.
    pub per_class: [u64; 8],
    pub witnesses: Option<BTreeMap<u32, Witness>>,
    /// Inner-loop iterations spent, for budget accounting.
    pub ops: u64,
}

impl LengthCensus {
    pub fn contains(&self, length: u32) -> bool {
        self.achievable.get(length as usize)
    }

    pub fn count(&self) -> u64 {
        self.achievable.count()
    }

    pub fn lengths(&self) -> Vec<u32> {
        self.achievable.ones().map(|i| i as u32).collect()
    }

    pub fn ratio(&self) -> RatioReport {
        let n = self.count();
        RatioReport {
            r: self.r,
            q: self.q,
            n_covered: n,
            ratio: n as f64 / (self.q as f64 / 2.0),
        }
    }
}

/// N over q/2, the headline coverage figure.
#[derive(Debug, Clone, Copy)]
pub struct RatioReport {
    pub r: u64,
    pub q: u64,
    pub n_covered: u64,
    pub ratio: f64,
}

fn check_field(r: u64) -> Result<u64, CensusError> {
    let factors = prime_factors(r);
    let prime_power = !factors.is_empty() && factors.windows(2).all(|w| w[0] == w[1]);
    if r < 3 || !prime_power || r % 4 != 3 {
        return Err(CensusError::UnsupportedField(r));
    }
    let q = r * r;
    if q > 1 << 26 {
        return Err(CensusError::FieldTooLarge(q));
    }
    Ok(q)
}

fn even_divisors(n: u64) -> Vec<u64> {
    crate::cosets::divisors(n).into_iter().filter(|d| d % 2 == 0).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    crate::cosets::gcd(a, b)
}

fn lcm(a: u64, b: u64) -> u64 {
    crate::cosets::lcm(a, b)
}

/// Shared loop-budget meter; cheap enough to bump per block.
struct Budget<'a> {
    spent: &'a AtomicU64,
    budget: u64,
}

impl Budget<'_> {
    fn charge(&self, amount: u64) -> Result<(), CensusError> {
        let before = self.spent.fetch_add(amount, Ordering::Relaxed);
        if before + amount > self.budget {
            Err(CensusError::BudgetExceeded { spent: before + amount, budget: self.budget })
        } else {
            Ok(())
        }
    }
}

fn mark(bm: &mut Bitmap, len: i64, q: u64) {
    if len >= 2 && len <= q as i64 + 1 {
        bm.set(len as usize);
    }
}

/// Class 1: translated-coset sets with zero, always extended by one.
fn class1_each(r: u64, mut f: impl FnMut(i64, ConstructionParams)) {
    for l in even_divisors(r - 1) {
        let mut s = 0;
        while s < (r - 1) / l {
            for k in 0..=l {
                let l1 = k.min(l / 2);
                let params = ConstructionParams::Thm2 {
                    l: l as u32,
                    s: s as u32,
                    l1: l1 as u32,
                    l2: (k - l1) as u32,
                };
                f((s * l + (r + 1) * k + 2) as i64, params);
            }
            s += 2;
        }
    }
}

/// Class 2 lengths as claimed by the full parameter grid. Witnesses come
/// from `class2_each_sound` instead.
fn class2_claimed(r: u64, q: u64) -> Bitmap {
    let mut bm = Bitmap::new(q as usize + 2);
    for l in even_divisors(r - 1) {
        let mut s = 0;
        while s < (r - 1) / l {
            for l2 in 0..=l / 2 {
                for l1 in 0..=l / 2 {
                    let len = ((s + 1) * l + (l1 + l2) * (r + 1)) as i64 - 2 * l2 as i64 + 2;
                    mark(&mut bm, len, q);
                }
            }
            s += 2;
        }
    }
    bm
}

/// The verified subfamily of class 2: no odd fibers with at most one even
/// fiber, or every even fiber present.
fn class2_each_sound(r: u64, mut f: impl FnMut(i64, ConstructionParams)) {
    for l in even_divisors(r - 1) {
        let mut s = 0;
        while s < (r - 1) / l {
            let base = ConstructionParams::Thm3 { l: l as u32, s: s as u32, l1: 0, l2: 0 };
            f(((s + 1) * l + 2) as i64, base);
            f(
                ((s + 1) * l + r + 1) as i64,
                ConstructionParams::Thm3 { l: l as u32, s: s as u32, l1: 0, l2: 1 },
            );
            for l1 in 0..=l / 2 {
                let params = ConstructionParams::Thm3 {
                    l: l as u32,
                    s: s as u32,
                    l1: l1 as u32,
                    l2: (l / 2) as u32,
                };
                f((s * l + (l1 + l / 2) * (r + 1) + 2) as i64, params);
            }
            s += 2;
        }
    }
}

/// Two-subgroup divisor pairs shared by classes 3-5.
struct PairGeom {
    du: u64,
    dv: u64,
    overlap: u64,
    smax: u64,
    tmax: u64,
}

fn pair_geometry(q: u64, u: u64, v: u64) -> PairGeom {
    let big_q = q - 1;
    let g = gcd(u, v);
    PairGeom {
        du: big_q / u,
        dv: big_q / v,
        overlap: big_q / lcm(u, v),
        smax: u / g,
        tmax: v / g,
    }
}

/// Class 3 block for one (u, v): plain two-subgroup sets, even size.
fn class3_block(
    r: u64,
    q: u64,
    u: u64,
    v: u64,
    budget: &Budget<'_>,
    mut f: impl FnMut(i64, ConstructionParams),
) -> Result<(), CensusError> {
    if ((r + 1) * v) % (2 * u) != 0 || ((r - 1) * u) % v != 0 || v % 4 == 0 {
        return Ok(());
    }
    let h = (r + 1) * v / (2 * u);
    if h % 2 == 0 {
        return Ok(());
    }
    let geo = pair_geometry(q, u, v);
    for t in 0..=geo.tmax {
        for s in 0..=geo.smax {
            let sp0 = (s + 1) % 2;
            if sp0 > geo.smax {
                continue;
            }
            budget.charge((geo.smax - sp0) / 2 + 1)?;
            let mut sp = sp0;
            while sp <= geo.smax {
                let n = ((s + sp) * geo.du + t * geo.dv) as i64 - 2 * (s * t * geo.overlap) as i64;
                f(
                    n,
                    ConstructionParams::Thm4 {
                        u: u as u32,
                        v: v as u32,
                        s: s as u32,
                        s_prime: sp as u32,
                        t: t as u32,
                    },
                );
                sp += 2;
            }
        }
    }
    Ok(())
}

/// Class 4 block: zero adjoined and extended, length lands at n+2.
fn class4_block(
    r: u64,
    q: u64,
    u: u64,
    v: u64,
    budget: &Budget<'_>,
    mut f: impl FnMut(i64, ConstructionParams),
) -> Result<(), CensusError> {
    if ((r + 1) * v) % (2 * u) != 0 || ((r - 1) * u) % v != 0 || v % 4 == 0 {
        return Ok(());
    }
    let h = (r + 1) * v / (2 * u);
    let sstep = if h % 2 == 0 { 1 } else { 2 };
    let geo = pair_geometry(q, u, v);
    for t in 0..=geo.tmax {
        let mut s = 0;
        while s <= geo.smax {
            budget.charge(geo.smax / sstep + 1)?;
            let mut sp = 0;
            while sp <= geo.smax {
                let n = ((s + sp) * geo.du + t * geo.dv) as i64 - 2 * (s * t * geo.overlap) as i64;
                f(
                    n + 2,
                    ConstructionParams::Cor1 {
                        u: u as u32,
                        v: v as u32,
                        s: s as u32,
                        s_prime: sp as u32,
                        t: t as u32,
                    },
                );
                sp += sstep;
            }
            s += sstep;
        }
    }
    Ok(())
}

/// Class 5 block: deeper two-adic level; both parities of n are usable per
/// the theorem text, only the odd one per the printed table row.
#[allow(clippy::too_many_arguments)]
fn class5_block(
    r: u64,
    q: u64,
    u: u64,
    v: u64,
    row5: Row5Mode,
    budget: &Budget<'_>,
    mut f: impl FnMut(i64, ConstructionParams),
) -> Result<(), CensusError> {
    let lam = v.trailing_zeros();
    if lam < 2 || u % (1u64 << lam) != 0 {
        return Ok(());
    }
    if (v * (r + 1)) % (2 * u) != 0 || (u * (r - 1)) % v != 0 {
        return Ok(());
    }
    if row5 == Row5Mode::TableRow && v % 4 == 0 {
        // The printed row demands 4 does not divide v, which contradicts its
        // own two-adic condition; honoring it empties the class.
        return Ok(());
    }
    let h = v * (r + 1) / (2 * u);
    let sstep = if h % 2 == 0 { 1 } else { 2 };
    let geo = pair_geometry(q, u, v);
    for t in 0..=geo.tmax {
        let mut s = 0;
        while s <= geo.smax {
            budget.charge(geo.smax / sstep + 1)?;
            let mut sp = 0;
            while sp <= geo.smax {
                let n = ((s + sp) * geo.du + t * geo.dv) as i64 - 2 * (s * t * geo.overlap) as i64;
                let len = if n % 2 == 1 { n + 1 } else { n + 2 };
                if n % 2 == 1 || row5 == Row5Mode::Theorem {
                    f(
                        len,
                        ConstructionParams::Thm5 {
                            u: u as u32,
                            v: v as u32,
                            s: s as u32,
                            s_prime: sp as u32,
                            t: t as u32,
                        },
                    );
                }
                sp += sstep;
            }
            s += sstep;
        }
    }
    Ok(())
}

/// Admissible (v, w) continuations for a fixed u in the three-subgroup
/// families. The divisibility web couples all three subgroups.
fn triple_partners(r: u64, q: u64, u: u64) -> Vec<(u64, u64)> {
    let evens = even_divisors(q - 1);
    let mut out = Vec::new();
    for &v in &evens {
        if ((r + 1) * v) % u != 0 || ((r - 1) * u) % v != 0 {
            continue;
        }
        for &w in &evens {
            if ((r + 1) * w) % u != 0
                || ((r - 1) * w) % v != 0
                || ((r - 1) * u) % w != 0
                || ((r - 1) * v) % w != 0
            {
                continue;
            }
            out.push((v, w));
        }
    }
    out
}

/// Classes 6-8 block for one (u, v, w) triple. Overlap corrections use the
/// translate-collision counts, which floor-divide by the pairwise gcds.
#[allow(clippy::too_many_arguments)]
fn class678_block(
    r: u64,
    q: u64,
    class_id: u8,
    u: u64,
    v: u64,
    w: u64,
    budget: &Budget<'_>,
    mut f: impl FnMut(i64, ConstructionParams),
) -> Result<(), CensusError> {
    let big_q = q - 1;
    let guv = gcd(u, v);
    let gvw = gcd(v, w);
    let gwu = gcd(w, u);
    let g3 = gcd(guv, w);
    let (du, dv, dw) = (big_q / u, big_q / v, big_q / w);
    let luv = big_q / lcm(u, v);
    let lvw = big_q / lcm(v, w);
    let lwu = big_q / lcm(w, u);
    let luvw = big_q / lcm(lcm(u, v), w);
    let smax = u / guv;
    let tmax = v / gvw;
    let fmax = w / gwu;
    let cv = (r + 1) * v / u;
    let cw = (r + 1) * w / u;

    let primed = |count: u64, pair: u64| -> u64 {
        if count == 0 { 0 } else { (count - 1) * g3 / pair + 1 }
    };

    for s in 0..=smax {
        if (cv * s) % 2 != 0 || (cw * s) % 2 != 0 {
            continue;
        }
        if class_id >= 7 && (cv * (s * s.saturating_sub(1) / 2)) % 2 != 0 {
            continue;
        }
        let sp = primed(s, gwu);
        for t in 0..=tmax {
            let tp = primed(t, guv);
            budget.charge(fmax + 1)?;
            let base = (s * du + t * dv) as i64 - 2 * (s * tp * luv) as i64;
            for fc in 0..=fmax {
                let fp = primed(fc, gvw);
                let n = base + (fc * dw) as i64 - 2 * (t * fp * lvw) as i64
                    - 2 * (fc * sp * lwu) as i64
                    + 4 * (sp * tp * fp * luvw) as i64;
                let params = |fc: u64| -> ConstructionParams {
                    let (u, v, w) = (u as u32, v as u32, w as u32);
                    let (s, t, fc) = (s as u32, t as u32, fc as u32);
                    match class_id {
                        6 => ConstructionParams::Thm6 { u, v, w, s, t, f: fc },
                        7 => ConstructionParams::Cor2 { u, v, w, s, t, f: fc },
                        _ => ConstructionParams::Cor3 { u, v, w, s, t, f: fc },
                    }
                };
                match class_id {
                    6 if n % 2 == 0 => f(n, params(fc)),
                    7 if n % 2 == 1 => f(n + 1, params(fc)),
                    8 if n % 2 == 0 => f(n + 2, params(fc)),
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

/// One class's reachable-length bitmap. Parallel across outer divisor
/// blocks; the merge is an OR, so the schedule cannot change the result.
fn class_bitmap(
    r: u64,
    q: u64,
    class_id: u8,
    row5: Row5Mode,
    budget: &Budget<'_>,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<Bitmap, CensusError> {
    let size = q as usize + 2;
    match class_id {
        1 => {
            let mut bm = Bitmap::new(size);
            class1_each(r, |len, _| mark(&mut bm, len, q));
            Ok(bm)
        }
        2 => Ok(class2_claimed(r, q)),
        3..=5 => {
            let evens = even_divisors(q - 1);
            evens
                .par_iter()
                .map(|&u| {
                    let mut bm = Bitmap::new(size);
                    for &v in &evens {
                        if u == v {
                            continue;
                        }
                        let sink = |len: i64, _p: ConstructionParams| mark(&mut bm, len, q);
                        match class_id {
                            3 => class3_block(r, q, u, v, budget, sink)?,
                            4 => class4_block(r, q, u, v, budget, sink)?,
                            _ => class5_block(r, q, u, v, row5, budget, sink)?,
                        }
                    }
                    progress(&format!("class {class_id}: finished u={u}"));
                    Ok(bm)
                })
                .try_reduce(
                    || Bitmap::new(size),
                    |mut a, b| {
                        a.or_assign(&b);
                        Ok(a)
                    },
                )
        }
        6..=8 => {
            let evens = even_divisors(q - 1);
            evens
                .par_iter()
                .map(|&u| {
                    let mut bm = Bitmap::new(size);
                    for (v, w) in triple_partners(r, q, u) {
                        class678_block(r, q, class_id, u, v, w, budget, |len, _| {
                            mark(&mut bm, len, q)
                        })?;
                    }
                    progress(&format!("class {class_id}: finished u={u}"));
                    Ok(bm)
                })
                .try_reduce(
                    || Bitmap::new(size),
                    |mut a, b| {
                        a.or_assign(&b);
                        Ok(a)
                    },
                )
        }
        other => unreachable!("class id {other}"),
    }
}

/// Sequential witness sweep in class order; the first parameter set to reach
/// a length wins, making the witness table schedule-independent.
fn witness_pass(
    r: u64,
    q: u64,
    opts: &CensusOptions,
    budget: &Budget<'_>,
) -> Result<BTreeMap<u32, Witness>, CensusError> {
    let mut witnessed = Bitmap::new(q as usize + 2);
    let mut map = BTreeMap::new();
    let mut record = |len: i64, class_id: u8, params: ConstructionParams| {
        if len >= 2 && len <= q as i64 + 1 && !witnessed.get(len as usize) {
            witnessed.set(len as usize);
            map.insert(len as u32, Witness { class_id, params });
        }
    };

    if opts.has(1) {
        class1_each(r, |len, p| record(len, 1, p));
    }
    if opts.has(2) {
        class2_each_sound(r, |len, p| record(len, 2, p));
    }
    let evens = even_divisors(q - 1);
    for class_id in [3u8, 4, 5] {
        if !opts.has(class_id) {
            continue;
        }
        for &u in &evens {
            for &v in &evens {
                if u == v {
                    continue;
                }
                let sink = |len: i64, p: ConstructionParams| record(len, class_id, p);
                match class_id {
                    3 => class3_block(r, q, u, v, budget, sink)?,
                    4 => class4_block(r, q, u, v, budget, sink)?,
                    _ => class5_block(r, q, u, v, opts.row5, budget, sink)?,
                }
            }
        }
    }
    for class_id in [6u8, 7, 8] {
        if !opts.has(class_id) {
            continue;
        }
        for &u in &evens {
            for (v, w) in triple_partners(r, q, u) {
                class678_block(r, q, class_id, u, v, w, budget, |len, p| {
                    record(len, class_id, p)
                })?;
            }
        }
    }
    Ok(map)
}

pub fn length_census(r: u64, opts: &CensusOptions) -> Result<LengthCensus, CensusError> {
    length_census_with(r, opts, &|_| {})
}

pub fn length_census_with(
    r: u64,
    opts: &CensusOptions,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<LengthCensus, CensusError> {
    let q = check_field(r)?;
    let spent = AtomicU64::new(0);
    let budget = Budget { spent: &spent, budget: opts.budget };

    let size = q as usize + 2;
    let mut achievable = Bitmap::new(size);
    let mut attribution = vec![0u8; size];
    let mut per_class = [0u64; 8];
    for class_id in 1..=8u8 {
        if !opts.has(class_id) {
            continue;
        }
        let bm = class_bitmap(r, q, class_id, opts.row5, &budget, progress)?;
        per_class[class_id as usize - 1] = bm.count_new(&achievable);
        for i in bm.ones() {
            if attribution[i] == 0 {
                attribution[i] = class_id;
            }
        }
        achievable.or_assign(&bm);
        progress(&format!(
            "class {class_id}: merged ({} lengths so far)",
            achievable.count()
        ));
    }

    let witnesses = if opts.witnesses {
        Some(witness_pass(r, q, opts, &budget)?)
    } else {
        None
    };

    Ok(LengthCensus {
        r,
        q,
        achievable,
        attribution,
        per_class,
        witnesses,
        ops: spent.load(Ordering::Relaxed),
    })
}

/// The lengths one class reaches on its own, for inspection and the CLI.
pub fn enumerate_class(r: u64, class_id: u8, row5: Row5Mode) -> Result<Vec<u32>, CensusError> {
    assert!((1..=8).contains(&class_id), "class id out of range");
    let q = check_field(r)?;
    let spent = AtomicU64::new(0);
    let budget = Budget { spent: &spent, budget: DEFAULT_BUDGET };
    let bm = class_bitmap(r, q, class_id, row5, &budget, &|_| {})?;
    Ok(bm.ones().map(|i| i as u32).collect())
}

/// CSV export: `length,classId,witnessParams`, ascending, deterministic.
/// The witness column is `tag=<family>;key=value;...`, empty when the length
/// has no verified witness.
pub fn export_csv(census: &LengthCensus) -> String {
    let mut out = String::from("length,classId,witnessParams\n");
    for len in census.lengths() {
        let class_id = census.attribution[len as usize];
        let witness = census
            .witnesses
            .as_ref()
            .and_then(|m| m.get(&len))
            .map(|w| {
                let mut s = format!("tag={}", w.params.tag());
                for (k, v) in w.params.param_list() {
                    let _ = write!(s, ";{k}={v}");
                }
                s
            })
            .unwrap_or_default();
        let _ = writeln!(out, "{len},{class_id},{witness}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusRow {
    pub length: u32,
    pub class_id: u8,
    pub witness: Option<ConstructionParams>,
}

/// Parse an exported census and re-validate every witness against the field.
pub fn import_csv(field: &FieldSpec, text: &str) -> Result<Vec<CensusRow>, CensusError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("length,classId,witnessParams") => {}
        other => {
            return Err(CensusError::Malformed(format!(
                "bad header line {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    let mut last = 0u32;
    for line in lines {
        let mut cols = line.splitn(3, ',');
        let (Some(len_s), Some(cid_s), Some(wit_s)) = (cols.next(), cols.next(), cols.next())
        else {
            return Err(CensusError::Malformed(format!("short row {line:?}")));
        };
        let length: u32 = len_s
            .parse()
            .map_err(|_| CensusError::Malformed(format!("bad length {len_s:?}")))?;
        let class_id: u8 = cid_s
            .parse()
            .map_err(|_| CensusError::Malformed(format!("bad class id {cid_s:?}")))?;
        if length <= last {
            return Err(CensusError::Malformed(format!(
                "lengths not strictly ascending at {length}"
            )));
        }
        last = length;
        let witness = if wit_s.is_empty() {
            None
        } else {
            let mut tag = None;
            let mut kv = BTreeMap::new();
            for part in wit_s.split(';') {
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    CensusError::Malformed(format!("bad witness field {part:?}"))
                })?;
                if key == "tag" {
                    tag = Some(value.to_string());
                } else {
                    let num: u64 = value.parse().map_err(|_| {
                        CensusError::Malformed(format!("bad witness value {part:?}"))
                    })?;
                    kv.insert(key.to_string(), num);
                }
            }
            let tag = tag
                .ok_or_else(|| CensusError::Malformed("witness missing tag".into()))?;
            let params = ConstructionParams::from_tag(&tag, &kv)?;
            let report = evalsets::validate(field, &params);
            if !report.pass {
                return Err(CensusError::BadWitness {
                    length,
                    detail: report.failed_descriptions().join("; "),
                });
            }
            Some(params)
        };
        rows.push(CensusRow { length, class_id, witness });
    }
    Ok(rows)
}

/// Summary JSON `{r, q, N, ratio, perClass}`.
pub fn summary_json(census: &LengthCensus) -> String {
    let per_class: BTreeMap<String, u64> = (1..=8u8)
        .map(|id| (id.to_string(), census.per_class[id as usize - 1]))
        .collect();
    let report = census.ratio();
    serde_json::json!({
        "r": census.r,
        "q": census.q,
        "N": report.n_covered,
        "ratio": report.ratio,
        "perClass": per_class,
    })
    .to_string()
}

/// Sample `count` witnessed lengths and run each through the full pipeline:
/// build, character report, scaling solve, and the exact power-sum check.
/// The generator matrix itself is skipped; distinct points plus nonzero
/// scalings already pin the rank, and materializing hundreds of matrices
/// would dominate the runtime without adding assurance.
pub fn verify_witness_sample(
    field: &FieldSpec,
    census: &LengthCensus,
    count: usize,
    seed: u64,
) -> Result<Vec<u32>, CensusError> {
    let witnesses = census.witnesses.as_ref().expect("census built with witnesses");
    let mut lengths: Vec<u32> = witnesses.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lengths.shuffle(&mut rng);
    lengths.truncate(count);
    lengths.sort_unstable();

    let fail = |length: u32, detail: String| CensusError::SpotFailure { length, detail };
    for &length in &lengths {
        let witness = &witnesses[&length];
        let report = evalsets::validate(field, &witness.params);
        if !report.pass {
            return Err(fail(length, report.failed_descriptions().join("; ")));
        }
        let set = evalsets::build(field, &witness.params)?;
        if set.code_length() != length as usize {
            return Err(fail(
                length,
                format!("witness builds code length {}", set.code_length()),
            ));
        }
        let table = delta_table(field, &set)?;
        let char_report = character_report_from_table(field, &table)?;
        let extended = set.is_extended();
        let solution = solve_scaling(field, &set, &table, &char_report, extended)?;
        let spec = CodeSpec::new(field, set.elements.clone(), solution.scaling, extended)?;
        if !power_sums_vanish(field, &spec) {
            return Err(fail(length, "power sums do not vanish".into()));
        }
    }
    Ok(lengths)
}
