//! Multiplicative cosets and norm fibers as exponent arithmetic progressions.
//!
//! A coset c * <theta^d> never needs materializing to be useful: its vanishing
//! polynomial collapses to x^N - c^N (N the coset size), so both pi and delta
//! evaluate in O(log) field operations at any point. Everything downstream
//! (character reports, scaling solves) leans on these closed forms, with
//! brute-force products kept alongside as the oracle they must match.

use crate::gf::{El, FieldSpec, GfError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CosetError {
    #[error("{0} does not divide {1}")]
    NotADivisor(u64, u64),
    #[error("parameter {name} = {got} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        got: i64,
        lo: i64,
        hi: i64,
    },
    #[error("{0} must be even")]
    NotEven(u64),
    #[error("r = {0} is not 3 mod 4")]
    BadResidue(u64),
    #[error("point is not a member of the coset")]
    NotAMember,
    #[error(transparent)]
    Field(#[from] GfError),
}

/// The coset {theta^(offset + k*step) : 0 <= k < (q-1)/step}.
///
/// `step` divides q-1 and `offset` is stored reduced mod q-1. Two specs with
/// the same step describe the same set exactly when their offsets are
/// congruent mod step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetSpec {
    offset: u32,
    step: u32,
}

impl CosetSpec {
    pub fn new(field: &FieldSpec, offset: i64, step: u32) -> Result<Self, CosetError> {
        let qm1 = field.qm1();
        if step == 0 || qm1 % step != 0 {
            return Err(CosetError::NotADivisor(step as u64, qm1 as u64));
        }
        Ok(CosetSpec {
            offset: offset.rem_euclid(qm1 as i64) as u32,
            step,
        })
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    /// Number of elements, (q-1)/step.
    pub fn size(&self, field: &FieldSpec) -> u32 {
        field.qm1() / self.step
    }

    /// Set equality: same step and offsets congruent mod step.
    pub fn same_set(&self, other: &CosetSpec) -> bool {
        self.step == other.step && self.offset % self.step == other.offset % self.step
    }

    pub fn contains(&self, field: &FieldSpec, x: El) -> bool {
        match field.log(x) {
            Ok(i) => (i + self.step - self.offset % self.step) % self.step == 0,
            Err(_) => false,
        }
    }

    /// The vanishing polynomial at x, in closed form: the product of
    /// (x - a) over the coset telescopes to x^N - theta^(offset*N).
    pub fn pi_at(&self, field: &FieldSpec, x: El) -> El {
        let n = self.size(field) as u64;
        let lead = field.pow(x, n);
        let con = field.theta_pow(self.offset as i64 * n as i64);
        field.sub(lead, con)
    }

    /// The derivative of the vanishing polynomial at a member: N * x^(N-1).
    /// This equals the product of (x - a) over all other members.
    pub fn delta_at(&self, field: &FieldSpec, x: El) -> Result<El, CosetError> {
        if !self.contains(field, x) {
            return Err(CosetError::NotAMember);
        }
        let n = self.size(field) as u64;
        Ok(field.mul(field.scalar(n), field.pow(x, n - 1)))
    }

    /// Brute-force product of (x - a) over every member; the oracle pi_at
    /// must match.
    pub fn pi_brute(&self, field: &FieldSpec, x: El) -> El {
        self.members(field)
            .fold(El::ONE, |acc, a| field.mul(acc, field.sub(x, a)))
    }

    /// Brute-force product of (x - a) over members other than x itself.
    pub fn delta_brute(&self, field: &FieldSpec, x: El) -> Result<El, CosetError> {
        if !self.contains(field, x) {
            return Err(CosetError::NotAMember);
        }
        Ok(self
            .members(field)
            .filter(|&a| a != x)
            .fold(El::ONE, |acc, a| field.mul(acc, field.sub(x, a))))
    }

    /// Unsorted member walk in exponent order.
    pub fn members<'a>(&self, field: &'a FieldSpec) -> impl Iterator<Item = El> + 'a {
        let offset = self.offset;
        let step = self.step;
        (0..self.size(field)).map(move |k| field.theta_pow(offset as i64 + k as i64 * step as i64))
    }

    /// Sorted canonical encodings.
    pub fn materialize(&self, field: &FieldSpec) -> Vec<El> {
        let mut v: Vec<El> = self.members(field).collect();
        v.sort();
        v
    }
}

/// A union of cosets, optionally with the zero element adjoined. Pieces are
/// not required to be disjoint; `pairwise_disjoint` reports whether they are.
#[derive(Debug, Clone)]
pub struct CosetUnion {
    pub pieces: Vec<CosetSpec>,
    pub include_zero: bool,
}

impl CosetUnion {
    pub fn new(pieces: Vec<CosetSpec>, include_zero: bool) -> Self {
        CosetUnion {
            pieces,
            include_zero,
        }
    }

    /// Sorted canonical encodings with duplicates across pieces removed and
    /// zero appended when requested.
    pub fn materialize(&self, field: &FieldSpec) -> Vec<El> {
        let mut v: Vec<El> = self
            .pieces
            .iter()
            .flat_map(|c| c.members(field))
            .collect();
        if self.include_zero {
            v.push(El::ZERO);
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn pairwise_disjoint(&self) -> bool {
        for (i, a) in self.pieces.iter().enumerate() {
            for b in &self.pieces[i + 1..] {
                if a.step == b.step {
                    if a.same_set(b) {
                        return false;
                    }
                } else {
                    // Distinct steps: share an element iff the exponent
                    // progressions meet, i.e. offsets agree mod gcd of steps.
                    let g = gcd(a.step as u64, b.step as u64) as u32;
                    if a.offset % g == b.offset % g {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// The subgroup of GF(q)^* of size l: <theta^((q-1)/l)>.
pub fn subgroup_of_size(field: &FieldSpec, l: u32) -> Result<CosetSpec, CosetError> {
    let qm1 = field.qm1();
    if l == 0 || qm1 % l != 0 {
        return Err(CosetError::NotADivisor(l as u64, qm1 as u64));
    }
    CosetSpec::new(field, 0, qm1 / l)
}

/// The k-th translated coset of the size-l subgroup M of GF(r)^*, with the
/// representatives 1, beta, beta^2, ..., beta^(s/2), beta^(-1), ...,
/// beta^(-s/2) for beta = theta^(r+1): index 0 is M itself, indices
/// 1..=s/2 multiply by ascending powers of beta, and the upper half uses the
/// inverse representatives.
pub fn h_coset(field: &FieldSpec, l: u32, s: u32, k: u32) -> Result<CosetSpec, CosetError> {
    let r = field.r();
    require_divides(l, r - 1)?;
    if s % 2 != 0 {
        return Err(CosetError::NotEven(s as u64));
    }
    let max_s = (r - 1) / l - 1;
    if s > max_s {
        return Err(CosetError::OutOfRange {
            name: "s",
            got: s as i64,
            lo: 0,
            hi: max_s as i64,
        });
    }
    if k > s {
        return Err(CosetError::OutOfRange {
            name: "k",
            got: k as i64,
            lo: 0,
            hi: s as i64,
        });
    }
    let rp1 = (r + 1) as i64;
    let offset = if k == 0 {
        0
    } else if k <= s / 2 {
        k as i64 * rp1
    } else {
        -((k - s / 2) as i64) * rp1
    };
    CosetSpec::new(field, offset, field.qm1() / l)
}

/// The i-th fiber of the norm map for a partition of GF(r)^* into l classes:
/// all x with x^(r+1) = alpha^i where alpha generates the image subgroup of
/// size l. As a coset: offset i*(r-1)/l, step r-1, size r+1.
pub fn norm_fiber(field: &FieldSpec, l: u32, i: u32) -> Result<CosetSpec, CosetError> {
    let r = field.r();
    require_divides(l, r - 1)?;
    if i >= l {
        return Err(CosetError::OutOfRange {
            name: "i",
            got: i as i64,
            lo: 0,
            hi: l as i64 - 1,
        });
    }
    let offset = i as i64 * ((r - 1) / l) as i64;
    CosetSpec::new(field, offset, r - 1)
}

/// Intersection of the i-th norm fiber with GF(r)^*, in closed form: empty
/// for odd i; for even i exactly the two subgroup elements
/// theta^((i/2)(q-1)/l) and theta^((i/2 + l/2)(q-1)/l).
pub fn fiber_field_intersection(
    field: &FieldSpec,
    l: u32,
    i: u32,
) -> Result<Vec<El>, CosetError> {
    let r = field.r();
    if r % 4 != 3 {
        return Err(CosetError::BadResidue(r as u64));
    }
    if l % 2 != 0 {
        return Err(CosetError::NotEven(l as u64));
    }
    require_divides(l, r - 1)?;
    if i >= l {
        return Err(CosetError::OutOfRange {
            name: "i",
            got: i as i64,
            lo: 0,
            hi: l as i64 - 1,
        });
    }
    if i % 2 != 0 {
        return Ok(Vec::new());
    }
    let stride = (field.qm1() / l) as i64;
    let a = field.theta_pow((i / 2) as i64 * stride);
    let b = field.theta_pow(((i / 2) + l / 2) as i64 * stride);
    Ok(vec![a, b])
}

/// Pairwise/triple intersection cardinalities of the three coset unions
/// built from divisors u, v, w with s, t, f leading cosets each, by pure
/// integer arithmetic. The primed counts say how many cosets of the third
/// union's lattice fit inside the first s (resp. t, f) cosets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Card3 {
    pub ab: u64,
    pub bc: u64,
    pub ca: u64,
    pub abc: u64,
    pub s_prime: u64,
    pub t_prime: u64,
    pub f_prime: u64,
}

/// |A ∩ B| for A = s cosets offset by v-steps over <theta^u> and B = t cosets
/// offset by u-steps over <theta^v>: each of the s*t coset pairs meets in
/// exactly one coset of <theta^lcm(u,v)>.
pub fn intersection_card2(q: u64, u: u64, v: u64, s: u64, t: u64) -> Result<u64, CosetError> {
    let qm1 = q - 1;
    require_divides64(u, qm1)?;
    require_divides64(v, qm1)?;
    let g = gcd(u, v);
    check_range("s", s, u / g)?;
    check_range("t", t, v / g)?;
    Ok(qm1 * g / (u * v) * s * t)
}

pub fn intersection_card3(
    q: u64,
    u: u64,
    v: u64,
    w: u64,
    s: u64,
    t: u64,
    f: u64,
) -> Result<Card3, CosetError> {
    let qm1 = q - 1;
    for d in [u, v, w] {
        require_divides64(d, qm1)?;
    }
    check_range("s", s, u / gcd(u, v))?;
    check_range("t", t, v / gcd(v, w))?;
    check_range("f", f, w / gcd(w, u))?;

    let g3 = gcd(gcd(u, v), w);
    // floor((count-1) * g3 / pair_gcd) + 1, with count = 0 mapping to 0
    // because the floor of a negative ratio rounds toward minus infinity.
    let prime = |count: u64, pair_gcd: u64| -> u64 {
        (((count as i64 - 1) * g3 as i64).div_euclid(pair_gcd as i64) + 1).max(0) as u64
    };
    let s_prime = prime(s, gcd(w, u));
    let t_prime = prime(t, gcd(u, v));
    let f_prime = prime(f, gcd(v, w));

    Ok(Card3 {
        ab: qm1 / lcm(u, v) * s * t_prime,
        bc: qm1 / lcm(v, w) * t * f_prime,
        ca: qm1 / lcm(w, u) * f * s_prime,
        abc: qm1 / lcm(lcm(u, v), w) * s_prime * t_prime * f_prime,
        s_prime,
        t_prime,
        f_prime,
    })
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn require_divides(d: u32, n: u32) -> Result<(), CosetError> {
    if d == 0 || n % d != 0 {
        Err(CosetError::NotADivisor(d as u64, n as u64))
    } else {
        Ok(())
    }
}

fn require_divides64(d: u64, n: u64) -> Result<(), CosetError> {
    if d == 0 || n % d != 0 {
        Err(CosetError::NotADivisor(d, n))
    } else {
        Ok(())
    }
}

fn check_range(name: &'static str, got: u64, hi: u64) -> Result<(), CosetError> {
    if got > hi {
        Err(CosetError::OutOfRange {
            name,
            got: got as i64,
            lo: 0,
            hi: hi as i64,
        })
    } else {
        Ok(())
    }
}

/// Divisors of n, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}
