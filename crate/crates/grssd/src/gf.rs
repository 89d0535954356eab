//! Table-driven arithmetic for GF(q) = GF(p^(2m)).
//!
//! The field is realized as GF(p)[x]/(f) for a canonical modulus f: the
//! lexicographically smallest monic primitive polynomial of degree 2m, where
//! candidates are compared coefficient-by-coefficient from the highest degree
//! down. The residue class of x is then a primitive element theta, and the
//! whole field is stored as a pair of exp/log tables so that multiplication,
//! inversion, the quadratic character and square roots are O(1) lookups.
//! Elements travel as a canonical integer encoding: a polynomial
//! c0 + c1 x + ... packs to c0 + c1 p + c2 p^2 + ...

use thiserror::Error;

/// Hard ceiling on the field size; keeps both tables comfortably in memory.
pub const Q_CAP: u64 = 1 << 26;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GfError {
    #[error("p = {0} is not an odd prime")]
    NotPrime(u64),
    #[error("m must be positive")]
    ZeroDegree,
    #[error("q = {0} exceeds the table cap {Q_CAP}")]
    CapExceeded(u64),
    #[error("no primitive modulus of degree {0} found; construction is buggy")]
    NoPrimitivePolynomial(u32),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("{0} is undefined at zero")]
    ZeroArgument(&'static str),
    #[error("r = {0} is not a prime power")]
    NotPrimePower(u64),
}

/// Size parameters: q = r^2 = p^(2m).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldParams {
    p: u32,
    m: u32,
}

impl FieldParams {
    pub fn new(p: u32, m: u32) -> Result<Self, GfError> {
        if m == 0 {
            return Err(GfError::ZeroDegree);
        }
        if p < 3 || !is_prime(p as u64) {
            return Err(GfError::NotPrime(p as u64));
        }
        let mut q: u64 = 1;
        for _ in 0..2 * m {
            q = q.saturating_mul(p as u64);
            if q > Q_CAP {
                return Err(GfError::CapExceeded(q));
            }
        }
        Ok(FieldParams { p, m })
    }

    /// Factors r into p^m. Errors if r is not a power of a single odd prime.
    pub fn from_r(r: u64) -> Result<Self, GfError> {
        if r < 3 {
            return Err(GfError::NotPrimePower(r));
        }
        let mut p = 0u64;
        let mut n = r;
        let mut d = 2u64;
        while d * d <= n {
            if n % d == 0 {
                p = d;
                while n % d == 0 {
                    n /= d;
                }
                break;
            }
            d += 1;
        }
        if p == 0 {
            p = r; // r itself is prime
        } else if n != 1 {
            return Err(GfError::NotPrimePower(r));
        }
        let mut m = 0u32;
        let mut acc = 1u64;
        while acc < r {
            acc *= p;
            m += 1;
        }
        if acc != r {
            return Err(GfError::NotPrimePower(r));
        }
        FieldParams::new(p as u32, m)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// r = p^m.
    pub fn r(&self) -> u32 {
        (self.p as u64).pow(self.m) as u32
    }

    /// q = r^2.
    pub fn q(&self) -> u32 {
        let r = self.r() as u64;
        (r * r) as u32
    }
}

/// A field element, as its canonical base-p integer encoding.
///
/// The encoding is portable: it never depends on the exp/log tables, only on
/// the choice of modulus, which is itself deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct El(pub u32);

impl El {
    pub const ZERO: El = El(0);
    pub const ONE: El = El(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for El {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Result of a square-root extraction; the two roots are negatives of each
/// other (both zero for input zero).
pub type SqrtPair = (El, El);

/// An immutable field: parameters, canonical modulus, and the exp/log tables
/// for the primitive element theta (the class of x).
pub struct FieldSpec {
    params: FieldParams,
    /// Modulus coefficients c0..c_{2m}, constant term first, monic.
    modulus: Vec<u32>,
    /// exp[i] = canonical encoding of theta^i, for i in [0, q-2].
    exp: Vec<u32>,
    /// log[canonical] = i for nonzero encodings; log[0] is a sentinel.
    log: Vec<u32>,
}

const LOG_SENTINEL: u32 = u32::MAX;

impl FieldSpec {
    /// Builds the field: searches moduli in ascending leading-first
    /// lexicographic order, accepting the first one for which the walk
    /// theta^0, theta^1, ... first returns to 1 at step exactly q-1. That
    /// single walk certifies both irreducibility (a reducible modulus has a
    /// unit group of order < q-1, so the walk returns early or x is not a
    /// unit) and primitivity, and it fills the exp table as a side effect.
    pub fn build(params: FieldParams) -> Result<Self, GfError> {
        let p = params.p as u64;
        let deg = (2 * params.m) as usize;
        let q = params.q() as u64;

        // Iterate over non-leading coefficient vectors (c_{deg-1},...,c_0) in
        // ascending lexicographic order.
        let mut coeffs = vec![0u32; deg]; // index = degree of the term
        loop {
            if coeffs[0] != 0 {
                // x must be a unit mod f, so the constant term may not vanish;
                // candidates with c0 = 0 are skipped by the walk anyway, but
                // skipping here avoids pointless work.
                if let Some(exp) = primitive_walk(&coeffs, params) {
                    let mut log = vec![LOG_SENTINEL; q as usize];
                    for (i, &enc) in exp.iter().enumerate() {
                        log[enc as usize] = i as u32;
                    }
                    let mut modulus: Vec<u32> = coeffs.clone();
                    modulus.push(1); // monic leading coefficient
                    let field = FieldSpec {
                        params,
                        modulus,
                        exp,
                        log,
                    };
                    field.certify_order()?;
                    return Ok(field);
                }
            }
            // Next coefficient vector; most significant digit is the highest
            // degree term, so odometer-increment from the constant term up
            // would be wrong: increment from degree 0 only after exhausting
            // higher positions. Treat coeffs[deg-1] as the most significant.
            let mut pos = 0usize;
            loop {
                coeffs[pos] += 1;
                if (coeffs[pos] as u64) < p {
                    break;
                }
                coeffs[pos] = 0;
                pos += 1;
                if pos == deg {
                    return Err(GfError::NoPrimitivePolynomial(deg as u32));
                }
            }
        }
    }

    /// Convenience: build GF(r^2) for r = p^m given as a plain integer.
    pub fn for_r(r: u64) -> Result<Self, GfError> {
        FieldSpec::build(FieldParams::from_r(r)?)
    }

    /// Explicit check that theta^(q-1) = 1 and theta^((q-1)/ell) != 1 for
    /// every prime ell dividing q-1. The construction walk already implies
    /// this; the check is cheap and guards against table corruption.
    fn certify_order(&self) -> Result<(), GfError> {
        let qm1 = self.qm1();
        for ell in prime_factors(qm1 as u64) {
            let idx = (qm1 as u64 / ell) as usize;
            if self.exp[idx] == 1 {
                return Err(GfError::NoPrimitivePolynomial(2 * self.params.m));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn p(&self) -> u32 {
        self.params.p
    }

    pub fn r(&self) -> u32 {
        self.params.r()
    }

    pub fn q(&self) -> u32 {
        self.params.q()
    }

    pub fn qm1(&self) -> u32 {
        self.params.q() - 1
    }

    /// Modulus coefficients, constant term first, monic.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// The canonical primitive element (the residue class of x).
    pub fn theta(&self) -> El {
        El(self.exp[1])
    }

    /// theta^i for any integer exponent (reduced mod q-1).
    pub fn theta_pow(&self, i: i64) -> El {
        let n = self.qm1() as i64;
        El(self.exp[i.rem_euclid(n) as usize])
    }

    /// Discrete log of a nonzero element.
    pub fn log(&self, a: El) -> Result<u32, GfError> {
        if a.is_zero() {
            return Err(GfError::ZeroArgument("log"));
        }
        Ok(self.log[a.0 as usize])
    }

    pub fn add(&self, a: El, b: El) -> El {
        let p = self.params.p;
        let mut out = 0u32;
        let (mut x, mut y) = (a.0, b.0);
        let mut place = 1u32;
        while x != 0 || y != 0 {
            let s = (x % p + y % p) % p;
            out += s * place;
            x /= p;
            y /= p;
            place *= p;
        }
        El(out)
    }

    pub fn neg(&self, a: El) -> El {
        let p = self.params.p;
        let mut out = 0u32;
        let mut x = a.0;
        let mut place = 1u32;
        while x != 0 {
            let d = x % p;
            if d != 0 {
                out += (p - d) * place;
            }
            x /= p;
            place *= p;
        }
        El(out)
    }

    pub fn sub(&self, a: El, b: El) -> El {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: El, b: El) -> El {
        if a.is_zero() || b.is_zero() {
            return El::ZERO;
        }
        let n = self.qm1() as u64;
        let i = (self.log[a.0 as usize] as u64 + self.log[b.0 as usize] as u64) % n;
        El(self.exp[i as usize])
    }

    pub fn inv(&self, a: El) -> Result<El, GfError> {
        if a.is_zero() {
            return Err(GfError::ZeroInverse);
        }
        let n = self.qm1();
        let i = (n - self.log[a.0 as usize]) % n;
        Ok(El(self.exp[i as usize]))
    }

    /// a^e with 0^0 = 1.
    pub fn pow(&self, a: El, e: u64) -> El {
        if a.is_zero() {
            return if e == 0 { El::ONE } else { El::ZERO };
        }
        let n = self.qm1() as u64;
        let i = (self.log[a.0 as usize] as u64 * (e % n)) % n;
        El(self.exp[i as usize])
    }

    /// Embeds a small integer (e.g. a set cardinality) as a field scalar.
    pub fn scalar(&self, n: u64) -> El {
        let c = (n % self.params.p as u64) as u32;
        El(c)
    }

    /// Quadratic character: +1 for nonzero squares, -1 for non-squares.
    /// Squares are exactly the even powers of theta.
    pub fn eta(&self, a: El) -> Result<i8, GfError> {
        if a.is_zero() {
            return Err(GfError::ZeroArgument("eta"));
        }
        Ok(if self.log[a.0 as usize] % 2 == 0 { 1 } else { -1 })
    }

    /// Both square roots of a, or None when a is a non-square.
    /// sqrt(0) = (0, 0).
    pub fn sqrt(&self, a: El) -> Option<SqrtPair> {
        if a.is_zero() {
            return Some((El::ZERO, El::ZERO));
        }
        let i = self.log[a.0 as usize];
        if i % 2 != 0 {
            return None;
        }
        // With i = 2j the roots are theta^j and theta^(j + (q-1)/2) = -theta^j.
        let root = El(self.exp[(i / 2) as usize]);
        Some((root, self.neg(root)))
    }

    /// The norm onto the subfield: x^(r+1), surjective GF(q)^* -> GF(r)^*.
    pub fn norm(&self, a: El) -> Result<El, GfError> {
        if a.is_zero() {
            return Err(GfError::ZeroArgument("norm"));
        }
        Ok(self.pow(a, self.r() as u64 + 1))
    }

    /// All q encodings, zero first; handy for exhaustive tests.
    pub fn all_elements(&self) -> impl Iterator<Item = El> + '_ {
        (0..self.q()).map(El)
    }
}

/// Runs the multiply-by-x walk for a candidate modulus. Returns exp tables
/// when the first return to 1 happens at step exactly q-1, None otherwise.
fn primitive_walk(coeffs: &[u32], params: FieldParams) -> Option<Vec<u32>> {
    let p = params.p as u64;
    let deg = coeffs.len();
    let q = params.q() as u64;
    let qm1 = (q - 1) as usize;

    let mut exp = vec![0u32; qm1];
    let mut cur = vec![0u64; deg]; // coefficients of theta^i
    cur[0] = 1;
    exp[0] = 1;
    for i in 1..=qm1 {
        // Multiply by x: shift up, then reduce by the monic modulus.
        let carry = cur[deg - 1];
        for d in (1..deg).rev() {
            cur[d] = cur[d - 1];
        }
        cur[0] = 0;
        if carry != 0 {
            for d in 0..deg {
                let c = coeffs[d] as u64;
                if c != 0 {
                    // Subtract carry * c in GF(p).
                    cur[d] = (cur[d] + (p - c % p) * carry) % p;
                }
            }
        }
        let mut enc = 0u64;
        for d in (0..deg).rev() {
            enc = enc * p + cur[d] % p;
        }
        if enc == 1 {
            return if i == qm1 { Some(exp) } else { None };
        }
        if i < qm1 {
            exp[i] = enc as u32;
        } else {
            // Walk failed to return to 1 within the group order: the modulus
            // is reducible with x not a unit of full order, or x is a zero
            // divisor whose powers cycle without reaching 1.
            return None;
        }
    }
    None
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime factors, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(r: u64) -> FieldSpec {
        FieldSpec::for_r(r).expect("field builds")
    }

    #[test]
    fn canonical_moduli_are_reproducible() {
        // Independently derived smallest primitive moduli (constant term
        // first, monic): these pin the deterministic modulus search.
        assert_eq!(gf(7).modulus(), &[3, 1, 1]);
        assert_eq!(gf(11).modulus(), &[7, 1, 1]);
        assert_eq!(gf(19).modulus(), &[2, 1, 1]);
        assert_eq!(gf(23).modulus(), &[7, 1, 1]);
        assert_eq!(gf(151).modulus(), &[12, 1, 1]);
    }

    #[test]
    fn params_reject_bad_input() {
        assert_eq!(FieldParams::new(4, 1), Err(GfError::NotPrime(4)));
        assert_eq!(FieldParams::new(2, 1), Err(GfError::NotPrime(2)));
        assert_eq!(FieldParams::new(7, 0), Err(GfError::ZeroDegree));
        // 8209^2 > 2^26.
        assert!(matches!(
            FieldParams::new(8209, 1),
            Err(GfError::CapExceeded(_))
        ));
        // 8191^2 = 67092481 is just under the cap.
        assert!(FieldParams::new(8191, 1).is_ok());
        assert_eq!(FieldParams::from_r(12), Err(GfError::NotPrimePower(12)));
        let pp = FieldParams::from_r(27).unwrap();
        assert_eq!((pp.p(), pp.m()), (3, 3));
    }

    #[test]
    fn theta_is_x_and_tables_are_bijective() {
        let f = gf(7);
        // theta = x encodes as 0 + 1*p = 7 under the canonical packing.
        assert_eq!(f.theta(), El(7));
        assert_eq!(f.q(), 49);
        for i in 0..f.qm1() {
            let enc = f.exp[i as usize];
            assert_eq!(f.log[enc as usize], i, "log(exp({i})) = {i}");
        }
        // theta^(q-1) = 1 closes the cycle.
        assert_eq!(f.pow(f.theta(), f.qm1() as u64), El::ONE);
    }

    #[test]
    fn exponent_arithmetic() {
        let f = gf(19);
        let t = f.theta();
        assert_eq!(f.mul(f.pow(t, 3), f.pow(t, 5)), f.pow(t, 8));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = El(rng.gen_range(0..f.q()));
            assert_eq!(f.add(a, f.neg(a)), El::ZERO);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), El::ONE);
            }
        }
        assert_eq!(f.inv(El::ZERO), Err(GfError::ZeroInverse));
    }

    #[test]
    fn eta_is_multiplicative_and_matches_euler_criterion() {
        for r in [7u64, 19] {
            let f = gf(r);
            let half = (f.qm1() / 2) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..1000 {
                let a = El(rng.gen_range(1..f.q()));
                let b = El(rng.gen_range(1..f.q()));
                assert_eq!(
                    f.eta(f.mul(a, b)).unwrap(),
                    f.eta(a).unwrap() * f.eta(b).unwrap(),
                    "eta multiplicative at {a}, {b}"
                );
                // Euler criterion: a^((q-1)/2) is 1 for squares, -1 otherwise.
                let euler = f.pow(a, half);
                let expect = if f.eta(a).unwrap() == 1 {
                    El::ONE
                } else {
                    f.neg(El::ONE)
                };
                assert_eq!(euler, expect, "euler criterion at {a}");
            }
        }
    }

    #[test]
    fn minus_one_is_a_square() {
        for r in [7u64, 11, 19, 23, 151] {
            let f = gf(r);
            let m1 = f.neg(El::ONE);
            assert_eq!(f.eta(m1).unwrap(), 1, "r = {r}");
        }
    }

    #[test]
    fn eta_of_theta_is_minus_one() {
        let f = gf(19);
        assert_eq!(f.eta(f.theta()).unwrap(), -1);
        assert_eq!(f.eta(f.pow(f.theta(), 2)).unwrap(), 1);
        assert!(f.eta(El::ZERO).is_err());
    }

    #[test]
    fn subfield_units_are_norm_powers() {
        let f = gf(19);
        let r = f.r() as u64;
        // The set {x : x^(r-1) = 1} must be exactly the r-1 powers of
        // theta^(r+1).
        let mut fixed: Vec<El> = f
            .all_elements()
            .filter(|&x| !x.is_zero() && f.pow(x, r - 1) == El::ONE)
            .collect();
        fixed.sort();
        let beta = f.pow(f.theta(), r + 1);
        let mut gen: Vec<El> = (0..r - 1).map(|i| f.pow(beta, i)).collect();
        gen.sort();
        gen.dedup();
        assert_eq!(fixed.len(), (r - 1) as usize);
        assert_eq!(fixed, gen);
    }

    #[test]
    fn norm_lands_in_subfield_with_uniform_fibers() {
        let f = gf(7);
        let r = f.r() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = El(rng.gen_range(1..f.q()));
            let n = f.norm(a).unwrap();
            assert_eq!(f.pow(n, r - 1), El::ONE);
        }
        // Every value in GF(r)^* is hit by exactly r+1 elements.
        let mut counts = std::collections::HashMap::new();
        for x in f.all_elements().filter(|x| !x.is_zero()) {
            *counts.entry(f.norm(x).unwrap()).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), (r - 1) as usize);
        assert!(counts.values().all(|&c| c == r as u32 + 1));
        assert!(f.norm(El::ZERO).is_err());
    }

    #[test]
    fn sqrt_roundtrip_everywhere_small_field() {
        let f = gf(7);
        let mut squares = 0;
        for x in f.all_elements() {
            match f.sqrt(x) {
                Some((a, b)) => {
                    assert_eq!(f.mul(a, a), x);
                    assert_eq!(f.mul(b, b), x);
                    assert_eq!(b, f.neg(a));
                    if !x.is_zero() {
                        squares += 1;
                        assert_eq!(f.eta(x).unwrap(), 1);
                    }
                }
                None => assert_eq!(f.eta(x).unwrap(), -1),
            }
        }
        assert_eq!(squares, (f.qm1() / 2) as usize);
    }

    #[test]
    fn sqrt_roundtrip_random_larger_field() {
        let f = gf(19);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = El(rng.gen_range(0..f.q()));
            if let Some((a, _)) = f.sqrt(x) {
                assert_eq!(f.mul(a, a), x);
            } else {
                assert_eq!(f.eta(x).unwrap(), -1);
            }
        }
    }

    #[test]
    fn prime_power_field_builds() {
        // r = 27 = 3^3: a degree-6 modulus over GF(3).
        let f = gf(27);
        assert_eq!(f.q(), 729);
        assert_eq!(f.modulus().len(), 7);
        assert_eq!(f.pow(f.theta(), 728), El::ONE);
        assert_eq!(f.eta(f.neg(El::ONE)).unwrap(), 1);
    }

    #[test]
    fn scalar_embedding_reduces_mod_p() {
        let f = gf(7);
        assert_eq!(f.scalar(8), El(1));
        assert_eq!(f.scalar(7), El::ZERO);
        // The field has characteristic p: adding 1 seven times is zero.
        let mut acc = El::ZERO;
        for _ in 0..7 {
            acc = f.add(acc, El::ONE);
        }
        assert_eq!(acc, El::ZERO);
    }
}
