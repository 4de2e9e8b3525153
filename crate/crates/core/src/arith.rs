//! Integer and rational substrate: exact fractions, valuations, modular
//! exponentiation, primality and 64-bit factorization.

use std::sync::OnceLock;

pub use num_bigint::BigInt;
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary operation selector for [`rational_arithmetic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RationalOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Exact rational arithmetic. Results are always in lowest terms with a
/// positive denominator.
pub fn rational_arithmetic(
    a: &BigRational,
    b: &BigRational,
    op: RationalOp,
) -> Result<BigRational> {
    Ok(match op {
        RationalOp::Add => a + b,
        RationalOp::Sub => a - b,
        RationalOp::Mul => a * b,
        RationalOp::Div => {
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    })
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int<T: Into<BigInt>>(n: T) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exponent of `l` in a nonzero integer. Sign is ignored.
pub fn integer_valuation(n: &BigInt, l: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let l = BigInt::from(l);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&l);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// The `l`-adic valuation of a nonzero rational: `x = l^v * u` with `u` an
/// `l`-adic unit.
pub fn l_adic_valuation(x: &BigRational, l: u64) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::ZeroValuation);
    }
    if l < 2 {
        return Err(Error::out_of_range("l", l, "a prime"));
    }
    let num = integer_valuation(x.numer(), l) as i64;
    let den = integer_valuation(x.denom(), l) as i64;
    Ok(num - den)
}

/// Reduce an `l`-integral rational into `Z/lZ`. Returns `None` when `l`
/// divides the denominator.
pub fn reduce_rational_mod(x: &BigRational, l: u64) -> Option<u64> {
    let lb = BigInt::from(l);
    let den = x.denom().mod_floor(&lb).to_u64()?;
    if den == 0 {
        return None;
    }
    let num = x.numer().mod_floor(&lb).to_u64()?;
    let inv = mod_inverse(den, l)?;
    Some(mulmod(num, inv, l))
}

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod modulus` by square-and-multiply. The result lies in
/// `[0, modulus)`; negative bases are reduced first.
pub fn modpow(base: i64, exp: u64, modulus: u64) -> u64 {
    assert!(modulus >= 1, "modulus must be positive");
    if modulus == 1 {
        return 0;
    }
    let b = (base as i128).rem_euclid(modulus as i128) as u64;
    modpow_u64(b, exp, modulus)
}

pub(crate) fn modpow_u64(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, modulus);
        }
        base = mulmod(base, base, modulus);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (g, x, _) = extended_gcd(a as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
pub fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

const SMALL_PRIME_LIMIT: u64 = 1 << 20;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(SMALL_PRIME_LIMIT))
}

/// All primes `<= n`, by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Deterministic Miller-Rabin, valid for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = modpow_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorization with strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Largest prime factor. `None` only for the empty factorization of 1.
    pub fn largest_prime(&self) -> Option<u64> {
        self.factors.last().map(|&(p, _)| p)
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn product(&self) -> u128 {
        self.factors
            .iter()
            .map(|&(p, e)| (p as u128).pow(e))
            .product()
    }
}

/// Complete prime factorization of `m >= 2`: trial division by primes up to
/// 2^20, then Brent's rho with deterministic Miller-Rabin certification.
pub fn factorize(m: u64) -> Result<Factorization> {
    if m < 2 {
        return Err(Error::out_of_range("m", m, ">= 2"));
    }
    Ok(factorize_unchecked(m))
}

/// As [`factorize`] but for a big integer input; values beyond 64 bits are
/// rejected. The sign is ignored.
pub fn factorize_bigint(m: &BigInt) -> Result<Factorization> {
    let m = m.abs();
    match m.to_u64() {
        Some(v) => factorize(v),
        None => Err(Error::out_of_range("m", m, "within 64-bit width")),
    }
}

fn factorize_unchecked(mut m: u64) -> Factorization {
    let mut raw: Vec<u64> = Vec::new();
    for &p in small_primes() {
        if p * p > m {
            break;
        }
        while m.is_multiple_of(p) {
            raw.push(p);
            m /= p;
        }
    }
    if m > 1 {
        split_large(m, &mut raw);
    }
    raw.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in raw {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Factorization { factors }
}

fn split_large(m: u64, out: &mut Vec<u64>) {
    if m == 1 {
        return;
    }
    if is_prime(m) {
        out.push(m);
        return;
    }
    let d = pollard_brent(m);
    split_large(d, out);
    split_large(m / d, out);
}

/// Nontrivial divisor of a composite `n` with no factor below 2^20.
fn pollard_brent(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let f = |x: u64, c: u64| (mulmod(x, x, n) + c) % n;
    for c in 1u64.. {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y, c);
                    q = mulmod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys, c);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

pub fn is_squarefree(n: u64) -> bool {
    match n {
        0 => false,
        1 => true,
        _ => factorize_unchecked(n).is_squarefree(),
    }
}

/// Distinct prime divisors of `n >= 1`, increasing.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    factorize_unchecked(n).primes().collect()
}

/// Positive divisors of `n >= 1`, increasing.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    if n >= 2 {
        for &(p, e) in factorize_unchecked(n).factors() {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn euler_phi(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut phi = n;
    for p in prime_divisors(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// `|numerator(x)|` of a rational.
pub fn abs_numerator(x: &BigRational) -> BigInt {
    x.numer().abs()
}

pub fn big_pow(base: u64, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

/// Exact fraction as a `"p/q"` string (`"p"` when the denominator is 1).
pub fn fraction_string(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_fraction(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Serde adapter storing a [`BigRational`] as a fraction string.
pub mod fraction_serde {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fraction_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_fraction(&s).ok_or_else(|| de::Error::custom(format!("bad fraction {s:?}")))
    }
}

/// Serde adapter for a vector of fractions.
pub mod fraction_vec_serde {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        xs: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&fraction_string(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| {
                parse_fraction(s).ok_or_else(|| de::Error::custom(format!("bad fraction {s:?}")))
            })
            .collect()
    }
}
