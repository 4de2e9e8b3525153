//! Largest prime factors of `N - 1`, the set of primes `N` with
//! `P+(N - 1)^2 > N`, its empirical density, the coefficient-field degree
//! bound built on it, and the squarefree families `N_r`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, is_prime, primes_up_to};
use crate::{Error, Result};

/// Default upper limit for [`goldfeld_scan`].
pub const DEFAULT_SCAN_BOUND: u64 = 100_000_000;

/// Upper limit for [`enumerate_nr`].
pub const NR_BOUND: u64 = 1_000_000;

const SEGMENT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldfeldRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub p_plus: u64,
    pub member: bool,
    pub witness_l: Option<u64>,
}

impl GoldfeldRecord {
    fn from_parts(n: u64, p_plus: u64) -> Self {
        let member = (p_plus as u128) * (p_plus as u128) > n as u128;
        Self {
            n,
            p_plus,
            member,
            witness_l: member.then_some(p_plus),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub x: u64,
    #[serde(rename = "S_x")]
    pub s_x: u64,
    pub pi_like: f64,
    pub ratio: f64,
    /// Number of primes `<= x`, 2 included.
    pub prime_count: u64,
}

/// `P+(m)`, the largest prime factor of `m >= 2`.
pub fn largest_prime_factor(m: u64) -> Result<u64> {
    Ok(factorize(m)?
        .largest_prime()
        .expect("m >= 2 has a prime factor"))
}

pub fn goldfeld_membership(n: u64) -> Result<GoldfeldRecord> {
    if n < 3 {
        return Err(Error::out_of_range("N", n, "prime >= 3"));
    }
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    Ok(GoldfeldRecord::from_parts(n, largest_prime_factor(n - 1)?))
}

/// Density of members among primes up to `x <= DEFAULT_SCAN_BOUND`.
pub fn goldfeld_scan(x: u64) -> Result<DensityEstimate> {
    goldfeld_scan_with(x, DEFAULT_SCAN_BOUND, |_| {})
}

/// Segmented scan over primes `3 <= N <= x`. Every record is handed to
/// `emit` in increasing order of `N`. Segments run on the current rayon pool.
pub fn goldfeld_scan_with<F>(x: u64, bound: u64, mut emit: F) -> Result<DensityEstimate>
where
    F: FnMut(&GoldfeldRecord),
{
    if x < 2 {
        return Err(Error::out_of_range("x", x, ">= 2"));
    }
    if x > bound {
        return Err(Error::out_of_range("x", x, "<= the configured scan bound"));
    }
    let sieve_primes = primes_up_to(isqrt(x) + 1);
    let segments: Vec<(u64, u64)> = (0..)
        .map(|i| (2 + i * SEGMENT, (2 + (i + 1) * SEGMENT - 1).min(x)))
        .take_while(|&(lo, _)| lo <= x)
        .collect();

    let batch = 4 * rayon::current_num_threads().max(1);
    let mut s_x = 0u64;
    let mut prime_count = 0u64;
    for chunk in segments.chunks(batch) {
        let results: Vec<(u64, Vec<GoldfeldRecord>)> = chunk
            .par_iter()
            .map(|&(lo, hi)| scan_segment(lo, hi, &sieve_primes))
            .collect();
        for (primes, records) in results {
            prime_count += primes;
            for r in &records {
                s_x += r.member as u64;
                emit(r);
            }
        }
    }

    let pi_like = x as f64 / (x as f64).ln();
    Ok(DensityEstimate {
        x,
        s_x,
        pi_like,
        ratio: s_x as f64 / pi_like,
        prime_count,
    })
}

/// Sieves `m` over `[lo - 1, hi]`, dividing out every prime up to the square
/// root of the bound. The leftover cofactor is 1 or a single prime.
fn scan_segment(lo: u64, hi: u64, primes: &[u64]) -> (u64, Vec<GoldfeldRecord>) {
    let start = lo - 1;
    let len = (hi - start + 1) as usize;
    let mut rest: Vec<u64> = (start..=hi).collect();
    let mut largest = vec![0u64; len];
    for &p in primes {
        if p * p > hi {
            break;
        }
        let mut m = start.div_ceil(p) * p;
        while m <= hi {
            let i = (m - start) as usize;
            while rest[i].is_multiple_of(p) {
                rest[i] /= p;
            }
            largest[i] = p;
            m += p;
        }
    }
    let p_plus = |i: usize| largest[i].max(rest[i]);
    let mut prime_count = 0;
    let mut records = Vec::new();
    for n in lo..=hi {
        let i = (n - start) as usize;
        let prime = (largest[i] == 0 && rest[i] == n) || largest[i] == n;
        if !prime {
            continue;
        }
        prime_count += 1;
        if n >= 3 {
            records.push(GoldfeldRecord::from_parts(n, p_plus(i - 1)));
        }
    }
    (prime_count, records)
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeBound {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u64,
    pub c_k: f64,
    pub bound: f64,
    pub applicable: bool,
    pub witness_l: Option<u64>,
}

/// `c_k = 1 / (4 ln(1 + 2^((k-1)/2)))`.
pub fn degree_constant(k: u64) -> f64 {
    let base = 1.0 + 2f64.powf((k as f64 - 1.0) / 2.0);
    1.0 / (4.0 * base.ln())
}

/// `c_k ln N`, flagged applicable when `N` is a member, `N >= (k+1)^2` and the
/// witness exceeds `k + 1`.
pub fn degree_lower_bound(n: u64, k: u64) -> DegreeBound {
    let c_k = degree_constant(k);
    let bound = c_k * (n as f64).ln();
    let witness = goldfeld_membership(n).ok().and_then(|r| r.witness_l);
    let applicable = k >= 2
        && k.is_multiple_of(2)
        && (n as u128) >= ((k + 1) as u128).pow(2)
        && witness.is_some_and(|l| l > k + 1);
    DegreeBound {
        n,
        k,
        c_k,
        bound,
        applicable,
        witness_l: witness,
    }
}

/// Membership in `N_r`: `n = p_1 ... p_r` squarefree with
/// `P+(g)^(2r) > n`, `g = gcd(p_i - 1)`. When `g = 1` there is no largest
/// prime factor and `n` is excluded.
pub fn in_nr(n: u64, r: u32) -> bool {
    let Ok(f) = factorize(n) else { return false };
    if !f.is_squarefree() || f.omega() != r as usize {
        return false;
    }
    nr_condition(n, r, f.primes())
}

fn nr_condition(n: u64, r: u32, primes: impl Iterator<Item = u64>) -> bool {
    let g = primes.fold(0, |g, p| gcd(g, p - 1));
    if g < 2 {
        return false;
    }
    let p_plus = largest_prime_factor(g).expect("g >= 2") as u128;
    p_plus.checked_pow(2 * r).is_none_or(|v| v > n as u128)
}

/// All members of `N_r` up to `x <= NR_BOUND`, increasing.
pub fn enumerate_nr(r: u32, x: u64) -> Result<Vec<u64>> {
    if r < 2 {
        return Err(Error::out_of_range("r", r, ">= 2"));
    }
    if x > NR_BOUND {
        return Err(Error::out_of_range("x", x, "<= 10^6"));
    }
    if x < 6 {
        return Ok(Vec::new());
    }
    // smallest prime factor table
    let mut spf = vec![0u32; x as usize + 1];
    for i in 2..=x as usize {
        if spf[i] == 0 {
            let mut j = i;
            while j <= x as usize {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut out = Vec::new();
    let mut primes = Vec::new();
    'n: for n in 6..=x {
        primes.clear();
        let mut m = n as usize;
        while m > 1 {
            let p = spf[m] as usize;
            m /= p;
            if m.is_multiple_of(p) {
                continue 'n;
            }
            primes.push(p as u64);
        }
        if primes.len() == r as usize && nr_condition(n, r, primes.iter().copied()) {
            out.push(n);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_prime_factor_examples() {
        assert_eq!(largest_prime_factor(22).unwrap(), 11);
        assert_eq!(largest_prime_factor(12).unwrap(), 3);
        assert_eq!(largest_prime_factor(2).unwrap(), 2);
        assert!(largest_prime_factor(1).is_err());
    }

    #[test]
    fn membership_examples() {
        let r = goldfeld_membership(23).unwrap();
        assert!(r.member);
        assert_eq!(r.witness_l, Some(11));
        let r = goldfeld_membership(13).unwrap();
        assert!(!r.member);
        assert_eq!((r.p_plus, r.witness_l), (3, None));
        assert_eq!(goldfeld_membership(3).unwrap().witness_l, Some(2));
        assert_eq!(goldfeld_membership(15), Err(Error::NotPrime(15)));
        assert!(goldfeld_membership(2).is_err());
    }

    #[test]
    fn membership_matches_two_condition_form() {
        for n in primes_up_to(100_000).into_iter().filter(|&n| n >= 3) {
            let r = goldfeld_membership(n).unwrap();
            let l = r.p_plus;
            let two = (n - 1) % l == 0 && l * l > n;
            assert_eq!(r.member, two, "N = {n}");
            if let Some(w) = r.witness_l {
                assert_eq!(w, l);
                assert_eq!(n % w, 1);
            }
        }
    }

    #[test]
    fn scan_records_match_membership() {
        let mut records = Vec::new();
        let est =
            goldfeld_scan_with(300_000, DEFAULT_SCAN_BOUND, |r| records.push(r.clone())).unwrap();
        let primes: Vec<u64> = primes_up_to(300_000);
        assert_eq!(est.prime_count, primes.len() as u64);
        assert_eq!(records.len(), primes.len() - 1);
        for (r, &n) in records.iter().zip(&primes[1..]) {
            assert_eq!(*r, goldfeld_membership(n).unwrap());
        }
        assert_eq!(est.s_x, records.iter().filter(|r| r.member).count() as u64);
    }

    #[test]
    fn scan_small_bounds() {
        let est = goldfeld_scan(2).unwrap();
        assert_eq!((est.s_x, est.ratio), (0, 0.0));
        assert!(goldfeld_scan(1).is_err());
        assert!(goldfeld_scan_with(1000, 999, |_| {}).is_err());

        let brute = primes_up_to(100)
            .into_iter()
            .filter(|&n| n >= 3)
            .filter(|&n| goldfeld_membership(n).unwrap().member)
            .count() as u64;
        let est = goldfeld_scan(100).unwrap();
        assert_eq!(est.s_x, brute);
        assert_eq!(est.prime_count, 25);
        assert!((est.ratio - brute as f64 / (100.0 / 100f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn scan_is_monotone_and_below_pi() {
        let mut last = 0;
        for x in (2..5000).step_by(37) {
            let est = goldfeld_scan(x).unwrap();
            assert!(est.s_x >= last);
            assert!(est.s_x <= est.prime_count);
            assert!(est.ratio >= 0.0);
            last = est.s_x;
        }
    }

    #[test]
    fn degree_constants() {
        assert!((degree_constant(2) - 0.283653).abs() < 1e-5);
        let c4 = 1.0 / (4.0 * (1.0 + 2f64.powf(1.5)).ln());
        assert!((degree_constant(4) - c4).abs() < 1e-12);
        for k in (2..20).step_by(2) {
            assert!(degree_constant(k + 2) < degree_constant(k));
        }
    }

    #[test]
    fn degree_bound_examples() {
        let b = degree_lower_bound(23, 2);
        assert!(b.applicable);
        assert_eq!(b.witness_l, Some(11));
        assert!((b.bound - 0.8894).abs() < 1e-3);
        assert!(!degree_lower_bound(13, 2).applicable);
        // 23 < (4+1)^2
        assert!(!degree_lower_bound(23, 4).applicable);
        assert!(!degree_lower_bound(21, 2).applicable);
        assert!(!degree_lower_bound(23, 3).applicable);
    }

    #[test]
    fn nr_matches_definition() {
        let got = enumerate_nr(2, 200).unwrap();
        let brute: Vec<u64> = (6..=200u64)
            .filter(|&n| {
                let f = factorize(n).unwrap();
                if !f.is_squarefree() || f.omega() != 2 {
                    return false;
                }
                let g = f.primes().fold(0, |g, p| gcd(g, p - 1));
                g >= 2 && largest_prime_factor(g).unwrap().pow(4) > n
            })
            .collect();
        assert_eq!(got, brute);
        assert!(!got.contains(&21));
        assert!(enumerate_nr(3, 5).unwrap().is_empty());
        assert!(enumerate_nr(1, 100).is_err());
        assert!(enumerate_nr(2, NR_BOUND + 1).is_err());
    }

    #[test]
    fn nr_handpicked() {
        // 11 * 23: gcd(10, 22) = 2, 2^4 < 253
        assert!(!in_nr(253, 2));
        // 7 * 13: gcd(6, 12) = 6, P+ = 3, 3^4 = 81 < 91
        assert!(!in_nr(91, 2));
        // 7 * 43 = 301: gcd(6, 42) = 6, 3^4 < 301
        // 11 * 31 = 341: gcd(10, 30) = 10, 5^4 = 625 > 341
        assert!(in_nr(341, 2));
        assert!(enumerate_nr(2, 400).unwrap().contains(&341));
        for n in enumerate_nr(3, 100_000).unwrap() {
            assert!(in_nr(n, 3));
        }
    }
}
