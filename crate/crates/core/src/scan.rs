//! Criterion verdicts over ranges of levels and primes.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    self, big_pow, divisors, factorize_bigint, gcd, is_prime, is_squarefree, prime_divisors,
};
use crate::bernoulli::bk_over_k_numerator;
use crate::criteria::{
    conjecture_conditions, delta_choice, is_cuspidal_mod_l, mazur_criterion, thm_main_criterion,
    CriterionReport, Verdict,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanCriterion {
    Mazur,
    Main,
    Conjecture,
}

/// Which primes `l` to test at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LRange {
    /// Only primes that can make a condition hold: prime factors of
    /// `p^k - 1`, `p^(k-2) - 1` (`p | N`) and of `numerator(B_k/k)`; for
    /// the weight-2 criterion, of `numerator((N-1)/12)`.
    Auto,
    Fixed(u64),
    /// Every prime in the hypothesis range up to the given bound.
    UpTo(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanConfig {
    pub criterion: ScanCriterion,
    pub k: u64,
    pub min_n: u64,
    pub max_n: u64,
    pub l: LRange,
    /// Also decide cuspidality mod `l` of the parameter choice of `E`.
    pub cuspidal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u64,
    pub l: u64,
    pub verdict: Verdict,
    pub branch: Option<u8>,
    pub cuspidal: Option<bool>,
}

fn levels(config: &ScanConfig) -> Vec<u64> {
    let lo = config.min_n.max(2);
    (lo..=config.max_n)
        .filter(|&n| match config.criterion {
            ScanCriterion::Mazur | ScanCriterion::Main => is_prime(n),
            ScanCriterion::Conjecture => is_squarefree(n),
        })
        .collect()
}

/// `Phi_d(p)` from `prod_{e | d} (p^e - 1)^mu(d/e)`.
fn cyclotomic_value(d: u64, p: u64) -> BigInt {
    let (mut num, mut den) = (BigInt::one(), BigInt::one());
    for e in divisors(d) {
        let f = prime_divisors(d / e);
        if f.iter().product::<u64>() != d / e {
            continue;
        }
        let term = big_pow(p, e as u32) - 1;
        if f.len().is_multiple_of(2) {
            num *= term;
        } else {
            den *= term;
        }
    }
    num / den
}

fn add_prime_factors(x: &BigInt, out: &mut BTreeSet<u64>) -> Result<()> {
    if x.is_zero() || x.magnitude().is_one() {
        return Ok(());
    }
    out.extend(factorize_bigint(x)?.primes());
    Ok(())
}

/// Candidate primes for [`LRange::Auto`], increasing. Quantities beyond
/// 64 bits are an error.
pub fn candidate_primes(criterion: ScanCriterion, n: u64, k: u64) -> Result<Vec<u64>> {
    let mut set = BTreeSet::new();
    match criterion {
        ScanCriterion::Mazur => {
            if n >= 2 {
                let num = (n - 1) / gcd(n - 1, 12);
                add_prime_factors(&BigInt::from(num), &mut set)?;
            }
            set.retain(|&l| l > 3 && l != n);
        }
        ScanCriterion::Main | ScanCriterion::Conjecture => {
            if k < 4 || k % 2 == 1 {
                return Err(Error::out_of_range("k", k, "an even integer >= 4"));
            }
            for p in prime_divisors(n) {
                for d in divisors(k).into_iter().chain(divisors(k - 2)) {
                    add_prime_factors(&cyclotomic_value(d, p), &mut set)?;
                }
            }
            add_prime_factors(&bk_over_k_numerator(k)?, &mut set)?;
            set.retain(|&l| l > k + 1 && gcd(n, l) == 1);
        }
    }
    Ok(set.into_iter().collect())
}

fn primes_for(config: &ScanConfig, n: u64) -> Result<Vec<u64>> {
    let floor = match config.criterion {
        ScanCriterion::Mazur => 3,
        _ => config.k + 1,
    };
    match config.l {
        LRange::Auto => candidate_primes(config.criterion, n, config.k),
        LRange::Fixed(l) => Ok(vec![l]),
        LRange::UpTo(max) => Ok(arith::primes_up_to(max)
            .into_iter()
            .filter(|&l| l > floor && gcd(n, l) == 1)
            .collect()),
    }
}

fn evaluate(config: &ScanConfig, n: u64, l: u64) -> Result<ScanRow> {
    let report: CriterionReport = match config.criterion {
        ScanCriterion::Mazur => mazur_criterion(n, l),
        ScanCriterion::Main => thm_main_criterion(n, config.k, l),
        ScanCriterion::Conjecture => conjecture_conditions(n, config.k, l)?,
    };
    let cuspidal = if config.cuspidal
        && config.criterion != ScanCriterion::Mazur
        && is_prime(l)
        && gcd(n, l) == 1
    {
        let spec = delta_choice(n, config.k, l)?;
        Some(is_cuspidal_mod_l(&spec, l)?.cuspidal)
    } else {
        None
    };
    Ok(ScanRow {
        n,
        k: if config.criterion == ScanCriterion::Mazur {
            2
        } else {
            config.k
        },
        l,
        verdict: report.verdict,
        branch: report.branch,
        cuspidal,
    })
}

/// All rows, ordered by `(N, l)`. Levels are distributed over the current
/// rayon pool.
pub fn scan(config: &ScanConfig) -> Result<Vec<ScanRow>> {
    if config.criterion != ScanCriterion::Mazur && (config.k < 4 || config.k % 2 == 1) {
        return Err(Error::out_of_range("k", config.k, "an even integer >= 4"));
    }
    if let LRange::Fixed(l) = config.l {
        if !is_prime(l) {
            return Err(Error::NotPrime(l));
        }
    }
    let per_level: Vec<Vec<ScanRow>> = levels(config)
        .into_par_iter()
        .map(|n| {
            primes_for(config, n)?
                .into_iter()
                .map(|l| evaluate(config, n, l))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_level.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::modpow;

    #[test]
    fn cyclotomic_values() {
        assert_eq!(cyclotomic_value(1, 5), BigInt::from(4));
        assert_eq!(cyclotomic_value(2, 5), BigInt::from(6));
        assert_eq!(cyclotomic_value(4, 5), BigInt::from(26));
        assert_eq!(cyclotomic_value(6, 2), BigInt::from(3));
        for p in [2u64, 3, 7, 11] {
            for k in [4u64, 6, 8, 12] {
                let prod: BigInt = divisors(k)
                    .into_iter()
                    .map(|d| cyclotomic_value(d, p))
                    .product();
                assert_eq!(prod, big_pow(p, k as u32) - 1);
            }
        }
    }

    #[test]
    fn auto_candidates_are_complete() {
        // every prime l <= 2000 that makes a condition true is a candidate
        for criterion in [ScanCriterion::Main, ScanCriterion::Conjecture] {
            for n in [3u64, 7, 13, 29, 30, 77, 105] {
                if criterion == ScanCriterion::Main && !is_prime(n) {
                    continue;
                }
                let cands = candidate_primes(criterion, n, 4).unwrap();
                for l in arith::primes_up_to(2000)
                    .into_iter()
                    .filter(|&l| l > 5 && n % l != 0)
                {
                    let config = ScanConfig {
                        criterion,
                        k: 4,
                        min_n: n,
                        max_n: n,
                        l: LRange::Fixed(l),
                        cuspidal: false,
                    };
                    let row = evaluate(&config, n, l).unwrap();
                    if row.verdict == Verdict::True {
                        assert!(cands.contains(&l), "{criterion:?} N={n} l={l}");
                    }
                }
                for &l in &cands {
                    let hit = prime_divisors(n)
                        .iter()
                        .any(|&p| modpow(p as i64, 4, l) == 1 || modpow(p as i64, 2, l) == 1);
                    assert!(hit);
                }
            }
        }
        assert_eq!(
            candidate_primes(ScanCriterion::Mazur, 11, 2).unwrap(),
            vec![5]
        );
        assert_eq!(
            candidate_primes(ScanCriterion::Mazur, 13, 2).unwrap(),
            Vec::<u64>::new()
        );
    }

    #[test]
    fn scan_is_ordered_and_matches_criteria() {
        let config = ScanConfig {
            criterion: ScanCriterion::Conjecture,
            k: 4,
            min_n: 1,
            max_n: 300,
            l: LRange::Auto,
            cuspidal: true,
        };
        let rows = scan(&config).unwrap();
        assert!(rows.windows(2).all(|w| (w[0].n, w[0].l) < (w[1].n, w[1].l)));
        for r in &rows {
            let direct = conjecture_conditions(r.n, 4, r.l).unwrap();
            assert_eq!((r.verdict, r.branch), (direct.verdict, direct.branch));
            assert_ne!(r.branch, Some(2));
            if r.verdict == Verdict::True {
                assert_eq!(r.cuspidal, Some(true), "N={} l={}", r.n, r.l);
            }
        }
        assert!(rows.iter().any(|r| r.verdict == Verdict::True));
    }

    #[test]
    fn mazur_scan() {
        let config = ScanConfig {
            criterion: ScanCriterion::Mazur,
            k: 2,
            min_n: 2,
            max_n: 70,
            l: LRange::Auto,
            cuspidal: false,
        };
        let pairs: Vec<(u64, u64)> = scan(&config)
            .unwrap()
            .into_iter()
            .filter(|r| r.verdict == Verdict::True)
            .map(|r| (r.n, r.l))
            .collect();
        for want in [(11, 5), (23, 11), (43, 7), (67, 11)] {
            assert!(pairs.contains(&want));
        }
    }

    #[test]
    fn fixed_and_bounded_ranges() {
        let mut config = ScanConfig {
            criterion: ScanCriterion::Main,
            k: 4,
            min_n: 2,
            max_n: 50,
            l: LRange::Fixed(7),
            cuspidal: false,
        };
        let rows = scan(&config).unwrap();
        assert_eq!(rows.len(), arith::primes_up_to(50).len());
        assert!(rows.iter().any(|r| r.n == 13 && r.verdict == Verdict::True));
        assert!(rows
            .iter()
            .any(|r| r.n == 7 && r.verdict == Verdict::NotApplicable));
        config.l = LRange::UpTo(30);
        let rows = scan(&config).unwrap();
        assert!(rows.iter().all(|r| r.l > 5 && r.l <= 30 && r.n != r.l));
        config.l = LRange::Fixed(9);
        assert_eq!(scan(&config), Err(Error::NotPrime(9)));
        config.k = 5;
        assert!(scan(&config).is_err());
    }
}
