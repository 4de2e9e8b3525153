//! Classical and generalized Bernoulli numbers.
//!
//! Classical `B_m` (with `B_1 = -1/2`) come from a memoized
//! Akiyama-Tanigawa table shared across threads. Generalized `B_{m,psi}`
//! use the finite closed form `c^(m-1) * sum_{a=1}^{c} psi(a) B_m(a/c)`.

use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{big_pow, BigInt, BigRational};
use crate::characters::DirichletCharacter;
use crate::cyclotomic::CyclotomicElement;
use crate::error::{Error, Result};

/// Incremental Akiyama-Tanigawa state: after processing row `m`, `row[0]`
/// equals `B_m` in the `B_1 = +1/2` convention.
struct AkiyamaTanigawa {
    row: Vec<BigRational>,
    values: Vec<BigRational>,
}

impl AkiyamaTanigawa {
    fn extend_to(&mut self, m: usize) {
        while self.values.len() <= m {
            let n = self.row.len();
            self.row
                .push(BigRational::new(BigInt::one(), BigInt::from(n + 1)));
            for j in (1..=n).rev() {
                let diff = &self.row[j - 1] - &self.row[j];
                self.row[j - 1] = diff * BigInt::from(j);
            }
            self.values.push(self.row[0].clone());
        }
    }
}

fn table() -> &'static Mutex<AkiyamaTanigawa> {
    static TABLE: OnceLock<Mutex<AkiyamaTanigawa>> = OnceLock::new();
    TABLE.get_or_init(|| {
        Mutex::new(AkiyamaTanigawa {
            row: Vec::new(),
            values: Vec::new(),
        })
    })
}

/// Classical Bernoulli number `B_m`, with `B_1 = -1/2`.
pub fn bernoulli_number(m: u64) -> BigRational {
    let mut t = table().lock().unwrap();
    t.extend_to(m as usize);
    let b = t.values[m as usize].clone();
    if m == 1 {
        -b
    } else {
        b
    }
}

/// `B_0, ..., B_m` in one lock acquisition.
pub fn bernoulli_numbers(m: u64) -> Vec<BigRational> {
    let mut t = table().lock().unwrap();
    t.extend_to(m as usize);
    let mut out = t.values[..=m as usize].to_vec();
    if m >= 1 {
        out[1] = -out[1].clone();
    }
    out
}

fn binomial_row(m: u64) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for j in 1..=m {
        let next = &row[j as usize - 1] * BigInt::from(m - j + 1) / BigInt::from(j);
        row.push(next);
    }
    row
}

/// Bernoulli polynomial `B_m(x) = sum_j C(m, j) B_j x^(m-j)`.
pub fn bernoulli_polynomial(m: u64, x: &BigRational) -> BigRational {
    let b = bernoulli_numbers(m);
    let binom = binomial_row(m);
    // Horner in x over the coefficients C(m, j) B_j, j = 0..m
    let mut acc = BigRational::zero();
    for j in 0..=m as usize {
        acc = acc * x + &b[j] * &binom[j];
    }
    acc
}

/// Generalized Bernoulli number `B_{m,psi}` for a primitive character.
///
/// For the trivial character mod 1 this is `B_m` except `B_{1,1} = +1/2`.
pub fn generalized_bernoulli(m: u64, psi: &DirichletCharacter) -> Result<CyclotomicElement> {
    let conductor = psi.conductor();
    if conductor != psi.modulus() {
        return Err(Error::NotPrimitive {
            label: psi.label(),
            conductor,
        });
    }
    let c = psi.modulus();
    let d = psi.order();
    let b = bernoulli_numbers(m);
    let binom = binomial_row(m);
    // c^(m-1) B_m(a/c) = (1/c) sum_j C(m,j) B_j a^(m-j) c^j
    let weights: Vec<BigRational> = (0..=m as usize)
        .map(|j| &b[j] * &binom[j] * big_pow(c, j as u32))
        .collect();
    let mut by_exponent = vec![BigRational::zero(); d as usize];
    for a in 1..=c {
        let Some(e) = psi.value_exponent(a as i64) else {
            continue;
        };
        let a_big = BigInt::from(a);
        let mut term = BigRational::zero();
        for w in &weights {
            term = term * &a_big + w;
        }
        by_exponent[e as usize] += term;
    }
    let inv_c = BigRational::new(BigInt::one(), BigInt::from(c));
    let coeffs = by_exponent.into_iter().map(|x| x * &inv_c).collect();
    Ok(CyclotomicElement::from_power_coefficients(d, coeffs))
}

/// `|numerator(B_k / k)|` for even `k >= 2`.
pub fn bk_over_k_numerator(k: u64) -> Result<BigInt> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::out_of_range("k", k, "an even integer >= 2"));
    }
    let q = bernoulli_number(k) / BigRational::from_integer(k.into());
    Ok(crate::arith::abs_numerator(&q))
}

/// Constant term `-B_k / 2k` of the level-one Eisenstein series `E_k`.
pub fn eisenstein_constant(k: u64) -> BigRational {
    -bernoulli_number(k) / BigRational::from_integer((2 * k).into())
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn factorial_f64(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `|sum_{n <= terms} psi(n) n^-m  -  (-W(psi) C_m / c^m * B_{m, conj psi} / 2m)|`
/// with `C_m = (-2 pi i)^m / (m-1)!`. A small residual confirms the special
/// value identity for `L(m, psi)` numerically.
pub fn lvalue_identity_residual(m: u64, psi: &DirichletCharacter, terms: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::out_of_range("m", m, ">= 2"));
    }
    if terms < 1_000 {
        return Err(Error::out_of_range("terms", terms, ">= 1000"));
    }
    let expected_sign = if m.is_multiple_of(2) { 1 } else { -1 };
    if psi.parity() != expected_sign {
        return Err(Error::Parity {
            index: m as i64,
            character_sign: psi.parity(),
            expected_sign,
        });
    }
    let gauss = psi.gauss_sum()?;
    let c = psi.modulus();
    let bernoulli = generalized_bernoulli(m, &psi.conjugate())?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let c_m = Complex64::new(0.0, -two_pi).powu(m as u32) / factorial_f64(m - 1);
    let scale = c_m / (c as f64).powi(m as i32) / (2.0 * m as f64);
    let rhs = -gauss.to_complex() * scale * bernoulli.to_complex();

    let values: Vec<Complex64> = (0..c).map(|r| psi.value(r as i64).to_complex()).collect();
    let (mut re, mut im) = (Kahan::default(), Kahan::default());
    // sum from the smallest terms upward
    for n in (1..=terms).rev() {
        let v = values[(n % c) as usize];
        if v == Complex64::zero() {
            continue;
        }
        let w = (n as f64).powi(-(m as i32));
        re.add(v.re * w);
        im.add(v.im * w);
    }
    let lhs = Complex64::new(re.sum, im.sum);
    let residual = (lhs - rhs).norm();
    residual
        .to_f64()
        .ok_or_else(|| Error::Internal("non-finite residual".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{l_adic_valuation, primes_up_to, rat};
    use crate::characters::{enumerate_characters, primitive_characters};

    /// Independent oracle: `sum_{j=0}^{m} C(m+1, j) B_j = 0` solved for `B_m`.
    fn bernoulli_by_recurrence(max: usize) -> Vec<BigRational> {
        let mut b: Vec<BigRational> = vec![BigRational::one()];
        for m in 1..=max {
            let binom = binomial_row(m as u64 + 1);
            let mut s = BigRational::zero();
            for j in 0..m {
                s += &b[j] * &binom[j];
            }
            b.push(-s / BigRational::from_integer(binom[m].clone()));
        }
        b
    }

    fn quadratic(c: u64) -> DirichletCharacter {
        primitive_characters(c)
            .into_iter()
            .find(|x| x.order() == 2)
            .unwrap()
    }

    #[test]
    fn classical_examples() {
        assert_eq!(bernoulli_number(0), rat(1, 1));
        assert_eq!(bernoulli_number(1), rat(-1, 2));
        assert_eq!(bernoulli_number(12), rat(-691, 2730));
        assert_eq!(bernoulli_number(3), rat(0, 1));
    }

    #[test]
    fn classical_matches_recurrence() {
        let oracle = bernoulli_by_recurrence(120);
        for (m, expected) in oracle.iter().enumerate() {
            assert_eq!(&bernoulli_number(m as u64), expected, "B_{m}");
        }
    }

    #[test]
    fn b60_numerator_is_large() {
        let b60 = bernoulli_number(60);
        assert_eq!(
            b60.numer().to_string(),
            "-1215233140483755572040304994079820246041491"
        );
        assert_eq!(*b60.denom(), BigInt::from(56786730));
    }

    #[test]
    fn generalized_examples() {
        let one = DirichletCharacter::trivial(1);
        assert_eq!(
            generalized_bernoulli(4, &one).unwrap(),
            CyclotomicElement::from_rational(1, rat(-1, 30))
        );
        assert_eq!(
            generalized_bernoulli(1, &one).unwrap(),
            CyclotomicElement::from_rational(1, rat(1, 2))
        );
        let chi4 = quadratic(4);
        assert_eq!(
            generalized_bernoulli(1, &chi4).unwrap(),
            CyclotomicElement::from_rational(1, rat(-1, 2))
        );
        // B_{3, chi_4} = 3/2 (odd character, odd index)
        assert_eq!(
            generalized_bernoulli(3, &chi4)
                .unwrap()
                .as_rational()
                .unwrap(),
            rat(3, 2)
        );
        assert!(generalized_bernoulli(2, &DirichletCharacter::trivial(6)).is_err());
    }

    #[test]
    fn generalized_with_trivial_character_is_classical() {
        let one = DirichletCharacter::trivial(1);
        for m in 2..=30 {
            let g = generalized_bernoulli(m, &one).unwrap();
            assert_eq!(g.as_rational().unwrap(), bernoulli_number(m), "m = {m}");
        }
    }

    #[test]
    fn generalized_vanishes_on_wrong_parity() {
        for c in 1..=20 {
            for psi in primitive_characters(c) {
                for m in 1..=8u64 {
                    if c == 1 && m == 1 {
                        continue;
                    }
                    let wrong = (psi.parity() == 1) != (m % 2 == 0);
                    if wrong {
                        assert!(
                            generalized_bernoulli(m, &psi).unwrap().is_zero(),
                            "{} m={m}",
                            psi.label()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bk_over_k_examples() {
        assert_eq!(bk_over_k_numerator(4).unwrap(), BigInt::from(1));
        assert_eq!(bk_over_k_numerator(12).unwrap(), BigInt::from(691));
        assert_eq!(bk_over_k_numerator(2).unwrap(), BigInt::from(1));
        assert!(bk_over_k_numerator(5).is_err());
        assert_eq!(eisenstein_constant(4), rat(1, 240));
        assert_eq!(eisenstein_constant(6), rat(-1, 504));
    }

    #[test]
    fn von_staudt_clausen() {
        for k in (2..=60u64).step_by(2) {
            let expected: u64 = primes_up_to(k + 1)
                .into_iter()
                .filter(|p| k % (p - 1) == 0)
                .product();
            assert_eq!(
                *bernoulli_number(k).denom(),
                BigInt::from(expected),
                "k = {k}"
            );
        }
    }

    #[test]
    fn kummer_congruences() {
        // indices up to 3(l-1), excluding multiples of l-1
        for l in primes_up_to(50).into_iter().filter(|&l| l >= 5) {
            let ks: Vec<u64> = (2..=3 * (l - 1))
                .step_by(2)
                .filter(|k| k % (l - 1) != 0)
                .collect();
            for &k in &ks {
                for &k2 in &ks {
                    if k != k2 && (k as i64 - k2 as i64) % (l as i64 - 1) == 0 {
                        let diff = bernoulli_number(k) / rat(k as i64, 1)
                            - bernoulli_number(k2) / rat(k2 as i64, 1);
                        // B_14/14 = B_2/2 exactly
                        assert!(diff.is_zero() || l_adic_valuation(&diff, l).unwrap() >= 1);
                    }
                }
            }
            let x = bernoulli_number(l + 1) / rat(2 * (l as i64 + 1), 1) - rat(1, 24);
            assert!(
                x.is_zero() || l_adic_valuation(&x, l).unwrap() >= 1,
                "l = {l}"
            );
        }
    }

    #[test]
    fn lvalue_identity() {
        let one = DirichletCharacter::trivial(1);
        assert!(lvalue_identity_residual(4, &one, 100_000).unwrap() < 1e-8);
        assert!(lvalue_identity_residual(6, &one, 100_000).unwrap() < 1e-8);
        assert!(lvalue_identity_residual(3, &quadratic(3), 100_000).unwrap() < 1e-6);
        assert!(lvalue_identity_residual(3, &quadratic(4), 100_000).unwrap() < 1e-6);
        for psi in primitive_characters(5) {
            let m = if psi.is_even() { 2 } else { 3 };
            assert!(
                lvalue_identity_residual(m, &psi, 100_000).unwrap() < 1e-6,
                "{}",
                psi.label()
            );
        }
    }

    #[test]
    fn lvalue_parity_violation() {
        let chi4 = quadratic(4);
        assert!(matches!(
            lvalue_identity_residual(2, &chi4, 100_000),
            Err(Error::Parity { .. })
        ));
        let one = DirichletCharacter::trivial(1);
        assert!(matches!(
            lvalue_identity_residual(3, &one, 100_000),
            Err(Error::Parity { .. })
        ));
        assert!(lvalue_identity_residual(4, &one, 10).is_err());
        assert!(lvalue_identity_residual(4, &enumerate_characters(6)[0], 10_000).is_err());
    }
}
