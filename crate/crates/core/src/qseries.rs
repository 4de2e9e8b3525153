//! Truncated q-expansions and the operators `alpha_M`, `U_p`, `T_p`.
//!
//! A series with precision `P` knows the coefficients of `q^0 .. q^P`.
//! `alpha_M` keeps the precision (indices past `P` are dropped), while
//! `U_p` and `T_p` shrink it to `floor(P / p)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, big_pow, fraction_string, is_prime, BigInt, BigRational};
use crate::bernoulli::{eisenstein_constant, generalized_bernoulli};
use crate::characters::DirichletCharacter;
use crate::cyclotomic::CyclotomicElement;
use crate::error::{Error, Result};

/// Precision used when none is given.
pub const DEFAULT_PRECISION: usize = 200;

/// Coefficient ring of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ring {
    Rationals,
    Cyclotomics(u64),
    IntegersMod(u64),
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Rationals => write!(f, "Q"),
            Ring::Cyclotomics(n) => write!(f, "Q(zeta_{n})"),
            Ring::IntegersMod(l) => write!(f, "Z/{l}Z"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coefficients {
    Rational(Vec<BigRational>),
    Cyclotomic(u64, Vec<CyclotomicElement>),
    ModL(u64, Vec<u64>),
}

/// Ring operations needed by the index operators, with the ring
/// parameter (cyclotomic order or modulus) passed alongside.
trait Coeff: Clone {
    fn zero_in(ctx: u64) -> Self;
    fn plus(&self, other: &Self, ctx: u64) -> Self;
    fn minus(&self, other: &Self, ctx: u64) -> Self;
    fn times_int(&self, n: &BigInt, ctx: u64) -> Self;
}

impl Coeff for BigRational {
    fn zero_in(_: u64) -> Self {
        BigRational::zero()
    }
    fn plus(&self, other: &Self, _: u64) -> Self {
        self + other
    }
    fn minus(&self, other: &Self, _: u64) -> Self {
        self - other
    }
    fn times_int(&self, n: &BigInt, _: u64) -> Self {
        self * n
    }
}

impl Coeff for CyclotomicElement {
    fn zero_in(order: u64) -> Self {
        CyclotomicElement::zero(order)
    }
    fn plus(&self, other: &Self, _: u64) -> Self {
        self + other
    }
    fn minus(&self, other: &Self, _: u64) -> Self {
        self - other
    }
    fn times_int(&self, n: &BigInt, _: u64) -> Self {
        self.scale(&BigRational::from_integer(n.clone()))
    }
}

impl Coeff for u64 {
    fn zero_in(_: u64) -> Self {
        0
    }
    fn plus(&self, other: &Self, l: u64) -> Self {
        ((*self as u128 + *other as u128) % l as u128) as u64
    }
    fn minus(&self, other: &Self, l: u64) -> Self {
        ((*self as u128 + l as u128 - *other as u128) % l as u128) as u64
    }
    fn times_int(&self, n: &BigInt, l: u64) -> Self {
        let r = (n % BigInt::from(l) + BigInt::from(l)) % BigInt::from(l);
        let r = u64::try_from(r).expect("residue fits");
        arith::mulmod(*self, r, l)
    }
}

fn alpha_vec<T: Coeff>(v: &[T], m: usize, ctx: u64) -> Vec<T> {
    let mut out = vec![T::zero_in(ctx); v.len()];
    for (n, c) in v.iter().enumerate() {
        match n.checked_mul(m) {
            Some(i) if i < v.len() => out[i] = c.clone(),
            _ => break,
        }
    }
    out
}

fn up_vec<T: Coeff>(v: &[T], p: usize) -> Vec<T> {
    let precision = (v.len() - 1) / p;
    (0..=precision).map(|n| v[n * p].clone()).collect()
}

fn tp_vec<T: Coeff>(v: &[T], p: usize, pk1: &BigInt, ctx: u64) -> Vec<T> {
    let precision = (v.len() - 1) / p;
    (0..=precision)
        .map(|n| {
            let a = &v[n * p];
            if n % p == 0 {
                a.plus(&v[n / p].times_int(pk1, ctx), ctx)
            } else {
                a.clone()
            }
        })
        .collect()
}

fn zip_vec<T: Coeff>(a: &[T], b: &[T], ctx: u64, subtract: bool) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if subtract {
                x.minus(y, ctx)
            } else {
                x.plus(y, ctx)
            }
        })
        .collect()
}

macro_rules! map_coeffs {
    ($c:expr, |$v:ident, $ctx:ident| $body:expr) => {
        match $c {
            Coefficients::Rational($v) => {
                let $ctx = 0u64;
                Coefficients::Rational($body)
            }
            Coefficients::Cyclotomic(order, $v) => {
                let $ctx = *order;
                Coefficients::Cyclotomic(*order, $body)
            }
            Coefficients::ModL(l, $v) => {
                let $ctx = *l;
                Coefficients::ModL(*l, $body)
            }
        }
    };
}

/// A truncated q-expansion with weight and level tags.
///
/// The tags are metadata only; no modularity is checked or implied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    coefficients: Coefficients,
    weight: i64,
    level: u64,
}

impl QExpansion {
    pub fn from_rationals(coeffs: Vec<BigRational>, weight: i64, level: u64) -> Result<Self> {
        Self::new(Coefficients::Rational(coeffs), weight, level)
    }

    /// Series over `Q(zeta_order)`; every coefficient is embedded into that field.
    pub fn from_cyclotomics(
        order: u64,
        coeffs: Vec<CyclotomicElement>,
        weight: i64,
        level: u64,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            if !order.is_multiple_of(c.order()) {
                return Err(Error::RingMismatch(
                    Ring::Cyclotomics(order).to_string(),
                    Ring::Cyclotomics(c.order()).to_string(),
                ));
            }
            out.push(c.embed(order));
        }
        Self::new(Coefficients::Cyclotomic(order, out), weight, level)
    }

    pub fn from_residues(l: u64, coeffs: Vec<u64>, weight: i64, level: u64) -> Result<Self> {
        if l < 2 {
            return Err(Error::out_of_range("l", l, ">= 2"));
        }
        let coeffs = coeffs.into_iter().map(|c| c % l).collect();
        Self::new(Coefficients::ModL(l, coeffs), weight, level)
    }

    fn new(coefficients: Coefficients, weight: i64, level: u64) -> Result<Self> {
        let len = match &coefficients {
            Coefficients::Rational(v) => v.len(),
            Coefficients::Cyclotomic(_, v) => v.len(),
            Coefficients::ModL(_, v) => v.len(),
        };
        if len == 0 {
            return Err(Error::out_of_range("coefficient count", 0, ">= 1"));
        }
        Ok(Self {
            coefficients,
            weight,
            level,
        })
    }

    fn with(&self, coefficients: Coefficients) -> Self {
        Self {
            coefficients,
            weight: self.weight,
            level: self.level,
        }
    }

    pub fn ring(&self) -> Ring {
        match &self.coefficients {
            Coefficients::Rational(_) => Ring::Rationals,
            Coefficients::Cyclotomic(n, _) => Ring::Cyclotomics(*n),
            Coefficients::ModL(l, _) => Ring::IntegersMod(*l),
        }
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn rational_coefficients(&self) -> Option<&[BigRational]> {
        match &self.coefficients {
            Coefficients::Rational(v) => Some(v),
            _ => None,
        }
    }

    pub fn cyclotomic_coefficients(&self) -> Option<&[CyclotomicElement]> {
        match &self.coefficients {
            Coefficients::Cyclotomic(_, v) => Some(v),
            _ => None,
        }
    }

    pub fn residues(&self) -> Option<&[u64]> {
        match &self.coefficients {
            Coefficients::ModL(_, v) => Some(v),
            _ => None,
        }
    }

    /// Highest known exponent `P`.
    pub fn precision(&self) -> usize {
        match &self.coefficients {
            Coefficients::Rational(v) => v.len() - 1,
            Coefficients::Cyclotomic(_, v) => v.len() - 1,
            Coefficients::ModL(_, v) => v.len() - 1,
        }
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn with_tags(mut self, weight: i64, level: u64) -> Self {
        self.weight = weight;
        self.level = level;
        self
    }

    /// Coefficient of `q^n` as a cyclotomic element (rationals embed in order 1).
    /// Returns `None` for residue series or `n > precision`.
    pub fn coefficient(&self, n: usize) -> Option<CyclotomicElement> {
        match &self.coefficients {
            Coefficients::Rational(v) => v
                .get(n)
                .map(|c| CyclotomicElement::from_rational(1, c.clone())),
            Coefficients::Cyclotomic(_, v) => v.get(n).cloned(),
            Coefficients::ModL(..) => None,
        }
    }

    pub fn truncate(&self, precision: usize) -> Self {
        let keep = precision.min(self.precision()) + 1;
        self.with(map_coeffs!(&self.coefficients, |v, _ctx| v[..keep].to_vec()))
    }

    pub fn is_zero(&self) -> bool {
        match &self.coefficients {
            Coefficients::Rational(v) => v.iter().all(Zero::is_zero),
            Coefficients::Cyclotomic(_, v) => v.iter().all(CyclotomicElement::is_zero),
            Coefficients::ModL(_, v) => v.iter().all(|&c| c == 0),
        }
    }

    fn binary(&self, other: &Self, subtract: bool) -> Result<Self> {
        if self.ring() != other.ring() {
            return Err(Error::RingMismatch(
                self.ring().to_string(),
                other.ring().to_string(),
            ));
        }
        let p = self.precision().min(other.precision());
        let (a, b) = (self.truncate(p), other.truncate(p));
        let coefficients = match (&a.coefficients, &b.coefficients) {
            (Coefficients::Rational(x), Coefficients::Rational(y)) => {
                Coefficients::Rational(zip_vec(x, y, 0, subtract))
            }
            (Coefficients::Cyclotomic(n, x), Coefficients::Cyclotomic(_, y)) => {
                Coefficients::Cyclotomic(*n, zip_vec(x, y, *n, subtract))
            }
            (Coefficients::ModL(l, x), Coefficients::ModL(_, y)) => {
                Coefficients::ModL(*l, zip_vec(x, y, *l, subtract))
            }
            _ => unreachable!("ring tags already compared"),
        };
        Ok(self.with(coefficients))
    }

    /// Sum; precision is the smaller of the two.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(other, true)
    }

    pub fn scale_integer(&self, n: &BigInt) -> Self {
        self.with(map_coeffs!(&self.coefficients, |v, ctx| v
            .iter()
            .map(|c| c.times_int(n, ctx))
            .collect()))
    }

    /// Multiply by a rational; for residue series the scalar must be l-integral.
    pub fn scale(&self, r: &BigRational) -> Result<Self> {
        Ok(self.with(match &self.coefficients {
            Coefficients::Rational(v) => Coefficients::Rational(v.iter().map(|c| c * r).collect()),
            Coefficients::Cyclotomic(n, v) => {
                Coefficients::Cyclotomic(*n, v.iter().map(|c| c.scale(r)).collect())
            }
            Coefficients::ModL(l, v) => {
                let s = arith::reduce_rational_mod(r, *l)
                    .ok_or(Error::NonIntegral { index: 0, l: *l })?;
                Coefficients::ModL(*l, v.iter().map(|&c| arith::mulmod(c, s, *l)).collect())
            }
        }))
    }
}

impl Serialize for QExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (weight, level, precision) = (self.weight, self.level, self.precision());
        let repr = match &self.coefficients {
            Coefficients::Rational(v) => QExpansionRepr::Rationals {
                weight,
                level,
                precision,
                coefficients: v.iter().map(fraction_string).collect(),
            },
            Coefficients::Cyclotomic(order, v) => QExpansionRepr::Cyclotomics {
                order: *order,
                weight,
                level,
                precision,
                coefficients: v.clone(),
            },
            Coefficients::ModL(l, v) => QExpansionRepr::IntegersMod {
                l: *l,
                weight,
                level,
                precision,
                coefficients: v.clone(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = QExpansionRepr::deserialize(d)?;
        let check = |precision: usize, len: usize| {
            if precision + 1 != len {
                Err(D::Error::custom(
                    "precision does not match coefficient count",
                ))
            } else {
                Ok(())
            }
        };
        let out = match repr {
            QExpansionRepr::Rationals {
                weight,
                level,
                precision,
                coefficients,
            } => {
                check(precision, coefficients.len())?;
                let coeffs = coefficients
                    .iter()
                    .map(|s| {
                        arith::parse_fraction(s)
                            .ok_or_else(|| D::Error::custom(format!("bad fraction {s:?}")))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                QExpansion::from_rationals(coeffs, weight, level)
            }
            QExpansionRepr::Cyclotomics {
                order,
                weight,
                level,
                precision,
                coefficients,
            } => {
                check(precision, coefficients.len())?;
                QExpansion::from_cyclotomics(order, coefficients, weight, level)
            }
            QExpansionRepr::IntegersMod {
                l,
                weight,
                level,
                precision,
                coefficients,
            } => {
                check(precision, coefficients.len())?;
                QExpansion::from_residues(l, coefficients, weight, level)
            }
        };
        out.map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "ring", rename_all = "snake_case")]
enum QExpansionRepr {
    Rationals {
        weight: i64,
        level: u64,
        precision: usize,
        coefficients: Vec<String>,
    },
    Cyclotomics {
        order: u64,
        weight: i64,
        level: u64,
        precision: usize,
        coefficients: Vec<CyclotomicElement>,
    },
    IntegersMod {
        l: u64,
        weight: i64,
        level: u64,
        precision: usize,
        coefficients: Vec<u64>,
    },
}

impl fmt::Display for QExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = match &self.coefficients {
            Coefficients::Rational(v) => v.iter().map(fraction_string).collect(),
            Coefficients::Cyclotomic(_, v) => v.iter().map(|c| format!("({c})")).collect(),
            Coefficients::ModL(_, v) => v.iter().map(u64::to_string).collect(),
        };
        let mut parts = Vec::new();
        for (n, t) in terms.iter().enumerate() {
            if t == "0" || t == "(0)" {
                continue;
            }
            parts.push(match n {
                0 => t.clone(),
                1 => format!("{t}*q"),
                _ => format!("{t}*q^{n}"),
            });
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{} + O(q^{})", parts.join(" + "), self.precision() + 1)
    }
}

fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// `alpha_M f (z) = f(Mz)`: `q^n -> q^(Mn)`, precision unchanged.
pub fn apply_alpha(m: u64, f: &QExpansion) -> Result<QExpansion> {
    if m == 0 {
        return Err(Error::out_of_range("M", m, ">= 1"));
    }
    let m = m as usize;
    let coefficients = map_coeffs!(&f.coefficients, |v, ctx| alpha_vec(v, m, ctx));
    Ok(f.with(coefficients)
        .with_tags(f.weight, f.level.saturating_mul(m as u64)))
}

/// `U_p`: `a_n -> a_(pn)`, precision `floor(P / p)`.
pub fn apply_up(p: u64, f: &QExpansion) -> Result<QExpansion> {
    require_prime(p)?;
    let p = p as usize;
    Ok(f.with(map_coeffs!(&f.coefficients, |v, _ctx| up_vec(v, p))))
}

/// Weight-`k` Hecke operator `T_p` for trivial character:
/// `a_n -> a_(pn) + p^(k-1) a_(n/p)`, precision `floor(P / p)`.
pub fn apply_tp(p: u64, k: u64, f: &QExpansion) -> Result<QExpansion> {
    require_prime(p)?;
    if k == 0 {
        return Err(Error::out_of_range("k", k, ">= 1"));
    }
    let pk1 = big_pow(p, (k - 1) as u32);
    let p = p as usize;
    Ok(f.with(map_coeffs!(&f.coefficients, |v, ctx| tp_vec(
        v, p, &pk1, ctx
    ))))
}

/// `E_k^{1, eps0} = -B_{k,eps0}/2k + sum_n (sum_{m | n} eps0(m) m^(k-1)) q^n`.
///
/// Rational when `eps0` is trivial, otherwise over `Q(zeta_d)` with `d` the
/// order of `eps0`.
pub fn eisenstein_qexp(k: u64, eps0: &DirichletCharacter, precision: usize) -> Result<QExpansion> {
    if k < 3 {
        return Err(Error::out_of_range("k", k, ">= 3"));
    }
    let expected_sign = if k.is_multiple_of(2) { 1 } else { -1 };
    if eps0.parity() != expected_sign {
        return Err(Error::Parity {
            index: k as i64,
            character_sign: eps0.parity(),
            expected_sign,
        });
    }
    let constant = generalized_bernoulli(k, eps0)?
        .scale(&BigRational::new(BigInt::from(-1), BigInt::from(2 * k)));
    let level = eps0.modulus();
    let d = eps0.order();
    if d == 1 {
        let mut coeffs = vec![BigInt::zero(); precision + 1];
        for m in 1..=precision {
            if eps0.value_exponent(m as i64).is_none() {
                continue;
            }
            let w = big_pow(m as u64, (k - 1) as u32);
            for n in (m..=precision).step_by(m) {
                coeffs[n] += &w;
            }
        }
        let mut out: Vec<BigRational> = coeffs.into_iter().map(BigRational::from_integer).collect();
        out[0] = constant
            .as_rational()
            .expect("trivial character gives a rational constant");
        return QExpansion::from_rationals(out, k as i64, level);
    }
    // coefficient of q^n kept as a vector indexed by the exponent of zeta_d
    let mut by_exponent = vec![vec![BigInt::zero(); d as usize]; precision + 1];
    for m in 1..=precision {
        let Some(e) = eps0.value_exponent(m as i64) else {
            continue;
        };
        let w = big_pow(m as u64, (k - 1) as u32);
        for n in (m..=precision).step_by(m) {
            by_exponent[n][e as usize] += &w;
        }
    }
    let mut out: Vec<CyclotomicElement> = by_exponent
        .into_iter()
        .map(|v| {
            CyclotomicElement::from_power_coefficients(
                d,
                v.into_iter().map(BigRational::from_integer).collect(),
            )
        })
        .collect();
    out[0] = constant.embed(d);
    QExpansion::from_cyclotomics(d, out, k as i64, level)
}

/// Level-one `E_k = -B_k/2k + sum sigma_(k-1)(n) q^n` for even `k >= 4`.
pub fn eisenstein_level_one(k: u64, precision: usize) -> Result<QExpansion> {
    if k < 4 || k % 2 == 1 {
        return Err(Error::out_of_range("k", k, "an even integer >= 4"));
    }
    eisenstein_qexp(k, &DirichletCharacter::trivial(1), precision)
}

/// One of the two admissible values of `delta_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta {
    /// `delta_p = 1`
    One,
    /// `delta_p = p^(k-1)`
    Full,
}

/// Parameters `(k, N, {delta_p})` of the level-`N` Eisenstein combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EisensteinSpec {
    weight: u64,
    level: u64,
    delta: BTreeMap<u64, Delta>,
}

impl EisensteinSpec {
    pub fn new(weight: u64, level: u64, delta: BTreeMap<u64, Delta>) -> Result<Self> {
        if weight < 4 || weight % 2 == 1 {
            return Err(Error::out_of_range("k", weight, "an even integer >= 4"));
        }
        if level == 0 {
            return Err(Error::out_of_range("N", level, ">= 1"));
        }
        if !arith::is_squarefree(level) {
            return Err(Error::NotSquarefree(level));
        }
        let primes = arith::prime_divisors(level);
        let keys: Vec<u64> = delta.keys().copied().collect();
        if keys != primes {
            return Err(Error::InvalidSpec(format!(
                "delta keys {keys:?} must be exactly the prime divisors {primes:?} of {level}"
            )));
        }
        Ok(Self {
            weight,
            level,
            delta,
        })
    }

    /// Build from explicit values, each required to be `1` or `p^(k-1)`.
    pub fn from_values(weight: u64, level: u64, values: &BTreeMap<u64, BigInt>) -> Result<Self> {
        if weight < 4 || weight % 2 == 1 {
            return Err(Error::out_of_range("k", weight, "an even integer >= 4"));
        }
        let mut delta = BTreeMap::new();
        for (&p, value) in values {
            let choice = if value.is_one() {
                Delta::One
            } else if p >= 2 && *value == big_pow(p, (weight - 1) as u32) {
                Delta::Full
            } else {
                return Err(Error::InvalidSpec(format!(
                    "delta_{p} = {value} is neither 1 nor {p}^{}",
                    weight - 1
                )));
            };
            delta.insert(p, choice);
        }
        Self::new(weight, level, delta)
    }

    /// Every `delta` assignment for `(k, N)`, `2^omega(N)` specs.
    pub fn all_assignments(weight: u64, level: u64) -> Result<Vec<Self>> {
        if level == 0 || !arith::is_squarefree(level) {
            return Err(Error::NotSquarefree(level));
        }
        let primes = arith::prime_divisors(level);
        (0..1u64 << primes.len())
            .map(|mask| {
                let delta = primes
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        (
                            p,
                            if mask >> i & 1 == 1 {
                                Delta::Full
                            } else {
                                Delta::One
                            },
                        )
                    })
                    .collect();
                Self::new(weight, level, delta)
            })
            .collect()
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn delta(&self) -> &BTreeMap<u64, Delta> {
        &self.delta
    }

    /// Numeric `delta_p`.
    pub fn delta_value(&self, p: u64) -> Option<BigInt> {
        self.delta.get(&p).map(|d| match d {
            Delta::One => BigInt::one(),
            Delta::Full => big_pow(p, (self.weight - 1) as u32),
        })
    }

    /// `delta_M` as the product over primes of `M`.
    pub fn delta_product(&self, m: u64) -> BigInt {
        arith::prime_divisors(m)
            .into_iter()
            .map(|p| self.delta_value(p).expect("M divides the level"))
            .product()
    }
}

/// `E = sum_{M | N} (-1)^omega(M) delta_M alpha_M E_k`, exact to precision `P`.
pub fn build_e(spec: &EisensteinSpec, precision: usize) -> Result<QExpansion> {
    let ek = eisenstein_level_one(spec.weight, precision)?;
    let ek = ek.rational_coefficients().expect("rational E_k");
    let mut acc = vec![BigRational::zero(); precision + 1];
    for m in arith::divisors(spec.level) {
        let mut c = spec.delta_product(m);
        if arith::prime_divisors(m).len() % 2 == 1 {
            c = -c;
        }
        let m = m as usize;
        for (n, a) in ek.iter().enumerate() {
            let Some(i) = n.checked_mul(m).filter(|&i| i <= precision) else {
                break;
            };
            acc[i] += a * &c;
        }
    }
    QExpansion::from_rationals(acc, spec.weight as i64, spec.level)
}

/// Coefficientwise reduction of a rational series to `Z/lZ`.
pub fn reduce_mod_l(f: &QExpansion, l: u64) -> Result<QExpansion> {
    require_prime(l)?;
    let Some(v) = f.rational_coefficients() else {
        return Err(Error::RingMismatch(
            f.ring().to_string(),
            Ring::Rationals.to_string(),
        ));
    };
    let residues = v
        .iter()
        .enumerate()
        .map(|(index, c)| arith::reduce_rational_mod(c, l).ok_or(Error::NonIntegral { index, l }))
        .collect::<Result<Vec<u64>>>()?;
    QExpansion::from_residues(l, residues, f.weight, f.level)
}

/// Constant term `-B_k/2k * prod_{p | N} (1 - delta_p)` expected at infinity.
pub fn expected_constant_at_infinity(spec: &EisensteinSpec) -> BigRational {
    let mut c = eisenstein_constant(spec.weight);
    for p in arith::prime_divisors(spec.level) {
        c *= BigRational::from_integer(BigInt::one() - spec.delta_value(p).unwrap());
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use crate::characters::primitive_characters;
    use proptest::prelude::*;

    fn rats(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    fn spec(k: u64, n: u64, full: &[u64]) -> EisensteinSpec {
        let delta = arith::prime_divisors(n)
            .into_iter()
            .map(|p| {
                (
                    p,
                    if full.contains(&p) {
                        Delta::Full
                    } else {
                        Delta::One
                    },
                )
            })
            .collect();
        EisensteinSpec::new(k, n, delta).unwrap()
    }

    fn sigma(k: u32, n: u64) -> BigInt {
        (1..=n)
            .filter(|d| n.is_multiple_of(*d))
            .map(|d| BigInt::from(d).pow(k))
            .sum()
    }

    #[test]
    fn e4_example() {
        let e4 = eisenstein_level_one(4, 3).unwrap();
        assert_eq!(
            e4.rational_coefficients().unwrap(),
            &[rat(1, 240), rat_int(1), rat_int(9), rat_int(28)]
        );
        let e6 = eisenstein_level_one(6, 40).unwrap();
        assert_eq!(e6.rational_coefficients().unwrap()[0], rat(-1, 504));
        for (n, c) in e6
            .rational_coefficients()
            .unwrap()
            .iter()
            .enumerate()
            .skip(1)
        {
            assert_eq!(*c, BigRational::from_integer(sigma(5, n as u64)));
        }
    }

    #[test]
    fn twisted_series_first_coefficient_is_one() {
        for c in 1..=15 {
            for eps in primitive_characters(c) {
                let k = if eps.is_even() { 4 } else { 3 };
                let f = eisenstein_qexp(k, &eps, 10).unwrap();
                assert_eq!(
                    f.coefficient(1).unwrap(),
                    CyclotomicElement::one(1),
                    "{}",
                    eps.label()
                );
                let wrong = eisenstein_qexp(k + 1, &eps, 10);
                assert!(matches!(wrong, Err(Error::Parity { .. })));
            }
        }
    }

    #[test]
    fn twisted_series_divisor_sum() {
        let chi4 = primitive_characters(4).pop().unwrap();
        let f = eisenstein_qexp(3, &chi4, 12).unwrap();
        // a_n = sum_{m | n} chi4(m) m^2
        let chi = |m: u64| match m % 4 {
            1 => 1i64,
            3 => -1,
            _ => 0,
        };
        for n in 1..=12u64 {
            let a: i64 = (1..=n)
                .filter(|m| n % m == 0)
                .map(|m| chi(m) * (m * m) as i64)
                .sum();
            assert_eq!(
                f.coefficient(n as usize).unwrap(),
                CyclotomicElement::from_integer(1, a)
            );
        }
        // B_{3, chi4} = 3/2, constant -3/2 / 6
        assert_eq!(f.coefficient(0).unwrap().as_rational().unwrap(), rat(-1, 4));
    }

    #[test]
    fn alpha_and_up_examples() {
        let f = QExpansion::from_rationals(
            vec![rat(1, 240), rat_int(1), rat_int(9), rat_int(0), rat_int(0)],
            4,
            1,
        )
        .unwrap();
        let g = apply_alpha(2, &f).unwrap();
        assert_eq!(
            g.rational_coefficients().unwrap(),
            &[rat(1, 240), rat_int(0), rat_int(1), rat_int(0), rat_int(9)]
        );
        assert_eq!(
            apply_alpha(1, &f).unwrap().rational_coefficients(),
            f.rational_coefficients()
        );

        let e = QExpansion::from_rationals(
            vec![
                rat(1, 240),
                rat_int(1),
                rat_int(9),
                rat_int(28),
                rat_int(73),
            ],
            4,
            1,
        )
        .unwrap();
        let u = apply_up(2, &e).unwrap();
        assert_eq!(
            u.rational_coefficients().unwrap(),
            &[rat(1, 240), rat_int(9), rat_int(73)]
        );
        assert_eq!(u.precision(), 2);

        let sparse = QExpansion::from_rationals(rats(&[0, 1, 1, 0, 1, 1, 0, 1]), 0, 1).unwrap();
        assert!(apply_up(3, &sparse).unwrap().is_zero());
        assert!(apply_up(4, &sparse).is_err());
    }

    #[test]
    fn hecke_examples() {
        let e4 = eisenstein_level_one(4, 20).unwrap();
        let t2 = apply_tp(2, 4, &e4).unwrap();
        assert_eq!(
            t2,
            eisenstein_level_one(4, 10)
                .unwrap()
                .scale_integer(&BigInt::from(9))
        );
        let e6 = eisenstein_level_one(6, 30).unwrap();
        let t3 = apply_tp(3, 6, &e6).unwrap();
        assert_eq!(
            t3,
            eisenstein_level_one(6, 10)
                .unwrap()
                .scale_integer(&BigInt::from(244))
        );
        let zero = QExpansion::from_rationals(rats(&[0; 9]), 4, 1).unwrap();
        assert!(apply_tp(5, 4, &zero).unwrap().is_zero());
    }

    #[test]
    fn build_e_examples() {
        let e = build_e(&spec(4, 2, &[2]), 10).unwrap();
        assert_eq!(e.rational_coefficients().unwrap()[0], rat(-7, 240));
        let e = build_e(&spec(4, 2, &[]), 10).unwrap();
        assert_eq!(e.rational_coefficients().unwrap()[1], rat_int(1));
        let e1 = build_e(&EisensteinSpec::new(4, 1, BTreeMap::new()).unwrap(), 30).unwrap();
        assert_eq!(e1, eisenstein_level_one(4, 30).unwrap());
    }

    #[test]
    fn spec_validation() {
        assert!(EisensteinSpec::new(4, 12, BTreeMap::new()).is_err());
        assert!(EisensteinSpec::new(5, 1, BTreeMap::new()).is_err());
        assert!(EisensteinSpec::new(4, 6, [(2, Delta::One)].into()).is_err());
        let ok =
            EisensteinSpec::from_values(4, 6, &[(2, BigInt::from(8)), (3, BigInt::from(1))].into())
                .unwrap();
        assert_eq!(ok.delta_product(6), BigInt::from(8));
        assert!(EisensteinSpec::from_values(
            4,
            6,
            &[(2, BigInt::from(4)), (3, BigInt::from(1))].into()
        )
        .is_err());
        assert_eq!(EisensteinSpec::all_assignments(6, 30).unwrap().len(), 8);
    }

    /// The product of `(U_p - delta_p)` applied to `alpha_N E_k`.
    fn operator_route(s: &EisensteinSpec, precision: usize) -> QExpansion {
        let n = s.level();
        let mut f = apply_alpha(
            n,
            &eisenstein_level_one(s.weight(), precision * n as usize).unwrap(),
        )
        .unwrap();
        for p in arith::prime_divisors(n) {
            let up = apply_up(p, &f).unwrap();
            f = up
                .sub(&f.scale_integer(&s.delta_value(p).unwrap()))
                .unwrap();
        }
        f.truncate(precision)
    }

    #[test]
    fn expanded_form_matches_operator_route() {
        for n in [1u64, 2, 3, 5, 6, 10, 15, 30] {
            for k in [4u64, 6] {
                for s in EisensteinSpec::all_assignments(k, n).unwrap() {
                    let direct = build_e(&s, 25).unwrap();
                    let oracle = operator_route(&s, 25);
                    assert_eq!(
                        direct.rational_coefficients(),
                        oracle.rational_coefficients(),
                        "{s:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigenform_identities() {
        let p_max = 120;
        for n in [6u64, 10, 14, 15, 30] {
            for k in [4u64, 6] {
                for s in EisensteinSpec::all_assignments(k, n).unwrap() {
                    let e = build_e(&s, p_max).unwrap();
                    assert_eq!(e.rational_coefficients().unwrap()[1], rat_int(1));
                    assert_eq!(
                        e.rational_coefficients().unwrap()[0],
                        expected_constant_at_infinity(&s)
                    );
                    for q in [7u64, 11, 13].into_iter().filter(|q| n % q != 0) {
                        let lhs = apply_tp(q, k, &e).unwrap();
                        let rhs = build_e(&s, p_max / q as usize)
                            .unwrap()
                            .scale_integer(&(BigInt::one() + big_pow(q, k as u32 - 1)));
                        assert_eq!(lhs, rhs, "T_{q} on {s:?}");
                    }
                    for p in arith::prime_divisors(n) {
                        let lhs = apply_up(p, &e).unwrap();
                        let eigen =
                            BigRational::new(big_pow(p, k as u32 - 1), s.delta_value(p).unwrap());
                        let rhs = build_e(&s, p_max / p as usize)
                            .unwrap()
                            .scale(&eigen)
                            .unwrap();
                        assert_eq!(lhs, rhs, "U_{p} on {s:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn reduction_examples() {
        let e4 = eisenstein_level_one(4, 10).unwrap();
        assert_eq!(reduce_mod_l(&e4, 7).unwrap().residues().unwrap()[0], 4);
        let e12 = eisenstein_level_one(12, 10).unwrap();
        let r = reduce_mod_l(&e12, 691).unwrap();
        assert_eq!(r.residues().unwrap()[0], 0);
        assert_eq!(r.residues().unwrap()[1], 1);
        let bad = QExpansion::from_rationals(vec![rat(1, 7), rat_int(1)], 0, 1).unwrap();
        assert_eq!(
            reduce_mod_l(&bad, 7),
            Err(Error::NonIntegral { index: 0, l: 7 })
        );
    }

    #[test]
    fn ring_mismatch_and_precision() {
        let a = QExpansion::from_rationals(rats(&[1, 2, 3, 4]), 0, 1).unwrap();
        let b = QExpansion::from_rationals(rats(&[1, 1]), 0, 1).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.precision(), 1);
        assert_eq!(s.rational_coefficients().unwrap(), &rats(&[2, 3])[..]);
        let m = reduce_mod_l(&a, 5).unwrap();
        assert!(matches!(a.add(&m), Err(Error::RingMismatch(..))));
        let m2 = reduce_mod_l(&a, 5).unwrap();
        assert_eq!(m.sub(&m2).unwrap().residues().unwrap(), &[0, 0, 0, 0]);
    }

    #[test]
    fn json_round_trip() {
        let e = build_e(&spec(4, 6, &[3]), 12).unwrap();
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"ring\":\"rationals\""));
        let back: QExpansion = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);

        let chi5 = primitive_characters(5)
            .into_iter()
            .find(|x| x.order() == 4 && !x.is_even())
            .unwrap();
        let f = eisenstein_qexp(3, &chi5, 6).unwrap();
        let back: QExpansion = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        let r = reduce_mod_l(&e, 7).unwrap();
        let back: QExpansion = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    fn series() -> impl Strategy<Value = QExpansion> {
        prop::collection::vec((-50i64..50, 1i64..6), 1..60).prop_map(|v| {
            let coeffs = v.into_iter().map(|(n, d)| rat(n, d)).collect();
            QExpansion::from_rationals(coeffs, 4, 1).unwrap()
        })
    }

    proptest! {
        #[test]
        fn up_inverts_alpha(f in series(), p in prop::sample::select(vec![2u64, 3, 5, 7])) {
            let g = apply_up(p, &apply_alpha(p, &f).unwrap()).unwrap();
            prop_assert_eq!(g.precision(), f.precision() / p as usize);
            let expected = f.truncate(f.precision() / p as usize);
            prop_assert_eq!(g.coefficients(), expected.coefficients());
        }

        #[test]
        fn tp_is_up_plus_alpha(f in series(), p in prop::sample::select(vec![2u64, 3, 5]), k in 2u64..9) {
            let tp = apply_tp(p, k, &f).unwrap();
            let pk1 = big_pow(p, k as u32 - 1);
            let alpha = apply_alpha(p, &f).unwrap();
            let rhs = apply_up(p, &f).unwrap().add(&alpha.truncate(f.precision() / p as usize).scale_integer(&pk1)).unwrap();
            prop_assert_eq!(tp, rhs);
        }
    }
}
