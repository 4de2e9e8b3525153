//! Exact arithmetic in cyclotomic fields `Q(zeta_n)`.
//!
//! An element is stored as a dense vector of `phi(n)` rational coefficients
//! in the power basis `1, zeta, ..., zeta^(phi(n)-1)`, always reduced modulo
//! the n-th cyclotomic polynomial. Elements of different orders are combined
//! after embedding both into `Q(zeta_lcm)`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, divisors, euler_phi, fraction_string, BigInt, BigRational};

/// Coefficients of `Phi_n`, low degree first. Cached per order.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    assert!(n >= 1, "cyclotomic order must be positive");
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Phi_d for every proper divisor d.
    let mut poly: Vec<i128> = vec![0; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let divisor = cyclotomic_polynomial(d);
        poly = exact_monic_division(&poly, &divisor);
    }
    let coeffs: Vec<i64> = poly
        .into_iter()
        .map(|c| i64::try_from(c).expect("cyclotomic coefficient overflow"))
        .collect();
    let coeffs = Arc::new(coeffs);
    cache.lock().unwrap().insert(n, coeffs.clone());
    coeffs
}

fn exact_monic_division(num: &[i128], den: &[i64]) -> Vec<i128> {
    let dd = den.len() - 1;
    let mut rem = num.to_vec();
    let qlen = num.len() - dd;
    let mut quot = vec![0i128; qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dd];
        quot[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj as i128;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

/// Reduce a coefficient vector (powers of zeta_n, any length) modulo `Phi_n`.
fn reduce_mod_phi(mut coeffs: Vec<BigRational>, n: u64) -> Vec<BigRational> {
    let phi = cyclotomic_polynomial(n);
    let deg = phi.len() - 1;
    if coeffs.len() < deg {
        coeffs.resize(deg, BigRational::zero());
        return coeffs;
    }
    for i in (deg..coeffs.len()).rev() {
        let c = std::mem::take(&mut coeffs[i]);
        if c.is_zero() {
            continue;
        }
        for (j, &pj) in phi[..deg].iter().enumerate() {
            if pj != 0 {
                coeffs[i - deg + j] -= &c * BigInt::from(pj);
            }
        }
    }
    coeffs.truncate(deg);
    coeffs
}

/// An exact element of `Q(zeta_n)`.
#[derive(Clone, Debug)]
pub struct CyclotomicElement {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl CyclotomicElement {
    pub fn zero(order: u64) -> Self {
        let deg = euler_phi(order) as usize;
        Self {
            order,
            coeffs: vec![BigRational::zero(); deg],
        }
    }

    pub fn one(order: u64) -> Self {
        Self::from_rational(order, BigRational::one())
    }

    pub fn from_rational(order: u64, r: BigRational) -> Self {
        let mut z = Self::zero(order);
        z.coeffs[0] = r;
        z
    }

    pub fn from_integer(order: u64, n: i64) -> Self {
        Self::from_rational(order, BigRational::from_integer(n.into()))
    }

    /// `zeta_n^e` for any integer exponent.
    pub fn zeta_power(order: u64, exponent: i64) -> Self {
        let e = exponent.rem_euclid(order as i64) as usize;
        let mut v = vec![BigRational::zero(); e + 1];
        v[e] = BigRational::one();
        Self::from_power_coefficients(order, v)
    }

    /// Build from coefficients of `1, zeta, zeta^2, ...` of any length;
    /// the vector is reduced modulo `Phi_n`.
    pub fn from_power_coefficients(order: u64, coeffs: Vec<BigRational>) -> Self {
        assert!(order >= 1, "cyclotomic order must be positive");
        Self {
            order,
            coeffs: reduce_mod_phi(coeffs, order),
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Embed into `Q(zeta_m)`; requires `order | m`.
    pub fn embed(&self, m: u64) -> Self {
        assert!(
            m.is_multiple_of(self.order),
            "cannot embed order {} into {}",
            self.order,
            m
        );
        if m == self.order {
            return self.clone();
        }
        let step = (m / self.order) as usize;
        let mut v = vec![BigRational::zero(); step * (self.coeffs.len().max(1) - 1) + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * step] = c.clone();
        }
        Self::from_power_coefficients(m, v)
    }

    fn reconcile(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let m = arith::lcm(a.order, b.order);
        (a.embed(m), b.embed(m))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Image under the automorphism `zeta -> zeta^t`, `gcd(t, n) = 1`.
    pub fn galois_conjugate(&self, t: u64) -> Self {
        assert_eq!(
            arith::gcd(t, self.order),
            1,
            "t must be a unit mod the order"
        );
        let n = self.order as usize;
        let mut v = vec![BigRational::zero(); n.max(1)];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let j = (i * t as usize) % n.max(1);
                v[j] += c;
            }
        }
        Self::from_power_coefficients(self.order, v)
    }

    /// Complex conjugate, `zeta -> zeta^-1`.
    pub fn conjugate(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        self.galois_conjugate(self.order - 1)
    }

    /// Double-precision value under `zeta_n -> exp(2 pi i / n)`.
    pub fn to_complex(&self) -> Complex64 {
        let n = self.order as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / n;
                Complex64::from_polar(c.to_f64().unwrap_or(f64::NAN), theta)
            })
            .sum()
    }

    /// Field norm to `Q`: the resultant of `Phi_n` with the representative
    /// polynomial. `norm(r) = r^phi(n)` for rational `r`.
    pub fn norm(&self) -> BigRational {
        let phi: Vec<BigRational> = cyclotomic_polynomial(self.order)
            .iter()
            .map(|&c| BigRational::from_integer(c.into()))
            .collect();
        resultant(&phi, &trim(self.coeffs.clone()))
    }
}

fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// Remainder of `f` by nonzero `g` over `Q`; both low degree first, trimmed.
fn poly_rem(f: &[BigRational], g: &[BigRational]) -> Vec<BigRational> {
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    let lead = g[dg].clone();
    while r.len() > dg {
        let top = r.len() - 1;
        let c = &r[top] / &lead;
        if !c.is_zero() {
            for (j, gj) in g.iter().enumerate() {
                r[top - dg + j] -= &c * gj;
            }
        }
        r.pop();
        r = trim(r);
    }
    trim(r)
}

/// `Res(f, g) = lc(f)^deg g * prod_{f(a)=0} g(a)` by the Euclidean recurrence.
/// Polynomials are low degree first and trimmed; the empty vector is zero.
fn resultant(f: &[BigRational], g: &[BigRational]) -> BigRational {
    if f.is_empty() || g.is_empty() {
        return BigRational::zero();
    }
    let m = f.len() - 1;
    let n = g.len() - 1;
    if n == 0 {
        return num_traits::pow(g[0].clone(), m);
    }
    if m == 0 {
        return num_traits::pow(f[0].clone(), n);
    }
    let sign = if (m * n) % 2 == 1 {
        -BigRational::one()
    } else {
        BigRational::one()
    };
    if m < n {
        return sign * resultant(g, f);
    }
    let r = poly_rem(f, g);
    if r.is_empty() {
        return BigRational::zero();
    }
    let s = r.len() - 1;
    sign * num_traits::pow(g[n].clone(), m - s) * resultant(g, &r)
}

impl PartialEq for CyclotomicElement {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = Self::reconcile(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CyclotomicElement {}

impl Add for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn add(self, rhs: Self) -> CyclotomicElement {
        let (a, b) = CyclotomicElement::reconcile(self, rhs);
        CyclotomicElement {
            order: a.order,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn sub(self, rhs: Self) -> CyclotomicElement {
        let (a, b) = CyclotomicElement::reconcile(self, rhs);
        CyclotomicElement {
            order: a.order,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Mul for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn mul(self, rhs: Self) -> CyclotomicElement {
        let (a, b) = CyclotomicElement::reconcile(self, rhs);
        let len = a.coeffs.len() + b.coeffs.len() - 1;
        let mut prod = vec![BigRational::zero(); len];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        CyclotomicElement::from_power_coefficients(a.order, prod)
    }
}

impl Neg for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn neg(self) -> CyclotomicElement {
        CyclotomicElement {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for CyclotomicElement {
            type Output = CyclotomicElement;
            fn $f(self, rhs: Self) -> CyclotomicElement {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for CyclotomicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let term = match i {
                0 => fraction_string(c),
                _ => {
                    let power = if i == 1 {
                        format!("z{}", self.order)
                    } else {
                        format!("z{}^{}", self.order, i)
                    };
                    if c.is_one() {
                        power
                    } else if (-c).is_one() {
                        format!("-{power}")
                    } else {
                        format!("{}*{}", fraction_string(c), power)
                    }
                }
            };
            terms.push(term);
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        let mut out = terms[0].clone();
        for t in &terms[1..] {
            match t.strip_prefix('-') {
                Some(rest) => out.push_str(&format!(" - {rest}")),
                None => out.push_str(&format!(" + {t}")),
            }
        }
        write!(f, "{out}")
    }
}

#[derive(Serialize, Deserialize)]
struct CyclotomicRepr {
    order: u64,
    #[serde(with = "crate::arith::fraction_vec_serde")]
    coefficients: Vec<BigRational>,
}

impl Serialize for CyclotomicElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CyclotomicRepr {
            order: self.order,
            coefficients: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CyclotomicElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = CyclotomicRepr::deserialize(d)?;
        if r.order == 0 {
            return Err(serde::de::Error::custom("order must be positive"));
        }
        Ok(CyclotomicElement::from_power_coefficients(
            r.order,
            r.coefficients,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use proptest::prelude::*;

    fn z(n: u64, e: i64) -> CyclotomicElement {
        CyclotomicElement::zeta_power(n, e)
    }

    fn int(n: u64, v: i64) -> CyclotomicElement {
        CyclotomicElement::from_integer(n, v)
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(*cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
        // first order with a coefficient of absolute value 2
        let p105 = cyclotomic_polynomial(105);
        assert!(p105.contains(&-2));
        for n in 1..=60 {
            assert_eq!(cyclotomic_polynomial(n).len() as u64 - 1, euler_phi(n));
        }
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&z(4, 1) * &z(4, 1), int(4, -1));
        assert_eq!(&z(3, 1) + &z(3, 2), int(3, -1));
        let lhs = &(&int(5, 1) + &z(5, 1)) * &(&int(5, 1) + &z(5, 4));
        let rhs = &(&int(5, 2) + &z(5, 1)) + &z(5, 4);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_orders_embed_into_lcm() {
        let s = &z(3, 1) + &z(4, 1);
        assert_eq!(s.order(), 12);
        assert_eq!(&z(4, 1) * &z(4, 1), int(1, -1));
        assert_eq!(z(6, 2), z(3, 1));
        assert_eq!(z(12, 3), z(4, 1));
    }

    #[test]
    fn roots_of_unity_have_order_n() {
        for n in 1..=40 {
            assert_eq!(z(n, 1).pow(n), int(n, 1), "n = {n}");
        }
    }

    #[test]
    fn complex_embedding_examples() {
        let i = z(4, 1).to_complex();
        assert!((i - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let h = CyclotomicElement::from_rational(3, rat(-1, 2)).to_complex();
        assert!((h - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let s = (&z(8, 1) + &z(8, -1)).to_complex();
        assert!((s - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(int(4, 2).norm(), rat(4, 1));
        assert_eq!(z(4, 1).norm(), rat(1, 1));
        assert_eq!((&int(5, 1) - &z(5, 1)).norm(), rat(5, 1));
        assert_eq!(CyclotomicElement::zero(7).norm(), rat(0, 1));
        assert_eq!(
            CyclotomicElement::from_rational(1, rat(-3, 2)).norm(),
            rat(-3, 2)
        );
    }

    /// Norm as the product of all Galois conjugates.
    fn norm_by_conjugates(a: &CyclotomicElement) -> BigRational {
        let n = a.order();
        let mut acc = CyclotomicElement::one(n);
        for t in 1..=n {
            if arith::gcd(t, n) == 1 {
                acc = &acc * &a.galois_conjugate(t);
            }
        }
        acc.as_rational().expect("norm is rational")
    }

    fn element(orders: &'static [u64]) -> impl Strategy<Value = CyclotomicElement> {
        (0..orders.len(), proptest::collection::vec(-20i64..20, 12)).prop_map(move |(i, v)| {
            let n = orders[i];
            let coeffs = v.into_iter().map(|c| rat(c, 1)).collect();
            CyclotomicElement::from_power_coefficients(n, coeffs)
        })
    }

    const ORDERS: &[u64] = &[1, 3, 4, 5, 7, 8, 12];

    proptest! {
        #[test]
        fn multiplication_is_commutative_and_associative(
            a in element(ORDERS), b in element(ORDERS), c in element(ORDERS)
        ) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn norm_is_multiplicative_and_matches_conjugate_product(a in element(ORDERS), b in element(ORDERS)) {
            let (a, b) = CyclotomicElement::reconcile(&a, &b);
            prop_assert_eq!((&a * &b).norm(), a.norm() * b.norm());
            prop_assert_eq!(a.norm(), norm_by_conjugates(&a));
        }

        #[test]
        fn embedding_is_a_ring_homomorphism(a in element(ORDERS), b in element(ORDERS)) {
            let lhs = (&a * &b).to_complex();
            let rhs = a.to_complex() * b.to_complex();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn serde_round_trip() {
        let a = &(&z(5, 2) + &int(5, 3)) * &z(5, 1);
        let json = serde_json::to_string(&a).unwrap();
        let back: CyclotomicElement = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }
}
