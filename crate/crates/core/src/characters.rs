//! Dirichlet characters of `(Z/cZ)^x`.
//!
//! The unit group is decomposed by CRT into cyclic factors: the smallest
//! primitive root for each odd prime power, `3` for `4`, and the pair
//! `{-1, 5}` for `2^e` with `e >= 3`. A character is the vector of exponents
//! it assigns to those generators, so enumeration, order and conductor are
//! plain group theory; values are tabulated once at construction.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, euler_phi, factorize, gcd, lcm, modpow_u64, BigRational};
use crate::cyclotomic::CyclotomicElement;
use crate::error::{Error, Result};

const NON_UNIT: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct CyclicFactor {
    /// Generator of this factor, as a residue mod the full modulus.
    generator: u64,
    order: u64,
}

/// CRT decomposition of `(Z/cZ)^x` together with a discrete-log table.
#[derive(Debug)]
struct UnitGroup {
    modulus: u64,
    factors: Vec<CyclicFactor>,
    /// `logs[x * r + i]` is the log of `x` to the i-th generator.
    logs: Vec<u32>,
}

fn is_primitive_root(g: u64, m: u64, phi: u64, phi_primes: &[u64]) -> bool {
    gcd(g, m) == 1 && phi_primes.iter().all(|&q| modpow_u64(g, phi / q, m) != 1)
}

/// Lift `g mod q` to a residue mod `c` congruent to 1 mod `c / q`.
fn crt_lift(g: u64, q: u64, c: u64) -> u64 {
    let rest = c / q;
    if rest == 1 {
        return g % c;
    }
    // x = g + q * t with x = 1 mod rest
    let inv = arith::mod_inverse(q % rest, rest).expect("coprime CRT moduli");
    let t = arith::mulmod((1 + rest - g % rest) % rest, inv, rest);
    (g + q * t) % c
}

impl UnitGroup {
    fn new(c: u64) -> Self {
        assert!(c >= 1, "modulus must be positive");
        let mut factors = Vec::new();
        if c > 1 {
            for &(p, e) in factorize(c).expect("c >= 2").factors() {
                let q = p.pow(e);
                if p == 2 {
                    match e {
                        1 => {}
                        2 => factors.push(CyclicFactor {
                            generator: crt_lift(3, q, c),
                            order: 2,
                        }),
                        _ => {
                            factors.push(CyclicFactor {
                                generator: crt_lift(q - 1, q, c),
                                order: 2,
                            });
                            factors.push(CyclicFactor {
                                generator: crt_lift(5, q, c),
                                order: q / 4,
                            });
                        }
                    }
                } else {
                    let phi = q / p * (p - 1);
                    let phi_primes: Vec<u64> = arith::prime_divisors(phi);
                    let g = (2..q)
                        .find(|&g| is_primitive_root(g, q, phi, &phi_primes))
                        .expect("odd prime powers have primitive roots");
                    factors.push(CyclicFactor {
                        generator: crt_lift(g, q, c),
                        order: phi,
                    });
                }
            }
        }
        let r = factors.len();
        let mut logs = vec![NON_UNIT; c as usize * r];
        let total: u64 = factors.iter().map(|f| f.order).product();
        let mut exps = vec![0u64; r];
        for j in 0..total {
            let mut rest = j;
            let mut x = 1 % c;
            for i in (0..r).rev() {
                exps[i] = rest % factors[i].order;
                rest /= factors[i].order;
                x = arith::mulmod(x, modpow_u64(factors[i].generator, exps[i], c), c);
            }
            for (i, &e) in exps.iter().enumerate() {
                logs[x as usize * r + i] = e as u32;
            }
        }
        Self {
            modulus: c,
            factors,
            logs,
        }
    }

    fn rank(&self) -> usize {
        self.factors.len()
    }

    fn exponent(&self) -> u64 {
        self.factors.iter().fold(1, |acc, f| lcm(acc, f.order))
    }

    fn logs_of(&self, x: u64) -> Option<&[u32]> {
        if gcd(x % self.modulus, self.modulus) != 1 {
            return None;
        }
        let r = self.rank();
        let x = (x % self.modulus) as usize;
        Some(&self.logs[x * r..x * r + r])
    }
}

/// A Dirichlet character modulo `c`, with values in `Q(zeta_d)` where `d`
/// is its order. Non-units evaluate to zero.
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    exponents: Vec<u64>,
    order: u64,
    /// Value exponent mod `order` for each residue, `NON_UNIT` otherwise.
    values: Arc<Vec<u32>>,
}

impl DirichletCharacter {
    fn from_exponents(group: Arc<UnitGroup>, exponents: Vec<u64>) -> Self {
        let order = group
            .factors
            .iter()
            .zip(&exponents)
            .fold(1, |acc, (f, &a)| lcm(acc, f.order / gcd(a, f.order)));
        let big_l = group.exponent();
        let c = group.modulus;
        let mut values = vec![NON_UNIT; c as usize];
        for x in 0..c {
            if let Some(logs) = group.logs_of(x) {
                let mut e = 0u64;
                for ((f, &a), &lg) in group.factors.iter().zip(&exponents).zip(logs) {
                    e = (e + arith::mulmod(a * (big_l / f.order) % big_l, lg as u64, big_l))
                        % big_l;
                }
                values[x as usize] = (e / (big_l / order)) as u32;
            }
        }
        Self {
            group,
            exponents,
            order,
            values: Arc::new(values),
        }
    }

    pub fn trivial(c: u64) -> Self {
        let group = Arc::new(UnitGroup::new(c));
        let r = group.rank();
        Self::from_exponents(group, vec![0; r])
    }

    /// Character mod `c` determined by its values on the unit generators;
    /// `value_on(x)` gives `(t, m)` meaning `zeta_m^t`.
    fn from_unit_values(c: u64, value_on: impl Fn(u64) -> (u64, u64)) -> Self {
        let group = Arc::new(UnitGroup::new(c));
        let exponents = group
            .factors
            .iter()
            .map(|f| {
                let (t, m) = value_on(f.generator);
                debug_assert_eq!((t * f.order) % m, 0);
                (t * f.order / m) % f.order
            })
            .collect();
        Self::from_exponents(group, exponents)
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// Position in [`enumerate_characters`] for this modulus.
    pub fn index(&self) -> u64 {
        self.group
            .factors
            .iter()
            .zip(&self.exponents)
            .fold(0, |acc, (f, &a)| acc * f.order + a)
    }

    /// Label `"c.j"` with `j` the enumeration index.
    pub fn label(&self) -> String {
        format!("{}.{}", self.modulus(), self.index())
    }

    /// Parse a `"c.j"` label.
    pub fn from_label(label: &str) -> Result<Self> {
        let bad = || Error::UnknownCharacter(label.to_string());
        let (c, j) = label.split_once('.').ok_or_else(bad)?;
        let c: u64 = c.trim().parse().map_err(|_| bad())?;
        let j: u64 = j.trim().parse().map_err(|_| bad())?;
        if c == 0 || j >= euler_phi(c) {
            return Err(bad());
        }
        let group = Arc::new(UnitGroup::new(c));
        let mut rest = j;
        let mut exponents = vec![0; group.rank()];
        for (i, f) in group.factors.iter().enumerate().rev() {
            exponents[i] = rest % f.order;
            rest /= f.order;
        }
        Ok(Self::from_exponents(group, exponents))
    }

    /// Exponent `e` with `psi(n) = zeta_d^e`, or `None` if `gcd(n, c) > 1`.
    pub fn value_exponent(&self, n: i64) -> Option<u64> {
        let c = self.modulus() as i64;
        let x = n.rem_euclid(c) as usize;
        let e = self.values[x];
        (e != NON_UNIT).then_some(e as u64)
    }

    /// `psi(n)` as an element of `Q(zeta_d)`; zero on non-units.
    pub fn value(&self, n: i64) -> CyclotomicElement {
        match self.value_exponent(n) {
            Some(e) => CyclotomicElement::zeta_power(self.order, e as i64),
            None => CyclotomicElement::zero(self.order),
        }
    }

    /// `psi(-1)`, either `1` or `-1`.
    pub fn parity(&self) -> i64 {
        match self.value_exponent(-1) {
            Some(0) => 1,
            Some(_) => -1,
            None => unreachable!("-1 is always a unit"),
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == 1
    }

    /// Complex conjugate character.
    pub fn conjugate(&self) -> Self {
        let exponents = self
            .group
            .factors
            .iter()
            .zip(&self.exponents)
            .map(|(f, &a)| (f.order - a) % f.order)
            .collect();
        Self::from_exponents(self.group.clone(), exponents)
    }

    /// Smallest `f | c` such that `psi` is trivial on units `= 1 mod f`.
    pub fn conductor(&self) -> u64 {
        let c = self.modulus();
        arith::divisors(c)
            .into_iter()
            .find(|&f| {
                (1..c)
                    .step_by(f as usize)
                    .chain(std::iter::once(1 % c))
                    .all(|x| matches!(self.value_exponent(x as i64), Some(0) | None))
            })
            .unwrap_or(c)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus()
    }

    /// The primitive character mod the conductor that induces `psi`.
    pub fn primitive_character(&self) -> Self {
        let f = self.conductor();
        if f == self.modulus() {
            return self.clone();
        }
        let c = self.modulus();
        Self::from_unit_values(f, |y| {
            let x = (0..)
                .map(|t| y + t * f)
                .find(|&x| gcd(x, c) == 1)
                .expect("units lift to units");
            (self.value_exponent(x as i64).unwrap(), self.order)
        })
    }

    /// The character mod `m` (a multiple of `c`) induced by `psi`.
    pub fn induce(&self, m: u64) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(self.modulus()) {
            return Err(Error::out_of_range(
                "target modulus",
                m,
                "a multiple of the modulus",
            ));
        }
        Ok(Self::from_unit_values(m, |x| {
            (self.value_exponent(x as i64).unwrap(), self.order)
        }))
    }

    /// Gauss sum `W(psi) = sum_{n=1}^{c} psi(n) e^{2 pi i n / c}`, an element
    /// of `Q(zeta_lcm(c, d))`. Requires `psi` primitive.
    pub fn gauss_sum(&self) -> Result<CyclotomicElement> {
        let conductor = self.conductor();
        if conductor != self.modulus() {
            return Err(Error::NotPrimitive {
                label: self.label(),
                conductor,
            });
        }
        let c = self.modulus();
        let big_l = lcm(c, self.order);
        let mut counts = vec![BigRational::zero(); big_l as usize];
        for n in 1..=c {
            if let Some(e) = self.value_exponent(n as i64) {
                let idx = (e * (big_l / self.order) + n * (big_l / c)) % big_l;
                counts[idx as usize] += BigRational::one();
            }
        }
        Ok(CyclotomicElement::from_power_coefficients(big_l, counts))
    }

    pub fn descriptor(&self) -> CharacterDescriptor {
        CharacterDescriptor {
            label: self.label(),
            modulus: self.modulus(),
            order: self.order,
            conductor: self.conductor(),
            parity: self.parity(),
            primitive: self.is_primitive(),
        }
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus() && self.exponents == other.exponents
    }
}

impl Eq for DirichletCharacter {}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DirichletCharacter({}, order {})",
            self.label(),
            self.order
        )
    }
}

/// Serializable summary of a character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterDescriptor {
    pub label: String,
    pub modulus: u64,
    pub order: u64,
    pub conductor: u64,
    pub parity: i64,
    pub primitive: bool,
}

/// Every character mod `c`, ordered lexicographically by exponent vector;
/// index 0 is the trivial character.
pub fn enumerate_characters(c: u64) -> Vec<DirichletCharacter> {
    let group = Arc::new(UnitGroup::new(c));
    let orders: Vec<u64> = group.factors.iter().map(|f| f.order).collect();
    let total: u64 = orders.iter().product();
    (0..total)
        .map(|j| {
            let mut rest = j;
            let mut exps = vec![0; orders.len()];
            for i in (0..orders.len()).rev() {
                exps[i] = rest % orders[i];
                rest /= orders[i];
            }
            DirichletCharacter::from_exponents(group.clone(), exps)
        })
        .collect()
}

/// Primitive characters of modulus exactly `c`.
pub fn primitive_characters(c: u64) -> Vec<DirichletCharacter> {
    enumerate_characters(c)
        .into_iter()
        .filter(|x| x.is_primitive())
        .collect()
}
