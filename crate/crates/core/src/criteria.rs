//! Decidable congruence criteria for `1 + chi_l^(k-1)` and related recipes.
//!
//! Verdicts are statements about arithmetic conditions only. Inputs outside
//! a criterion's hypotheses yield [`Verdict::NotApplicable`] with the failed
//! guards listed, never a plain `false`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd, is_prime, l_adic_valuation, modpow, BigInt, BigRational};
use crate::bernoulli::{bk_over_k_numerator, generalized_bernoulli};
use crate::characters::{CharacterDescriptor, DirichletCharacter};
use crate::cusps::{cusp_representatives, e_constant_term_at_cusp};
use crate::cyclotomic::CyclotomicElement;
use crate::error::{Error, Result};
use crate::qseries::{Delta, EisensteinSpec};

/// Outcome of a criterion: serialized as `true`, `false` or `"not_applicable"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    True,
    False,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::NotApplicable => "not_applicable",
        })
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Verdict::True => s.serialize_bool(true),
            Verdict::False => s.serialize_bool(false),
            Verdict::NotApplicable => s.serialize_str("not_applicable"),
        }
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Verdict;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("true, false or \"not_applicable\"")
            }
            fn visit_bool<E: serde::de::Error>(self, b: bool) -> std::result::Result<Verdict, E> {
                Ok(Verdict::from_bool(b))
            }
            fn visit_str<E: serde::de::Error>(self, s: &str) -> std::result::Result<Verdict, E> {
                match s {
                    "not_applicable" => Ok(Verdict::NotApplicable),
                    "true" => Ok(Verdict::True),
                    "false" => Ok(Verdict::False),
                    _ => Err(E::invalid_value(serde::de::Unexpected::Str(s), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// What a report is about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub criterion: String,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none", default)]
    pub level: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<u64>,
    pub l: u64,
}

/// A congruence that holds at the prime `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub p: u64,
    pub congruence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub target: Target,
    pub verdict: Verdict,
    /// Which numbered condition fired; `(1)` is preferred when both hold.
    pub branch: Option<u8>,
    /// Every relevant congruence that holds, whether or not a branch fired.
    pub witnesses: Vec<Witness>,
    pub violated_guards: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CriterionReport {
    fn not_applicable(target: Target, guards: Vec<String>) -> Self {
        Self {
            target,
            verdict: Verdict::NotApplicable,
            branch: None,
            witnesses: Vec::new(),
            violated_guards: guards,
            note: None,
        }
    }

    fn evaluated(
        target: Target,
        branch: Option<u8>,
        witnesses: Vec<Witness>,
        size_guard: Option<String>,
    ) -> Self {
        let verdict = if size_guard.is_some() {
            Verdict::NotApplicable
        } else {
            Verdict::from_bool(branch.is_some())
        };
        Self {
            target,
            verdict,
            branch,
            witnesses,
            violated_guards: size_guard.into_iter().collect(),
            note: None,
        }
    }
}

fn prime_guard(name: &str, x: u64, guards: &mut Vec<String>) {
    if !is_prime(x) {
        guards.push(format!("{name} = {x} is not prime"));
    }
}

fn weight_guard(k: u64, guards: &mut Vec<String>) {
    if k < 4 || k % 2 == 1 {
        guards.push(format!("k = {k} is not an even integer >= 4"));
    }
}

/// `l > k + 1` only; the conditions stay decidable without it, so a
/// report that fails nothing else still carries its branch and witnesses.
fn size_guard(k: u64, l: u64) -> Option<String> {
    (l <= k + 1).then(|| format!("l = {l} is not > k + 1 = {}", k + 1))
}

fn bernoulli_divisible(k: u64, l: u64) -> bool {
    let num = bk_over_k_numerator(k).expect("even k >= 2");
    (num % BigInt::from(l)).is_zero()
}

fn congruence(p: u64, e: u64, l: u64) -> Witness {
    Witness {
        p,
        congruence: format!("{p}^{e} = 1 mod {l}"),
    }
}

fn bernoulli_witness(k: u64, l: u64) -> Witness {
    Witness {
        p: l,
        congruence: format!("{l} | numerator(B_{k}/{k})"),
    }
}

/// `k` attached to `1 + eps chi_l^b`: 4 if `l = 2`, `l` if `b = 0`, `l + 1`
/// if `b = 1`, else `b + 1`.
pub fn weight_recipe(b: u64, l: u64) -> Result<u64> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    if l == 2 {
        return if b == 0 {
            Ok(4)
        } else {
            Err(Error::out_of_range("b", b, "0 when l = 2"))
        };
    }
    if b > l - 2 {
        return Err(Error::out_of_range("b", b, "0 <= b <= l - 2"));
    }
    Ok(match b {
        0 => l,
        1 => l + 1,
        _ => b + 1,
    })
}

/// Type `(N, k, eps0)` attached to `1 + eps chi_l^b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRecipe {
    pub b: u64,
    pub l: u64,
    #[serde(rename = "N")]
    pub level: u64,
    pub k: u64,
    pub epsilon0: CharacterDescriptor,
}

/// `eps` is given as the complex character standing for its Teichmuller
/// lift, so its order must be prime to `l`.
pub fn type_recipe(b: u64, l: u64, eps: &DirichletCharacter) -> Result<TypeRecipe> {
    let k = weight_recipe(b, l)?;
    let level = eps.conductor();
    if gcd(level, l) != 1 {
        return Err(Error::NotCoprime { a: level, b: l });
    }
    if eps.order().is_multiple_of(l) {
        return Err(Error::out_of_range(
            "character order",
            eps.order(),
            "prime to l",
        ));
    }
    if l == 2 {
        if !eps.is_even() {
            return Err(Error::Oddness(format!(
                "{} is odd but l = 2 requires an even lift",
                eps.label()
            )));
        }
    } else {
        let expected = if b.is_multiple_of(2) { -1 } else { 1 };
        if eps.parity() != expected {
            return Err(Error::Oddness(format!(
                "{}(-1) = {} but (-1)^(b+1) = {expected} for b = {b}",
                eps.label(),
                eps.parity()
            )));
        }
    }
    let eps0 = eps.primitive_character();
    debug_assert_eq!(eps0.parity(), if k % 2 == 0 { 1 } else { -1 });
    Ok(TypeRecipe {
        b,
        l,
        level,
        k,
        epsilon0: eps0.descriptor(),
    })
}

/// Level `lcm(Np, r^2, rN)` of a twist.
pub fn twist_level(n: u64, p: u64, r: u64) -> Result<u64> {
    for (name, x) in [("N", n), ("p", p), ("r", r)] {
        if x == 0 {
            return Err(Error::out_of_range(name, x, ">= 1"));
        }
    }
    let overflow = || {
        Error::out_of_range(
            "twist level",
            format!("lcm({n}*{p}, {r}^2, {r}*{n})"),
            "fits in 64 bits",
        )
    };
    let np = n.checked_mul(p).ok_or_else(overflow)?;
    let r2 = r.checked_mul(r).ok_or_else(overflow)?;
    let rn = r.checked_mul(n).ok_or_else(overflow)?;
    let lcm = |a: u64, b: u64| (a / gcd(a, b)).checked_mul(b).ok_or_else(overflow);
    lcm(lcm(np, r2)?, rn)
}

/// Primes `p <= bound`, `p` not dividing `Nl`, for which some prime above
/// `l` divides `B_{k,eps0}/2k * (eps0(p) p^k - 1)`, decided through the norm
/// down to `Q`.
pub fn admissible_primes(
    eps0: &DirichletCharacter,
    k: u64,
    l: u64,
    bound: u64,
) -> Result<Vec<u64>> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
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
    let n = eps0.modulus();
    let b = generalized_bernoulli(k, eps0)?
        .scale(&BigRational::new(BigInt::one(), BigInt::from(2 * k)));
    let b_norm = b.norm();
    if b_norm.is_zero() {
        return Err(Error::Internal(format!(
            "B_{{{k},{}}} vanished",
            eps0.label()
        )));
    }
    let vb = l_adic_valuation(&b_norm, l)?;
    let d = eps0.order();
    let p_to_k = |p: u64| {
        CyclotomicElement::from_rational(d, BigRational::from_integer(arith::big_pow(p, k as u32)))
    };
    let mut out = Vec::new();
    for p in arith::primes_up_to(bound) {
        if n.is_multiple_of(p) || p == l {
            continue;
        }
        let x = &(&eps0.value(p as i64) * &p_to_k(p)) - &CyclotomicElement::one(d);
        let norm = x.norm();
        if norm.is_zero() {
            return Err(Error::Internal(format!("eps0({p}) {p}^{k} - 1 vanished")));
        }
        if vb + l_adic_valuation(&norm, l)? >= 1 {
            out.push(p);
        }
    }
    Ok(out)
}

/// Weight-2 prime-level criterion: `l | numerator((N - 1)/12)`.
pub fn mazur_criterion(n: u64, l: u64) -> CriterionReport {
    let target = Target {
        criterion: "mazur".into(),
        level: Some(n),
        k: Some(2),
        l,
    };
    let mut guards = Vec::new();
    prime_guard("N", n, &mut guards);
    prime_guard("l", l, &mut guards);
    if l <= 3 {
        guards.push(format!("l = {l} is not > 3"));
    }
    if n == l {
        guards.push(format!("N = l = {l}"));
    }
    if !guards.is_empty() {
        return CriterionReport::not_applicable(target, guards);
    }
    let num = (n - 1) / gcd(n - 1, 12);
    let holds = num.is_multiple_of(l);
    CriterionReport {
        target,
        verdict: Verdict::from_bool(holds),
        branch: holds.then_some(1),
        witnesses: if holds {
            vec![Witness {
                p: n,
                congruence: format!("{l} | numerator(({n} - 1)/12) = {num}"),
            }]
        } else {
            Vec::new()
        },
        violated_guards: Vec::new(),
        note: None,
    }
}

/// Prime level `N`, even `k >= 4`, `l > k + 1`: `(1) N^k = 1 mod l` or
/// `(2) N^(k-2) = 1 mod l` and `l | numerator(B_k/k)`.
pub fn thm_main_criterion(n: u64, k: u64, l: u64) -> CriterionReport {
    let target = Target {
        criterion: "main".into(),
        level: Some(n),
        k: Some(k),
        l,
    };
    let mut guards = Vec::new();
    prime_guard("N", n, &mut guards);
    prime_guard("l", l, &mut guards);
    weight_guard(k, &mut guards);
    if n == l {
        guards.push(format!("N = l = {l}"));
    }
    let size = size_guard(k, l);
    if !guards.is_empty() {
        guards.extend(size);
        return CriterionReport::not_applicable(target, guards);
    }
    let c1 = modpow(n as i64, k, l) == 1;
    let c2_prime = modpow(n as i64, k - 2, l) == 1;
    let bern = bernoulli_divisible(k, l);
    let mut witnesses = Vec::new();
    if c1 {
        witnesses.push(congruence(n, k, l));
    }
    if c2_prime {
        witnesses.push(congruence(n, k - 2, l));
    }
    if bern {
        witnesses.push(bernoulli_witness(k, l));
    }
    let branch = if c1 {
        Some(1)
    } else if c2_prime && bern {
        Some(2)
    } else {
        None
    };
    CriterionReport::evaluated(target, branch, witnesses, size)
}

/// Conditions of the squarefree-level conjecture:
/// `(1)` `(p^k - 1)(p^(k-2) - 1) = 0 mod l` for all `p | N` and `p0^k = 1`
/// for some `p0 | N`; `(2)` `p^(k-2) = 1` for all `p | N` and
/// `l | numerator(B_k/k)`.
pub fn conjecture_conditions(n: u64, k: u64, l: u64) -> Result<CriterionReport> {
    if n == 0 || !arith::is_squarefree(n) {
        return Err(Error::NotSquarefree(n));
    }
    let target = Target {
        criterion: "conjecture".into(),
        level: Some(n),
        k: Some(k),
        l,
    };
    let mut guards = Vec::new();
    prime_guard("l", l, &mut guards);
    weight_guard(k, &mut guards);
    if gcd(n, l) != 1 {
        guards.push(format!("l = {l} divides N = {n}"));
    }
    let size = size_guard(k, l);
    if !guards.is_empty() {
        guards.extend(size);
        return Ok(CriterionReport::not_applicable(target, guards));
    }
    let primes = arith::prime_divisors(n);
    let mut witnesses = Vec::new();
    let (mut all_raising, mut some_k, mut all_k2) = (true, false, true);
    for &p in &primes {
        let a = modpow(p as i64, k, l) == 1;
        let b = modpow(p as i64, k - 2, l) == 1;
        if a {
            witnesses.push(congruence(p, k, l));
        }
        if b {
            witnesses.push(congruence(p, k - 2, l));
        }
        all_raising &= a || b;
        some_k |= a;
        all_k2 &= b;
    }
    let bern = bernoulli_divisible(k, l);
    if bern {
        witnesses.push(bernoulli_witness(k, l));
    }
    let branch = if all_raising && some_k {
        Some(1)
    } else if all_k2 && bern {
        Some(2)
    } else {
        None
    };
    let mut report = CriterionReport::evaluated(target, branch, witnesses, size);
    if primes.len() >= 2 {
        report.note = Some(
            "composite level: conditions of an open conjecture, modularity not implied".into(),
        );
    }
    Ok(report)
}

/// `(p^k - 1)(p^(k-2) - 1) = 0 mod l`.
pub fn level_raising_condition(p: u64, k: u64, l: u64) -> Result<bool> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    if p == l {
        return Err(Error::out_of_range("p", p, "different from l"));
    }
    if k < 2 || k % 2 == 1 {
        return Err(Error::out_of_range("k", k, "an even integer >= 2"));
    }
    Ok(modpow(p as i64, k, l) == 1 || modpow(p as i64, k - 2, l) == 1)
}

/// Level one: `l | numerator(B_k/k)` for even `k >= 4`, `l > k + 1`.
pub fn level_one_criterion(k: u64, l: u64) -> CriterionReport {
    let target = Target {
        criterion: "level-one".into(),
        level: Some(1),
        k: Some(k),
        l,
    };
    let mut guards = Vec::new();
    prime_guard("l", l, &mut guards);
    weight_guard(k, &mut guards);
    let size = size_guard(k, l);
    if !guards.is_empty() {
        guards.extend(size);
        return CriterionReport::not_applicable(target, guards);
    }
    let holds = bernoulli_divisible(k, l);
    let witnesses = if holds {
        vec![bernoulli_witness(k, l)]
    } else {
        Vec::new()
    };
    CriterionReport::evaluated(target, holds.then_some(2), witnesses, size)
}

/// `delta_p = 1` if `p^k = 1 mod l`, else `p^(k-1)`.
pub fn delta_choice(n: u64, k: u64, l: u64) -> Result<EisensteinSpec> {
    if n == 0 || !arith::is_squarefree(n) {
        return Err(Error::NotSquarefree(n));
    }
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    if gcd(n, l) != 1 {
        return Err(Error::NotCoprime { a: n, b: l });
    }
    let delta: BTreeMap<u64, Delta> = arith::prime_divisors(n)
        .into_iter()
        .map(|p| {
            (
                p,
                if modpow(p as i64, k, l) == 1 {
                    Delta::One
                } else {
                    Delta::Full
                },
            )
        })
        .collect();
    EisensteinSpec::new(k, n, delta)
}

/// Constant term of `E` at one cusp with its `l`-adic valuation
/// (`None` when the constant is exactly zero).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspTerm {
    pub v: u64,
    #[serde(with = "crate::arith::fraction_serde")]
    pub constant: BigRational,
    pub valuation: Option<i64>,
}

impl CuspTerm {
    pub fn vanishes_mod_l(&self) -> bool {
        self.valuation.is_none_or(|v| v >= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspidalityReport {
    #[serde(rename = "N")]
    pub level: u64,
    pub k: u64,
    pub l: u64,
    pub delta: BTreeMap<u64, Delta>,
    pub cuspidal: bool,
    pub cusps: Vec<CuspTerm>,
    pub violated_guards: Vec<String>,
}

/// Whether every cusp constant term of `E` vanishes mod `l`.
pub fn is_cuspidal_mod_l(spec: &EisensteinSpec, l: u64) -> Result<CuspidalityReport> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    let (n, k) = (spec.level(), spec.weight());
    let mut guards = Vec::new();
    if gcd(n, l) != 1 {
        guards.push(format!("l = {l} divides N = {n}"));
    }
    guards.extend(size_guard(k, l));
    let mut cusps = Vec::new();
    for c in cusp_representatives(n)? {
        let constant = e_constant_term_at_cusp(spec, &c)?;
        let valuation = if constant.is_zero() {
            None
        } else {
            Some(l_adic_valuation(&constant, l)?)
        };
        cusps.push(CuspTerm {
            v: c.v,
            constant,
            valuation,
        });
    }
    Ok(CuspidalityReport {
        level: n,
        k,
        l,
        delta: spec.delta().clone(),
        cuspidal: cusps.iter().all(CuspTerm::vanishes_mod_l),
        cusps,
        violated_guards: guards,
    })
}
