//! Cusps of `X0(N)` for squarefree `N` and Eisenstein constant terms there.
//!
//! For squarefree `N` every cusp is equivalent to `1/v` for exactly one
//! positive divisor `v` of `N`; `v = N` is the cusp at infinity and `v = 1`
//! the cusp `0`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, big_pow, extended_gcd, gcd, BigInt, BigRational};
use crate::bernoulli::{eisenstein_constant, generalized_bernoulli};
use crate::characters::DirichletCharacter;
use crate::cyclotomic::CyclotomicElement;
use crate::error::{Error, Result};
use crate::qseries::EisensteinSpec;

/// The class of the cusp `1/v` on `X0(level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CuspClass {
    pub level: u64,
    pub v: u64,
}

impl CuspClass {
    pub fn new(level: u64, v: u64) -> Result<Self> {
        if level == 0 || !arith::is_squarefree(level) {
            return Err(Error::NotSquarefree(level));
        }
        if v == 0 || !level.is_multiple_of(v) {
            return Err(Error::out_of_range("v", v, "a positive divisor of N"));
        }
        Ok(Self { level, v })
    }

    pub fn is_infinity(&self) -> bool {
        self.v == self.level
    }

    /// A matrix in `SL2(Z)` sending infinity to `1/v`.
    pub fn matrix(&self) -> SL2Matrix {
        SL2Matrix::completing(1, self.v as i64).expect("gcd(1, v) = 1")
    }
}

/// `(u beta; v delta)` with `u delta - beta v = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SL2Matrix {
    pub u: i64,
    pub beta: i64,
    pub v: i64,
    pub delta: i64,
}

impl SL2Matrix {
    pub fn new(u: i64, beta: i64, v: i64, delta: i64) -> Result<Self> {
        let det = u as i128 * delta as i128 - beta as i128 * v as i128;
        if det != 1 {
            return Err(Error::out_of_range("determinant", det, "exactly 1"));
        }
        Ok(Self { u, beta, v, delta })
    }

    pub fn identity() -> Self {
        Self {
            u: 1,
            beta: 0,
            v: 0,
            delta: 1,
        }
    }

    /// Complete the first column `(u, v)` to a matrix of determinant one,
    /// taking the smallest nonnegative `beta`.
    pub fn completing(u: i64, v: i64) -> Result<Self> {
        let (g, x, y) = extended_gcd(u as i128, v as i128);
        if g != 1 {
            return Err(Error::NotCoprime {
                a: u.unsigned_abs(),
                b: v.unsigned_abs(),
            });
        }
        // u x + v y = 1, so delta = x, beta = -y; shift along (u, v)
        let (mut beta, mut delta) = (-y, x);
        if u != 0 {
            let t = beta.div_euclid(u.abs() as i128);
            let s = if u > 0 { t } else { -t };
            beta -= s * u as i128;
            delta -= s * v as i128;
        }
        let m = Self {
            u,
            beta: i64::try_from(beta).map_err(|_| Error::out_of_range("beta", beta, "64-bit"))?,
            v,
            delta: i64::try_from(delta)
                .map_err(|_| Error::out_of_range("delta", delta, "64-bit"))?,
        };
        debug_assert_eq!(u as i128 * m.delta as i128 - m.beta as i128 * v as i128, 1);
        Ok(m)
    }
}

/// One positive-divisor cusp per `v | N`, in increasing `v`.
pub fn cusp_representatives(n: u64) -> Result<Vec<CuspClass>> {
    if n == 0 || !arith::is_squarefree(n) {
        return Err(Error::NotSquarefree(n));
    }
    Ok(arith::divisors(n)
        .into_iter()
        .map(|v| CuspClass { level: n, v })
        .collect())
}

/// Constant term of `(alpha_M E_k^{1, eps0}) |_k gamma` with `eps0`
/// primitive of modulus `N` and `gcd(M, N) = 1`.
///
/// With `r = gcd(v, M)` and `M' = M / r` it vanishes unless `N | v/r`, and
/// otherwise equals `-conj(eps0)(M') eps0(delta) / M'^k * B_{k,eps0} / 2k`.
pub fn constant_term_general(
    m: u64,
    k: u64,
    eps0: &DirichletCharacter,
    gamma: &SL2Matrix,
) -> Result<CyclotomicElement> {
    if m == 0 {
        return Err(Error::out_of_range("M", m, ">= 1"));
    }
    if k < 3 {
        return Err(Error::out_of_range("k", k, ">= 3"));
    }
    let n = eps0.modulus();
    if gcd(m, n) != 1 {
        return Err(Error::NotCoprime { a: m, b: n });
    }
    let expected_sign = if k.is_multiple_of(2) { 1 } else { -1 };
    if eps0.parity() != expected_sign {
        return Err(Error::Parity {
            index: k as i64,
            character_sign: eps0.parity(),
            expected_sign,
        });
    }
    let bernoulli = generalized_bernoulli(k, eps0)?;
    let d = eps0.order();
    // gcd(0, M) = M, so the cusp at infinity keeps the full M
    let r = gcd(gamma.v.unsigned_abs(), m);
    let v_over_r = gamma.v.unsigned_abs() / r;
    if !v_over_r.is_multiple_of(n) {
        return Ok(CyclotomicElement::zero(d));
    }
    let m_prime = m / r;
    let scalar = BigRational::new(
        BigInt::from(-1),
        big_pow(m_prime, k as u32) * BigInt::from(2 * k),
    );
    let chars = &eps0.conjugate().value(m_prime as i64) * &eps0.value(gamma.delta);
    Ok((&chars * &bernoulli).scale(&scalar))
}

/// Constant term of `E` at the cusp `1/v`:
/// `-B_k/2k * prod_{p | N} (1 - delta_p (gcd(p, v)/p)^k)`.
pub fn e_constant_term_at_cusp(spec: &EisensteinSpec, cusp: &CuspClass) -> Result<BigRational> {
    if spec.level() != cusp.level {
        return Err(Error::LevelMismatch {
            spec: spec.level(),
            cusp: cusp.level,
        });
    }
    let k = spec.weight() as u32;
    let mut c = eisenstein_constant(spec.weight());
    for p in arith::prime_divisors(spec.level()) {
        let delta = BigRational::from_integer(spec.delta_value(p).expect("valid spec"));
        let factor = if cusp.v.is_multiple_of(p) {
            BigRational::one() - delta
        } else {
            BigRational::one() - delta / BigRational::from_integer(big_pow(p, k))
        };
        if factor.is_zero() {
            return Ok(BigRational::zero());
        }
        c *= factor;
    }
    Ok(c)
}

/// `(v, constant term)` for every cusp of `X0(N)`.
pub fn e_constant_terms(spec: &EisensteinSpec) -> Result<Vec<(CuspClass, BigRational)>> {
    cusp_representatives(spec.level())?
        .into_iter()
        .map(|c| e_constant_term_at_cusp(spec, &c).map(|t| (c, t)))
        .collect()
}
