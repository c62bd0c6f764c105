//! Exact integer arithmetic: valuations, power-fullness, multiplicative
//! functions and quadratic residue symbols.
//!
//! Everything here works on arbitrary precision [`BigInt`]s. Hot paths drop to
//! `u64`/`u128` only when the operands provably fit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Primes below this bound are removed by trial division before falling back
/// to a general-purpose factorization routine.
pub const TRIAL_DIVISION_BOUND: u32 = 1_000_000;

static SMALL_PRIMES: Lazy<Vec<u32>> = Lazy::new(|| sieve(TRIAL_DIVISION_BOUND));

/// Primes `<= limit` by the sieve of Eratosthenes.
pub fn sieve(limit: u32) -> Vec<u32> {
    let n = limit as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes up to `limit`, reusing the cached trial-division table when possible.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit <= TRIAL_DIVISION_BOUND as u64 {
        SMALL_PRIMES
            .iter()
            .take_while(|&&p| p as u64 <= limit)
            .map(|&p| p as u64)
            .collect()
    } else {
        num_prime::nt_funcs::primes(limit)
    }
}

/// A value in ℕ ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Finite(u64),
    Infinity,
}

impl ExtNat {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtNat::Infinity)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Finite(v) => Some(v),
            ExtNat::Infinity => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self == ExtNat::Finite(0)
    }
}

impl Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Finite(a), ExtNat::Finite(b)) => ExtNat::Finite(a + b),
            _ => ExtNat::Infinity,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(v) => write!(f, "{v}"),
            ExtNat::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtNat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtNat::Finite(v) => s.serialize_u64(*v),
            ExtNat::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtNat::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtNat::Infinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected integer or \"inf\", got {s:?}"))),
        }
    }
}

/// Primality test: deterministic below 2^64, strong probable-prime above.
pub fn is_prime(n: &BigInt) -> bool {
    if n.sign() != Sign::Plus {
        return false;
    }
    match n.to_u64() {
        Some(v) => num_prime::nt_funcs::is_prime64(v),
        None => num_prime::nt_funcs::is_prime(n.magnitude(), None).probably(),
    }
}

pub fn is_prime_u64(n: u64) -> bool {
    num_prime::nt_funcs::is_prime64(n)
}

fn require_prime(p: &BigInt) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NonPrimeModulus(p.to_string()))
    }
}

/// v_p(n), with v_p(0) = ∞.
pub fn padic_valuation(n: &BigInt, p: &BigInt) -> Result<ExtNat> {
    require_prime(p)?;
    Ok(valuation(n, p))
}

/// v_p(n) without checking that `p` is prime.
pub(crate) fn valuation(n: &BigInt, p: &BigInt) -> ExtNat {
    if n.is_zero() {
        return ExtNat::Infinity;
    }
    if let (Some(a), Some(q)) = (n.magnitude().to_u128(), p.to_u64()) {
        return ExtNat::Finite(valuation_u128(a, q as u128));
    }
    let mut m = n.magnitude().clone();
    let q = p.magnitude();
    let mut e = 0;
    loop {
        let (quo, rem) = m.div_rem(q);
        if !rem.is_zero() {
            break;
        }
        m = quo;
        e += 1;
    }
    ExtNat::Finite(e)
}

pub(crate) fn valuation_u128(mut a: u128, p: u128) -> u64 {
    debug_assert!(a != 0);
    let mut e = 0;
    while a.is_multiple_of(p) {
        a /= p;
        e += 1;
    }
    e
}

/// Signed prime factorization of a nonzero integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub sign: i8,
    pub factors: BTreeMap<BigInt, u32>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = &BigInt> {
        self.factors.keys()
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> + '_ {
        self.factors.values().copied()
    }

    /// sign · ∏ p^e
    pub fn value(&self) -> BigInt {
        let mut v = BigInt::from(self.sign);
        for (p, &e) in &self.factors {
            v *= num_traits::pow(p.clone(), e as usize);
        }
        v
    }
}

/// Factor a nonzero integer: trial division by primes below
/// [`TRIAL_DIVISION_BOUND`], then primality testing and Pollard-style
/// splitting of whatever cofactor remains.
pub fn factorize(n: &BigInt) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let sign = if n.is_negative() { -1 } else { 1 };
    let mut factors: BTreeMap<BigInt, u32> = BTreeMap::new();
    let mut rest: BigUint = n.magnitude().clone();

    for &q in SMALL_PRIMES.iter() {
        if rest.is_one() {
            break;
        }
        let q_big = BigUint::from(q);
        if &q_big * &q_big > rest {
            break;
        }
        if let Some(small) = rest.to_u128() {
            let q = q as u128;
            if small % q == 0 {
                let mut s = small;
                let mut e = 0;
                while s % q == 0 {
                    s /= q;
                    e += 1;
                }
                factors.insert(BigInt::from(q), e);
                rest = BigUint::from(s);
            }
            continue;
        }
        let mut e = 0;
        loop {
            let (quo, rem) = rest.div_rem(&q_big);
            if !rem.is_zero() {
                break;
            }
            rest = quo;
            e += 1;
        }
        if e > 0 {
            factors.insert(BigInt::from(q), e);
        }
    }

    if !rest.is_one() {
        let bound = BigUint::from(TRIAL_DIVISION_BOUND);
        if rest < &bound * &bound || is_prime(&BigInt::from(rest.clone())) {
            *factors.entry(BigInt::from(rest)).or_insert(0) += 1;
        } else {
            for (p, e) in num_prime::nt_funcs::factorize(rest) {
                *factors.entry(BigInt::from(p)).or_insert(0) += e as u32;
            }
        }
    }
    Ok(Factorization { sign, factors })
}

/// Distinct primes dividing a nonzero integer.
pub fn prime_divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    Ok(factorize(n)?.factors.into_keys().collect())
}

fn require_m(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::NonPositive("0".into()))
    } else {
        Ok(())
    }
}

/// True iff p^m | n whenever p | n.
pub fn is_m_full(n: &BigInt, m: u64) -> Result<bool> {
    require_m(m)?;
    let f = factorize(n)?;
    let full = f.exponents().all(|e| e as u64 >= m);
    Ok(full)
}

/// True iff n = ±k^m for some integer k (units of Z are ±1).
pub fn is_m_power_up_to_unit(n: &BigInt, m: u64) -> Result<bool> {
    require_m(m)?;
    let f = factorize(n)?;
    let power = f.exponents().all(|e| (e as u64).is_multiple_of(m));
    Ok(power)
}

fn require_positive(n: &BigInt) -> Result<()> {
    if n.is_positive() {
        Ok(())
    } else {
        Err(Error::NonPositive(n.to_string()))
    }
}

/// Möbius function μ(n) for n ≥ 1.
pub fn mobius(n: &BigInt) -> Result<i8> {
    require_positive(n)?;
    if n.is_one() {
        return Ok(1);
    }
    let f = factorize(n)?;
    if f.exponents().any(|e| e > 1) {
        return Ok(0);
    }
    Ok(if f.factors.len() % 2 == 0 { 1 } else { -1 })
}

/// Euler's totient φ(n) for n ≥ 1.
pub fn euler_phi(n: &BigInt) -> Result<BigInt> {
    require_positive(n)?;
    let f = factorize(n)?;
    let mut phi = BigInt::one();
    for (p, &e) in &f.factors {
        phi *= num_traits::pow(p.clone(), e as usize - 1) * (p - 1u32);
    }
    Ok(phi)
}

/// Number of positive divisors τ(n) for n ≥ 1.
pub fn tau(n: &BigInt) -> Result<BigInt> {
    require_positive(n)?;
    let f = factorize(n)?;
    Ok(f.exponents().map(|e| BigInt::from(e + 1)).product())
}

/// Legendre symbol (a/p) for an odd prime p.
pub fn legendre(a: &BigInt, p: &BigInt) -> Result<i8> {
    if p.is_even() {
        return Err(Error::EvenModulus(p.to_string()));
    }
    require_prime(p)?;
    Ok(jacobi_unchecked(a, p))
}

/// Jacobi symbol (a/n) for odd n ≥ 1.
pub fn jacobi(a: &BigInt, n: &BigInt) -> Result<i8> {
    if n.is_even() {
        return Err(Error::EvenModulus(n.to_string()));
    }
    require_positive(n)?;
    Ok(jacobi_unchecked(a, n))
}

pub(crate) fn jacobi_unchecked(a: &BigInt, n: &BigInt) -> i8 {
    if let Some(nn) = n.to_u64() {
        let r = a.mod_floor(n).to_u64().expect("residue fits");
        return jacobi_u64(r, nn);
    }
    let mut n = n.magnitude().clone();
    let mut a = a.mod_floor(&BigInt::from(n.clone())).magnitude().clone();
    let mut result = 1i8;
    let eight = BigUint::from(8u32);
    let four = BigUint::from(4u32);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = (&n % &eight).to_u32().unwrap();
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % &four).to_u32() == Some(3) && (&n % &four).to_u32() == Some(3) {
            result = -result;
        }
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Jacobi symbol on machine words; `n` must be odd.
pub fn jacobi_u64(a: u64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a % n;
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Square root of a quadratic residue modulo an odd prime (Tonelli–Shanks).
pub(crate) fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if jacobi_u64(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| jacobi_u64(z, p) == -1)?;
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Modular inverse of a unit modulo m (m ≥ 2).
pub(crate) fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (g, x, _) = ext_gcd(a as i128 % m as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(padic_valuation(&b(0), &b(5)).unwrap(), ExtNat::Infinity);
        assert_eq!(padic_valuation(&b(4), &b(2)).unwrap(), ExtNat::Finite(2));
        assert_eq!(padic_valuation(&b(360), &b(3)).unwrap(), ExtNat::Finite(2));
        assert_eq!(padic_valuation(&b(7), &b(4)), Err(Error::NonPrimeModulus("4".into())));
    }

    #[test]
    fn valuation_of_large_powers() {
        let n = num_traits::pow(b(5), 200) * b(3);
        assert_eq!(padic_valuation(&n, &b(5)).unwrap(), ExtNat::Finite(200));
        assert_eq!(padic_valuation(&-n, &b(3)).unwrap(), ExtNat::Finite(1));
    }

    #[test]
    fn ext_nat_order_and_sum() {
        assert!(ExtNat::Infinity > ExtNat::Finite(u64::MAX));
        assert_eq!(ExtNat::Finite(2) + ExtNat::Finite(3), ExtNat::Finite(5));
        assert_eq!(ExtNat::Finite(2) + ExtNat::Infinity, ExtNat::Infinity);
        let json = serde_json::to_string(&vec![ExtNat::Finite(3), ExtNat::Infinity]).unwrap();
        assert_eq!(json, "[3,\"inf\"]");
        let back: Vec<ExtNat> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![ExtNat::Finite(3), ExtNat::Infinity]);
    }

    #[test]
    fn power_fullness_examples() {
        assert!(is_m_full(&b(8), 3).unwrap());
        assert!(!is_m_full(&b(12), 2).unwrap());
        assert!(is_m_full(&b(-97), 1).unwrap());
        assert_eq!(is_m_full(&b(0), 2), Err(Error::ZeroInput));
        assert!(is_m_power_up_to_unit(&b(16), 4).unwrap());
        assert!(is_m_power_up_to_unit(&b(-27), 3).unwrap());
        assert!(!is_m_power_up_to_unit(&b(12), 2).unwrap());
        assert_eq!(is_m_power_up_to_unit(&b(0), 2), Err(Error::ZeroInput));
    }

    #[test]
    fn multiplicative_function_examples() {
        assert_eq!(mobius(&b(1)).unwrap(), 1);
        assert_eq!(mobius(&b(6)).unwrap(), 1);
        assert_eq!(mobius(&b(12)).unwrap(), 0);
        assert_eq!(mobius(&b(30)).unwrap(), -1);
        assert_eq!(euler_phi(&b(40)).unwrap(), b(16));
        assert_eq!(euler_phi(&b(1)).unwrap(), b(1));
        assert_eq!(tau(&b(12)).unwrap(), b(6));
        assert!(mobius(&b(0)).is_err());
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(legendre(&b(2), &b(5)).unwrap(), -1);
        assert_eq!(legendre(&b(4), &b(7)).unwrap(), 1);
        assert_eq!(legendre(&b(14), &b(7)).unwrap(), 0);
        assert_eq!(jacobi(&b(5), &b(9)).unwrap(), 1);
        assert_eq!(legendre(&b(3), &b(8)), Err(Error::EvenModulus("8".into())));
        assert_eq!(legendre(&b(3), &b(9)), Err(Error::NonPrimeModulus("9".into())));
        assert_eq!(jacobi(&b(3), &b(10)), Err(Error::EvenModulus("10".into())));
    }

    #[test]
    fn big_jacobi_matches_word_jacobi() {
        let n = BigInt::parse_bytes(b"170141183460469231731687303715884105727", 10).unwrap();
        for a in [-7i64, 2, 3, 10, 12345] {
            let fast = jacobi_unchecked(&b(a), &n);
            let slow = {
                // Euler's criterion on a Mersenne prime.
                let e = (&n - 1u32) / 2u32;
                let r = b(a).mod_floor(&n).modpow(&e, &n);
                if r.is_one() { 1 } else { -1 }
            };
            assert_eq!(fast, slow, "a = {a}");
        }
    }

    #[test]
    fn factorization_round_trips() {
        let n = b(2).pow(5) * b(999_983) * b(1_000_003) * b(-1);
        let f = factorize(&n).unwrap();
        assert_eq!(f.value(), n);
        assert_eq!(f.factors.len(), 3);
        let big = BigInt::parse_bytes(b"1000000000000000003", 10).unwrap() * b(1_000_000_007);
        let f = factorize(&big).unwrap();
        assert_eq!(f.value(), big);
        assert!(f.primes().all(is_prime));
    }

    #[test]
    fn sqrt_mod_prime_roots() {
        for p in [3u64, 5, 13, 17, 97, 10007] {
            for a in 0..p.min(200) {
                if let Some(r) = sqrt_mod_prime(a, p) {
                    assert_eq!(mul_mod(r, r, p), a % p);
                } else {
                    assert_eq!(jacobi_u64(a, p), -1);
                }
            }
        }
    }
}
