#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn squarefree(n: i64) -> bool {
    let n = n.abs();
    let mut q = 2;
    while q * q <= n {
        if n % (q * q) == 0 {
            return false;
        }
        q += 1;
    }
    true
}

/// Whether z² = a x² + b y² has a nontrivial solution over Q_p, by searching
/// primitive solutions modulo p^k. After removing square factors p², every
/// primitive solution modulo p^k (k = 3, or 5 at p = 2) has a coordinate whose
/// partial derivative has valuation e with 2e + 1 ≤ k, so it lifts.
pub fn conic_soluble(a: i64, b: i64, p: i64) -> bool {
    let strip = |mut n: i64| {
        while n % (p * p) == 0 {
            n /= p * p;
        }
        n
    };
    let (a, b) = (strip(a), strip(b));
    let k = if p == 2 { 5 } else { 3 };
    let q = p.pow(k);
    let red = |n: i64| n.rem_euclid(q);
    let mut is_square = vec![false; q as usize];
    for z in 0..q {
        is_square[(z * z % q) as usize] = true;
    }
    // x a unit: scale x = 1
    for y in 0..q {
        if is_square[red(a + b * (y * y % q)) as usize] {
            return true;
        }
    }
    // p | x, y a unit: scale y = 1
    for x in (0..q).step_by(p as usize) {
        if is_square[red(a * (x * x % q) + b) as usize] {
            return true;
        }
    }
    // p | x, p | y forces p | z
    false
}

/// Members (a, b, c, d) with b, c, d > 0 and 5ab², 25ad², 16c² ≤ B, counted one by one.
pub fn naive_census(bound: i64) -> u64 {
    let mut n = 0;
    let mut a = 1;
    while 25 * a <= bound {
        if a % 40 == 1 && squarefree(a) {
            let mut b = 1;
            while 5 * a * b * b <= bound {
                let mut d = 1;
                while 25 * a * d * d <= bound {
                    let mut c = 1;
                    while 16 * c * c <= bound {
                        let ok = gcd(a, c) == 1
                            && gcd(b * d, 2 * c) == 1
                            && [a, b, c, d].iter().all(|x| x % 5 != 0);
                        if ok {
                            n += 1;
                        }
                        c += 1;
                    }
                    d += 1;
                }
                b += 1;
            }
        }
        a += 1;
    }
    n
}

/// Rational points on the diagonal quadric Σ cᵢxᵢ² = 0 through the lines from
/// a known point `base` in seeded random integer directions.
pub fn quadric_points(coeffs: &[i64], base: &[i64], count: usize, seed: u64, range: i64) -> Vec<Vec<BigInt>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<BigInt> = coeffs.iter().map(|&x| BigInt::from(x)).collect();
    let p0: Vec<BigInt> = base.iter().map(|&x| BigInt::from(x)).collect();
    let mut out = Vec::new();
    while out.len() < count {
        let v: Vec<BigInt> = (0..coeffs.len()).map(|_| BigInt::from(rng.gen_range(-range..=range))).collect();
        let q: BigInt = c.iter().zip(&v).map(|(ci, vi)| ci * vi * vi).sum();
        let b: BigInt = c.iter().zip(&p0).zip(&v).map(|((ci, pi), vi)| ci * pi * vi).sum();
        let pt: Vec<BigInt> = p0.iter().zip(&v).map(|(pi, vi)| &q * pi - BigInt::from(2) * &b * vi).collect();
        if pt.iter().all(|x| x.is_zero()) {
            continue;
        }
        let on: BigInt = c.iter().zip(&pt).map(|(ci, x)| ci * x * x).sum();
        assert!(on.is_zero());
        out.push(pt);
    }
    out
}
