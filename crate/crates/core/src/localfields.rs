//! Local arithmetic at a place of Q: Hilbert symbols, isotropy of diagonal
//! forms, and residue-class search for primitive Z_p-points with Hensel
//! certificates.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{self, jacobi_unchecked, ExtNat};
use crate::error::{Error, Result};
use crate::poly::{ModPoly, Poly};

/// A place of Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    Finite(u64),
}

impl Place {
    pub fn finite(p: u64) -> Result<Place> {
        if arith::is_prime_u64(p) {
            Ok(Place::Finite(p))
        } else {
            Err(Error::NonPrimeModulus(p.to_string()))
        }
    }

    pub fn prime(self) -> Option<u64> {
        match self {
            Place::Finite(p) => Some(p),
            Place::Real => None,
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "real"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Place> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" | "inf" | "infinity" | "r" => Ok(Place::Real),
            other => {
                let p: u64 = other.parse().map_err(|_| Error::Parse(format!("bad place {s:?}")))?;
                Place::finite(p)
            }
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Place::Real => s.serialize_str("real"),
            Place::Finite(p) => s.serialize_u64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .ok_or_else(|| serde::de::Error::custom("bad prime"))
                .and_then(|p| Place::finite(p).map_err(serde::de::Error::custom)),
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("expected \"real\" or a prime")),
        }
    }
}

/// Collapse a nonzero rational n/d to the integer n·d of the same square class.
fn square_class_integer(a: &BigRational) -> BigInt {
    a.numer() * a.denom()
}

/// Hilbert symbol (a, b)_v of nonzero rationals.
pub fn hilbert_symbol(a: &BigRational, b: &BigRational, v: Place) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroArgument);
    }
    Ok(hilbert_int(&square_class_integer(a), &square_class_integer(b), v))
}

/// Hilbert symbol of nonzero integers.
pub fn hilbert_symbol_int(a: &BigInt, b: &BigInt, v: Place) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroArgument);
    }
    Ok(hilbert_int(a, b, v))
}

/// Split n = p^e · u with u a p-adic unit.
fn split_unit(n: &BigInt, p: u64) -> (u64, BigInt) {
    let pb = BigInt::from(p);
    let mut u = n.clone();
    let mut e = 0;
    loop {
        let (q, r) = u.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        u = q;
        e += 1;
    }
    (e, u)
}

pub(crate) fn hilbert_int(a: &BigInt, b: &BigInt, v: Place) -> i8 {
    match v {
        Place::Real => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Finite(2) => {
            let (alpha, u) = split_unit(a, 2);
            let (beta, w) = split_unit(b, 2);
            let u8_ = u.mod_floor(&BigInt::from(8)).to_u64().unwrap();
            let w8 = w.mod_floor(&BigInt::from(8)).to_u64().unwrap();
            let eps = |x: u64| ((x - 1) / 2) % 2;
            let omega = |x: u64| ((x * x - 1) / 8) % 2;
            let e = eps(u8_) * eps(w8) + alpha * omega(w8) + beta * omega(u8_);
            if e % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Place::Finite(p) => {
            let (alpha, u) = split_unit(a, p);
            let (beta, w) = split_unit(b, p);
            let pb = BigInt::from(p);
            let mut s = 1i8;
            if alpha % 2 == 1 && beta % 2 == 1 && p % 4 == 3 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= jacobi_unchecked(&u, &pb);
            }
            if alpha % 2 == 1 {
                s *= jacobi_unchecked(&w, &pb);
            }
            s
        }
    }
}

/// Whether a nonzero integer is a square in the completion at v.
pub fn is_local_square(d: &BigInt, v: Place) -> bool {
    if d.is_zero() {
        return true;
    }
    match v {
        Place::Real => d.is_positive(),
        Place::Finite(p) => {
            let (e, u) = split_unit(d, p);
            if e % 2 == 1 {
                return false;
            }
            if p == 2 {
                u.mod_floor(&BigInt::from(8)) == BigInt::one()
            } else {
                jacobi_unchecked(&u, &BigInt::from(p)) == 1
            }
        }
    }
}

/// Whether the diagonal form Σ a_i x_i² has a nontrivial zero at v (rank 3 or 4).
pub fn is_isotropic_local(form: &[BigInt], v: Place) -> Result<bool> {
    if form.iter().any(|a| a.is_zero()) {
        return Err(Error::ZeroArgument);
    }
    match form.len() {
        3 => {
            let (a, b, c) = (&form[0], &form[1], &form[2]);
            Ok(hilbert_int(&-(a * c), &-(b * c), v) == 1)
        }
        4 => {
            let disc: BigInt = form.iter().product();
            if !is_local_square(&disc, v) {
                return Ok(true);
            }
            let mut hasse = 1i8;
            for i in 0..4 {
                for j in i + 1..4 {
                    hasse *= hilbert_int(&form[i], &form[j], v);
                }
            }
            let minus_one = BigInt::from(-1);
            Ok(hasse == hilbert_int(&minus_one, &minus_one, v))
        }
        r => Err(Error::UnsupportedRank(r)),
    }
}

/// Whether Σ a_i x_i² = target has a real solution.
pub fn real_points_exist(form: &[BigInt], target: &BigInt) -> bool {
    if target.is_zero() {
        return true;
    }
    if target.is_positive() {
        form.iter().any(|a| a.is_positive())
    } else {
        form.iter().any(|a| a.is_negative())
    }
}

/// A primitive residue solution modulo p^k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueClassSolution {
    pub modulus_exponent: u32,
    pub prime: u64,
    pub coords: Vec<u64>,
    pub primitive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselCertificate {
    pub solution: ResidueClassSolution,
    /// Coordinate whose partial derivative has valuation `derivative_valuation`.
    pub variable: usize,
    pub derivative_valuation: u32,
    pub witness_precision: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolubilityVerdict {
    Yes { certificate: HenselCertificate },
    /// `tree_exhausted` is true when no residue class survived; false when the
    /// surviving classes were ruled out by the quadric derivative bound.
    No { exhaustion_precision: u32, tree_exhausted: bool },
    Inconclusive { depth_reached: u32 },
}

impl SolubilityVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, SolubilityVerdict::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, SolubilityVerdict::No { .. })
    }
}

/// Largest number of live residue classes carried between levels.
pub const CLASS_BUDGET: usize = 4_000_000;

/// Default refinement depth when no certified bound applies.
pub const DEFAULT_MAX_DEPTH: u32 = 12;

/// A residue class of primitive points: coordinate `chart` is 1, earlier
/// coordinates are divisible by p, every coordinate is known mod p^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct ResidueClass {
    pub chart: usize,
    pub k: u32,
    pub coords: Vec<u64>,
}

pub(crate) fn checked_prime_power(p: u64, k: u32) -> Result<u64> {
    p.checked_pow(k)
        .filter(|&q| q < (1u64 << 63))
        .ok_or_else(|| Error::PrecisionOverflow(format!("{p}^{k}")))
}

/// p-adic valuation of a residue mod p^k; returns k for 0.
pub(crate) fn residue_valuation(r: u64, p: u64, k: u32) -> u32 {
    if r == 0 {
        return k;
    }
    let mut r = r;
    let mut e = 0;
    while r.is_multiple_of(p) {
        r /= p;
        e += 1;
    }
    e.min(k)
}

/// Breadth-first residue search for primitive zeros of a homogeneous form,
/// optionally restricted to points where given forms are p-adic units.
pub(crate) struct ResidueSearch {
    pub p: u64,
    pub f: Poly,
    grad: Vec<Poly>,
    units: Vec<Poly>,
    n: usize,
}

impl ResidueSearch {
    pub fn new(f: &Poly, units: &[Poly], p: u64) -> Result<Self> {
        if !arith::is_prime_u64(p) {
            return Err(Error::NonPrimeModulus(p.to_string()));
        }
        if f.is_zero() || !f.is_homogeneous() {
            return Err(Error::InvalidModel("search target must be a nonzero homogeneous form".into()));
        }
        Ok(ResidueSearch { p, f: f.clone(), grad: f.gradient(), units: units.to_vec(), n: f.nvars() })
    }

    fn units_ok(&self, coords: &[u64], p_mod: &[ModPoly]) -> bool {
        p_mod.iter().all(|g| g.eval(coords) % self.p != 0)
    }

    /// All primitive classes mod p with f ≡ 0.
    pub fn depth_one(&self) -> Vec<ResidueClass> {
        let p = self.p;
        let n = self.n;
        let units_mod: Vec<ModPoly> = self.units.iter().map(|g| g.reduce_mod(p)).collect();
        let f_mod = self.f.reduce_mod(p);
        let mut out = Vec::new();
        for chart in 0..n {
            if chart == n - 1 {
                let mut c = vec![0u64; n];
                c[chart] = 1;
                if f_mod.eval(&c) == 0 && self.units_ok(&c, &units_mod) {
                    out.push(ResidueClass { chart, k: 1, coords: c });
                }
                continue;
            }
            let solve = n - 1;
            let coeffs: Vec<ModPoly> = self.f.coefficients_in(solve).iter().map(|c| c.reduce_mod(p)).collect();
            let enum_vars: Vec<usize> = (chart + 1..solve).collect();
            let total = (p as u128).pow(enum_vars.len() as u32);
            let chunk: Vec<Vec<ResidueClass>> = (0..total)
                .into_par_iter()
                .map(|mut idx| {
                    let mut c = vec![0u64; n];
                    c[chart] = 1;
                    for &v in &enum_vars {
                        c[v] = (idx % p as u128) as u64;
                        idx /= p as u128;
                    }
                    let uni: Vec<u64> = coeffs.iter().map(|m| m.eval(&c)).collect();
                    let mut found = Vec::new();
                    for root in roots_mod_prime(&uni, p) {
                        let mut cc = c.clone();
                        cc[solve] = root;
                        if self.units_ok(&cc, &units_mod) {
                            found.push(ResidueClass { chart, k: 1, coords: cc });
                        }
                    }
                    found
                })
                .collect();
            out.extend(chunk.into_iter().flatten());
        }
        out
    }

    /// Live children at precision k+1 of a live class at precision k.
    pub fn children(&self, class: &ResidueClass) -> Result<Vec<ResidueClass>> {
        let p = self.p;
        let k = class.k;
        let pk = checked_prime_power(p, k)?;
        let pk1 = checked_prime_power(p, k + 1)?;
        let f_val = self.f.reduce_mod(pk1).eval(&class.coords);
        if !f_val.is_multiple_of(pk) {
            return Ok(Vec::new());
        }
        let c0 = f_val / pk;
        let free: Vec<usize> = (0..self.n).filter(|&i| i != class.chart).collect();
        let g: Vec<u64> = free.iter().map(|&i| self.grad[i].reduce_mod(p).eval(&class.coords)).collect();
        let mut out = Vec::new();
        let lift = |ys: &[u64]| {
            let mut c = class.coords.clone();
            for (&i, &y) in free.iter().zip(ys) {
                c[i] = (c[i] + (y as u128 * pk as u128 % pk1 as u128) as u64) % pk1;
            }
            ResidueClass { chart: class.chart, k: k + 1, coords: c }
        };
        let pivot = g.iter().rposition(|&x| x != 0);
        let m = free.len();
        match pivot {
            None => {
                if c0 != 0 {
                    return Ok(out);
                }
                let total = (p as u128).pow(m as u32);
                for mut idx in 0..total {
                    let mut ys = vec![0u64; m];
                    for y in ys.iter_mut() {
                        *y = (idx % p as u128) as u64;
                        idx /= p as u128;
                    }
                    out.push(lift(&ys));
                }
            }
            Some(piv) => {
                let inv = arith::inv_mod(g[piv], p).expect("nonzero mod prime");
                let total = (p as u128).pow(m as u32 - 1);
                for mut idx in 0..total {
                    let mut ys = vec![0u64; m];
                    let mut acc = c0 as u128;
                    for (j, y) in ys.iter_mut().enumerate() {
                        if j == piv {
                            continue;
                        }
                        *y = (idx % p as u128) as u64;
                        idx /= p as u128;
                        acc += g[j] as u128 * *y as u128;
                    }
                    let acc = (acc % p as u128) as u64;
                    ys[piv] = arith::mul_mod((p - acc) % p, inv, p);
                    out.push(lift(&ys));
                }
            }
        }
        Ok(out)
    }

    /// Smallest determined valuation of a free partial derivative, with its
    /// coordinate, when that valuation is below k.
    pub fn derivative_valuation(&self, class: &ResidueClass) -> Result<Option<(usize, u32)>> {
        let pk = checked_prime_power(self.p, class.k)?;
        let mut best: Option<(usize, u32)> = None;
        for i in (0..self.n).filter(|&i| i != class.chart) {
            let r = self.grad[i].reduce_mod(pk).eval(&class.coords);
            let e = residue_valuation(r, self.p, class.k);
            if e < class.k && best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
        Ok(best)
    }

    /// A Hensel certificate for the class, if the derivative bound is met.
    pub fn certificate(&self, class: &ResidueClass) -> Result<Option<HenselCertificate>> {
        Ok(self.derivative_valuation(class)?.and_then(|(var, e)| {
            (2 * e < class.k).then(|| HenselCertificate {
                solution: ResidueClassSolution {
                    modulus_exponent: class.k,
                    prime: self.p,
                    coords: class.coords.clone(),
                    primitive: true,
                },
                variable: var,
                derivative_valuation: e,
                witness_precision: class.k,
            })
        }))
    }
}

/// Roots in F_p of Σ c_i x^i (all of F_p if the polynomial vanishes identically).
pub(crate) fn roots_mod_prime(c: &[u64], p: u64) -> Vec<u64> {
    let deg = c.iter().rposition(|&x| x != 0);
    match deg {
        None => (0..p).collect(),
        Some(0) => Vec::new(),
        Some(1) => {
            let inv = arith::inv_mod(c[1], p).unwrap();
            vec![arith::mul_mod((p - c[0]) % p, inv, p)]
        }
        Some(2) if p > 2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (arith::mul_mod(b, b, p) + p - arith::mul_mod(4 % p, arith::mul_mod(a, cc, p), p)) % p;
            match arith::sqrt_mod_prime(disc, p) {
                None => Vec::new(),
                Some(s) => {
                    let inv2a = arith::inv_mod(arith::mul_mod(2, a, p), p).unwrap();
                    let r1 = arith::mul_mod((p - b + s) % p, inv2a, p);
                    let r2 = arith::mul_mod((2 * p - b - s) % p, inv2a, p);
                    if r1 == r2 {
                        vec![r1]
                    } else {
                        let mut v = vec![r1, r2];
                        v.sort_unstable();
                        v
                    }
                }
            }
        }
        Some(_) => (0..p)
            .filter(|&x| {
                let mut acc = 0u64;
                for &ci in c.iter().rev() {
                    acc = (arith::mul_mod(acc, x, p) + ci) % p;
                }
                acc == 0
            })
            .collect(),
    }
}

/// Refinement depth beyond which an uncertified quadric class cannot contain a
/// primitive zero; `None` for non-quadrics or degenerate quadrics.
pub fn quadric_exhaustion_bound(f: &Poly, p: u64) -> Option<u32> {
    if f.degree() != 2 || !f.is_homogeneous() {
        return None;
    }
    let n = f.nvars();
    let mut h = vec![vec![BigInt::zero(); n]; n];
    let mut integral_gram = true;
    for (e, c) in f.terms() {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect();
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            h[i][i] = c * 2;
        } else {
            h[i][j] = c.clone();
            h[j][i] = c.clone();
            if c.is_odd() {
                integral_gram = false;
            }
        }
    }
    let det = bareiss_det(h);
    if det.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut e = arith::valuation(&det, &pb).finite()?;
    if integral_gram && p == 2 {
        e -= (n as u64) - 1;
    }
    Some(2 * e as u32 + 2)
}

pub(crate) fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Decide whether a homogeneous form has a primitive Z_p-zero.
pub fn zp_points_on_hypersurface(f: &Poly, p: u64, max_depth: u32) -> Result<SolubilityVerdict> {
    zp_points_with_units(f, &[], p, max_depth)
}

/// As [`zp_points_on_hypersurface`], restricted to points at which every form
/// in `units` takes a p-adic unit value (points off a divisor, say).
pub fn zp_points_with_units(f: &Poly, units: &[Poly], p: u64, max_depth: u32) -> Result<SolubilityVerdict> {
    let search = ResidueSearch::new(f, units, p)?;
    let bound = quadric_exhaustion_bound(f, p);
    let mut level = search.depth_one();
    let mut k = 1;
    loop {
        for class in &level {
            if let Some(certificate) = search.certificate(class)? {
                return Ok(SolubilityVerdict::Yes { certificate });
            }
        }
        if level.is_empty() {
            return Ok(SolubilityVerdict::No { exhaustion_precision: k, tree_exhausted: true });
        }
        if let Some(b) = bound {
            if k >= b {
                return Ok(SolubilityVerdict::No { exhaustion_precision: k, tree_exhausted: false });
            }
        }
        if k >= max_depth {
            return Ok(SolubilityVerdict::Inconclusive { depth_reached: k });
        }
        let next: Result<Vec<Vec<ResidueClass>>> = level.par_iter().map(|c| search.children(c)).collect();
        level = next?.into_iter().flatten().collect();
        if level.len() > CLASS_BUDGET {
            log::warn!("residue search at p = {p} exceeded the class budget at depth {}", k + 1);
            return Ok(SolubilityVerdict::Inconclusive { depth_reached: k });
        }
        k += 1;
    }
}

/// Newton-lift a certified residue solution to an integer vector x with
/// f(x) ≡ 0 mod p^precision and x congruent to the certificate's coordinates
/// modulo p^(e+1).
pub fn lift_certificate(f: &Poly, cert: &HenselCertificate, precision: u32) -> Vec<BigInt> {
    let p = BigInt::from(cert.solution.prime);
    let x: Vec<BigInt> = cert.solution.coords.iter().map(|&c| BigInt::from(c)).collect();
    newton_lift(f, x, cert.variable, &p, precision).expect("certificate satisfies the lifting hypothesis")
}

/// Newton iteration in coordinate `var`. Requires v(f(x)) > 2·v(∂f(x)).
pub fn newton_lift(f: &Poly, mut x: Vec<BigInt>, var: usize, p: &BigInt, precision: u32) -> Option<Vec<BigInt>> {
    let df = f.partial(var);
    let e = arith::valuation(&df.eval(&x), p).finite()? as u32;
    let target = precision.max(2 * e + 1);
    let modulus = num_traits::pow(p.clone(), (target + e + 1) as usize);
    loop {
        let fx = f.eval(&x);
        let v = arith::valuation(&fx, p);
        if v >= ExtNat::Finite(target as u64) {
            for c in x.iter_mut() {
                *c = c.mod_floor(&modulus);
            }
            return Some(x);
        }
        if v <= ExtNat::Finite(2 * e as u64) {
            return None;
        }
        let dfx = df.eval(&x);
        if arith::valuation(&dfx, p) != ExtNat::Finite(e as u64) {
            return None;
        }
        let pe = num_traits::pow(p.clone(), e as usize);
        let u = &dfx / &pe;
        let w = &fx / &pe;
        let inv = mod_inverse(&u, &modulus)?;
        let step = (w * inv).mod_floor(&modulus);
        x[var] = (&x[var] - step).mod_floor(&modulus);
    }
}

pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else if (-&g.gcd).is_one() {
        Some((-g.x).mod_floor(m))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse, vars};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn hilbert_examples() {
        assert_eq!(hilbert_symbol(&q(1), &q(7), Place::Finite(3)).unwrap(), 1);
        assert_eq!(hilbert_symbol(&q(2), &q(5), Place::Finite(5)).unwrap(), -1);
        assert_eq!(hilbert_symbol(&q(-1), &q(-1), Place::Real).unwrap(), -1);
        assert_eq!(hilbert_symbol(&q(3), &q(-1), Place::Finite(3)).unwrap(), -1);
        assert_eq!(hilbert_symbol(&q(-1), &q(-1), Place::Finite(2)).unwrap(), -1);
        assert_eq!(hilbert_symbol(&q(0), &q(5), Place::Real), Err(Error::ZeroArgument));
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(hilbert_symbol(&half, &q(5), Place::Finite(5)).unwrap(), -1);
    }

    #[test]
    fn isotropy_examples() {
        assert!(is_isotropic_local(&ints(&[1, 1, -1]), Place::Finite(7)).unwrap());
        assert!(!is_isotropic_local(&ints(&[1, 1, 1]), Place::Real).unwrap());
        assert!(!is_isotropic_local(&ints(&[1, 1, 1, 1]), Place::Real).unwrap());
        assert!(is_isotropic_local(&ints(&[1, 1, -1, -1]), Place::Real).unwrap());
        // norm form of the quaternions is anisotropic at 2
        assert!(!is_isotropic_local(&ints(&[1, 1, 1, 1]), Place::Finite(2)).unwrap());
        assert_eq!(is_isotropic_local(&ints(&[1, 1]), Place::Real), Err(Error::UnsupportedRank(2)));
    }

    #[test]
    fn real_solubility() {
        assert!(!real_points_exist(&ints(&[1, 1, 1]), &BigInt::from(-1)));
        assert!(real_points_exist(&ints(&[1, -1, 1]), &BigInt::from(-9)));
        assert!(real_points_exist(&ints(&[5, -25, 16]), &BigInt::from(1)));
    }

    #[test]
    fn place_parsing() {
        assert_eq!("real".parse::<Place>().unwrap(), Place::Real);
        assert_eq!("7".parse::<Place>().unwrap(), Place::Finite(7));
        assert!("9".parse::<Place>().is_err());
        assert_eq!(serde_json::to_string(&Place::Finite(5)).unwrap(), "5");
    }

    #[test]
    fn intro_quadric_points_off_t() {
        let v = vars(&["x", "y", "z", "t"]);
        let f = parse("3(x-y)(x+y) - (t-4z)(t+4z)", &v).unwrap();
        let t = parse("t", &v).unwrap();
        // [2:3:1:1] is an integral point with t = 1, so a 2-adic one exists too
        assert_eq!(f.eval_i64(&[2, 3, 1, 1]), BigInt::zero());
        match zp_points_with_units(&f, std::slice::from_ref(&t), 2, 20).unwrap() {
            SolubilityVerdict::Yes { certificate } => {
                let x = lift_certificate(&f, &certificate, 30);
                assert!(arith::valuation(&f.eval(&x), &BigInt::from(2)) >= ExtNat::Finite(30));
                assert!(t.eval(&x).is_odd());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anisotropic_forms_are_refuted() {
        let v = vars(&["x", "y", "z"]);
        let f = parse("x^2 + y^2 + z^2", &v).unwrap();
        assert!(zp_points_on_hypersurface(&f, 3, 12).unwrap().is_yes());
        assert!(zp_points_on_hypersurface(&f, 2, 12).unwrap().is_no());
        let g = parse("x^2 - 3y^2 - 7z^2", &v).unwrap();
        assert!(!is_isotropic_local(&ints(&[1, -3, -7]), Place::Finite(7)).unwrap());
        assert!(zp_points_on_hypersurface(&g, 7, 12).unwrap().is_no());
        let cubic = parse("x^3 + 2y^3 + 4z^3", &v).unwrap();
        assert!(zp_points_on_hypersurface(&cubic, 2, 12).unwrap().is_no());
    }

    #[test]
    fn trivial_conic_witness() {
        let v = vars(&["x", "y", "z"]);
        let f = parse("x^2 + y^2 - z^2", &v).unwrap();
        match zp_points_on_hypersurface(&f, 5, 12).unwrap() {
            SolubilityVerdict::Yes { certificate } => {
                let x = lift_certificate(&f, &certificate, 10);
                let fx = f.eval(&x);
                assert!(arith::valuation(&fx, &BigInt::from(5)) >= ExtNat::Finite(10));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roots_mod_prime_brute() {
        for p in [2u64, 3, 5, 7, 11] {
            for a in 0..p {
                for b in 0..p {
                    for c in 0..p {
                        let got = roots_mod_prime(&[c, b, a], p);
                        let want: Vec<u64> = (0..p).filter(|&x| (a * x * x + b * x + c) % p == 0).collect();
                        assert_eq!(got, want, "{a}x^2+{b}x+{c} mod {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn determinant() {
        let m = vec![ints(&[2, 0, 1]), ints(&[1, 3, 2]), ints(&[1, 1, 2])];
        assert_eq!(bareiss_det(m), BigInt::from(6));
        let m = vec![ints(&[0, 1]), ints(&[1, 0])];
        assert_eq!(bareiss_det(m), BigInt::from(-1));
    }
}
