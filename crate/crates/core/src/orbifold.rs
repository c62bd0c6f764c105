//! Orbifold models over Z, intersection multiplicities, semi-integral
//! classification of rational points, and bounded-height point search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{self, ExtNat};
use crate::error::{Error, Result};
use crate::poly::{bigint_to_json, Poly};

/// A point of P^n(Q) as a primitive integer vector whose first nonzero entry is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjPointQ {
    coords: Vec<BigInt>,
}

impl ProjPointQ {
    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// max |x_i|
    pub fn height(&self) -> BigInt {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or_default()
    }

    pub fn from_i64(raw: &[i64]) -> Result<Self> {
        normalize_point(&raw.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
    }
}

impl fmt::Display for ProjPointQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(":"))
    }
}

impl Serialize for ProjPointQ {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<serde_json::Value> = self.coords.iter().map(bigint_to_json).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjPointQ {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        let coords: Vec<BigInt> = raw
            .iter()
            .map(crate::poly::bigint_from_json)
            .collect::<Result<_>>()
            .map_err(serde::de::Error::custom)?;
        normalize_point(&coords).map_err(serde::de::Error::custom)
    }
}

/// Divide by the gcd and make the first nonzero coordinate positive.
pub fn normalize_point(raw: &[BigInt]) -> Result<ProjPointQ> {
    let g = raw.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if g.is_zero() {
        return Err(Error::ZeroVector);
    }
    let first_negative = raw.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
    let g = if first_negative { -g } else { g };
    Ok(ProjPointQ { coords: raw.iter().map(|c| c / &g).collect() })
}

/// Weight m_α ∈ Z_{≥1} ∪ {∞} of a divisor component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl Weight {
    pub fn new(m: u64) -> Result<Weight> {
        if m == 0 {
            Err(Error::NonPositive("0".into()))
        } else {
            Ok(Weight::Finite(m))
        }
    }

    /// Components of weight ≥ 2 (including ∞) make up the reduced divisor.
    pub fn in_support(self) -> bool {
        self != Weight::Finite(1)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(m) => write!(f, "{m}"),
            Weight::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(m) => s.serialize_u64(*m),
            Weight::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtNat::deserialize(d)? {
            ExtNat::Finite(m) => Weight::new(m).map_err(serde::de::Error::custom),
            ExtNat::Infinity => Ok(Weight::Infinite),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorComponent {
    pub form: Poly,
    pub weight: Weight,
}

/// A closed subscheme of P^n_Z cut out by content-1 forms, with a weighted
/// divisor given by content-1 forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbifoldModelZ {
    vars: Vec<String>,
    equations: Vec<Poly>,
    divisor: Vec<DivisorComponent>,
    excluded_places: BTreeSet<u64>,
}

fn check_form(f: &Poly, n: usize, what: &str) -> Result<()> {
    if f.nvars() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.nvars() });
    }
    if f.is_zero() {
        return Err(Error::InvalidModel(format!("{what} is zero")));
    }
    if !f.is_homogeneous() {
        return Err(Error::InvalidModel(format!("{what} is not homogeneous")));
    }
    if !f.content().is_one() {
        return Err(Error::InvalidModel(format!("{what} does not have content 1")));
    }
    Ok(())
}

fn proportional(f: &Poly, g: &Poly) -> bool {
    f.primitive_part() == g.primitive_part()
}

impl OrbifoldModelZ {
    pub fn new(
        vars: Vec<String>,
        equations: Vec<Poly>,
        divisor: Vec<DivisorComponent>,
        excluded_places: BTreeSet<u64>,
    ) -> Result<Self> {
        let n = vars.len();
        if n < 2 {
            return Err(Error::InvalidModel("ambient space needs at least two coordinates".into()));
        }
        for (i, e) in equations.iter().enumerate() {
            check_form(e, n, &format!("equation {i}"))?;
        }
        for (i, c) in divisor.iter().enumerate() {
            check_form(&c.form, n, &format!("divisor component {i}"))?;
            if let Weight::Finite(0) = c.weight {
                return Err(Error::InvalidModel("weights must be at least 1".into()));
            }
        }
        for i in 0..divisor.len() {
            for j in i + 1..divisor.len() {
                if proportional(&divisor[i].form, &divisor[j].form) {
                    return Err(Error::InvalidModel(format!("divisor components {i} and {j} are proportional")));
                }
            }
        }
        for &p in &excluded_places {
            if !arith::is_prime_u64(p) {
                return Err(Error::NonPrimeModulus(p.to_string()));
            }
        }
        Ok(OrbifoldModelZ { vars, equations, divisor, excluded_places })
    }

    /// Hypersurface with a single divisor component.
    pub fn hypersurface(vars: &[&str], equation: &str, divisor: &[(&str, Weight)]) -> Result<Self> {
        let v = crate::poly::vars(vars);
        let eqs = if equation.trim().is_empty() { vec![] } else { vec![crate::poly::parse(equation, &v)?] };
        let div = divisor
            .iter()
            .map(|(s, w)| Ok(DivisorComponent { form: crate::poly::parse(s, &v)?, weight: *w }))
            .collect::<Result<Vec<_>>>()?;
        OrbifoldModelZ::new(v, eqs, div, BTreeSet::new())
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn ambient_dim(&self) -> usize {
        self.vars.len() - 1
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn equations(&self) -> &[Poly] {
        &self.equations
    }

    pub fn divisor(&self) -> &[DivisorComponent] {
        &self.divisor
    }

    pub fn excluded_places(&self) -> &BTreeSet<u64> {
        &self.excluded_places
    }

    /// Copy of the model with every divisor weight replaced.
    pub fn with_weight(&self, weight: Weight) -> OrbifoldModelZ {
        let mut m = self.clone();
        for c in m.divisor.iter_mut() {
            c.weight = weight;
        }
        m
    }

    pub fn contains(&self, p: &ProjPointQ) -> Result<bool> {
        if p.len() != self.nvars() {
            return Err(Error::DimensionMismatch { expected: self.nvars(), got: p.len() });
        }
        Ok(self.equations.iter().all(|e| e.eval(p.coords()).is_zero()))
    }

    fn require_on_ambient(&self, p: &ProjPointQ) -> Result<()> {
        if self.contains(p)? {
            Ok(())
        } else {
            Err(Error::PointNotOnAmbient)
        }
    }
}

/// v_p(f(P)) at primitive coordinates; ∞ iff P lies on Z(f).
pub fn intersection_multiplicity(point: &ProjPointQ, f: &Poly, p: &BigInt) -> Result<ExtNat> {
    if f.nvars() != point.len() {
        return Err(Error::DimensionMismatch { expected: f.nvars(), got: point.len() });
    }
    arith::padic_valuation(&f.eval(point.coords()), p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalClassification {
    pub prime: u64,
    pub multiplicities: Vec<ExtNat>,
    pub on_divisor_inf: bool,
    pub strict: bool,
    pub integral: bool,
    pub darmon: bool,
    pub campana: bool,
    pub weak_campana: bool,
}

/// Flags from the multiplicities at one prime (or the symbolic generic prime).
fn flags_from(prime: u64, mult: Vec<ExtNat>, divisor: &[DivisorComponent]) -> LocalClassification {
    let strict = divisor.iter().zip(&mult).all(|(c, n)| !c.weight.in_support() || !n.is_infinite());
    let meets_inf = divisor.iter().zip(&mult).any(|(c, n)| c.weight == Weight::Infinite && !n.is_zero());
    if meets_inf {
        return LocalClassification {
            prime,
            multiplicities: mult,
            on_divisor_inf: true,
            strict,
            integral: false,
            darmon: false,
            campana: false,
            weak_campana: false,
        };
    }
    let mut integral = true;
    let mut darmon = true;
    let mut campana = true;
    let mut weak_sum = BigRational::zero();
    let mut weak_inf = false;
    for (c, n) in divisor.iter().zip(&mult) {
        let m = match c.weight {
            Weight::Finite(m) => m,
            Weight::Infinite => continue,
        };
        match n {
            ExtNat::Infinity => {
                weak_inf = true;
                if m >= 2 {
                    integral = false;
                }
            }
            ExtNat::Finite(v) => {
                let v = *v;
                if m >= 2 && v > 0 {
                    integral = false;
                }
                if v % m != 0 {
                    darmon = false;
                }
                if v != 0 && v < m {
                    campana = false;
                }
                weak_sum += BigRational::new(BigInt::from(v), BigInt::from(m));
            }
        }
    }
    let weak_campana = weak_inf || weak_sum.is_zero() || weak_sum >= BigRational::one();
    LocalClassification {
        prime,
        multiplicities: mult,
        on_divisor_inf: false,
        strict,
        integral,
        darmon,
        campana,
        weak_campana,
    }
}

/// Classify P at a prime p not in the model's excluded places.
pub fn classify_local(point: &ProjPointQ, model: &OrbifoldModelZ, p: u64) -> Result<LocalClassification> {
    model.require_on_ambient(point)?;
    if !arith::is_prime_u64(p) {
        return Err(Error::NonPrimeModulus(p.to_string()));
    }
    if model.excluded_places.contains(&p) {
        return Err(Error::InvalidModel(format!("{p} is an excluded place")));
    }
    let pb = BigInt::from(p);
    let mult: Vec<ExtNat> = model
        .divisor
        .iter()
        .map(|c| arith::valuation(&c.form.eval(point.coords()), &pb))
        .collect();
    Ok(flags_from(p, mult, &model.divisor))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalClassification {
    pub point: ProjPointQ,
    /// Primes dividing some nonzero divisor value, minus excluded places.
    pub relevant_primes: Vec<u64>,
    pub per_prime: Vec<LocalClassification>,
    pub on_divisor_inf: bool,
    pub strict: bool,
    pub integral: bool,
    pub darmon: bool,
    pub campana: bool,
    pub weak_campana: bool,
}

impl GlobalClassification {
    pub fn flag(&self, flag: PointFlag) -> bool {
        match flag {
            PointFlag::Any => true,
            PointFlag::Integral => self.integral,
            PointFlag::Darmon => self.darmon,
            PointFlag::Campana => self.campana,
            PointFlag::WeakCampana => self.weak_campana,
            PointFlag::Strict => self.strict,
        }
    }
}

/// Conjunction over all primes outside the excluded places.
pub fn classify_global(point: &ProjPointQ, model: &OrbifoldModelZ) -> Result<GlobalClassification> {
    model.require_on_ambient(point)?;
    let values: Vec<BigInt> = model.divisor.iter().map(|c| c.form.eval(point.coords())).collect();
    let mut primes = BTreeSet::new();
    for (c, v) in model.divisor.iter().zip(&values) {
        if c.weight.in_support() && !v.is_zero() && !v.abs().is_one() {
            for q in arith::prime_divisors(v)? {
                let q = q.to_u64().ok_or_else(|| Error::PrecisionOverflow(format!("prime {q}")))?;
                if !model.excluded_places.contains(&q) {
                    primes.insert(q);
                }
            }
        }
    }
    let generic_mult: Vec<ExtNat> =
        values.iter().map(|v| if v.is_zero() { ExtNat::Infinity } else { ExtNat::Finite(0) }).collect();
    let generic = flags_from(0, generic_mult, &model.divisor);
    let per_prime: Vec<LocalClassification> =
        primes.iter().map(|&q| classify_local(point, model, q)).collect::<Result<_>>()?;
    let all = |f: fn(&LocalClassification) -> bool| f(&generic) && per_prime.iter().all(f);
    Ok(GlobalClassification {
        point: point.clone(),
        relevant_primes: primes.into_iter().collect(),
        on_divisor_inf: generic.on_divisor_inf || per_prime.iter().any(|c| c.on_divisor_inf),
        strict: generic.strict,
        integral: all(|c| c.integral),
        darmon: all(|c| c.darmon),
        campana: all(|c| c.campana),
        weak_campana: all(|c| c.weak_campana),
        per_prime,
    })
}

/// Which global classification `search_points` filters on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Any,
    Integral,
    Darmon,
    Campana,
    WeakCampana,
    Strict,
}

/// A congruence condition: the point agrees with `residues` mod p^k up to a p-adic unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueTarget {
    pub prime: u64,
    pub exponent: u32,
    pub residues: Vec<i64>,
}

/// Scale so that the first p-adic unit coordinate is 1, then reduce mod p^k.
fn chart_normal_form(coords: &[BigInt], p: u64, k: u32) -> Option<Vec<BigInt>> {
    let pb = BigInt::from(p);
    let modulus = num_traits::pow(pb.clone(), k as usize);
    let j = coords.iter().position(|c| !c.mod_floor(&pb).is_zero())?;
    let inv = crate::localfields::mod_inverse(&coords[j], &modulus)?;
    Some(coords.iter().map(|c| (c * &inv).mod_floor(&modulus)).collect())
}

fn matches_target(point: &ProjPointQ, t: &ResidueTarget) -> bool {
    let target: Vec<BigInt> = t.residues.iter().map(|&r| BigInt::from(r)).collect();
    match (chart_normal_form(point.coords(), t.prime, t.exponent), chart_normal_form(&target, t.prime, t.exponent)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}

/// Integer roots of Σ c_i x^i with |x| ≤ h.
fn integer_roots(c: &[BigInt], h: i64) -> Vec<i64> {
    let deg = match c.iter().rposition(|x| !x.is_zero()) {
        None => return (-h..=h).collect(),
        Some(d) => d,
    };
    match deg {
        0 => vec![],
        1 => {
            let (q, r) = (-&c[0]).div_rem(&c[1]);
            if r.is_zero() {
                q.to_i64().filter(|v| v.abs() <= h).into_iter().collect()
            } else {
                vec![]
            }
        }
        2 => {
            let disc = &c[1] * &c[1] - BigInt::from(4) * &c[2] * &c[0];
            if disc.is_negative() {
                return vec![];
            }
            let s = disc.sqrt();
            if &s * &s != disc {
                return vec![];
            }
            let two_a = &c[2] * 2;
            let mut out: Vec<i64> = [(-&c[1] + &s), (-&c[1] - &s)]
                .iter()
                .filter_map(|num| {
                    let (q, r) = num.div_rem(&two_a);
                    r.is_zero().then_some(q)
                })
                .filter_map(|q| q.to_i64())
                .filter(|v| v.abs() <= h)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
        _ => (-h..=h)
            .filter(|&x| {
                let xb = BigInt::from(x);
                let mut acc = BigInt::zero();
                for ci in c.iter().rev() {
                    acc = acc * &xb + ci;
                }
                acc.is_zero()
            })
            .collect(),
    }
}

/// Fast i128 variant of [`integer_roots`]; `None` on overflow.
fn integer_roots_i128(c: &[i128], h: i64) -> Option<Vec<i64>> {
    let deg = match c.iter().rposition(|&x| x != 0) {
        None => return Some((-h..=h).collect()),
        Some(d) => d,
    };
    let ok = |v: i128| (v.abs() <= h as i128).then_some(v as i64);
    Some(match deg {
        0 => vec![],
        1 => {
            if c[0] % c[1] == 0 {
                ok(-c[0] / c[1]).into_iter().collect()
            } else {
                vec![]
            }
        }
        2 => {
            let disc = c[1].checked_mul(c[1])?.checked_sub(c[2].checked_mul(c[0])?.checked_mul(4)?)?;
            if disc < 0 {
                return Some(vec![]);
            }
            let s = (disc as u128).sqrt() as i128;
            if s * s != disc {
                return Some(vec![]);
            }
            let two_a = 2 * c[2];
            let mut out: Vec<i64> = [-c[1] + s, -c[1] - s]
                .iter()
                .filter(|&&num| num % two_a == 0)
                .filter_map(|&num| ok(num / two_a))
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
        _ => return None,
    })
}

/// All primitive points of height ≤ h on the ambient model carrying `flag`
/// and matching every residue target, ordered by (height, coordinates).
pub fn search_points(
    model: &OrbifoldModelZ,
    height_bound: u64,
    flag: PointFlag,
    targets: &[ResidueTarget],
) -> Result<Vec<ProjPointQ>> {
    let h = i64::try_from(height_bound).map_err(|_| Error::PrecisionOverflow(height_bound.to_string()))?;
    if h < 1 {
        return Err(Error::NonPositive(height_bound.to_string()));
    }
    for t in targets {
        if t.residues.len() != model.nvars() {
            return Err(Error::DimensionMismatch { expected: model.nvars(), got: t.residues.len() });
        }
    }
    let n = model.nvars();
    // integral points are units on every coordinate component of the support
    let unit_coord = if flag == PointFlag::Integral {
        model.divisor().iter().filter(|c| c.weight.in_support()).find_map(|c| single_coordinate(&c.form))
    } else {
        None
    };
    let candidates = candidate_points(model, h, unit_coord);
    let mut found: Vec<ProjPointQ> = candidates
        .into_par_iter()
        .filter_map(|raw| {
            let coords: Vec<BigInt> = raw.iter().map(|&x| BigInt::from(x)).collect();
            let p = normalize_point(&coords).ok()?;
            if p.coords()[..].iter().zip(&raw).any(|(a, &b)| a != &BigInt::from(b)) {
                return None;
            }
            if !model.contains(&p).ok()? {
                return None;
            }
            if !targets.iter().all(|t| matches_target(&p, t)) {
                return None;
            }
            if flag != PointFlag::Any && !classify_global(&p, model).ok()?.flag(flag) {
                return None;
            }
            Some(p)
        })
        .collect();
    debug_assert!(found.iter().all(|p| p.len() == n));
    found.sort_by(|a, b| (a.height(), a.coords()).cmp(&(b.height(), b.coords())));
    found.dedup();
    Ok(found)
}

pub(crate) fn single_coordinate(form: &Poly) -> Option<usize> {
    if form.num_terms() != 1 || form.degree() != 1 {
        return None;
    }
    let (e, c) = form.terms().next()?;
    if c.abs() != BigInt::from(1) {
        return None;
    }
    e.iter().position(|&k| k == 1)
}

/// Integer vectors in the box [-h, h]^(n+1) that satisfy the first equation
/// (or all vectors, for projective space), as raw i64 coordinates. A `unit`
/// coordinate only takes the values ±1.
fn candidate_points(model: &OrbifoldModelZ, h: i64, unit: Option<usize>) -> Vec<Vec<i64>> {
    let n = model.nvars();
    let first = match model.equations.first() {
        None => return box_points(n, h, unit),
        Some(f) => f,
    };
    let solve = match (0..n).rev().find(|&i| Some(i) != unit && first.degree_in(i) > 0) {
        Some(i) => i,
        None => {
            return box_points(n, h, unit).into_iter().filter(|x| first.eval_i64(x).is_zero()).collect()
        }
    };
    let coeffs = first.coefficients_in(solve);
    let others: Vec<usize> = (0..n).filter(|&i| i != solve && Some(i) != unit).collect();
    let side = 2 * h as u128 + 1;
    let units: &[i64] = if unit.is_some() { &[-1, 1] } else { &[0] };
    let total = side.pow(others.len() as u32) * units.len() as u128;
    (0..total)
        .into_par_iter()
        .flat_map_iter(|mut idx| {
            let mut x = vec![0i64; n];
            if let Some(u) = unit {
                x[u] = units[(idx % 2) as usize];
                idx /= 2;
            }
            for &i in &others {
                x[i] = (idx % side) as i64 - h;
                idx /= side;
            }
            let wide: Vec<i128> = x.iter().map(|&v| v as i128).collect();
            let fast: Option<Vec<i128>> = coeffs.iter().map(|c| c.eval_i128(&wide)).collect();
            let roots = fast
                .and_then(|c| integer_roots_i128(&c, h))
                .unwrap_or_else(|| {
                    let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
                    let c: Vec<BigInt> = coeffs.iter().map(|c| c.eval(&big)).collect();
                    integer_roots(&c, h)
                });
            roots.into_iter().map(move |r| {
                let mut y = x.clone();
                y[solve] = r;
                y
            })
        })
        .filter(|v| v.iter().any(|&c| c != 0))
        .collect()
}

fn box_points(n: usize, h: i64, unit: Option<usize>) -> Vec<Vec<i64>> {
    let side = 2 * h as u128 + 1;
    let free = n - usize::from(unit.is_some());
    let units: &[i64] = if unit.is_some() { &[-1, 1] } else { &[0] };
    let total = side.pow(free as u32) * units.len() as u128;
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0i64; n];
            if let Some(u) = unit {
                x[u] = units[(idx % 2) as usize];
                idx /= 2;
            }
            for (i, c) in x.iter_mut().enumerate() {
                if Some(i) != unit {
                    *c = (idx % side) as i64 - h;
                    idx /= side;
                }
            }
            x
        })
        .filter(|v| v.iter().any(|&c| c != 0))
        .collect()
}

/// Per-flag summary counts over a point list.
pub fn flag_counts(model: &OrbifoldModelZ, points: &[ProjPointQ]) -> Result<BTreeMap<&'static str, usize>> {
    let mut out = BTreeMap::new();
    for p in points {
        let g = classify_global(p, model)?;
        for (name, on) in [
            ("integral", g.integral),
            ("darmon", g.darmon),
            ("campana", g.campana),
            ("weak_campana", g.weak_campana),
            ("strict", g.strict),
        ] {
            if on {
                *out.entry(name).or_insert(0) += 1;
            }
        }
    }
    Ok(out)
}
