//! Quaternion Brauer classes: local invariants at points, invariant profiles
//! over local semi-integral points, adelic obstruction reports and a scan for
//! primes where the local invariant takes both values.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, ExtNat};
use crate::error::{Error, Result};
use crate::localfields::{self, hilbert_int, is_local_square, Place, ResidueClass, ResidueSearch};
use crate::orbifold::{single_coordinate, OrbifoldModelZ, ProjPointQ, Weight};
use crate::poly::Poly;

/// num / den with num and den homogeneous of degrees of equal parity, so the
/// value at a projective point is well defined up to squares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunction {
    pub numerator: Poly,
    pub denominator: Poly,
}

impl RationalFunction {
    pub fn new(numerator: Poly, denominator: Poly) -> Result<Self> {
        if numerator.nvars() != denominator.nvars() {
            return Err(Error::DimensionMismatch { expected: numerator.nvars(), got: denominator.nvars() });
        }
        if numerator.is_zero() || denominator.is_zero() {
            return Err(Error::InvalidModel("rational function with zero numerator or denominator".into()));
        }
        if !numerator.is_homogeneous() || !denominator.is_homogeneous() {
            return Err(Error::InvalidModel("rational function entries must be homogeneous".into()));
        }
        if !(numerator.degree() + denominator.degree()).is_multiple_of(2) {
            return Err(Error::InvalidModel("numerator and denominator degrees must have equal parity".into()));
        }
        Ok(RationalFunction { numerator, denominator })
    }

    pub fn constant(d: &BigInt, nvars: usize) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::ZeroArgument);
        }
        Ok(RationalFunction { numerator: Poly::constant(d.clone(), nvars), denominator: Poly::constant(1, nvars) })
    }

    /// The constant value, if both entries are constants.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.numerator.degree() == 0 && self.denominator.degree() == 0 {
            let zero = vec![BigInt::zero(); self.numerator.nvars()];
            Some(BigRational::new(self.numerator.eval(&zero), self.denominator.eval(&zero)))
        } else {
            None
        }
    }

    /// num · den, an integer in the same square class as the value.
    fn square_class_at(&self, x: &[BigInt]) -> BigInt {
        self.numerator.eval(x) * self.denominator.eval(x)
    }
}

/// One representative pair (g, h) of a quaternion algebra (g, h).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassRepresentative {
    pub first: RationalFunction,
    pub second: RationalFunction,
}

/// A 2-torsion Brauer class given by equivalent quaternion representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuaternionClass {
    representatives: Vec<ClassRepresentative>,
}

impl QuaternionClass {
    pub fn new(representatives: Vec<ClassRepresentative>) -> Result<Self> {
        let first = representatives.first().ok_or_else(|| Error::InvalidModel("class needs a representative".into()))?;
        let n = first.first.numerator.nvars();
        for r in &representatives {
            for f in [&r.first, &r.second] {
                if f.numerator.nvars() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: f.numerator.nvars() });
                }
            }
            for poly in [&r.first.numerator, &r.first.denominator] {
                if !poly.content().is_one() {
                    return Err(Error::InvalidModel("representative entries must have content 1".into()));
                }
            }
        }
        Ok(QuaternionClass { representatives })
    }

    /// (g_i, d) for each numerator/denominator pair g_i.
    pub fn with_constant(pairs: Vec<(Poly, Poly)>, d: &BigInt) -> Result<Self> {
        let n = pairs.first().map(|(a, _)| a.nvars()).ok_or_else(|| Error::InvalidModel("class needs a representative".into()))?;
        let reps = pairs
            .into_iter()
            .map(|(num, den)| {
                Ok(ClassRepresentative { first: RationalFunction::new(num, den)?, second: RationalFunction::constant(d, n)? })
            })
            .collect::<Result<Vec<_>>>()?;
        QuaternionClass::new(reps)
    }

    pub fn representatives(&self) -> &[ClassRepresentative] {
        &self.representatives
    }

    pub fn nvars(&self) -> usize {
        self.representatives[0].first.numerator.nvars()
    }

    /// The common constant second entry d, when there is one.
    pub fn constant(&self) -> Option<BigInt> {
        let mut out: Option<BigRational> = None;
        for r in &self.representatives {
            let c = r.second.as_constant()?;
            match &out {
                None => out = Some(c),
                Some(prev) if *prev == c => {}
                Some(_) => return None,
            }
        }
        out.map(|c| c.numer() * c.denom())
    }

    /// Values the local invariant can possibly take at a place.
    pub fn possible_values(&self, v: Place) -> BTreeSet<InvariantValue> {
        match self.constant() {
            Some(d) if is_local_square(&d, v) => [InvariantValue::Zero].into(),
            _ => [InvariantValue::Zero, InvariantValue::Half].into(),
        }
    }
}

/// inv_v ∈ {0, 1/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantValue {
    Zero,
    Half,
}

impl InvariantValue {
    pub fn from_symbol(s: i8) -> Self {
        if s == 1 {
            InvariantValue::Zero
        } else {
            InvariantValue::Half
        }
    }

    /// Value in half-units: 0 or 1.
    pub fn half_units(self) -> u8 {
        match self {
            InvariantValue::Zero => 0,
            InvariantValue::Half => 1,
        }
    }

    pub fn from_half_units(h: u8) -> Self {
        if h.is_multiple_of(2) {
            InvariantValue::Zero
        } else {
            InvariantValue::Half
        }
    }
}

impl std::ops::Add for InvariantValue {
    type Output = InvariantValue;

    fn add(self, other: Self) -> Self {
        Self::from_half_units(self.half_units() + other.half_units())
    }
}

impl fmt::Display for InvariantValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantValue::Zero => write!(f, "0"),
            InvariantValue::Half => write!(f, "1/2"),
        }
    }
}

impl Serialize for InvariantValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for InvariantValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "0" => Ok(InvariantValue::Zero),
            "1/2" => Ok(InvariantValue::Half),
            other => Err(serde::de::Error::custom(format!("invalid invariant {other:?}"))),
        }
    }
}

/// Local invariant of A at a rational point, from the first representative
/// whose entries are all nonzero there.
pub fn invariant_at_point(class: &QuaternionClass, point: &ProjPointQ, v: Place) -> Result<InvariantValue> {
    if point.len() != class.nvars() {
        return Err(Error::DimensionMismatch { expected: class.nvars(), got: point.len() });
    }
    let x = point.coords();
    for r in &class.representatives {
        let a = r.first.square_class_at(x);
        let b = r.second.square_class_at(x);
        if !a.is_zero() && !b.is_zero() {
            return Ok(InvariantValue::from_symbol(hilbert_int(&a, &b, v)));
        }
    }
    Err(Error::AllRepresentativesVanish)
}

/// Invariants of every evaluable representative at a rational point.
pub fn invariants_by_representative(class: &QuaternionClass, point: &ProjPointQ, v: Place) -> Vec<Option<InvariantValue>> {
    let x = point.coords();
    class
        .representatives
        .iter()
        .map(|r| {
            let a = r.first.square_class_at(x);
            let b = r.second.square_class_at(x);
            (!a.is_zero() && !b.is_zero()).then(|| InvariantValue::from_symbol(hilbert_int(&a, &b, v)))
        })
        .collect()
}

/// Which local points a profile ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "weight", rename_all = "snake_case")]
pub enum ProfileMode {
    Integral,
    Darmon(u64),
    Campana(u64),
}

impl ProfileMode {
    pub fn new(name: &str, weight: Option<u64>) -> Result<Self> {
        let need = || {
            weight
                .filter(|&m| m >= 2)
                .ok_or_else(|| Error::InvalidModel(format!("mode {name} needs a weight m >= 2")))
        };
        match name.to_ascii_lowercase().as_str() {
            "integral" => Ok(ProfileMode::Integral),
            "darmon" => Ok(ProfileMode::Darmon(need()?)),
            "campana" => Ok(ProfileMode::Campana(need()?)),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }

    fn weight(self) -> Option<u64> {
        match self {
            ProfileMode::Integral => None,
            ProfileMode::Darmon(m) | ProfileMode::Campana(m) => Some(m),
        }
    }

    /// Whether exact valuation v on a finite-weight divisor component is allowed.
    fn admits(self, v: u64) -> bool {
        match self {
            ProfileMode::Integral => v == 0,
            ProfileMode::Darmon(m) => v.is_multiple_of(m),
            ProfileMode::Campana(m) => v == 0 || v >= m,
        }
    }

    /// Exact valuations ≥ k to probe on a component known to be ≡ 0 mod p^k.
    fn probe_valuations(self, k: u32) -> Vec<u32> {
        match self {
            ProfileMode::Integral => vec![],
            ProfileMode::Darmon(m) => {
                let m = m as u32;
                let first = k.div_ceil(m).max(1) * m;
                vec![first, first + m]
            }
            ProfileMode::Campana(m) => {
                let first = k.max(m as u32);
                vec![first, first + 1]
            }
        }
    }
}

impl fmt::Display for ProfileMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileMode::Integral => write!(f, "INTEGRAL"),
            ProfileMode::Darmon(m) => write!(f, "DARMON({m})"),
            ProfileMode::Campana(m) => write!(f, "CAMPANA({m})"),
        }
    }
}

/// An approximate p-adic point known to lie within p^precision of a genuine
/// local point of the requested kind, at which the invariant takes `value`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantWitness {
    pub value: InvariantValue,
    pub precision: u32,
    #[serde(with = "bigint_vec")]
    pub coords: Vec<BigInt>,
    /// Lifting coordinate and its derivative valuation (Hensel data).
    pub variable: Option<usize>,
    pub derivative_valuation: Option<u32>,
}

mod bigint_vec {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantProfile {
    pub place: Place,
    pub mode: ProfileMode,
    pub achieved: BTreeSet<InvariantValue>,
    /// No local point of the requested kind exists.
    pub empty: bool,
    pub inconclusive_classes: usize,
    pub depth_used: u32,
    /// True when `achieved` is known to be the full set of values.
    pub complete: bool,
    pub witnesses: Vec<InvariantWitness>,
}

impl InvariantProfile {
    pub fn is_two_valued(&self) -> bool {
        self.achieved.len() == 2
    }
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub max_depth: Option<u32>,
    pub class_budget: usize,
    /// Stop as soon as any value is witnessed.
    pub stop_at_first: bool,
    /// Real place: number of sampled points.
    pub real_samples: usize,
    pub seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { max_depth: None, class_budget: 400_000, stop_at_first: false, real_samples: 200, seed: 1 }
    }
}

/// Classes processed between early-exit checks.
const LEVEL_CHUNK: usize = 4096;

pub fn default_max_depth(p: u64) -> u32 {
    if p <= 5 {
        12
    } else {
        6
    }
}

/// Largest k with p^(k+1) < 2^63.
fn precision_ceiling(p: u64) -> u32 {
    let mut k = 0;
    while localfields::checked_prime_power(p, k + 2).is_ok() {
        k += 1;
    }
    k
}

fn r_bound(p: u64) -> u32 {
    if p == 2 {
        3
    } else {
        1
    }
}

/// Square-class integer of a polynomial value known modulo p^precision, when
/// its valuation is small enough for the class to be determined.
fn determined(poly: &Poly, x: &[BigInt], p: &BigInt, precision: u32, r: u32) -> Option<BigInt> {
    let v = poly.eval(x);
    if poly.degree() == 0 {
        return (!v.is_zero()).then_some(v);
    }
    match arith::valuation(&v, p) {
        ExtNat::Finite(e) if e as u32 + r <= precision => Some(v),
        _ => None,
    }
}

fn entry_class(f: &RationalFunction, x: &[BigInt], p: &BigInt, precision: u32, r: u32) -> Option<BigInt> {
    Some(determined(&f.numerator, x, p, precision, r)? * determined(&f.denominator, x, p, precision, r)?)
}

/// Invariant values given by the representatives that are determined on the
/// p-adic ball of radius p^-precision around x.
fn ball_values(class: &QuaternionClass, x: &[BigInt], p: u64, precision: u32) -> BTreeSet<InvariantValue> {
    let pb = BigInt::from(p);
    let r = r_bound(p);
    let mut out = BTreeSet::new();
    for rep in &class.representatives {
        let a = entry_class(&rep.first, x, &pb, precision, r);
        let b = entry_class(&rep.second, x, &pb, precision, r);
        if let (Some(a), Some(b)) = (a, b) {
            out.insert(InvariantValue::from_symbol(hilbert_int(&a, &b, Place::Finite(p))));
        }
    }
    out
}

/// The invariant on a ball known to contain local points. Representatives
/// that disagree there do not define one class, which is an error.
fn ball_invariant(class: &QuaternionClass, x: &[BigInt], p: u64, precision: u32) -> Result<Option<InvariantValue>> {
    let values = ball_values(class, x, p, precision);
    if values.len() > 1 {
        return Err(Error::InvalidModel(format!(
            "class representatives disagree at p = {p} near {:?}",
            x.iter().map(|c| c.to_string()).collect::<Vec<_>>()
        )));
    }
    Ok(values.into_iter().next())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ComponentState {
    /// Exact valuation known and allowed.
    Allowed,
    /// Component value ≡ 0 modulo the working precision.
    Deep,
}

/// Check the mode's multiplicity conditions at x known mod p^precision.
/// `None` means the ball contains no admissible point.
fn component_states(
    model: &OrbifoldModelZ,
    mode: ProfileMode,
    x: &[BigInt],
    p: u64,
    precision: u32,
) -> Option<Vec<ComponentState>> {
    let pb = BigInt::from(p);
    let mut out = Vec::new();
    for c in model.divisor() {
        if !c.weight.in_support() {
            continue;
        }
        let v = match arith::valuation(&c.form.eval(x), &pb) {
            ExtNat::Finite(e) if (e as u32) < precision => Some(e),
            _ => None,
        };
        let effective = if c.weight == Weight::Infinite { ProfileMode::Integral } else { mode };
        match v {
            Some(e) if effective.admits(e) => out.push(ComponentState::Allowed),
            Some(_) => return None,
            None if effective == ProfileMode::Integral => return None,
            None => out.push(ComponentState::Deep),
        }
    }
    Some(out)
}

fn single_hypersurface(model: &OrbifoldModelZ) -> Result<&Poly> {
    match model.equations() {
        [f] => Ok(f),
        _ => Err(Error::InvalidModel("invariant profiles need a hypersurface model".into())),
    }
}

fn unit_representatives(p: u64) -> Vec<u64> {
    if p == 2 {
        vec![1, 3, 5, 7]
    } else {
        let n = (2..p).find(|&a| arith::jacobi_u64(a, p) == -1).unwrap_or(1);
        vec![1, n]
    }
}

enum ClassOutcome {
    Drop,
    /// Every point of the class has an already witnessed value.
    Done(Vec<InvariantWitness>),
    /// Found values at specific points; the class still needs refinement.
    Refine(Vec<InvariantWitness>),
}

struct ProfileContext<'a> {
    class: &'a QuaternionClass,
    model: &'a OrbifoldModelZ,
    f: &'a Poly,
    mode: ProfileMode,
    p: u64,
    search: ResidueSearch,
}

impl ProfileContext<'_> {
    /// Newton-lift from x in `var` and evaluate the invariant at the limit point.
    fn witness_from(&self, x: Vec<BigInt>, var: usize, e: u32, extra: u32) -> Result<Option<InvariantWitness>> {
        let pb = BigInt::from(self.p);
        let precision = extra + 2 * e + 8;
        let lifted = match localfields::newton_lift(self.f, x, var, &pb, precision) {
            Some(v) => v,
            None => return Ok(None),
        };
        let valid = precision - e;
        let states = match component_states(self.model, self.mode, &lifted, self.p, valid) {
            Some(s) => s,
            None => return Ok(None),
        };
        if states.contains(&ComponentState::Deep) {
            return Ok(None);
        }
        Ok(ball_invariant(self.class, &lifted, self.p, valid)?.map(|value| InvariantWitness {
            value,
            precision: valid,
            coords: lifted,
            variable: Some(var),
            derivative_valuation: Some(e),
        }))
    }

    /// Lift a witness far enough that every representative is determined at
    /// its limit point, and check they all agree with the recorded value.
    fn refine_witness(&self, w: &mut InvariantWitness) -> Result<()> {
        let (var, e) = match (w.variable, w.derivative_valuation) {
            (Some(v), Some(e)) => (v, e),
            _ => return Ok(()),
        };
        let pb = BigInt::from(self.p);
        let precision = w.precision + e + 48;
        let lifted = match localfields::newton_lift(self.f, w.coords.clone(), var, &pb, precision) {
            Some(l) => l,
            None => return Ok(()),
        };
        let valid = precision - e;
        let values = ball_values(self.class, &lifted, self.p, valid);
        if values.len() > 1 || values.iter().any(|&v| v != w.value) {
            return Err(Error::InvalidModel(format!(
                "class representatives disagree at p = {} near {:?}",
                self.p,
                lifted.iter().map(|c| c.to_string()).collect::<Vec<_>>()
            )));
        }
        w.coords = lifted;
        w.precision = valid;
        Ok(())
    }

    /// Points with prescribed exact valuation on coordinate divisor components
    /// that are ≡ 0 on the class, lifted through another coordinate.
    fn probes(&self, cls: &ResidueClass, states: &[ComponentState]) -> Result<Vec<InvariantWitness>> {
        let support: Vec<&Poly> =
            self.model.divisor().iter().filter(|c| c.weight.in_support()).map(|c| &c.form).collect();
        let mut deep_vars = Vec::new();
        for (form, s) in support.iter().zip(states) {
            if *s == ComponentState::Deep {
                match single_coordinate(form) {
                    Some(i) => deep_vars.push(i),
                    None => return Ok(vec![]),
                }
            }
        }
        if deep_vars.len() != 1 {
            return Ok(vec![]);
        }
        let deep = deep_vars[0];
        let pk = localfields::checked_prime_power(self.p, cls.k)?;
        let grad = self.f.gradient();
        let lift_var = (0..cls.coords.len())
            .filter(|&i| i != cls.chart && i != deep)
            .filter_map(|i| {
                let r = grad[i].reduce_mod(pk).eval(&cls.coords);
                let e = localfields::residue_valuation(r, self.p, cls.k);
                (2 * e < cls.k).then_some((i, e))
            })
            .min_by_key(|&(_, e)| e);
        let (var, e) = match lift_var {
            Some(v) => v,
            None => return Ok(vec![]),
        };
        let mut out = Vec::new();
        for j in self.mode.probe_valuations(cls.k) {
            for u in unit_representatives(self.p) {
                let mut x: Vec<BigInt> = cls.coords.iter().map(|&c| BigInt::from(c)).collect();
                x[deep] = num_traits::pow(BigInt::from(self.p), j as usize) * BigInt::from(u);
                if let Some(w) = self.witness_from(x, var, e, 2 * j + 8)? {
                    out.push(w);
                }
            }
        }
        Ok(out)
    }

    fn process(&self, cls: &ResidueClass, achieved: &BTreeSet<InvariantValue>) -> Result<ClassOutcome> {
        let x: Vec<BigInt> = cls.coords.iter().map(|&c| BigInt::from(c)).collect();
        let states = match component_states(self.model, self.mode, &x, self.p, cls.k) {
            Some(s) => s,
            None => return Ok(ClassOutcome::Drop),
        };
        let cert = self.search.certificate(cls)?;
        if states.contains(&ComponentState::Deep) {
            let found = if cert.is_some() { self.probes(cls, &states)? } else { vec![] };
            return Ok(ClassOutcome::Refine(found));
        }
        let values = ball_values(self.class, &x, self.p, cls.k);
        let settled = |known: &BTreeSet<InvariantValue>| values.len() == 1 && known.is_superset(&values);
        if settled(achieved) {
            return Ok(ClassOutcome::Drop);
        }
        let c = match cert {
            Some(c) => c,
            None => return Ok(ClassOutcome::Refine(vec![])),
        };
        // the certified root lies within p^(k-e) of the class, not necessarily inside it
        let near = cls.k - c.derivative_valuation;
        let direct = match component_states(self.model, self.mode, &x, self.p, near) {
            Some(s) if !s.contains(&ComponentState::Deep) => ball_invariant(self.class, &x, self.p, near)?,
            _ => None,
        };
        let found: Vec<InvariantWitness> = match direct {
            Some(value) => vec![InvariantWitness {
                value,
                precision: near,
                coords: x,
                variable: Some(c.variable),
                derivative_valuation: Some(c.derivative_valuation),
            }],
            None => self.witness_from(x, c.variable, c.derivative_valuation, cls.k + 24)?.into_iter().collect(),
        };
        let mut known = achieved.clone();
        known.extend(found.iter().map(|w| w.value));
        if settled(&known) {
            Ok(ClassOutcome::Done(found))
        } else {
            Ok(ClassOutcome::Refine(found))
        }
    }
}

/// Set of invariant values over local points of the requested kind at v.
pub fn invariant_profile(
    class: &QuaternionClass,
    model: &OrbifoldModelZ,
    v: Place,
    mode: ProfileMode,
    options: &ProfileOptions,
) -> Result<InvariantProfile> {
    if let Some(m) = mode.weight() {
        if m < 2 {
            return Err(Error::InvalidModel("mode weight must be at least 2".into()));
        }
    }
    if class.nvars() != model.nvars() {
        return Err(Error::DimensionMismatch { expected: model.nvars(), got: class.nvars() });
    }
    match v {
        Place::Real => real_profile(class, model, mode, options),
        Place::Finite(p) => padic_profile(class, model, p, mode, options),
    }
}

fn padic_profile(
    class: &QuaternionClass,
    model: &OrbifoldModelZ,
    p: u64,
    mode: ProfileMode,
    options: &ProfileOptions,
) -> Result<InvariantProfile> {
    let f = single_hypersurface(model)?;
    let search = ResidueSearch::new(f, &[], p)?;
    let ceiling = precision_ceiling(p);
    let max_depth = options.max_depth.unwrap_or_else(|| default_max_depth(p)).min(ceiling).max(1);
    let bound = localfields::quadric_exhaustion_bound(f, p);
    let possible = class.possible_values(Place::Finite(p));
    let ctx = ProfileContext { class, model, f, mode, p, search };

    let mut achieved = BTreeSet::new();
    let mut witnesses: Vec<InvariantWitness> = Vec::new();
    let mut any_point = false;
    let mut level = ctx.search.depth_one();
    let mut k = 1;
    let mut inconclusive = 0;
    let complete;
    loop {
        let mut next = Vec::new();
        let mut pending = 0;
        for chunk in level.chunks(LEVEL_CHUNK) {
            let done = achieved == possible || (options.stop_at_first && !achieved.is_empty());
            if done {
                pending += chunk.len();
                continue;
            }
            let snapshot = achieved.clone();
            let outcomes: Vec<ClassOutcome> =
                chunk.par_iter().map(|c| ctx.process(c, &snapshot)).collect::<Result<_>>()?;
            for (cls, out) in chunk.iter().zip(outcomes) {
                let found = match out {
                    ClassOutcome::Drop => continue,
                    ClassOutcome::Done(found) => found,
                    ClassOutcome::Refine(found) => {
                        next.push(cls.clone());
                        found
                    }
                };
                for w in found {
                    any_point = true;
                    if achieved.insert(w.value) {
                        witnesses.push(w);
                    }
                }
            }
        }
        if options.stop_at_first && !achieved.is_empty() {
            complete = achieved == possible;
            inconclusive = next.len() + pending;
            break;
        }
        if achieved == possible {
            complete = true;
            break;
        }
        if let Some(b) = bound {
            if k >= b {
                // uncertified classes past the bound contain no points
                let mut kept = Vec::new();
                for c in next {
                    if ctx.search.certificate(&c)?.is_some() {
                        kept.push(c);
                    }
                }
                next = kept;
            }
        }
        if next.is_empty() {
            complete = true;
            break;
        }
        if k >= max_depth {
            inconclusive = next.len();
            complete = false;
            break;
        }
        let children: Result<Vec<Vec<ResidueClass>>> = next.par_iter().map(|c| ctx.search.children(c)).collect();
        level = children?.into_iter().flatten().collect();
        k += 1;
        if level.len() > options.class_budget {
            log::warn!("profile at p = {p} ({mode}) exceeded the class budget at depth {k}");
            inconclusive = level.len();
            complete = false;
            break;
        }
    }
    witnesses.sort_by_key(|w| w.value);
    for w in witnesses.iter_mut() {
        ctx.refine_witness(w)?;
    }
    Ok(InvariantProfile {
        place: Place::Finite(p),
        mode,
        empty: complete && !any_point,
        achieved,
        inconclusive_classes: inconclusive,
        depth_used: k,
        complete,
        witnesses,
    })
}

// ---------------------------------------------------------------------------
// Real place: exact sampling of real points.

type UPoly = Vec<BigRational>;

fn trim(mut p: UPoly) -> UPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn ueval(p: &UPoly, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn uderiv(p: &UPoly) -> UPoly {
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect())
}

fn urem(a: &UPoly, b: &UPoly) -> UPoly {
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    let lead = b[db].clone();
    while !r.is_empty() && r.len() > db {
        let shift = r.len() - 1 - db;
        let q = r[r.len() - 1].clone() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &q * c;
        }
        r.pop();
        r = trim(r);
    }
    r
}

fn sturm_chain(p: &UPoly) -> Vec<UPoly> {
    let mut chain = vec![p.clone(), uderiv(p)];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() {
            chain.pop();
            break;
        }
        let r = urem(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn sign_changes(chain: &[UPoly], x: &BigRational) -> usize {
    let signs: Vec<i8> = chain
        .iter()
        .map(|p| {
            let v = ueval(p, x);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        })
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Distinct real roots in (lo, hi].
fn roots_in(chain: &[UPoly], lo: &BigRational, hi: &BigRational) -> usize {
    sign_changes(chain, lo).saturating_sub(sign_changes(chain, hi))
}

/// Isolating intervals (lo, hi] for the real roots of p.
fn isolate_roots(p: &UPoly) -> Vec<(BigRational, BigRational)> {
    if p.len() < 2 {
        return vec![];
    }
    let chain = sturm_chain(p);
    let lead = p.last().unwrap().abs();
    let bound = p.iter().map(|c| c.abs() / &lead).fold(BigRational::zero(), |a, b| a + b) + BigRational::one();
    let mut stack = vec![(-bound.clone(), bound)];
    let mut out = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        match roots_in(&chain, &lo, &hi) {
            0 => {}
            1 => out.push((lo, hi)),
            _ => {
                let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
                stack.push((mid.clone(), hi));
                stack.push((lo, mid));
            }
        }
    }
    out.sort();
    out
}

/// Sign of q at the unique root of p in (lo, hi]; `None` if q vanishes there.
fn sign_at_root(p: &UPoly, q: &UPoly, mut lo: BigRational, mut hi: BigRational) -> Option<i8> {
    let q = trim(q.clone());
    if q.is_empty() {
        return None;
    }
    if q.len() == 1 {
        return Some(if q[0].is_positive() { 1 } else { -1 });
    }
    let pc = sturm_chain(p);
    let qc = sturm_chain(&q);
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..200 {
        if roots_in(&qc, &lo, &hi) == 0 {
            let v = ueval(&q, &hi);
            return Some(if v.is_positive() { 1 } else { -1 });
        }
        if ueval(p, &hi).is_zero() {
            return if ueval(&q, &hi).is_zero() {
                None
            } else {
                Some(if ueval(&q, &hi).is_positive() { 1 } else { -1 })
            };
        }
        let mid = (&lo + &hi) / &two;
        if roots_in(&pc, &lo, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    None
}

fn univariate(poly: &Poly, var: usize, x: &[BigInt]) -> UPoly {
    trim(poly.univariate_at(var, x).into_iter().map(BigRational::from_integer).collect())
}

fn real_profile(
    class: &QuaternionClass,
    model: &OrbifoldModelZ,
    mode: ProfileMode,
    options: &ProfileOptions,
) -> Result<InvariantProfile> {
    let possible = class.possible_values(Place::Real);
    if possible.len() == 1 {
        return Ok(InvariantProfile {
            place: Place::Real,
            mode,
            achieved: possible,
            empty: false,
            inconclusive_classes: 0,
            depth_used: 0,
            complete: true,
            witnesses: vec![],
        });
    }
    let f = single_hypersurface(model)?;
    let n = model.nvars();
    let solve = (0..n).rev().find(|&i| f.degree_in(i) > 0).expect("nonconstant equation");
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut achieved = BTreeSet::new();
    let mut witnesses = Vec::new();
    let support: Vec<&Poly> = model.divisor().iter().filter(|c| c.weight.in_support()).map(|c| &c.form).collect();
    for _ in 0..options.real_samples {
        let x: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-20i64..=20))).collect();
        let fu = univariate(f, solve, &x);
        for (lo, hi) in isolate_roots(&fu) {
            let sign_of = |q: &Poly| sign_at_root(&fu, &univariate(q, solve, &x), lo.clone(), hi.clone());
            if support.iter().any(|g| sign_of(g).is_none()) {
                continue;
            }
            for rep in class.representatives() {
                let entries = [
                    &rep.first.numerator,
                    &rep.first.denominator,
                    &rep.second.numerator,
                    &rep.second.denominator,
                ];
                let signs: Option<Vec<i8>> = entries.iter().map(|q| sign_of(q)).collect();
                if let Some(s) = signs {
                    let value =
                        InvariantValue::from_symbol(if s[0] * s[1] < 0 && s[2] * s[3] < 0 { -1 } else { 1 });
                    if achieved.insert(value) {
                        let mut coords = x.clone();
                        coords[solve] = (hi.numer() / hi.denom()).clone();
                        witnesses.push(InvariantWitness {
                            value,
                            precision: 0,
                            coords,
                            variable: Some(solve),
                            derivative_valuation: None,
                        });
                    }
                    break;
                }
            }
        }
        if achieved == possible {
            break;
        }
    }
    let complete = achieved == possible;
    Ok(InvariantProfile {
        place: Place::Real,
        mode,
        empty: false,
        inconclusive_classes: usize::from(!complete),
        depth_used: 0,
        complete,
        achieved,
        witnesses,
    })
}

// ---------------------------------------------------------------------------
// Adelic combination.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceChoice {
    pub place: Place,
    pub value: InvariantValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub mode: ProfileMode,
    pub profiles: Vec<InvariantProfile>,
    /// Good primes where one local point was checked, with the value found.
    pub good_prime_checks: Vec<(u64, Option<InvariantValue>)>,
    /// Good primes above this bound are taken to contribute only 0.
    pub assumed_zero_above: u64,
    pub obstructed: bool,
    pub zero_sum_witness: Option<Vec<PlaceChoice>>,
}

#[derive(Clone, Debug)]
pub struct ObstructionConfig {
    /// Primes needing a full profile; `None` means primes dividing 2·d·(model discriminant).
    pub bad_primes: Option<Vec<u64>>,
    /// Largest prime budget for bad primes.
    pub prime_budget: u64,
    pub good_prime_bound: u64,
    pub profile: ProfileOptions,
}

impl Default for ObstructionConfig {
    fn default() -> Self {
        ObstructionConfig { bad_primes: None, prime_budget: 10_000, good_prime_bound: 50, profile: ProfileOptions::default() }
    }
}

/// Primes dividing 2, the class constant, and the discriminant of a quadric
/// (the product of nonzero coefficients for other hypersurfaces).
pub fn default_bad_primes(class: &QuaternionClass, model: &OrbifoldModelZ) -> Result<Vec<u64>> {
    let f = single_hypersurface(model)?;
    let mut n = BigInt::from(2);
    if let Some(d) = class.constant() {
        n *= d;
    }
    for r in class.representatives() {
        for e in [&r.second.numerator, &r.second.denominator] {
            for (_, c) in e.terms() {
                n *= c;
            }
        }
    }
    let disc = if f.degree() == 2 {
        let h = hessian(f);
        localfields::bareiss_det(h)
    } else {
        BigInt::zero()
    };
    if disc.is_zero() {
        for (_, c) in f.terms() {
            n *= c;
        }
    } else {
        n *= disc;
    }
    let mut out: Vec<u64> = arith::prime_divisors(&n)?
        .into_iter()
        .map(|p| p.to_u64().ok_or_else(|| Error::PrecisionOverflow(p.to_string())))
        .collect::<Result<_>>()?;
    out.retain(|p| !model.excluded_places().contains(p));
    Ok(out)
}

fn hessian(f: &Poly) -> Vec<Vec<BigInt>> {
    let n = f.nvars();
    (0..n).map(|i| (0..n).map(|j| f.partial(i).partial(j).eval(&vec![BigInt::zero(); n])).collect()).collect()
}

/// Choose one value per place summing to 0, if possible.
pub fn zero_sum_selection(profiles: &[(Place, BTreeSet<InvariantValue>)]) -> Option<Vec<PlaceChoice>> {
    // reach[i][s]: the value chosen at place i to reach parity s after i+1 places
    let mut reach: Vec<[Option<(InvariantValue, u8)>; 2]> = Vec::new();
    let mut current = [true, false];
    for (_, values) in profiles {
        let mut next = [None, None];
        for s in 0..2u8 {
            if !current[s as usize] {
                continue;
            }
            for &v in values {
                let t = (s + v.half_units()) % 2;
                if next[t as usize].is_none() {
                    next[t as usize] = Some((v, s));
                }
            }
        }
        current = [next[0].is_some(), next[1].is_some()];
        reach.push(next);
    }
    if !current[0] {
        return None;
    }
    let mut out = Vec::new();
    let mut s = 0u8;
    for (i, step) in reach.iter().enumerate().rev() {
        let (v, prev) = step[s as usize].expect("reachable");
        out.push(PlaceChoice { place: profiles[i].0, value: v });
        s = prev;
    }
    out.reverse();
    Some(out)
}

/// Decide whether the class obstructs local points of the requested kind.
pub fn adelic_obstruction(
    class: &QuaternionClass,
    model: &OrbifoldModelZ,
    mode: ProfileMode,
    config: &ObstructionConfig,
) -> Result<ObstructionReport> {
    let bad = match &config.bad_primes {
        Some(b) => b.clone(),
        None => default_bad_primes(class, model)?,
    };
    if let Some(&p) = bad.iter().find(|&&p| p > config.prime_budget) {
        return Err(Error::Inconclusive(format!("bad prime {p} exceeds the prime budget")));
    }
    let mut places: Vec<Place> = vec![Place::Real];
    places.extend(bad.iter().map(|&p| Place::Finite(p)));
    let profiles: Vec<InvariantProfile> = places
        .par_iter()
        .map(|&v| invariant_profile(class, model, v, mode, &config.profile))
        .collect::<Result<_>>()?;

    let good: Vec<u64> =
        arith::primes_up_to(config.good_prime_bound).into_iter().filter(|p| !bad.contains(p) && !model.excluded_places().contains(p)).collect();
    let spot = ProfileOptions { stop_at_first: true, max_depth: Some(3), ..config.profile.clone() };
    let checks: Vec<(u64, Option<InvariantValue>)> = good
        .par_iter()
        .map(|&p| {
            let prof = invariant_profile(class, model, Place::Finite(p), mode, &spot)?;
            Ok((p, prof.achieved.iter().next().copied()))
        })
        .collect::<Result<_>>()?;

    let mut extra: Vec<InvariantProfile> = Vec::new();
    let mut scanned_good = false;
    for &(p, v) in &checks {
        if v == Some(InvariantValue::Half) {
            extra.push(invariant_profile(class, model, Place::Finite(p), mode, &config.profile)?);
            scanned_good = true;
        }
    }
    let combine = |profiles: &[InvariantProfile], extra: &[InvariantProfile]| {
        let list: Vec<(Place, BTreeSet<InvariantValue>)> =
            profiles.iter().chain(extra).map(|p| (p.place, p.achieved.clone())).collect();
        zero_sum_selection(&list)
    };
    let mut witness = combine(&profiles, &extra);
    if witness.is_none() && mode != ProfileMode::Integral && !scanned_good {
        let shallow = ProfileOptions { max_depth: Some(3), class_budget: 50_000, ..config.profile.clone() };
        let full: Vec<InvariantProfile> = good
            .par_iter()
            .map(|&p| invariant_profile(class, model, Place::Finite(p), mode, &shallow))
            .collect::<Result<_>>()?;
        extra.extend(full.into_iter().filter(|p| p.achieved.contains(&InvariantValue::Half)));
        witness = combine(&profiles, &extra);
    }
    if witness.is_none() {
        if let Some(p) = profiles.iter().chain(&extra).find(|p| !p.complete) {
            return Err(Error::Inconclusive(format!(
                "profile at {} ({}) is incomplete: achieved {:?}, {} undecided classes",
                p.place, p.mode, p.achieved, p.inconclusive_classes
            )));
        }
    }
    let mut all = profiles;
    all.extend(extra);
    Ok(ObstructionReport {
        mode,
        profiles: all,
        good_prime_checks: checks,
        assumed_zero_above: config.good_prime_bound,
        obstructed: witness.is_none(),
        zero_sum_witness: witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarariScan {
    pub mode: ProfileMode,
    pub primes_scanned: Vec<u64>,
    pub two_valued: Vec<u64>,
    pub inconclusive: Vec<u64>,
    pub fraction: f64,
}

/// Primes in [lo, hi] whose profile in the given mode takes both values.
pub fn harari_scan(
    class: &QuaternionClass,
    model: &OrbifoldModelZ,
    mode: ProfileMode,
    lo: u64,
    hi: u64,
    options: &ProfileOptions,
) -> Result<HarariScan> {
    let primes: Vec<u64> = arith::primes_up_to(hi)
        .into_iter()
        .filter(|&p| p >= lo && !model.excluded_places().contains(&p))
        .collect();
    let results: Vec<(u64, Result<InvariantProfile>)> = primes
        .par_iter()
        .map(|&p| (p, invariant_profile(class, model, Place::Finite(p), mode, options)))
        .collect();
    let mut two = Vec::new();
    let mut inconclusive = Vec::new();
    for (p, r) in results {
        match r {
            Ok(prof) if prof.is_two_valued() => two.push(p),
            Ok(prof) if prof.complete => {}
            Ok(_) => inconclusive.push(p),
            Err(Error::Inconclusive(_)) | Err(Error::PrecisionOverflow(_)) => inconclusive.push(p),
            Err(e) => return Err(e),
        }
    }
    let fraction = if primes.is_empty() { 0.0 } else { two.len() as f64 / primes.len() as f64 };
    Ok(HarariScan { mode, primes_scanned: primes, two_valued: two, inconclusive, fraction })
}

/// Places relevant to a rational point: REAL, 2, and primes dividing any
/// evaluated entry of any representative.
pub fn relevant_places(class: &QuaternionClass, point: &ProjPointQ) -> Result<Vec<Place>> {
    let mut primes = BTreeSet::from([2u64]);
    for r in class.representatives() {
        for e in [&r.first.numerator, &r.first.denominator, &r.second.numerator, &r.second.denominator] {
            let v = e.eval(point.coords());
            if !v.is_zero() {
                for q in arith::prime_divisors(&v)? {
                    primes.insert(q.to_u64().ok_or_else(|| Error::PrecisionOverflow(q.to_string()))?);
                }
            }
        }
    }
    let mut out = vec![Place::Real];
    out.extend(primes.into_iter().map(Place::Finite));
    Ok(out)
}

/// Σ_v inv_v A(P) over all places where it can be nonzero.
pub fn global_invariant_sum(class: &QuaternionClass, point: &ProjPointQ) -> Result<InvariantValue> {
    let mut total = InvariantValue::Zero;
    for v in relevant_places(class, point)? {
        total = total + invariant_at_point(class, point, v)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse, vars};

    fn xyzt() -> Vec<String> {
        vars(&["x", "y", "z", "t"])
    }

    fn even_quadric() -> (OrbifoldModelZ, QuaternionClass) {
        let v = xyzt();
        let model = OrbifoldModelZ::hypersurface(&["x", "y", "z", "t"], "9x^2 - 3y^2 - (t-4z)(t+4z)", &[("t", Weight::Finite(4))]).unwrap();
        let class = QuaternionClass::with_constant(
            vec![
                (parse("t - 4z", &v).unwrap(), parse("t", &v).unwrap()),
                (parse("t + 4z", &v).unwrap(), parse("t", &v).unwrap()),
            ],
            &BigInt::from(3),
        )
        .unwrap();
        (model, class)
    }

    #[test]
    fn invariant_value_arithmetic() {
        use InvariantValue::*;
        assert_eq!(Half + Half, Zero);
        assert_eq!(Zero + Half, Half);
        assert_eq!(serde_json::to_string(&Half).unwrap(), "\"1/2\"");
    }

    #[test]
    fn point_invariants_on_even_quadric() {
        let (_, class) = even_quadric();
        let p = ProjPointQ::from_i64(&[1, 0, 0, 3]).unwrap();
        assert_eq!(invariant_at_point(&class, &p, Place::Finite(7)).unwrap(), InvariantValue::Zero);
        assert_eq!(invariant_at_point(&class, &p, Place::Finite(3)).unwrap(), InvariantValue::Zero);
        let on_both = ProjPointQ::from_i64(&[0, 0, 1, 0]).unwrap();
        assert_eq!(invariant_at_point(&class, &on_both, Place::Finite(3)), Err(Error::AllRepresentativesVanish));
    }

    #[test]
    fn zero_sum_selection_cases() {
        use InvariantValue::*;
        let one = |v: InvariantValue| -> BTreeSet<InvariantValue> { [v].into() };
        let both: BTreeSet<InvariantValue> = [Zero, Half].into();
        assert!(zero_sum_selection(&[(Place::Real, one(Zero)), (Place::Finite(3), one(Half))]).is_none());
        let w = zero_sum_selection(&[(Place::Finite(2), both.clone()), (Place::Finite(3), one(Half))]).unwrap();
        assert_eq!(w[0].value, Half);
        assert_eq!(w[1].value, Half);
        assert!(zero_sum_selection(&[(Place::Finite(2), BTreeSet::new())]).is_none());
        assert!(zero_sum_selection(&[]).is_some());
    }

    #[test]
    fn three_adic_profile_is_half() {
        let (model, class) = even_quadric();
        let prof = invariant_profile(&class, &model, Place::Finite(3), ProfileMode::Darmon(4), &ProfileOptions::default()).unwrap();
        assert_eq!(prof.achieved, [InvariantValue::Half].into());
        assert!(prof.complete, "{prof:?}");
    }

    #[test]
    fn real_profile_sampling_finds_both_signs() {
        let v = vars(&["x", "y", "z"]);
        let model = OrbifoldModelZ::hypersurface(&["x", "y", "z"], "x^2 + y^2 - z^2", &[]).unwrap();
        let class = QuaternionClass::new(vec![ClassRepresentative {
            first: RationalFunction::new(parse("x", &v).unwrap(), parse("z", &v).unwrap()).unwrap(),
            second: RationalFunction::new(parse("y", &v).unwrap(), parse("z", &v).unwrap()).unwrap(),
        }])
        .unwrap();
        let prof = invariant_profile(&class, &model, Place::Real, ProfileMode::Integral, &ProfileOptions::default()).unwrap();
        assert!(prof.is_two_valued());
    }

    #[test]
    fn sturm_isolation() {
        let q = |v: i64| BigRational::from_integer(BigInt::from(v));
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let p = vec![q(6), q(-5), q(-2), q(1)];
        let roots = isolate_roots(&p);
        assert_eq!(roots.len(), 3);
        // sign of x at each root: -, +, +
        let x = vec![q(0), q(1)];
        let signs: Vec<Option<i8>> = roots.iter().map(|(a, b)| sign_at_root(&p, &x, a.clone(), b.clone())).collect();
        assert_eq!(signs, vec![Some(-1), Some(1), Some(1)]);
    }
}
