//! Sparse multivariate polynomials with integer coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// A polynomial in a fixed number of variables, stored as exponent vector → coefficient.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(c: impl Into<BigInt>, nvars: usize) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn from_terms<I, C>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
        C: Into<BigInt>,
    {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: e.len() });
            }
            p.add_term(e, c.into());
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// gcd of the coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divide by the content, making the leading coefficient positive.
    pub fn primitive_part(&self) -> Poly {
        let g = self.content();
        if g.is_zero() {
            return self.clone();
        }
        let lead_negative = self.terms.iter().next_back().map(|(_, c)| c.is_negative()).unwrap_or(false);
        let g = if lead_negative { -g } else { g };
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c / &g)).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Poly {
        if k.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(1, self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// ∂f/∂x_i
    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * BigInt::from(e[i]));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Write f = Σ_j c_j · x_i^j and return [c_0, c_1, ...]; each c_j still lives
    /// in the full variable set but does not involve x_i.
    pub fn coefficients_in(&self, i: usize) -> Vec<Poly> {
        let d = self.degree_in(i) as usize;
        let mut out = vec![Poly::zero(self.nvars); d + 1];
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let j = e2[i] as usize;
            e2[i] = 0;
            out[j].add_term(e2, c.clone());
        }
        out
    }

    pub fn eval(&self, x: &[BigInt]) -> BigInt {
        debug_assert_eq!(x.len(), self.nvars);
        let mut total = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            total += t;
        }
        total
    }

    pub fn eval_i64(&self, x: &[i64]) -> BigInt {
        let xs: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.eval(&xs)
    }

    /// Checked evaluation in i128; `None` on overflow.
    pub fn eval_i128(&self, x: &[i128]) -> Option<i128> {
        let mut total: i128 = 0;
        for (e, c) in &self.terms {
            let mut t = c.to_i128()?;
            for (&xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t.checked_mul(xi)?;
                }
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }

    /// Substitute x_i = values[i] for the variables listed, keeping the others symbolic.
    pub fn substitute(&self, assignments: &[(usize, BigInt)]) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut coef = c.clone();
            let mut e2 = e.clone();
            for (i, v) in assignments {
                if e2[*i] > 0 {
                    coef *= num_traits::pow(v.clone(), e2[*i] as usize);
                    e2[*i] = 0;
                }
            }
            out.add_term(e2, coef);
        }
        out
    }

    /// Univariate coefficients in x_i after all other variables are fixed.
    pub fn univariate_at(&self, i: usize, point: &[BigInt]) -> Vec<BigInt> {
        let d = self.degree_in(i) as usize;
        let mut out = vec![BigInt::zero(); d + 1];
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (j, (&k, xj)) in e.iter().zip(point).enumerate() {
                if j != i && k > 0 {
                    t *= num_traits::pow(xj.clone(), k as usize);
                }
            }
            out[e[i] as usize] += t;
        }
        out
    }

    /// Compile for repeated evaluation modulo a fixed modulus.
    pub fn reduce_mod(&self, modulus: u64) -> ModPoly {
        let m = BigInt::from(modulus);
        let terms = self
            .terms
            .iter()
            .filter_map(|(e, c)| {
                let r = c.mod_floor(&m).to_u64().unwrap();
                (r != 0).then(|| (e.clone(), r))
            })
            .collect();
        ModPoly { modulus, terms }
    }

    /// Coefficient map keyed by comma-separated exponent strings.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (e, c) in &self.terms {
            let key = e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            map.insert(key, bigint_to_json(c));
        }
        Value::Object(map)
    }

    /// Accepts either a coefficient map or an expression string over `vars`.
    pub fn from_json(v: &Value, vars: &[String]) -> Result<Poly> {
        match v {
            Value::String(s) => parse(s, vars),
            Value::Object(map) => {
                let mut p = Poly::zero(vars.len());
                for (k, c) in map {
                    let e: Vec<u32> = k
                        .split(',')
                        .map(|s| s.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent key {k:?}"))))
                        .collect::<Result<_>>()?;
                    if e.len() != vars.len() {
                        return Err(Error::DimensionMismatch { expected: vars.len(), got: e.len() });
                    }
                    p.add_term(e, bigint_from_json(c)?);
                }
                Ok(p)
            }
            other => Err(Error::Parse(format!("expected polynomial, got {other}"))),
        }
    }

    pub fn display_with<'a>(&'a self, vars: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { poly: self, vars }
    }
}

struct PolyDisplay<'a> {
    poly: &'a Poly,
    vars: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.poly.terms.iter().rev().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { self.vars[i].clone() } else { format!("{}^{}", self.vars[i], k) })
                .collect();
            let abs = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if n == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{abs}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn bigint_to_json(c: &BigInt) -> Value {
    match c.to_i64() {
        Some(v) => Value::from(v),
        None => Value::String(c.to_string()),
    }
}

pub(crate) fn bigint_from_json(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(Error::Parse(format!("expected integer, got {n}")))
            }
        }
        Value::String(s) => s.trim().parse().map_err(|_| Error::Parse(format!("expected integer, got {s:?}"))),
        other => Err(Error::Parse(format!("expected integer, got {other}"))),
    }
}

/// A polynomial with coefficients reduced modulo `modulus < 2^63`.
#[derive(Clone, Debug)]
pub struct ModPoly {
    modulus: u64,
    terms: Vec<(Vec<u32>, u64)>,
}

impl ModPoly {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eval(&self, x: &[u64]) -> u64 {
        let m = self.modulus as u128;
        let mut total: u128 = 0;
        for (e, c) in &self.terms {
            let mut t = *c as u128;
            for (&xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi as u128 % m;
                }
            }
            total = (total + t) % m;
        }
        total as u64
    }
}

/// Parse an integer polynomial expression such as `"3*(x-y)*(x+y) - t^2 + 16z^2"`.
/// Juxtaposition (`16z^2`, `2(x+y)`) means multiplication.
pub fn parse(src: &str, vars: &[String]) -> Result<Poly> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, vars };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Parse(format!("unexpected trailing input in {src:?}")));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Int(s.parse().unwrap()));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Int(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')) => {
                    acc = acc.mul(&self.power()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Int(k)) => {
                    self.pos += 1;
                    let k = k.to_u32().filter(|&k| k <= 64).ok_or_else(|| Error::Parse(format!("exponent {k} too large")))?;
                    Ok(base.pow(k))
                }
                _ => Err(Error::Parse("expected integer exponent after '^'".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly> {
        let n = self.vars.len();
        match self.peek().cloned() {
            Some(Tok::Int(k)) => {
                self.pos += 1;
                Ok(Poly::constant(k, n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
                Ok(Poly::var(i, n))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return Err(Error::Parse("missing ')'".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Variable names `x0, x1, ...`.
pub fn default_vars(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// Build a variable list from string slices.
pub fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyzt() -> Vec<String> {
        vars(&["x", "y", "z", "t"])
    }

    #[test]
    fn parse_and_expand() {
        let v = xyzt();
        let f = parse("3(x-y)(x+y) - (t-4z)(t+4z)", &v).unwrap();
        let g = parse("3x^2 - 3*y^2 - t^2 + 16*z^2", &v).unwrap();
        assert_eq!(f, g);
        assert!(f.is_homogeneous());
        assert_eq!(f.degree(), 2);
        assert_eq!(f.eval_i64(&[1, 1, 4, 16]), BigInt::zero());
    }

    #[test]
    fn parse_rejects_garbage() {
        let v = xyzt();
        assert!(parse("x + w", &v).is_err());
        assert!(parse("x + (y", &v).is_err());
        assert!(parse("x $ y", &v).is_err());
        assert!(parse("x^y", &v).is_err());
    }

    #[test]
    fn partials_and_coefficients() {
        let v = xyzt();
        let f = parse("y^2 z - (4x - z)(16x^2 + 20x z + 7z^2) - t^3", &v).unwrap();
        assert!(f.is_homogeneous());
        assert_eq!(f.degree(), 3);
        assert_eq!(f.eval_i64(&[-16, 1, 0, 64]), BigInt::zero());
        let ft = f.partial(3);
        assert_eq!(ft, parse("-3t^2", &v).unwrap());
        let cs = f.coefficients_in(3);
        assert_eq!(cs.len(), 4);
        assert_eq!(cs[3], Poly::constant(-1, 4));
    }

    #[test]
    fn json_round_trip() {
        let v = xyzt();
        let f = parse("205x^2 - 1025y^2 + 16z^2 - t^2", &v).unwrap();
        let j = f.to_json();
        assert_eq!(Poly::from_json(&j, &v).unwrap(), f);
        let s = Value::String("205x^2 - 1025y^2 + 16z^2 - t^2".into());
        assert_eq!(Poly::from_json(&s, &v).unwrap(), f);
    }

    #[test]
    fn modular_and_checked_eval_agree() {
        let v = xyzt();
        let f = parse("9x^2 - 3y^2 - t^2 + 16z^2", &v).unwrap();
        let pt = [5i64, -7, 3, 11];
        let exact = f.eval_i64(&pt);
        let m = 3u64.pow(7);
        let residues: Vec<u64> = pt.iter().map(|&a| a.rem_euclid(m as i64) as u64).collect();
        let expect = exact.mod_floor(&BigInt::from(m)).to_u64().unwrap();
        assert_eq!(f.reduce_mod(m).eval(&residues), expect);
        let wide: Vec<i128> = pt.iter().map(|&a| a as i128).collect();
        assert_eq!(BigInt::from(f.eval_i128(&wide).unwrap()), exact);
        assert_eq!(f.eval_i128(&[i128::MAX, 0, 0, 0]), None);
    }

    #[test]
    fn content_and_primitive_part() {
        let v = xyzt();
        let f = parse("-6x + 4y", &v).unwrap();
        assert_eq!(f.content(), BigInt::from(2));
        assert_eq!(f.primitive_part(), parse("3x - 2y", &v).unwrap());
    }

    #[test]
    fn display_is_reparseable() {
        let v = xyzt();
        let f = parse("-x^2 + 3y z - 7", &v).unwrap();
        let s = f.display_with(&v).to_string();
        assert_eq!(parse(&s, &v).unwrap(), f);
    }
}
