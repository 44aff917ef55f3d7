//! Sparse polynomials in the moments with an optional linear `log(r0)` term.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;

use super::monomial::MomentMonomial;
use super::rational::{format_rational, int, parse_rational, pow, to_f64, Rational};
use crate::error::{Error, Result};

/// Hash-map accumulator used by hot loops before canonicalising into a [`MomentPoly`].
#[derive(Default, Clone, Debug)]
pub struct Accumulator {
    terms: FxHashMap<MomentMonomial, Rational>,
    log_coeff: Rational,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, m: MomentMonomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => *v += c,
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_poly(&mut self, p: &MomentPoly) {
        for (m, c) in &p.terms {
            self.add_term(m.clone(), c.clone());
        }
        self.log_coeff += &p.log_coeff;
    }

    /// Adds `c * m * p`.
    pub fn add_scaled(&mut self, p: &MomentPoly, m: &MomentMonomial, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (pm, pc) in &p.terms {
            self.add_term(pm.mul(m), pc * c);
        }
    }

    pub fn merge(mut self, other: Accumulator) -> Self {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, std::mem::take(&mut self))
        };
        for (m, c) in small.terms {
            big.add_term(m, c);
        }
        big.log_coeff += small.log_coeff;
        big
    }

    pub fn finish(self) -> MomentPoly {
        MomentPoly {
            terms: self.terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            log_coeff: self.log_coeff,
        }
    }
}

/// `sum c_m * m + log_coeff * log(r0)` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct MomentPoly {
    terms: BTreeMap<MomentMonomial, Rational>,
    log_coeff: Rational,
}

impl MomentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(MomentMonomial::one(), c)
    }

    pub fn term(m: MomentMonomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self {
            terms,
            log_coeff: Rational::zero(),
        }
    }

    /// The variable `r_k`.
    pub fn var(k: u32) -> Self {
        Self::term(MomentMonomial::var(k), Rational::one())
    }

    /// `c * log(r0)`.
    pub fn log_r0(c: Rational) -> Self {
        Self {
            terms: BTreeMap::new(),
            log_coeff: c,
        }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (MomentMonomial, Rational)>) -> Self {
        let mut acc = Accumulator::new();
        for (m, c) in it {
            acc.add_term(m, c);
        }
        acc.finish()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MomentMonomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.log_coeff.is_zero()
    }

    pub fn log_coeff(&self) -> &Rational {
        &self.log_coeff
    }

    pub fn has_log(&self) -> bool {
        !self.log_coeff.is_zero()
    }

    pub fn coefficient(&self, m: &MomentMonomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// A pure constant (no monomials other than `1`, no log).
    pub fn as_constant(&self) -> Option<Rational> {
        if self.has_log() {
            return None;
        }
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn max_index(&self) -> u32 {
        self.terms.keys().map(|m| m.max_index()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
            log_coeff: &self.log_coeff * c,
        }
    }

    /// Multiplies every monomial by `m`; a log term makes this an error unless `m = 1`.
    pub fn mul_monomial(&self, m: &MomentMonomial, c: &Rational) -> Result<Self> {
        if self.has_log() && !m.is_one() {
            return Err(Error::LogProduct);
        }
        if c.is_zero() {
            return Ok(Self::zero());
        }
        Ok(Self {
            terms: self
                .terms
                .iter()
                .map(|(pm, v)| (pm.mul(m), v * c))
                .collect(),
            log_coeff: &self.log_coeff * c,
        })
    }

    /// Exact division by a monomial.
    pub fn div_monomial(&self, m: &MomentMonomial) -> Result<Self> {
        if self.has_log() && !m.is_one() {
            return Err(Error::LogProduct);
        }
        let mut terms = BTreeMap::new();
        for (pm, v) in &self.terms {
            terms.insert(pm.div(m).ok_or(Error::NonDivisible)?, v.clone());
        }
        Ok(Self {
            terms,
            log_coeff: self.log_coeff.clone(),
        })
    }

    /// Product; a log factor is only allowed against a pure constant.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let log_times = |log: &Rational, p: &Self| -> Result<Rational> {
            if log.is_zero() {
                return Ok(Rational::zero());
            }
            if p.has_log() {
                return Err(Error::LogProduct);
            }
            p.as_constant().map(|c| log * c).ok_or(Error::LogProduct)
        };
        let log_coeff = log_times(&self.log_coeff, other)? + log_times(&other.log_coeff, self)?;
        let mut acc = Accumulator::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                acc.add_term(ma.mul(mb), ca * cb);
            }
        }
        let mut out = acc.finish();
        out.log_coeff = log_coeff;
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    /// Formal `d/dr_k`, with `d log(r0) / d r0 = 1/r0`.
    pub fn derivative(&self, k: u32) -> Self {
        let mut acc = Accumulator::new();
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(k) {
                acc.add_term(dm, c * int(e));
            }
        }
        if k == 0 && self.has_log() {
            acc.add_term(MomentMonomial::r0_power(-1), self.log_coeff.clone());
        }
        acc.finish()
    }

    /// Common weight of all monomials (zero for constants, including the zero polynomial).
    pub fn weight(&self) -> Result<u32> {
        if self.has_log() {
            return Err(Error::LogTerm);
        }
        let mut ws = self.terms.keys().map(|m| m.weight());
        let first = ws.next().unwrap_or(0);
        if ws.all(|w| w == first) {
            Ok(first)
        } else {
            Err(Error::NotHomogeneous)
        }
    }

    /// Replaces every `r_k` by `map[k]`.
    pub fn substitute(&self, map: &BTreeMap<u32, MomentPoly>) -> Result<Self> {
        let image = |k: u32| map.get(&k).ok_or(Error::MissingImage(k));
        // Only a pure power c*r0^a can be inverted inside this ring.
        let unit_inverse = || -> Result<(MomentMonomial, Rational)> {
            let img = image(0)?;
            if img.has_log() || img.terms.len() != 1 {
                return Err(Error::NonUnitSubstitution);
            }
            let (m, c) = img.terms.iter().next().expect("one term");
            if !m.is_r0_power() {
                return Err(Error::NonUnitSubstitution);
            }
            Ok((MomentMonomial::r0_power(-m.e0()), c.recip()))
        };
        let mut power_cache: BTreeMap<(u32, u32), MomentPoly> = BTreeMap::new();
        let mut power = |k: u32, e: u32| -> Result<MomentPoly> {
            if let Some(p) = power_cache.get(&(k, e)) {
                return Ok(p.clone());
            }
            let p = image(k)?.pow(e)?;
            power_cache.insert((k, e), p.clone());
            Ok(p)
        };
        let mut acc = Accumulator::new();
        for (m, c) in &self.terms {
            let mut t = MomentPoly::constant(c.clone());
            if m.e0() > 0 {
                t = t.checked_mul(&power(0, m.e0() as u32)?)?;
            } else if m.e0() < 0 {
                let (inv, ic) = unit_inverse()?;
                let n = m.e0().unsigned_abs() as i32;
                let inv_pow = MomentMonomial::r0_power(inv.e0() * n);
                t = t.mul_monomial(&inv_pow, &pow(&ic, n))?;
            }
            for &(k, e) in m.higher() {
                t = t.checked_mul(&power(k, e)?)?;
            }
            acc.add_poly(&t);
        }
        let mut out = acc.finish();
        if self.has_log() {
            let img = image(0)?;
            if *img != MomentPoly::var(0) {
                return Err(Error::LogSubstitution);
            }
            out.log_coeff += &self.log_coeff;
        }
        Ok(out)
    }

    /// Multiplies the coefficient of each monomial by `prod_k s(k)^{e_k}`, i.e. substitutes
    /// `r_k -> s(k) r_k` for every `k >= 1` while leaving `r0` untouched.
    pub fn rescale(&self, s: impl Fn(u32) -> Rational) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let f = m
                        .higher()
                        .iter()
                        .fold(c.clone(), |acc, &(k, e)| acc * pow(&s(k), e as i32));
                    (m.clone(), f)
                })
                .collect(),
            log_coeff: self.log_coeff.clone(),
        }
    }

    /// Exact value at rational moments `rho[k]`; a log term cannot be evaluated exactly.
    pub fn eval_rational(&self, rho: &[Rational]) -> Result<Rational> {
        if self.has_log() {
            return Err(Error::LogTerm);
        }
        let at = |k: u32| {
            rho.get(k as usize)
                .ok_or_else(|| Error::UnknownVariable(format!("r{k}")))
        };
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            if m.e0() != 0 {
                v *= pow(at(0)?, m.e0());
            }
            for &(k, e) in m.higher() {
                v *= pow(at(k)?, e as i32);
            }
            total += v;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, rho: &[f64]) -> f64 {
        let mut total = to_f64(&self.log_coeff) * rho[0].ln();
        for (m, c) in &self.terms {
            let mut v = to_f64(c) * rho[0].powi(m.e0());
            for &(k, e) in m.higher() {
                v *= rho[k as usize].powi(e as i32);
            }
            total += v;
        }
        total
    }

    pub fn render(&self, names: &VarNames) -> String {
        let mut parts: Vec<(bool, String)> = self
            .terms
            .iter()
            .map(|(m, c)| (c.is_negative(), render_term(&c.abs(), m, names)))
            .collect();
        if self.has_log() {
            let body = render_coefficient_with(
                &self.log_coeff.abs(),
                format!("log({})", names.unit),
            );
            parts.push((self.log_coeff.is_negative(), body));
        }
        if parts.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (neg, body)) in parts.into_iter().enumerate() {
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(&body);
        }
        out
    }

    /// Inverse of [`MomentPoly::render`].
    pub fn parse(text: &str, names: &VarNames) -> Result<Self> {
        let text = text.trim();
        if text == "0" {
            return Ok(Self::zero());
        }
        let mut acc = Accumulator::new();
        for (neg, body) in split_signed_terms(text) {
            let sign = if neg { -Rational::one() } else { Rational::one() };
            let log_prefix = format!("log({})", names.unit);
            if let Some(c) = strip_log(&body, &log_prefix) {
                acc.log_coeff += sign * parse_coefficient(&c)?;
                continue;
            }
            let (c, m) = parse_term(&body, names)?;
            acc.add_term(m, sign * c);
        }
        Ok(acc.finish())
    }
}

fn render_coefficient_with(c: &Rational, body: String) -> String {
    if c.is_one() {
        body
    } else {
        format!("{}*{}", format_rational(c), body)
    }
}

fn factor(name: &str, e: i64) -> String {
    if e == 1 {
        name.to_string()
    } else {
        format!("{name}^{e}")
    }
}

fn render_term(c: &Rational, m: &MomentMonomial, names: &VarNames) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let e0 = m.e0() as i64;
    if !names.fraction && e0 != 0 {
        num.push(factor(&names.unit, e0));
    }
    for &(k, e) in m.higher() {
        num.push(factor(&(names.slot)(k), e as i64));
    }
    // Fraction style puts the unit after the other factors.
    if names.fraction && e0 > 0 {
        num.push(factor(&names.unit, e0));
    }
    if names.fraction && e0 < 0 {
        den.push(factor(&names.unit, -e0));
    }
    let mut out = if num.is_empty() {
        format_rational(c)
    } else {
        render_coefficient_with(c, num.join("*"))
    };
    for d in den {
        out.push('/');
        out.push_str(&d);
    }
    out
}

fn split_signed_terms(text: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let (mut neg, mut rest) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    loop {
        let plus = rest.find(" + ");
        let minus = rest.find(" - ");
        let next = match (plus, minus) {
            (Some(p), Some(m)) => Some(p.min(m)),
            (p, m) => p.or(m),
        };
        match next {
            None => {
                out.push((neg, rest.trim().to_string()));
                return out;
            }
            Some(i) => {
                out.push((neg, rest[..i].trim().to_string()));
                neg = &rest[i..i + 3] == " - ";
                rest = &rest[i + 3..];
            }
        }
    }
}

fn strip_log(body: &str, log: &str) -> Option<String> {
    if body == log {
        return Some("1".into());
    }
    body.strip_suffix(log)
        .and_then(|c| c.strip_suffix('*'))
        .map(str::to_string)
}

fn parse_coefficient(s: &str) -> Result<Rational> {
    parse_rational(s)
}

fn parse_term(body: &str, names: &VarNames) -> Result<(Rational, MomentMonomial)> {
    // Leading coefficient is `p` or `p/q` with digits only.
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut coeff = Rational::one();
    if i > 0 {
        let mut j = i;
        if j < bytes.len() && bytes[j] == b'/' {
            let mut k = j + 1;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            if k > j + 1 {
                j = k;
            }
        }
        coeff = parse_rational(&body[..j])?;
        i = j;
    }
    let rest = &body[i..];
    let mut mono = MomentMonomial::one();
    if rest.is_empty() {
        return Ok((coeff, mono));
    }
    // Split into (op, factor) pairs at top-level `*` and `/`.
    let mut ops: Vec<(char, String)> = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut op = if i == 0 { '*' } else { '\0' };
    for ch in rest.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch)
            }
            ')' => {
                depth -= 1;
                cur.push(ch)
            }
            '*' | '/' if depth == 0 => {
                if op != '\0' {
                    ops.push((op, std::mem::take(&mut cur)));
                }
                op = ch;
            }
            _ => cur.push(ch),
        }
    }
    if op == '\0' {
        return Err(Error::Parse(format!("malformed term `{body}`")));
    }
    ops.push((op, cur));
    for (op, f) in ops {
        let (name, e) = match f.rsplit_once('^') {
            Some((n, e)) if !n.ends_with('(') => (
                n.to_string(),
                e.parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad exponent in `{f}`")))?,
            ),
            _ => (f.clone(), 1),
        };
        let e = if op == '/' { -e } else { e };
        let k = names
            .index_of(&name)
            .ok_or_else(|| Error::Parse(format!("unknown variable `{name}`")))?;
        let factor = if k == 0 {
            MomentMonomial::r0_power(e as i32)
        } else {
            if e < 0 {
                return Err(Error::Parse(format!("negative power of `{name}`")));
            }
            MomentMonomial::new(0, [(k, e as u32)])
        };
        mono = mono.mul(&factor);
    }
    Ok((coeff, mono))
}

/// How slot `0` (the unit variable) and slots `k >= 1` are spelled in text output.
#[derive(Clone)]
pub struct VarNames {
    pub unit: String,
    pub slot: fn(u32) -> String,
    /// Write negative unit powers as a trailing division (`t2^3/T0^5`).
    pub fraction: bool,
}

impl VarNames {
    pub fn rho() -> Self {
        Self {
            unit: "r0".into(),
            slot: |k| format!("r{k}"),
            fraction: false,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        if name == self.unit {
            return Some(0);
        }
        (1..=4096).find(|&k| (self.slot)(k) == name)
    }
}

impl fmt::Display for MomentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&VarNames::rho()))
    }
}

impl<'a> Add<&'a MomentPoly> for &'a MomentPoly {
    type Output = MomentPoly;
    fn add(self, rhs: &MomentPoly) -> MomentPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for MomentPoly {
    type Output = MomentPoly;
    fn add(mut self, rhs: MomentPoly) -> MomentPoly {
        self += &rhs;
        self
    }
}

impl AddAssign<&MomentPoly> for MomentPoly {
    fn add_assign(&mut self, rhs: &MomentPoly) {
        for (m, c) in &rhs.terms {
            let entry = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(m);
            }
        }
        self.log_coeff += &rhs.log_coeff;
    }
}

impl SubAssign<&MomentPoly> for MomentPoly {
    fn sub_assign(&mut self, rhs: &MomentPoly) {
        *self += &(-rhs);
    }
}

impl<'a> Sub<&'a MomentPoly> for &'a MomentPoly {
    type Output = MomentPoly;
    fn sub(self, rhs: &MomentPoly) -> MomentPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for MomentPoly {
    type Output = MomentPoly;
    fn sub(mut self, rhs: MomentPoly) -> MomentPoly {
        self -= &rhs;
        self
    }
}

impl Neg for &MomentPoly {
    type Output = MomentPoly;
    fn neg(self) -> MomentPoly {
        self.scale(&-Rational::one())
    }
}

impl Neg for MomentPoly {
    type Output = MomentPoly;
    fn neg(self) -> MomentPoly {
        -&self
    }
}

/// Panics on a forbidden log product; use [`MomentPoly::checked_mul`] when logs may occur.
impl<'a> Mul<&'a MomentPoly> for &'a MomentPoly {
    type Output = MomentPoly;
    fn mul(self, rhs: &MomentPoly) -> MomentPoly {
        self.checked_mul(rhs).expect("log(r0) product")
    }
}

impl std::iter::Sum for MomentPoly {
    fn sum<I: Iterator<Item = MomentPoly>>(iter: I) -> MomentPoly {
        let mut acc = Accumulator::new();
        for p in iter {
            acc.add_poly(&p);
        }
        acc.finish()
    }
}
