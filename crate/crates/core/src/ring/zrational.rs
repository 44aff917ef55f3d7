//! Laurent polynomials divided by products of linear factors `(z_i + z_j)`.
//!
//! Only the planar two-boundary seed and its first derivatives live here; anything else
//! must reduce back to a [`ZLaurent`] through [`ZRational::simplify`].

use std::collections::BTreeMap;

use super::laurent::{natural_key, ZLaurent};
use super::poly::MomentPoly;
use super::rational::Rational;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZRational {
    numerator: ZLaurent,
    /// Multiset of factors `(z_i + z_j)`, each pair stored in natural order.
    factors: Vec<(String, String)>,
}

fn pair(a: &str, b: &str) -> (String, String) {
    if natural_key(a) <= natural_key(b) {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn linear(f: &(String, String)) -> ZLaurent {
    ZLaurent::monomial(&[(&f.0, 1)], MomentPoly::one())
        + ZLaurent::monomial(&[(&f.1, 1)], MomentPoly::one())
}

fn product(fs: &[(String, String)]) -> ZLaurent {
    fs.iter()
        .fold(ZLaurent::from_poly(MomentPoly::one()), |acc, f| acc.mul(&linear(f)))
}

impl ZRational {
    pub fn new(numerator: ZLaurent, factors: &[(&str, &str)]) -> Self {
        let mut fs: Vec<_> = factors.iter().map(|(a, b)| pair(a, b)).collect();
        fs.sort();
        Self {
            numerator,
            factors: fs,
        }
    }

    pub fn from_laurent(f: ZLaurent) -> Self {
        Self {
            numerator: f,
            factors: vec![],
        }
    }

    pub fn numerator(&self) -> &ZLaurent {
        &self.numerator
    }

    pub fn factors(&self) -> &[(String, String)] {
        &self.factors
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self.numerator.vars().to_vec();
        for (a, b) in &self.factors {
            v.push(a.clone());
            v.push(b.clone());
        }
        v.sort_by_key(|n| natural_key(n));
        v.dedup();
        v
    }

    /// Quotient rule with every factor linear: `d/dz f_j = 1` when `z` occurs in `f_j`.
    pub fn derivative_z(&self, name: &str) -> Self {
        let hit: Vec<(String, String)> = self
            .factors
            .iter()
            .filter(|(a, b)| a == name || b == name)
            .cloned()
            .collect();
        let dn = if self.numerator.index(name).is_some() {
            self.numerator.derivative_z(name).expect("variable present")
        } else {
            ZLaurent::default()
        };
        let mut num = dn.mul(&product(&hit));
        for j in 0..hit.len() {
            let others: Vec<_> = hit
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, f)| f.clone())
                .collect();
            num = &num - &self.numerator.mul(&product(&others));
        }
        let mut factors = self.factors.clone();
        factors.extend(hit);
        factors.sort();
        Self {
            numerator: num,
            factors,
        }
    }

    pub fn derivative_rho(&self, k: u32) -> Self {
        Self {
            numerator: self.numerator.derivative_rho(k),
            factors: self.factors.clone(),
        }
    }

    pub fn mul_laurent(&self, f: &ZLaurent) -> Self {
        Self {
            numerator: self.numerator.mul(f),
            factors: self.factors.clone(),
        }
    }

    /// Sum over the least common multiple of the two denominators.
    pub fn add(&self, other: &Self) -> Self {
        let count = |fs: &[(String, String)]| {
            let mut m: BTreeMap<(String, String), usize> = BTreeMap::new();
            for f in fs {
                *m.entry(f.clone()).or_default() += 1;
            }
            m
        };
        let (ca, cb) = (count(&self.factors), count(&other.factors));
        let mut lcm = ca.clone();
        for (f, &n) in &cb {
            let e = lcm.entry(f.clone()).or_default();
            *e = (*e).max(n);
        }
        let missing = |own: &BTreeMap<(String, String), usize>| -> Vec<(String, String)> {
            lcm.iter()
                .flat_map(|(f, &n)| {
                    std::iter::repeat_n(f.clone(), n - own.get(f).copied().unwrap_or(0))
                })
                .collect()
        };
        let na = self.numerator.mul(&product(&missing(&ca)));
        let nb = other.numerator.mul(&product(&missing(&cb)));
        let factors = lcm
            .into_iter()
            .flat_map(|(f, n)| std::iter::repeat_n(f, n))
            .collect();
        Self {
            numerator: na + nb,
            factors,
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self {
            numerator: self.numerator.scale(r),
            factors: self.factors.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        factors.sort();
        Self {
            numerator: self.numerator.mul(&other.numerator),
            factors,
        }
    }

    /// Divides by one more factor `(a + b)` without touching the numerator.
    pub fn with_factor(&self, a: &str, b: &str) -> Self {
        let mut factors = self.factors.clone();
        factors.push(pair(a, b));
        factors.sort();
        Self {
            numerator: self.numerator.clone(),
            factors,
        }
    }

    /// Exact division of the numerator by `(x - y)`.
    pub fn div_difference(&self, x: &str, y: &str) -> Result<Self> {
        Ok(Self {
            numerator: divide_linear(&self.numerator, x, y, -1)?,
            factors: self.factors.clone(),
        })
    }

    /// The numerator after rewriting over `factors`, which must contain the own factors
    /// as a sub-multiset.
    pub fn numerator_over(&self, factors: &[(String, String)]) -> Result<ZLaurent> {
        let mut rest: Vec<(String, String)> = factors.to_vec();
        for f in &self.factors {
            let i = rest
                .iter()
                .position(|g| g == f)
                .ok_or(Error::SimplificationFailure)?;
            rest.swap_remove(i);
        }
        Ok(self.numerator.mul(&product(&rest)))
    }

    /// Cancels every linear factor exactly, failing when a division leaves a remainder.
    pub fn simplify(&self) -> Result<ZLaurent> {
        let mut num = self.numerator.clone();
        for f in &self.factors {
            num = divide_linear(&num, &f.0, &f.1, 1)?;
        }
        Ok(num)
    }
}

/// Exact quotient `f / (x + sign*y)` treating `f` as a polynomial in `x` after clearing
/// poles.
fn divide_linear(f: &ZLaurent, x: &str, y: &str, sign: i64) -> Result<ZLaurent> {
    if f.is_zero() {
        return Ok(f.clone());
    }
    let mut vars: Vec<String> = f.vars().to_vec();
    for v in [x, y] {
        if !vars.iter().any(|w| w == v) {
            vars.push(v.to_string());
        }
    }
    vars.sort_by_key(|n| natural_key(n));
    let f = f.extend_vars(&vars);
    let ix = f.index(x).expect("present");
    // Slice by the exponent of x.
    let mut slices: BTreeMap<i32, ZLaurent> = BTreeMap::new();
    for (e, c) in f.terms() {
        let mut rest: Vec<(&str, i32)> = vars
            .iter()
            .zip(e)
            .enumerate()
            .filter(|&(i, _)| i != ix)
            .map(|(_, (v, &k))| (v.as_str(), k))
            .collect();
        rest.push((y, 0));
        let term = ZLaurent::monomial(&rest, c.clone());
        let entry = slices.entry(e[ix]).or_default();
        *entry = &*entry + &term;
    }
    let lo = *slices.keys().next().expect("nonempty");
    let hi = *slices.keys().next_back().expect("nonempty");
    let y_lin = ZLaurent::monomial(&[(y, 1)], MomentPoly::constant(Rational::from_integer(sign.into())));
    // Synthetic division by (x + sign*y) from the top degree down.
    let mut q: BTreeMap<i32, ZLaurent> = BTreeMap::new();
    let mut carry = ZLaurent::default();
    for d in (lo..=hi).rev() {
        let a = slices.get(&d).cloned().unwrap_or_default();
        let cur = &a - &y_lin.mul(&carry);
        if d == lo {
            if !cur.trim_vars().is_zero() {
                return Err(Error::SimplificationFailure);
            }
            break;
        }
        q.insert(d - 1, cur.clone());
        carry = cur;
    }
    let mut out = ZLaurent::default();
    for (d, c) in q {
        out = out + c.shift(x, d);
    }
    Ok(out.extend_vars(&vars).trim_vars())
}
