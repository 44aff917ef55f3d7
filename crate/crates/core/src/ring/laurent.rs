//! Laurent polynomials in named boundary variables with moment-polynomial coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;

use super::poly::{MomentPoly, VarNames};
use super::rational::{int, pow, Rational};
use crate::error::{Error, Result};

/// Orders `z2` before `z10`.
pub fn natural_key(name: &str) -> (String, u64, String) {
    let split = name
        .find(|c: char| c.is_ascii_digit())
        .unwrap_or(name.len());
    let (head, tail) = name.split_at(split);
    let digits: String = tail.chars().take_while(|c| c.is_ascii_digit()).collect();
    let rest = tail[digits.len()..].to_string();
    (head.to_string(), digits.parse().unwrap_or(0), rest)
}

fn sorted_union(a: &[String], b: &[String]) -> Vec<String> {
    let mut out: Vec<String> = a.iter().chain(b).cloned().collect();
    out.sort_by_key(|n| natural_key(n));
    out.dedup();
    out
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ZLaurent {
    vars: Vec<String>,
    terms: BTreeMap<Vec<i32>, MomentPoly>,
}

impl ZLaurent {
    pub fn zero(vars: &[&str]) -> Self {
        let mut v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        v.sort_by_key(|n| natural_key(n));
        v.dedup();
        Self {
            vars: v,
            terms: BTreeMap::new(),
        }
    }

    /// A variable-free Laurent polynomial.
    pub fn from_poly(p: MomentPoly) -> Self {
        let mut out = Self::default();
        out.insert(vec![], p);
        out
    }

    /// `c * prod z_i^{e_i}` with the variables given in any order.
    pub fn monomial(vars_exps: &[(&str, i32)], c: MomentPoly) -> Self {
        let names: Vec<&str> = vars_exps.iter().map(|p| p.0).collect();
        let mut out = Self::zero(&names);
        let mut exps = vec![0; out.vars.len()];
        for &(n, e) in vars_exps {
            let i = out.index(n).expect("present");
            exps[i] += e;
        }
        out.insert(exps, c);
        out
    }

    /// Builds from exponent vectors listed against `vars` in the given order.
    pub fn from_exponents(
        vars: &[String],
        terms: impl IntoIterator<Item = (Vec<i32>, MomentPoly)>,
    ) -> Self {
        let mut sorted: Vec<String> = vars.to_vec();
        sorted.sort_by_key(|n| natural_key(n));
        sorted.dedup();
        assert_eq!(sorted.len(), vars.len(), "duplicate variable names");
        let perm: Vec<usize> = sorted
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("present"))
            .collect();
        let mut out = Self {
            vars: sorted,
            terms: BTreeMap::new(),
        };
        for (e, c) in terms {
            out.insert(perm.iter().map(|&j| e[j]).collect(), c);
        }
        out
    }

    fn insert(&mut self, exps: Vec<i32>, c: MomentPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(v) => {
                *v += &c;
                if v.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn index_or_err(&self, name: &str) -> Result<usize> {
        self.index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &MomentPoly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[i32]) -> MomentPoly {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    /// The coefficient polynomial when no boundary variables remain.
    pub fn to_moment_poly(&self) -> Option<MomentPoly> {
        if !self.vars.is_empty() {
            return None;
        }
        Some(self.coefficient(&[]))
    }

    /// Re-expresses `self` over a superset of its variables.
    pub fn extend_vars(&self, vars: &[String]) -> Self {
        if vars == self.vars.as_slice() {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("superset"))
            .collect();
        let mut out = Self {
            vars: vars.to_vec(),
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            let mut ne = vec![0; vars.len()];
            for (i, &x) in e.iter().enumerate() {
                ne[map[i]] = x;
            }
            out.terms.insert(ne, c.clone());
        }
        out
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let vars = sorted_union(&self.vars, &other.vars);
        (self.extend_vars(&vars), other.extend_vars(&vars))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let mut out = Self {
            vars: a.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e: Vec<i32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }

    pub fn scale_poly(&self, p: &MomentPoly) -> Self {
        let mut out = Self {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            out.insert(e.clone(), c * p);
        }
        out
    }

    pub fn scale(&self, r: &Rational) -> Self {
        self.map_coeffs(|c| c.scale(r))
    }

    pub fn map_coeffs(&self, f: impl Fn(&MomentPoly) -> MomentPoly) -> Self {
        let mut out = Self {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            out.insert(e.clone(), f(c));
        }
        out
    }

    /// Multiplies by `name^e`, adding the variable if needed.
    pub fn shift(&self, name: &str, e: i32) -> Self {
        self.mul(&Self::monomial(&[(name, e)], MomentPoly::one()))
    }

    pub fn derivative_z(&self, name: &str) -> Result<Self> {
        let i = self.index_or_err(name)?;
        let mut out = Self {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            if e[i] != 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                out.insert(ne, c.scale(&int(e[i] as i64)));
            }
        }
        Ok(out)
    }

    pub fn derivative_rho(&self, k: u32) -> Self {
        self.map_coeffs(|c| c.derivative(k))
    }

    /// Coefficient of `name^-1`, with `name` removed.
    pub fn residue(&self, name: &str) -> Result<Self> {
        let i = self.index_or_err(name)?;
        let mut vars = self.vars.clone();
        vars.remove(i);
        let mut out = Self {
            vars,
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            if e[i] == -1 {
                let mut ne = e.clone();
                ne.remove(i);
                out.insert(ne, c.clone());
            }
        }
        Ok(out)
    }

    /// Renames variables; targets may collide, in which case exponents merge.
    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let i = self.index_or_err(from)?;
        let mut out = Self::default();
        for (e, c) in &self.terms {
            let mut pairs: Vec<(&str, i32)> = self
                .vars
                .iter()
                .zip(e)
                .enumerate()
                .map(|(j, (v, &x))| (if j == i { to } else { v.as_str() }, x))
                .collect();
            if pairs.is_empty() {
                pairs.push((to, 0));
            }
            out = out + Self::monomial(&pairs, c.clone());
        }
        let mut vars: Vec<String> = self
            .vars
            .iter()
            .map(|v| if v == from { to.to_string() } else { v.clone() })
            .collect();
        vars.sort_by_key(|n| natural_key(n));
        vars.dedup();
        Ok(out.extend_vars(&vars))
    }

    /// Substitutes the exact value `x` for `name`.
    pub fn eval_var(&self, name: &str, x: &Rational) -> Result<Self> {
        let i = self.index_or_err(name)?;
        if x.is_zero() && self.terms.keys().any(|e| e[i] < 0) {
            return Err(Error::CoincidentPoints);
        }
        let mut vars = self.vars.clone();
        vars.remove(i);
        let mut out = Self {
            vars,
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let k = ne.remove(i);
            out.insert(ne, c.scale(&pow(x, k)));
        }
        Ok(out)
    }

    /// Full exact evaluation at named points and rational moments.
    pub fn eval_rational(&self, points: &[(&str, Rational)], rho: &[Rational]) -> Result<Rational> {
        let mut cur = self.clone();
        for (n, x) in points {
            cur = cur.eval_var(n, x)?;
        }
        if !cur.vars.is_empty() {
            return Err(Error::UnknownVariable(cur.vars.join(",")));
        }
        cur.coefficient(&[]).eval_rational(rho)
    }

    /// `(min, max)` exponent of `name` over all terms.
    pub fn exponent_range(&self, name: &str) -> Option<(i32, i32)> {
        let i = self.index(name)?;
        let mut it = self.terms.keys().map(|e| e[i]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    pub fn is_odd_in(&self, name: &str) -> bool {
        match self.index(name) {
            Some(i) => self.terms.keys().all(|e| e[i] % 2 != 0),
            None => false,
        }
    }

    pub fn is_even_in(&self, name: &str) -> bool {
        match self.index(name) {
            Some(i) => self.terms.keys().all(|e| e[i] % 2 == 0),
            None => true,
        }
    }

    /// Drops variables that occur only with exponent zero.
    pub fn trim_vars(&self) -> Self {
        let keep: Vec<usize> = (0..self.vars.len())
            .filter(|&i| self.terms.keys().any(|e| e[i] != 0))
            .collect();
        let mut out = Self {
            vars: keep.iter().map(|&i| self.vars[i].clone()).collect(),
            terms: BTreeMap::new(),
        };
        for (e, c) in &self.terms {
            out.insert(keep.iter().map(|&i| e[i]).collect(), c.clone());
        }
        out
    }

    pub fn render(&self, names: &VarNames) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(e, c)| {
                let zs: Vec<String> = self
                    .vars
                    .iter()
                    .zip(e)
                    .filter(|(_, &x)| x != 0)
                    .map(|(v, &x)| if x == 1 { v.clone() } else { format!("{v}^{x}") })
                    .collect();
                let coeff = c.render(names);
                if zs.is_empty() {
                    format!("({coeff})")
                } else {
                    format!("({coeff})*{}", zs.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for ZLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&VarNames::rho()))
    }
}

impl Add for ZLaurent {
    type Output = ZLaurent;
    fn add(self, rhs: ZLaurent) -> ZLaurent {
        &self + &rhs
    }
}

impl<'a> Add<&'a ZLaurent> for &'a ZLaurent {
    type Output = ZLaurent;
    fn add(self, rhs: &ZLaurent) -> ZLaurent {
        let (mut a, b) = self.aligned(rhs);
        for (e, c) in b.terms {
            a.insert(e, c);
        }
        a
    }
}

impl<'a> Sub<&'a ZLaurent> for &'a ZLaurent {
    type Output = ZLaurent;
    fn sub(self, rhs: &ZLaurent) -> ZLaurent {
        self + &(-rhs)
    }
}

impl Sub for ZLaurent {
    type Output = ZLaurent;
    fn sub(self, rhs: ZLaurent) -> ZLaurent {
        &self - &rhs
    }
}

impl Neg for &ZLaurent {
    type Output = ZLaurent;
    fn neg(self) -> ZLaurent {
        self.map_coeffs(|c| -c)
    }
}

impl Neg for ZLaurent {
    type Output = ZLaurent;
    fn neg(self) -> ZLaurent {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::rational::rat;

    fn c(n: i64) -> MomentPoly {
        MomentPoly::constant(int(n))
    }

    #[test]
    fn exponent_addition() {
        let a = ZLaurent::monomial(&[("z", -3)], c(1));
        let b = ZLaurent::monomial(&[("z", -5)], c(1));
        assert_eq!(a.mul(&b), ZLaurent::monomial(&[("z", -8)], c(1)));
    }

    #[test]
    fn residues() {
        let f = ZLaurent::monomial(&[("z", -1)], c(1));
        assert_eq!(f.residue("z").unwrap().to_moment_poly(), Some(c(1)));
        let g = ZLaurent::monomial(&[("z", -2)], c(1))
            + ZLaurent::monomial(&[("z", -1)], MomentPoly::var(1).scale(&int(3)));
        assert_eq!(
            g.residue("z").unwrap().to_moment_poly(),
            Some(MomentPoly::var(1).scale(&int(3)))
        );
        let h = ZLaurent::monomial(&[("z", 4)], c(1)).mul(&ZLaurent::monomial(&[("z", -5)], c(1)));
        assert_eq!(h.residue("z").unwrap().to_moment_poly(), Some(c(1)));
        assert_eq!(
            f.residue("w"),
            Err(Error::UnknownVariable("w".to_string()))
        );
    }

    #[test]
    fn variables_unify_by_name_in_natural_order() {
        let a = ZLaurent::monomial(&[("z10", -3)], c(1));
        let b = ZLaurent::monomial(&[("z2", -3)], c(1));
        let s = a + b;
        assert_eq!(s.vars(), &["z2".to_string(), "z10".to_string()]);
    }

    #[test]
    fn rename_merges_exponents() {
        let f = ZLaurent::monomial(&[("z1", -1), ("z2", -3)], c(2));
        let g = f.rename("z2", "z1").unwrap();
        assert_eq!(g, ZLaurent::monomial(&[("z1", -4)], c(2)));
    }

    #[test]
    fn exact_evaluation() {
        let f = ZLaurent::monomial(&[("z1", -3), ("z2", -1)], MomentPoly::var(1));
        let v = f
            .eval_rational(&[("z1", rat(1, 2)), ("z2", int(3))], &[int(1), int(5)])
            .unwrap();
        assert_eq!(v, rat(40, 3));
    }
}
