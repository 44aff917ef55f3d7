//! The linear integral operator of the loop equations, its residue inverse, an
//! independent genus recursion for the one-point functions and Dyson-Schwinger residuals.
//!
//! Everything is in units `2 lambda = 1`, so `lambda = 1/2` wherever it appears bare.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bell::CoefficientTable;
use crate::boundary::{correlator, diagonal_two_point, planar_diagonal, planar_two_point, zvar};
use crate::error::{Error, Result};
use crate::ring::rational::{factorial, int, rat};
use crate::ring::{MomentMonomial, MomentPoly, Rational, ZLaurent, ZRational};

/// `K(1/z^{3+2n}) = sum_{k<=n} r_k / z^{2n+2-2k}` and `K(1/z) = 1`.
pub fn khat_apply(f: &ZLaurent, var: &str) -> Result<ZLaurent> {
    if f.is_zero() {
        return Ok(f.clone());
    }
    let Some(i) = f.index(var) else {
        return Err(Error::UnsupportedExponent(0));
    };
    let vars = f.vars().to_vec();
    let mut out = Vec::new();
    for (e, c) in f.terms() {
        let k = e[i];
        let with = |x: i32| {
            let mut ne = e.clone();
            ne[i] = x;
            ne
        };
        if k == -1 {
            out.push((with(0), c.clone()));
        } else if k <= -3 && k % 2 != 0 {
            let n = (-k - 3) / 2;
            for j in 0..=n {
                out.push((with(-(2 * n + 2 - 2 * j)), c * &MomentPoly::var(j as u32)));
            }
        } else {
            return Err(Error::UnsupportedExponent(k));
        }
    }
    Ok(ZLaurent::from_exponents(&vars, out))
}

/// Inverse of `f -> z^2 K(f/z)` up to sign: `z^-2k -> -(1/r0) sum_j S_j/j! z^{-(2k-2j+2)}`.
pub fn residue_invert(f: &ZLaurent, var: &str) -> Result<ZLaurent> {
    if f.is_zero() {
        return Ok(f.clone());
    }
    let vars_in = f.vars().to_vec();
    let (f, i) = match f.index(var) {
        Some(i) => (f.clone(), i),
        None => {
            let mut vars = vars_in.clone();
            vars.push(var.to_string());
            vars.sort_by_key(|n| crate::ring::laurent::natural_key(n));
            let g = f.extend_vars(&vars);
            let i = g.index(var).expect("added");
            (g, i)
        }
    };
    let kmax = f.terms().map(|(e, _)| (-e[i]).max(0) / 2).max().unwrap_or(0) as usize;
    let table = CoefficientTable::shared(kmax);
    let vars = f.vars().to_vec();
    let mut out = Vec::new();
    for (e, c) in f.terms() {
        let x = e[i];
        if x % 2 != 0 {
            return Err(Error::OddInput);
        }
        if x > 0 {
            return Err(Error::UnboundedInput);
        }
        let k = (-x / 2) as usize;
        for j in 0..=k {
            let coeff = table
                .s(j)
                .mul_monomial(&MomentMonomial::r0_power(-1), &-factorial(j as u64).recip())?;
            let mut ne = e.clone();
            ne[i] = -(2 * (k - j) as i32 + 2);
            out.push((ne, c * &coeff));
        }
    }
    Ok(ZLaurent::from_exponents(&vars, out))
}

/// `K(z, w) = -(1/(z^2 w r0)) sum_{n,m} w^{2m+2n} S_m / (m! z^{2n})`.
#[derive(Clone, Debug)]
pub struct KernelExpansion {
    table: Arc<CoefficientTable>,
    mmax: usize,
}

impl KernelExpansion {
    /// Expansion valid through `S_mmax`.
    pub fn new(mmax: usize) -> Self {
        Self {
            table: CoefficientTable::shared(mmax),
            mmax,
        }
    }

    /// Coefficient of `w^a z^b`.
    pub fn coefficient(&self, a: i32, b: i32) -> Result<MomentPoly> {
        if a < -1 || a % 2 == 0 || b > -2 || b % 2 != 0 {
            return Ok(MomentPoly::zero());
        }
        let n = (-b - 2) / 2;
        let m = (a + 1) / 2 - n;
        if m < 0 {
            return Ok(MomentPoly::zero());
        }
        let m = m as usize;
        if m > self.mmax {
            return Err(Error::GenusOutOfRange {
                g: m as u32,
                min: 0,
                max: self.mmax as u32,
            });
        }
        Ok(self
            .table
            .s(m)
            .mul_monomial(&MomentMonomial::r0_power(-1), &-factorial(m as u64).recip())?)
    }

    /// All terms with `w`-exponent at most `max_w`, as a Laurent polynomial in `z` and `w`.
    pub fn truncated(&self, z: &str, w: &str, max_w: i32) -> Result<ZLaurent> {
        let mut terms = Vec::new();
        let mut a = -1;
        while a <= max_w {
            for n in 0..=(a + 1) / 2 {
                let b = -2 * n - 2;
                terms.push((vec![b, a], self.coefficient(a, b)?));
            }
            a += 2;
        }
        let (vz, vw) = (z.to_string(), w.to_string());
        let ordered = crate::ring::laurent::natural_key(z) <= crate::ring::laurent::natural_key(w);
        let vars = if ordered { vec![vz, vw] } else { vec![vw, vz] };
        let terms = terms.into_iter().map(|(e, c)| {
            if ordered {
                (e, c)
            } else {
                (vec![e[1], e[0]], c)
            }
        });
        Ok(ZLaurent::from_exponents(&vars, terms))
    }

    /// `Res_{w=0} K(z, w) h(w)` for `h` a Laurent polynomial in `w` alone, returned in `z`.
    pub fn residue_against(&self, h: &ZLaurent, w: &str, z: &str) -> Result<ZLaurent> {
        if h.is_zero() {
            return Ok(ZLaurent::default());
        }
        let i = h
            .index(w)
            .ok_or_else(|| Error::UnknownVariable(w.to_string()))?;
        if h.vars().len() != 1 {
            return Err(Error::UnknownVariable(h.vars().join(",")));
        }
        let mut out = Vec::new();
        for (e, c) in h.terms() {
            let a = -1 - e[i];
            if a < -1 || a % 2 == 0 {
                continue;
            }
            for n in 0..=(a + 1) / 2 {
                let b = -2 * n - 2;
                out.push((vec![b], c * &self.coefficient(a, b)?));
            }
        }
        Ok(ZLaurent::from_exponents(&[z.to_string()], out))
    }
}

/// `G(z|z)` from `G(z)` alone: the creation operator with its new point set equal to `z`.
fn local_diagonal(one: &ZLaurent, z: &str) -> Result<ZLaurent> {
    let i = one
        .index(z)
        .ok_or_else(|| Error::UnknownVariable(z.to_string()))?;
    let mut out = Vec::new();
    for (e, c) in one.terms() {
        let x = e[i];
        for l in 0..=c.max_index() {
            let d = c.derivative(l);
            if d.is_zero() {
                continue;
            }
            let w = int(3 + 2 * l as i64);
            let up = MomentPoly::term(MomentMonomial::new(-1, [(l + 1, 1)]), -w.clone());
            out.push((vec![x - 3], &up * &d));
            out.push((vec![x - 5 - 2 * l as i32], d.scale(&w)));
        }
        if x != 0 {
            let p = c.mul_monomial(&MomentMonomial::r0_power(-1), &int(x as i64))?;
            out.push((vec![x - 5], p));
        }
    }
    Ok(ZLaurent::from_exponents(&[z.to_string()], out))
}

/// `G_1, ..., G_gmax` in the variable `z1` from the residue formula
/// `G_g(z) = (1/2z) Res_w K(z,w) [sum_h G_h(w) G_{g-h}(w) + G_{g-1}(w|w)] w^2`.
pub fn one_point_family(gmax: u32) -> Result<Vec<ZLaurent>> {
    let (z, w) = ("z1", "w");
    // Integrand poles reach order 6g-4, so S_m is needed only up to m = 3g-2.
    let kernel = KernelExpansion::new(3 * gmax as usize);
    let mut gs: Vec<ZLaurent> = Vec::with_capacity(gmax as usize);
    let half_over_z = ZLaurent::monomial(&[(z, -1)], MomentPoly::constant(rat(1, 2)));
    for g in 1..=gmax as usize {
        let in_w: Vec<ZLaurent> = gs
            .iter()
            .map(|x| x.rename(z, w))
            .collect::<Result<_>>()?;
        let mut x = if g == 1 {
            planar_diagonal(w)
        } else {
            local_diagonal(&in_w[g - 2], w)?
        };
        for h in 1..g {
            x = x + in_w[h - 1].mul(&in_w[g - h - 1]);
        }
        let integrand = x.shift(w, 2);
        let res = kernel.residue_against(&integrand, w, z)?;
        gs.push(res.mul(&half_over_z));
    }
    Ok(gs)
}

/// `G_g(z1)` from the residue recursion alone.
pub fn one_point_recursive(g: u32) -> Result<ZLaurent> {
    if g == 0 {
        return Err(Error::GenusOutOfRange {
            g,
            min: 1,
            max: u32::MAX,
        });
    }
    Ok(one_point_family(g)?.pop().expect("g >= 1"))
}

/// `K G_g + (1/2) sum_h G_h G_{g-h} + (1/2) G_{g-1}(z|z)` for `G_h = ones[h-1]`, all in `z1`.
pub fn one_point_residual(ones: &[ZLaurent], diagonal_prev: &ZLaurent) -> Result<ZLaurent> {
    let g = ones.len();
    if g == 0 {
        return Err(Error::GenusOutOfRange {
            g: 0,
            min: 1,
            max: u32::MAX,
        });
    }
    let mut r = khat_apply(&ones[g - 1], "z1")? + diagonal_prev.scale(&rat(1, 2));
    for h in 1..g {
        r = r + ones[h - 1].mul(&ones[g - h - 1]).scale(&rat(1, 2));
    }
    Ok(r.trim_vars())
}

/// The one-point loop equation evaluated on the Laplacian-generated correlators.
pub fn dse_residual_one_point(g: u32) -> Result<ZLaurent> {
    if g == 0 {
        return Err(Error::GenusOutOfRange {
            g,
            min: 1,
            max: u32::MAX,
        });
    }
    let ones: Vec<ZLaurent> = (1..=g)
        .map(|h| Ok(correlator(h, 1)?.value.clone()))
        .collect::<Result<_>>()?;
    let diag = diagonal_two_point(g - 1, "z1")?;
    one_point_residual(&ones, &diag)
}

fn check_topology(g: u32, b: usize) -> Result<()> {
    let chi = 2 - 2 * g as i64 - b as i64;
    if b < 2 || chi >= 0 {
        return Err(Error::UnstableTopology(chi));
    }
    Ok(())
}

/// Exact values of the correlators entering the multi-boundary loop equation, with the
/// planar two-point seed handled in closed form.
struct PointEvaluator {
    laurents: HashMap<(u32, usize), Arc<ZLaurent>>,
    derivatives: HashMap<(u32, usize), ZLaurent>,
}

fn eval_laurent(f: &ZLaurent, args: &[Rational]) -> Result<MomentPoly> {
    let mut cur = f.clone();
    for (i, x) in args.iter().enumerate() {
        let name = zvar(i + 1);
        if cur.index(&name).is_some() {
            cur = cur.eval_var(&name, x)?;
        }
    }
    if !cur.trim_vars().vars().is_empty() {
        return Err(Error::DimensionMismatch);
    }
    Ok(cur.coefficient(&vec![0; cur.vars().len()]))
}

impl PointEvaluator {
    fn new(needed: &[(u32, usize)], derivative_of: &[(u32, usize)]) -> Result<Self> {
        let mut laurents = HashMap::new();
        for &(g, b) in needed {
            if (g, b) != (0, 2) {
                laurents.insert((g, b), Arc::new(correlator(g, b)?.value.clone()));
            }
        }
        let mut derivatives = HashMap::new();
        for &(g, b) in derivative_of {
            if (g, b) != (0, 2) {
                derivatives.insert((g, b), correlator(g, b)?.value.derivative_z("z1")?);
            }
        }
        Ok(Self {
            laurents,
            derivatives,
        })
    }

    fn value(&self, g: u32, args: &[Rational]) -> Result<MomentPoly> {
        if (g, args.len()) == (0, 2) {
            let (a, b) = (&args[0], &args[1]);
            let s = a + b;
            return Ok(MomentPoly::constant((a * b * &s * &s).recip()));
        }
        eval_laurent(&self.laurents[&(g, args.len())], args)
    }

    fn derivative(&self, g: u32, args: &[Rational]) -> Result<MomentPoly> {
        if (g, args.len()) == (0, 2) {
            // d/da 1/(a b (a+b)^2) = -1/(a^2 b (a+b)^2) - 2/(a b (a+b)^3)
            let (a, b) = (&args[0], &args[1]);
            let s = a + b;
            let v = -(a * a * b * &s * &s).recip() - int(2) * (a * b * &s * &s * &s).recip();
            return Ok(MomentPoly::constant(v));
        }
        eval_laurent(&self.derivatives[&(g, args.len())], args)
    }
}

/// Nonempty proper-size subsets of `0..n` as index lists, sizes `1..=n-1`.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n) - 1)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// The loop equation for `G_g(z1|z2|...|zB)` prepared for repeated exact evaluation.
pub struct MultiLoopEquation {
    g: u32,
    b: usize,
    khat: ZLaurent,
    eval: PointEvaluator,
}

impl MultiLoopEquation {
    pub fn new(g: u32, b: usize) -> Result<Self> {
        check_topology(g, b)?;
        let mut needed = vec![(g, b), (g, b - 1)];
        if g >= 1 {
            needed.push((g - 1, b + 1));
        }
        for h in 0..=g {
            for k in 1..=b.saturating_sub(2) {
                needed.push((h, 1 + k));
                needed.push((g - h, b - k));
            }
        }
        for h in 1..=g {
            needed.push((h, 1));
            needed.push((g - h, b));
        }
        needed.sort();
        needed.dedup();
        let khat = khat_apply(&correlator(g, b)?.value, "z1")?;
        let eval = PointEvaluator::new(&needed, &[(g, b - 1)])?;
        Ok(Self { g, b, khat, eval })
    }

    /// The residual at one point, exact in the moments.
    pub fn residual(&self, z: &[Rational]) -> Result<MomentPoly> {
        let (g, b) = (self.g, self.b);
        if z.len() != b {
            return Err(Error::DimensionMismatch);
        }
        for (i, x) in z.iter().enumerate() {
            if x.is_zero() || z[..i].iter().any(|y| y * y == x * x) {
                return Err(Error::CoincidentPoints);
            }
        }
        let half = rat(1, 2);
        let x1 = &z[0];
        let rest = &z[1..];
        let mut r = eval_laurent(&self.khat, z)?;
        if g >= 1 {
            let mut args = vec![x1.clone(), x1.clone()];
            args.extend_from_slice(rest);
            r += &self.eval.value(g - 1, &args)?.scale(&half);
        }
        for subset in subsets(rest.len()) {
            let mut with_i = vec![x1.clone()];
            let mut with_c = vec![x1.clone()];
            for (j, y) in rest.iter().enumerate() {
                if subset.contains(&j) {
                    with_i.push(y.clone());
                } else {
                    with_c.push(y.clone());
                }
            }
            for h in 0..=g {
                let p = &self.eval.value(h, &with_i)? * &self.eval.value(g - h, &with_c)?;
                r += &p.scale(&half);
            }
        }
        for h in 1..=g {
            r += &(&self.eval.value(h, &z[..1])? * &self.eval.value(g - h, z)?);
        }
        for (beta, y) in rest.iter().enumerate() {
            let others: Vec<Rational> = rest
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != beta)
                .map(|(_, v)| v.clone())
                .collect();
            let at = |lead: &Rational| {
                let mut a = vec![lead.clone()];
                a.extend(others.iter().cloned());
                a
            };
            let gx = self.eval.value(g, &at(x1))?;
            let gy = self.eval.value(g, &at(y))?;
            let dgy = self.eval.derivative(g, &at(y))?;
            let d = x1 * x1 - y * y;
            // (1/y) d/dy [(G(x) - G(y)) / (x^2 - y^2)]
            let num = &(&gx - &gy).scale(&(int(2) * y)) - &dgy.scale(&d);
            r += &num.scale(&(y * &d * &d).recip());
        }
        Ok(r)
    }
}

/// Residuals of the multi-boundary loop equation at each of `points`.
pub fn dse_residual_multi(g: u32, b: usize, points: &[Vec<Rational>]) -> Result<Vec<MomentPoly>> {
    let eq = MultiLoopEquation::new(g, b)?;
    points.par_iter().map(|p| eq.residual(p)).collect()
}

/// `G_h` at the named points as a rational function; the planar two-point seed stays
/// unreduced.
fn symbolic(h: u32, names: &[&str]) -> Result<ZRational> {
    if (h, names.len()) == (0, 2) {
        return Ok(planar_two_point(names[0], names[1]));
    }
    let mut f = correlator(h, names.len())?.value.clone();
    for i in 0..names.len() {
        f = f.rename(&zvar(i + 1), &format!("tmp{}", i + 1))?;
    }
    for (i, n) in names.iter().enumerate() {
        f = f.rename(&format!("tmp{}", i + 1), n)?;
    }
    Ok(ZRational::from_laurent(f))
}

/// The whole residual as one rational function, together with each term's share of the
/// numerator over the common denominator (used to bound degrees).
pub fn symbolic_multi_residual(g: u32, b: usize) -> Result<(ZRational, Vec<ZRational>)> {
    check_topology(g, b)?;
    let names: Vec<String> = (1..=b).map(zvar).collect();
    let n: Vec<&str> = names.iter().map(String::as_str).collect();
    let half = rat(1, 2);
    let mut terms: Vec<ZRational> = Vec::new();
    terms.push(ZRational::from_laurent(khat_apply(
        &correlator(g, b)?.value,
        "z1",
    )?));
    if g >= 1 {
        let mut args = vec![n[0], n[0]];
        args.extend_from_slice(&n[1..]);
        terms.push(symbolic(g - 1, &args)?.scale(&half));
    }
    let rest = &n[1..];
    for subset in subsets(rest.len()) {
        let mut with_i = vec![n[0]];
        let mut with_c = vec![n[0]];
        for (j, y) in rest.iter().enumerate() {
            if subset.contains(&j) {
                with_i.push(y);
            } else {
                with_c.push(y);
            }
        }
        for h in 0..=g {
            terms.push(symbolic(h, &with_i)?.mul(&symbolic(g - h, &with_c)?).scale(&half));
        }
    }
    for h in 1..=g {
        terms.push(symbolic(h, &n[..1])?.mul(&symbolic(g - h, &n)?));
    }
    for (beta, y) in rest.iter().enumerate() {
        let others: Vec<&str> = rest
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != beta)
            .map(|(_, v)| *v)
            .collect();
        let lead = |l: &'static str| -> Vec<&str> {
            let mut a = vec![l];
            a.extend(others.iter().copied());
            a
        };
        // Evaluate with placeholder lead names, then rename, to keep `others` fixed.
        let gx = symbolic(g, &lead("lx"))?;
        let gy = symbolic(g, &lead("ly"))?;
        let diff = gx.add(&gy.scale(&-Rational::one()));
        let q = diff
            .div_difference("lx", "ly")?
            .with_factor("lx", "ly")
            .derivative_z("ly");
        let q = rename_rational(&q, &[("lx", n[0]), ("ly", y)])?;
        let y_inv = ZLaurent::monomial(&[(y, -1)], MomentPoly::one());
        terms.push(q.mul_laurent(&y_inv));
    }
    let total = terms
        .iter()
        .skip(1)
        .fold(terms[0].clone(), |acc, t| acc.add(t));
    Ok((total, terms))
}

fn rename_rational(f: &ZRational, map: &[(&str, &str)]) -> Result<ZRational> {
    let mut num = f.numerator().clone();
    for (from, to) in map {
        if num.index(from).is_some() {
            num = num.rename(from, to)?;
        }
    }
    let factors: Vec<(String, String)> = f
        .factors()
        .iter()
        .map(|(a, b)| {
            let sub = |v: &String| {
                map.iter()
                    .find(|(from, _)| from == v)
                    .map_or(v.clone(), |(_, to)| to.to_string())
            };
            (sub(a), sub(b))
        })
        .collect();
    let refs: Vec<(&str, &str)> = factors
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    Ok(ZRational::new(num, &refs))
}

/// Outcome of the two independent checks of one multi-boundary loop equation.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCertificate {
    pub g: u32,
    pub b: usize,
    /// The numerator of the normalised residual is the zero polynomial.
    pub symbolic_zero: bool,
    /// Degree bound per variable of the residual's cleared numerator.
    pub degrees: Vec<u32>,
    pub points: usize,
    /// Grid points where the exact residual did not vanish.
    pub nonzero_points: usize,
}

impl MultiCertificate {
    pub fn holds(&self) -> bool {
        self.symbolic_zero && self.nonzero_points == 0
    }
}

/// Per-variable bound on the degree of `P`, where `residual = P / (monomial * factors)`.
pub fn certified_degrees(g: u32, b: usize) -> Result<Vec<u32>> {
    let (total, terms) = symbolic_multi_residual(g, b)?;
    let mut lo = vec![i32::MAX; b];
    let mut hi = vec![i32::MIN; b];
    for t in &terms {
        let num = t.numerator_over(total.factors())?;
        for (i, v) in (1..=b).map(zvar).enumerate() {
            if let Some((a, c)) = num.exponent_range(&v) {
                lo[i] = lo[i].min(a);
                hi[i] = hi[i].max(c);
            }
        }
    }
    Ok(lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| if l > h { 0 } else { (h - l) as u32 })
        .collect())
}

/// Product grid with `degrees[i] + 1` positive values for variable `i`, all distinct.
pub fn certified_grid(degrees: &[u32]) -> Vec<Vec<Rational>> {
    let b = degrees.len();
    let axes: Vec<Vec<Rational>> = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            (0..=d as i64)
                .map(|k| int(1 + i as i64 + b as i64 * k))
                .collect()
        })
        .collect();
    let mut grid = vec![vec![]];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|p: Vec<Rational>| {
                axis.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
    }
    grid
}

/// Normalises the residual symbolically and evaluates it exactly on a grid large enough
/// for the per-variable degree bounds to force identical vanishing.
pub fn certify_multi(g: u32, b: usize) -> Result<MultiCertificate> {
    let (total, _) = symbolic_multi_residual(g, b)?;
    let degrees = certified_degrees(g, b)?;
    let grid = certified_grid(&degrees);
    let eq = MultiLoopEquation::new(g, b)?;
    let nonzero = grid
        .par_iter()
        .map(|p| eq.residual(p).map(|r| usize::from(!r.is_zero())))
        .try_reduce(|| 0, |a, c| Ok(a + c))?;
    Ok(MultiCertificate {
        g,
        b,
        symbolic_zero: total.numerator().is_zero(),
        degrees,
        points: grid.len(),
        nonzero_points: nonzero,
    })
}

/// Exact residual values at rational moments.
pub fn dse_residual_multi_values(
    g: u32,
    b: usize,
    points: &[Vec<Rational>],
    rho: &[Rational],
) -> Result<Vec<Rational>> {
    dse_residual_multi(g, b, points)?
        .iter()
        .map(|p| p.eval_rational(rho))
        .collect()
}
