//! Boundary creation and annihilation operators and the correlators they generate.
//!
//! All values use the normalisation `2 lambda = 1`; each [`Correlator`] records the power of
//! `2 lambda` that restores physical units.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::laplacian::{stable_partition, Convention, StablePartition};
use crate::ring::rational::{int, rat};
use crate::ring::{MomentMonomial, MomentPoly, Rational, ZLaurent, ZRational};

/// Canonical name of the `i`-th boundary variable.
pub fn zvar(i: usize) -> String {
    format!("z{i}")
}

/// A `(1+...+1)`-point function of genus `g` with `B` boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlator {
    pub g: u32,
    pub boundary_vars: Vec<String>,
    pub value: ZLaurent,
    /// Power of `2 lambda` multiplying `value`.
    pub lambda_exponent: i32,
}

impl Correlator {
    pub fn boundaries(&self) -> usize {
        self.boundary_vars.len()
    }
}

/// `4g + 3B - 4 + delta_{B,1}` for `g >= 1`, `3B - 4` for the planar sector.
pub fn lambda_exponent(g: u32, b: usize) -> i32 {
    let b = b as i32;
    if g == 0 {
        3 * b - 4
    } else {
        4 * g as i32 + 3 * b - 4 + i32::from(b == 1)
    }
}

/// `-(3+2l) r_{l+1} / r0` and `3+2l`, the two coefficients of `d/dr_l` in the creation
/// operator (attached to `z^-3` and `z^{-5-2l}`).
fn creation_coefficients(l: u32) -> (MomentPoly, Rational) {
    let w = int(3 + 2 * l as i64);
    let c = MomentPoly::term(MomentMonomial::new(-1, [(l + 1, 1)]), -w.clone());
    (c, w)
}

/// `A^dag_{J,z} f` where `J` are the variables already present in `f`.
pub fn create(f: &ZLaurent, new_var: &str) -> ZLaurent {
    let mut vars: Vec<String> = f.vars().to_vec();
    assert!(
        !vars.iter().any(|v| v == new_var),
        "creation variable `{new_var}` already present"
    );
    vars.push(new_var.to_string());
    let zi = vars.len() - 1;
    let mut out: Vec<(Vec<i32>, MomentPoly)> = Vec::new();
    let inv_r0 = MomentMonomial::r0_power(-1);
    for (exps, c) in f.terms() {
        let with = |shift: &[(usize, i32)]| {
            let mut e = exps.clone();
            e.push(0);
            for &(i, d) in shift {
                e[i] += d;
            }
            e
        };
        for l in 0..=c.max_index() {
            let d = c.derivative(l);
            if d.is_zero() {
                continue;
            }
            let (a, w) = creation_coefficients(l);
            out.push((with(&[(zi, -3)]), &a * &d));
            out.push((with(&[(zi, -5 - 2 * l as i32)]), d.scale(&w)));
        }
        for (i, &e) in exps.iter().enumerate() {
            if e != 0 {
                let p = c
                    .mul_monomial(&inv_r0, &int(e as i64))
                    .expect("log terms carry no boundary variables");
                out.push((with(&[(i, -2), (zi, -3)]), p));
            }
        }
    }
    ZLaurent::from_exponents(&vars, out)
}

/// Creation applied to the planar seed family, which must reduce to a Laurent polynomial.
pub fn create_rational(f: &ZRational, new_var: &str) -> Result<ZLaurent> {
    let num = f.numerator();
    let mut acc = ZRational::from_laurent(ZLaurent::default());
    let max_l = num.terms().map(|(_, c)| c.max_index()).max().unwrap_or(0);
    for l in 0..=max_l {
        let d = f.derivative_rho(l);
        if d.numerator().is_zero() {
            continue;
        }
        let (a, w) = creation_coefficients(l);
        let mult = ZLaurent::monomial(&[(new_var, -3)], a)
            + ZLaurent::monomial(&[(new_var, -5 - 2 * l as i32)], MomentPoly::constant(w));
        acc = acc.add(&d.mul_laurent(&mult));
    }
    for v in f.vars() {
        let d = f.derivative_z(&v);
        let mult = ZLaurent::monomial(
            &[(new_var, -3), (&v, -1)],
            MomentPoly::term(MomentMonomial::r0_power(-1), Rational::one()),
        );
        acc = acc.add(&d.mul_laurent(&mult));
    }
    acc.simplify()
}

/// `G_0(z1|z2) = 1/(z1 z2 (z1+z2)^2)`.
pub fn planar_two_point(a: &str, b: &str) -> ZRational {
    ZRational::new(
        ZLaurent::monomial(&[(a, -1), (b, -1)], MomentPoly::one()),
        &[(a, b), (a, b)],
    )
}

/// `G_0(z|z) = 1/(4 z^4)`, the coincident limit of the planar two-point function.
pub fn planar_diagonal(z: &str) -> ZLaurent {
    ZLaurent::monomial(&[(z, -4)], MomentPoly::constant(rat(1, 4)))
}

/// `F_1 = -log(r0)/24`; higher genera from the moment-variable Laplacian.
pub fn free_energy(g: u32) -> Result<MomentPoly> {
    match g {
        0 => Err(Error::GenusOutOfRange {
            g,
            min: 1,
            max: u32::MAX,
        }),
        1 => Ok(MomentPoly::log_r0(rat(-1, 24))),
        _ => Ok(stable_partition(g, Convention::Rho)?.f(g)?.clone()),
    }
}

/// `G_g(z) = A^dag_z F_g` with `F_g` taken from `sp` (moment convention) for `g >= 2`.
pub fn one_point(g: u32, sp: &StablePartition) -> Result<Correlator> {
    let f = match g {
        0 => {
            return Err(Error::GenusOutOfRange {
                g,
                min: 1,
                max: sp.gmax,
            })
        }
        1 => MomentPoly::log_r0(rat(-1, 24)),
        _ => {
            let sp = if sp.convention == Convention::Rho {
                sp.clone()
            } else {
                sp.to_convention(Convention::Rho)?
            };
            sp.f(g)?.clone()
        }
    };
    Ok(Correlator {
        g,
        boundary_vars: vec![zvar(1)],
        value: create(&ZLaurent::from_poly(f), &zvar(1)),
        lambda_exponent: lambda_exponent(g, 1),
    })
}

type CorrelatorCache = Mutex<HashMap<(u32, usize), Arc<Correlator>>>;

fn cache() -> &'static CorrelatorCache {
    static CACHE: OnceLock<CorrelatorCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `G_g(z1|...|zB)` for `2 - 2g - B < 0`, memoised by `(g, B)`.
pub fn correlator(g: u32, b: usize) -> Result<Arc<Correlator>> {
    let chi = 2 - 2 * g as i64 - b as i64;
    if b == 0 || chi >= 0 {
        return Err(Error::UnstableTopology(chi));
    }
    if let Some(c) = cache().lock().expect("cache poisoned").get(&(g, b)) {
        return Ok(c.clone());
    }
    let value = if g == 0 && b == 3 {
        create_rational(&planar_two_point("z1", "z2"), "z3")?
    } else if b == 1 {
        let sp = if g >= 2 {
            stable_partition(g, Convention::Rho)?
        } else {
            StablePartition {
                gmax: 1,
                z: Default::default(),
                f: Default::default(),
                convention: Convention::Rho,
            }
        };
        one_point(g, &sp)?.value
    } else {
        create(&correlator(g, b - 1)?.value, &zvar(b))
    };
    let c = Arc::new(Correlator {
        g,
        boundary_vars: (1..=b).map(zvar).collect(),
        value,
        lambda_exponent: lambda_exponent(g, b),
    });
    // Concurrent writers store the same value, so last-writer-wins is harmless.
    cache()
        .lock()
        .expect("cache poisoned")
        .insert((g, b), c.clone());
    Ok(c)
}

/// `G_g(z|z)` in the single variable `z`.
pub fn diagonal_two_point(g: u32, z: &str) -> Result<ZLaurent> {
    if g == 0 {
        return Ok(planar_diagonal(z));
    }
    let one = correlator(g, 1)?.value.rename("z1", z)?;
    let tmp = format!("{z}__new");
    create(&one, &tmp).rename(&tmp, z)
}

/// `-sum_l r_l/(3+2l) Res_{z=0} z^{4+2l} f(z)`, removing the variable `var`.
pub fn annihilate(f: &ZLaurent, var: &str) -> Result<ZLaurent> {
    let i = f
        .index(var)
        .ok_or_else(|| Error::UnknownVariable(var.to_string()))?;
    let mut rest: Vec<String> = f.vars().to_vec();
    rest.remove(i);
    let mut out = Vec::new();
    for (e, c) in f.terms() {
        let k = e[i];
        if k > -5 || k % 2 == 0 {
            continue;
        }
        let l = ((-5 - k) / 2) as u32;
        let mut ne = e.clone();
        ne.remove(i);
        let m = MomentPoly::term(MomentMonomial::var(l), -rat(1, 3 + 2 * l as i64));
        out.push((ne, &m * c));
    }
    Ok(ZLaurent::from_exponents(&rest, out))
}

/// [`annihilate`] on a one-variable Laurent polynomial.
pub fn annihilate_one(f: &ZLaurent) -> Result<MomentPoly> {
    let [v] = f.vars() else {
        return Err(Error::DimensionMismatch);
    };
    Ok(annihilate(f, &v.clone())?
        .to_moment_poly()
        .expect("no variables left"))
}

/// `N = -sum_l r_l d/dr_l`: each monomial scales by minus its total degree.
pub fn number_operator(p: &MomentPoly) -> MomentPoly {
    let mut out = MomentPoly::from_terms(p.terms().map(|(m, c)| {
        let deg = m.e0() as i64 + m.degree() as i64;
        (m.clone(), c * int(-deg))
    }));
    if p.has_log() {
        out += &MomentPoly::constant(-p.log_coeff().clone());
    }
    out
}

pub fn number_operator_laurent(f: &ZLaurent) -> ZLaurent {
    f.map_coeffs(number_operator)
}

fn check_group(points: &[Rational]) -> Result<()> {
    for (i, a) in points.iter().enumerate() {
        if a.is_zero() {
            return Err(Error::CoincidentPoints);
        }
        for b in &points[i + 1..] {
            if a * a == b * b {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    Ok(())
}

/// The `(N_1+...+N_B)`-point function assembled from `c` by products of difference quotients.
///
/// Moments stay symbolic; `groups[beta]` holds the points of boundary `beta`.
pub fn n_point_evaluate(c: &Correlator, groups: &[Vec<Rational>]) -> Result<MomentPoly> {
    if groups.len() != c.boundaries() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::DimensionMismatch);
    }
    for g in groups {
        check_group(g)?;
    }
    let mut total = MomentPoly::zero();
    let mut choice = vec![0usize; groups.len()];
    loop {
        let mut factor = Rational::one();
        let mut point = Vec::with_capacity(groups.len());
        for (beta, g) in groups.iter().enumerate() {
            let zk = &g[choice[beta]];
            for (l, zl) in g.iter().enumerate() {
                if l != choice[beta] {
                    // 4 lambda / (z_k^2 - z_l^2) with 2 lambda = 1.
                    factor *= int(2) / (zk * zk - zl * zl);
                }
            }
            point.push((c.boundary_vars[beta].as_str(), zk.clone()));
        }
        let mut v = c.value.clone();
        for (n, x) in &point {
            v = v.eval_var(n, x)?;
        }
        total += &v.coefficient(&[]).scale(&factor);
        // Odometer over the chosen point in each group.
        let mut beta = 0;
        loop {
            if beta == groups.len() {
                return Ok(total);
            }
            choice[beta] += 1;
            if choice[beta] < groups[beta].len() {
                break;
            }
            choice[beta] = 0;
            beta += 1;
        }
    }
}

/// Exact value of [`n_point_evaluate`] at rational moments `rho[0..]`.
pub fn n_point_value(c: &Correlator, groups: &[Vec<Rational>], rho: &[Rational]) -> Result<Rational> {
    n_point_evaluate(c, groups)?.eval_rational(rho)
}

/// Physical power of `2 lambda` carried by an N-point value built from `c`.
pub fn n_point_lambda_exponent(c: &Correlator, groups: &[Vec<Rational>]) -> i32 {
    let n: usize = groups.iter().map(Vec::len).sum();
    assembled_lambda_exponent(c.lambda_exponent, n, groups.len())
}

/// Same as [`n_point_lambda_exponent`] from the point count `n` and boundary count `b`.
pub fn assembled_lambda_exponent(base: i32, n: usize, b: usize) -> i32 {
    // (4 lambda)^{N-B} contributes (2 lambda)^{N-B}; one boundary divides by 2 lambda.
    base + (n - b) as i32 - i32::from(b == 1)
}
