//! Numeric realisation of the matrix model: discrete spectral measure, the implicit equation
//! for `c`, renormalised moments and correlator values at matrix indices.
//!
//! Units: the measure carries weights `2 (2 lambda)^2 / V` per eigenvalue level, and the
//! symbolic correlators (computed at `2 lambda = 1`) are multiplied back by the recorded
//! power of `2 lambda`. The listed eigenvalues are the shifted energies
//! `F_n = E_n - lambda nu / 2`; with `mu = 1` they enter the measure as `X_n = 4 F_n^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{assembled_lambda_exponent, correlator, lambda_exponent};
use crate::error::{Error, Result};
use crate::ring::ZLaurent;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;

/// One eigenvalue level `F` with its multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(rename = "E")]
    pub e: f64,
    pub mult: u64,
}

/// Spectral generator `F(|n|) = mu2/2 + e(|n| / (mu2 V^{2/D}))` for `|n| <= cutoff_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub e: String,
    #[serde(rename = "cutoff_N")]
    pub cutoff_n: u64,
    pub mu2: f64,
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dimension: u32,
    pub lambda: f64,
    pub volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<Level>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel {
    pub dimension: u32,
    pub lambda: f64,
    pub volume: f64,
    pub eigenvalues: Vec<Level>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    pub c: f64,
    pub nu: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub moments: Vec<f64>,
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of multi-indices in `N^{D/2}` with `|n| = k`.
pub fn level_multiplicity(dimension: u32, k: u64) -> u64 {
    let d = u64::from(dimension / 2);
    if d == 0 {
        return u64::from(k == 0);
    }
    binomial_f64(k + d - 1, d - 1).round() as u64
}

impl SpectralModel {
    pub fn new(dimension: u32, lambda: f64, volume: f64, eigenvalues: Vec<Level>) -> Result<Self> {
        let m = SpectralModel {
            dimension,
            lambda,
            volume,
            eigenvalues,
        };
        m.validate()?;
        Ok(m)
    }

    /// Expands a generator into levels with binomial multiplicities.
    pub fn generated(dimension: u32, lambda: f64, volume: f64, gen: &Generator) -> Result<Self> {
        let e: fn(f64) -> f64 = match gen.e.as_str() {
            "linear" => |x| x,
            other => return Err(Error::Model(format!("unknown generator `{other}`"))),
        };
        if !(gen.mu2 > 0.0) {
            return Err(Error::Model("mu2 must be positive".into()));
        }
        let top = if dimension == 0 { 0 } else { gen.cutoff_n };
        let scale = if dimension == 0 {
            1.0
        } else {
            gen.mu2 * volume.powf(2.0 / f64::from(dimension))
        };
        let levels = (0..=top)
            .map(|k| Level {
                e: gen.mu2 / 2.0 + e(k as f64 / scale),
                mult: level_multiplicity(dimension, k),
            })
            .collect();
        Self::new(dimension, lambda, volume, levels)
    }

    pub fn from_file(f: &ModelFile) -> Result<Self> {
        match (&f.eigenvalues, &f.generator) {
            (Some(levels), None) => Self::new(f.dimension, f.lambda, f.volume, levels.clone()),
            (None, Some(gen)) => Self::generated(f.dimension, f.lambda, f.volume, gen),
            _ => Err(Error::Model(
                "exactly one of `eigenvalues` and `generator` is required".into(),
            )),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&f)
    }

    fn validate(&self) -> Result<()> {
        if ![0, 2, 4, 6].contains(&self.dimension) {
            return Err(Error::Model(format!("dimension {} not in {{0,2,4,6}}", self.dimension)));
        }
        if !(self.volume > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Model("volume must be positive and lambda finite".into()));
        }
        if self.eigenvalues.is_empty() {
            return Err(Error::Model("empty spectrum".into()));
        }
        if self.eigenvalues.iter().any(|l| !(l.e > 0.0) || l.mult == 0) {
            return Err(Error::Model("eigenvalues must be positive with positive multiplicity".into()));
        }
        Ok(())
    }

    /// Measure points `X_n = 4 F_n^2` with weights `2 (2 lambda)^2 mult_n / V`.
    pub fn measure(&self) -> Vec<(f64, f64)> {
        let unit = 2.0 * (2.0 * self.lambda).powi(2) / self.volume;
        self.eigenvalues
            .iter()
            .map(|l| (4.0 * l.e * l.e, unit * l.mult as f64))
            .collect()
    }

    fn k(&self) -> i32 {
        (self.dimension / 2) as i32
    }
}

/// `(1 - s)(1 + s)^{delta_{D,6}} - 1/2 sum w / ((s + y)^{D/2} y)` with `s = sqrt(1+c)`,
/// `y = sqrt(X + c)`, and its derivative in `c`.
fn implicit(model: &SpectralModel, measure: &[(f64, f64)], c: f64) -> (f64, f64) {
    let s = (1.0 + c).sqrt();
    let k = model.k();
    let (lhs, dlhs) = if model.dimension == 6 {
        (-c, -1.0)
    } else {
        (1.0 - s, -0.5 / s)
    };
    let (mut rhs, mut drhs) = (0.0, 0.0);
    for &(x, w) in measure {
        let y = (x + c).sqrt();
        let t = w / ((s + y).powi(k) * y);
        rhs += t;
        drhs += t * (-f64::from(k) * (0.5 / s + 0.5 / y) / (s + y) - 0.5 / (y * y));
    }
    (lhs - 0.5 * rhs, dlhs - 0.5 * drhs)
}

/// Newton iteration with step halving for the implicit equation.
pub fn solve_c(model: &SpectralModel, tol: f64) -> Result<f64> {
    let measure = model.measure();
    let mut c = 0.0;
    let (mut f, mut df) = implicit(model, &measure, c);
    for _ in 0..MAX_ITERATIONS {
        if f.abs() < tol {
            return Ok(c);
        }
        let mut step = -f / df;
        let mut accepted = None;
        let mut crossed = false;
        for _ in 0..MAX_HALVINGS {
            let next = c + step;
            crossed |= 1.0 + next <= 0.0;
            if 1.0 + next > 0.0 {
                let (fn_, dfn) = implicit(model, &measure, next);
                if fn_.is_finite() && fn_.abs() <= f.abs() {
                    accepted = Some((next, fn_, dfn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, fn_, dfn)) = accepted else {
            return Err(if crossed {
                Error::BranchViolation
            } else {
                Error::NoConvergence(MAX_ITERATIONS)
            });
        };
        (c, f, df) = (next, fn_, dfn);
    }
    if f.abs() < tol {
        Ok(c)
    } else {
        Err(Error::NoConvergence(MAX_ITERATIONS))
    }
}

/// `sum w / ((s + y)^p y)` over the measure.
fn pole_sum(measure: &[(f64, f64)], c: f64, s: f64, p: i32) -> f64 {
    measure
        .iter()
        .map(|&(x, w)| {
            let y = (x + c).sqrt();
            w / ((s + y).powi(p) * y)
        })
        .sum()
}

/// Renormalised moments `rho_l = delta_{l0}/sqrt(Z) - 1/2 sum w / y^{3+2l}`.
pub fn moments(model: &SpectralModel, c: f64, z: f64, lmax: usize) -> Vec<f64> {
    let measure = model.measure();
    (0..=lmax)
        .map(|l| {
            let tail: f64 = measure
                .iter()
                .map(|&(x, w)| w / (x + c).sqrt().powi(3 + 2 * l as i32))
                .sum();
            let head = if l == 0 { 1.0 / z.sqrt() } else { 0.0 };
            head - 0.5 * tail
        })
        .collect()
}

/// Solves for `c`, then `nu` and `Z` from the renormalisation conditions of the dimension.
///
/// D=0 and D=2 fix `Z = 1`, `nu = 0`. D=4 keeps `Z = 1` and takes `nu` from `W_0(1) = 1`.
/// D=6 additionally takes `Z` from `W_0'(1) = 1/2`.
pub fn solve_spectral(model: &SpectralModel, lmax: usize, tol: f64) -> Result<SpectralData> {
    if !(tol > 0.0) {
        return Err(Error::Model("tolerance must be positive".into()));
    }
    let c = solve_c(model, tol)?;
    let measure = model.measure();
    let s = (1.0 + c).sqrt();
    let z = if model.dimension == 6 {
        (s + 0.5 * pole_sum(&measure, c, s, 2)).powi(-2)
    } else {
        1.0
    };
    let nu = if model.dimension >= 4 && model.lambda != 0.0 {
        (s / z.sqrt() - 1.0 + 0.5 * pole_sum(&measure, c, s, 1)) / model.lambda
    } else {
        0.0
    };
    Ok(SpectralData {
        c,
        nu,
        z,
        moments: moments(model, c, z, lmax),
    })
}

/// `G_0(z) = z/sqrt(Z) - lambda nu + 1/2 sum w / ((z + y) y)`.
pub fn planar_one_point(data: &SpectralData, model: &SpectralModel, z: Complex64) -> Result<Complex64> {
    let measure = model.measure();
    let ys: Vec<f64> = measure.iter().map(|&(x, _)| (x + data.c).sqrt()).collect();
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), &y| (a.min(y), b.max(y)));
    if z.im.abs() <= 1e-12 * z.norm().max(1.0) && -z.re >= lo && -z.re <= hi {
        return Err(Error::OnCut);
    }
    let mut total = z / data.z.sqrt() - model.lambda * data.nu;
    for (&(_, w), &y) in measure.iter().zip(&ys) {
        total += 0.5 * w / ((z + y) * y);
    }
    Ok(total)
}

/// `W_0(X)`, `W_0'(X)` and `W_0''(X)` in closed form.
pub fn w0_derivatives(data: &SpectralData, model: &SpectralModel, x: f64) -> [f64; 3] {
    let measure = model.measure();
    let s = (x + data.c).sqrt();
    let inv = 1.0 / data.z.sqrt();
    let value = s * inv - model.lambda * data.nu + 0.5 * pole_sum(&measure, data.c, s, 1);
    let bracket = inv - 0.5 * pole_sum(&measure, data.c, s, 2);
    let first = bracket / (2.0 * s);
    let second = -bracket / (4.0 * s.powi(3)) + pole_sum(&measure, data.c, s, 3) / (4.0 * s * s);
    [value, first, second]
}

/// Taylor coefficients of `1/2 (G_0(z) - G_0(-z))` at 0, read off by a discrete Cauchy
/// integral on a circle inside the cut. Entry `l` is the coefficient of `z^{2l+1}`.
pub fn odd_part_coefficients(
    data: &SpectralData,
    model: &SpectralModel,
    lmax: usize,
    samples: usize,
) -> Result<Vec<f64>> {
    let ymin = model
        .measure()
        .iter()
        .map(|&(x, _)| (x + data.c).sqrt())
        .fold(f64::INFINITY, f64::min);
    let r = 0.5 * ymin;
    let mut acc = vec![Complex64::new(0.0, 0.0); lmax + 1];
    for j in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / samples as f64;
        let z = Complex64::from_polar(r, theta);
        let f = 0.5 * (planar_one_point(data, model, z)? - planar_one_point(data, model, -z)?);
        for (l, a) in acc.iter_mut().enumerate() {
            *a += f * z.powi(-(2 * l as i32 + 1));
        }
    }
    Ok(acc.iter().map(|a| a.re / samples as f64).collect())
}

/// `z = sqrt(4 F_p^2 + c)` for the eigenvalue level `p`.
pub fn spectral_point(model: &SpectralModel, data: &SpectralData, p: usize) -> Result<f64> {
    let level = model
        .eigenvalues
        .get(p)
        .ok_or_else(|| Error::Model(format!("index {p} outside the spectrum")))?;
    Ok((4.0 * level.e * level.e + data.c).sqrt())
}

fn eval_laurent(f: &ZLaurent, rho: &[f64], point: &[f64]) -> f64 {
    f.terms()
        .map(|(e, c)| {
            e.iter()
                .zip(point)
                .fold(c.eval_f64(rho), |acc, (&k, &z)| acc * z.powi(k))
        })
        .sum()
}

/// Physical genus-`g` coefficient `G^{(g)}` of the `(N_1+...+N_B)`-point function at the
/// eigenvalue indices `groups`.
///
/// The `V^{-2g}` weight of the genus expansion is not included. For `B = 1` the result is
/// `G^{(g)}_{|p...|}`, i.e. the shifted function `W/(2 lambda)` assembled over the group.
pub fn evaluate_pipeline(
    model: &SpectralModel,
    data: &SpectralData,
    g: u32,
    groups: &[Vec<usize>],
) -> Result<f64> {
    let b = groups.len();
    if b == 0 || groups.iter().any(Vec::is_empty) {
        return Err(Error::DimensionMismatch);
    }
    for grp in groups {
        for (i, &p) in grp.iter().enumerate() {
            let fp = model.eigenvalues.get(p).map(|l| l.e);
            if grp[i + 1..].iter().any(|&q| model.eigenvalues.get(q).map(|l| l.e) == fp) {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    // The planar two-point function is a seed, not a cached Laurent polynomial.
    let planar_pair = g == 0 && b == 2;
    let corr = if planar_pair { None } else { Some(correlator(g, b)?) };
    let lmax = corr.as_ref().map_or(0, |c| {
        c.value
            .terms()
            .map(|(_, c)| c.max_index() as usize)
            .max()
            .unwrap_or(0)
    });
    let rho = if data.moments.len() > lmax {
        data.moments.clone()
    } else {
        moments(model, data.c, data.z, lmax)
    };
    let zs: Vec<Vec<f64>> = groups
        .iter()
        .map(|grp| grp.iter().map(|&p| spectral_point(model, data, p)).collect())
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut choice = vec![0usize; b];
    'outer: loop {
        let mut factor = 1.0;
        let mut point = Vec::with_capacity(b);
        for (beta, grp) in zs.iter().enumerate() {
            let zk = grp[choice[beta]];
            for (l, &zl) in grp.iter().enumerate() {
                if l != choice[beta] {
                    factor *= 2.0 / (zk * zk - zl * zl);
                }
            }
            point.push(zk);
        }
        let base = match &corr {
            Some(c) => eval_laurent(&c.value, &rho, &point),
            None => 1.0 / (point[0] * point[1] * (point[0] + point[1]).powi(2)),
        };
        total += factor * base;
        for beta in 0..b {
            choice[beta] += 1;
            if choice[beta] < zs[beta].len() {
                continue 'outer;
            }
            choice[beta] = 0;
        }
        break;
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let base = corr.map_or(lambda_exponent(0, 2), |c| c.lambda_exponent);
    let e = assembled_lambda_exponent(base, n, b);
    Ok(total * (2.0 * model.lambda).powi(e))
}
