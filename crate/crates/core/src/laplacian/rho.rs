//! The Laplacian in moment variables.
//!
//! The displayed operator is regrouped so that every `R_m` multiplies a single collected
//! polynomial `Q_m`; those products dominate the cost and run in parallel over `m`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bell::CoefficientTable;
use crate::ring::rational::{int, rat};
use crate::ring::{Accumulator, MomentMonomial, MomentPoly, Rational};

/// Below this many terms the serial path is faster than spawning work.
const PARALLEL_THRESHOLD: usize = 64;

pub(crate) fn mono(e0: i32, pairs: &[(u32, u32)]) -> MomentMonomial {
    MomentMonomial::new(e0, pairs.iter().copied())
}

pub(crate) fn poly(terms: &[(i32, &[(u32, u32)], i64, i64)]) -> MomentPoly {
    MomentPoly::from_terms(
        terms
            .iter()
            .map(|&(e0, pairs, n, d)| (mono(e0, pairs), rat(n, d))),
    )
}

/// `E(q) = sum_k (3+2k) r_{k+1} dq/dr_k` over `k >= 1`.
fn euler_shift(q: &MomentPoly) -> MomentPoly {
    let mut acc = Accumulator::new();
    for (m, c) in q.terms() {
        for &(k, e) in m.higher() {
            let shifted = m
                .div(&MomentMonomial::var(k))
                .expect("k present")
                .mul(&MomentMonomial::var(k + 1));
            acc.add_term(shifted, c * int((3 + 2 * k as i64) * e as i64));
        }
    }
    acc.finish()
}

fn add_mul(acc: &mut Accumulator, a: &MomentPoly, b: &MomentPoly) {
    for (mb, cb) in b.terms() {
        acc.add_scaled(a, mb, cb);
    }
}

/// Adds `c * m * q` into `acc`.
fn add_mono(acc: &mut Accumulator, q: &MomentPoly, e0: i32, pairs: &[(u32, u32)], c: Rational) {
    acc.add_scaled(q, &mono(e0, pairs), &c);
}

/// The operator split as `rest + sum_m Q_m R_m`.
struct Collected {
    rest: Accumulator,
    q: BTreeMap<usize, MomentPoly>,
}

fn collect(p: &MomentPoly) -> Collected {
    let kmax = p.max_index();
    let d0 = p.derivative(0);
    let d00 = d0.derivative(0);

    let a00 = poly(&[
        (-3, &[(1, 3)], -6, 5),
        (-2, &[(1, 1), (2, 1)], 111, 70),
        (-1, &[(3, 1)], -1, 2),
    ]);
    let a0 = poly(&[
        (-4, &[(1, 3)], 2, 1),
        (-3, &[(1, 1), (2, 1)], -1097, 280),
        (-2, &[(3, 1)], 41, 24),
    ]);
    let alpha = poly(&[(-3, &[(1, 2)], -2, 5), (-2, &[(2, 1)], 2, 7)]);
    let beta = poly(&[(-4, &[(1, 2)], 19, 60), (-3, &[(2, 1)], -25, 84)]);

    let mut rest = Accumulator::new();
    add_mul(&mut rest, &d00, &a00);
    add_mul(&mut rest, &d0, &a0);
    add_mul(&mut rest, &euler_shift(&d0), &alpha);
    add_mul(&mut rest, &euler_shift(p), &beta);

    let mut q: BTreeMap<usize, Accumulator> = BTreeMap::new();
    let dks: Vec<(u32, MomentPoly)> = (1..=kmax)
        .map(|k| (k, p.derivative(k)))
        .filter(|(_, d)| !d.is_zero())
        .collect();
    for (k, dk) in &dks {
        let k = *k;
        let w = 3 + 2 * k as i64;
        let dk0 = dk.derivative(0);
        let ek = euler_shift(dk);

        // Pieces without R.
        add_mono(&mut rest, &ek, -3, &[(1, 1), (k + 1, 1)], rat(-w, 30));
        add_mono(&mut rest, dk, -3, &[(1, 1), (k + 2, 1)], rat(-w * (5 + 2 * k as i64), 30));

        let qa = q.entry(k as usize + 2).or_default();
        add_mono(qa, &dk0, -1, &[(1, 1)], rat(-3 * w, 2));
        add_mono(qa, &ek, -1, &[], rat(-w, 2));
        add_mono(qa, dk, -2, &[(1, 1)], rat(w, 16));

        let qb = q.entry(k as usize + 3).or_default();
        add_mono(qb, &dk0, 0, &[], rat(3 * w, 2));
        add_mono(qb, dk, -1, &[], rat(-w, 16) + rat(-w * (5 + 2 * k as i64), 2));

        for (l, _) in &dks {
            let l = *l;
            if l < k {
                continue;
            }
            let dkl = dk.derivative(l);
            if dkl.is_zero() {
                continue;
            }
            let sym = if k == l { 1 } else { 2 };
            let c = rat(sym * w * (3 + 2 * l as i64), 4);
            q.entry((k + l) as usize + 3)
                .or_default()
                .add_scaled(&dkl, &MomentMonomial::one(), &c);
        }
    }
    Collected {
        rest,
        q: q.into_iter().map(|(m, a)| (m, a.finish())).collect(),
    }
}

/// The operator `Delta_rho` applied to `p`.
///
/// `R(x) = N(x)/D(x)` with `N_0 = 1/3`, `N_l = r_l/((3+2l) r0)` and `D_l = r_l/r0`, so
/// `sum_m Q_m R_m = sum_j [1/D]_j P_j` with `P_j = sum_l N_l Q_{j+l}`. The reciprocal is
/// never expanded: its recurrence is run backwards on the `P_j`, which costs only
/// monomial multiplications.
pub fn apply(p: &MomentPoly) -> MomentPoly {
    let Collected { rest, q } = collect(p);
    let Some(&top) = q.keys().next_back() else {
        return -rest.finish();
    };
    let n_coeff = |l: usize| -> (MomentMonomial, Rational) {
        if l == 0 {
            (MomentMonomial::one(), rat(1, 3))
        } else {
            (mono(-1, &[(l as u32, 1)]), rat(1, 3 + 2 * l as i64))
        }
    };
    let build = |j: usize| {
        let mut acc = Accumulator::new();
        for (&m, qm) in q.range(j..) {
            let (mono_l, c) = n_coeff(m - j);
            acc.add_scaled(qm, &mono_l, &c);
        }
        acc
    };
    let mut pj: Vec<Accumulator> = if p.len() >= PARALLEL_THRESHOLD {
        (0..=top).into_par_iter().map(build).collect()
    } else {
        (0..=top).map(build).collect()
    };
    let minus_one = int(-1);
    for j in (1..=top).rev() {
        let cur = std::mem::take(&mut pj[j]).finish();
        if cur.is_zero() {
            continue;
        }
        let update = |(i, acc): (usize, &mut Accumulator)| {
            // P_i -= (r_{j-i}/r0) P_j
            acc.add_scaled(&cur, &mono(-1, &[((j - i) as u32, 1)]), &minus_one);
        };
        if cur.len() >= PARALLEL_THRESHOLD {
            pj[..j].par_iter_mut().enumerate().for_each(update);
        } else {
            pj[..j].iter_mut().enumerate().for_each(update);
        }
    }
    let total = std::mem::take(&mut pj[0]);
    -total.merge(rest).finish()
}

/// The same operator with every `R_m` taken from an explicit table.
pub fn apply_tabulated(p: &MomentPoly, table: &CoefficientTable) -> MomentPoly {
    let Collected { rest, q } = collect(p);
    let parts: Vec<(usize, MomentPoly)> = q.into_iter().collect();
    let product = |(m, qm): &(usize, MomentPoly)| {
        let mut acc = Accumulator::new();
        add_mul(&mut acc, qm, table.r(*m));
        acc
    };
    let total = if p.len() >= PARALLEL_THRESHOLD {
        parts
            .par_iter()
            .map(product)
            .reduce(Accumulator::new, Accumulator::merge)
    } else {
        parts
            .iter()
            .map(product)
            .fold(Accumulator::new(), Accumulator::merge)
    };
    -total.merge(rest).finish()
}

/// Largest `R` index the operator can touch on inputs with moments up to `kmax`.
pub fn table_size(kmax: u32) -> usize {
    2 * kmax as usize + 3
}
