//! The Laplacian written directly in the intersection-number variables.
//!
//! Polynomials use the t-convention slots: slot `0` is `T0 = 1 - t0`, slot `j` is `t_{j+1}`.
//! Hence `d/dt0 = -d/dT0` and `d/dt_k = d/d(slot k-1)` for `k >= 2`.

use crate::bell::bell_table;
use crate::ring::rational::{double_factorial, factorial, int, rat};
use crate::ring::{MomentMonomial, MomentPoly, Rational};

use super::rho::{mono, poly};

/// `t_k` for `k >= 2` as a polynomial.
fn t(k: u32) -> MomentPoly {
    MomentPoly::var(k - 1)
}

fn t_over(k: u32, e0: i32, c: Rational) -> MomentPoly {
    MomentPoly::term(mono(e0, &[(k - 1, 1)]), c)
}

fn inv_t0(e: i32) -> MomentPoly {
    MomentPoly::term(MomentMonomial::r0_power(-e), Rational::from_integer(1.into()))
}

/// `R_m(t)` for `0 <= m <= mmax` from its Bell-polynomial expression.
pub fn r_table_t(mmax: usize) -> Vec<MomentPoly> {
    let xs: Vec<MomentPoly> = (1..=mmax.max(1))
        .map(|j| {
            let c = factorial(j as u64) / double_factorial(2 * j as i64 + 1);
            t_over(j as u32 + 1, -1, c)
        })
        .collect();
    let b = bell_table(mmax, &xs);
    let inner: Vec<MomentPoly> = (0..=mmax)
        .map(|n| {
            let mut acc = MomentPoly::zero();
            for (l, bnl) in b[n].iter().enumerate().take(n + 1) {
                acc += &bnl.scale(&(factorial(l as u64) / factorial(n as u64)));
            }
            acc
        })
        .collect();
    (0..=mmax)
        .map(|m| {
            if m == 0 {
                return MomentPoly::constant(rat(1, 3));
            }
            let mut acc = MomentPoly::zero();
            for k in 1..=m {
                let c = rat(2, 3) * double_factorial(2 * m as i64 - 1) * int(k as i64)
                    / double_factorial(2 * k as i64 + 3);
                acc += &(&t_over(k as u32 + 1, -1, c) * &inner[m - k]);
            }
            acc
        })
        .collect()
}

/// The operator `Delta_t` applied to a t-convention polynomial.
pub fn apply(p: &MomentPoly, r: &[MomentPoly]) -> MomentPoly {
    // Largest t-index present: slot j is t_{j+1}.
    let tmax = p.max_index() + 1;
    let c00 = poly(&[
        (-3, &[(1, 3)], 2, 45),
        (-2, &[(1, 1), (2, 1)], 37, 1050),
        (-1, &[(3, 1)], 1, 210),
    ]);
    let c0 = poly(&[
        (-4, &[(1, 3)], 2, 27),
        (-3, &[(1, 1), (2, 1)], 1097, 12600),
        (-2, &[(3, 1)], 41, 2520),
    ]);
    let d0 = p.derivative(0);
    // -C00 d^2/dt0^2 - C0 d/dt0 with d/dt0 = -d/dT0.
    let mut out = &(&c0 * &d0) - &(&c00 * &d0.derivative(0));
    let t2 = t(2);
    for k in 2..=tmax {
        let dk = p.derivative(k - 1);
        if dk.is_zero() {
            continue;
        }
        let kk = k as i64;
        let ku = k as usize;
        let c0k = &(&(&poly(&[(-3, &[(1, 2)], 2, 45), (-2, &[(2, 1)], 2, 105)]) * &t(k + 1))
            + &(&(&t2 * &r[ku + 1]) * &inv_t0(1)).scale(&rat(1, 2)))
            + &r[ku + 2].scale(&rat(3, 2 * (3 + 2 * kk)));
        // -C0k d^2/(dt_k dt0) = +C0k d^2/(dt_k dT0).
        out += &(&c0k * &dk.derivative(0));
        for l in 2..=tmax {
            let dkl = dk.derivative(l - 1);
            if dkl.is_zero() {
                continue;
            }
            let ll = l as i64;
            let lu = l as usize;
            let ckl = &(&(&(&(&t2 * &t(k + 1)) * &t(l + 1)) * &inv_t0(3)).scale(&rat(1, 90))
                + &(&(&t(k + 1) * &r[lu + 1]) * &inv_t0(1)).scale(&rat(1, 4)))
                + &(&(&(&t(l + 1) * &r[ku + 1]) * &inv_t0(1)).scale(&rat(1, 4))
                    + &r[ku + lu + 1].scale(
                        &(double_factorial(1 + 2 * kk) * double_factorial(1 + 2 * ll)
                            / (int(4) * double_factorial(1 + 2 * kk + 2 * ll))),
                    ));
            out -= &(&ckl * &dkl);
        }
        let ck = &(&(&poly(&[(-4, &[(1, 2)], 19, 540), (-3, &[(2, 1)], 5, 252)]) * &t(k + 1))
            + &(&(&t2 * &r[ku + 1]) * &inv_t0(2)).scale(&rat(1, 48)))
            + &(&(&(&r[ku + 2] * &inv_t0(1)).scale(&rat(1, 16 * (3 + 2 * kk)))
                + &(&(&t2 * &t(k + 2)) * &inv_t0(3)).scale(&rat(1, 90)))
                + &(&r[ku + 2] * &inv_t0(1)).scale(&rat(1, 2)));
        out -= &(&ck * &dk);
    }
    out
}

/// Size of the `R(t)` table needed for inputs whose largest slot is `kmax`.
pub fn table_size(kmax: u32) -> usize {
    2 * (kmax as usize + 1) + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::r_table;
    use crate::laplacian::convention::{translate, Convention};

    #[test]
    fn r_of_t_is_rescaled_r_of_rho() {
        let rt = r_table_t(10);
        let rr = r_table(10);
        for m in 0..=10 {
            let via = translate(&rr[m], Convention::Rho, Convention::T).unwrap();
            assert_eq!(rt[m], via.scale(&double_factorial(2 * m as i64 - 1)), "m={m}");
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let r = r_table_t(8);
        assert!(apply(&MomentPoly::one(), &r).is_zero());
    }
}
