//! Partial Bell polynomials and the coefficient families `S_m`, `R_m` derived from them.

use std::sync::{Arc, Mutex, OnceLock};

use num_traits::One;

use crate::error::{Error, Result};
use crate::ring::rational::{binomial, factorial, int, rat};
use crate::ring::{MomentMonomial, MomentPoly, Rational};

/// Triangle `B[n][k]` of partial Bell polynomials for `0 <= k <= n <= nmax`.
///
/// `xs[0]` is `x_1`. Entries that would need arguments beyond `xs` are left at zero, which
/// is exact whenever the caller only asks for `B_{n,k}` with `n - k + 1 <= xs.len()`.
pub fn bell_table(nmax: usize, xs: &[MomentPoly]) -> Vec<Vec<MomentPoly>> {
    let mut b = vec![vec![MomentPoly::zero(); nmax + 1]; nmax + 1];
    b[0][0] = MomentPoly::one();
    for n in 1..=nmax {
        for k in 1..=n {
            let mut acc = MomentPoly::zero();
            for i in 1..=(n - k + 1).min(xs.len()) {
                let prev = &b[n - i][k - 1];
                if prev.is_zero() || xs[i - 1].is_zero() {
                    continue;
                }
                let c = binomial((n - 1) as u64, (i - 1) as u64);
                acc += &(&xs[i - 1] * prev).scale(&c);
            }
            b[n][k] = acc;
        }
    }
    b
}

/// `B_{n,k}(x_1, ..., x_{n-k+1})`.
pub fn bell_polynomial(n: usize, k: usize, xs: &[MomentPoly]) -> Result<MomentPoly> {
    if k == 0 || n == 0 {
        return Ok(if n == k {
            MomentPoly::one()
        } else {
            MomentPoly::zero()
        });
    }
    if k > n {
        return Ok(MomentPoly::zero());
    }
    let needed = n - k + 1;
    if xs.len() < needed {
        return Err(Error::InsufficientArguments {
            n,
            k,
            needed,
            got: xs.len(),
        });
    }
    Ok(bell_table(n, &xs[..needed]).swap_remove(n).swap_remove(k))
}

fn rho_over(k: u32, e0: i32) -> MomentPoly {
    MomentPoly::term(MomentMonomial::new(e0, [(k, 1)]), Rational::one())
}

/// Taylor coefficients times factorials of the reciprocal of `sum_l (r_l/r0) t^l`.
pub fn s_table(mmax: usize) -> Vec<MomentPoly> {
    let xs: Vec<MomentPoly> = (1..=mmax)
        .map(|j| MomentPoly::var(j as u32).scale(&factorial(j as u64)))
        .collect();
    let b = bell_table(mmax, &xs);
    (0..=mmax)
        .map(|m| {
            let mut s = MomentPoly::zero();
            for (i, bmi) in b[m].iter().enumerate().take(m + 1) {
                if bmi.is_zero() {
                    continue;
                }
                let sign = if i % 2 == 0 { int(1) } else { int(-1) };
                let c = sign * factorial(i as u64);
                s += &bmi
                    .mul_monomial(&MomentMonomial::r0_power(-(i as i32)), &c)
                    .expect("no log");
            }
            s
        })
        .collect()
}

/// `R_0 = 1/3` and `R_m = -(2/3) sum_k k r_k/((3+2k) r0) S_{m-k}/(m-k)!`.
pub fn r_table_from(s: &[MomentPoly]) -> Vec<MomentPoly> {
    let mmax = s.len() - 1;
    let mut r = vec![MomentPoly::constant(rat(1, 3))];
    for m in 1..=mmax {
        let mut acc = MomentPoly::zero();
        for k in 1..=m {
            let c = rat(-2 * k as i64, 3 * (3 + 2 * k as i64)) / factorial((m - k) as u64);
            acc += &(&rho_over(k as u32, -1) * &s[m - k]).scale(&c);
        }
        r.push(acc);
    }
    r
}

pub fn r_table(mmax: usize) -> Vec<MomentPoly> {
    r_table_from(&s_table(mmax))
}

/// Memoised `S` and `R` tables up to `mmax`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub s: Vec<MomentPoly>,
    pub r: Vec<MomentPoly>,
    pub mmax: usize,
}

impl CoefficientTable {
    pub fn new(mmax: usize) -> Self {
        let s = s_table(mmax);
        let r = r_table_from(&s);
        Self { s, r, mmax }
    }

    /// Process-wide table covering at least `mmax`, grown on demand.
    pub fn shared(mmax: usize) -> Arc<CoefficientTable> {
        static CACHE: OnceLock<Mutex<Option<Arc<CoefficientTable>>>> = OnceLock::new();
        let cell = CACHE.get_or_init(|| Mutex::new(None));
        let mut guard = cell.lock().expect("table cache poisoned");
        if let Some(t) = guard.as_ref() {
            if t.mmax >= mmax {
                return Arc::clone(t);
            }
        }
        let t = Arc::new(CoefficientTable::new(mmax.max(8)));
        *guard = Some(Arc::clone(&t));
        t
    }

    /// `R_m`, zero beyond the table only if the caller has guaranteed it is never needed.
    pub fn r(&self, m: usize) -> &MomentPoly {
        &self.r[m]
    }

    pub fn s(&self, m: usize) -> &MomentPoly {
        &self.s[m]
    }
}

/// `sum_{j=1}^{n-k} C(n,j) x_j B_{n-j,k}` minus `(k+1) B_{n,k+1}`; zero by the Bell identity.
pub fn bell_identity_defect(n: usize, k: usize, xs: &[MomentPoly]) -> MomentPoly {
    let b = bell_table(n, xs);
    let mut lhs = MomentPoly::zero();
    for j in 1..=n.saturating_sub(k) {
        lhs += &(&xs[j - 1] * &b[n - j][k]).scale(&binomial(n as u64, j as u64));
    }
    let rhs = if k < n {
        b[n][k + 1].scale(&int(k as i64 + 1))
    } else {
        MomentPoly::zero()
    };
    &lhs - &rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize) -> Vec<MomentPoly> {
        (1..=n).map(|j| MomentPoly::var(j as u32)).collect()
    }

    /// Direct sum over `j_1 + j_2 + ... = k`, `j_1 + 2 j_2 + ... = n`.
    fn bell_by_enumeration(n: usize, k: usize) -> MomentPoly {
        fn rec(i: usize, n_left: usize, k_left: usize, js: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if n_left == 0 && k_left == 0 {
                out.push(js.clone());
                return;
            }
            if i > n_left || k_left == 0 {
                return;
            }
            for j in 0..=(n_left / i).min(k_left) {
                js.push(j);
                rec(i + 1, n_left - i * j, k_left - j, js, out);
                js.pop();
            }
        }
        if n == 0 && k == 0 {
            return MomentPoly::one();
        }
        let mut sols = vec![];
        rec(1, n, k, &mut vec![], &mut sols);
        let mut acc = MomentPoly::zero();
        for js in sols {
            let mut c = factorial(n as u64);
            let mut pairs = vec![];
            for (idx, &j) in js.iter().enumerate() {
                let i = idx + 1;
                c /= factorial(j as u64);
                for _ in 0..j {
                    c /= factorial(i as u64);
                }
                pairs.push((i as u32, j as u32));
            }
            acc += &MomentPoly::term(MomentMonomial::new(0, pairs), c);
        }
        acc
    }

    #[test]
    fn small_bell_values() {
        assert_eq!(bell_polynomial(0, 0, &[]).unwrap(), MomentPoly::one());
        let b32 = bell_polynomial(3, 2, &xs(2)).unwrap();
        assert_eq!(b32, bell_by_enumeration(3, 2));
        assert_eq!(
            b32,
            MomentPoly::term(MomentMonomial::new(0, [(1, 1), (2, 1)]), int(3))
        );
        let b42 = bell_polynomial(4, 2, &xs(3)).unwrap();
        let expect = MomentPoly::from_terms([
            (MomentMonomial::new(0, [(2, 2)]), int(3)),
            (MomentMonomial::new(0, [(1, 1), (3, 1)]), int(4)),
        ]);
        assert_eq!(b42, expect);
        assert_eq!(b42, bell_by_enumeration(4, 2));
        assert!(bell_polynomial(3, 0, &[]).unwrap().is_zero());
        assert!(bell_polynomial(0, 2, &[]).unwrap().is_zero());
    }

    #[test]
    fn recurrence_agrees_with_enumeration() {
        let t = bell_table(9, &xs(9));
        for (n, row) in t.iter().enumerate() {
            for (k, entry) in row.iter().enumerate().take(n + 1) {
                assert_eq!(*entry, bell_by_enumeration(n, k), "B({n},{k})");
            }
        }
    }

    #[test]
    fn insufficient_arguments() {
        assert!(matches!(
            bell_polynomial(5, 2, &xs(2)),
            Err(Error::InsufficientArguments { needed: 4, .. })
        ));
    }

    #[test]
    fn shift_identity_through_ten() {
        for n in 0..=10 {
            for k in 0..=n {
                assert!(bell_identity_defect(n, k, &xs(10)).is_zero(), "n={n} k={k}");
            }
        }
    }

    /// `1 / sum_l (r_l/r0) t^l` by the recursive series reciprocal.
    fn reciprocal_series(mmax: usize) -> Vec<MomentPoly> {
        let mut c = vec![MomentPoly::one()];
        for m in 1..=mmax {
            let mut acc = MomentPoly::zero();
            for l in 1..=m {
                acc -= &(&rho_over(l as u32, -1) * &c[m - l]);
            }
            c.push(acc);
        }
        c
    }

    #[test]
    fn s_table_is_scaled_series_reciprocal() {
        let s = s_table(9);
        let c = reciprocal_series(9);
        for m in 0..=9 {
            assert_eq!(s[m], c[m].scale(&factorial(m as u64)), "S_{m}");
        }
        assert_eq!(s[1], rho_over(1, -1).scale(&int(-1)));
        let s2 = MomentPoly::from_terms([
            (MomentMonomial::new(-2, [(1, 2)]), int(2)),
            (MomentMonomial::new(-1, [(2, 1)]), int(-2)),
        ]);
        assert_eq!(s[2], s2);
    }

    /// z^{2m} coefficients of `[sum r_l z^{2l}/(3+2l)] / [sum r_j z^{2j}]`.
    fn r_by_series_division(mmax: usize) -> Vec<MomentPoly> {
        let c = reciprocal_series(mmax);
        (0..=mmax)
            .map(|m| {
                let mut acc = MomentPoly::zero();
                for l in 0..=m {
                    // r_l/(3+2l) divided by r0, times the reciprocal coefficient.
                    let num = if l == 0 {
                        MomentPoly::constant(rat(1, 3))
                    } else {
                        rho_over(l as u32, -1).scale(&rat(1, 3 + 2 * l as i64))
                    };
                    acc += &(&num * &c[m - l]);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn r_table_matches_series_division() {
        let r = r_table(8);
        assert_eq!(r, r_by_series_division(8));
    }

    #[test]
    fn explicit_low_r_values() {
        let r = r_table(3);
        assert_eq!(r[0], MomentPoly::constant(rat(1, 3)));
        assert_eq!(r[1], rho_over(1, -1).scale(&rat(-2, 15)));
        let r2 = MomentPoly::from_terms([
            (MomentMonomial::new(-2, [(1, 2)]), rat(2, 15)),
            (MomentMonomial::new(-1, [(2, 1)]), rat(-4, 21)),
        ]);
        assert_eq!(r[2], r2);
        let r3 = MomentPoly::from_terms([
            (MomentMonomial::new(-3, [(1, 3)]), rat(-2, 15)),
            (MomentMonomial::new(-2, [(1, 1), (2, 1)]), rat(34, 105)),
            (MomentMonomial::new(-1, [(3, 1)]), rat(-2, 9)),
        ]);
        assert_eq!(r[3], r3);
    }

    #[test]
    fn tables_are_weight_homogeneous() {
        let t = CoefficientTable::new(10);
        for m in 0..=10 {
            assert_eq!(t.s(m).weight(), Ok(m as u32));
            assert_eq!(t.r(m).weight(), Ok(m as u32));
        }
    }

    #[test]
    fn faa_di_bruno_on_truncated_series() {
        // f(u) = sum f_k u^k, g(x) = sum g_j x^j with g(0) = 0, both truncated at order 8.
        let order = 8;
        let f: Vec<Rational> = (0..=order).map(|k| rat(k as i64 * k as i64 - 3, k as i64 + 2)).collect();
        let g: Vec<Rational> = (0..=order)
            .map(|j| if j == 0 { int(0) } else { rat(2 * j as i64 - 5, j as i64 + 1) })
            .collect();
        let mul = |a: &[Rational], b: &[Rational]| {
            let mut out = vec![int(0); order + 1];
            for i in 0..=order {
                for j in 0..=order - i {
                    out[i + j] += &a[i] * &b[j];
                }
            }
            out
        };
        let mut comp = vec![int(0); order + 1];
        let mut gp = vec![int(0); order + 1];
        gp[0] = int(1);
        for fk in f.iter().take(order + 1) {
            for (i, c) in gp.iter().enumerate() {
                comp[i] += fk * c;
            }
            gp = mul(&gp, &g);
        }
        let derivs: Vec<MomentPoly> = (1..=order)
            .map(|j| MomentPoly::constant(&g[j] * factorial(j as u64)))
            .collect();
        let b = bell_table(order, &derivs);
        for n in 1..=order {
            let lhs = &comp[n] * factorial(n as u64);
            let mut rhs = int(0);
            for k in 1..=n {
                let fk = &f[k] * factorial(k as u64);
                rhs += fk * b[n][k].as_constant().unwrap();
            }
            assert_eq!(lhs, rhs, "order {n}");
        }
    }
}
