//! The stable partition function `exp(sum_g V^{2-2g} F_g)` generated by a Laplacian, the
//! free energies extracted from it, and intersection numbers read off in t-variables.

pub mod convention;
pub mod rho;
pub mod t;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::bell::bell_table;
use crate::error::{Error, Result};
use crate::ring::rational::{factorial, int, rat};
use crate::ring::{MomentMonomial, MomentPoly, Rational};

pub use convention::{translate, Convention};

/// Genus-two free energy in moment variables.
pub fn f2_rho() -> MomentPoly {
    rho::poly(&[
        (-5, &[(1, 3)], -21, 160),
        (-4, &[(1, 1), (2, 1)], 29, 128),
        (-3, &[(3, 1)], -35, 384),
    ])
}

/// Genus-two free energy as written in t-variables.
pub fn f2_t() -> MomentPoly {
    rho::poly(&[
        (-5, &[(1, 3)], 7, 240 * 6),
        (-4, &[(1, 1), (2, 1)], 29, 5760),
        (-3, &[(3, 1)], 1, 1152),
    ])
}

/// `Delta_rho p`. Sums over moment indices stop on their own, so `_kmax` only mirrors
/// [`apply_laplacian_t`].
pub fn apply_laplacian_rho(p: &MomentPoly, _kmax: u32) -> MomentPoly {
    rho::apply(p)
}

/// `Delta_t p` on a t-convention polynomial.
pub fn apply_laplacian_t(p: &MomentPoly, kmax: u32) -> MomentPoly {
    let r = t::r_table_t(t::table_size(kmax.max(p.max_index())));
    t::apply(p, &r)
}

/// `Z_g` and `F_g` for `2 <= g <= gmax` in one convention.
#[derive(Clone, Debug, PartialEq)]
pub struct StablePartition {
    pub gmax: u32,
    pub z: BTreeMap<u32, MomentPoly>,
    pub f: BTreeMap<u32, MomentPoly>,
    pub convention: Convention,
}

impl StablePartition {
    pub fn f(&self, g: u32) -> Result<&MomentPoly> {
        self.f.get(&g).ok_or(Error::GenusOutOfRange {
            g,
            min: 2,
            max: self.gmax,
        })
    }

    pub fn z(&self, g: u32) -> Result<&MomentPoly> {
        self.z.get(&g).ok_or(Error::GenusOutOfRange {
            g,
            min: 2,
            max: self.gmax,
        })
    }

    pub fn to_convention(&self, to: Convention) -> Result<StablePartition> {
        let conv = |m: &BTreeMap<u32, MomentPoly>| -> Result<BTreeMap<u32, MomentPoly>> {
            m.iter()
                .map(|(g, p)| Ok((*g, translate(p, self.convention, to)?)))
                .collect()
        };
        Ok(StablePartition {
            gmax: self.gmax,
            z: conv(&self.z)?,
            f: conv(&self.f)?,
            convention: to,
        })
    }
}

/// `F_g = Z_g - 1/(g-1)! sum_{k>=2} B_{g-1,k}({h! F_{h+1}})`.
pub fn extract_from_free_energies(
    g: u32,
    z_g: &MomentPoly,
    f: &BTreeMap<u32, MomentPoly>,
) -> MomentPoly {
    let n = (g - 1) as usize;
    let xs: Vec<MomentPoly> = (1..n)
        .map(|h| f[&(h as u32 + 1)].scale(&factorial(h as u64)))
        .collect();
    let b = bell_table(n, &xs);
    let mut sum = MomentPoly::zero();
    for entry in b[n].iter().skip(2) {
        sum += entry;
    }
    z_g - &sum.scale(&factorial(n as u64).recip())
}

/// `F_g = Z_g + 1/(g-1)! sum_{k>=2} (-1)^{k-1} (k-1)! B_{g-1,k}({h! Z_{h+1}})`.
pub fn extract_from_partition(g: u32, z: &BTreeMap<u32, MomentPoly>) -> MomentPoly {
    let n = (g - 1) as usize;
    let xs: Vec<MomentPoly> = (1..n)
        .map(|h| z[&(h as u32 + 1)].scale(&factorial(h as u64)))
        .collect();
    let b = bell_table(n, &xs);
    let mut sum = MomentPoly::zero();
    for (k, entry) in b[n].iter().enumerate().skip(2) {
        let sign = if k % 2 == 0 { int(-1) } else { int(1) };
        sum += &entry.scale(&(sign * factorial(k as u64 - 1)));
    }
    &z[&g] + &sum.scale(&factorial(n as u64).recip())
}

/// Iterates `Y_{n+1} = -Delta Y_n + F2 Y_n` from `Y_0 = 1`, so that `Z_g = Y_{g-1}/(g-1)!`.
fn iterate(
    gmax: u32,
    f2: &MomentPoly,
    start: Option<(u32, MomentPoly, &StablePartition)>,
    delta: impl Fn(&MomentPoly) -> MomentPoly,
    convention: Convention,
) -> Result<(StablePartition, MomentPoly)> {
    let (mut g, mut y, mut z, mut f) = match start {
        Some((g, y, sp)) => (g, y, sp.z.clone(), sp.f.clone()),
        None => (1, MomentPoly::one(), BTreeMap::new(), BTreeMap::new()),
    };
    while g < gmax {
        y = &(f2 * &y) - &delta(&y);
        g += 1;
        let zg = y.scale(&factorial(g as u64 - 1).recip());
        z.insert(g, zg.clone());
        let a = extract_from_free_energies(g, &zg, &f);
        let b = extract_from_partition(g, &z);
        if a != b {
            return Err(Error::ExtractionMismatch(g));
        }
        f.insert(g, a);
    }
    Ok((
        StablePartition {
            gmax,
            z,
            f,
            convention,
        },
        y,
    ))
}

struct RhoChain {
    sp: StablePartition,
    y: MomentPoly,
}

fn rho_cache() -> &'static Mutex<Option<Arc<RhoChain>>> {
    static CACHE: OnceLock<Mutex<Option<Arc<RhoChain>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(None))
}

fn stable_partition_rho(gmax: u32) -> Result<StablePartition> {
    let cached = rho_cache().lock().expect("cache poisoned").clone();
    if let Some(c) = &cached {
        if c.sp.gmax >= gmax {
            let mut sp = c.sp.clone();
            sp.z.retain(|g, _| *g <= gmax);
            sp.f.retain(|g, _| *g <= gmax);
            sp.gmax = gmax;
            return Ok(sp);
        }
    }
    let f2 = f2_rho();
    let start = cached
        .as_ref()
        .map(|c| (c.sp.gmax, c.y.clone(), &c.sp));
    let (sp, y) = iterate(gmax, &f2, start, rho::apply, Convention::Rho)?;
    let mut guard = rho_cache().lock().expect("cache poisoned");
    if guard.as_ref().is_none_or(|c| c.sp.gmax < gmax) {
        *guard = Some(Arc::new(RhoChain { sp: sp.clone(), y }));
    }
    Ok(sp)
}

/// `Z_g`, `F_g` for `2 <= g <= gmax`, computed with `Delta_rho` and translated.
pub fn stable_partition(gmax: u32, convention: Convention) -> Result<StablePartition> {
    if gmax < 2 {
        return Err(Error::GenusOutOfRange {
            g: gmax,
            min: 2,
            max: u32::MAX,
        });
    }
    stable_partition_rho(gmax)?.to_convention(convention)
}

/// The same family computed natively with `Delta_t`, without passing through moments.
pub fn stable_partition_t(gmax: u32) -> Result<StablePartition> {
    let r = t::r_table_t(t::table_size(3 * gmax));
    let (sp, _) = iterate(gmax, &f2_t(), None, |p| t::apply(p, &r), Convention::T)?;
    Ok(sp)
}

/// Multiset of indices `d_i >= 2` of an intersection number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauIndex {
    ds: Vec<u32>,
    genus: u32,
}

impl TauIndex {
    pub fn new(mut ds: Vec<u32>) -> Result<Self> {
        if ds.iter().any(|&d| d < 2) {
            return Err(Error::DimensionMismatch);
        }
        ds.sort_unstable();
        let dim: u32 = ds.iter().map(|d| d - 1).sum();
        if dim == 0 || dim % 3 != 0 {
            return Err(Error::DimensionMismatch);
        }
        Ok(Self {
            genus: dim / 3 + 1,
            ds,
        })
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn indices(&self) -> &[u32] {
        &self.ds
    }

    /// `prod t_{d_i} / T0^{2g-2+n}` as a slot monomial.
    pub fn monomial(&self) -> MomentMonomial {
        let n = self.ds.len() as i32;
        MomentMonomial::new(
            -(2 * self.genus as i32 - 2 + n),
            self.ds.iter().map(|&d| (d - 1, 1)),
        )
    }
}

/// `<tau_{d_1} ... tau_{d_n}>` read from t-convention free energies.
pub fn tau_lookup(idx: &TauIndex, sp: &StablePartition) -> Result<Rational> {
    let g = idx.genus();
    if g > sp.gmax {
        return Err(Error::GenusOutOfRange {
            g,
            min: 2,
            max: sp.gmax,
        });
    }
    let f = if sp.convention == Convention::T {
        sp.f(g)?.clone()
    } else {
        translate(sp.f(g)?, sp.convention, Convention::T)?
    };
    let m = idx.monomial();
    Ok(f.coefficient(&m) * Convention::multiplicity(&m))
}

/// `1/(24^g g!)`.
pub fn top_intersection(g: u32) -> Rational {
    (rat(1, 24).pow(g as i32)) / factorial(g as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_two_energy_in_t_variables() {
        let t = translate(&f2_rho(), Convention::Rho, Convention::T).unwrap();
        assert_eq!(t, f2_t());
    }

    #[test]
    fn genus_two_is_its_own_partition() {
        let sp = stable_partition(2, Convention::Rho).unwrap();
        assert_eq!(sp.z[&2], f2_rho());
        assert_eq!(sp.f[&2], f2_rho());
    }

    #[test]
    fn genus_three_extraction() {
        let sp = stable_partition(3, Convention::Rho).unwrap();
        let f2 = f2_rho();
        assert_eq!(sp.f[&3], &sp.z[&3] - &(&f2 * &f2).scale(&rat(1, 2)));
    }

    #[test]
    fn lowest_tau_values() {
        let sp = stable_partition(4, Convention::T).unwrap();
        let v = |ds: Vec<u32>| tau_lookup(&TauIndex::new(ds).unwrap(), &sp).unwrap();
        assert_eq!(v(vec![4]), rat(1, 1152));
        assert_eq!(v(vec![2, 2, 4, 5]), rat(7597, 691200));
        assert_eq!(v(vec![10]), top_intersection(4));
    }

    #[test]
    fn index_validation() {
        assert_eq!(TauIndex::new(vec![3]), Err(Error::DimensionMismatch));
        assert_eq!(TauIndex::new(vec![1, 4]), Err(Error::DimensionMismatch));
        assert_eq!(TauIndex::new(vec![]), Err(Error::DimensionMismatch));
        let sp = stable_partition(2, Convention::T).unwrap();
        assert!(matches!(
            tau_lookup(&TauIndex::new(vec![7]).unwrap(), &sp),
            Err(Error::GenusOutOfRange { g: 3, .. })
        ));
    }

    #[test]
    fn native_t_iteration_agrees() {
        let a = stable_partition(5, Convention::T).unwrap();
        let b = stable_partition_t(5).unwrap();
        assert_eq!(a.f, b.f);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn rho_and_t_operators_are_covariant() {
        let samples = [
            f2_rho(),
            rho::poly(&[(2, &[(1, 1), (4, 1)], 3, 7), (-1, &[(2, 3)], -5, 2), (0, &[(5, 1)], 1, 1)]),
            rho::poly(&[(-7, &[(1, 2), (3, 1), (2, 1)], 11, 13), (4, &[], 2, 9), (1, &[(6, 1)], 1, 5)]),
        ];
        for p in samples {
            let lhs = apply_laplacian_t(&translate(&p, Convention::Rho, Convention::T).unwrap(), 6);
            let rhs = translate(&apply_laplacian_rho(&p, 6), Convention::Rho, Convention::T).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
