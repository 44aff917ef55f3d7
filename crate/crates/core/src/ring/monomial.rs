//! Monomials `r0^e0 * r1^e1 * ...` in the moments.

use std::cmp::Ordering;

use smallvec::SmallVec;

/// Sparse exponent list `(k, e_k)` for `k >= 1`, sorted by `k`, with no zero entries.
pub type Higher = SmallVec<[(u32, u32); 6]>;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct MomentMonomial {
    e0: i32,
    higher: Higher,
}

impl MomentMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    /// Builds a monomial from unsorted `(k, e_k)` pairs; repeated indices add up.
    pub fn new(e0: i32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut higher: Higher = SmallVec::new();
        let mut e0 = e0;
        for (k, e) in pairs {
            if k == 0 {
                e0 += e as i32;
                continue;
            }
            if e == 0 {
                continue;
            }
            match higher.binary_search_by_key(&k, |p| p.0) {
                Ok(i) => higher[i].1 += e,
                Err(i) => higher.insert(i, (k, e)),
            }
        }
        Self { e0, higher }
    }

    /// The single variable `r_k`.
    pub fn var(k: u32) -> Self {
        if k == 0 {
            Self::new(1, [])
        } else {
            Self::new(0, [(k, 1)])
        }
    }

    pub fn r0_power(e0: i32) -> Self {
        Self::new(e0, [])
    }

    pub fn e0(&self) -> i32 {
        self.e0
    }

    pub fn higher(&self) -> &[(u32, u32)] {
        &self.higher
    }

    pub fn exponent(&self, k: u32) -> u32 {
        match self.higher.binary_search_by_key(&k, |p| p.0) {
            Ok(i) => self.higher[i].1,
            Err(_) => 0,
        }
    }

    pub fn weight(&self) -> u32 {
        self.higher.iter().map(|&(k, e)| k * e).sum()
    }

    /// Total degree in `r1, r2, ...`.
    pub fn degree(&self) -> u32 {
        self.higher.iter().map(|&(_, e)| e).sum()
    }

    pub fn max_index(&self) -> u32 {
        self.higher.last().map_or(0, |p| p.0)
    }

    pub fn is_one(&self) -> bool {
        self.e0 == 0 && self.higher.is_empty()
    }

    /// True when only `r0` occurs.
    pub fn is_r0_power(&self) -> bool {
        self.higher.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: Higher = SmallVec::with_capacity(self.higher.len() + other.higher.len());
        let (a, b) = (&self.higher, &other.higher);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        Self {
            e0: self.e0 + other.e0,
            higher: out,
        }
    }

    /// Exact quotient, `None` when some `r_k` (k >= 1) exponent would turn negative.
    pub fn div(&self, other: &Self) -> Option<Self> {
        let mut out = self.higher.clone();
        for &(k, e) in &other.higher {
            let i = out.binary_search_by_key(&k, |p| p.0).ok()?;
            if out[i].1 < e {
                return None;
            }
            out[i].1 -= e;
            if out[i].1 == 0 {
                out.remove(i);
            }
        }
        Some(Self {
            e0: self.e0 - other.e0,
            higher: out,
        })
    }

    pub fn with_e0(&self, e0: i32) -> Self {
        Self {
            e0,
            higher: self.higher.clone(),
        }
    }

    /// `d/dr_k` as `(multiplier, monomial)`, `None` when the derivative vanishes.
    pub fn derivative(&self, k: u32) -> Option<(i64, Self)> {
        if k == 0 {
            if self.e0 == 0 {
                return None;
            }
            return Some((self.e0 as i64, self.with_e0(self.e0 - 1)));
        }
        let i = self.higher.binary_search_by_key(&k, |p| p.0).ok()?;
        let e = self.higher[i].1;
        let mut higher = self.higher.clone();
        if e == 1 {
            higher.remove(i);
        } else {
            higher[i].1 -= 1;
        }
        Some((
            e as i64,
            Self {
                e0: self.e0,
                higher,
            },
        ))
    }

    /// Indices with a nonzero exponent, `r0` included when `e0 != 0`.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        (self.e0 != 0)
            .then_some(0)
            .into_iter()
            .chain(self.higher.iter().map(|p| p.0))
    }
}

impl Ord for MomentMonomial {
    /// Graded lexicographic on `(weight, e0, e1, e2, ...)`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then(self.e0.cmp(&other.e0))
            .then_with(|| {
                let (a, b) = (&self.higher, &other.higher);
                let (mut i, mut j) = (0, 0);
                loop {
                    match (a.get(i), b.get(j)) {
                        (None, None) => return Ordering::Equal,
                        (Some(_), None) => return Ordering::Greater,
                        (None, Some(_)) => return Ordering::Less,
                        (Some(&(ka, ea)), Some(&(kb, eb))) => {
                            if ka < kb {
                                return Ordering::Greater;
                            }
                            if kb < ka {
                                return Ordering::Less;
                            }
                            if ea != eb {
                                return ea.cmp(&eb);
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
            })
    }
}

impl PartialOrd for MomentMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
