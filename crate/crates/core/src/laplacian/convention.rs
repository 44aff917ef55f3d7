//! Variable conventions for free energies.
//!
//! Every convention is a diagonal rescaling of the moments: slot `0` is the unit variable
//! and slot `j >= 1` is tied to `r_j` by `r_j = s_j * x_j`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::error::{Error, Result};
use crate::ring::rational::{double_factorial, int};
use crate::ring::{MomentMonomial, MomentPoly, Rational, VarNames};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Convention {
    /// Moments `r0, r1, ...` themselves.
    Rho,
    /// `T0 = 1 - t0 = r0`, `r_l = -t_{l+1}/(2l+1)!!`.
    T,
    /// `(1 - I1) = r0`, `I_{k+1} = -(2k+1)!! r_k`.
    Iz,
    /// `(2 - t3) = r0`, `t_{2k+3} = -r_k`.
    Eynard,
}

impl Convention {
    pub const ALL: [Convention; 4] = [Self::Rho, Self::T, Self::Iz, Self::Eynard];

    /// `s_j` in `r_j = s_j * x_j`.
    pub fn scale(self, j: u32) -> Rational {
        match self {
            Self::Rho => Rational::one(),
            Self::T | Self::Iz => -double_factorial(2 * j as i64 + 1).recip(),
            Self::Eynard => int(-1),
        }
    }

    pub fn names(self) -> VarNames {
        match self {
            Self::Rho => VarNames::rho(),
            Self::T => VarNames {
                unit: "T0".into(),
                slot: |k| format!("t{}", k + 1),
                fraction: true,
            },
            Self::Iz => VarNames {
                unit: "(1-I1)".into(),
                slot: |k| format!("I{}", k + 1),
                fraction: true,
            },
            Self::Eynard => VarNames {
                unit: "(2-t3)".into(),
                slot: |k| format!("t{}", 2 * k + 3),
                fraction: true,
            },
        }
    }

    /// Substitution `r_j -> s_j x_j`, taking a moment polynomial into this convention.
    fn rho_to_self(self, kmax: u32) -> BTreeMap<u32, MomentPoly> {
        let mut map = BTreeMap::new();
        map.insert(0, MomentPoly::var(0));
        for j in 1..=kmax {
            map.insert(j, MomentPoly::var(j).scale(&self.scale(j)));
        }
        map
    }

    /// Substitution `x_j -> r_j / s_j`, the inverse of [`Convention::rho_to_self`].
    fn self_to_rho(self, kmax: u32) -> BTreeMap<u32, MomentPoly> {
        let mut map = BTreeMap::new();
        map.insert(0, MomentPoly::var(0));
        for j in 1..=kmax {
            map.insert(j, MomentPoly::var(j).scale(&self.scale(j).recip()));
        }
        map
    }

    /// Parses canonical text in this convention; `t1` has no slot in the t-convention.
    pub fn parse_poly(self, text: &str) -> Result<MomentPoly> {
        if self == Self::T
            && text
                .split(|c: char| !c.is_ascii_alphanumeric())
                .any(|tok| tok == "t1")
        {
            return Err(Error::ForbiddenVariable);
        }
        MomentPoly::parse(text, &self.names())
    }

    pub fn render(self, p: &MomentPoly) -> String {
        p.render(&self.names())
    }

    /// `prod_k k_i!` for the exponents of a monomial, the normalisation turning a
    /// t-convention coefficient into an intersection number.
    pub fn multiplicity(m: &MomentMonomial) -> Rational {
        m.higher()
            .iter()
            .fold(Rational::one(), |acc, &(_, e)| {
                acc * crate::ring::rational::factorial(e as u64)
            })
    }
}

/// Re-expresses `p` from one convention in another.
pub fn translate(p: &MomentPoly, from: Convention, to: Convention) -> Result<MomentPoly> {
    if from == to {
        return Ok(p.clone());
    }
    let kmax = p.max_index();
    let rho = if from == Convention::Rho {
        p.clone()
    } else {
        p.substitute(&from.self_to_rho(kmax))?
    };
    if to == Convention::Rho {
        Ok(rho)
    } else {
        rho.substitute(&to.rho_to_self(kmax))
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rho => "rho",
            Self::T => "t",
            Self::Iz => "iz",
            Self::Eynard => "eynard",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Self::Rho),
            "t" => Ok(Self::T),
            "iz" => Ok(Self::Iz),
            "eynard" => Ok(Self::Eynard),
            other => Err(Error::Parse(format!("unknown convention `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::rational::rat;

    #[test]
    fn first_moment_in_t_variables() {
        let p = translate(&MomentPoly::var(1), Convention::Rho, Convention::T).unwrap();
        assert_eq!(Convention::T.render(&p), "-1/3*t2");
    }

    #[test]
    fn renders_each_convention() {
        let p = MomentPoly::term(MomentMonomial::new(-3, [(3, 1)]), rat(1, 1152));
        assert_eq!(Convention::T.render(&p), "1/1152*t4/T0^3");
        assert_eq!(Convention::Iz.render(&p), "1/1152*I4/(1-I1)^3");
        assert_eq!(Convention::Eynard.render(&p), "1/1152*t9/(2-t3)^3");
        for c in Convention::ALL {
            assert_eq!(c.parse_poly(&c.render(&p)).unwrap(), p);
        }
    }

    #[test]
    fn t1_is_rejected() {
        assert_eq!(
            Convention::T.parse_poly("t1^2/T0"),
            Err(Error::ForbiddenVariable)
        );
    }

    #[test]
    fn round_trips_between_all_conventions() {
        let p = MomentPoly::from_terms([
            (MomentMonomial::new(-5, [(1, 3)]), rat(-21, 160)),
            (MomentMonomial::new(-4, [(1, 1), (2, 1)]), rat(29, 128)),
            (MomentMonomial::new(-3, [(3, 1)]), rat(-35, 384)),
        ]);
        for a in Convention::ALL {
            for b in Convention::ALL {
                let q = translate(&p, Convention::Rho, a).unwrap();
                let r = translate(&q, a, b).unwrap();
                assert_eq!(translate(&r, b, Convention::Rho).unwrap(), p);
            }
        }
    }
}
