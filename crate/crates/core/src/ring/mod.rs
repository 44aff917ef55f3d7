//! Exact scalars, moment polynomials and Laurent polynomials in boundary variables.

pub mod laurent;
pub mod monomial;
pub mod poly;
pub mod rational;
pub mod zrational;

pub use laurent::ZLaurent;
pub use monomial::MomentMonomial;
pub use poly::{Accumulator, MomentPoly, VarNames};
pub use rational::Rational;
pub use zrational::ZRational;
